//! Multi-fidelity synthetic objectives, all posed as maximization.
//!
//! Fidelity `z ∈ [0, 1]`; `z = 1` is the exact objective. Evaluations are
//! pure; noise is injected by the simulator.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tree::HyperBox;

pub type Objective = fn(&[f64], f64) -> f64;
pub type CostFn = fn(f64) -> f64;

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub domain: HyperBox,
    objective: Objective,
    cost: CostFn,
    pub default_sigma2: f64,
    /// Maximum of the full-fidelity objective, used for regret.
    pub f_star: f64,
    /// Optimum as reported in the literature tables.
    pub reported_optimum: f64,
    pub maximizer_hint: Option<Vec<f64>>,
    /// Whether `z` changes the objective at all.
    pub multi_fidelity: bool,
    /// Default proxy bound on feedback magnitude for UCB-V.
    pub default_range: f64,
}

impl Benchmark {
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        name: impl Into<String>,
        domain: HyperBox,
        objective: Objective,
        cost: CostFn,
        default_sigma2: f64,
        f_star: f64,
        multi_fidelity: bool,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            objective,
            cost,
            default_sigma2,
            f_star,
            reported_optimum: f_star,
            maximizer_hint: None,
            multi_fidelity,
            default_range: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `f_z(x)`, rejecting points outside the domain.
    pub fn evaluate(&self, x: &[f64], z: f64) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain {
                benchmark: self.name.clone(),
                point: x.to_vec(),
            });
        }
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidParameter(format!("fidelity {z} outside [0, 1]")));
        }
        Ok((self.objective)(x, z))
    }

    /// Exact objective `f_1(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x, 1.0)
    }

    pub fn cost(&self, z: f64) -> f64 {
        (self.cost)(z)
    }

    pub fn full_cost(&self) -> f64 {
        (self.cost)(1.0)
    }
}

pub const NAMES: [&str; 6] = ["hartmann3", "hartmann6", "currin", "borehole", "branin", "schwefel"];

pub fn by_name(name: &str) -> Result<Benchmark> {
    match name.to_ascii_lowercase().as_str() {
        "hartmann3" => Ok(hartmann3_benchmark()),
        "hartmann6" => Ok(hartmann6_benchmark()),
        "currin" | "currinexp" | "currin_exp" => Ok(currin_benchmark()),
        "borehole" => Ok(borehole_benchmark()),
        "branin" => Ok(branin_benchmark()),
        "schwefel" => Ok(schwefel_benchmark()),
        _ => Err(Error::UnknownBenchmark(name.to_string())),
    }
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];

const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann<const D: usize>(x: &[f64], z: f64, a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> f64 {
    let shift = 0.1 * (1.0 - z);
    (0..4)
        .map(|i| {
            let r: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            (HARTMANN_ALPHA[i] - shift) * (-r).exp()
        })
        .sum()
}

pub fn hartmann3(x: &[f64], z: f64) -> f64 {
    hartmann(x, z, &HARTMANN3_A, &HARTMANN3_P)
}

/// Sums over all six coordinates.
pub fn hartmann6(x: &[f64], z: f64) -> f64 {
    hartmann(x, z, &HARTMANN6_A, &HARTMANN6_P)
}

fn hartmann_cost(z: f64) -> f64 {
    0.05 + (1.0 - 0.05) * z.powi(3)
}

pub fn currin_exp(x: &[f64], z: f64) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    // exp(-1/(2·x2)) → 0 as x2 → 0⁺
    let decay = if x2 > 0.0 { (-1.0 / (2.0 * x2)).exp() } else { 0.0 };
    let num = 2300.0 * x1.powi(3) + 1900.0 * x1.powi(2) + 2092.0 * x1 + 60.0;
    let den = 100.0 * x1.powi(3) + 500.0 * x1.powi(2) + 4.0 * x1 + 20.0;
    (1.0 - 0.1 * (1.0 - z) * decay) * num / den
}

fn currin_cost(z: f64) -> f64 {
    0.1 + z * z
}

/// Inputs `[r_w, r, T_u, H_u, T_l, H_l, L, K_w]`. Returns NaN when
/// `r <= r_w`; [`Benchmark::evaluate`] never gets there inside the domain.
pub fn borehole(x: &[f64], z: f64) -> f64 {
    let [rw, r, tu, hu, tl, hl, l, kw] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]];
    if r <= rw {
        return f64::NAN;
    }
    let log_ratio = (r / rw).ln();
    let leak = 2.0 * l * tu / (log_ratio * rw * rw * kw);
    let head = tu * (hu - hl);
    let high = 2.0 * PI * head / (log_ratio * (1.0 + leak + tu / tl));
    let low = 5.0 * head / (log_ratio * (1.5 + leak + tu / tl));
    z * high + (1.0 - z) * low
}

fn borehole_cost(z: f64) -> f64 {
    0.1 + z.powf(1.5)
}

pub const BOREHOLE_DOMAIN: [(f64, f64); 8] = [
    (0.05, 0.15),
    (100.0, 50_000.0),
    (63_070.0, 115_600.0),
    (990.0, 1110.0),
    (63.1, 116.0),
    (700.0, 820.0),
    (1120.0, 1680.0),
    (9855.0, 12_045.0),
];

/// Negated multi-fidelity Branin; the maximum is about −0.397887.
pub fn branin(x: &[f64], z: f64) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI) - 0.01 * (1.0 - z);
    let c = 5.0 / PI - 0.1 * (1.0 - z);
    let t = 1.0 / (8.0 * PI) + 0.05 * (1.0 - z);
    let (a, r, s) = (1.0, 6.0, 10.0);
    -(a * (x2 - b * x1 * x1 + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s)
}

fn branin_cost(z: f64) -> f64 {
    0.05 + z.powi(3)
}

/// Single-fidelity; `z` is ignored.
pub fn schwefel(x: &[f64], _z: f64) -> f64 {
    -418.9829 * x.len() as f64 + x.iter().map(|&v| v * v.abs().sqrt().sin()).sum::<f64>()
}

fn unit_cost(_z: f64) -> f64 {
    1.0
}

pub const SCHWEFEL_DIM: usize = 20;

fn hartmann3_benchmark() -> Benchmark {
    Benchmark {
        name: "hartmann3".into(),
        domain: HyperBox::unit(3),
        objective: hartmann3,
        cost: hartmann_cost,
        default_sigma2: 0.01,
        f_star: 3.862_779_787_332_66,
        reported_optimum: 3.86278,
        maximizer_hint: Some(vec![0.114589, 0.555649, 0.852547]),
        multi_fidelity: true,
        default_range: 5.0,
    }
}

fn hartmann6_benchmark() -> Benchmark {
    Benchmark {
        name: "hartmann6".into(),
        domain: HyperBox::unit(6),
        objective: hartmann6,
        cost: hartmann_cost,
        default_sigma2: 0.05,
        f_star: 3.322_368_011_415_51,
        reported_optimum: 3.32237,
        maximizer_hint: Some(vec![0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573]),
        multi_fidelity: true,
        default_range: 5.0,
    }
}

fn currin_benchmark() -> Benchmark {
    Benchmark {
        name: "currin".into(),
        domain: HyperBox::unit(2),
        objective: currin_exp,
        cost: currin_cost,
        default_sigma2: 0.05,
        f_star: 13.798_722_044_725_7,
        reported_optimum: 13.798685,
        maximizer_hint: Some(vec![0.216666, 1.0]),
        multi_fidelity: true,
        default_range: 15.0,
    }
}

fn borehole_benchmark() -> Benchmark {
    Benchmark {
        name: "borehole".into(),
        domain: HyperBox::new(BOREHOLE_DOMAIN.to_vec()).expect("static domain"),
        objective: borehole,
        cost: borehole_cost,
        default_sigma2: 0.01,
        // attained at the corner below; the literature reports 309.523221
        f_star: 309.575_587_660_407_9,
        reported_optimum: 309.523221,
        maximizer_hint: Some(vec![0.15, 100.0, 115_600.0, 1110.0, 116.0, 700.0, 1120.0, 12_045.0]),
        multi_fidelity: true,
        default_range: 320.0,
    }
}

fn branin_benchmark() -> Benchmark {
    Benchmark {
        name: "branin".into(),
        domain: HyperBox::new(vec![(-5.0, 10.0), (0.0, 15.0)]).expect("static domain"),
        objective: branin,
        cost: branin_cost,
        default_sigma2: 0.05,
        f_star: -0.397_887_357_729_738,
        reported_optimum: -0.3979,
        maximizer_hint: Some(vec![PI, 2.275]),
        multi_fidelity: true,
        default_range: 5.0,
    }
}

fn schwefel_benchmark() -> Benchmark {
    Benchmark {
        name: "schwefel".into(),
        domain: HyperBox::new(vec![(0.0, 500.0); SCHWEFEL_DIM]).expect("static domain"),
        objective: schwefel,
        cost: unit_cost,
        default_sigma2: 0.1,
        f_star: -0.000_254_556_75,
        reported_optimum: 0.0,
        maximizer_hint: Some(vec![420.9687; SCHWEFEL_DIM]),
        multi_fidelity: false,
        default_range: 10.0,
    }
}
