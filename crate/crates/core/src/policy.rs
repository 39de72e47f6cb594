//! Delay-aware optimistic confidence bounds.
//!
//! Every bound is computed from the number of *observed* feedbacks `s`,
//! never from the number of issued queries; that substitution is all it takes
//! to make the classic UCB1 / UCB1-σ / UCB-V indices tolerate delayed
//! feedback.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::NodeStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Ucb1,
    Ucb1Sigma,
    Ucbv,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::Ucb1Sigma => "ucb1-sigma",
            PolicyKind::Ucbv => "ucbv",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ucb1" | "ducb1" => Ok(PolicyKind::Ucb1),
            "ucb1-sigma" | "ucb1sigma" | "ducb1-sigma" | "ducb1sigma" => Ok(PolicyKind::Ucb1Sigma),
            "ucbv" | "ucb-v" | "ducbv" => Ok(PolicyKind::Ucbv),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub kind: PolicyKind,
    /// Known noise standard deviation (UCB1-σ only).
    pub sigma: Option<f64>,
    /// Proxy upper bound on feedback magnitude (UCB-V only).
    pub b: Option<f64>,
    /// UCB-V exploration scale.
    pub c: f64,
}

impl PolicyParams {
    pub fn ucb1() -> Self {
        Self {
            kind: PolicyKind::Ucb1,
            sigma: None,
            b: None,
            c: 1.0,
        }
    }

    pub fn ucb1_sigma(sigma: f64) -> Self {
        Self {
            kind: PolicyKind::Ucb1Sigma,
            sigma: Some(sigma),
            ..Self::ucb1()
        }
    }

    pub fn ucbv(b: f64) -> Self {
        Self {
            kind: PolicyKind::Ucbv,
            b: Some(b),
            ..Self::ucb1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::Ucb1 => Ok(()),
            PolicyKind::Ucb1Sigma => match self.sigma {
                Some(s) if s.is_finite() && s >= 0.0 => Ok(()),
                _ => Err(Error::MissingSigma),
            },
            PolicyKind::Ucbv => {
                match self.b {
                    Some(b) if b.is_finite() && b > 0.0 => {}
                    _ => return Err(Error::MissingRange),
                }
                if self.c.is_finite() && self.c > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("ucbv scale c must be positive, got {}", self.c)))
                }
            }
        }
    }
}

pub fn empirical_mean(stats: &NodeStats) -> Result<f64> {
    if stats.observed == 0 {
        return Err(Error::NoData);
    }
    Ok(stats.sum / stats.observed as f64)
}

/// Population variance `sum_sq/s − mean²`, clamped at zero.
pub fn empirical_variance(stats: &NodeStats) -> Result<f64> {
    let mean = empirical_mean(stats)?;
    Ok((stats.sum_sq / stats.observed as f64 - mean * mean).max(0.0))
}

/// Optimistic index `B_{s,t}` of a node at round `t` (1-based). Nodes with
/// no observed feedback score +∞.
pub fn confidence_bound(params: &PolicyParams, stats: &NodeStats, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::ZeroRound);
    }
    if stats.observed == 0 {
        return Ok(f64::INFINITY);
    }
    let s = stats.observed as f64;
    let log_t = (t as f64).ln();
    let mean = empirical_mean(stats)?;
    let bound = match params.kind {
        PolicyKind::Ucb1 => mean + (2.0 * log_t / s).sqrt(),
        PolicyKind::Ucb1Sigma => {
            let sigma = params.sigma.ok_or(Error::MissingSigma)?;
            mean + (2.0 * sigma * sigma * log_t / s).sqrt()
        }
        PolicyKind::Ucbv => {
            let b = params.b.ok_or(Error::MissingRange)?;
            let var = empirical_variance(stats)?;
            mean + (2.0 * var * log_t / s).sqrt() + params.c * 3.0 * b * log_t / s
        }
    };
    Ok(bound)
}

/// Adds the fidelity bias ζ to a bound; +∞ stays +∞.
pub fn apply_fidelity_bias(bound: f64, zeta: f64) -> f64 {
    bound + zeta
}
