use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pcts::harness::config::{self, parse_number_list, parse_seed_list, read_config_file, Overrides};
use pcts::harness::{run_suite, write_outputs};
use pcts::Error;

/// Run tree-search experiments over several seeds and write CSV reports.
#[derive(Debug, Parser)]
#[command(name = "pcts", version)]
struct Cli {
    /// Config file (TOML, or JSON when the extension is .json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reproduction preset such as hartmann3-paper or branin-geo.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    benchmark: Option<String>,
    /// pcts, mfpoo, wait_and_act or random.
    #[arg(long)]
    algo: Option<String>,
    /// ucb1, ucb1-sigma or ucbv.
    #[arg(long)]
    policy: Option<String>,
    /// Noise variance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Noise std assumed by ucb1-sigma (defaults to sqrt(sigma2)).
    #[arg(long)]
    sigma: Option<f64>,
    /// Range proxy for ucbv.
    #[arg(long)]
    b: Option<f64>,
    /// Exploration scale for ucbv.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    nu1: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long = "nu-max")]
    nu_max: Option<f64>,
    #[arg(long = "rho-max")]
    rho_max: Option<f64>,
    /// Add rho-max itself to the MFPOO grid.
    #[arg(long = "include-rho-max")]
    include_rho_max: bool,
    /// none, const:N or geo:MEAN.
    #[arg(long)]
    delay: Option<String>,
    /// gaussian, laplace or uniform.
    #[arg(long)]
    noise: Option<String>,
    /// on or off.
    #[arg(long)]
    fidelity: Option<String>,
    #[arg(long)]
    zeta0: Option<f64>,
    /// benchmark, linear:B, constant:B, poly:B or exp:B.
    #[arg(long = "cost-model")]
    cost_model: Option<String>,
    #[arg(long = "budget-cost", conflicts_with = "budget_rounds")]
    budget_cost: Option<f64>,
    #[arg(long = "budget-rounds")]
    budget_rounds: Option<u64>,
    /// Comma list with optional half-open ranges, e.g. 0..10 or 1,4,9.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma list of checkpoints.
    #[arg(long)]
    checkpoints: Option<String>,
    /// rounds or cost.
    #[arg(long = "checkpoint-axis")]
    checkpoint_axis: Option<String>,
    /// Output directory; PCTS_OUT_DIR takes precedence when set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent seeds.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the available presets and exit.
    #[arg(long = "list-presets")]
    list_presets: bool,
}

impl Cli {
    fn overrides(&self) -> Result<Overrides, Error> {
        Ok(Overrides {
            preset: self.preset.clone(),
            benchmark: self.benchmark.clone(),
            algo: self.algo.clone(),
            policy: self.policy.clone(),
            sigma2: self.sigma2,
            sigma: self.sigma,
            b: self.b,
            c: self.c,
            nu1: self.nu1,
            rho: self.rho,
            nu_max: self.nu_max,
            rho_max: self.rho_max,
            include_rho_max: self.include_rho_max.then_some(true),
            delay: self.delay.clone(),
            noise: self.noise.clone(),
            fidelity: self.fidelity.clone(),
            zeta0: self.zeta0,
            cost_model: self.cost_model.clone(),
            budget_cost: self.budget_cost,
            budget_rounds: self.budget_rounds,
            seeds: self.seeds.as_deref().map(parse_seed_list).transpose()?,
            checkpoints: self.checkpoints.as_deref().map(parse_number_list).transpose()?,
            checkpoint_axis: self.checkpoint_axis.clone(),
            out: self.out.clone(),
            jobs: self.jobs,
        })
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut overrides = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => Overrides::default(),
    };
    let flags = cli.overrides()?;
    // a file's benchmark must not survive a preset given on the command line
    if flags.preset.is_some() && flags.benchmark.is_none() {
        overrides.benchmark = None;
    }
    let spec = config::parse_config(&overrides.merge(&flags))?;
    let result = run_suite(&spec)?;

    let s = &result.summary;
    println!(
        "{} {} delay={} seeds={} max={} median={} std={} height={} nodes={}",
        s.algorithm,
        s.benchmark,
        s.delay,
        s.seeds,
        s.max_final_value,
        s.median_final_value,
        s.std_final_value,
        s.median_tree_height,
        s.median_node_count
    );
    if let Some(dir) = &spec.out_dir {
        let written = write_outputs(&result, dir)?;
        eprintln!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for name in config::preset_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error[{category}]: {e}");
            ExitCode::from(match category {
                "config" => 2,
                "runtime" => 3,
                _ => 4,
            })
        }
    }
}
