// `!(x > y)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "privrd", version, about = "Differentially private RDD estimation and privacy accounting")]
pub struct Cli {
    /// JSON file with the configuration of the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed of every random stream.
    #[arg(long, global = true, default_value_t = 20240601)]
    pub seed: u64,
    /// Directory for CSV, JSON and SVG outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global sensitivity of an estimator.
    Sensitivity(SensitivityArgs),
    /// Run or audit a DP mechanism on a CSV dataset.
    #[command(subcommand)]
    Mechanism(MechanismCmd),
    /// Classify asymptotic regimes and simulate their weak limits.
    #[command(subcommand)]
    Regimes(RegimesCmd),
    /// RDD or ATE estimate, optionally released with Laplace noise.
    Rdd(RddArgs),
    /// Density test, placebo power and graphical diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCmd),
    /// Random-set identification tools.
    #[command(subcommand)]
    Identify(IdentifyCmd),
    /// Simulation study.
    #[command(subcommand)]
    Montecarlo(MontecarloCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Estimator {
    SampleMean,
    WeightedMean,
    WeightedMeanDrop,
    NrBoundary,
    LocalLinear,
    FuzzyLl,
    Ate,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long, value_enum)]
    pub estimator: Estimator,
    #[arg(long, default_value = "triangular")]
    pub kernel: String,
    /// Outcome range on both sides of the cutoff; unbounded when omitted.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub y_range: Option<Vec<f64>>,
    /// Outcome range left of the cutoff; overrides --y-range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub y_left: Option<Vec<f64>>,
    /// Outcome range right of the cutoff; overrides --y-range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub y_right: Option<Vec<f64>>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<u64>,
    /// Minimum number of observations in the left neighborhood.
    #[arg(long, default_value_t = 1)]
    pub m_left: u64,
    /// Minimum number of observations in the right neighborhood.
    #[arg(long, default_value_t = 1)]
    pub m_right: u64,
    /// Let observations fall outside both neighborhoods.
    #[arg(long)]
    pub with_outside: bool,
    /// Floor on the smallest eigenvalue of the weighted design matrix.
    #[arg(long)]
    pub eigen_floor: Option<f64>,
    /// Only admit datasets where treatment varies on both sides.
    #[arg(long)]
    pub treatment_variation: bool,
    /// Number of weighted observations.
    #[arg(long, default_value_t = 2)]
    pub t: u64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub d1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d2: f64,
    /// Support of the running variable.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub x_range: Option<Vec<f64>>,
    /// Bandwidth sequence `coeff,n_power[,log_power]`.
    #[arg(long, default_value = "1,-0.2")]
    pub h: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MechanismName {
    LaplaceMean,
    ExponentialMean,
    TruncatedMean,
    BernoulliLaplace,
}

#[derive(Debug, Args)]
pub struct MechanismArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismName,
    /// CSV with column `x` (and `w` for the truncated mean).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Exponent of the exponential mechanism.
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    /// Truncation level of the weighted mean.
    #[arg(long, default_value_t = 0.1)]
    pub delta_trunc: f64,
    /// Noise of the truncated mean.
    #[arg(long, default_value = "laplace")]
    pub noise: String,
    /// Subsampling probability.
    #[arg(long, default_value_t = 0.5)]
    pub pi: f64,
    /// Laplace scale of the subsampled mean.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Normalize the subsampled sum by the kept count instead of Nπ.
    #[arg(long)]
    pub realized: bool,
}

#[derive(Debug, Subcommand)]
pub enum MechanismCmd {
    /// Release a private estimate of one dataset.
    Run(MechanismArgs),
    /// Estimate ε from outputs on two adjacent datasets.
    Audit {
        #[command(flatten)]
        mech: MechanismArgs,
        /// Adjacent dataset.
        #[arg(long)]
        data_prime: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum RegimesCmd {
    /// Regime label for given sequences `coeff,n_power[,log_power]`.
    Classify {
        #[arg(long, value_parser = ["truncated", "bernoulli"])]
        family: String,
        #[arg(long)]
        pi: String,
        /// Truncation level sequence.
        #[arg(long)]
        delta: Option<String>,
        /// Laplace scale sequence.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Distance of the mechanism output to its weak limit over N.
    Simulate {
        /// Named setup; see the README for the list.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        replications: usize,
    },
}

#[derive(Debug, Args)]
pub struct RddArgs {
    /// CSV with columns `y`, `x` and, for fuzzy designs, treatment `w`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "sharp-ll", value_parser = ["sharp-nr", "sharp-ll", "fuzzy-ll", "ate"])]
    pub design: String,
    #[arg(long, default_value = "triangular")]
    pub kernel: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cutoff: f64,
    /// Fixed bandwidth; otherwise --bandwidth-strategy is used.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value = "ik", value_parser = ["ik", "rule-of-thumb"])]
    pub bandwidth_strategy: String,
    /// Laplace noise calibrated to the closed-form sensitivity at this ε.
    #[arg(long, conflicts_with = "noise_variance")]
    pub epsilon: Option<f64>,
    /// Laplace noise of this variance.
    #[arg(long)]
    pub noise_variance: Option<f64>,
    /// Outcome range used for the sensitivity.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub y_range: Option<Vec<f64>>,
    /// Clip estimated propensities away from 0 and 1.
    #[arg(long)]
    pub clip: bool,
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCmd {
    /// Density discontinuity test at the cutoff.
    Mccrary {
        /// CSV with column `x`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        cutoff: f64,
        #[arg(long)]
        bandwidth: f64,
        /// First-stage bins; defaults to ceil(2 sqrt(N)).
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Rejection rate of a DP placebo test.
    Power {
        #[arg(long)]
        se: f64,
        #[arg(long, default_value_t = 0.3)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        variance: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        sims: usize,
    },
    /// Binned outcome means on each side of the cutoff.
    Bins {
        /// CSV with columns `y`, `x`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        cutoff: f64,
        #[arg(long)]
        width: f64,
    },
    /// Laplace-noised histogram of the running variable.
    Dphist {
        /// CSV with column `x`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum IdentifyCmd {
    /// Symmetric posterior credible region.
    CredibleRegion {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Containment functional of the two-realization example set.
    Containment {
        #[arg(long)]
        theta0: f64,
        #[arg(long)]
        k_lo: f64,
        #[arg(long)]
        k_hi: f64,
    },
    /// Fit the boundary density of the midpoint rule on intervals of a
    /// fixed half-width.
    FitMap {
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long, default_value_t = 50)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        half_width: f64,
        /// Drop the average-mass constraint.
        #[arg(long)]
        no_constraint: bool,
        /// Signed boundary measure.
        #[arg(long)]
        signed: bool,
    },
    /// Error of a selection rule on finite-N realizations.
    Consistency {
        #[arg(long, default_value_t = 0.62)]
        theta0: f64,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        replications: usize,
        #[arg(long, default_value = "example", value_parser = ["example", "uniform"])]
        selector: String,
        /// Boundary tolerance of the example rule.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum MontecarloCmd {
    /// Rejection rates of H0: tau = 0 over sample sizes and noise variances.
    Rejection {
        #[arg(long, default_value_t = 5000)]
        sims: usize,
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        variances: Option<Vec<f64>>,
    },
    /// Estimator paths over growing samples.
    Paths {
        #[arg(long, default_value_t = 1)]
        scenario: u32,
        /// Mechanism noise variance; Scenario 2 defaults to 1e6.
        #[arg(long)]
        variance: Option<f64>,
        #[arg(long, default_value_t = 20)]
        paths: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable output");
            // a closed pipe (e.g. `| head`) is not an error of the run
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}
