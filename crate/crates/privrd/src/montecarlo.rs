//! Simulation study: Scenario 1 and 2 designs, estimator paths over growing
//! samples, and rejection rates of `H0: τ = 0` under mechanism noise.

use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{Dataset, Interval, RddObs, RngStream, Support};
use crate::error::{invalid, Result};
use crate::kernels::KernelSpec;
use crate::numerics::{laplace_scale_for_variance, normal_laplace_two_sided_critical, sample_laplace};
use crate::output::{csv_string, fmt_float, svg_line_chart, Provenance, Series};
use crate::rdd::{local_linear_sharp, select_bandwidth, BandwidthStrategy};

/// True discontinuity of the scenario regression function at 0.
pub const TRUE_TAU: f64 = 0.30;
/// Error standard deviation in Scenario 1.
pub const SCENARIO1_ERROR_SD: f64 = 0.12952;
/// Error variance in Scenario 2.
pub const SCENARIO2_ERROR_VARIANCE: f64 = 0.12952;
/// Mechanism noise variance used with Scenario 2 unless overridden.
pub const SCENARIO2_NOISE_VARIANCE: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
}

impl Scenario {
    pub fn from_number(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Scenario::S1),
            2 => Ok(Scenario::S2),
            _ => invalid(format!("unknown scenario {k}; expected 1 or 2")),
        }
    }

    pub fn generate(&self, n: usize, stream: &RngStream) -> Result<Dataset> {
        match self {
            Scenario::S1 => scenario1_dgp(n, stream),
            Scenario::S2 => scenario2_dgp(n, stream),
        }
    }
}

/// Fifth-order polynomial regression function with a jump of 0.30 at 0.
pub fn scenario_m(x: f64) -> f64 {
    if x < 0.0 {
        0.35 + x * (1.27 + x * (7.18 + x * (20.21 + x * (21.54 + x * 7.33))))
    } else {
        0.65 + x * (0.84 + x * (-3.0 + x * (7.99 + x * (-9.01 + x * 3.56))))
    }
}

fn scenario_data<F: FnMut(&mut crate::data_model::StreamRng) -> f64>(
    n: usize,
    stream: &RngStream,
    mut error: F,
    y_support: Option<Interval>,
) -> Result<Dataset> {
    if n == 0 {
        return invalid("scenario sample size must be >= 1");
    }
    let mut rng = stream.rng();
    let obs = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let u = error(&mut rng);
            RddObs::new(scenario_m(x) + u, x)
        })
        .collect();
    Dataset::rdd(obs)?.with_support(Support { x: Some(Interval { lo: -1.0, hi: 1.0 }), y: y_support, w: None })
}

/// `X ~ U[−1, 1]`, `y = m(x) + u` with `u` uniform of standard deviation 0.12952.
pub fn scenario1_dgp(n: usize, stream: &RngStream) -> Result<Dataset> {
    let a = SCENARIO1_ERROR_SD * 3f64.sqrt();
    // m stays inside [−0.02, 1.04] on [−1, 1]
    scenario_data(n, stream, |rng| rng.random_range(-a..=a), Some(Interval { lo: -1.0, hi: 2.0 }))
}

/// As Scenario 1 with Gaussian errors of variance 0.12952; the outcome
/// support is unbounded.
pub fn scenario2_dgp(n: usize, stream: &RngStream) -> Result<Dataset> {
    let normal = Normal::new(0.0, SCENARIO2_ERROR_VARIANCE.sqrt()).expect("valid normal");
    scenario_data(n, stream, |rng| rng.sample(normal), None)
}

/// Settings of a simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n_values: Vec<u64>,
    pub noise_variances: Vec<f64>,
    pub sims: usize,
    pub alphas: Vec<f64>,
    pub bandwidth: BandwidthStrategy,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Rejection-rate study over N ∈ {500, 2000, 5000} and noise variances {0, 0.002, 2, 200}.
    pub fn rejection_study(sims: usize, seed: u64) -> Self {
        Self {
            scenario: Scenario::S1,
            n_values: vec![500, 2000, 5000],
            noise_variances: vec![0.0, 0.002, 2.0, 200.0],
            sims,
            alphas: vec![0.05, 0.01],
            bandwidth: BandwidthStrategy::Ik,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sims == 0 {
            return invalid("sims must be >= 1");
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 4) {
            return invalid("need at least one sample size, each >= 4");
        }
        if self.noise_variances.iter().any(|v| !(*v >= 0.0)) {
            return invalid("noise variances must be >= 0");
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return invalid("alpha levels must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionCell {
    pub n: u64,
    pub variance: f64,
    pub alpha: f64,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub mc_sd: f64,
}

/// Noise-free fit summary at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: u64,
    pub mean_tau_hat: f64,
    pub mean_se: f64,
    pub mean_bandwidth: f64,
    /// Replications where the local linear fit failed; they count as
    /// non-rejections.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub config: ScenarioConfig,
    pub cells: Vec<RejectionCell>,
    pub fits: Vec<FitSummary>,
}

impl RejectionTable {
    pub fn cell(&self, n: u64, variance: f64, alpha: f64) -> Option<&RejectionCell> {
        self.cells.iter().find(|c| c.n == n && c.variance == variance && c.alpha == alpha)
    }

    /// One row per N, one column per (variance, α) pair.
    pub fn to_csv(&self, provenance: Option<&Provenance>) -> Result<String> {
        let mut headers = vec!["N".to_string()];
        for v in &self.config.noise_variances {
            for a in &self.config.alphas {
                headers.push(format!("var={v} alpha={a}"));
            }
        }
        let rows: Vec<Vec<String>> = self
            .config
            .n_values
            .iter()
            .map(|&n| {
                let mut row = vec![n.to_string()];
                for &v in &self.config.noise_variances {
                    for &a in &self.config.alphas {
                        row.push(self.cell(n, v, a).map_or("nan".into(), |c| fmt_float(c.rate)));
                    }
                }
                row
            })
            .collect();
        let h: Vec<&str> = headers.iter().map(String::as_str).collect();
        csv_string(provenance, &h, &rows)
    }
}

struct Replication {
    fit: Option<(f64, f64, f64)>,
    /// Rejection indicator per (variance, α), variance-major.
    rejects: Vec<bool>,
}

/// Rejection frequency of `H0: τ = 0` for each (N, variance, α). Each
/// replication fits a local linear model with the triangular kernel, adds
/// Laplace noise of the given variance to the estimate and compares
/// `|(τ̂ + L)/se|` with the exact two-sided critical value of `Z + L/se`.
/// Noise variances share the replication's data set.
pub fn run_rejection_table(config: &ScenarioConfig) -> Result<RejectionTable> {
    config.validate()?;
    let kernel = KernelSpec::triangular();
    let root = RngStream::new(config.seed, 0);
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    for (ni, &n) in config.n_values.iter().enumerate() {
        let cell_stream = root.substream(ni as u64);
        let reps: Vec<Replication> = (0..config.sims as u64)
            .into_par_iter()
            .map(|r| {
                let s = cell_stream.substream(r);
                let fit = config
                    .scenario
                    .generate(n as usize, &s.substream(0))
                    .and_then(|d| {
                        let h = select_bandwidth(&d, 0.0, config.bandwidth, &kernel)?;
                        let f = local_linear_sharp(&d, 0.0, &kernel, h)?;
                        Ok((f.tau_hat, f.se.unwrap_or(f64::NAN), h))
                    })
                    .ok()
                    .filter(|(t, se, _)| t.is_finite() && *se > 0.0);
                let mut rejects = Vec::with_capacity(config.noise_variances.len() * config.alphas.len());
                for (vi, &v) in config.noise_variances.iter().enumerate() {
                    let b = laplace_scale_for_variance(v);
                    let noise = sample_laplace(&mut s.substream(1).substream(vi as u64).rng(), b);
                    for &a in &config.alphas {
                        rejects.push(match fit {
                            Some((tau, se, _)) => {
                                let crit = normal_laplace_two_sided_critical(a, b / se);
                                ((tau + noise) / se).abs() > crit
                            }
                            None => false,
                        });
                    }
                }
                Replication { fit, rejects }
            })
            .collect();
        let ok: Vec<(f64, f64, f64)> = reps.iter().filter_map(|r| r.fit).collect();
        let m = ok.len().max(1) as f64;
        fits.push(FitSummary {
            n,
            mean_tau_hat: ok.iter().map(|f| f.0).sum::<f64>() / m,
            mean_se: ok.iter().map(|f| f.1).sum::<f64>() / m,
            mean_bandwidth: ok.iter().map(|f| f.2).sum::<f64>() / m,
            failures: reps.len() - ok.len(),
        });
        let sims = config.sims as f64;
        let mut k = 0;
        for &v in &config.noise_variances {
            for &a in &config.alphas {
                let count = reps.iter().filter(|r| r.rejects[k]).count();
                let rate = count as f64 / sims;
                cells.push(RejectionCell {
                    n,
                    variance: v,
                    alpha: a,
                    rate,
                    mc_sd: (rate * (1.0 - rate) / sims).sqrt(),
                });
                k += 1;
            }
        }
    }
    Ok(RejectionTable { config: config.clone(), cells, fits })
}

/// Settings of a path experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub scenario: Scenario,
    pub variance: f64,
    pub n_paths: usize,
    pub n_grid: Vec<u64>,
    pub bandwidth: BandwidthStrategy,
    pub seed: u64,
}

impl PathConfig {
    /// Twenty paths over N = 300, 400, ..., 4000.
    pub fn figure(scenario: Scenario, variance: f64, seed: u64) -> Self {
        Self {
            scenario,
            variance,
            n_paths: 20,
            n_grid: (3..=40).map(|k| k * 100).collect(),
            bandwidth: BandwidthStrategy::Ik,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return invalid("need at least one path");
        }
        if self.n_grid.is_empty() || self.n_grid[0] < 4 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("N grid must be strictly increasing with N >= 4");
        }
        if !(self.variance >= 0.0) {
            return invalid("noise variance must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsResult {
    pub config: PathConfig,
    /// `estimates[p][g]`: DP estimate of path `p` at `n_grid[g]`; NaN when
    /// the fit failed.
    pub estimates: Vec<Vec<f64>>,
    pub raw: Vec<Vec<f64>>,
}

impl PathsResult {
    /// Range of the DP estimates across paths at the largest N.
    pub fn terminal_spread(&self) -> f64 {
        let last: Vec<f64> =
            self.estimates.iter().filter_map(|p| p.last().copied()).filter(|v| v.is_finite()).collect();
        let max = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = last.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn to_csv(&self, provenance: Option<&Provenance>) -> Result<String> {
        let mut rows = Vec::new();
        for (p, (est, raw)) in self.estimates.iter().zip(&self.raw).enumerate() {
            for (g, &n) in self.config.n_grid.iter().enumerate() {
                rows.push(vec![p.to_string(), n.to_string(), fmt_float(est[g]), fmt_float(raw[g])]);
            }
        }
        csv_string(provenance, &["path", "N", "estimate", "raw_estimate"], &rows)
    }

    pub fn to_svg(&self, y_range: Option<(f64, f64)>, provenance: Option<&Provenance>) -> Result<String> {
        let series: Vec<Series> = self
            .estimates
            .iter()
            .enumerate()
            .map(|(p, est)| Series {
                name: format!("path {p}"),
                points: self.config.n_grid.iter().zip(est).map(|(&n, &v)| (n as f64, v)).collect(),
            })
            .collect();
        svg_line_chart(
            &format!("DP local linear estimates, noise variance {}", self.config.variance),
            "N",
            "estimate",
            &series,
            y_range,
            provenance,
        )
    }
}

/// DP estimates along prefix-nested samples: each path draws one sample of
/// the largest size and evaluates its first N records at every grid point,
/// with a fresh noise draw per N.
pub fn run_paths(config: &PathConfig) -> Result<PathsResult> {
    config.validate()?;
    let kernel = KernelSpec::triangular();
    let root = RngStream::new(config.seed, 1);
    let max_n = *config.n_grid.last().expect("validated non-empty") as usize;
    let b = laplace_scale_for_variance(config.variance);
    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let s = root.substream(p);
            let full = config.scenario.generate(max_n, &s.substream(0))?;
            let obs = full.as_rdd()?;
            let mut est = Vec::with_capacity(config.n_grid.len());
            let mut raw = Vec::with_capacity(config.n_grid.len());
            for (g, &n) in config.n_grid.iter().enumerate() {
                let d = Dataset::rdd(obs[..n as usize].to_vec())?;
                let tau = select_bandwidth(&d, 0.0, config.bandwidth, &kernel)
                    .and_then(|h| local_linear_sharp(&d, 0.0, &kernel, h))
                    .map_or(f64::NAN, |f| f.tau_hat);
                let noise = sample_laplace(&mut s.substream(1).substream(g as u64).rng(), b);
                raw.push(tau);
                est.push(tau + noise);
            }
            Ok((est, raw))
        })
        .collect::<Result<_>>()?;
    let (estimates, raw) = paths.into_iter().unzip();
    Ok(PathsResult { config: config.clone(), estimates, raw })
}
