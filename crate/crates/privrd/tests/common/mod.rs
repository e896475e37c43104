#![allow(dead_code)]

use privrd::data_model::{Dataset, RddObs, RngStream, WeightedObs};
use privrd::kernels::KernelSpec;
use privrd::mechanisms::{
    audit_dp, exponential_mean_dp, exponential_mechanism_delta, laplace_mean_dp, truncated_weighted_mean_dp,
    AuditReport, NoiseKind,
};
use privrd::rdd::nr_boundary_estimate;

/// One row of the audit matrix.
pub struct AuditCase {
    pub name: String,
    pub epsilon: f64,
    pub delta: f64,
    pub report: AuditReport,
}

impl AuditCase {
    pub fn passes(&self) -> bool {
        self.report.epsilon_hat <= self.epsilon + self.report.half_width
    }
}

fn univariate_pair() -> (Dataset, Dataset) {
    let mut a = vec![0.5; 10];
    let mut b = a.clone();
    a[9] = 0.0;
    b[9] = 1.0;
    (Dataset::univariate(a).unwrap(), Dataset::univariate(b).unwrap())
}

/// All weights survive truncation at 0.5; the differing record moves
/// `x/w` by the full `1/δ`.
fn weighted_pair() -> (Dataset, Dataset) {
    let base: Vec<WeightedObs> = (0..10).map(|i| WeightedObs { x: 0.1 * i as f64, w: 0.5 + 0.05 * i as f64 }).collect();
    let mut a = base.clone();
    let mut b = base;
    a[0] = WeightedObs { x: 0.0, w: 0.5 };
    b[0] = WeightedObs { x: 1.0, w: 0.5 };
    (Dataset::weighted(a).unwrap(), Dataset::weighted(b).unwrap())
}

/// Laplace and exponential means and both truncated-mean variants at
/// ε ∈ {0.5, 1, 2}.
pub fn audit_matrix(trials: usize, seed: u64) -> Vec<AuditCase> {
    let (u, u2) = univariate_pair();
    let (w, w2) = weighted_pair();
    let gamma = 0.25;
    let mut out = Vec::new();
    for (k, &eps) in [0.5, 1.0, 2.0].iter().enumerate() {
        let s = |j: u64| RngStream::new(seed, 10 * k as u64 + j);
        let report = audit_dp(|d, st| Ok(laplace_mean_dp(d, eps, st)?.estimate), &u, &u2, trials, 0.0, &s(0)).unwrap();
        out.push(AuditCase { name: format!("laplace_mean eps={eps}"), epsilon: eps, delta: 0.0, report });

        let delta = exponential_mechanism_delta(10.0, eps, gamma);
        let report =
            audit_dp(|d, st| Ok(exponential_mean_dp(d, eps, gamma, st)?.estimate), &u, &u2, trials, delta, &s(1))
                .unwrap();
        out.push(AuditCase { name: format!("exponential_mean eps={eps}"), epsilon: eps, delta, report });

        let report = audit_dp(
            |d, st| Ok(truncated_weighted_mean_dp(d, eps, 0.5, NoiseKind::Laplace, gamma, st)?.estimate),
            &w,
            &w2,
            trials,
            0.0,
            &s(2),
        )
        .unwrap();
        out.push(AuditCase { name: format!("truncated_laplace eps={eps}"), epsilon: eps, delta: 0.0, report });

        let report = audit_dp(
            |d, st| Ok(truncated_weighted_mean_dp(d, eps, 0.5, NoiseKind::Exponential, gamma, st)?.estimate),
            &w,
            &w2,
            trials,
            delta,
            &s(3),
        )
        .unwrap();
        out.push(AuditCase { name: format!("truncated_exponential eps={eps}"), epsilon: eps, delta, report });
    }
    out
}

/// Log of the output density of the Bernoulli-Laplace mean (expected
/// normalization, before projection) at `z`, by enumerating every kept subset.
pub fn bernoulli_laplace_log_density(xs: &[f64], pi: f64, lambda: f64, z: f64) -> f64 {
    let n = xs.len();
    let mut terms = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let mut sum = 0.0;
        let mut logw = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sum += x;
                logw += pi.ln();
            } else {
                logw += (1.0 - pi).ln();
            }
        }
        let mu = sum / (n as f64 * pi);
        terms.push(logw - (z - mu).abs() / lambda - (2.0 * lambda).ln());
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Largest log density ratio in either direction between two adjacent
/// datasets, over a grid that extends past every subset mean.
pub fn bernoulli_laplace_max_log_ratio(a: &[f64], b: &[f64], pi: f64, lambda: f64) -> f64 {
    let reach = 1.0 / pi + 20.0 * lambda;
    let mut best: f64 = 0.0;
    for k in 0..=4000 {
        let z = -reach + 2.0 * reach * k as f64 / 4000.0;
        let la = bernoulli_laplace_log_density(a, pi, lambda, z);
        let lb = bernoulli_laplace_log_density(b, pi, lambda, z);
        best = best.max((la - lb).abs());
    }
    best
}

/// Weighted mean of `(value, weight)` records; `None` when all weights are zero.
pub fn weighted_mean(recs: &[(f64, f64)]) -> Option<f64> {
    let sw: f64 = recs.iter().map(|r| r.1).sum();
    (sw > 0.0).then(|| recs.iter().map(|r| r.0 * r.1).sum::<f64>() / sw)
}

/// Three-by-three grid of records spanning the value and weight ranges.
pub fn record_grid(c1: f64, c2: f64, d1: f64, d2: f64) -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for d in [d1, 0.5 * (d1 + d2), d2] {
        for c in [c1, 0.5 * (c1 + c2), c2] {
            g.push((d, c));
        }
    }
    g
}

/// Weight ranges `[c1, c2]` and value ranges `[d1, d2]` of the oracle matrix.
pub const WEIGHTS: [(f64, f64); 4] = [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (0.2, 3.0)];
pub const VALUES: [(f64, f64); 3] = [(0.0, 1.0), (-1.0, 2.0), (0.4, 0.4)];

/// Uniform-kernel boundary regression at cutoff 0 with unit bandwidth,
/// defined only when each side holds at least `m_l` / `m_r` records.
pub fn boundary_estimator(m_l: usize, m_r: usize) -> impl Fn(&[RddObs]) -> Option<f64> + Sync {
    move |recs: &[RddObs]| {
        let left = recs.iter().filter(|o| (-1.0..0.0).contains(&o.x)).count();
        let right = recs.iter().filter(|o| (0.0..=1.0).contains(&o.x)).count();
        if left < m_l || right < m_r {
            return None;
        }
        let d = Dataset::rdd(recs.to_vec()).ok()?;
        nr_boundary_estimate(&d, 0.0, &KernelSpec::uniform(), 1.0).ok().map(|f| f.tau_hat)
    }
}
