//! Differentially private mechanisms for bounded means, their privacy
//! accounting, the log-density discrepancy functional and an empirical
//! privacy auditor.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{project, Dataset, Interval, ParamSpace, PrivacyParams, RngStream};
use crate::error::{invalid, Error, Result};
use crate::numerics::{norm_cdf, norm_quantile, sample_laplace};

/// Output of one mechanism invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismReport {
    /// Released value, `project(raw_statistic + noise_draw)` for additive mechanisms.
    pub estimate: f64,
    pub raw_statistic: f64,
    pub noise_draw: f64,
    pub privacy: PrivacyParams,
    pub mechanism: String,
    /// Named scale parameters (λ, γ, π, δ_N, C, ...).
    pub scale_params: BTreeMap<String, f64>,
    pub stream: RngStream,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn check_unit(xs: &[f64], field: &'static str) -> Result<()> {
    for &x in xs {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::SupportViolation { field, value: x, lo: 0.0, hi: 1.0 });
        }
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return invalid(format!("epsilon must be > 0, got {epsilon}"));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Laplace mechanism for the mean of data in `[0, 1]`: `x̄ + Lap(0, 1/(εN))`,
/// projected on `[0, 1]`. Pure ε-DP.
pub fn laplace_mean_dp(data: &Dataset, epsilon: f64, stream: &RngStream) -> Result<MechanismReport> {
    check_epsilon(epsilon)?;
    let xs = data.as_univariate()?;
    check_unit(xs, "x")?;
    if xs.is_empty() {
        return invalid("dataset is empty");
    }
    let n = xs.len() as f64;
    let scale = 1.0 / (epsilon * n);
    let raw = mean(xs);
    let noise = sample_laplace(&mut stream.rng(), scale);
    Ok(MechanismReport {
        estimate: project(raw + noise, &ParamSpace::unit()),
        raw_statistic: raw,
        noise_draw: noise,
        privacy: PrivacyParams::pure(epsilon),
        mechanism: "laplace_mean".into(),
        scale_params: params(&[("lambda", scale)]),
        stream: *stream,
        warnings: Vec::new(),
    })
}

/// δ of the exponential mechanism at effective size `n`: `Φ(−n^γ + ε/2)`.
pub fn exponential_mechanism_delta(n: f64, epsilon: f64, gamma: f64) -> f64 {
    norm_cdf(-n.powf(gamma) + 0.5 * epsilon)
}

/// Exponential mechanism for the mean of data in `[0, 1]`: a draw from
/// `N(x̄, 1/(ε² N^{2−2γ}))`, projected on `[0, 1]`.
pub fn exponential_mean_dp(data: &Dataset, epsilon: f64, gamma: f64, stream: &RngStream) -> Result<MechanismReport> {
    check_epsilon(epsilon)?;
    if !(gamma > 0.0 && gamma < 0.5) {
        return invalid(format!("gamma must lie in (0, 0.5), got {gamma}"));
    }
    let xs = data.as_univariate()?;
    check_unit(xs, "x")?;
    if xs.is_empty() {
        return invalid("dataset is empty");
    }
    let n = xs.len() as f64;
    let sd = 1.0 / (epsilon * n.powf(1.0 - gamma));
    let raw = mean(xs);
    let z: f64 = stream.rng().sample(StandardNormal);
    let noise = sd * z;
    let delta = exponential_mechanism_delta(n, epsilon, gamma);
    Ok(MechanismReport {
        estimate: project(raw + noise, &ParamSpace::unit()),
        raw_statistic: raw,
        noise_draw: noise,
        privacy: PrivacyParams { epsilon, delta },
        mechanism: "exponential_mean".into(),
        scale_params: params(&[("gamma", gamma), ("sd", sd)]),
        stream: *stream,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Laplace,
    Exponential,
}

/// Truncated inverse-weighted mean `(1/(Nπ̂)) Σ (x_i/w_i) 1{w_i ≥ δ_N}` with
/// noise calibrated to the truncation level, projected on `[0, 1]`.
///
/// `π̂` is the empirical fraction of records with `w ≥ δ_N`. When no record
/// survives, the statistic is 0 and the noise scale is infinite, so the
/// release is an endpoint of `[0, 1]` chosen by the sign of the noise.
pub fn truncated_weighted_mean_dp(
    data: &Dataset,
    epsilon: f64,
    delta_trunc: f64,
    kind: NoiseKind,
    gamma: f64,
    stream: &RngStream,
) -> Result<MechanismReport> {
    check_epsilon(epsilon)?;
    if !(delta_trunc > 0.0 && delta_trunc <= 1.0) {
        return invalid(format!("truncation level must lie in (0, 1], got {delta_trunc}"));
    }
    if kind == NoiseKind::Exponential && !(gamma > 0.0 && gamma < 0.5) {
        return invalid(format!("gamma must lie in (0, 0.5), got {gamma}"));
    }
    let obs = data.as_weighted()?;
    if obs.is_empty() {
        return invalid("dataset is empty");
    }
    for o in obs {
        check_unit(&[o.x], "x")?;
        check_unit(&[o.w], "w")?;
    }
    let n = obs.len() as f64;
    let kept: Vec<_> = obs.iter().filter(|o| o.w >= delta_trunc).collect();
    let pi_hat = kept.len() as f64 / n;
    let eff = n * pi_hat;
    let raw = if kept.is_empty() { 0.0 } else { kept.iter().map(|o| o.x / o.w).sum::<f64>() / eff };
    let mut warnings = Vec::new();
    if kept.is_empty() {
        warnings.push("AllTruncated: no record has w >= delta_N; release is noise only".to_string());
    }
    let mut rng = stream.rng();
    let (noise, privacy, mut scale) = match kind {
        NoiseKind::Laplace => {
            let scale = 1.0 / (epsilon * eff * delta_trunc);
            (sample_laplace(&mut rng, scale), PrivacyParams::pure(epsilon), params(&[("lambda", scale)]))
        }
        NoiseKind::Exponential => {
            let sd = 1.0 / (epsilon * delta_trunc * eff.powf(1.0 - gamma));
            let z: f64 = rng.sample(StandardNormal);
            let noise = if sd.is_infinite() { z.signum() * f64::INFINITY } else { sd * z };
            let delta = exponential_mechanism_delta(eff, epsilon, gamma);
            (noise, PrivacyParams { epsilon, delta }, params(&[("sd", sd), ("gamma", gamma)]))
        }
    };
    scale.insert("pi_hat".into(), pi_hat);
    scale.insert("delta_n".into(), delta_trunc);
    Ok(MechanismReport {
        estimate: project(raw + noise, &ParamSpace::unit()),
        raw_statistic: raw,
        noise_draw: noise,
        privacy,
        mechanism: match kind {
            NoiseKind::Laplace => "truncated_weighted_mean_laplace".into(),
            NoiseKind::Exponential => "truncated_weighted_mean_exponential".into(),
        },
        scale_params: scale,
        stream: *stream,
        warnings,
    })
}

/// Normalizer of the Bernoulli-Laplace subsample sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Divide by the expected subsample size `Nπ`.
    #[default]
    Expected,
    /// Divide by the realized subsample size `Σ d_i` (0 when empty).
    Realized,
}

/// Privacy loss `ε = ln(1 − π + π e^{s})` with `s = r/(Nλπ)` and `r` the
/// width of the data range.
fn bernoulli_laplace_epsilon_scaled(n: u64, pi: f64, lambda: f64, r: f64) -> f64 {
    let s = r / (n as f64 * lambda * pi);
    if s.is_infinite() {
        return f64::INFINITY;
    }
    if s > 30.0 {
        // log-sum-exp form avoids overflow of e^s
        return pi.ln() + s + ((1.0 - pi) / pi * (-s).exp()).ln_1p();
    }
    (pi * s.exp_m1()).ln_1p()
}

/// Tight privacy loss of the Bernoulli-Laplace subsampled mean on `[0, 1]`
/// data: `ln(1 − π + π exp(1/(Nλπ)))`.
pub fn bernoulli_laplace_epsilon(n: u64, pi: f64, lambda: f64) -> Result<f64> {
    if n < 1 || !(pi > 0.0 && pi <= 1.0) || !(lambda > 0.0) {
        return invalid(format!("need N >= 1, pi in (0, 1], lambda > 0; got {n}, {pi}, {lambda}"));
    }
    Ok(bernoulli_laplace_epsilon_scaled(n, pi, lambda, 1.0))
}

/// Sufficient condition `ε ≥ π exp(1/(Nλπ))` for a candidate ε.
pub fn bernoulli_laplace_sufficient(n: u64, pi: f64, lambda: f64, epsilon: f64) -> bool {
    epsilon >= pi * (1.0 / (n as f64 * lambda * pi)).exp()
}

/// Subsampled mean with Laplace noise: each record is kept with
/// probability π, the kept sum is normalized and `Lap(0, λ)` is added, and
/// the result is projected on Θ.
pub fn bernoulli_laplace_mean(
    data: &Dataset,
    pi: f64,
    lambda: f64,
    theta: &ParamSpace,
    normalization: Normalization,
    stream: &RngStream,
) -> Result<MechanismReport> {
    if !(pi > 0.0 && pi <= 1.0) || !(lambda >= 0.0) {
        return invalid(format!("need pi in (0, 1] and lambda >= 0; got {pi}, {lambda}"));
    }
    let xs = data.as_univariate()?;
    if xs.is_empty() {
        return invalid("dataset is empty");
    }
    for &x in xs {
        if !(theta.lo..=theta.hi).contains(&x) {
            return Err(Error::SupportViolation { field: "x", value: x, lo: theta.lo, hi: theta.hi });
        }
    }
    let mut rng = stream.rng();
    let n = xs.len();
    let (mut sum, mut kept) = (0.0, 0usize);
    for &x in xs {
        if pi >= 1.0 || rng.random::<f64>() < pi {
            sum += x;
            kept += 1;
        }
    }
    let raw = match normalization {
        Normalization::Expected => sum / (n as f64 * pi),
        Normalization::Realized if kept == 0 => 0.0,
        Normalization::Realized => sum / kept as f64,
    };
    let noise = sample_laplace(&mut rng, lambda);
    // The tight bound holds for data in [0, 1]; elsewhere use the plain
    // Laplace bound on the kept component, exp(diam/(Nπλ)).
    let epsilon = if lambda == 0.0 {
        f64::INFINITY
    } else if *theta == ParamSpace::unit() && normalization == Normalization::Expected {
        bernoulli_laplace_epsilon_scaled(n as u64, pi, lambda, 1.0)
    } else {
        let reach = match normalization {
            Normalization::Expected => theta.diam() / (n as f64 * pi),
            // A realized mean can move by the full range when one record is kept.
            Normalization::Realized => theta.diam(),
        };
        reach / lambda
    };
    Ok(MechanismReport {
        estimate: project(raw + noise, theta),
        raw_statistic: raw,
        noise_draw: noise,
        privacy: PrivacyParams { epsilon, delta: 0.0 },
        mechanism: "bernoulli_laplace_mean".into(),
        scale_params: params(&[("pi", pi), ("lambda", lambda), ("kept", kept as f64)]),
        stream: *stream,
        warnings: Vec::new(),
    })
}

/// Noise families for the discrepancy functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Laplace { lambda: f64 },
    Gaussian { sigma: f64 },
}

/// `sup_{z ∈ [a, b]} |log f(z) − log f(z + Δ)|` for a centered noise density.
pub fn discrepancy(family: NoiseFamily, delta_shift: f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return invalid(format!("need a < b, got [{a}, {b}]"));
    }
    if delta_shift == 0.0 {
        return Ok(0.0);
    }
    match family {
        NoiseFamily::Laplace { lambda } => {
            // ||z| − |z + Δ|| is piecewise linear with kinks at 0 and −Δ.
            let g = |z: f64| (z.abs() - (z + delta_shift).abs()).abs();
            let mut best = g(a).max(g(b));
            for k in [0.0, -delta_shift] {
                if k > a && k < b {
                    best = best.max(g(k));
                }
            }
            Ok(best / lambda)
        }
        NoiseFamily::Gaussian { sigma } => {
            let g = |z: f64| (delta_shift * (2.0 * z + delta_shift)).abs() / (2.0 * sigma * sigma);
            Ok(g(a).max(g(b)))
        }
    }
}

/// Probability that the log-likelihood ratio of the untruncated mechanism
/// exceeds ε.
pub fn no_truncation_violation(kind: NoiseKind, c: f64, delta: f64, epsilon: f64, n: u64, gamma: f64) -> f64 {
    let cd = c * delta;
    match kind {
        NoiseKind::Laplace => {
            if cd <= epsilon {
                0.0
            } else {
                -(epsilon - cd).exp_m1()
            }
        }
        NoiseKind::Exponential => {
            let ng = (n as f64).powf(gamma);
            if cd.is_infinite() {
                return 1.0;
            }
            norm_cdf(cd / (2.0 * ng) - epsilon / cd * ng)
        }
    }
}

/// Result of an empirical privacy audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub epsilon_hat: f64,
    /// Simultaneous Monte Carlo half-width for the maximizing event.
    pub half_width: f64,
    /// True when some event has probability one under one dataset and zero
    /// under the other.
    pub disjoint: bool,
    pub trials: usize,
    pub delta: f64,
    /// Threshold and direction of the maximizing event.
    pub best_threshold: f64,
    pub best_event: String,
}

/// Number of thresholds in the audit grid.
pub const AUDIT_GRID: usize = 101;

/// Estimate ε from outputs of `mechanism` on adjacent datasets.
///
/// Events are the half-lines `{output ≤ t}` and `{output > t}` for `t` on a
/// 101-point grid spanning the pooled center ± 6 output standard deviations.
/// For each event and ordering, `log((p̂ − δ)/q̂)` is computed with add-one
/// smoothing, the numerator floored at one pseudo-count. The half-width
/// uses a Bonferroni normal quantile over all events.
pub fn audit_dp<M>(
    mechanism: M,
    d: &Dataset,
    d_prime: &Dataset,
    trials: usize,
    delta: f64,
    stream: &RngStream,
) -> Result<AuditReport>
where
    M: Fn(&Dataset, &RngStream) -> Result<f64> + Sync,
{
    match d.hamming(d_prime) {
        Some(k) if k <= 1 => {}
        Some(k) => return Err(Error::AdjacencyViolation { differing: k }),
        None => return invalid("datasets must have the same shape and size"),
    }
    if trials < 2 {
        return invalid("need at least two trials");
    }
    let run = |data: &Dataset, branch: u64| -> Result<Vec<f64>> {
        let base = stream.substream(branch);
        let mut out: Vec<f64> =
            (0..trials as u64).into_par_iter().map(|i| mechanism(data, &base.substream(i))).collect::<Result<_>>()?;
        out.sort_by(|a, b| a.total_cmp(b));
        Ok(out)
    };
    let a = run(d, 0)?;
    let b = run(d_prime, 1)?;

    let finite: Vec<f64> = a.iter().chain(&b).copied().filter(|v| v.is_finite()).collect();
    let center = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
    let sd_of = |v: &[f64]| {
        let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
        crate::numerics::mean_var(&f).1.sqrt()
    };
    let sd = 0.5 * (sd_of(&a) + sd_of(&b));
    let (lo, hi) = if sd > 0.0 && sd.is_finite() {
        (center - 6.0 * sd, center + 6.0 * sd)
    } else {
        let (mn, mx) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let pad = if mx > mn { mx - mn } else { 1.0 };
        (mn - pad, mx + pad)
    };
    let n = trials as f64;
    let events = 2 * AUDIT_GRID * 2;
    let z = norm_quantile(1.0 - 0.05 / (2.0 * events as f64));
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, String::new());
    let mut disjoint = false;
    for k in 0..AUDIT_GRID {
        let t = lo + (hi - lo) * k as f64 / (AUDIT_GRID - 1) as f64;
        let ca = a.partition_point(|&v| v <= t) as f64;
        let cb = b.partition_point(|&v| v <= t) as f64;
        for (label, p_count, q_count) in [
            ("P_D(out <= t) / P_D'(out <= t)", ca, cb),
            ("P_D'(out <= t) / P_D(out <= t)", cb, ca),
            ("P_D(out > t) / P_D'(out > t)", n - ca, n - cb),
            ("P_D'(out > t) / P_D(out > t)", n - cb, n - ca),
        ] {
            if p_count == n && q_count == 0.0 {
                disjoint = true;
            }
            let p = (p_count + 1.0) / (n + 2.0);
            let q = (q_count + 1.0) / (n + 2.0);
            let num = (p - delta).max(1.0 / (n + 2.0));
            let e = (num / q).ln();
            if e > best.0 {
                let var = p * (1.0 - p) / ((n + 2.0) * num * num) + (1.0 - q) / ((n + 2.0) * q);
                best = (e, z * var.sqrt(), t, label.to_string());
            }
        }
    }
    Ok(AuditReport {
        epsilon_hat: if disjoint { f64::INFINITY } else { best.0 },
        half_width: best.1,
        disjoint,
        trials,
        delta,
        best_threshold: best.2,
        best_event: best.3,
    })
}

/// Privacy of the untruncated release bounded by the data range; exposed
/// for callers that need the plain Laplace bound.
pub fn laplace_epsilon(sensitivity: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        f64::INFINITY
    } else {
        sensitivity / scale
    }
}

/// Outcome range helper used by the CLI: declared support or unbounded.
pub fn support_or_unbounded(iv: Option<Interval>) -> Interval {
    iv.unwrap_or_else(Interval::unbounded)
}
