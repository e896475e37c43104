//! Sharp and fuzzy regression discontinuity estimators, the kernel
//! propensity-weighted ATE estimator, bandwidth selection and DP wrappers.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data_model::{project, Dataset, ParamSpace, PrivacyParams, RddObs, RngStream};
use crate::error::{invalid, Error, Result};
use crate::kernels::{eval_kernel, kernel_weights, KernelSpec, Side};
use crate::mechanisms::MechanismReport;
use crate::numerics::{quantile_sorted, sample_laplace, sorted};
use crate::sensitivity::{SensitivityKind, SensitivityReport};

/// Condition number above which a weighted design is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;
/// First-stage jumps below this magnitude are rejected.
pub const WEAK_FIRST_STAGE: f64 = 1e-10;

/// One side of a discontinuity fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideFit {
    /// Weighted mean (boundary regression) or intercept at the cutoff (local linear).
    pub intercept: f64,
    /// Slope in `x − c`; absent for boundary regression.
    pub slope: Option<f64>,
    /// HC0 variance of the intercept; absent for boundary regression.
    pub intercept_var: Option<f64>,
    /// Number of observations with positive kernel weight.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RddFit {
    pub tau_hat: f64,
    pub left: SideFit,
    pub right: SideFit,
    /// Treatment regressions of a fuzzy design, `(left, right)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_stage: Option<(SideFit, SideFit)>,
    /// Heteroskedasticity-robust standard error of `tau_hat` (sharp local linear only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    pub h: f64,
    pub kernel: KernelSpec,
    pub n_left: usize,
    pub n_right: usize,
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0) || h.is_infinite() && h.is_sign_negative() {
        return invalid(format!("bandwidth must be > 0, got {h}"));
    }
    Ok(())
}

/// Kernel-weighted difference of one-sided means, `τ̂_r(c) − τ̂_l(c)`.
pub fn nr_boundary_estimate(data: &Dataset, c: f64, kernel: &KernelSpec, h: f64) -> Result<RddFit> {
    check_bandwidth(h)?;
    let obs = data.as_rdd()?;
    let xs: Vec<f64> = obs.iter().map(|o| o.x).collect();
    let side = |s: Side| -> Result<SideFit> {
        let w = kernel_weights(kernel, &xs, c, h, s)?;
        let mean = w.iter().zip(obs).map(|(w, o)| w * o.y).sum();
        Ok(SideFit { intercept: mean, slope: None, intercept_var: None, n: w.iter().filter(|&&v| v > 0.0).count() })
    };
    let left = side(Side::Left)?;
    let right = side(Side::Right)?;
    Ok(RddFit {
        tau_hat: right.intercept - left.intercept,
        left,
        right,
        first_stage: None,
        se: None,
        h,
        kernel: *kernel,
        n_left: left.n,
        n_right: right.n,
    })
}

/// Weighted least squares of `y` on `(1, u)` with HC0 intercept variance.
fn weighted_line(u: &[f64], y: &[f64], w: &[f64], side: Side) -> Result<SideFit> {
    let s0: f64 = w.iter().sum();
    if !(s0 > 0.0) {
        return Err(Error::EmptySide { side: side.name() });
    }
    let ubar = w.iter().zip(u).map(|(w, u)| w * u).sum::<f64>() / s0;
    let ybar = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / s0;
    let sxx: f64 = w.iter().zip(u).map(|(w, u)| w * (u - ubar) * (u - ubar)).sum();
    let sxy: f64 = w.iter().zip(u).zip(y).map(|((w, u), y)| w * (u - ubar) * (y - ybar)).sum();
    // Eigenvalues of [[S0, S1], [S1, S2]]; det = S0·Sxx.
    let s1 = s0 * ubar;
    let s2 = sxx + s0 * ubar * ubar;
    let half_tr = 0.5 * (s0 + s2);
    let lmax = half_tr + (0.25 * (s0 - s2) * (s0 - s2) + s1 * s1).sqrt();
    let lmin = s0 * sxx / lmax;
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularDesign { side: side.name(), condition });
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * ubar;
    let mut var = 0.0;
    for i in 0..u.len() {
        if w[i] == 0.0 {
            continue;
        }
        let l = w[i] / s0 - ubar * w[i] * (u[i] - ubar) / sxx;
        let e = y[i] - intercept - slope * u[i];
        var += l * l * e * e;
    }
    Ok(SideFit { intercept, slope: Some(slope), intercept_var: Some(var), n: w.iter().filter(|&&v| v > 0.0).count() })
}

/// Per-side local linear fits of `values` (one per record) at cutoff `c`.
fn local_linear_sides(
    obs: &[RddObs],
    values: &[f64],
    c: f64,
    kernel: &KernelSpec,
    h: f64,
) -> Result<(SideFit, SideFit)> {
    let mut fits = Vec::with_capacity(2);
    for side in [Side::Left, Side::Right] {
        let (mut u, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for (o, &v) in obs.iter().zip(values) {
            if !side.holds(o.x, c) {
                continue;
            }
            let k = eval_kernel(kernel, (o.x - c) / h);
            if k > 0.0 {
                u.push(o.x - c);
                y.push(v);
                w.push(k);
            }
        }
        if w.is_empty() {
            return Err(Error::EmptySide { side: side.name() });
        }
        fits.push(weighted_line(&u, &y, &w, side)?);
    }
    Ok((fits[0], fits[1]))
}

/// Sharp local linear estimator `α̂_R − α̂_L` with a robust standard error.
pub fn local_linear_sharp(data: &Dataset, c: f64, kernel: &KernelSpec, h: f64) -> Result<RddFit> {
    check_bandwidth(h)?;
    let obs = data.as_rdd()?;
    let ys: Vec<f64> = obs.iter().map(|o| o.y).collect();
    let (left, right) = local_linear_sides(obs, &ys, c, kernel, h)?;
    let se = (left.intercept_var.unwrap_or(0.0) + right.intercept_var.unwrap_or(0.0)).sqrt();
    Ok(RddFit {
        tau_hat: right.intercept - left.intercept,
        left,
        right,
        first_stage: None,
        se: Some(se),
        h,
        kernel: *kernel,
        n_left: left.n,
        n_right: right.n,
    })
}

/// Fuzzy local linear estimator, the ratio of outcome and treatment jumps.
pub fn local_linear_fuzzy(data: &Dataset, c: f64, kernel: &KernelSpec, h: f64) -> Result<RddFit> {
    check_bandwidth(h)?;
    let obs = data.as_rdd()?;
    let mut ws = Vec::with_capacity(obs.len());
    for o in obs {
        match o.w {
            Some(w) => ws.push(if w { 1.0 } else { 0.0 }),
            None => return invalid("fuzzy design needs the treatment column `w` on every record"),
        }
    }
    let ys: Vec<f64> = obs.iter().map(|o| o.y).collect();
    let (left, right) = local_linear_sides(obs, &ys, c, kernel, h)?;
    let (fl, fr) = local_linear_sides(obs, &ws, c, kernel, h)?;
    let jump = fr.intercept - fl.intercept;
    if jump.abs() < WEAK_FIRST_STAGE {
        return Err(Error::WeakFirstStage { jump });
    }
    Ok(RddFit {
        tau_hat: (right.intercept - left.intercept) / jump,
        left,
        right,
        first_stage: Some((fl, fr)),
        se: None,
        h,
        kernel: *kernel,
        n_left: left.n,
        n_right: right.n,
    })
}

/// Propensity-score clipping bound used with `clip = true`.
pub const PROPENSITY_CLIP: f64 = 1e-6;

/// Kernel propensity-weighted ATE,
/// `(1/N) Σ (Y_i D_i / P̂(X_i) − Y_i (1 − D_i) / (1 − P̂(X_i)))`, with `P̂` the
/// Nadaraya-Watson regression of `D` on `X` including the point itself.
pub fn ate_propensity(data: &Dataset, kernel: &KernelSpec, h: f64, clip: bool) -> Result<f64> {
    check_bandwidth(h)?;
    let obs = data.as_rdd()?;
    if obs.is_empty() {
        return invalid("dataset is empty");
    }
    let mut recs: Vec<(f64, f64, f64)> = Vec::with_capacity(obs.len());
    for o in obs {
        let d = match o.d {
            Some(d) => d,
            None => return invalid("ATE design needs the treatment column `d` on every record"),
        };
        recs.push((o.x, o.y, if d { 1.0 } else { 0.0 }));
    }
    recs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let reach = kernel.u0 * h;
    let n = recs.len();
    let mut total = 0.0;
    for &(x, y, d) in &recs {
        let (lo, hi) = if reach.is_finite() {
            (recs.partition_point(|r| r.0 <= x - reach), recs.partition_point(|r| r.0 < x + reach))
        } else {
            (0, n)
        };
        let (mut num, mut den) = (0.0, 0.0);
        for r in &recs[lo..hi] {
            let k = eval_kernel(kernel, (r.0 - x) / h);
            num += k * r.2;
            den += k;
        }
        let mut p = num / den;
        if clip {
            p = p.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP);
        } else if !(p > 0.0 && p < 1.0) {
            return Err(Error::DegeneratePropensity { x, value: p });
        }
        total += y * d / p - y * (1.0 - d) / (1.0 - p);
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum BandwidthStrategy {
    Fixed {
        h: f64,
    },
    /// `c_h · sd(X) · N^{-1/5}`.
    RuleOfThumb {
        c_h: f64,
    },
    /// Imbens-Kalyanaraman plug-in for local linear RDD.
    Ik,
}

fn sample_sd(xs: &[f64]) -> f64 {
    crate::numerics::mean_var(xs).1.sqrt()
}

/// Bandwidth for an RDD fit at cutoff `c`. The IK strategy uses the kernel's
/// boundary constant and falls back to a rule of thumb when a step lacks data.
pub fn select_bandwidth(data: &Dataset, c: f64, strategy: BandwidthStrategy, kernel: &KernelSpec) -> Result<f64> {
    let obs = data.as_rdd()?;
    if obs.len() < 2 {
        return invalid("bandwidth selection needs at least two observations");
    }
    let xs: Vec<f64> = obs.iter().map(|o| o.x).collect();
    let n = xs.len() as f64;
    match strategy {
        BandwidthStrategy::Fixed { h } => {
            check_bandwidth(h)?;
            Ok(h)
        }
        BandwidthStrategy::RuleOfThumb { c_h } => Ok(c_h * sample_sd(&xs) * n.powf(-0.2)),
        BandwidthStrategy::Ik => {
            let ys: Vec<f64> = obs.iter().map(|o| o.y).collect();
            Ok(ik_bandwidth(&xs, &ys, c, kernel).unwrap_or_else(|| 1.84 * sample_sd(&xs) * n.powf(-0.2)))
        }
    }
}

/// Least-squares coefficients of `y` on the columns of `design` rows.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    if rows.len() < p {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    if !(svd.singular_values.min() > max_sv * 1e-12) {
        return None;
    }
    let beta = svd.solve(&b, 0.0).ok()?;
    Some(beta.iter().copied().collect())
}

/// Imbens-Kalyanaraman bandwidth; `None` when a step has too little data.
pub fn ik_bandwidth(xs: &[f64], ys: &[f64], c: f64, kernel: &KernelSpec) -> Option<f64> {
    let n = xs.len() as f64;
    let sx = sample_sd(xs);
    let h1 = 1.84 * sx * n.powf(-0.2);
    let window = |side: Side, h: f64| -> Vec<usize> {
        (0..xs.len()).filter(|&i| side.holds(xs[i], c) && (xs[i] - c).abs() <= h).collect()
    };
    let var_of = |idx: &[usize]| -> Option<f64> {
        if idx.len() < 2 {
            return None;
        }
        let v: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
        Some(crate::numerics::mean_var(&v).1)
    };
    let left1 = window(Side::Left, h1);
    let right1 = window(Side::Right, h1);
    let f_hat = (left1.len() + right1.len()) as f64 / (2.0 * n * h1);
    let var_l = var_of(&left1)?;
    let var_r = var_of(&right1)?;
    if !(f_hat > 0.0) {
        return None;
    }

    // Global cubic with a jump dummy between the one-sided medians.
    let left_x = sorted(&xs.iter().copied().filter(|&x| x < c).collect::<Vec<_>>());
    let right_x = sorted(&xs.iter().copied().filter(|&x| x >= c).collect::<Vec<_>>());
    if left_x.is_empty() || right_x.is_empty() {
        return None;
    }
    let (lo, hi) = (quantile_sorted(&left_x, 0.5), quantile_sorted(&right_x, 0.5));
    let (mut rows, mut yv) = (Vec::new(), Vec::new());
    for (i, &x) in xs.iter().enumerate() {
        if x >= lo && x <= hi {
            let u = x - c;
            rows.push(vec![1.0, if x >= c { 1.0 } else { 0.0 }, u, u * u, u * u * u]);
            yv.push(ys[i]);
        }
    }
    let gamma = least_squares(&rows, &yv)?;
    let m3 = 6.0 * gamma[4];

    let curvature = |side: Side, var: f64, n_side: usize| -> Option<(f64, f64)> {
        let h2 = 3.56 * (var / (f_hat * m3 * m3)).powf(1.0 / 7.0) * (n_side as f64).powf(-1.0 / 7.0);
        let idx = window(side, h2);
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let u = xs[i] - c;
                vec![1.0, u, u * u]
            })
            .collect();
        let yv: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
        let lam = least_squares(&rows, &yv)?;
        let r = if h2.is_finite() { 720.0 * var / (idx.len() as f64 * h2.powi(4)) } else { 0.0 };
        Some((2.0 * lam[2], r))
    };
    let (m2_l, r_l) = curvature(Side::Left, var_l, left_x.len())?;
    let (m2_r, r_r) = curvature(Side::Right, var_r, right_x.len())?;
    let ck = kernel.boundary_bandwidth_constant();
    let denom = f_hat * ((m2_r - m2_l).powi(2) + r_r + r_l);
    let h = ck * ((var_l + var_r) / denom).powf(0.2) * n.powf(-0.2);
    (h.is_finite() && h > 0.0).then_some(h)
}

/// Estimator wrapped by [`dp_rdd_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    SharpNr,
    SharpLl,
    FuzzyLl,
    Ate,
}

impl Design {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sharp-nr" => Ok(Design::SharpNr),
            "sharp-ll" => Ok(Design::SharpLl),
            "fuzzy-ll" => Ok(Design::FuzzyLl),
            "ate" => Ok(Design::Ate),
            other => invalid(format!("unknown design `{other}`")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Design::SharpNr => "sharp-nr",
            Design::SharpLl => "sharp-ll",
            Design::FuzzyLl => "fuzzy-ll",
            Design::Ate => "ate",
        }
    }
}

/// Noise calibration for a DP discontinuity estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Laplace scale `sensitivity / ε`; needs a finite sensitivity.
    Calibrated { epsilon: f64, sensitivity: SensitivityReport },
    /// Laplace noise of a fixed variance; the privacy level is only annotated.
    FixedVariance { variance: f64, sensitivity: Option<SensitivityReport> },
}

/// Raw estimate for a design.
pub fn raw_estimate(design: Design, data: &Dataset, c: f64, kernel: &KernelSpec, h: f64, clip: bool) -> Result<f64> {
    match design {
        Design::SharpNr => Ok(nr_boundary_estimate(data, c, kernel, h)?.tau_hat),
        Design::SharpLl => Ok(local_linear_sharp(data, c, kernel, h)?.tau_hat),
        Design::FuzzyLl => Ok(local_linear_fuzzy(data, c, kernel, h)?.tau_hat),
        Design::Ate => ate_propensity(data, kernel, h, clip),
    }
}

/// DP release of a discontinuity estimate: raw estimate plus Laplace noise,
/// optionally projected on `theta`.
#[allow(clippy::too_many_arguments)]
pub fn dp_rdd_estimate(
    design: Design,
    data: &Dataset,
    c: f64,
    kernel: &KernelSpec,
    h: f64,
    noise: &NoiseSpec,
    theta: Option<&ParamSpace>,
    stream: &RngStream,
) -> Result<MechanismReport> {
    let (scale, privacy, mut scale_params) = match noise {
        NoiseSpec::Calibrated { epsilon, sensitivity } => {
            if !(*epsilon > 0.0) {
                return invalid(format!("epsilon must be > 0, got {epsilon}"));
            }
            let value = match sensitivity.kind {
                SensitivityKind::Finite { value } => value,
                _ => return Err(Error::InfiniteSensitivity { kind: sensitivity.kind_name().to_string() }),
            };
            let scale = value / epsilon;
            let mut p = BTreeMap::new();
            p.insert("sensitivity".to_string(), value);
            (scale, PrivacyParams::pure(*epsilon), p)
        }
        NoiseSpec::FixedVariance { variance, sensitivity } => {
            if !(*variance >= 0.0) {
                return invalid(format!("noise variance must be >= 0, got {variance}"));
            }
            let scale = (variance / 2.0).sqrt();
            let mut p = BTreeMap::new();
            p.insert("variance".to_string(), *variance);
            let implied = match sensitivity.as_ref().and_then(|s| s.finite_value()) {
                Some(s) if *variance > 0.0 => s * (2.0 / variance).sqrt(),
                Some(_) => f64::INFINITY,
                None => f64::INFINITY,
            };
            if let Some(s) = sensitivity.as_ref().and_then(|s| s.finite_value()) {
                p.insert("sensitivity".to_string(), s);
            }
            (scale, PrivacyParams { epsilon: implied, delta: 0.0 }, p)
        }
    };
    scale_params.insert("lambda".to_string(), scale);
    scale_params.insert("h".to_string(), h);
    let raw = raw_estimate(design, data, c, kernel, h, false)?;
    let noise_draw = sample_laplace(&mut stream.rng(), scale);
    let released = raw + noise_draw;
    Ok(MechanismReport {
        estimate: theta.map_or(released, |t| project(released, t)),
        raw_statistic: raw,
        noise_draw,
        privacy,
        mechanism: format!("dp_rdd_{}", design.name()),
        scale_params,
        stream: *stream,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rdd(points: &[(f64, f64)]) -> Dataset {
        Dataset::rdd(points.iter().map(|&(x, y)| RddObs::new(y, x)).collect()).unwrap()
    }

    #[test]
    fn boundary_regression_examples() {
        let d = rdd(&[(-0.5, 0.0), (-0.5, 2.0), (0.5, 3.0), (0.5, 5.0)]);
        let f = nr_boundary_estimate(&d, 0.0, &KernelSpec::uniform(), 1.0).unwrap();
        assert!((f.tau_hat - 3.0).abs() < 1e-15);
        let d = rdd(&[(-0.1, 1.0), (0.2, 4.0)]);
        assert!((nr_boundary_estimate(&d, 0.0, &KernelSpec::triangular(), 1.0).unwrap().tau_hat - 3.0).abs() < 1e-15);
        let d = rdd(&[(-0.25, 0.0), (-0.75, 0.0), (0.25, 1.0), (0.75, 0.0)]);
        let f = nr_boundary_estimate(&d, 0.0, &KernelSpec::triangular(), 1.0).unwrap();
        assert!((f.tau_hat - 0.75).abs() < 1e-15);
        let d = rdd(&[(0.25, 1.0)]);
        assert!(matches!(
            nr_boundary_estimate(&d, 0.0, &KernelSpec::uniform(), 1.0),
            Err(Error::EmptySide { side: "left" })
        ));
    }

    #[test]
    fn local_linear_examples() {
        let xs = [-0.9, -0.5, -0.2, 0.0, 0.3, 0.7];
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, if x >= 0.0 { 1.0 + 2.0 * x } else { -x })).collect();
        let f = local_linear_sharp(&rdd(&pts), 0.0, &KernelSpec::triangular(), 1.0).unwrap();
        assert!((f.tau_hat - 1.0).abs() < 1e-12);
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y + 7.0)).collect();
        let g = local_linear_sharp(&rdd(&shifted), 0.0, &KernelSpec::triangular(), 1.0).unwrap();
        assert!((g.tau_hat - f.tau_hat).abs() < 1e-12);
        let flat = rdd(&[(-0.5, 0.0), (-0.2, 1.0), (0.3, 1.0), (0.3, 2.0)]);
        assert!(matches!(
            local_linear_sharp(&flat, 0.0, &KernelSpec::uniform(), 1.0),
            Err(Error::SingularDesign { side: "right", .. })
        ));
    }

    fn fuzzy(points: &[(f64, f64, bool)]) -> Dataset {
        Dataset::rdd(points.iter().map(|&(x, y, w)| RddObs { w: Some(w), ..RddObs::new(y, x) }).collect()).unwrap()
    }

    #[test]
    fn fuzzy_examples() {
        let xs = [-0.8, -0.4, -0.1, 0.1, 0.5, 0.9];
        let sharp: Vec<_> = xs.iter().map(|&x| (x, 3.0 * x + if x >= 0.0 { 1.5 } else { 0.0 }, x >= 0.0)).collect();
        let d = fuzzy(&sharp);
        let a = local_linear_fuzzy(&d, 0.0, &KernelSpec::uniform(), 1.0).unwrap();
        let b = local_linear_sharp(&d, 0.0, &KernelSpec::uniform(), 1.0).unwrap();
        assert!((a.tau_hat - b.tau_hat).abs() < 1e-12);
        let constant: Vec<_> = xs.iter().map(|&x| (x, x, true)).collect();
        assert!(matches!(
            local_linear_fuzzy(&fuzzy(&constant), 0.0, &KernelSpec::uniform(), 1.0),
            Err(Error::WeakFirstStage { .. })
        ));
    }

    #[test]
    fn ate_examples() {
        let obs =
            vec![RddObs { d: Some(true), ..RddObs::new(1.0, 0.0) }, RddObs { d: Some(false), ..RddObs::new(0.0, 0.0) }];
        let d = Dataset::rdd(obs).unwrap();
        assert!((ate_propensity(&d, &KernelSpec::uniform(), 1.0, false).unwrap() - 1.0).abs() < 1e-15);
        let all = Dataset::rdd(vec![RddObs { d: Some(true), ..RddObs::new(1.0, 0.0) }; 3]).unwrap();
        assert!(matches!(
            ate_propensity(&all, &KernelSpec::uniform(), 1.0, false),
            Err(Error::DegeneratePropensity { .. })
        ));
        assert!(ate_propensity(&all, &KernelSpec::uniform(), 1.0, true).is_ok());
    }

    #[test]
    fn bandwidth_examples() {
        let xs: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let sd = sample_sd(&xs);
        let d = rdd(&xs.iter().map(|&x| (x, 0.0)).collect::<Vec<_>>());
        assert_eq!(
            select_bandwidth(&d, 0.0, BandwidthStrategy::Fixed { h: 0.3 }, &KernelSpec::uniform()).unwrap(),
            0.3
        );
        let h = select_bandwidth(&d, 0.0, BandwidthStrategy::RuleOfThumb { c_h: 1.0 / sd }, &KernelSpec::uniform())
            .unwrap();
        assert!((h - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dp_wrapper_examples() {
        let d = rdd(&[(-0.5, 0.0), (-0.5, 2.0), (0.5, 3.0), (0.5, 5.0)]);
        let s = RngStream::new(4, 4);
        let noise = NoiseSpec::FixedVariance { variance: 0.0, sensitivity: None };
        let r = dp_rdd_estimate(Design::SharpNr, &d, 0.0, &KernelSpec::uniform(), 1.0, &noise, None, &s).unwrap();
        assert_eq!(r.estimate, 3.0);
        let ll = crate::sensitivity::local_linear_sensitivity(
            &KernelSpec::uniform(),
            crate::data_model::Interval::unit(),
            crate::data_model::Interval::unit(),
            None,
            10,
            10,
        );
        let noise = NoiseSpec::Calibrated { epsilon: 1.0, sensitivity: ll };
        assert!(matches!(
            dp_rdd_estimate(Design::SharpLl, &d, 0.0, &KernelSpec::uniform(), 1.0, &noise, None, &s),
            Err(Error::InfiniteSensitivity { .. })
        ));
    }
}
