//! Identification with random sets: interval realizations, the containment
//! functional, decision mappings, the Bayesian credible region and a
//! computational fit of the boundary density of a decision mapping.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{ParamSpace, RngStream};
use crate::error::{invalid, Error, Result};
use crate::numerics::{bisect, golden_section};

/// Closed interval realization `[lo, hi]` of a random set in Θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalSet {
    /// Interval inside the unit parameter space.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        Self::within(lo, hi, &ParamSpace::unit())
    }

    pub fn within(lo: f64, hi: f64, theta: &ParamSpace) -> Result<Self> {
        if !(theta.lo <= lo && lo <= hi && hi <= theta.hi) {
            return invalid(format!("[{lo}, {hi}] is not an interval inside [{}, {}]", theta.lo, theta.hi));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains_set(&self, other: &IntervalSet) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Limit random set equal to `[0, θ0]` or `[θ0, 1]` with probability ½ each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleRandomSet {
    pub theta0: f64,
}

impl ExampleRandomSet {
    pub fn new(theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return invalid(format!("theta0 must lie in (0, 1), got {theta0}"));
        }
        Ok(Self { theta0 })
    }
}

pub fn sample_example_set(set: &ExampleRandomSet, stream: &RngStream) -> IntervalSet {
    if stream.rng().random::<bool>() {
        IntervalSet { lo: 0.0, hi: set.theta0 }
    } else {
        IntervalSet { lo: set.theta0, hi: 1.0 }
    }
}

/// Law of a random interval for the containment functional.
#[derive(Debug, Clone, PartialEq)]
pub enum SetLaw {
    Example(ExampleRandomSet),
    Empirical(Vec<IntervalSet>),
}

/// `C(K) = P(T ⊆ K)`: the two-term closed form for the example set, the
/// empirical frequency for a sample of realizations.
pub fn containment(law: &SetLaw, k: &IntervalSet) -> f64 {
    match law {
        SetLaw::Example(s) => {
            let left = IntervalSet { lo: 0.0, hi: s.theta0 };
            let right = IntervalSet { lo: s.theta0, hi: 1.0 };
            0.5 * f64::from(u8::from(k.contains_set(&left))) + 0.5 * f64::from(u8::from(k.contains_set(&right)))
        }
        SetLaw::Empirical(sets) => {
            if sets.is_empty() {
                return f64::NAN;
            }
            sets.iter().filter(|s| k.contains_set(s)).count() as f64 / sets.len() as f64
        }
    }
}

/// Minimizer over the realization of a strictly convex `f`, by golden-section
/// search to 1e-10.
pub fn decision_map<F: Fn(f64) -> f64>(realization: &IntervalSet, f: F) -> f64 {
    if realization.width() == 0.0 {
        return realization.lo;
    }
    golden_section(f, realization.lo, realization.hi, 1e-10).clamp(realization.lo, realization.hi)
}

/// Minimizer of the example decision function: the endpoint of the
/// realization that is not within `delta` of the boundary of Θ = [0, 1].
pub fn example_decision_f(realization: &IntervalSet, delta: f64) -> Result<f64> {
    let near_lo = realization.lo.abs() < delta;
    let near_hi = (realization.hi - 1.0).abs() < delta;
    match (near_lo, near_hi) {
        (true, false) => Ok(realization.hi),
        (false, true) => Ok(realization.lo),
        _ => Err(Error::AmbiguousRealization { lo: realization.lo, hi: realization.hi }),
    }
}

/// Uniform draw from the realization.
pub fn uniform_selection(realization: &IntervalSet, stream: &RngStream) -> f64 {
    realization.lo + realization.width() * stream.rng().random::<f64>()
}

/// Density of uniform selection from the example set: `0.5/θ0` below θ0,
/// `0.5/(1−θ0)` from θ0 on, zero outside `(0, 1)`.
pub fn uniform_selection_density(theta0: f64, t: f64) -> f64 {
    if !(t > 0.0 && t < 1.0) {
        0.0
    } else if t < theta0 {
        0.5 / theta0
    } else {
        0.5 / (1.0 - theta0)
    }
}

/// Normalizing constant `C(t) = −1/ln(t(1−t))` of the posterior.
pub fn posterior_constant(t: f64) -> f64 {
    -1.0 / (t * (1.0 - t)).ln()
}

/// Posterior `p(θ; t) = C/(1−θ)` for `θ ≤ t` and `C/θ` for `θ > t`.
pub fn posterior_density(t: f64, theta: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) || !(theta > 0.0 && theta < 1.0) {
        return invalid(format!("t and theta must lie in (0, 1), got {t}, {theta}"));
    }
    let c = posterior_constant(t);
    Ok(if theta <= t { c / (1.0 - theta) } else { c / theta })
}

/// Posterior mass of `[z, 1 − z]` for `z ≤ min(t, 1 − t)`: `1 + 2C ln(1 − z)`.
pub fn posterior_mass_symmetric(t: f64, z: f64) -> f64 {
    1.0 + 2.0 * posterior_constant(t) * (1.0 - z).ln()
}

/// Posterior mass of an arbitrary interval `[a, b] ⊆ (0, 1)`.
pub fn posterior_mass(t: f64, a: f64, b: f64) -> f64 {
    let c = posterior_constant(t);
    // antiderivative: −C ln(1−θ) below t, C ln θ above t
    let cdf = |x: f64| {
        if x <= t {
            -c * (1.0 - x).ln()
        } else {
            -c * (1.0 - t).ln() + c * (x / t).ln()
        }
    };
    cdf(b) - cdf(a)
}

/// Symmetric credible region `[z, 1 − z]` of posterior mass `1 − α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleRegion {
    pub t: f64,
    pub alpha: f64,
    /// Root of `G(z) = mass([z, 1−z]) − (1 − α)` by bisection.
    pub z_numeric: f64,
    pub mass_numeric: f64,
    /// Closed form `1 − (t(1−t))^α`; it encloses posterior mass `1 − 2α`.
    pub z_closed_form: f64,
    /// Posterior mass of `[z_closed_form, 1 − z_closed_form]`, equal to `1 − 2α`.
    pub mass_closed_form: f64,
    /// Closed form consistent with the posterior, `1 − (t(1−t))^{α/2}`.
    pub z_consistent: f64,
    pub discrepancy: f64,
}

pub fn credible_region(t: f64, alpha: f64) -> Result<CredibleRegion> {
    if !(t > 0.0 && t < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("t and alpha must lie in (0, 1), got {t}, {alpha}"));
    }
    let target = 1.0 - alpha;
    let m = t.min(1.0 - t);
    let g = |z: f64| posterior_mass_symmetric(t, z) - target;
    if g(m) > 0.0 {
        return Err(Error::FormInfeasible { t, mass: target });
    }
    let mut z = bisect(g, 0.0, m, 1e-15, 200);
    // polish until |G| < 1e-10
    for _ in 0..5 {
        let gz = g(z);
        if gz.abs() < 1e-12 {
            break;
        }
        let slope = -2.0 * posterior_constant(t) / (1.0 - z);
        z = (z - gz / slope).clamp(0.0, m);
    }
    let z_closed_form = 1.0 - (t * (1.0 - t)).powf(alpha);
    let z_consistent = 1.0 - (t * (1.0 - t)).powf(alpha / 2.0);
    let mass_closed_form = if z_closed_form <= m {
        posterior_mass_symmetric(t, z_closed_form)
    } else {
        posterior_mass(t, z_closed_form.min(1.0 - z_closed_form), z_closed_form.max(1.0 - z_closed_form))
    };
    Ok(CredibleRegion {
        t,
        alpha,
        z_numeric: z,
        mass_numeric: posterior_mass_symmetric(t, z),
        z_closed_form,
        mass_closed_form,
        z_consistent,
        discrepancy: z_closed_form - z,
    })
}

/// Shifted Legendre polynomials `h_0..h_R` on `[0, 1]` at `z`.
pub fn shifted_legendre(r: usize, z: f64) -> Vec<f64> {
    let x = 2.0 * z - 1.0;
    let mut out = Vec::with_capacity(r + 1);
    out.push(1.0);
    if r >= 1 {
        out.push(x);
    }
    for n in 1..r {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

/// Fitted boundary density `μ̂ = Σ α̂_r h_r` of a decision mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionDensityFit {
    pub coefficients: Vec<f64>,
    pub k: usize,
    pub residual_norm: f64,
    /// `(1/K) Σ_k Σ_r α̂_r Q_rk − 1`; present when the constraint is active.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_residual: Option<f64>,
    pub constrained: bool,
    /// Signed (outward-normal) boundary measure instead of the unsigned one.
    pub signed: bool,
}

impl DecisionDensityFit {
    pub fn density(&self, z: f64) -> f64 {
        shifted_legendre(self.coefficients.len() - 1, z).iter().zip(&self.coefficients).map(|(h, a)| h * a).sum()
    }
}

/// Boundary "surface integrals" of `[a, b]`: `H_r = a h_r(a) + b h_r(b)` and
/// `Q_r = h_r(a) + h_r(b)`, or with signs `−1` at `a` and `+1` at `b`.
fn boundary_integrals(set: &IntervalSet, r: usize, signed: bool) -> (Vec<f64>, Vec<f64>) {
    let ha = shifted_legendre(r, set.lo);
    let hb = shifted_legendre(r, set.hi);
    let s = if signed { -1.0 } else { 1.0 };
    let h = (0..=r).map(|j| s * set.lo * ha[j] + set.hi * hb[j]).collect();
    let q = (0..=r).map(|j| s * ha[j] + hb[j]).collect();
    (h, q)
}

/// Least-squares fit of the boundary density over a θ grid, optionally
/// subject to `(1/K) Σ_k Σ_r α_r Q_rk = 1`, solved through its KKT system.
pub fn fit_decision_density<S>(
    theta_grid: &[f64],
    sampler: S,
    r: usize,
    constraint: bool,
    signed: bool,
    stream: &RngStream,
) -> Result<DecisionDensityFit>
where
    S: Fn(f64, &RngStream) -> IntervalSet,
{
    let k = theta_grid.len();
    if k < r + 2 {
        return invalid(format!("need K >= R + 2 grid points, got K = {k}, R = {r}"));
    }
    let p = r + 1;
    let mut a = DMatrix::zeros(k, p);
    let mut q = DVector::zeros(p);
    for (i, &th) in theta_grid.iter().enumerate() {
        let set = sampler(th, &stream.substream(i as u64));
        let (h, qq) = boundary_integrals(&set, r, signed);
        for j in 0..p {
            a[(i, j)] = h[j];
            q[j] += qq[j] / k as f64;
        }
    }
    let y = DVector::from_column_slice(theta_grid);
    let ata = a.transpose() * &a;
    let aty = a.transpose() * &y;
    let rank_of = |m: &DMatrix<f64>| {
        let sv = m.clone().svd(false, false).singular_values;
        let max = sv.max();
        sv.iter().filter(|&&s| s > max * 1e-12).count()
    };
    let alpha: DVector<f64> = if constraint {
        let mut kkt = DMatrix::zeros(p + 1, p + 1);
        kkt.view_mut((0, 0), (p, p)).copy_from(&(2.0 * &ata));
        for j in 0..p {
            kkt[(j, p)] = q[j];
            kkt[(p, j)] = q[j];
        }
        let mut rhs = DVector::zeros(p + 1);
        rhs.rows_mut(0, p).copy_from(&(2.0 * &aty));
        rhs[p] = 1.0;
        let rank = rank_of(&kkt);
        if rank < p + 1 {
            return Err(Error::RankDeficient { rank, dim: p + 1 });
        }
        let sol = kkt.lu().solve(&rhs).ok_or(Error::RankDeficient { rank, dim: p + 1 })?;
        sol.rows(0, p).into_owned()
    } else {
        let rank = rank_of(&ata);
        if rank < p {
            return Err(Error::RankDeficient { rank, dim: p });
        }
        ata.cholesky().ok_or(Error::RankDeficient { rank, dim: p })?.solve(&aty)
    };
    let resid = &y - &a * &alpha;
    Ok(DecisionDensityFit {
        coefficients: alpha.iter().copied().collect(),
        k,
        residual_norm: resid.norm(),
        constraint_residual: constraint.then(|| q.dot(&alpha) - 1.0),
        constrained: constraint,
        signed,
    })
}

/// Decision from a fitted density: `Σ α̂_r H_r(T)` projected onto `T`.
pub fn predict_from_fit(fit: &DecisionDensityFit, realization: &IntervalSet) -> f64 {
    let r = fit.coefficients.len() - 1;
    let (h, _) = boundary_integrals(realization, r, fit.signed);
    let v: f64 = h.iter().zip(&fit.coefficients).map(|(h, a)| h * a).sum();
    v.clamp(realization.lo, realization.hi)
}

/// Selection rule used in the consistency experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Selector {
    /// Interior endpoint, [`example_decision_f`].
    ExampleF {
        delta: f64,
    },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub n: u64,
    pub mae: f64,
    /// Realizations where the example rule found no unique interior endpoint;
    /// their midpoint is used.
    pub ambiguous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub theta0: f64,
    pub selector: Selector,
    pub noise_scale: f64,
    pub points: Vec<ConsistencyPoint>,
    pub terminal_mae: f64,
}

/// Finite-N realization: `[0, θ̂]` or `[θ̂, 1]` with probability ½ each,
/// where `θ̂ = θ0 + s Z/√N` clamped to `[0, 1]`.
pub fn finite_sample_set(theta0: f64, n: u64, noise_scale: f64, stream: &RngStream) -> IntervalSet {
    let mut rng = stream.rng();
    let left: bool = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    let est = (theta0 + noise_scale * z / (n as f64).sqrt()).clamp(0.0, 1.0);
    if left {
        IntervalSet { lo: 0.0, hi: est }
    } else {
        IntervalSet { lo: est, hi: 1.0 }
    }
}

/// Mean absolute error of a selection rule applied to finite-N realizations.
pub fn decision_consistency_experiment(
    theta0: f64,
    n_grid: &[u64],
    replications: usize,
    selector: Selector,
    noise_scale: f64,
    stream: &RngStream,
) -> Result<ConsistencyReport> {
    ExampleRandomSet::new(theta0)?;
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("N grid must be non-empty and strictly increasing");
    }
    if replications == 0 {
        return invalid("need at least one replication");
    }
    let mut points = Vec::new();
    for (gi, &n) in n_grid.iter().enumerate() {
        let cell = stream.substream(gi as u64);
        let (err, amb) = (0..replications as u64)
            .into_par_iter()
            .map(|i| {
                let s = cell.substream(i);
                let set = finite_sample_set(theta0, n, noise_scale, &s.substream(0));
                let (pick, amb) = match selector {
                    Selector::ExampleF { delta } => match example_decision_f(&set, delta) {
                        Ok(v) => (v, 0usize),
                        Err(_) => (0.5 * (set.lo + set.hi), 1),
                    },
                    Selector::Uniform => (uniform_selection(&set, &s.substream(1)), 0),
                };
                ((pick - theta0).abs(), amb)
            })
            .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        points.push(ConsistencyPoint { n, mae: err / replications as f64, ambiguous: amb });
    }
    Ok(ConsistencyReport {
        theta0,
        selector,
        noise_scale,
        terminal_mae: points.last().map_or(f64::NAN, |p| p.mae),
        points,
    })
}
