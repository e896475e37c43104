//! Specification tests and graphical tools for RDD: the McCrary density
//! test, power of a DP placebo test, cutoff-anchored binned means and DP
//! histograms.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{Dataset, RngStream};
use crate::error::{invalid, Error, Result};
use crate::kernels::{eval_kernel, KernelSpec};
use crate::numerics::{laplace_scale_for_variance, quantile_sorted, sample_laplace};
use crate::output::{csv_string, fmt_float, svg_line_chart, Provenance, Series};

/// Binned summary of a running variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSeries {
    /// Strictly increasing edges; bin `k` is `[edges[k], edges[k+1])`, the
    /// last bin also holding its right edge.
    pub edges: Vec<f64>,
    pub midpoints: Vec<f64>,
    /// Bin mean of y, bin count or noisy count; NaN for empty mean bins.
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
    pub empty: Vec<bool>,
}

impl BinSeries {
    pub fn to_csv(&self, provenance: Option<&Provenance>) -> Result<String> {
        let rows: Vec<Vec<String>> = (0..self.values.len())
            .map(|k| {
                vec![
                    fmt_float(self.edges[k]),
                    fmt_float(self.edges[k + 1]),
                    fmt_float(self.midpoints[k]),
                    if self.empty[k] && self.values[k].is_nan() { String::new() } else { fmt_float(self.values[k]) },
                    self.counts[k].to_string(),
                ]
            })
            .collect();
        csv_string(provenance, &["lo", "hi", "midpoint", "value", "count"], &rows)
    }

    /// Line chart of bin values against midpoints, split at `cutoff` so the
    /// two sides are drawn as separate lines.
    pub fn to_svg(&self, title: &str, cutoff: Option<f64>, provenance: Option<&Provenance>) -> Result<String> {
        let pts: Vec<(f64, f64)> =
            self.midpoints.iter().zip(&self.values).filter(|(_, v)| v.is_finite()).map(|(&m, &v)| (m, v)).collect();
        let series = match cutoff {
            Some(c) => vec![
                Series { name: "left".into(), points: pts.iter().copied().filter(|p| p.0 < c).collect() },
                Series { name: "right".into(), points: pts.iter().copied().filter(|p| p.0 >= c).collect() },
            ],
            None => vec![Series { name: "bins".into(), points: pts }],
        };
        svg_line_chart(title, "x", "value", &series, None, provenance)
    }
}

/// Edges `c + k·width` covering `[lo, hi]`, with `c` an edge.
fn anchored_edges(lo: f64, hi: f64, c: f64, width: f64) -> Vec<f64> {
    let k_lo = if lo < c { -((c - lo) / width).ceil() as i64 } else { 0 };
    let k_hi = if hi >= c { (((hi - c) / width).floor() as i64 + 1).max(1) } else { 0 };
    // An empty side still gets the edge at c.
    (k_lo..=k_hi.max(k_lo + 1)).map(|k| if k == 0 { c } else { c + k as f64 * width }).collect()
}

/// Bin index of `x` for half-open bins over `edges`; the last bin is closed.
fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let n = edges.len() - 1;
    if x < edges[0] || x > edges[n] {
        return None;
    }
    let k = edges.partition_point(|&e| e <= x);
    Some(k.saturating_sub(1).min(n - 1))
}

/// Edges for data spanning `[lo, hi]` with `c` an edge; a final edge equal
/// to `hi` is dropped when the last bin would be empty by construction.
fn data_edges(xs: &[f64], c: f64, width: f64) -> Vec<f64> {
    let lo = xs.iter().copied().fold(c, f64::min);
    let hi = xs.iter().copied().fold(c, f64::max);
    let mut edges = anchored_edges(lo, hi, c, width);
    // rounding in c + k·width can leave an extreme value just outside
    while edges[0] > lo {
        edges.insert(0, edges[0] - width);
    }
    while edges[edges.len() - 1] < hi {
        edges.push(edges[edges.len() - 1] + width);
    }
    // When hi falls exactly on an edge the closed last bin absorbs it.
    while edges.len() > 2 && edges[edges.len() - 2] >= hi && edges[edges.len() - 2] > c {
        edges.pop();
    }
    edges
}

/// Mean of y per bin of width `bin_width`, with `c` a bin edge.
///
/// Bins are `[b_k, b_{k+1})` so a record at `x = c` falls in the first bin
/// to the right of the cutoff, matching treatment `1{x ≥ c}`.
pub fn binned_means(data: &Dataset, c: f64, bin_width: f64) -> Result<BinSeries> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return invalid(format!("bin width must be > 0, got {bin_width}"));
    }
    let obs = data.as_rdd()?;
    let xs: Vec<f64> = obs.iter().map(|o| o.x).collect();
    let edges = data_edges(&xs, c, bin_width);
    let nb = edges.len() - 1;
    let mut sums = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for o in obs {
        if let Some(k) = bin_of(&edges, o.x) {
            sums[k] += o.y;
            counts[k] += 1;
        }
    }
    let values = sums.iter().zip(&counts).map(|(s, &n)| if n == 0 { f64::NAN } else { s / n as f64 }).collect();
    Ok(BinSeries {
        midpoints: edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        empty: counts.iter().map(|&n| n == 0).collect(),
        edges,
        values,
        counts,
    })
}

/// Histogram over fixed `edges` with `Lap(0, 2/ε)` noise per count, floored
/// at zero. Values outside the edges are ignored.
pub fn dp_histogram(xs: &[f64], edges: &[f64], epsilon: f64, stream: &RngStream) -> Result<BinSeries> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("edges must be strictly increasing with at least two entries");
    }
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be > 0, got {epsilon}"));
    }
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    for &x in xs {
        if let Some(k) = bin_of(edges, x) {
            counts[k] += 1;
        }
    }
    let scale = 2.0 / epsilon;
    let mut rng = stream.rng();
    let values = counts.iter().map(|&n| (n as f64 + sample_laplace(&mut rng, scale)).max(0.0)).collect();
    Ok(BinSeries {
        edges: edges.to_vec(),
        midpoints: edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        values,
        empty: counts.iter().map(|&n| n == 0).collect(),
        counts,
    })
}

/// McCrary density-discontinuity statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCrary {
    pub theta_hat: f64,
    pub sigma_theta: f64,
    pub t: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub bin_width: f64,
}

/// Local linear intercept at `c` of heights `ys` at midpoints `xs` with the
/// triangular kernel.
fn boundary_intercept(xs: &[f64], ys: &[f64], c: f64, h: f64) -> f64 {
    let k = KernelSpec::triangular();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let mut wts = Vec::with_capacity(xs.len());
    for &x in xs {
        let w = eval_kernel(&k, (x - c) / h);
        let u = x - c;
        s0 += w;
        s1 += w * u;
        s2 += w * u * u;
        wts.push(w);
    }
    let det = s2 * s0 - s1 * s1;
    if !(det > 0.0) {
        return f64::NAN;
    }
    xs.iter().zip(ys).zip(&wts).map(|((&x, &y), &w)| w * (s2 - s1 * (x - c)) / det * y).sum()
}

/// McCrary statistic at cutoff `c` with bandwidth `h`.
///
/// The first stage bins the data into `first_stage_bins` bins anchored at
/// `c` (default `⌈2√N⌉`) and uses normalized heights `count/(N·width)`. The
/// second stage fits a triangular-kernel local linear regression of the
/// heights on each side. `σ̂_θ = √((1/(Nh))·(24/5)) · (1/f̂⁺ + 1/f̂⁻)`.
pub fn mccrary_statistic(xs: &[f64], c: f64, h: f64, first_stage_bins: Option<usize>) -> Result<McCrary> {
    if !(h > 0.0) {
        return invalid(format!("bandwidth must be > 0, got {h}"));
    }
    if xs.is_empty() {
        return invalid("no observations");
    }
    let n = xs.len() as f64;
    let bins = first_stage_bins.unwrap_or_else(|| (2.0 * n.sqrt()).ceil() as usize).max(2);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    if !(width > 0.0) {
        return invalid("running variable has no spread");
    }
    let edges = data_edges(xs, c, width);
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    for &x in xs {
        if let Some(k) = bin_of(&edges, x) {
            counts[k] += 1;
        }
    }
    let mids: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let heights: Vec<f64> = counts.iter().map(|&k| k as f64 / (n * width)).collect();
    let side = |right: bool| -> (Vec<f64>, Vec<f64>) {
        mids.iter().zip(&heights).filter(|(&m, _)| if right { m > c } else { m < c }).map(|(&m, &y)| (m, y)).unzip()
    };
    let (xr, yr) = side(true);
    let (xl, yl) = side(false);
    let f_plus = boundary_intercept(&xr, &yr, c, h);
    let f_minus = boundary_intercept(&xl, &yl, c, h);
    if !(f_plus > 0.0) {
        return Err(Error::NonpositiveDensity { side: "right", value: f_plus });
    }
    if !(f_minus > 0.0) {
        return Err(Error::NonpositiveDensity { side: "left", value: f_minus });
    }
    let theta_hat = f_plus.ln() - f_minus.ln();
    let sigma_theta = (24.0 / (5.0 * n * h)).sqrt() * (1.0 / f_plus + 1.0 / f_minus);
    Ok(McCrary { theta_hat, sigma_theta, t: theta_hat / sigma_theta, f_plus, f_minus, bin_width: width })
}

/// Power of a DP placebo test in the stylized known-variance setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub rejection_rate: f64,
    /// Monte Carlo critical value of `|Z + L/se|` under the null.
    pub critical_value: f64,
    /// Binomial standard error of `rejection_rate`.
    pub mc_sd: f64,
}

/// Rejection frequency of `H0: τ = 0` for the DP t-ratio
/// `(τ̂ + L)/se` with `τ̂ ~ N(tau_true, se²)` and `L` Laplace with the given
/// variance. The critical value is the `1 − α` Monte Carlo quantile of
/// `|Z + L/se|` from an independent null simulation of the same size.
pub fn dp_test_power(
    se: f64,
    tau_true: f64,
    noise_variance: f64,
    alpha: f64,
    sims: usize,
    stream: &RngStream,
) -> Result<PowerResult> {
    if sims < 500 {
        return invalid(format!("need at least 500 simulations, got {sims}"));
    }
    if !(se > 0.0) || !(noise_variance >= 0.0) || !(alpha > 0.0 && alpha < 1.0) {
        return invalid("need se > 0, noise variance >= 0 and alpha in (0, 1)");
    }
    let scale = laplace_scale_for_variance(noise_variance);
    let draw = |s: RngStream| -> (f64, f64) {
        let mut rng = s.rng();
        let z: f64 = rng.sample(StandardNormal);
        (z, sample_laplace(&mut rng, scale))
    };
    let null_stream = stream.substream(0);
    let mut null: Vec<f64> = (0..sims as u64)
        .into_par_iter()
        .map(|i| {
            let (z, l) = draw(null_stream.substream(i));
            (z + l / se).abs()
        })
        .collect();
    null.sort_by(|a, b| a.total_cmp(b));
    let crit = quantile_sorted(&null, 1.0 - alpha);
    let alt_stream = stream.substream(1);
    let rejections: usize = (0..sims as u64)
        .into_par_iter()
        .map(|i| {
            let (z, l) = draw(alt_stream.substream(i));
            let t = (tau_true + se * z + l) / se;
            usize::from(t.abs() > crit)
        })
        .sum();
    let rate = rejections as f64 / sims as f64;
    Ok(PowerResult { rejection_rate: rate, critical_value: crit, mc_sd: (rate * (1.0 - rate) / sims as f64).sqrt() })
}
