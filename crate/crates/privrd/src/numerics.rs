//! Small numerical helpers: normal distribution functions, Laplace sampling,
//! quadrature, root finding and distribution distances.

use rand::Rng;
use statrs::function::erf::{erf, erfc};

use crate::data_model::StreamRng;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    if x < -3.0 {
        0.5 * erfc(-x / SQRT_2)
    } else if x > 3.0 {
        1.0 - 0.5 * erfc(x / SQRT_2)
    } else {
        0.5 * (1.0 + erf(x / SQRT_2))
    }
}

/// Upper tail `P(Z > x)`.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}

/// Draw from `Lap(0, scale)` by inverting the CDF at a uniform draw.
/// Scale 0 gives 0; infinite scale gives a signed infinity.
pub fn sample_laplace(rng: &mut StreamRng, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    laplace_inverse_cdf(u, scale)
}

/// Inverse CDF of `Lap(0, scale)` at `0.5 + u`, with `u` in `[-0.5, 0.5)`.
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let s = if u < 0.0 { -1.0 } else { 1.0 };
    let tail = 1.0 - 2.0 * u.abs();
    if scale.is_infinite() {
        return s * f64::INFINITY;
    }
    if tail <= 0.0 {
        return s * f64::INFINITY;
    }
    -s * scale * tail.ln()
}

/// Laplace scale with the given variance.
pub fn laplace_scale_for_variance(var: f64) -> f64 {
    (var / 2.0).sqrt()
}

/// Mills-type term `exp(1/(2b²) - x/b) Φ(x - 1/b)` computed without overflow.
fn laplace_normal_term(x: f64, b: f64) -> f64 {
    let u = 1.0 / b - x;
    if u >= 0.0 {
        // = φ(x) · Φ(-u)/φ(u)
        let mills = if u < 30.0 {
            norm_sf(u) / norm_pdf(u)
        } else {
            let u2 = u * u;
            (1.0 - 1.0 / u2 + 3.0 / (u2 * u2) - 15.0 / (u2 * u2 * u2)) / u
        };
        norm_pdf(x) * mills
    } else {
        ((0.5 / b - x) / b).exp() * norm_cdf(-u)
    }
}

/// CDF of `Z + L` with `Z ~ N(0,1)` and `L ~ Lap(0, b)`.
pub fn normal_laplace_cdf(x: f64, b: f64) -> f64 {
    if b == 0.0 {
        return norm_cdf(x);
    }
    let v = norm_cdf(x) - 0.5 * laplace_normal_term(x, b) + 0.5 * laplace_normal_term(-x, b);
    v.clamp(0.0, 1.0)
}

/// Two-sided critical value `q` with `P(|Z + L| > q) = alpha` for
/// `L ~ Lap(0, b)`.
pub fn normal_laplace_two_sided_critical(alpha: f64, b: f64) -> f64 {
    // The convolution is symmetric, so P(|X| > q) = 2 (1 - F(q)).
    let target = 1.0 - alpha / 2.0;
    let mut hi = norm_quantile(target).max(1.0);
    if b > 0.0 {
        hi += b * (1.0 / alpha).ln() + 1.0;
    }
    while normal_laplace_cdf(hi, b) < target {
        hi *= 2.0;
    }
    bisect(|q| normal_laplace_cdf(q, b) - target, 0.0, hi, 1e-12, 200)
}

/// Root of a continuous function with a sign change on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64 {
    let mut flo = f(lo);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // Endpoints are candidates too: the search interval never includes them
    // exactly, so compare to return a boundary minimizer cleanly.
    let (fa, fb, fm) = (f(a), f(b), f(mid));
    if fa <= fm && fa <= fb {
        a
    } else if fb <= fm {
        b
    } else {
        mid
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` with `panels`
/// panels of `order` points each.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let s: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum();
        total += 0.5 * h * s;
    }
    total
}

/// Empirical `p`-quantile (type 7, linear interpolation) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sort a copy of `xs`, NaN last.
pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Kolmogorov distance between the empirical CDF of sorted `sample` and the
/// CDF `cdf`, where `cdf_left(x)` returns `P(X < x)` so that atoms of the
/// reference law are handled exactly.
pub fn ks_distance<F, G>(sample: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sample.len() {
        let x = sample[i];
        let mut j = i;
        while j < sample.len() && sample[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((below - cdf_left(x)).abs());
        d = d.max((upto - cdf(x)).abs());
        i = j;
    }
    d
}

/// Two-sample Kolmogorov distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Lévy distance between the empirical CDF of sorted `sample` and a point
/// mass at `x0`: the smallest `e` with `F(x0 - e) - e <= 0` and
/// `F(x0 + e) + e >= 1`, i.e. a quantile-based spread measure.
pub fn levy_distance_point_mass(sample: &[f64], x0: f64) -> f64 {
    let n = sample.len();
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    // Fraction strictly below x0 - e must be <= e; fraction strictly above
    // x0 + e must be <= e.
    let below = |e: f64| sample.partition_point(|&v| v < x0 - e) as f64 / nf;
    let above = |e: f64| (n - sample.partition_point(|&v| v <= x0 + e)) as f64 / nf;
    let ok = |e: f64| below(e) <= e && above(e) <= e;
    if ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::RngStream;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1, 8);
        assert!((v - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
        let (_, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_tails() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(-0.5) - 0.308_537_538_725_986_9).abs() < 1e-15);
        assert!(norm_cdf(-9.5) < 1e-20 && norm_cdf(-9.5) > 0.0);
    }

    #[test]
    fn laplace_inverse_cdf_is_symmetric_and_scaled() {
        assert_eq!(laplace_inverse_cdf(0.0, 2.0), 0.0);
        let q = laplace_inverse_cdf(0.25, 1.0);
        assert!((q - 2f64.ln()).abs() < 1e-15);
        assert_eq!(laplace_inverse_cdf(-0.25, 1.0), -q);
        assert_eq!(laplace_inverse_cdf(0.1, 0.0), 0.0);
    }

    #[test]
    fn normal_laplace_cdf_matches_direct_quadrature() {
        for &b in &[0.01, 0.3, 1.0, 5.0, 80.0] {
            for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5, 10.0] {
                // P(Z + L <= x) = E_L[Φ(x - L)], integrated in the Laplace variable.
                let f = |l: f64| norm_cdf(x - l) * (-(l.abs()) / b).exp() / (2.0 * b);
                let lim = 60.0 * b + 20.0;
                // split at the Laplace cusp and at x
                let (a, c) = (x.min(0.0), x.max(0.0));
                let direct =
                    integrate(f, -lim, a, 2000, 8) + integrate(f, a, c, 200, 8) + integrate(f, c, lim, 2000, 8);
                let v = normal_laplace_cdf(x, b);
                assert!((v - direct).abs() < 1e-9, "b={b} x={x}: {v} vs {direct}");
            }
        }
    }

    #[test]
    fn critical_value_reduces_to_normal() {
        let q = normal_laplace_two_sided_critical(0.05, 0.0);
        assert!((q - 1.959_963_984_540_054).abs() < 1e-9);
        let q2 = normal_laplace_two_sided_critical(0.05, 1.0);
        assert!(q2 > q);
        assert!((2.0 * (1.0 - normal_laplace_cdf(q2, 1.0)) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn ks_distances() {
        let s = sorted(&[0.1, 0.2, 0.3, 0.4]);
        let d = ks_distance(&s, |x| x.clamp(0.0, 1.0), |x| x.clamp(0.0, 1.0));
        // ECDF reaches 1 at 0.4 where F = 0.4
        assert!((d - 0.6).abs() < 1e-12);
        assert_eq!(ks_two_sample(&s, &s), 0.0);
        assert!(levy_distance_point_mass(&[0.5, 0.5], 0.5) == 0.0);
        let l = levy_distance_point_mass(&sorted(&[0.49, 0.5, 0.51]), 0.5);
        assert!(l > 0.0 && l <= 0.01 + 1e-12);
    }

    #[test]
    fn golden_section_handles_boundaries() {
        let m = golden_section(|z| (z - 0.3) * (z - 0.3), 0.5, 1.0, 1e-10);
        assert_eq!(m, 0.5);
        let m = golden_section(|z| (z - 0.3) * (z - 0.3), 0.0, 0.7, 1e-10);
        assert!((m - 0.3).abs() < 1e-9);
    }

    #[test]
    fn laplace_moments() {
        let mut rng = RngStream::new(1, 0).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| sample_laplace(&mut rng, 0.7)).collect();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 0.02);
        assert!((v / (2.0 * 0.49) - 1.0).abs() < 0.05);
    }
}
