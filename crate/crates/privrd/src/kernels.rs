//! Kernel functions, their support metadata and one-sided kernel weights.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelId {
    Uniform,
    Triangular,
    Epanechnikov,
    Gaussian,
}

/// A kernel together with the support facts the sensitivity results use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub id: KernelId,
    /// Support radius; infinite for the Gaussian kernel.
    pub u0: f64,
    /// `sup_u K(u)`.
    pub k_bar: f64,
    /// `inf K(u)` over the open support `(-u0, u0)`.
    pub k_under: f64,
    /// Whether K is continuous at the edge of its support (K(±u0) = 0).
    pub boundary_continuous: bool,
}

impl KernelSpec {
    pub fn new(id: KernelId) -> Self {
        match id {
            KernelId::Uniform => Self { id, u0: 1.0, k_bar: 0.5, k_under: 0.5, boundary_continuous: false },
            KernelId::Triangular => Self { id, u0: 1.0, k_bar: 1.0, k_under: 0.0, boundary_continuous: true },
            KernelId::Epanechnikov => Self { id, u0: 1.0, k_bar: 0.75, k_under: 0.0, boundary_continuous: true },
            KernelId::Gaussian => Self {
                id,
                u0: f64::INFINITY,
                k_bar: 1.0 / (2.0 * std::f64::consts::PI).sqrt(),
                k_under: 0.0,
                boundary_continuous: true,
            },
        }
    }

    pub fn uniform() -> Self {
        Self::new(KernelId::Uniform)
    }

    pub fn triangular() -> Self {
        Self::new(KernelId::Triangular)
    }

    pub fn epanechnikov() -> Self {
        Self::new(KernelId::Epanechnikov)
    }

    pub fn gaussian() -> Self {
        Self::new(KernelId::Gaussian)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "uniform" | "rectangular" => Ok(Self::uniform()),
            "triangular" | "triangle" => Ok(Self::triangular()),
            "epanechnikov" => Ok(Self::epanechnikov()),
            "gaussian" | "normal" => Ok(Self::gaussian()),
            other => invalid(format!("unknown kernel `{other}`")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.id {
            KernelId::Uniform => "uniform",
            KernelId::Triangular => "triangular",
            KernelId::Epanechnikov => "epanechnikov",
            KernelId::Gaussian => "gaussian",
        }
    }

    pub fn has_bounded_support(&self) -> bool {
        self.u0.is_finite()
    }

    pub fn eval(&self, u: f64) -> f64 {
        eval_kernel(self, u)
    }

    /// Constant `C_K` of the AMSE-optimal bandwidth for a jump in a local
    /// linear regression at a boundary point,
    /// `h = C_K ((σ₊² + σ₋²) / (f (m₊'' − m₋'')²))^{1/5} N^{-1/5}`.
    ///
    /// With equivalent boundary kernel `k*(u) = (μ₂ − μ₁u)K(u)/(μ₀μ₂ − μ₁²)`
    /// on `[0, u0)`, bias constant `B = ½∫u²k*` and variance constant `V = ∫k*²`,
    /// `C_K = (V / (4 B²))^{1/5}`: 3.4375 for the triangular kernel and
    /// `144^{1/5} ≈ 2.70` for the uniform kernel on `[-1, 1)`.
    pub fn boundary_bandwidth_constant(&self) -> f64 {
        let upper = if self.u0.is_finite() { self.u0 } else { 40.0 };
        let mom = |j: i32| integrate(|u| u.powi(j) * self.eval(u), 0.0, upper, 400, 8);
        let (m0, m1, m2, m3) = (mom(0), mom(1), mom(2), mom(3));
        let det = m0 * m2 - m1 * m1;
        let b = 0.5 * (m2 * m2 - m1 * m3) / det;
        let v = integrate(
            |u| {
                let k = (m2 - m1 * u) * self.eval(u) / det;
                k * k
            },
            0.0,
            upper,
            400,
            8,
        );
        (v / (4.0 * b * b)).powf(0.2)
    }
}

/// Kernel value at `u`; exactly zero outside `[-u0, u0]` for bounded kernels.
pub fn eval_kernel(spec: &KernelSpec, u: f64) -> f64 {
    let a = u.abs();
    match spec.id {
        KernelId::Uniform => {
            if a < 1.0 {
                0.5
            } else {
                0.0
            }
        }
        KernelId::Triangular => {
            if a < 1.0 {
                1.0 - a
            } else {
                0.0
            }
        }
        KernelId::Epanechnikov => {
            if a < 1.0 {
                0.75 * (1.0 - a * a)
            } else {
                0.0
            }
        }
        KernelId::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
    }
}

/// Half-open interval of the running variable that receives positive kernel
/// weight on one side of the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Neighborhood {
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// K-h-neighborhoods `(c − u0 h, c)` and `[c, c + u0 h)`.
pub fn kh_neighborhoods(spec: &KernelSpec, c: f64, h: f64) -> (Neighborhood, Neighborhood) {
    let r = spec.u0 * h;
    (
        Neighborhood { lo: c - r, hi: c, lo_closed: false, hi_closed: false },
        Neighborhood { lo: c, hi: c + r, lo_closed: true, hi_closed: false },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    /// Whether `x` belongs to this side of cutoff `c` (`x >= c` is right).
    pub fn holds(&self, x: f64, c: f64) -> bool {
        match self {
            Side::Left => x < c,
            Side::Right => x >= c,
        }
    }
}

/// Unnormalized kernel weights `K((x − c)/h)` for observations on `side`,
/// zero for observations on the other side.
pub fn raw_side_weights(spec: &KernelSpec, xs: &[f64], c: f64, h: f64, side: Side) -> Vec<f64> {
    xs.iter().map(|&x| if side.holds(x, c) { eval_kernel(spec, (x - c) / h) } else { 0.0 }).collect()
}

/// Normalized one-sided kernel weights summing to one.
pub fn kernel_weights(spec: &KernelSpec, xs: &[f64], c: f64, h: f64, side: Side) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return invalid(format!("bandwidth must be > 0, got {h}"));
    }
    let mut w = raw_side_weights(spec, xs, c, h, side);
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptySide { side: side.name() });
    }
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(eval_kernel(&KernelSpec::uniform(), 0.5), 0.5);
        assert_eq!(eval_kernel(&KernelSpec::triangular(), 0.0), 1.0);
        assert_eq!(eval_kernel(&KernelSpec::triangular(), 1.0), 0.0);
        assert!((eval_kernel(&KernelSpec::gaussian(), 0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        for k in [KernelSpec::uniform(), KernelSpec::triangular(), KernelSpec::epanechnikov()] {
            assert_eq!(k.eval(1.0000001), 0.0);
            assert_eq!(k.eval(-3.0), 0.0);
        }
    }

    #[test]
    fn metadata_matches_grid() {
        for id in [KernelId::Uniform, KernelId::Triangular, KernelId::Epanechnikov, KernelId::Gaussian] {
            let k = KernelSpec::new(id);
            let lim = if k.u0.is_finite() { k.u0 } else { 8.0 };
            let grid: Vec<f64> = (1..200_000).map(|i| -lim + 2.0 * lim * i as f64 / 200_000.0).collect();
            let sup = grid.iter().map(|&u| k.eval(u)).fold(0.0, f64::max);
            assert!((sup - k.k_bar).abs() < 1e-9, "{id:?}");
            let inf = grid.iter().map(|&u| k.eval(u)).fold(f64::INFINITY, f64::min);
            if id == KernelId::Uniform {
                assert_eq!(k.k_under, k.k_bar);
            } else {
                assert!(inf < 1e-4 || id == KernelId::Gaussian);
            }
            for &u in &grid[..100] {
                assert_eq!(k.eval(u), k.eval(-u));
            }
        }
    }

    #[test]
    fn neighborhoods() {
        let (l, r) = kh_neighborhoods(&KernelSpec::uniform(), 0.0, 0.2);
        assert_eq!((l.lo, l.hi, r.lo, r.hi), (-0.2, 0.0, 0.0, 0.2));
        assert!(r.contains(0.0) && !l.contains(0.0) && !r.contains(0.2));
        let (l, r) = kh_neighborhoods(&KernelSpec::gaussian(), 0.0, 1.0);
        assert_eq!((l.lo, r.hi), (f64::NEG_INFINITY, f64::INFINITY));
        let (l, r) = kh_neighborhoods(&KernelSpec::triangular(), 1.0, 0.5);
        assert_eq!((l.lo, l.hi, r.lo, r.hi), (0.5, 1.0, 1.0, 1.5));
    }

    #[test]
    fn weights() {
        let w = kernel_weights(&KernelSpec::uniform(), &[0.1, 0.1], 0.0, 1.0, Side::Right).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
        let w = kernel_weights(&KernelSpec::triangular(), &[0.25, 0.75], 0.0, 1.0, Side::Right).unwrap();
        assert!((w[0] - 0.75).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
        assert!(matches!(
            kernel_weights(&KernelSpec::uniform(), &[-0.1, -0.2], 0.0, 1.0, Side::Right),
            Err(Error::EmptySide { side: "right" })
        ));
    }

    #[test]
    fn boundary_constants() {
        assert!((KernelSpec::triangular().boundary_bandwidth_constant() - 3.4375).abs() < 1e-4);
        // 144^{1/5} on [-1, 1); the tabulated 5.40 is for the kernel on [-1/2, 1/2]
        let u = KernelSpec::uniform().boundary_bandwidth_constant();
        assert!((u - 144f64.powf(0.2)).abs() < 1e-6, "{u}");
    }
}
