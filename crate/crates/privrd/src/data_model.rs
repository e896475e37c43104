//! Shared containers: datasets, parameter spaces, privacy parameters,
//! asymptotic sequences and seeded random streams.

use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Closed interval on the extended real line. Infinite endpoints mean the
/// interval is unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return invalid(format!("interval [{lo}, {hi}] is empty or NaN"));
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Length `hi - lo`; infinite for unbounded intervals.
    pub fn width(&self) -> f64 {
        if self.is_bounded() {
            self.hi - self.lo
        } else {
            f64::INFINITY
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Convex compact parameter space `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub lo: f64,
    pub hi: f64,
}

impl ParamSpace {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("parameter space [{lo}, {hi}] must be finite with lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn project(&self, value: f64) -> f64 {
        project(value, self)
    }
}

impl Default for ParamSpace {
    fn default() -> Self {
        Self::unit()
    }
}

/// Clamp `value` into `[space.lo, space.hi]`. NaN maps to `space.lo`.
pub fn project(value: f64, space: &ParamSpace) -> f64 {
    if value.is_nan() {
        return space.lo;
    }
    value.max(space.lo).min(space.hi)
}

/// Privacy level of an (ε, δ)-differentially private mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return invalid(format!("epsilon must be >= 0, got {epsilon}"));
        }
        if !(0.0..1.0).contains(&delta) {
            return invalid(format!("delta must lie in [0, 1), got {delta}"));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Self {
        Self { epsilon, delta: 0.0 }
    }
}

/// Positive sequence `coeff * N^n_power * (ln N)^log_power`, defined for N >= 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub coeff: f64,
    pub n_power: f64,
    pub log_power: f64,
}

/// Limit class of a [`SequenceSpec`] as N grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeqLimit {
    Zero,
    Finite(f64),
    Infinite,
}

impl SequenceSpec {
    pub fn new(coeff: f64, n_power: f64, log_power: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return invalid(format!("sequence coefficient must be finite and > 0, got {coeff}"));
        }
        if !(n_power.is_finite() && log_power.is_finite()) {
            return invalid("sequence exponents must be finite");
        }
        Ok(Self { coeff, n_power, log_power })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, 0.0, 0.0)
    }

    /// `c * N^p`.
    pub fn power(c: f64, p: f64) -> Result<Self> {
        Self::new(c, p, 0.0)
    }

    pub fn value(&self, n: u64) -> f64 {
        seq_value(self, n)
    }

    pub fn limit(&self) -> SeqLimit {
        seq_limit(self)
    }

    /// Pointwise product of two sequences, again in the family.
    pub fn mul(&self, other: &SequenceSpec) -> SequenceSpec {
        SequenceSpec {
            coeff: self.coeff * other.coeff,
            n_power: self.n_power + other.n_power,
            log_power: self.log_power + other.log_power,
        }
    }

    /// Reciprocal sequence.
    pub fn recip(&self) -> SequenceSpec {
        SequenceSpec { coeff: 1.0 / self.coeff, n_power: -self.n_power, log_power: -self.log_power }
    }
}

/// Value of the sequence at `n`. Evaluated in log space so that large N does
/// not overflow intermediate powers.
pub fn seq_value(spec: &SequenceSpec, n: u64) -> f64 {
    let n = n.max(2) as f64;
    let ln_n = n.ln();
    let log_val = spec.coeff.ln() + spec.n_power * ln_n + spec.log_power * ln_n.ln();
    log_val.exp()
}

/// Limit class as N → ∞. The polynomial exponent dominates the logarithmic one.
pub fn seq_limit(spec: &SequenceSpec) -> SeqLimit {
    let lead = if spec.n_power != 0.0 { spec.n_power } else { spec.log_power };
    if lead < 0.0 {
        SeqLimit::Zero
    } else if lead > 0.0 {
        SeqLimit::Infinite
    } else {
        SeqLimit::Finite(spec.coeff)
    }
}

/// Hoeffding-type regularity rate `2d exp(-2 N κ² / diam²)`.
pub fn regularity_rate(n: u64, kappa: f64, d: u32, diam: f64) -> f64 {
    2.0 * d as f64 * (-2.0 * n as f64 * kappa * kappa / (diam * diam)).exp()
}

/// Generator type behind every [`RngStream`].
pub type StreamRng = ChaCha12Rng;

/// Reproducible source of randomness identified by `(seed, stream_id)`.
///
/// The seed fixes the ChaCha key and the stream id selects one of its 2^64
/// independent streams, so equal pairs replay the same draws and distinct
/// stream ids never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream `k`. Children of distinct parents use distinct keys, so
    /// trees of streams can be built without coordination.
    pub fn substream(&self, k: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0xA076_1D64_78BD_642F)));
        RngStream { seed: key, stream_id: k }
    }
}

/// Observation of the weighted shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedObs {
    pub x: f64,
    pub w: f64,
}

/// Observation of the RDD shape: outcome `y`, running variable `x`, optional
/// treatment `w` and optional binary indicator `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RddObs {
    pub y: f64,
    pub x: f64,
    pub w: Option<bool>,
    pub d: Option<bool>,
}

impl RddObs {
    pub fn new(y: f64, x: f64) -> Self {
        Self { y, x, w: None, d: None }
    }
}

/// Records of a dataset; every record has the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Records {
    Univariate(Vec<f64>),
    Weighted(Vec<WeightedObs>),
    Rdd(Vec<RddObs>),
}

/// Which record shape a dataset holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Univariate,
    Weighted,
    Rdd,
}

/// Declared per-field supports. `None` means unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub x: Option<Interval>,
    pub y: Option<Interval>,
    pub w: Option<Interval>,
}

/// An i.i.d. sample together with its declared support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Records,
    support: Support,
}

fn check_field(field: &'static str, v: f64, iv: Option<Interval>) -> Result<()> {
    if v.is_nan() {
        return invalid(format!("field `{field}` contains NaN"));
    }
    if let Some(iv) = iv {
        if !iv.contains(v) {
            return Err(Error::SupportViolation { field, value: v, lo: iv.lo, hi: iv.hi });
        }
    }
    Ok(())
}

impl Dataset {
    /// Build a dataset, checking every value against `support`.
    pub fn new(records: Records, support: Support) -> Result<Self> {
        match &records {
            Records::Univariate(xs) => {
                for &x in xs {
                    check_field("x", x, support.x)?;
                }
            }
            Records::Weighted(obs) => {
                for o in obs {
                    check_field("x", o.x, support.x)?;
                    check_field("w", o.w, support.w)?;
                    if o.w < 0.0 {
                        return invalid(format!("weights must be >= 0, got {}", o.w));
                    }
                }
            }
            Records::Rdd(obs) => {
                for o in obs {
                    check_field("x", o.x, support.x)?;
                    check_field("y", o.y, support.y)?;
                }
            }
        }
        Ok(Self { records, support })
    }

    pub fn univariate(xs: Vec<f64>) -> Result<Self> {
        Self::new(Records::Univariate(xs), Support::default())
    }

    pub fn weighted(obs: Vec<WeightedObs>) -> Result<Self> {
        Self::new(Records::Weighted(obs), Support::default())
    }

    pub fn rdd(obs: Vec<RddObs>) -> Result<Self> {
        Self::new(Records::Rdd(obs), Support::default())
    }

    pub fn with_support(self, support: Support) -> Result<Self> {
        Self::new(self.records, support)
    }

    pub fn records(&self) -> &Records {
        &self.records
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn shape(&self) -> Shape {
        match self.records {
            Records::Univariate(_) => Shape::Univariate,
            Records::Weighted(_) => Shape::Weighted,
            Records::Rdd(_) => Shape::Rdd,
        }
    }

    pub fn len(&self) -> usize {
        match &self.records {
            Records::Univariate(v) => v.len(),
            Records::Weighted(v) => v.len(),
            Records::Rdd(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_univariate(&self) -> Result<&[f64]> {
        match &self.records {
            Records::Univariate(v) => Ok(v),
            _ => invalid(format!("expected a univariate dataset, got {:?}", self.shape())),
        }
    }

    pub fn as_weighted(&self) -> Result<&[WeightedObs]> {
        match &self.records {
            Records::Weighted(v) => Ok(v),
            _ => invalid(format!("expected a weighted dataset, got {:?}", self.shape())),
        }
    }

    pub fn as_rdd(&self) -> Result<&[RddObs]> {
        match &self.records {
            Records::Rdd(v) => Ok(v),
            _ => invalid(format!("expected an RDD dataset, got {:?}", self.shape())),
        }
    }

    /// Number of positions at which two datasets of the same shape differ,
    /// or `None` when shapes or sizes disagree.
    pub fn hamming(&self, other: &Dataset) -> Option<usize> {
        if self.len() != other.len() {
            return None;
        }
        match (&self.records, &other.records) {
            (Records::Univariate(a), Records::Univariate(b)) => Some(a.iter().zip(b).filter(|(p, q)| p != q).count()),
            (Records::Weighted(a), Records::Weighted(b)) => Some(a.iter().zip(b).filter(|(p, q)| p != q).count()),
            (Records::Rdd(a), Records::Rdd(b)) => Some(a.iter().zip(b).filter(|(p, q)| p != q).count()),
            _ => None,
        }
    }

    /// Load a dataset of the given shape from CSV with a header row. Column
    /// names are matched case-insensitively against `x`, `y`, `w`, `d`.
    pub fn from_csv_reader<R: Read>(reader: R, shape: Shape) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let need = |name: &str| col(name).ok_or_else(|| Error::InvalidInput(format!("CSV is missing column `{name}`")));
        let parse = |s: &str, name: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("line {line}: cannot parse `{s}` in column `{name}`")))
        };
        let parse_bin = |s: &str, name: &str, line: usize| -> Result<Option<bool>> {
            if s.is_empty() || s.eq_ignore_ascii_case("na") {
                return Ok(None);
            }
            match parse(s, name, line)? {
                0.0 => Ok(Some(false)),
                1.0 => Ok(Some(true)),
                v => invalid(format!("line {line}: column `{name}` must be 0 or 1, got {v}")),
            }
        };
        let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
        let records = match shape {
            Shape::Univariate => {
                let xi = need("x")?;
                let mut xs = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    xs.push(parse(&r[xi], "x", i + 2)?);
                }
                Records::Univariate(xs)
            }
            Shape::Weighted => {
                let (xi, wi) = (need("x")?, need("w")?);
                let mut obs = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    obs.push(WeightedObs { x: parse(&r[xi], "x", i + 2)?, w: parse(&r[wi], "w", i + 2)? });
                }
                Records::Weighted(obs)
            }
            Shape::Rdd => {
                let (yi, xi) = (need("y")?, need("x")?);
                let (wi, di) = (col("w"), col("d"));
                let mut obs = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    let line = i + 2;
                    obs.push(RddObs {
                        y: parse(&r[yi], "y", line)?,
                        x: parse(&r[xi], "x", line)?,
                        w: match wi {
                            Some(j) => parse_bin(&r[j], "w", line)?,
                            None => None,
                        },
                        d: match di {
                            Some(j) => parse_bin(&r[j], "d", line)?,
                            None => None,
                        },
                    });
                }
                Records::Rdd(obs)
            }
        };
        Self::new(records, Support::default())
    }

    pub fn from_csv_path(path: impl AsRef<Path>, shape: Shape) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f, shape)
    }
}
