//! Counter-based random streams and the samplers built on them.
//!
//! Every variate is a pure function of `(master_seed, stream_label, counter)`:
//! the label is hashed once into a stream key and each counter value is mixed
//! into a fresh 64-bit word. Nothing is replayed, so a single vertex weight or
//! edge Bernoulli can be re-derived in isolation and pair loops can be split
//! across threads without changing the output.

use rand_core::{impls, RngCore};
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Smallest value returned by [`Stream::uniform`]; a Bernoulli with a smaller
/// success probability can never fire.
pub const MIN_UNIFORM: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const fn fnv1a(label: &str) -> u64 {
    let bytes = label.as_bytes();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut i = 0;
    while i < bytes.len() {
        hash ^= bytes[i] as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        i += 1;
    }
    hash
}

/// Combine a seed with a list of indices into a new master seed.
///
/// Used to give every (repetition, size, graph) job of a sweep its own
/// independent seed.
pub fn derive_seed(master_seed: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(mix64(master_seed ^ GOLDEN_GAMMA), |acc, &i| {
        mix64(acc ^ mix64(i.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// Address of a single uniform variate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_label: &'static str,
    pub counter: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_label: &'static str, counter: u64) -> Self {
        Self {
            master_seed,
            stream_label,
            counter,
        }
    }

    pub fn stream(&self) -> Stream {
        Stream::new(self.master_seed, self.stream_label)
    }

    /// Uniform variate in `(0, 1]`.
    pub fn uniform(&self) -> f64 {
        self.stream().uniform(self.counter)
    }
}

/// A labelled stream with its key precomputed; indexing is by counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(master_seed: u64, label: &str) -> Self {
        Self {
            key: mix64(master_seed.wrapping_mul(GOLDEN_GAMMA) ^ mix64(fnv1a(label))),
        }
    }

    #[inline]
    pub fn word(&self, counter: u64) -> u64 {
        mix64(self.key ^ counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
    }

    /// Uniform in `(0, 1]`, 53 bits of resolution.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Independent child stream for samplers that need a variable number of
    /// words per draw.
    pub fn fork(&self, counter: u64) -> Stream {
        Stream {
            key: mix64(self.word(counter) ^ 0xD1B5_4A32_D192_ED03),
        }
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng {
            stream: *self,
            next: 0,
        }
    }
}

/// Sequential view of a stream, for handing to `rand_distr` samplers.
#[derive(Debug, Clone)]
pub struct StreamRng {
    stream: Stream,
    next: u64,
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = self.stream.word(self.next);
        self.next += 1;
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

/// Pure Pareto vertex-weight law `P(W >= x) = x^{-(tau-1)}` on `[1, inf)`,
/// optionally conditioned on `W <= cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightLaw {
    pub tau: f64,
    pub cap: Option<f64>,
}

impl WeightLaw {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 1.0) || !tau.is_finite() {
            return Err(Error::param(format!("weight exponent tau must be > 1, got {tau}")));
        }
        Ok(Self { tau, cap: None })
    }

    pub fn with_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 1.0) {
            return Err(Error::param(format!("weight cap must exceed 1, got {cap}")));
        }
        self.cap = Some(cap);
        Ok(self)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 1.0;
        }
        let s = x.powf(-(self.tau - 1.0));
        match self.cap {
            None => s,
            Some(cap) if x > cap => 0.0,
            Some(cap) => {
                let tail = cap.powf(-(self.tau - 1.0));
                (s - tail) / (1.0 - tail)
            }
        }
    }

    /// Inverse-survival transform of `u in (0, 1]`; `u = 1` maps to 1.
    #[inline]
    pub fn from_uniform(&self, u: f64) -> f64 {
        let u = match self.cap {
            None => u,
            Some(cap) => {
                let tail = cap.powf(-(self.tau - 1.0));
                tail + u * (1.0 - tail)
            }
        };
        u.powf(-1.0 / (self.tau - 1.0))
    }
}

pub fn sample_weight(seed: SeedSpec, law: &WeightLaw) -> f64 {
    law.from_uniform(seed.uniform())
}

/// Distribution of the i.i.d. edge lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeLengthLaw {
    /// `F(t) = min(1, t^beta)`.
    PolyAtZero { beta: f64 },
    Exponential { rate: f64 },
    /// `F(t) = exp(-c1 * (exp(c2 / t^eta) - 1))`, flatter at zero than any
    /// polynomial.
    DoubleExpFlat { eta: f64, c1: f64, c2: f64 },
    PointMass { value: f64 },
}

impl EdgeLengthLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EdgeLengthLaw::PolyAtZero { beta } => beta > 0.0 && beta.is_finite(),
            EdgeLengthLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            EdgeLengthLaw::DoubleExpFlat { eta, c1, c2 } => {
                eta > 1.0 && c1 > 0.0 && c2 > 0.0 && eta.is_finite()
            }
            EdgeLengthLaw::PointMass { value } => value >= 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid edge-length law {self:?}")))
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() || t < 0.0 {
            return 0.0;
        }
        match *self {
            EdgeLengthLaw::PolyAtZero { beta } => t.powf(beta).min(1.0),
            EdgeLengthLaw::Exponential { rate } => -(-rate * t).exp_m1(),
            EdgeLengthLaw::DoubleExpFlat { eta, c1, c2 } => {
                if t == 0.0 {
                    0.0
                } else {
                    (-c1 * (c2 / t.powf(eta)).exp_m1()).exp()
                }
            }
            EdgeLengthLaw::PointMass { value } => {
                if t >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Generalised inverse `inf { t : F(t) >= y }` for `y in (0, 1)`.
    ///
    /// The closed forms are nudged upward by ulps until `F(q) >= y` holds in
    /// floating point.
    pub fn quantile(&self, y: f64) -> f64 {
        let mut q = match *self {
            EdgeLengthLaw::PolyAtZero { beta } => y.powf(1.0 / beta),
            EdgeLengthLaw::Exponential { rate } => -(-y).ln_1p() / rate,
            EdgeLengthLaw::DoubleExpFlat { eta, c1, c2 } => {
                let inner = (-y.ln() / c1).ln_1p();
                if inner <= 0.0 {
                    f64::INFINITY
                } else {
                    (c2 / inner).powf(1.0 / eta)
                }
            }
            EdgeLengthLaw::PointMass { value } => return value,
        };
        for _ in 0..64 {
            if self.cdf(q) >= y || !q.is_finite() {
                break;
            }
            q = q.next_up();
        }
        q
    }

    /// `liminf_{t->0} log F(t) / log t`.
    pub fn beta_minus(&self) -> f64 {
        self.flatness()
    }

    /// `limsup_{t->0} log F(t) / log t`.
    pub fn beta_plus(&self) -> f64 {
        self.flatness()
    }

    // None of the provided families oscillates at zero, so both limits agree.
    fn flatness(&self) -> f64 {
        match *self {
            EdgeLengthLaw::PolyAtZero { beta } => beta,
            EdgeLengthLaw::Exponential { .. } => 1.0,
            EdgeLengthLaw::DoubleExpFlat { .. } => f64::INFINITY,
            EdgeLengthLaw::PointMass { value } => {
                if value > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.quantile(u)
    }

    /// Length drawn from the open-interval variate of `seed`.
    pub fn sample(&self, seed: SeedSpec) -> f64 {
        self.from_uniform(seed.stream().uniform_open(seed.counter))
    }
}

pub fn edge_length_cdf(law: &EdgeLengthLaw, t: f64) -> f64 {
    law.cdf(t)
}

pub fn edge_length_quantile(law: &EdgeLengthLaw, y: f64) -> f64 {
    law.quantile(y)
}

/// Poisson count. Each counter value owns a forked sub-stream, so draws at
/// different counters never share words.
pub fn sample_poisson(seed: SeedSpec, mean: f64) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::param(format!("Poisson mean must be finite and >= 0, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = seed.stream().fork(seed.counter).rng();
    Ok(dist.sample(&mut rng) as u64)
}
