//! The dense distribution type and its exact operations.

use serde::{Deserialize, Serialize};

use crate::{Error, FunctionTable, Result, MASS_TOL, MAX_BITS};

/// A probability distribution over `{0,1}^n_bits`, stored densely.
///
/// Serialized form is `{"n_bits": …, "probs": […]}`; deserialization
/// re-validates, so a JSON file with negative entries or a bad total mass
/// is rejected at parse time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDist", into = "RawDist")]
pub struct Dist {
    n_bits: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDist {
    n_bits: usize,
    probs: Vec<f64>,
}

impl TryFrom<RawDist> for Dist {
    type Error = Error;
    fn try_from(raw: RawDist) -> Result<Self> {
        Dist::new(raw.n_bits, raw.probs)
    }
}

impl From<Dist> for RawDist {
    fn from(d: Dist) -> Self {
        RawDist {
            n_bits: d.n_bits,
            probs: d.probs,
        }
    }
}

impl Dist {
    /// Validates and wraps a probability vector. The vector must have
    /// exactly `2^n_bits` entries, all non-negative, summing to 1 within
    /// [`MASS_TOL`].
    pub fn new(n_bits: usize, probs: Vec<f64>) -> Result<Self> {
        if n_bits > MAX_BITS {
            return Err(Error::WidthTooLarge(n_bits));
        }
        let expected = 1usize << n_bits;
        if probs.len() != expected {
            return Err(Error::WrongLength {
                expected,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeProb { index, value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::BadMass { total });
        }
        Ok(Dist { n_bits, probs })
    }

    /// Internal constructor for vectors this crate has just normalized
    /// itself; skips re-validation.
    pub(crate) fn from_normalized(n_bits: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1usize << n_bits);
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        Dist { n_bits, probs }
    }

    /// The uniform distribution on `n_bits` bits.
    pub fn uniform(n_bits: usize) -> Self {
        let len = 1usize << n_bits.min(MAX_BITS);
        assert!(n_bits <= MAX_BITS, "bit width {n_bits} exceeds {MAX_BITS}");
        Dist {
            n_bits,
            probs: vec![1.0 / len as f64; len],
        }
    }

    /// The point mass on a single outcome.
    pub fn point_mass(n_bits: usize, value: usize) -> Result<Self> {
        if n_bits > MAX_BITS {
            return Err(Error::WidthTooLarge(n_bits));
        }
        let len = 1usize << n_bits;
        if value >= len {
            return Err(Error::OutcomeOutOfRange {
                value,
                bits: n_bits,
            });
        }
        let mut probs = vec![0.0; len];
        probs[value] = 1.0;
        Ok(Dist { n_bits, probs })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Number of outcomes, `2^n_bits`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// Largest single-outcome probability.
    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Number of outcomes with strictly positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Total mass of a set of outcomes (indices may repeat; they are
    /// counted once each as given).
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&u| self.probs[u]).sum()
    }

    /// Marginal of the first (most significant) `prefix_bits` bits.
    pub fn prefix(&self, prefix_bits: usize) -> Result<Dist> {
        if prefix_bits > self.n_bits {
            return Err(Error::PrefixTooWide {
                prefix: prefix_bits,
                n_bits: self.n_bits,
            });
        }
        let tail = self.n_bits - prefix_bits;
        let mut out = vec![0.0; 1usize << prefix_bits];
        for (u, &p) in self.probs.iter().enumerate() {
            out[u >> tail] += p;
        }
        Ok(Dist::from_normalized(prefix_bits, out))
    }

    /// Conditional distribution of the trailing `n_bits − prefix_bits`
    /// bits given that the leading bits equal `value`. Returns `None` when
    /// the prefix has probability zero (there is nothing to condition on).
    pub fn suffix_conditional(&self, prefix_bits: usize, value: usize) -> Result<Option<Dist>> {
        if prefix_bits > self.n_bits {
            return Err(Error::PrefixTooWide {
                prefix: prefix_bits,
                n_bits: self.n_bits,
            });
        }
        if value >= (1usize << prefix_bits) {
            return Err(Error::OutcomeOutOfRange {
                value,
                bits: prefix_bits,
            });
        }
        let tail = self.n_bits - prefix_bits;
        let base = value << tail;
        let slice = &self.probs[base..base + (1usize << tail)];
        let mass: f64 = slice.iter().sum();
        if mass <= 0.0 {
            return Ok(None);
        }
        let probs = slice.iter().map(|&p| p / mass).collect();
        Ok(Some(Dist::from_normalized(tail, probs)))
    }
}

/// Statistical (total variation) distance, `(1/2) Σ_u |a(u) − b(u)|`.
pub fn statistical_distance(a: &Dist, b: &Dist) -> Result<f64> {
    if a.n_bits != b.n_bits {
        return Err(Error::WidthMismatch {
            left: a.n_bits,
            right: b.n_bits,
        });
    }
    let sum: f64 = a
        .probs
        .iter()
        .zip(&b.probs)
        .map(|(&x, &y)| (x - y).abs())
        .sum();
    Ok(0.5 * sum)
}

/// Pushes `x` through the function `f`: the distribution of `f(X)`.
pub fn push_forward(f: &FunctionTable, x: &Dist) -> Result<Dist> {
    if f.in_bits() != x.n_bits {
        return Err(Error::WidthMismatch {
            left: f.in_bits(),
            right: x.n_bits,
        });
    }
    let mut out = vec![0.0; 1usize << f.out_bits()];
    for (u, &p) in x.probs.iter().enumerate() {
        out[f.apply(u)] += p;
    }
    Ok(Dist::from_normalized(f.out_bits(), out))
}

impl Dist {
    /// Method form of [`push_forward`].
    pub fn push_forward(&self, f: &FunctionTable) -> Result<Dist> {
        push_forward(f, self)
    }
}

/// Conditions `x` on an event given as a dense indicator over outcomes.
/// Errors if the event has probability zero.
pub fn condition(x: &Dist, event: &[bool]) -> Result<Dist> {
    if event.len() != x.len() {
        return Err(Error::BadEvent {
            expected: x.len(),
            got: event.len(),
        });
    }
    let mass: f64 = x
        .probs
        .iter()
        .zip(event)
        .filter(|(_, &e)| e)
        .map(|(&p, _)| p)
        .sum();
    if mass <= 0.0 {
        return Err(Error::ZeroEvent);
    }
    let probs = x
        .probs
        .iter()
        .zip(event)
        .map(|(&p, &e)| if e { p / mass } else { 0.0 })
        .collect();
    Ok(Dist::from_normalized(x.n_bits, probs))
}

/// Convex mixture of distributions over the same bit width. Weights must
/// be non-negative and sum to 1 within [`MASS_TOL`]; drift inside that
/// tolerance is silently normalized away.
pub fn mix(components: &[(f64, Dist)]) -> Result<Dist> {
    let (first, rest) = components.split_first().ok_or(Error::EmptyMix)?;
    let n_bits = first.1.n_bits;
    for (_, d) in rest {
        if d.n_bits != n_bits {
            return Err(Error::WidthMismatch {
                left: n_bits,
                right: d.n_bits,
            });
        }
    }
    for (index, (w, _)) in components.iter().enumerate() {
        if *w < 0.0 || !w.is_finite() {
            return Err(Error::NegativeWeight {
                index,
                value: *w,
            });
        }
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::BadWeights { total });
    }
    let mut out = vec![0.0; 1usize << n_bits];
    for (w, d) in components {
        for (u, &p) in d.probs.iter().enumerate() {
            out[u] += w * p;
        }
    }
    for p in &mut out {
        *p /= total;
    }
    Ok(Dist::from_normalized(n_bits, out))
}

/// Product distribution of independent `a` and `b`, with `a`'s bits in the
/// high-order (leading) positions: outcome `(u_a << b.n_bits) | u_b`.
pub fn product(a: &Dist, b: &Dist) -> Result<Dist> {
    let n_bits = a.n_bits + b.n_bits;
    if n_bits > MAX_BITS {
        return Err(Error::WidthTooLarge(n_bits));
    }
    let mut out = vec![0.0; 1usize << n_bits];
    for (ua, &pa) in a.probs.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let base = ua << b.n_bits;
        for (ub, &pb) in b.probs.iter().enumerate() {
            out[base | ub] = pa * pb;
        }
    }
    Ok(Dist::from_normalized(n_bits, out))
}
