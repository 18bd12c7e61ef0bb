//! Parameter sheets and the verified-primitive wrapper.

use bitdist::FunctionTable;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Declared parameters of a seeded condenser
/// `f: {0,1}^n × {0,1}^d → {0,1}^m`: sources with min-entropy `k` are
/// promised output smooth min-entropy `k_prime = k − loss` at error `eps`,
/// and the output gap is `gap = m − k_prime`. The redundant fields are
/// validated against each other on construction and deserialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct CondenserParams {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: f64,
    pub k_prime: f64,
    pub loss: f64,
    pub gap: f64,
    pub eps: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: usize,
    d: usize,
    m: usize,
    k: f64,
    k_prime: f64,
    loss: f64,
    gap: f64,
    eps: f64,
}

impl TryFrom<RawParams> for CondenserParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        let p = CondenserParams::new(r.n, r.d, r.m, r.k, r.loss, r.eps)?;
        if (p.k_prime - r.k_prime).abs() > 1e-9 || (p.gap - r.gap).abs() > 1e-9 {
            return Err(Error::InconsistentParams {
                m: r.m,
                implied: r.k - r.loss + r.gap,
            });
        }
        Ok(p)
    }
}

impl From<CondenserParams> for RawParams {
    fn from(p: CondenserParams) -> Self {
        RawParams {
            n: p.n,
            d: p.d,
            m: p.m,
            k: p.k,
            k_prime: p.k_prime,
            loss: p.loss,
            gap: p.gap,
            eps: p.eps,
        }
    }
}

impl CondenserParams {
    /// Builds a sheet from the independent quantities; `k_prime` and `gap`
    /// are derived. Requires `0 ≤ k ≤ n`, `loss ≥ 0`, `gap ≥ 0` (i.e.
    /// `m ≥ k − loss`), `k − loss ≤ m`, and `eps ∈ [0, 1]`.
    pub fn new(n: usize, d: usize, m: usize, k: f64, loss: f64, eps: f64) -> Result<Self> {
        if !k.is_finite() || k < 0.0 || k > n as f64 {
            return Err(Error::BadK { k, n });
        }
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::BadLoss(loss));
        }
        if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
            return Err(Error::BadEps(eps));
        }
        let k_prime = k - loss;
        let gap = m as f64 - k_prime;
        if gap < -1e-9 {
            return Err(Error::NegativeGap(gap));
        }
        if !(0.0..=m as f64 + 1e-9).contains(&k_prime) {
            return Err(Error::BadKPrime { k_prime, m });
        }
        Ok(CondenserParams {
            n,
            d,
            m,
            k,
            k_prime,
            loss,
            gap: gap.max(0.0),
            eps,
        })
    }

    /// Extractor-shaped parameters: full-entropy output (`k_prime = m`,
    /// `gap = 0`, `loss = k − m`). Requires `k ≥ m`.
    pub fn extractor(n: usize, d: usize, m: usize, k: f64, eps: f64) -> Result<Self> {
        CondenserParams::new(n, d, m, k, k - m as f64, eps)
    }

    /// Total input width `n + d`.
    pub fn in_bits(&self) -> usize {
        self.n + self.d
    }
}

/// How a claim was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyMethod {
    /// Every output set enumerated — the error is exact.
    Exhaustive,
    /// A deterministic family of output sets — the error is a lower bound
    /// that was still within the target.
    Family,
    /// Established by structure: the output distribution is *identical*
    /// for every input, so the error is exactly zero without enumeration.
    Analytic,
}

/// Outcome of verifying a table at a specific entropy level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    /// Input entropy the check ran at (integral: flat sources are
    /// enumerated through their support size `2^k`).
    pub k: usize,
    /// Output floor the error was measured against (`m` for extractors).
    pub k_prime: f64,
    /// Worst measured error. Exact for [`VerifyMethod::Exhaustive`] and
    /// [`VerifyMethod::Analytic`], a lower bound for
    /// [`VerifyMethod::Family`].
    pub error: f64,
    pub method: VerifyMethod,
}

/// A function table bundled with its parameter sheet and, once verified,
/// the measurement backing the sheet. Inputs are packed source-first:
/// `f(x, s)` is `table[(x << d) | s]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrimitive", into = "RawPrimitive")]
pub struct SeededPrimitive {
    table: FunctionTable,
    params: CondenserParams,
    verified: Option<VerificationRecord>,
}

#[derive(Serialize, Deserialize)]
struct RawPrimitive {
    table: FunctionTable,
    params: CondenserParams,
    verified: Option<VerificationRecord>,
}

impl TryFrom<RawPrimitive> for SeededPrimitive {
    type Error = Error;
    fn try_from(r: RawPrimitive) -> Result<Self> {
        let p = SeededPrimitive::new(r.table, r.params)?;
        Ok(match r.verified {
            Some(rec) => p.with_record(rec),
            None => p,
        })
    }
}

impl From<SeededPrimitive> for RawPrimitive {
    fn from(p: SeededPrimitive) -> Self {
        RawPrimitive {
            table: p.table,
            params: p.params,
            verified: p.verified,
        }
    }
}

impl SeededPrimitive {
    pub fn new(table: FunctionTable, params: CondenserParams) -> Result<Self> {
        if table.in_bits() != params.in_bits() || table.out_bits() != params.m {
            return Err(Error::TableShape {
                want_in: params.in_bits(),
                want_out: params.m,
                got_in: table.in_bits(),
                got_out: table.out_bits(),
            });
        }
        Ok(SeededPrimitive {
            table,
            params,
            verified: None,
        })
    }

    pub fn with_record(mut self, record: VerificationRecord) -> Self {
        self.verified = Some(record);
        self
    }

    pub fn table(&self) -> &FunctionTable {
        &self.table
    }

    pub fn params(&self) -> &CondenserParams {
        &self.params
    }

    pub fn verified(&self) -> Option<&VerificationRecord> {
        self.verified.as_ref()
    }

    /// Evaluates `f(x, s)`.
    pub fn eval(&self, x: usize, s: usize) -> usize {
        self.table.apply((x << self.params.d) | s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let p = CondenserParams::new(6, 3, 4, 4.0, 1.0, 0.1).unwrap();
        assert_eq!(p.k_prime, 3.0);
        assert_eq!(p.gap, 1.0);
        assert!(CondenserParams::new(6, 3, 4, 7.0, 1.0, 0.1).is_err());
        assert!(CondenserParams::new(6, 3, 4, 4.0, -1.0, 0.1).is_err());
        assert!(CondenserParams::new(6, 3, 4, 4.0, 1.0, 1.5).is_err());
        // m < k − loss: negative gap.
        assert!(CondenserParams::new(6, 3, 1, 4.0, 1.0, 0.1).is_err());

        let e = CondenserParams::extractor(4, 2, 2, 3.0, 0.2).unwrap();
        assert_eq!(e.k_prime, 2.0);
        assert_eq!(e.gap, 0.0);
        assert_eq!(e.loss, 1.0);
    }

    #[test]
    fn primitive_shape_check_and_eval() {
        let params = CondenserParams::extractor(2, 1, 1, 2.0, 0.5).unwrap();
        let table = FunctionTable::from_fn(3, 1, |u| u & 1).unwrap();
        let p = SeededPrimitive::new(table, params).unwrap();
        // f(x, s) = low bit of (x << 1 | s) = s.
        assert_eq!(p.eval(3, 0), 0);
        assert_eq!(p.eval(0, 1), 1);

        let bad_table = FunctionTable::from_fn(2, 1, |u| u & 1).unwrap();
        let params = CondenserParams::extractor(2, 1, 1, 2.0, 0.5).unwrap();
        assert!(SeededPrimitive::new(bad_table, params).is_err());
    }

    #[test]
    fn params_serde_rejects_inconsistency() {
        let p = CondenserParams::new(6, 3, 4, 4.0, 1.0, 0.1).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: CondenserParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let tampered = json.replace("\"gap\":1.0", "\"gap\":2.0");
        assert!(serde_json::from_str::<CondenserParams>(&tampered).is_err());
    }
}
