//! Block-structure types.

use bitdist::Dist;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Block lengths and their conditional min-entropy floors.
///
/// Serialized as `{"lengths": […], "floors": […]}`. Floors are real
/// numbers in `[0, n_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct BlockSpec {
    lengths: Vec<usize>,
    floors: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    lengths: Vec<usize>,
    floors: Vec<f64>,
}

impl TryFrom<RawSpec> for BlockSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        BlockSpec::new(raw.lengths, raw.floors)
    }
}

impl From<BlockSpec> for RawSpec {
    fn from(s: BlockSpec) -> Self {
        RawSpec {
            lengths: s.lengths,
            floors: s.floors,
        }
    }
}

impl BlockSpec {
    pub fn new(lengths: Vec<usize>, floors: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::EmptySpec);
        }
        if lengths.len() != floors.len() {
            return Err(Error::FloorCount {
                lengths: lengths.len(),
                floors: floors.len(),
            });
        }
        for (index, (&n_bits, &k)) in lengths.iter().zip(&floors).enumerate() {
            if !k.is_finite() || k < 0.0 || k > n_bits as f64 {
                return Err(Error::FloorOutOfRange { index, k, n_bits });
            }
        }
        Ok(BlockSpec { lengths, floors })
    }

    /// A spec with all floors at zero (pure structure, no promises).
    pub fn unrestricted(lengths: Vec<usize>) -> Result<Self> {
        let floors = vec![0.0; lengths.len()];
        BlockSpec::new(lengths, floors)
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn floors(&self) -> &[f64] {
        &self.floors
    }

    /// Number of blocks.
    pub fn t(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_bits(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Bit offset of each block's start (leading block first), plus the
    /// total as a final sentinel entry.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.t() + 1);
        let mut acc = 0;
        for &n in &self.lengths {
            offsets.push(acc);
            acc += n;
        }
        offsets.push(acc);
        offsets
    }
}

/// A joint distribution carrying a block spec. Constructing one asserts
/// only that the widths line up — whether the floors actually hold is what
/// [`crate::verify_block_source`] decides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockDist", into = "RawBlockDist")]
pub struct BlockDist {
    spec: BlockSpec,
    joint: Dist,
}

#[derive(Serialize, Deserialize)]
struct RawBlockDist {
    spec: BlockSpec,
    joint: Dist,
}

impl TryFrom<RawBlockDist> for BlockDist {
    type Error = Error;
    fn try_from(raw: RawBlockDist) -> Result<Self> {
        BlockDist::new(raw.spec, raw.joint)
    }
}

impl From<BlockDist> for RawBlockDist {
    fn from(b: BlockDist) -> Self {
        RawBlockDist {
            spec: b.spec,
            joint: b.joint,
        }
    }
}

impl BlockDist {
    pub fn new(spec: BlockSpec, joint: Dist) -> Result<Self> {
        if joint.n_bits() != spec.total_bits() {
            return Err(Error::JointWidth {
                expected: spec.total_bits(),
                got: joint.n_bits(),
            });
        }
        Ok(BlockDist { spec, joint })
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn joint(&self) -> &Dist {
        &self.joint
    }

    /// Marginal of everything before block `i`.
    pub fn prefix_marginal(&self, i: usize) -> Result<Dist> {
        let offsets = self.spec.offsets();
        Ok(self.joint.prefix(offsets[i])?)
    }

    /// Conditional distribution of block `i` given the preceding blocks'
    /// realized value `prefix_value`; `None` off-support.
    pub fn conditional_block(&self, i: usize, prefix_value: usize) -> Result<Option<Dist>> {
        let offsets = self.spec.offsets();
        match self.joint.suffix_conditional(offsets[i], prefix_value)? {
            None => Ok(None),
            Some(tail) => Ok(Some(tail.prefix(self.spec.lengths[i])?)),
        }
    }
}

/// Measured deviation of a joint from exact block structure: per block,
/// `eta_i` is the probability mass of prefixes whose conditional sits more
/// than `gamma_i` away (in statistical distance) from the class of
/// distributions with min-entropy ≥ the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostBlockParams {
    pub etas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl AlmostBlockParams {
    /// The repair budget `Σ (eta_i + gamma_i)`.
    pub fn repair_bound(&self) -> f64 {
        self.etas.iter().sum::<f64>() + self.gammas.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(matches!(
            BlockSpec::new(vec![], vec![]),
            Err(Error::EmptySpec)
        ));
        assert!(matches!(
            BlockSpec::new(vec![2], vec![1.0, 1.0]),
            Err(Error::FloorCount { .. })
        ));
        assert!(matches!(
            BlockSpec::new(vec![2], vec![2.5]),
            Err(Error::FloorOutOfRange { .. })
        ));
        let s = BlockSpec::new(vec![2, 3], vec![1.5, 0.0]).unwrap();
        assert_eq!(s.total_bits(), 5);
        assert_eq!(s.offsets(), vec![0, 2, 5]);
    }

    #[test]
    fn block_dist_accessors() {
        let spec = BlockSpec::new(vec![1, 1], vec![1.0, 0.0]).unwrap();
        assert!(BlockDist::new(spec.clone(), Dist::uniform(3)).is_err());
        let b = BlockDist::new(spec, Dist::uniform(2)).unwrap();
        assert_eq!(b.prefix_marginal(1).unwrap(), Dist::uniform(1));
        let c = b.conditional_block(1, 0).unwrap().unwrap();
        assert_eq!(c, Dist::uniform(1));
    }

    #[test]
    fn serde_round_trip() {
        let spec = BlockSpec::new(vec![1, 1], vec![0.5, 1.0]).unwrap();
        let b = BlockDist::new(spec, Dist::uniform(2)).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        let back: BlockDist = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);

        let bad = r#"{"spec":{"lengths":[2],"floors":[3.0]},"joint":{"n_bits":2,"probs":[0.25,0.25,0.25,0.25]}}"#;
        assert!(serde_json::from_str::<BlockDist>(bad).is_err());
    }
}
