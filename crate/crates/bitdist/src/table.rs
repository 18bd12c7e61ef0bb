//! Exhaustive truth tables for functions between bit-string domains.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, MAX_BITS};

/// A function `{0,1}^in_bits → {0,1}^out_bits` stored as its full value
/// table: `table[u] = f(u)`.
///
/// Serialized form is `{"in_bits": …, "out_bits": …, "table": […]}` and is
/// validated on deserialization (every entry must fit in `out_bits`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct FunctionTable {
    in_bits: usize,
    out_bits: usize,
    table: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    in_bits: usize,
    out_bits: usize,
    table: Vec<usize>,
}

impl TryFrom<RawTable> for FunctionTable {
    type Error = Error;
    fn try_from(raw: RawTable) -> Result<Self> {
        FunctionTable::new(raw.in_bits, raw.out_bits, raw.table)
    }
}

impl From<FunctionTable> for RawTable {
    fn from(t: FunctionTable) -> Self {
        RawTable {
            in_bits: t.in_bits,
            out_bits: t.out_bits,
            table: t.table,
        }
    }
}

impl FunctionTable {
    pub fn new(in_bits: usize, out_bits: usize, table: Vec<usize>) -> Result<Self> {
        if in_bits > MAX_BITS {
            return Err(Error::WidthTooLarge(in_bits));
        }
        if out_bits > MAX_BITS {
            return Err(Error::WidthTooLarge(out_bits));
        }
        let expected = 1usize << in_bits;
        if table.len() != expected {
            return Err(Error::TableWrongLength {
                expected,
                got: table.len(),
            });
        }
        let limit = 1usize << out_bits;
        for (index, &value) in table.iter().enumerate() {
            if value >= limit {
                return Err(Error::TableEntryOutOfRange {
                    index,
                    value,
                    out_bits,
                });
            }
        }
        Ok(FunctionTable {
            in_bits,
            out_bits,
            table,
        })
    }

    /// Builds a table by evaluating `f` on every input. Output values are
    /// validated against `out_bits`.
    pub fn from_fn(in_bits: usize, out_bits: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        let table = (0..1usize << in_bits).map(f).collect();
        FunctionTable::new(in_bits, out_bits, table)
    }

    /// The identity function on `bits` bits.
    pub fn identity(bits: usize) -> Self {
        FunctionTable::from_fn(bits, bits, |u| u).expect("identity is always valid")
    }

    pub fn in_bits(&self) -> usize {
        self.in_bits
    }

    pub fn out_bits(&self) -> usize {
        self.out_bits
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Evaluates the function. Panics on an out-of-range input (callers
    /// index with values already bounded by `1 << in_bits`).
    pub fn apply(&self, input: usize) -> usize {
        self.table[input]
    }

    /// Checked evaluation for untrusted inputs.
    pub fn try_apply(&self, input: usize) -> Result<usize> {
        self.table
            .get(input)
            .copied()
            .ok_or(Error::InputOutOfRange {
                value: input,
                in_bits: self.in_bits,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validates() {
        assert!(matches!(
            FunctionTable::new(2, 1, vec![0, 1, 2, 0]),
            Err(Error::TableEntryOutOfRange { index: 2, value: 2, .. })
        ));
        assert!(matches!(
            FunctionTable::new(2, 1, vec![0, 1]),
            Err(Error::TableWrongLength { expected: 4, got: 2 })
        ));
        assert!(FunctionTable::new(0, 0, vec![0]).is_ok());
    }

    #[test]
    fn identity_and_apply() {
        let id = FunctionTable::identity(3);
        for u in 0..8 {
            assert_eq!(id.apply(u), u);
        }
        assert!(id.try_apply(8).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let f = FunctionTable::new(1, 2, vec![3, 0]).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"in_bits":1,"out_bits":2,"table":[3,0]}"#);
        let back: FunctionTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let bad: std::result::Result<FunctionTable, _> =
            serde_json::from_str(r#"{"in_bits":1,"out_bits":1,"table":[2,0]}"#);
        assert!(bad.is_err());
    }
}
