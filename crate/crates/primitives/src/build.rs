//! Hand-constructed primitives with known error.

use bitdist::FunctionTable;

use crate::{
    verify_seeded_extractor, CondenserParams, Error, Result, SeededPrimitive,
    VerificationRecord, VerifyMethod,
};

/// The GF(2) inner-product extractor on equal halves:
/// `f(x, s) = ⟨x, s⟩ mod 2` with `n = d = n_half`, one output bit.
/// Verified exhaustively at `k = n_half` during construction; the sheet's
/// `eps` is the measured error.
pub fn ip_extractor(n_half: usize) -> Result<SeededPrimitive> {
    let mask = (1usize << n_half) - 1;
    let table = FunctionTable::from_fn(2 * n_half, 1, |u| {
        ((u >> n_half) & u & mask).count_ones() as usize & 1
    })?;
    // Temporary sheet with eps = 1 so the shape checks pass, replaced by
    // the measured value below.
    let draft = CondenserParams::extractor(n_half, n_half, 1, n_half as f64, 1.0)?;
    let p = SeededPrimitive::new(table.clone(), draft)?;
    let record = verify_seeded_extractor(&p, n_half, true)?;
    let params = CondenserParams::extractor(n_half, n_half, 1, n_half as f64, record.error)?;
    Ok(SeededPrimitive::new(table, params)?.with_record(record))
}

/// The zero-error extractor `f(x, s) = s`: the output *is* the seed, so
/// `f(X, U_d)` is exactly uniform on `d` bits for every source `X`
/// whatsoever. Sheeted at entropy `k ≥ d` (extractor shape needs
/// `k ≥ m`); the record is analytic.
pub fn identity_on_seed(n: usize, d: usize, k: usize) -> Result<SeededPrimitive> {
    if k < d {
        return Err(Error::KBelowOutput { k, m: d });
    }
    let mask = (1usize << d) - 1;
    let table = FunctionTable::from_fn(n + d, d, move |u| u & mask)?;
    zero_error(table, n, d, k)
}

/// The zero-error extractor `f(x, s) = x[window] ⊕ s`, where the window
/// is the `d` source bits starting `offset` positions above the least
/// significant bit (`offset + d ≤ n`). For every *fixed* `x` the map
/// `s ↦ x[window] ⊕ s` is a bijection, so the output is again exactly
/// uniform — but unlike [`identity_on_seed`] the table genuinely depends
/// on the source, which matters when several such extractors must respond
/// differently to the same input.
pub fn xor_extractor(n: usize, d: usize, offset: usize, k: usize) -> Result<SeededPrimitive> {
    if offset + d > n {
        return Err(Error::WidthTooLarge(offset + d, n));
    }
    if k < d {
        return Err(Error::KBelowOutput { k, m: d });
    }
    let mask = (1usize << d) - 1;
    let table = FunctionTable::from_fn(n + d, d, move |u| {
        let s = u & mask;
        let x = u >> d;
        ((x >> offset) & mask) ^ s
    })?;
    zero_error(table, n, d, k)
}

fn zero_error(table: FunctionTable, n: usize, d: usize, k: usize) -> Result<SeededPrimitive> {
    let params = CondenserParams::extractor(n, d, d, k as f64, 0.0)?;
    let record = VerificationRecord {
        k,
        k_prime: d as f64,
        error: 0.0,
        method: VerifyMethod::Analytic,
    };
    Ok(SeededPrimitive::new(table, params)?.with_record(record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bitdist::{push_forward, statistical_distance, Dist};

    #[test]
    fn ip_sheet_carries_measured_error() {
        let p = ip_extractor(2).unwrap();
        assert_eq!(p.params().eps, 0.125);
        assert_eq!(p.verified().unwrap().error, 0.125);
        assert_eq!(p.params().m, 1);
        // ⟨11, 01⟩ = 1, ⟨11, 11⟩ = 0.
        assert_eq!(p.eval(3, 1), 1);
        assert_eq!(p.eval(3, 3), 0);
    }

    #[test]
    fn zero_error_builders_are_exactly_uniform() {
        for p in [
            identity_on_seed(3, 2, 2).unwrap(),
            xor_extractor(3, 2, 0, 2).unwrap(),
            xor_extractor(3, 2, 1, 3).unwrap(),
        ] {
            // Adversarial source: point mass. Output must be exactly
            // uniform on the seed bits.
            for x in 0..8usize {
                let src = Dist::point_mass(3, x).unwrap();
                let joint = bitdist::product(&src, &Dist::uniform(2)).unwrap();
                let out = push_forward(p.table(), &joint).unwrap();
                let d = statistical_distance(&out, &Dist::uniform(2)).unwrap();
                assert!(d < 1e-15, "x={x}: distance {d}");
            }
            assert_eq!(p.verified().unwrap().method, VerifyMethod::Analytic);
            assert_eq!(p.params().eps, 0.0);
        }
    }

    #[test]
    fn xor_windows_differ() {
        let a = xor_extractor(4, 2, 0, 2).unwrap();
        let b = xor_extractor(4, 2, 2, 2).unwrap();
        // Source 0b0110 with seed 0: window at offset 0 reads 10, at
        // offset 2 reads 01.
        assert_eq!(a.eval(0b0110, 0), 0b10);
        assert_eq!(b.eval(0b0110, 0), 0b01);
        assert!(xor_extractor(4, 3, 2, 3).is_err());
        assert!(identity_on_seed(4, 3, 2).is_err());
    }

    #[test]
    fn generic_verifier_confirms_the_analytic_records() {
        let p = identity_on_seed(2, 2, 2).unwrap();
        let rec = verify_seeded_extractor(&p, 0, true).unwrap();
        assert_eq!(rec.error, 0.0);
        let p = xor_extractor(2, 2, 0, 2).unwrap();
        let rec = verify_seeded_extractor(&p, 0, true).unwrap();
        assert_eq!(rec.error, 0.0);
    }
}
