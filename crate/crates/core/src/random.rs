//! Seeded random elements with bounded valuations.
//!
//! Instance generation and the verification suites draw field and algebra
//! elements here so that every run is reproducible from a single seed. The
//! helpers guarantee nonzero results where the caller needs a unit or a
//! provably nonzero value.

use rand::Rng;

use crate::algebra::{DElem, DMat, DivisionAlgebra, Involution};
use crate::arith::{KElem, LocalField};
use crate::fq::FqElem;

const RANDOM_DIGITS: usize = 6;

/// A nonzero field element with valuation in `[vmin, vmax]` and a few
/// random digits behind the leading one.
pub fn random_kelem<R: Rng>(field: &LocalField, rng: &mut R, vmin: i64, vmax: i64) -> KElem {
    let v = rng.gen_range(vmin..=vmax);
    let q = field.residue().order();
    let mut digits = vec![FqElem::from_index(field.residue(), 1 + rng.gen_range(0..q - 1))];
    for _ in 0..RANDOM_DIGITS {
        digits.push(FqElem::from_index(field.residue(), rng.gen_range(0..q)));
    }
    KElem::from_digits(field, v, &digits)
}

/// A random element of the algebra; components are independently zero (with
/// small probability) or random at valuations in `[vmin, vmax]`.
pub fn random_delem<R: Rng>(alg: &DivisionAlgebra, rng: &mut R, vmin: i64, vmax: i64) -> DElem {
    let f = alg.comp_field();
    let comps = (0..alg.d())
        .map(|_| {
            if rng.gen_ratio(1, 8) {
                KElem::zero(f)
            } else {
                random_kelem(f, rng, vmin, vmax)
            }
        })
        .collect();
    DElem::from_comps(alg, comps)
}

/// A provably nonzero random element.
pub fn random_nonzero_delem<R: Rng>(
    alg: &DivisionAlgebra,
    rng: &mut R,
    vmin: i64,
    vmax: i64,
) -> DElem {
    loop {
        let x = random_delem(alg, rng, vmin, vmax);
        if !x.try_is_zero().unwrap_or(true) {
            return x;
        }
    }
}

/// A nonzero element with `ρ(x) = ε·x`, built as `y + ε·ρ(y)`.
pub fn random_symmetric_delem<R: Rng>(
    alg: &DivisionAlgebra,
    rho: &Involution,
    epsilon: i64,
    rng: &mut R,
    vmin: i64,
    vmax: i64,
) -> DElem {
    loop {
        let y = random_delem(alg, rng, vmin, vmax);
        let mut s = rho.apply(&y);
        if epsilon == -1 {
            s = -&s;
        }
        let x = &y + &s;
        if !x.try_is_zero().unwrap_or(true) {
            return x;
        }
    }
}

/// A random matrix with entries as in [`random_delem`].
pub fn random_dmat<R: Rng>(
    alg: &DivisionAlgebra,
    rng: &mut R,
    rows: usize,
    cols: usize,
    vmin: i64,
    vmax: i64,
) -> DMat {
    DMat::from_fn(alg, rows, cols, |_, _| random_delem(alg, rng, vmin, vmax))
}
