//! Laurent series over a finite residue field, with explicit precision.
//!
//! A local field of equal characteristic is `κ((π))`: every element is a
//! series `sum c_s π^s` with digits in the residue field. Elements here are
//! either *exact* (finitely many digits, all others genuinely zero) or
//! carry an absolute precision `prec`, meaning digits at exponents `< prec`
//! are known and the tail is `O(π^prec)`.
//!
//! Two rules keep the arithmetic honest:
//!
//! * precision propagates pessimistically through every operation
//!   (`prec(xy) = min(ν(x) + prec(y), ν(y) + prec(x))`, and so on);
//! * a comparison that would be decided by fewer than
//!   [`MIN_DECIDE_DIGITS`] verified digits refuses to answer and returns
//!   [`Error::PrecisionExhausted`] instead of guessing.
//!
//! Because the characteristic of the field equals the characteristic of the
//! residue field, Teichmüller representatives are plain constants, and
//! inverting a monomial is exact; only genuine series inversions truncate
//! (to the field's working precision).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fq::{Fq, FqElem};

/// Minimum number of verified digits required to decide a comparison.
pub const MIN_DECIDE_DIGITS: i64 = 4;

/// Sentinel precision for exact elements.
pub const PREC_EXACT: i64 = i64::MAX;

/// Immutable data of a local field `κ((π))` with a working precision.
#[derive(Debug)]
pub struct LocalFieldData {
    residue: Fq,
    prec: i64,
    label: String,
}

/// Shared handle to a local field.
pub type LocalField = Arc<LocalFieldData>;

/// Builds `κ((π))` with the given working precision (`>= 4`).
pub fn local_field(residue: &Fq, prec: i64, label: &str) -> Result<LocalField> {
    if prec < MIN_DECIDE_DIGITS {
        return Err(Error::BadPrecision { min: MIN_DECIDE_DIGITS, got: prec });
    }
    Ok(Arc::new(LocalFieldData { residue: residue.clone(), prec, label: label.to_string() }))
}

impl LocalFieldData {
    pub fn residue(&self) -> &Fq {
        &self.residue
    }

    /// Working precision: relative digits kept by series inversions.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Residue cardinality `#κ`.
    pub fn residue_order(&self) -> u64 {
        self.residue.order()
    }
}

impl fmt::Display for LocalFieldData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(({}))", self.residue, self.label)
    }
}

pub(crate) fn same_local_field(a: &LocalFieldData, b: &LocalFieldData) -> bool {
    a.residue.p() == b.residue.p()
        && a.residue.degree() == b.residue.degree()
        && a.label == b.label
}

fn padd(a: i64, b: i64) -> i64 {
    if a == PREC_EXACT || b == PREC_EXACT {
        PREC_EXACT
    } else {
        a.saturating_add(b)
    }
}

/// An element of a local field: digits for exponents in
/// `[min_pow, min_pow + coeffs.len())`, zero digits in the rest of
/// `[min_pow, prec)`, unknown tail `O(π^prec)`.
///
/// Digits below `min_pow` are exactly zero, so `min_pow` is a certified
/// lower bound for the valuation, and `prec - min_pow` measures how many
/// digits of the element have been pinned down.
#[derive(Clone)]
pub struct KElem {
    field: LocalField,
    min_pow: i64,
    coeffs: Vec<FqElem>,
    prec: i64,
}

impl KElem {
    // -- constructors -------------------------------------------------------

    pub fn zero(field: &LocalField) -> KElem {
        KElem { field: field.clone(), min_pow: 0, coeffs: Vec::new(), prec: PREC_EXACT }
    }

    pub fn one(field: &LocalField) -> KElem {
        KElem::from_residue(field, &FqElem::one(&field.residue))
    }

    /// The constant (Teichmüller) lift of a residue digit; exact.
    pub fn from_residue(field: &LocalField, c: &FqElem) -> KElem {
        debug_assert_eq!(c.field().order(), field.residue.order(), "residue field mismatch");
        if c.is_zero() {
            KElem::zero(field)
        } else {
            KElem { field: field.clone(), min_pow: 0, coeffs: vec![c.clone()], prec: PREC_EXACT }
        }
    }

    /// The image of an integer (lands in the prime subfield); exact.
    pub fn from_integer(field: &LocalField, v: i64) -> KElem {
        let p = field.residue.p() as i64;
        let r = v.rem_euclid(p) as u64;
        KElem::from_residue(field, &FqElem::from_u64(&field.residue, r))
    }

    /// `π^s`; exact.
    pub fn uniformizer_pow(field: &LocalField, s: i64) -> KElem {
        KElem {
            field: field.clone(),
            min_pow: s,
            coeffs: vec![FqElem::one(&field.residue)],
            prec: PREC_EXACT,
        }
    }

    /// An exact element from an explicit digit list starting at `min_pow`.
    pub fn from_digits(field: &LocalField, min_pow: i64, digits: &[FqElem]) -> KElem {
        let mut e = KElem { field: field.clone(), min_pow, coeffs: digits.to_vec(), prec: PREC_EXACT };
        e.normalize();
        e
    }

    /// An inexact element: digits for `[min_pow, prec)` (missing entries
    /// zero), tail unknown.
    pub fn from_digits_prec(field: &LocalField, min_pow: i64, digits: &[FqElem], prec: i64) -> KElem {
        let mut e = KElem { field: field.clone(), min_pow, coeffs: digits.to_vec(), prec };
        e.normalize();
        e
    }

    // -- accessors ----------------------------------------------------------

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec == PREC_EXACT
    }

    pub fn min_pow(&self) -> i64 {
        self.min_pow
    }

    /// Index of the first nonzero tracked digit; `None` when every tracked
    /// digit vanishes (exact zero, or zero up to the precision bound).
    fn lead_index(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| self.min_pow + i as i64)
    }

    /// Certified lower bound for the valuation: the first nonzero digit if
    /// one is tracked, otherwise the precision bound.
    fn val_floor(&self) -> i64 {
        match self.lead_index() {
            Some(v) => v,
            None => self.prec, // for exact zero this is PREC_EXACT
        }
    }

    /// The digit at exponent `s`.
    pub fn coeff(&self, s: i64) -> Result<FqElem> {
        if s >= self.prec {
            return Err(Error::PrecisionExhausted { remaining: self.prec - self.min_pow });
        }
        if s < self.min_pow {
            return Ok(FqElem::zero(&self.field.residue));
        }
        let i = (s - self.min_pow) as usize;
        Ok(self
            .coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| FqElem::zero(&self.field.residue)))
    }

    // -- predicates and comparisons ----------------------------------------

    /// Decides whether the element is zero. Inexact all-zero elements count
    /// as zero only when at least [`MIN_DECIDE_DIGITS`] digits are verified.
    pub fn try_is_zero(&self) -> Result<bool> {
        if self.lead_index().is_some() {
            return Ok(false);
        }
        if self.is_exact() {
            return Ok(true);
        }
        let remaining = self.prec - self.min_pow;
        if remaining < MIN_DECIDE_DIGITS {
            Err(Error::PrecisionExhausted { remaining })
        } else {
            Ok(true)
        }
    }

    pub fn try_eq(&self, other: &KElem) -> Result<bool> {
        (self - other).try_is_zero()
    }

    /// The valuation of a provably nonzero element.
    pub fn valuation(&self) -> Result<i64> {
        match self.lead_index() {
            Some(v) => Ok(v),
            None => {
                if self.is_exact() {
                    Err(Error::Internal("valuation of exact zero".into()))
                } else {
                    Err(Error::PrecisionExhausted { remaining: self.prec - self.min_pow })
                }
            }
        }
    }

    /// `(valuation, leading digit)` of a provably nonzero element.
    pub fn leading(&self) -> Result<(i64, FqElem)> {
        let v = self.valuation()?;
        Ok((v, self.coeff(v)?))
    }

    /// The residue digit at exponent zero of a unit (valuation 0).
    pub fn unit_residue(&self) -> Result<FqElem> {
        let (v, c) = self.leading()?;
        if v != 0 {
            return Err(Error::BadParameter(format!("expected a unit, valuation is {v}")));
        }
        Ok(c)
    }

    // -- arithmetic ---------------------------------------------------------

    fn normalize(&mut self) {
        // Cap stored digits at the precision bound.
        if self.prec != PREC_EXACT {
            let max_len = (self.prec - self.min_pow).max(0) as usize;
            self.coeffs.truncate(max_len);
        }
        // Trim trailing zeros (they are implied).
        while self.coeffs.last().map(FqElem::is_zero).unwrap_or(false) {
            self.coeffs.pop();
        }
        // Advance past stored leading zeros: they are verified digits, so
        // the valuation floor may move up to the first possibly-nonzero
        // one. Without this, cancellation leaves pessimistic floors that
        // compound additively through products and blow up the digit
        // window. (When every tracked digit vanishes the floor must stay
        // where it is: `prec - min_pow` is the evidence that the element
        // is zero to working precision.)
        if let Some(i) = self.coeffs.iter().position(|c| !c.is_zero()) {
            if i > 0 {
                self.coeffs.drain(..i);
                self.min_pow += i as i64;
            }
        }
        // Exact zero keeps a canonical shape.
        if self.coeffs.is_empty() && self.is_exact() {
            self.min_pow = 0;
        }
    }

    /// Multiplies by `π^s` (exact shift).
    pub fn shifted(&self, s: i64) -> KElem {
        let mut out = self.clone();
        if !(out.coeffs.is_empty() && out.is_exact()) {
            out.min_pow += s;
            out.prec = padd(out.prec, s);
        }
        out
    }

    /// Multiplies by a residue constant; exactness preserved.
    pub fn scaled(&self, c: &FqElem) -> KElem {
        if c.is_zero() {
            return KElem::zero(&self.field);
        }
        let mut out = self.clone();
        for d in out.coeffs.iter_mut() {
            *d = &*d * c;
        }
        out.normalize();
        out
    }

    /// The exact element formed by the digits at exponents `< bound`,
    /// discarding the rest (reduction modulo `π^bound` with canonical digit
    /// representatives). Requires all of those digits to be known.
    pub fn digits_below(&self, bound: i64) -> Result<KElem> {
        if self.prec < bound {
            return Err(Error::PrecisionExhausted { remaining: self.prec - self.min_pow });
        }
        let lo = self.min_pow;
        let hi = bound.min(lo + self.coeffs.len() as i64).max(lo);
        let mut digits = Vec::new();
        for s in lo..hi {
            digits.push(self.coeff(s)?);
        }
        Ok(KElem::from_digits(&self.field, lo, &digits))
    }

    /// Drops information past `π^new_prec`.
    pub fn truncated(&self, new_prec: i64) -> KElem {
        if new_prec >= self.prec {
            return self.clone();
        }
        let mut out = self.clone();
        out.prec = new_prec;
        out.min_pow = out.min_pow.min(new_prec);
        out.normalize();
        out
    }

    /// Multiplicative inverse. Monomials invert exactly; genuine series
    /// invert to the field's working precision (relative).
    pub fn inv(&self) -> Result<KElem> {
        if self.try_is_zero()? {
            return Err(Error::Singular("inverse of zero".into()));
        }
        let v = self.valuation()?;
        let nonzero = self.coeffs.iter().filter(|c| !c.is_zero()).count();
        if nonzero == 1 && self.is_exact() {
            let c = self.coeff(v)?;
            return Ok(KElem {
                field: self.field.clone(),
                min_pow: -v,
                coeffs: vec![c.inv()],
                prec: PREC_EXACT,
            });
        }
        // Relative precision available for the result.
        let rel = if self.is_exact() { self.field.prec } else { (self.prec - v).min(self.field.prec) };
        if rel < MIN_DECIDE_DIGITS {
            return Err(Error::PrecisionExhausted { remaining: rel });
        }
        // Write x = c π^v (1 + m): invert the unit part by geometric series
        // with quadratic Newton steps: y <- y (2 - u y).
        let c = self.coeff(v)?;
        let unit = self.shifted(-v).scaled(&c.inv()); // 1 + m
        let mut y = KElem::one(&self.field).truncated(rel);
        let two = KElem::from_integer(&self.field, 2);
        let mut digits = 1i64;
        while digits < rel {
            let uy = (&unit * &y).truncated(rel);
            let corr = &two - &uy;
            y = (&y * &corr).truncated(rel);
            digits *= 2;
        }
        Ok(y.scaled(&c.inv()).shifted(-v))
    }

    pub fn pow(&self, e: i64) -> Result<KElem> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut acc = KElem::one(&self.field);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// `n`-th root of a unit, for `n` coprime to the residue characteristic.
    /// The residue root is chosen canonically (smallest discrete-log index),
    /// then lifted by Newton iteration to the working precision.
    pub fn nth_root_unit(&self, n: u64) -> Result<KElem> {
        let field = &self.field;
        let p = field.residue.p();
        if n == 0 || n % p == 0 {
            return Err(Error::WildRamification { e: n, p });
        }
        let (v, c) = self.leading()?;
        if v != 0 {
            return Err(Error::BadParameter(format!(
                "nth_root_unit needs a unit, got valuation {v}"
            )));
        }
        // Residue root by discrete log: solve n*b ≡ dlog(c) mod (q-1).
        let q1 = field.residue.mult_order();
        let a = c.dlog();
        let g = gcd_u64(n % q1, q1).max(1);
        if a % g != 0 {
            return Err(Error::NoSuchRoots(format!("residue has no {n}-th root")));
        }
        let b = solve_linear_congruence(n % q1, a, q1)
            .ok_or_else(|| Error::NoSuchRoots(format!("residue has no {n}-th root")))?;
        let y0 = KElem::from_residue(field, &FqElem::from_dlog(&field.residue, b));

        let rel = if self.is_exact() { field.prec } else { self.prec.min(field.prec) };
        if rel < MIN_DECIDE_DIGITS {
            return Err(Error::PrecisionExhausted { remaining: rel });
        }
        let n_inv = KElem::from_integer(field, n as i64).inv()?;
        let mut y = y0;
        let mut digits = 1i64;
        while digits < rel {
            // y <- y - (y^n - x) / (n y^{n-1})
            let yn1 = y.pow(n as i64 - 1)?;
            let err = &(&yn1 * &y) - self;
            let corr = &(&err * &yn1.inv()?) * &n_inv;
            y = (&y - &corr).truncated(rel);
            digits *= 2;
        }
        Ok(y)
    }

    /// Square root of a unit (see [`KElem::nth_root_unit`]).
    pub fn sqrt_unit(&self) -> Result<KElem> {
        self.nth_root_unit(2)
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd_u64(b % a, a)
    }
}

/// Smallest nonnegative `b` with `n*b ≡ a (mod m)`, if solvable.
pub fn solve_linear_congruence(n: u64, a: u64, m: u64) -> Option<u64> {
    use num_integer::Integer;
    let g = (n as i128).extended_gcd(&(m as i128));
    let gcd = g.gcd as u64;
    if gcd == 0 || a % gcd != 0 {
        return None;
    }
    let m_red = (m / gcd) as i128;
    let b = ((a / gcd) as i128 * g.x).rem_euclid(m_red);
    Some(b as u64)
}

impl std::ops::Add for &KElem {
    type Output = KElem;
    fn add(self, rhs: &KElem) -> KElem {
        debug_assert!(same_local_field(&self.field, &rhs.field), "local field mismatch");
        let prec = self.prec.min(rhs.prec);
        let lo = self.min_pow.min(rhs.min_pow);
        let hi_excl = if prec == PREC_EXACT {
            (self.min_pow + self.coeffs.len() as i64).max(rhs.min_pow + rhs.coeffs.len() as i64)
        } else {
            prec.min(
                (self.min_pow + self.coeffs.len() as i64).max(rhs.min_pow + rhs.coeffs.len() as i64),
            )
        };
        let len = (hi_excl - lo).max(0) as usize;
        let zero = FqElem::zero(&self.field.residue);
        let mut coeffs = vec![zero; len];
        for (i, c) in self.coeffs.iter().enumerate() {
            let idx = (self.min_pow + i as i64 - lo) as usize;
            if idx < len {
                coeffs[idx] = &coeffs[idx] + c;
            }
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            let idx = (rhs.min_pow + i as i64 - lo) as usize;
            if idx < len {
                coeffs[idx] = &coeffs[idx] + c;
            }
        }
        let mut out = KElem { field: self.field.clone(), min_pow: lo, coeffs, prec };
        out.normalize();
        out
    }
}

impl std::ops::Neg for &KElem {
    type Output = KElem;
    fn neg(self) -> KElem {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = -&*c;
        }
        out
    }
}

impl std::ops::Sub for &KElem {
    type Output = KElem;
    fn sub(self, rhs: &KElem) -> KElem {
        self + &(-rhs)
    }
}

impl std::ops::Mul for &KElem {
    type Output = KElem;
    fn mul(self, rhs: &KElem) -> KElem {
        debug_assert!(same_local_field(&self.field, &rhs.field), "local field mismatch");
        // prec(xy) = min(vfloor(x) + prec(y), vfloor(y) + prec(x)).
        let prec = padd(self.val_floor(), rhs.prec).min(padd(rhs.val_floor(), self.prec));
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            // A (possibly fuzzy) zero: the product has no known digits.
            let mp = padd(self.min_pow, rhs.min_pow).min(prec);
            let mut out =
                KElem { field: self.field.clone(), min_pow: mp, coeffs: Vec::new(), prec };
            out.normalize();
            return out;
        }
        let lo = self.min_pow + rhs.min_pow;
        let full_len = self.coeffs.len() + rhs.coeffs.len() - 1;
        let len = if prec == PREC_EXACT {
            full_len
        } else {
            full_len.min((prec - lo).max(0) as usize)
        };
        let zero = FqElem::zero(&self.field.residue);
        let mut coeffs = vec![zero; len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if !b.is_zero() {
                    coeffs[i + j] = &coeffs[i + j] + &(a * b);
                }
            }
        }
        let mut out = KElem { field: self.field.clone(), min_pow: lo, coeffs, prec };
        out.normalize();
        out
    }
}

impl fmt::Debug for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = self.field.label();
        let mut wrote = false;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let s = self.min_pow + i as i64;
            if wrote {
                write!(f, " + ")?;
            }
            match s {
                0 => write!(f, "{}", c.index())?,
                1 => write!(f, "{}*{}", c.index(), sym)?,
                _ => write!(f, "{}*{}^{}", c.index(), sym, s)?,
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        if self.prec != PREC_EXACT {
            write!(f, " + O({}^{})", sym, self.prec)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::fq;
    use proptest::prelude::*;

    fn kfield() -> LocalField {
        local_field(&fq(5, 1).unwrap(), 32, "t").unwrap()
    }

    fn elem(f: &LocalField, min_pow: i64, digits: &[u64]) -> KElem {
        let ds: Vec<FqElem> = digits.iter().map(|&d| FqElem::from_u64(f.residue(), d)).collect();
        KElem::from_digits(f, min_pow, &ds)
    }

    #[test]
    fn exact_ring_ops() {
        let f = kfield();
        let x = elem(&f, -1, &[2, 0, 1]); // 2t^-1 + t
        let y = elem(&f, 0, &[3, 4]); // 3 + 4t
        let s = &x + &y;
        assert_eq!(s.coeff(-1).unwrap().index(), 2);
        assert_eq!(s.coeff(0).unwrap().index(), 3);
        assert_eq!(s.coeff(1).unwrap().index(), 0); // 1 + 4 = 5 = 0
        assert!(s.is_exact());
        let p = &x * &y;
        // (2t^-1 + t)(3 + 4t) = 6t^-1 + 8 + 3t + 4t^2
        assert_eq!(p.coeff(-1).unwrap().index(), 1); // 6 mod 5
        assert_eq!(p.coeff(0).unwrap().index(), 3); // 8 mod 5
        assert_eq!(p.coeff(1).unwrap().index(), 3);
        assert_eq!(p.coeff(2).unwrap().index(), 4);
        assert!(p.is_exact());
    }

    #[test]
    fn valuations() {
        let f = kfield();
        let x = elem(&f, 2, &[0, 0, 3]);
        assert_eq!(x.valuation().unwrap(), 4);
        assert_eq!(x.leading().unwrap().1.index(), 3);
        assert!(KElem::zero(&f).valuation().is_err());
        let u = KElem::uniformizer_pow(&f, -7);
        assert_eq!(u.valuation().unwrap(), -7);
    }

    #[test]
    fn monomial_inverse_is_exact() {
        let f = kfield();
        let x = elem(&f, 3, &[2]);
        let xi = x.inv().unwrap();
        assert!(xi.is_exact());
        assert_eq!(xi.valuation().unwrap(), -3);
        assert!((&x * &xi).try_eq(&KElem::one(&f)).unwrap());
    }

    #[test]
    fn series_inverse_truncates_to_working_precision() {
        let f = kfield();
        let x = elem(&f, 0, &[1, 1]); // 1 + t
        let xi = x.inv().unwrap();
        assert!(!xi.is_exact());
        assert_eq!(xi.prec(), 32);
        // 1/(1+t) = 1 - t + t^2 - ...
        assert_eq!(xi.coeff(0).unwrap().index(), 1);
        assert_eq!(xi.coeff(1).unwrap().index(), 4);
        assert_eq!(xi.coeff(2).unwrap().index(), 1);
        let prod = &x * &xi;
        assert!(prod.try_eq(&KElem::one(&f)).unwrap());
        assert_eq!(prod.prec(), 32);
    }

    #[test]
    fn inverse_precision_bookkeeping() {
        let f = kfield();
        // x = t^2 (1 + t) known to O(t^10): 8 relative digits.
        let x = elem(&f, 2, &[1, 1]).truncated(10);
        let xi = x.inv().unwrap();
        assert_eq!(xi.valuation().unwrap(), -2);
        // relative precision 8 -> absolute precision -2 + 8 = 6.
        assert_eq!(xi.prec(), 6);
    }

    #[test]
    fn comparison_demands_four_digits() {
        let f = kfield();
        let one = KElem::one(&f);
        let fuzzy = one.truncated(3); // 1 + O(t^3)
        match fuzzy.try_eq(&one) {
            Err(Error::PrecisionExhausted { remaining }) => assert_eq!(remaining, 3),
            other => panic!("expected precision exhaustion, got {other:?}"),
        }
        let ok = one.truncated(10);
        assert!(ok.try_eq(&one).unwrap());
        // A definite difference is decidable even at low precision.
        let y = &one + &KElem::uniformizer_pow(&f, 1);
        assert!(!y.truncated(3).try_eq(&one).unwrap());
    }

    #[test]
    fn precision_propagates_through_products() {
        let f = kfield();
        let x = elem(&f, 0, &[1, 2, 3]).truncated(5); // unit, prec 5
        let y = KElem::uniformizer_pow(&f, 4); // exact
        let p = &x * &y;
        assert_eq!(p.prec(), 9); // 4 + 5
        assert_eq!(p.valuation().unwrap(), 4);
    }

    #[test]
    fn nth_root_of_unit() {
        let f = kfield();
        let x = elem(&f, 0, &[2, 1, 0, 3]); // unit with residue 2
        let x3 = x.pow(3).unwrap();
        let r = x3.nth_root_unit(3).unwrap();
        // gcd(3, q-1) = gcd(3,4) = 1: unique cube root, must recover x.
        assert!(r.try_eq(&x.truncated(r.prec())).unwrap());
        // Wild exponent is rejected.
        assert!(matches!(x.nth_root_unit(5), Err(Error::WildRamification { .. })));
    }

    #[test]
    fn square_root_of_unit_square() {
        let f = kfield();
        let x = elem(&f, 0, &[3, 2, 1]);
        let sq = &x * &x;
        let r = sq.sqrt_unit().unwrap();
        assert!((&r * &r).try_eq(&sq.truncated(r.prec())).unwrap());
        // A residue nonsquare has no square root: 2 is not a square mod 5.
        let ns = elem(&f, 0, &[2]);
        assert!(matches!(
            (&ns * &KElem::one(&f)).nth_root_unit(2),
            Err(Error::NoSuchRoots(_))
        ));
    }

    #[test]
    fn linear_congruence_solver() {
        assert_eq!(solve_linear_congruence(3, 6, 9), Some(2));
        assert_eq!(solve_linear_congruence(4, 2, 6), Some(2)); // 4*2=8≡2 mod 6
        assert_eq!(solve_linear_congruence(4, 3, 6), None);
        assert_eq!(solve_linear_congruence(1, 0, 7), Some(0));
    }

    proptest! {
        #[test]
        fn ring_laws(
            a_digits in proptest::collection::vec(0u64..5, 1..6),
            b_digits in proptest::collection::vec(0u64..5, 1..6),
            c_digits in proptest::collection::vec(0u64..5, 1..6),
            a_min in -3i64..3,
            b_min in -3i64..3,
        ) {
            let f = kfield();
            let a = elem(&f, a_min, &a_digits);
            let b = elem(&f, b_min, &b_digits);
            let c = elem(&f, 0, &c_digits);
            prop_assert!((&(&a + &b) * &c).try_eq(&(&(&a * &c) + &(&b * &c))).unwrap());
            prop_assert!((&a * &b).try_eq(&(&b * &a)).unwrap());
            prop_assert!((&a - &a).try_is_zero().unwrap());
            if !(&a).try_is_zero().unwrap() {
                let ai = a.inv().unwrap();
                prop_assert!((&a * &ai).try_eq(&KElem::one(&f).truncated((&a * &ai).prec())).unwrap());
            }
        }
    }
}
