//! Scalar norm equations in the tame local setting.
//!
//! The form machinery reduces every existence question to a handful of
//! one-variable equations over a commutative local field: square roots,
//! norms along an order-2 automorphism `θ` (`θ(c)·c = target`), and binary
//! forms `x² + c·y² = s`. All three are solved by a residue computation
//! (discrete logarithms and square tests in the residue field) followed by
//! Hensel-style corrections, which converge because the residue
//! characteristic is odd. The tame quadratic Hilbert symbol is included as
//! an independent closed-form oracle against which the solvers are tested.

use crate::arith::{KElem, LocalField};
use crate::error::{Error, Result};
use crate::extension::FieldAut;
use crate::fq::{fq_elements, FqElem};

/// Square root in the field: `Some(x)` with `x² = target`, or `None` when
/// the valuation is odd or the unit part has a nonsquare residue.
pub fn sqrt_in_field(target: &KElem) -> Result<Option<KElem>> {
    if target.try_is_zero()? {
        return Ok(Some(KElem::zero(target.field())));
    }
    let v = target.valuation()?;
    if v.rem_euclid(2) != 0 {
        return Ok(None);
    }
    match target.shifted(-v).sqrt_unit() {
        Ok(r) => Ok(Some(r.shifted(v / 2))),
        Err(Error::NoSuchRoots(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The shape of an order-2 automorphism of a Laurent-series field: either
/// it moves the residue field (the fixed field is then unramified-quadratic
/// underneath) or it only flips the sign of the uniformizer (ramified
/// fixed field).
enum AutKind {
    Identity,
    ResidueNontrivial,
    UniformizerSign,
}

fn classify_involution(theta: &FieldAut) -> Result<AutKind> {
    if theta.is_identity() {
        return Ok(AutKind::Identity);
    }
    if theta.order() != 2 {
        return Err(Error::BadParameter("norm solver needs an automorphism of order 2".into()));
    }
    if theta.frob_p() != 0 {
        Ok(AutKind::ResidueNontrivial)
    } else {
        // Order 2 with trivial residue action forces unit = -1.
        Ok(AutKind::UniformizerSign)
    }
}

/// Solves `θ(c)·c = target` for an order-≤2 automorphism `θ` of the field
/// and a θ-fixed target. Returns `None` when the target is provably not a
/// norm (odd valuation, or the residue obstruction fails).
pub fn solve_norm_for_involution(
    field: &LocalField,
    theta: &FieldAut,
    target: &KElem,
) -> Result<Option<KElem>> {
    if target.try_is_zero()? {
        return Err(Error::BadParameter("norm target must be nonzero".into()));
    }
    let kind = classify_involution(theta)?;
    if matches!(kind, AutKind::Identity) {
        return sqrt_in_field(target);
    }
    let v = target.valuation()?;
    if v.rem_euclid(2) != 0 {
        return Ok(None);
    }
    let kappa = field.residue();
    let t_res = target.leading()?.1;
    // Leading candidate c₀·ϖ^{v/2}: the residue condition differs by case.
    let c0 = match kind {
        AutKind::Identity => unreachable!(),
        AutKind::ResidueNontrivial => {
            // Residue norm is z ↦ z^{1+p^j}; the ϖ^{v/2} factor contributes
            // u^{v/2} through θ(ϖ) = u·ϖ.
            let rhs = &t_res * &theta.unit().pow_signed(-v / 2);
            let exp = (1 + kappa.p().pow(theta.frob_p() as u32)) % kappa.mult_order();
            match crate::arith::solve_linear_congruence(exp, rhs.dlog(), kappa.mult_order()) {
                Some(b) => FqElem::from_dlog(kappa, b),
                None => return Ok(None),
            }
        }
        AutKind::UniformizerSign => {
            // N(z·ϖ^s) = θ(z)z·(-1)^s ϖ^{2s} and θ is trivial on residues,
            // so the unit obstruction is whether (-1)^{v/2}·t̄ is a square.
            let mut rhs = t_res.clone();
            if (v / 2).rem_euclid(2) == 1 {
                rhs = -&rhs;
            }
            match rhs.sqrt() {
                Some(z) => z,
                None => return Ok(None),
            }
        }
    };
    let mut c = KElem::from_residue(field, &c0).shifted(v / 2);
    // θ-fixed corrections: for δ = target/N(c) - 1 (θ-fixed of positive
    // valuation) and w = δ/2, N(c(1+w)) = N(c)·(1 + δ + δ²/4), so the
    // defect valuation doubles every step.
    let half = KElem::from_integer(field, 2).inv()?;
    let cap = field.prec();
    for _ in 0..cap + 2 {
        let n = &theta.apply(&c) * &c;
        let defect = &(target * &n.inv()?) - &KElem::one(field);
        match defect.try_is_zero() {
            Ok(true) => break,
            Ok(false) => {}
            Err(_) => break, // out of digits: converged as far as representable
        }
        let w = &defect * &half;
        c = &c * &(&KElem::one(field) + &w);
        c = c.truncated(cap + v.abs());
    }
    Ok(Some(c))
}

/// Solves `x² + c·y² = s` in the field. `None` means the form provably does
/// not represent `s`. `s = 0` returns the trivial solution.
pub fn solve_binary_norm(c: &KElem, s: &KElem) -> Result<Option<(KElem, KElem)>> {
    let field = c.field().clone();
    if c.try_is_zero()? {
        return Err(Error::Degenerate("binary form needs a nonzero coefficient".into()));
    }
    if s.try_is_zero()? {
        return Ok(Some((KElem::zero(&field), KElem::zero(&field))));
    }
    // Normalize ν(c) into {0, 1} by rescaling y.
    let gamma = c.valuation()?;
    let m = gamma.div_euclid(2);
    let cc = c.shifted(-2 * m);
    let sol = solve_binary_norm_normalized(&cc, s)?;
    Ok(sol.map(|(x, y)| (x, y.shifted(-m))))
}

fn solve_binary_norm_normalized(c: &KElem, s: &KElem) -> Result<Option<(KElem, KElem)>> {
    let field = c.field().clone();
    let gamma = c.valuation()?;
    let vs = s.valuation()?;
    if gamma == 0 {
        let c_res = c.unit_residue()?;
        if let Some(w) = sqrt_in_field(&-c)? {
            // Split form (x+wy)(x-wy): factor s as s·1.
            let half = KElem::from_integer(&field, 2).inv()?;
            let x = &(s + &KElem::one(&field)) * &half;
            let y = &(&(s - &KElem::one(&field)) * &half) * &w.inv()?;
            return Ok(Some((x, y)));
        }
        // Anisotropic unit form: values have even valuation.
        if vs.rem_euclid(2) != 0 {
            return Ok(None);
        }
        let su = s.shifted(-vs);
        let s_res = su.unit_residue()?;
        // A nondegenerate binary form over the residue field represents
        // every nonzero class; find a residue solution and lift the branch
        // whose derivative is a unit.
        for y_res in fq_elements(field.residue()) {
            let r = &s_res - &(&c_res * &(&y_res * &y_res));
            if r.is_zero() {
                // s/c is then a unit square: take x = 0.
                let y = sqrt_in_field(&(&su * &c.inv()?))?
                    .ok_or_else(|| Error::Internal("residue square failed to lift".into()))?;
                return Ok(Some((KElem::zero(&field), y.shifted(vs / 2))));
            }
            if r.is_square() {
                let y = KElem::from_residue(&field, &y_res);
                let x = sqrt_in_field(&(&su - &(c * &(&y * &y))))?
                    .ok_or_else(|| Error::Internal("residue square failed to lift".into()))?;
                return Ok(Some((x.shifted(vs / 2), y.shifted(vs / 2))));
            }
        }
        Err(Error::Internal("binary residue form represented nothing".into()))
    } else {
        // ν(c) = 1: the two halves of x² + cy² have different valuation
        // parities, so the leading term is pure and the tests are exact.
        if vs.rem_euclid(2) == 0 {
            Ok(sqrt_in_field(s)?.map(|x| (x, KElem::zero(&field))))
        } else {
            Ok(sqrt_in_field(&(s * &c.inv()?))?.map(|y| (KElem::zero(&field), y)))
        }
    }
}

/// Tame quadratic Hilbert symbol `(a, b) ∈ {±1}` by the residue formula
/// `(-1)^{αβ(q-1)/2} χ(ū)^β χ(v̄)^α`, where `α, β` are the valuations, `ū,
/// v̄` the unit residues, and `χ` the quadratic residue character.
pub fn hilbert_symbol(a: &KElem, b: &KElem) -> Result<i64> {
    if a.try_is_zero()? || b.try_is_zero()? {
        return Err(Error::BadParameter("Hilbert symbol needs nonzero entries".into()));
    }
    let alpha = a.valuation()?;
    let beta = b.valuation()?;
    let ua = a.leading()?.1;
    let ub = b.leading()?.1;
    let chi = |z: &FqElem| if z.is_square() { 1i64 } else { -1 };
    let q = a.field().residue_order();
    let mut sym = 1;
    if alpha.rem_euclid(2) == 1 && beta.rem_euclid(2) == 1 && ((q - 1) / 2) % 2 == 1 {
        sym = -sym;
    }
    if beta.rem_euclid(2) == 1 {
        sym *= chi(&ua);
    }
    if alpha.rem_euclid(2) == 1 {
        sym *= chi(&ub);
    }
    Ok(sym)
}
