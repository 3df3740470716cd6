//! Splitting self-dual lattice functions along hyperbolic pairs.
//!
//! A self-dual lattice function is determined, one period at a time, by a
//! finite chain of full lattices that the hermitian form maps onto itself
//! (up to re-indexing).  This module locates hyperbolic pairs `(v, w)` whose
//! members sit *tightly* at dual depths of the chain: for such a pair the
//! projector `x ↦ v·εh(w,x) + w·h(v,x)` stabilizes every lattice of the
//! chain, so the chain splits off the plane `vD ⊕ wD` and induction applies.
//! Candidates for the pair are read off from the residue pairings between
//! the graded pieces of the chain, made exactly isotropic by a Hensel-style
//! correction loop, and every step is audited; a failed audit backtracks to
//! the next candidate rather than trusting the convergence argument.
//!
//! On top of the splitting sit the constructions used by the verification
//! suites: standard self-dual functions built from a Witt basis and a list
//! of pair offsets, random self-dual functions with a prescribed jump
//! profile, and unitary witnesses conjugating one function onto another of
//! the same type.

use std::collections::{BTreeMap, HashSet};

use num_rational::Rational64;
use rand::Rng;

use crate::algebra::{dvec_add, dvec_scale_right, dvec_sub, DElem, DMat, DivisionAlgebra};
use crate::arith::{solve_linear_congruence, KElem};
use crate::error::{Error, Result};
use crate::fq::{fq_elements, linalg, Fq, FqElem};
use crate::hermitian::{
    aniso_match, expand, hyperbolic_gram, std_basis, HermitianForm, WittBasis,
};
use crate::latfun::{LatticeFunction, TypeMode};
use crate::lattice::Lattice;

/// Placeholder valuation for zero; larger than any valuation that can occur
/// at the working precision, small enough that sums cannot overflow.
const VAL_INF: i64 = i64::MAX / 4;

/// Rounds of the isotropy-correction loop before a candidate is dropped.
const MAX_EXACTIFY_ROUNDS: usize = 64;

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// Representative of `x` modulo `p` inside `[0, p)`.
fn rat_mod(x: Rational64, p: Rational64) -> Rational64 {
    x - p * (x / p).floor()
}

fn ceil_int(x: Rational64) -> i64 {
    x.ceil().to_integer()
}

/// The central scalar `1/2`, which exists because the residue field is odd.
fn half_scalar(alg: &DivisionAlgebra) -> Result<DElem> {
    DElem::from_center(alg, &KElem::from_integer(alg.base(), 2)).inv()
}

/// Valuation in uniformizer units, with zero mapped to [`VAL_INF`].
fn val_or_inf(x: &DElem) -> Result<i64> {
    if x.try_is_zero()? {
        Ok(VAL_INF)
    } else {
        x.val_scaled()
    }
}

/// Image of an integral element in the residue field of the algebra.
fn residue_of(x: &DElem) -> Result<FqElem> {
    if x.try_is_zero()? {
        return Ok(FqElem::zero(x.algebra().residue_field()));
    }
    if x.val_scaled()? < 0 {
        return Err(Error::Internal("residue of an element with a pole".into()));
    }
    x.comps()[0].coeff(0)
}

/// A unit (or zero) of the valuation ring reducing to the given residue.
fn lift_residue(alg: &DivisionAlgebra, c: &FqElem) -> DElem {
    DElem::from_comp_field(alg, &KElem::from_residue(alg.comp_field(), c))
}

/// Member `j` of a lattice chain extended periodically by `L_{j+r} = L_j·π`.
fn window_lattice(window: &[Lattice], j: i64) -> Lattice {
    let r = window.len() as i64;
    window[j.rem_euclid(r) as usize].scaled_pi(j.div_euclid(r))
}

/// The largest chain index `j` with `v ∈ L_j`, for a nonzero vector `v`.
pub fn chain_level(window: &[Lattice], v: &[DElem]) -> Result<i64> {
    let r = window.len() as i64;
    let mut best: Option<i64> = None;
    for i in 0..r {
        let coords = window[i as usize].coords(v)?;
        let mut low = VAL_INF;
        for c in &coords {
            low = low.min(val_or_inf(c)?);
        }
        if low == VAL_INF {
            return Err(Error::Internal("chain level of the zero vector".into()));
        }
        let cand = i + r * low;
        if best.map_or(true, |b| cand > b) {
            best = Some(cand);
        }
    }
    Ok(best.expect("window is nonempty"))
}

/// The exponent `e` with `L ∩ uD = u·π^e·o`, for a nonzero vector `u` in the
/// span of the full lattice `L`.
pub fn line_exponent(l: &Lattice, u: &[DElem]) -> Result<i64> {
    let coords = l.coords(u)?;
    let mut low = VAL_INF;
    for c in &coords {
        low = low.min(val_or_inf(c)?);
    }
    if low == VAL_INF {
        return Err(Error::Internal("line exponent of the zero vector".into()));
    }
    Ok(-low)
}

// ---------------------------------------------------------------------------
// Self-dual chains
// ---------------------------------------------------------------------------

/// One period of a self-dual lattice function, as a chain `L_0 ⊋ … ⊋ L_{r-1}`
/// with `L_j^# = L_{c-j}` for a duality constant `c ∈ {0, 1}`.
pub struct SelfdualChain {
    /// Jump times of the function, one per chain member.
    pub breaks: Vec<Rational64>,
    /// The window `L_0, …, L_{r-1}`; later members follow by `L_{j+r} = L_j·π`.
    pub lattices: Vec<Lattice>,
    /// Number of jumps per period.
    pub r: i64,
    /// Duality constant: `1` when `0` is a jump time, `0` otherwise.
    pub c: i64,
}

/// Extracts the lattice chain of a self-dual function together with its
/// duality constant, rejecting functions that are not self-dual for `h`.
pub fn selfdual_chain(h: &HermitianForm, f: &LatticeFunction) -> Result<SelfdualChain> {
    let alg = h.algebra();
    if f.ambient() != h.dim() {
        return Err(Error::BadParameter(format!(
            "function has ambient rank {}, form has rank {}",
            f.ambient(),
            h.dim()
        )));
    }
    let d = alg.d() as i64;
    if f.period() != Rational64::new(1, d) {
        return Err(Error::BadParameter(format!(
            "self-dual chains need period 1/{d}, function has period {}",
            f.period()
        )));
    }
    // Function-level self-duality carries the time anchoring, which the
    // chain alone does not see (a translate has the same chain of lattices).
    if !h.is_selfdual(f)? {
        return Err(Error::NotSelfDual("the function differs from its dual".into()));
    }
    let r = f.chain_len() as i64;
    let window: Vec<Lattice> = (0..r).map(|j| f.lattice_at_level(j)).collect();
    // Locate the dual of the top lattice inside the chain; self-duality
    // leaves exactly the two anchorings L_0^# = L_0 and L_0^# = L_1.
    let dual0 = h.dual_lattice(&window[0])?;
    let c = if dual0.try_eq(&window[0])? {
        0
    } else if dual0.try_eq(&f.lattice_at_level(1))? {
        1
    } else {
        return Err(Error::Internal(
            "dual of the top lattice is not adjacent in the chain".into(),
        ));
    };
    for j in 0..r {
        let dj = h.dual_lattice(&f.lattice_at_level(j))?;
        if !dj.try_eq(&f.lattice_at_level(c - j))? {
            return Err(Error::Internal(format!(
                "dual of chain member {j} is not chain member {}",
                c - j
            )));
        }
    }
    // The constant is pinned by whether the function jumps at time zero.
    let zero_is_break = f.breaks()[0] == Rational64::from_integer(0);
    if (c == 1) != zero_is_break {
        return Err(Error::Internal(
            "duality constant disagrees with the jump at time zero".into(),
        ));
    }
    Ok(SelfdualChain { breaks: f.breaks().to_vec(), lattices: window, r, c })
}

// ---------------------------------------------------------------------------
// Residue pairings of graded pieces
// ---------------------------------------------------------------------------

/// A sesquilinear form over the residue field: `f(u, v) = Σ σ(u_s)·G[s][t]·v_t`
/// with `σ` a power of Frobenius and `f(v, u) = sign·σ(f(u, v))`.
struct ResidueForm {
    field: Fq,
    frob: usize,
    sign: i64,
    gram: Vec<Vec<FqElem>>,
}

impl ResidueForm {
    fn twist(&self, x: &FqElem) -> FqElem {
        x.frobenius(self.frob)
    }

    fn eval(&self, u: &[FqElem], v: &[FqElem]) -> FqElem {
        let mut acc = FqElem::zero(&self.field);
        for (s, us) in u.iter().enumerate() {
            if us.is_zero() {
                continue;
            }
            let tu = self.twist(us);
            for (t, vt) in v.iter().enumerate() {
                if vt.is_zero() {
                    continue;
                }
                acc = &acc + &(&(&tu * &self.gram[s][t]) * vt);
            }
        }
        acc
    }
}

fn fqv_scale(v: &[FqElem], c: &FqElem) -> Vec<FqElem> {
    v.iter().map(|x| x * c).collect()
}

fn fqv_add(a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn fqv_sub(a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// A nonzero vector outside the radical with `f(v, v) = 0`, or `None` when
/// the form is anisotropic modulo its radical.
fn residue_isotropic(rf: &ResidueForm) -> Result<Option<Vec<FqElem>>> {
    let field = &rf.field;
    let n = rf.gram.len();
    // Complement the radical by the standard vectors at the non-pivot
    // coordinates of its row space: those meet the radical trivially.
    let mut rad = linalg::kernel(&rf.gram, n, field);
    let pivots = linalg::rref(&mut rad);
    let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
    let comp: Vec<usize> = (0..n).filter(|j| !pivot_set.contains(j)).collect();
    if comp.is_empty() {
        return Ok(None);
    }
    let unit = |j: usize| {
        let mut v = vec![FqElem::zero(field); n];
        v[j] = FqElem::one(field);
        v
    };
    // Alternating forms vanish identically on the diagonal.
    if rf.frob == 0 && rf.sign == -1 {
        return Ok(Some(unit(comp[0])));
    }
    // A complement vector that is its own zero is already an answer.
    for &j in &comp {
        if rf.eval(&unit(j), &unit(j)).is_zero() {
            return Ok(Some(unit(j)));
        }
    }
    if comp.len() == 1 {
        return Ok(None);
    }
    // Orthogonalize the second complement vector against the first.
    let e0 = unit(comp[0]);
    let d0 = rf.eval(&e0, &e0);
    let c = &d0.inv() * &rf.eval(&e0, &unit(comp[1]));
    let e1 = fqv_sub(&unit(comp[1]), &fqv_scale(&e0, &c));
    let d1 = rf.eval(&e1, &e1);
    if d1.is_zero() {
        return Ok(Some(e1));
    }
    if rf.frob != 0 {
        // Twisted case: the norm to the fixed field is onto, so any plane
        // is isotropic; solve z·σ(z) = -d1/d0 by discrete logarithm.
        let target = -&(&d1 * &d0.inv());
        let m = field.mult_order();
        let mut pe = 1u64;
        for _ in 0..rf.frob {
            pe = ((pe as u128 * field.p() as u128) % m as u128) as u64;
        }
        let Some(b) = solve_linear_congruence((1 + pe) % m, target.dlog(), m) else {
            return Err(Error::Internal("residue norm equation is insolvable".into()));
        };
        let z = FqElem::from_dlog(field, b);
        let v = fqv_add(&fqv_scale(&e0, &z), &e1);
        if !rf.eval(&v, &v).is_zero() {
            return Err(Error::Internal("residue norm solution is not isotropic".into()));
        }
        return Ok(Some(v));
    }
    // Untwisted symmetric case: a binary form is isotropic exactly when
    // -d0/d1 is a square.
    if let Some(s) = (-&(&d0 * &d1.inv())).sqrt() {
        return Ok(Some(fqv_add(&e0, &fqv_scale(&e1, &s))));
    }
    if comp.len() == 2 {
        return Ok(None);
    }
    // Three or more variables: a diagonal quadric has a point over a finite
    // field; find one by enumerating the first coordinate.
    let mut e2 = unit(comp[2]);
    let c0 = &d0.inv() * &rf.eval(&e0, &e2);
    e2 = fqv_sub(&e2, &fqv_scale(&e0, &c0));
    let c1 = &d1.inv() * &rf.eval(&e1, &e2);
    e2 = fqv_sub(&e2, &fqv_scale(&e1, &c1));
    let d2 = rf.eval(&e2, &e2);
    if d2.is_zero() {
        return Ok(Some(e2));
    }
    for x in fq_elements(field) {
        let rhs = -&(&(&(&x * &x) * &d0) + &d2);
        if let Some(y) = (&rhs * &d1.inv()).sqrt() {
            let v = fqv_add(&fqv_add(&fqv_scale(&e0, &x), &fqv_scale(&e1, &y)), &e2);
            return Ok(Some(v));
        }
    }
    Err(Error::Internal("diagonal ternary form has no residue zero".into()))
}

// ---------------------------------------------------------------------------
// Graded pieces of one or two chains
// ---------------------------------------------------------------------------

/// A graded piece of the chain filtration(s): for one chain the quotient
/// `L_a/L_{a+1}`, for two chains the bigraded refinement
/// `(L_a ∩ L'_b) / (L_{a+1} ∩ L'_b + L_a ∩ L'_{b+1})`.
struct Piece {
    levels: Vec<i64>,
    basis: Vec<Vec<DElem>>,
}

/// Current coordinates of the splitting recursion: an embedding of the
/// remaining orthogonal complement and the chains rewritten inside it.
struct StepState {
    space: Vec<Vec<DElem>>,
    windows: Vec<Vec<Lattice>>,
}

/// A candidate hyperbolic pair before exactification: `x` from one graded
/// piece and a partner `w0` from the dual piece, with the chain levels both
/// are expected to hold tightly.
struct Candidate {
    x: Vec<DElem>,
    w0: Vec<DElem>,
    x_levels: Vec<i64>,
    w_levels: Vec<i64>,
}

/// Basis vectors of `M/N` read off an adapted basis: the members that fall
/// into `N` only after one multiplication by the uniformizer.
fn piece_basis(m: &Lattice, n: &Lattice) -> Result<Vec<Vec<DElem>>> {
    let mut out = Vec::new();
    for (b, e) in m.adapted_to(n)? {
        match e {
            0 => {}
            1 => out.push(b),
            _ => {
                return Err(Error::Internal(
                    "consecutive chain members differ by more than one uniformizer power".into(),
                ))
            }
        }
    }
    Ok(out)
}

fn enumerate_pieces(rc: &[(i64, i64)], windows: &[Vec<Lattice>]) -> Result<Vec<Piece>> {
    let r0 = rc[0].0;
    let mut out = Vec::new();
    for a in 0..r0 {
        let la = window_lattice(&windows[0], a);
        let la1 = window_lattice(&windows[0], a + 1);
        let total = la.quotient_dim(&la1)?;
        if total == 0 {
            continue;
        }
        if windows.len() == 1 {
            out.push(Piece { levels: vec![a], basis: piece_basis(&la, &la1)? });
            continue;
        }
        // Scan the second chain for the deepest member containing L_a, then
        // walk upward until the bigraded pieces exhaust dim L_a/L_{a+1}.
        let w1 = &windows[1];
        let cap = 4 * (rc[1].0 + r0) + 64;
        let mut b = 0i64;
        let mut steps = 0;
        if window_lattice(w1, b).contains_lattice(&la)? {
            while window_lattice(w1, b + 1).contains_lattice(&la)? {
                b += 1;
                steps += 1;
                if steps > cap {
                    return Err(Error::Internal("chain comparison does not stabilize".into()));
                }
            }
        } else {
            loop {
                b -= 1;
                steps += 1;
                if steps > cap {
                    return Err(Error::Internal("chain comparison does not stabilize".into()));
                }
                if window_lattice(w1, b).contains_lattice(&la)? {
                    break;
                }
            }
        }
        let mut acc = 0u64;
        let mut steps = 0;
        while acc < total {
            steps += 1;
            if steps > cap {
                return Err(Error::Internal("bigraded pieces do not exhaust the level".into()));
            }
            let lb = window_lattice(w1, b);
            let lb1 = window_lattice(w1, b + 1);
            let m = la.intersect(&lb)?;
            let n = la1.intersect(&lb)?.sum(&la.intersect(&lb1)?)?;
            let dim = m.quotient_dim(&n)?;
            if dim > 0 {
                let basis = piece_basis(&m, &n)?;
                if basis.len() as u64 != dim {
                    return Err(Error::Internal("bigraded piece has the wrong rank".into()));
                }
                out.push(Piece { levels: vec![a, b], basis });
                acc += dim;
            }
            b += 1;
        }
    }
    Ok(out)
}

/// Reads candidate pairs off the residue pairings between dual pieces: for
/// pieces paired with a different piece any basis vector with a unit pairing
/// qualifies, while a piece paired with itself first needs an isotropic
/// vector of its residue form.
fn build_candidates(
    h_sub: &HermitianForm,
    rc: &[(i64, i64)],
    pieces: &[Piece],
) -> Result<Vec<Candidate>> {
    let alg = h_sub.algebra();
    let field = alg.residue_field().clone();
    let r0 = rc[0].0;
    let mut out = Vec::new();
    for (pi, piece) in pieces.iter().enumerate() {
        let sigma: Vec<i64> =
            piece.levels.iter().zip(rc).map(|(l, (_, c))| c - 1 - l).collect();
        // Normalize the dual levels to a window key plus a uniform π-shift.
        let a1 = sigma[0].rem_euclid(r0);
        let shift = (sigma[0] - a1) / r0;
        let mut key = vec![a1];
        if sigma.len() == 2 {
            key.push(sigma[1] - shift * rc[1].0);
        }
        let Some(qi) = pieces.iter().position(|p| p.levels == key) else {
            continue;
        };
        let pik = DElem::pi_pow(alg, shift);
        if qi == pi {
            // The piece pairs with itself at shift π^shift: assemble the
            // residue form, probing its twist and symmetry sign.
            let nb = piece.basis.len();
            let mut gram = vec![vec![FqElem::zero(&field); nb]; nb];
            let mut any = false;
            for s in 0..nb {
                for t in 0..nb {
                    let val = &pik * &h_sub.eval(&piece.basis[s], &piece.basis[t])?;
                    gram[s][t] = residue_of(&val)?;
                    any = any || !gram[s][t].is_zero();
                }
            }
            if !any {
                continue;
            }
            let gen = FqElem::generator(&field);
            let img = residue_of(
                &(&(&pik * &h_sub.rho().apply(&lift_residue(alg, &gen)))
                    * &DElem::pi_pow(alg, -shift)),
            )?;
            let mut frob = None;
            for j in 0..field.degree() {
                if gen.frobenius(j) == img {
                    frob = Some(j);
                    break;
                }
            }
            let Some(frob) = frob else {
                return Err(Error::Internal("residue twist is not a field power".into()));
            };
            if img.frobenius(frob) != gen {
                return Err(Error::Internal("residue twist is not an involution".into()));
            }
            let mut sign = 0i64;
            'probe: for s in 0..nb {
                for t in 0..nb {
                    if !gram[s][t].is_zero() {
                        let ratio = &gram[t][s] * &gram[s][t].frobenius(frob).inv();
                        if ratio.is_one() {
                            sign = 1;
                        } else if (-&ratio).is_one() {
                            sign = -1;
                        } else {
                            return Err(Error::Internal(
                                "residue symmetry is not a sign".into(),
                            ));
                        }
                        break 'probe;
                    }
                }
            }
            let rf = ResidueForm { field: field.clone(), frob, sign, gram };
            for s in 0..nb {
                for t in 0..nb {
                    let lhs = rf.gram[t][s].clone();
                    let rhs = rf.twist(&rf.gram[s][t]);
                    let rhs = if sign == -1 { -&rhs } else { rhs };
                    if lhs != rhs {
                        return Err(Error::Internal(
                            "residue pairing violates its symmetry".into(),
                        ));
                    }
                }
            }
            let Some(z) = residue_isotropic(&rf)? else {
                continue;
            };
            let mut x = vec![DElem::zero(alg); h_sub.dim()];
            for (bs, zs) in piece.basis.iter().zip(&z) {
                x = dvec_add(&x, &dvec_scale_right(bs, &lift_residue(alg, zs)));
            }
            let mut unit_t = vec![FqElem::zero(&field); nb];
            for t in 0..nb {
                unit_t[t] = FqElem::one(&field);
                let pairing = rf.eval(&z, &unit_t);
                unit_t[t] = FqElem::zero(&field);
                if !pairing.is_zero() {
                    out.push(Candidate {
                        x,
                        w0: dvec_scale_right(&piece.basis[t], &pik),
                        x_levels: piece.levels.clone(),
                        w_levels: sigma.clone(),
                    });
                    break;
                }
            }
        } else {
            let partner = &pieces[qi];
            for bs in &piece.basis {
                for bt in &partner.basis {
                    let w0 = dvec_scale_right(bt, &pik);
                    let pairing = h_sub.eval(bs, &w0)?;
                    if !pairing.try_is_zero()? && pairing.val_scaled()? == 0 {
                        out.push(Candidate {
                            x: bs.clone(),
                            w0,
                            x_levels: piece.levels.clone(),
                            w_levels: sigma.clone(),
                        });
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Corrects a candidate into an exact hyperbolic pair: first makes `x`
/// isotropic by the iteration `x ← x − w̃·(h(x,x)/2)` against the normalized
/// partner, then makes the partner isotropic in a single step.  Returns
/// `None` when the iteration stalls or a unit pairing is lost.
fn exactify_pair(
    h_sub: &HermitianForm,
    cand: &Candidate,
) -> Result<Option<(Vec<DElem>, Vec<DElem>)>> {
    let alg = h_sub.algebra();
    let half = half_scalar(alg)?;
    let mut x = cand.x.clone();
    let u = h_sub.eval(&x, &cand.w0)?;
    if u.try_is_zero()? || u.val_scaled()? != 0 {
        return Ok(None);
    }
    let w1 = dvec_scale_right(&cand.w0, &u.inv()?);
    let mut alpha = h_sub.eval(&x, &x)?;
    let beta = h_sub.eval(&w1, &w1)?;
    if val_or_inf(&alpha)?.saturating_add(val_or_inf(&beta)?) < 1 {
        return Ok(None);
    }
    let mut last = val_or_inf(&alpha)?;
    for _ in 0..MAX_EXACTIFY_ROUNDS {
        if alpha.try_is_zero()? {
            break;
        }
        let u = h_sub.eval(&x, &w1)?;
        if u.try_is_zero()? || u.val_scaled()? != 0 {
            return Ok(None);
        }
        let wt = dvec_scale_right(&w1, &u.inv()?);
        x = dvec_sub(&x, &dvec_scale_right(&wt, &(&alpha * &half)));
        alpha = h_sub.eval(&x, &x)?;
        let nv = val_or_inf(&alpha)?;
        if nv <= last {
            return Ok(None);
        }
        last = nv;
    }
    if !alpha.try_is_zero()? {
        return Ok(None);
    }
    let u = h_sub.eval(&x, &w1)?;
    if u.try_is_zero()? || u.val_scaled()? != 0 {
        return Ok(None);
    }
    let wt = dvec_scale_right(&w1, &u.inv()?);
    let mut c = &h_sub.eval(&wt, &wt)? * &half;
    if h_sub.epsilon() == -1 {
        c = -&c;
    }
    let w = dvec_sub(&wt, &dvec_scale_right(&x, &c));
    let one = DElem::one(alg);
    if !h_sub.eval(&x, &x)?.try_is_zero()?
        || !h_sub.eval(&w, &w)?.try_is_zero()?
        || !h_sub.eval(&x, &w)?.try_eq(&one)?
    {
        return Ok(None);
    }
    Ok(Some((x, w)))
}

/// Splits the plane of an exact pair off the current state: checks that the
/// associated projector stabilizes every chain member, and rewrites the
/// chains inside the orthogonal complement.  `None` rejects the pair.
fn project_state(
    h_sub: &HermitianForm,
    state: &StepState,
    v: &[DElem],
    w: &[DElem],
) -> Result<Option<StepState>> {
    let alg = h_sub.algebra();
    let n = state.space.len();
    let pr = |x: &[DElem]| -> Result<Vec<DElem>> {
        let mut cw = h_sub.eval(w, x)?;
        if h_sub.epsilon() == -1 {
            cw = -&cw;
        }
        let cv = h_sub.eval(v, x)?;
        Ok(dvec_add(&dvec_scale_right(v, &cw), &dvec_scale_right(w, &cv)))
    };
    let mut proj_cols = Vec::with_capacity(n);
    for e in std_basis(alg, n) {
        proj_cols.push(dvec_sub(&e, &pr(&e)?));
    }
    let span = Lattice::from_columns(alg, n, &proj_cols)?;
    if span.rank() + 2 != n {
        return Ok(None);
    }
    let new_space: Vec<Vec<DElem>> =
        span.basis_cols().iter().map(|b| expand(&state.space, b)).collect();
    let mut new_windows = Vec::with_capacity(state.windows.len());
    for window in &state.windows {
        let mut new_window = Vec::with_capacity(window.len());
        for l in window {
            let mut cols = Vec::with_capacity(l.rank());
            for col in l.basis_cols() {
                let image = pr(col)?;
                if !l.contains(&image)? {
                    return Ok(None);
                }
                cols.push(span.coords(&dvec_sub(col, &image))?);
            }
            let nl = Lattice::from_columns(alg, n - 2, &cols)?;
            if nl.rank() + 2 != n {
                return Ok(None);
            }
            new_window.push(nl);
        }
        new_windows.push(new_window);
    }
    Ok(Some(StepState { space: new_space, windows: new_windows }))
}

struct SplitOutcome {
    pairs: Vec<(Vec<DElem>, Vec<DElem>)>,
    aniso: Vec<Vec<DElem>>,
    aniso_values: Vec<DElem>,
}

fn split_rec(
    h: &HermitianForm,
    rc: &[(i64, i64)],
    state: &StepState,
    budget: &mut i64,
) -> Result<Option<SplitOutcome>> {
    if state.space.is_empty() {
        return Ok(Some(SplitOutcome { pairs: Vec::new(), aniso: Vec::new(), aniso_values: Vec::new() }));
    }
    let alg = h.algebra();
    let h_sub = h.restricted(&state.space)?;
    let pieces = enumerate_pieces(rc, &state.windows)?;
    for cand in build_candidates(&h_sub, rc, &pieces)? {
        if *budget <= 0 {
            break;
        }
        *budget -= 1;
        let Some((v, w)) = exactify_pair(&h_sub, &cand)? else {
            continue;
        };
        // Tightness at the expected dual depths, chain by chain.
        let mut tight = true;
        for (ci, window) in state.windows.iter().enumerate() {
            if chain_level(window, &v)? != cand.x_levels[ci]
                || chain_level(window, &w)? != cand.w_levels[ci]
            {
                tight = false;
                break;
            }
        }
        if !tight {
            continue;
        }
        let Some(next) = project_state(&h_sub, state, &v, &w)? else {
            continue;
        };
        if let Some(mut out) = split_rec(h, rc, &next, budget)? {
            out.pairs.insert(0, (expand(&state.space, &v), expand(&state.space, &w)));
            return Ok(Some(out));
        }
    }
    // No extractable pair left: the remainder must be anisotropic, and each
    // diagonal line must split every chain member on its own.
    if h_sub.isotropic_vector()?.is_some() {
        return Ok(None);
    }
    let Some((cols, vals)) = h_sub.diagonalize()? else {
        return Ok(None);
    };
    for window in &state.windows {
        for l in window {
            let mut built = Vec::with_capacity(cols.len());
            for u in &cols {
                let e = line_exponent(l, u)?;
                built.push(dvec_scale_right(u, &DElem::pi_pow(alg, e)));
            }
            let rebuilt = Lattice::from_columns(alg, l.ambient(), &built)?;
            if !rebuilt.try_eq(l)? {
                return Ok(None);
            }
        }
    }
    let aniso = cols.iter().map(|c| expand(&state.space, c)).collect();
    Ok(Some(SplitOutcome { pairs: Vec::new(), aniso, aniso_values: vals }))
}

// ---------------------------------------------------------------------------
// Witt decompositions compatible with chains
// ---------------------------------------------------------------------------

/// A hyperbolic decomposition of a hermitian space that simultaneously
/// splits the given self-dual lattice functions: every chain member is the
/// direct sum of its intersections with the spanned lines.
pub struct WittDecomposition {
    /// Hyperbolic pairs `(v_i, w_i)` with `h(v_i, w_i) = 1`.
    pub pairs: Vec<(Vec<DElem>, Vec<DElem>)>,
    /// Orthogonal basis of the anisotropic kernel.
    pub aniso: Vec<Vec<DElem>>,
    /// Values `h(u_l, u_l)` on the anisotropic basis.
    pub aniso_values: Vec<DElem>,
}

impl WittDecomposition {
    /// All basis vectors in the order `v_1, w_1, …, v_r, w_r, u_1, …`.
    pub fn columns(&self) -> Vec<Vec<DElem>> {
        let mut out = Vec::new();
        for (v, w) in &self.pairs {
            out.push(v.clone());
            out.push(w.clone());
        }
        out.extend(self.aniso.iter().cloned());
        out
    }

    /// Number of hyperbolic pairs.
    pub fn index(&self) -> usize {
        self.pairs.len()
    }
}

/// Whether every lattice of the function is the direct sum of its
/// intersections with the lines of the decomposition.
pub fn splits_function(dec: &WittDecomposition, f: &LatticeFunction) -> Result<bool> {
    let alg = f.algebra();
    let lines = dec.columns();
    for l in f.lattices() {
        let mut cols = Vec::with_capacity(lines.len());
        for u in &lines {
            let e = line_exponent(l, u)?;
            cols.push(dvec_scale_right(u, &DElem::pi_pow(alg, e)));
        }
        let rebuilt = Lattice::from_columns(alg, f.ambient(), &cols)?;
        if !rebuilt.try_eq(l)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Computes a Witt decomposition of `h` splitting up to two self-dual
/// lattice functions at once.  With no chains this is an unconstrained
/// hyperbolic decomposition; otherwise candidates are read off the residue
/// pairings of the graded chain pieces and audited one by one, backtracking
/// on failure.  The result is audited against the expected Gram matrix and
/// against every chain member before it is returned.
pub fn witt_decompose(h: &HermitianForm, chains: &[&LatticeFunction]) -> Result<WittDecomposition> {
    if chains.len() > 2 {
        return Err(Error::BadParameter(
            "at most two lattice functions can be split simultaneously".into(),
        ));
    }
    let alg = h.algebra();
    if chains.is_empty() {
        let wb = h.witt_basis()?;
        return Ok(WittDecomposition {
            pairs: wb.pairs,
            aniso: wb.kernel,
            aniso_values: wb.kernel_values,
        });
    }
    let mut rc = Vec::with_capacity(chains.len());
    let mut windows = Vec::with_capacity(chains.len());
    for f in chains {
        let sc = selfdual_chain(h, f)?;
        rc.push((sc.r, sc.c));
        windows.push(sc.lattices);
    }
    let state = StepState { space: std_basis(alg, h.dim()), windows };
    let mut budget = 64 * (h.dim() as i64 + 2);
    let Some(out) = split_rec(h, &rc, &state, &mut budget)? else {
        return Err(Error::SplitFailure(
            "graded candidate search exhausted without a full splitting".into(),
        ));
    };
    let dec =
        WittDecomposition { pairs: out.pairs, aniso: out.aniso, aniso_values: out.aniso_values };
    let cols = dec.columns();
    let expected = hyperbolic_gram(alg, h.epsilon(), dec.pairs.len(), &dec.aniso_values);
    if !h.restricted(&cols)?.gram().try_eq(&expected)? {
        return Err(Error::Internal("decomposition has the wrong Gram matrix".into()));
    }
    for f in chains {
        if !splits_function(&dec, f)? {
            return Err(Error::Internal("decomposition fails to split a chain".into()));
        }
    }
    Ok(dec)
}

// ---------------------------------------------------------------------------
// Moving and building self-dual functions
// ---------------------------------------------------------------------------

/// Applies an invertible matrix to every lattice of a function.
pub fn transform_function(g: &DMat, f: &LatticeFunction) -> Result<LatticeFunction> {
    let alg = f.algebra();
    let mut pairs = Vec::with_capacity(f.chain_len());
    for (t, l) in f.breaks().iter().zip(f.lattices()) {
        let cols: Vec<Vec<DElem>> = l.basis_cols().iter().map(|c| g.apply(c)).collect();
        pairs.push((*t, Lattice::from_columns(alg, f.ambient(), &cols)?));
    }
    LatticeFunction::from_breakpoints(alg, f.period(), pairs)
}

/// The standard self-dual function attached to a Witt basis: the pair with
/// offset `s` contributes the lines `v·𝔭^⌈d(t-s)⌉ ⊕ w·𝔭^⌈d(t+s)⌉`, and an
/// anisotropic line of value with uniformizer valuation `ω` contributes
/// `u·𝔭^⌈dt - ω/2⌉`, where `1/d` is the period.
pub fn standard_selfdual_function(
    h: &HermitianForm,
    basis: &WittBasis,
    offsets: &[Rational64],
) -> Result<LatticeFunction> {
    let alg = h.algebra();
    if offsets.len() != basis.pairs.len() {
        return Err(Error::BadParameter(format!(
            "{} offsets supplied for {} hyperbolic pairs",
            offsets.len(),
            basis.pairs.len()
        )));
    }
    if 2 * basis.pairs.len() + basis.kernel.len() != h.dim() {
        return Err(Error::BadParameter("Witt basis does not span the space".into()));
    }
    let d = alg.d() as i64;
    let dr = Rational64::from_integer(d);
    let period = Rational64::new(1, d);
    let mut times: Vec<Rational64> = Vec::new();
    for s in offsets {
        times.push(rat_mod(*s, period));
        times.push(rat_mod(-*s, period));
    }
    for val in &basis.kernel_values {
        times.push(rat_mod(Rational64::new(val.val_scaled()?, 2 * d), period));
    }
    times.sort();
    times.dedup();
    let mut pairs_out = Vec::with_capacity(times.len());
    for t in &times {
        let mut cols = Vec::with_capacity(h.dim());
        for ((v, w), s) in basis.pairs.iter().zip(offsets) {
            let ev = ceil_int((*t - *s) * dr);
            let ew = ceil_int((*t + *s) * dr);
            cols.push(dvec_scale_right(v, &DElem::pi_pow(alg, ev)));
            cols.push(dvec_scale_right(w, &DElem::pi_pow(alg, ew)));
        }
        for (u, val) in basis.kernel.iter().zip(&basis.kernel_values) {
            let e = ceil_int(*t * dr - Rational64::new(val.val_scaled()?, 2));
            cols.push(dvec_scale_right(u, &DElem::pi_pow(alg, e)));
        }
        pairs_out.push((*t, Lattice::from_columns(alg, h.dim(), &cols)?));
    }
    let f = LatticeFunction::from_breakpoints(alg, period, pairs_out)?;
    if !h.is_selfdual(&f)? {
        return Err(Error::Internal("assembled standard function is not self-dual".into()));
    }
    Ok(f)
}

/// A random self-dual function with the prescribed jump profile (the output
/// of `type_vector`, in any order).  The profile must be mirror-symmetric
/// and compatible with the form: one jump per anisotropic line at the time
/// forced by its value, with the rest grouped into offset pairs.  The
/// standard function with those offsets is then mixed by a random unitary.
pub fn random_selfdual_function<R: Rng>(
    h: &HermitianForm,
    profile: &[(Rational64, u64)],
    rng: &mut R,
    mix_steps: usize,
) -> Result<LatticeFunction> {
    let alg = h.algebra();
    let d = alg.d() as i64;
    let period = Rational64::new(1, d);
    let zero = Rational64::from_integer(0);
    if profile.is_empty() {
        return Err(Error::InconsistentProfile("empty jump profile".into()));
    }
    let mut seen: BTreeMap<Rational64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for (t, dim) in profile {
        if *t < zero || *t >= period {
            return Err(Error::InconsistentProfile(format!(
                "jump time {t} lies outside [0, {period})"
            )));
        }
        if *dim == 0 {
            return Err(Error::InconsistentProfile(format!("zero-dimensional jump at {t}")));
        }
        if seen.insert(*t, *dim).is_some() {
            return Err(Error::InconsistentProfile(format!("repeated jump time {t}")));
        }
        total += dim;
    }
    if total != h.dim() as u64 {
        return Err(Error::InconsistentProfile(format!(
            "jump dimensions sum to {total}, the space has rank {}",
            h.dim()
        )));
    }
    // Self-dual functions jump symmetrically around zero.
    for (t, dim) in &seen {
        let mirror = rat_mod(-*t, period);
        if seen.get(&mirror).copied().unwrap_or(0) != *dim {
            return Err(Error::AsymmetricProfile(format!(
                "jump of dimension {dim} at {t} has no mirror at {mirror}"
            )));
        }
    }
    let expected: Vec<(Rational64, u64)> = seen.iter().map(|(t, d)| (*t, *d)).collect();
    let wb = h.witt_basis()?;
    // Anisotropic lines jump where their values dictate; consume those.
    let mut remaining = seen;
    for val in &wb.kernel_values {
        let pos = rat_mod(Rational64::new(val.val_scaled()?, 2 * d), period);
        match remaining.get_mut(&pos) {
            Some(dim) if *dim > 0 => *dim -= 1,
            _ => {
                return Err(Error::InconsistentProfile(format!(
                    "anisotropic line forces a jump at {pos} that the profile lacks"
                )));
            }
        }
    }
    // Pair the leftover jump dimensions into offsets at mirrored times.
    let mut offsets = Vec::new();
    let keys: Vec<Rational64> = remaining.keys().copied().collect();
    for t in keys {
        let dim = remaining[&t];
        if dim == 0 {
            continue;
        }
        let mirror = rat_mod(-t, period);
        if mirror == t {
            if dim % 2 != 0 {
                return Err(Error::InconsistentProfile(format!(
                    "self-mirrored jump at {t} needs an even dimension, found {dim}"
                )));
            }
            for _ in 0..dim / 2 {
                offsets.push(t);
            }
            *remaining.get_mut(&t).unwrap() = 0;
        } else {
            if remaining[&mirror] != dim {
                return Err(Error::InconsistentProfile(format!(
                    "jumps at {t} and {mirror} keep different dimensions after anisotropic lines"
                )));
            }
            for _ in 0..dim {
                offsets.push(t);
            }
            *remaining.get_mut(&t).unwrap() = 0;
            *remaining.get_mut(&mirror).unwrap() = 0;
        }
    }
    if offsets.len() != wb.pairs.len() {
        return Err(Error::InconsistentProfile(format!(
            "profile needs {} hyperbolic pairs, the form provides {}",
            offsets.len(),
            wb.pairs.len()
        )));
    }
    let f0 = standard_selfdual_function(h, &wb, &offsets)?;
    if f0.type_vector()? != expected {
        return Err(Error::Internal("standard function misses the requested profile".into()));
    }
    let g = h.random_unitary(&wb, rng, mix_steps)?;
    let f = transform_function(&g, &f0)?;
    if !h.is_selfdual(&f)? {
        return Err(Error::Internal("randomized function lost self-duality".into()));
    }
    if f.type_vector()? != expected {
        return Err(Error::Internal("randomized function changed its type".into()));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Same-type witnesses
// ---------------------------------------------------------------------------

/// For each hyperbolic pair of a decomposition, the unordered couple of jump
/// times its two members are tight at, plus whether `v` holds the earlier
/// time.  Sorting these keys aligns the pairs of two equal-type functions.
fn pair_keys(
    f: &LatticeFunction,
    dec: &WittDecomposition,
) -> Result<Vec<((Rational64, Rational64), usize, bool)>> {
    let window = f.lattices();
    let r = f.chain_len() as i64;
    let period = f.period();
    let mut out = Vec::with_capacity(dec.pairs.len());
    for (i, (v, w)) in dec.pairs.iter().enumerate() {
        let tv = f.breaks()[chain_level(window, v)?.rem_euclid(r) as usize];
        let tw = f.breaks()[chain_level(window, w)?.rem_euclid(r) as usize];
        if rat_mod(-tv, period) != tw {
            return Err(Error::Internal("hyperbolic pair is not tight at mirrored times".into()));
        }
        if tv <= tw {
            out.push(((tv, tw), i, true));
        } else {
            out.push(((tw, tv), i, false));
        }
    }
    out.sort();
    Ok(out)
}

/// A unitary matrix `g` with `g·fx = fy`, for two self-dual functions of the
/// same type.  Both functions are split along hyperbolic pairs; the pairs
/// are matched by their couples of jump times (re-orienting where needed)
/// and the anisotropic kernels by representing the same values.
pub fn same_type_witness(
    h: &HermitianForm,
    fx: &LatticeFunction,
    fy: &LatticeFunction,
) -> Result<DMat> {
    if fx.same_type(fy, TypeMode::Equal)?.is_none() {
        return Err(Error::NotSameType("jump profiles differ".into()));
    }
    let alg = h.algebra();
    let dx = witt_decompose(h, &[fx])?;
    let dy = witt_decompose(h, &[fy])?;
    if dx.pairs.len() != dy.pairs.len() || dx.aniso.len() != dy.aniso.len() {
        return Err(Error::Internal("equal types split with different shapes".into()));
    }
    let kx = pair_keys(fx, &dx)?;
    let ky = pair_keys(fy, &dy)?;
    let mut sx: Vec<Vec<DElem>> = Vec::with_capacity(h.dim());
    let mut sy: Vec<Vec<DElem>> = Vec::with_capacity(h.dim());
    for (a, b) in kx.iter().zip(&ky) {
        if a.0 != b.0 {
            return Err(Error::Internal("pair jump couples fail to match across equal types".into()));
        }
        let (vx, wx) = &dx.pairs[a.1];
        let (vy, wy) = &dy.pairs[b.1];
        sx.push(vx.clone());
        sx.push(wx.clone());
        if a.2 == b.2 {
            sy.push(vy.clone());
            sy.push(wy.clone());
        } else {
            // Swap roles inside the target pair: `(w, ε·v)` is again a
            // hyperbolic pair, now tight at the flipped couple of times.
            let mut ve = vy.clone();
            if h.epsilon() == -1 {
                ve = ve.iter().map(|e| -e).collect();
            }
            sy.push(wy.clone());
            sy.push(ve);
        }
    }
    let matched = aniso_match(h, &dy.aniso, &dx.aniso_values)?
        .ok_or_else(|| Error::Internal("anisotropic kernels fail to match".into()))?;
    sx.extend(dx.aniso.iter().cloned());
    sy.extend(matched);
    let g = DMat::from_cols(alg, &sy).mul(&DMat::from_cols(alg, &sx).inv()?);
    if !h.is_unitary(&g)? {
        return Err(Error::Internal("assembled witness is not unitary".into()));
    }
    if !transform_function(&g, fx)?.try_eq(fy)? {
        return Err(Error::Internal("witness fails to transport the function".into()));
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{field_algebra, quaternion_algebra, Involution};
    use crate::arith::local_field;
    use crate::extension::FieldAut;
    use crate::fq::fq;
    use crate::hermitian::random_form;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn quat(q: u64) -> DivisionAlgebra {
        let (p, n) = match q {
            3 => (3, 1),
            5 => (5, 1),
            _ => unreachable!(),
        };
        let k = local_field(&fq(p, n).unwrap(), 32, "w").unwrap();
        quaternion_algebra(&k, &FqElem::one(k.residue())).unwrap()
    }

    fn field_setup(q: u64) -> (DivisionAlgebra, Involution) {
        let (p, n) = match q {
            3 => (3, 1),
            5 => (5, 1),
            9 => (3, 2),
            _ => unreachable!(),
        };
        let k = local_field(&fq(p, n).unwrap(), 32, "w").unwrap();
        let alg = field_algebra(&k);
        let rho = Involution::main(&alg);
        (alg, rho)
    }

    /// The index-1 algebra over F_9((w)) with the Frobenius involution.
    fn second_kind_setup() -> (DivisionAlgebra, Involution) {
        let k = local_field(&fq(3, 2).unwrap(), 32, "w").unwrap();
        let alg = field_algebra(&k);
        let theta = FieldAut::new(1, FqElem::one(k.residue()));
        let rho = Involution::new(&alg, theta, 1).unwrap();
        (alg, rho)
    }

    /// Offsets inside `[0, period)` for the pairs of a Witt basis: time
    /// zero, half a period, then a generic rational.
    fn offsets_for(alg: &DivisionAlgebra, n: usize) -> Vec<Rational64> {
        let d = alg.d() as i64;
        let menu = [
            Rational64::new(0, 1),
            Rational64::new(1, 2 * d),
            Rational64::new(1, 3 * d),
            Rational64::new(1, 5 * d),
        ];
        (0..n).map(|i| menu[i % menu.len()]).collect()
    }

    #[test]
    fn standard_functions_are_selfdual_and_split() {
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        let quadratic = field_setup(5);
        let symplectic = field_setup(3);
        let unitary = second_kind_setup();
        let setups: Vec<(DivisionAlgebra, Involution, i64, usize)> = vec![
            (quat(3), Involution::main(&quat(3)), 1, 3),
            (quat(5), Involution::main(&quat(5)), -1, 3),
            (quadratic.0.clone(), quadratic.1.clone(), 1, 4),
            (symplectic.0.clone(), symplectic.1.clone(), -1, 4),
            (unitary.0.clone(), unitary.1.clone(), 1, 3),
        ];
        for (alg, rho, eps, m) in setups {
            let h = random_form(&alg, &rho, eps, m, &mut rng).unwrap();
            let wb = h.witt_basis().unwrap();
            let offsets = offsets_for(&alg, wb.pairs.len());
            let f = standard_selfdual_function(&h, &wb, &offsets).unwrap();
            assert!(h.is_selfdual(&f).unwrap());
            // The function splits along a decomposition of full Witt index.
            let dec = witt_decompose(&h, &[&f]).unwrap();
            assert_eq!(dec.pairs.len(), wb.pairs.len());
            assert_eq!(dec.aniso.len(), wb.kernel.len());
            assert!(splits_function(&dec, &f).unwrap());
        }
    }

    #[test]
    fn duality_constant_follows_the_break_at_zero() {
        let alg = quat(3);
        let rho = Involution::main(&alg);
        let h = HermitianForm::new(&alg, &rho, 1, hyperbolic_gram(&alg, 1, 1, &[])).unwrap();
        let wb = h.witt_basis().unwrap();
        // Jump at zero: the top lattice is one step off self-dual.
        let f1 = standard_selfdual_function(&h, &wb, &[Rational64::new(0, 1)]).unwrap();
        let c1 = selfdual_chain(&h, &f1).unwrap();
        assert_eq!(c1.c, 1);
        assert_eq!(c1.breaks[0], Rational64::new(0, 1));
        // No jump at zero: the top lattice is exactly self-dual.
        let f0 = standard_selfdual_function(&h, &wb, &[Rational64::new(1, 4)]).unwrap();
        let c0 = selfdual_chain(&h, &f0).unwrap();
        assert_eq!(c0.c, 0);
        assert_ne!(c0.breaks[0], Rational64::new(0, 1));
        // A translate breaks self-duality and is rejected.
        let shifted = f0.translated(Rational64::new(1, 8));
        assert!(matches!(selfdual_chain(&h, &shifted), Err(Error::NotSelfDual(_))));
        // Wrong period is a parameter error.
        let (falg, frho) = field_setup(3);
        let hf = HermitianForm::new(&falg, &frho, 1, DMat::identity(&falg, 2)).unwrap();
        let wf = hf.witt_basis().unwrap();
        let ff = standard_selfdual_function(&hf, &wf, &offsets_for(&falg, wf.pairs.len())).unwrap();
        assert!(matches!(selfdual_chain(&h, &ff), Err(Error::BadParameter(_))));
    }

    #[test]
    fn two_chains_split_simultaneously() {
        let alg = quat(3);
        let rho = Involution::main(&alg);
        let one = DElem::one(&alg);
        let h = HermitianForm::new(&alg, &rho, 1, hyperbolic_gram(&alg, 1, 1, &[one])).unwrap();
        let wb = h.witt_basis().unwrap();
        assert_eq!(wb.pairs.len(), 1);
        let f1 = standard_selfdual_function(&h, &wb, &[Rational64::new(0, 1)]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let g = h.random_unitary(&wb, &mut rng, 6).unwrap();
        let f2 = transform_function(
            &g,
            &standard_selfdual_function(&h, &wb, &[Rational64::new(1, 6)]).unwrap(),
        )
        .unwrap();
        let dec = witt_decompose(&h, &[&f1, &f2]).unwrap();
        assert_eq!(dec.pairs.len(), 1);
        assert!(splits_function(&dec, &f1).unwrap());
        assert!(splits_function(&dec, &f2).unwrap());
        // Three chains are out of scope.
        assert!(matches!(
            witt_decompose(&h, &[&f1, &f2, &f1]),
            Err(Error::BadParameter(_))
        ));
    }

    #[test]
    fn random_functions_honor_their_profile() {
        let alg = quat(3);
        let rho = Involution::main(&alg);
        let h = HermitianForm::new(&alg, &rho, 1, hyperbolic_gram(&alg, 1, 2, &[])).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let profile =
            vec![(Rational64::new(0, 1), 2u64), (Rational64::new(1, 4), 2u64)];
        let f = random_selfdual_function(&h, &profile, &mut rng, 8).unwrap();
        assert!(h.is_selfdual(&f).unwrap());
        assert_eq!(f.type_vector().unwrap(), profile);
        // Mirror-asymmetric profiles are rejected as such.
        let bad = vec![(Rational64::new(1, 8), 2u64), (Rational64::new(0, 1), 2u64)];
        assert!(matches!(
            random_selfdual_function(&h, &bad, &mut rng, 4),
            Err(Error::AsymmetricProfile(_))
        ));
        // Wrong total rank.
        let short = vec![(Rational64::new(0, 1), 2u64)];
        assert!(matches!(
            random_selfdual_function(&h, &short, &mut rng, 4),
            Err(Error::InconsistentProfile(_))
        ));
        // A form with an anisotropic line pins one jump time; a symmetric
        // profile omitting it is inconsistent, one containing it works.
        let one = DElem::one(&alg);
        let h3 = HermitianForm::new(&alg, &rho, 1, hyperbolic_gram(&alg, 1, 1, &[one])).unwrap();
        let missing = vec![(Rational64::new(1, 4), 3u64)];
        assert!(matches!(
            random_selfdual_function(&h3, &missing, &mut rng, 4),
            Err(Error::InconsistentProfile(_))
        ));
        let good = vec![(Rational64::new(0, 1), 1u64), (Rational64::new(1, 4), 2u64)];
        let f3 = random_selfdual_function(&h3, &good, &mut rng, 8).unwrap();
        assert_eq!(f3.type_vector().unwrap(), good);
    }

    #[test]
    fn witnesses_transport_equal_types() {
        let alg = quat(3);
        let rho = Involution::main(&alg);
        let one = DElem::one(&alg);
        let h = HermitianForm::new(&alg, &rho, 1, hyperbolic_gram(&alg, 1, 1, &[one])).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let profile = vec![
            (Rational64::new(0, 1), 1u64),
            (Rational64::new(1, 6), 1u64),
            (Rational64::new(1, 3), 1u64),
        ];
        let fx = random_selfdual_function(&h, &profile, &mut rng, 6).unwrap();
        let fy = random_selfdual_function(&h, &profile, &mut rng, 6).unwrap();
        let g = same_type_witness(&h, &fx, &fy).unwrap();
        assert!(h.is_unitary(&g).unwrap());
        assert!(transform_function(&g, &fx).unwrap().try_eq(&fy).unwrap());
        // Different types are refused.
        let other = vec![(Rational64::new(1, 4), 2u64), (Rational64::new(0, 1), 1u64)];
        let fz = random_selfdual_function(&h, &other, &mut rng, 6).unwrap();
        assert!(matches!(
            same_type_witness(&h, &fx, &fz),
            Err(Error::NotSameType(_))
        ));
    }

    #[test]
    fn witnesses_survive_orientation_flips() {
        // Equal-offset pairs can come back from the splitting with v and w
        // exchanged; conjugating by a unitary exercises the re-orientation.
        let alg = quat(5);
        let rho = Involution::main(&alg);
        let h = HermitianForm::new(&alg, &rho, -1, hyperbolic_gram(&alg, -1, 2, &[])).unwrap();
        let wb = h.witt_basis().unwrap();
        let offsets = vec![Rational64::new(1, 6), Rational64::new(1, 6)];
        let fx = standard_selfdual_function(&h, &wb, &offsets).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        let g0 = h.random_unitary(&wb, &mut rng, 10).unwrap();
        let fy = transform_function(&g0, &fx).unwrap();
        let g = same_type_witness(&h, &fx, &fy).unwrap();
        assert!(transform_function(&g, &fx).unwrap().try_eq(&fy).unwrap());
    }

    #[test]
    fn anisotropic_lines_pin_their_jumps() {
        // A purely anisotropic form: the only self-dual functions are the
        // standard ones, and the decomposition has no pairs.
        let alg = quat(3);
        let rho = Involution::main(&alg);
        let one = DElem::one(&alg);
        let h = HermitianForm::new(&alg, &rho, 1, hyperbolic_gram(&alg, 1, 0, &[one])).unwrap();
        let wb = h.witt_basis().unwrap();
        assert!(wb.pairs.is_empty());
        let f = standard_selfdual_function(&h, &wb, &[]).unwrap();
        let dec = witt_decompose(&h, &[&f]).unwrap();
        assert!(dec.pairs.is_empty());
        assert_eq!(dec.aniso.len(), 1);
        assert!(splits_function(&dec, &f).unwrap());
        let sc = selfdual_chain(&h, &f).unwrap();
        assert_eq!(sc.r, 1);
    }
}
