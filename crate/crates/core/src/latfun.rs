//! Decreasing, periodic lattice functions and their combinatorial type.
//!
//! A lattice function assigns to every rational time `t` a full lattice
//! `Λ(t)` in the ambient column space, decreasing in `t`, with the
//! periodicity `Λ(t + p) = Λ(t)·π_D` where `p` is the (rational) time value
//! of one uniformizer step. Time is always measured in the normalization of
//! the *ground* field (`ν(ϖ) = 1`), so for the base quaternion algebra
//! `p = 1/d`, while module structures over larger fields give smaller
//! periods.
//!
//! The function is stored by one period of data: strictly increasing
//! breakpoints `t_0 < … < t_{r-1}` in `[0, p)` and the chain
//! `L_0 ⊋ L_1 ⊋ … ⊋ L_{r-1} ⊋ L_0·π_D`, with `Λ(t) = L_i` on
//! `(t_{i-1}, t_i]` (left-continuous; the jump happens just after `t_i`).
//!
//! On top of evaluation sit the pieces the structure theory needs:
//! translations, the dual function `Λ^#(t) = (Λ((-t)^+))^#` for a supplied
//! lattice dualizer, the type (jump positions and jump dimensions over the
//! residue field of the order), type comparison up to translation, the
//! barycentric respacing, and the endomorphism ("square") lattices
//! `𝔤_Λ(t) = {x : x Λ(s) ⊆ Λ(s+t) ∀s}` as lattices over the center.

use num_rational::Rational64;

use crate::algebra::{ok_basis, DElem, DMat, DivisionAlgebra};
use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// A decreasing periodic lattice function, stored as one period of data.
#[derive(Clone)]
pub struct LatticeFunction {
    alg: DivisionAlgebra,
    period: Rational64,
    breaks: Vec<Rational64>,
    lattices: Vec<Lattice>,
}

/// How two lattice functions are compared by type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeMode {
    /// Jump positions and dimensions must agree on the nose.
    Equal,
    /// They must agree after translating the second function.
    Translated,
}

impl LatticeFunction {
    /// Builds a function from one period of breakpoints and lattices.
    ///
    /// `pairs` must list strictly increasing breakpoints inside `[0, period)`
    /// together with the value of `Λ` *at* each breakpoint; the lattices must
    /// strictly decrease along the chain and satisfy the wrap-around
    /// condition `L_{r-1} ⊋ L_0·π_D`.
    pub fn from_breakpoints(
        alg: &DivisionAlgebra,
        period: Rational64,
        pairs: Vec<(Rational64, Lattice)>,
    ) -> Result<LatticeFunction> {
        if period <= Rational64::from_integer(0) {
            return Err(Error::BadParameter("period must be positive".into()));
        }
        if pairs.is_empty() {
            return Err(Error::InconsistentProfile("no breakpoints".into()));
        }
        let mut breaks = Vec::with_capacity(pairs.len());
        let mut lattices = Vec::with_capacity(pairs.len());
        for (t, l) in pairs {
            if t < Rational64::from_integer(0) || t >= period {
                return Err(Error::InconsistentProfile(format!(
                    "breakpoint {t} outside [0, period)"
                )));
            }
            if let Some(last) = breaks.last() {
                if t <= *last {
                    return Err(Error::InconsistentProfile(
                        "breakpoints must strictly increase".into(),
                    ));
                }
            }
            if !l.is_full() {
                return Err(Error::InconsistentProfile("chain lattice is not full".into()));
            }
            breaks.push(t);
            lattices.push(l);
        }
        let r = lattices.len();
        for i in 0..r {
            let next = if i + 1 < r { lattices[i + 1].clone() } else { lattices[0].scaled_pi(1) };
            if !lattices[i].contains_lattice(&next)? {
                return Err(Error::InconsistentProfile(format!(
                    "chain is not decreasing at level {i}"
                )));
            }
            if lattices[i].try_eq(&next)? {
                return Err(Error::InconsistentProfile(format!(
                    "chain is not strict at level {i}"
                )));
            }
        }
        Ok(LatticeFunction { alg: alg.clone(), period, breaks, lattices })
    }

    /// Constant-per-period function jumping only at `t = 0`.
    pub fn from_single(alg: &DivisionAlgebra, period: Rational64, l: Lattice) -> Result<LatticeFunction> {
        LatticeFunction::from_breakpoints(alg, period, vec![(Rational64::from_integer(0), l)])
    }

    pub fn algebra(&self) -> &DivisionAlgebra {
        &self.alg
    }

    pub fn period(&self) -> Rational64 {
        self.period
    }

    pub fn ambient(&self) -> usize {
        self.lattices[0].ambient()
    }

    /// Number of jumps per period.
    pub fn chain_len(&self) -> usize {
        self.breaks.len()
    }

    pub fn breaks(&self) -> &[Rational64] {
        &self.breaks
    }

    pub fn lattices(&self) -> &[Lattice] {
        &self.lattices
    }

    /// Pointwise equality (the stored representation is canonical: window
    /// breakpoints plus Hermite-form lattices).
    pub fn try_eq(&self, other: &LatticeFunction) -> Result<bool> {
        if self.period != other.period || self.breaks != other.breaks {
            return Ok(false);
        }
        for (a, b) in self.lattices.iter().zip(&other.lattices) {
            if !a.try_eq(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Decomposes `t` as `t = t' + n·period` with `t' ∈ [0, period)`.
    fn window(&self, t: Rational64) -> (Rational64, i64) {
        let n = (t / self.period).floor().to_integer();
        (t - self.period * Rational64::from_integer(n), n)
    }

    /// `Λ(t)`.
    pub fn evaluate(&self, t: Rational64) -> Lattice {
        let (tp, n) = self.window(t);
        match self.breaks.iter().position(|b| *b >= tp) {
            Some(i) => self.lattices[i].scaled_pi(n),
            None => self.lattices[0].scaled_pi(n + 1),
        }
    }

    /// `Λ(t^+)`: the value just after `t`.
    pub fn right_limit(&self, t: Rational64) -> Lattice {
        let (tp, n) = self.window(t);
        match self.breaks.iter().position(|b| *b > tp) {
            Some(i) => self.lattices[i].scaled_pi(n),
            None => self.lattices[0].scaled_pi(n + 1),
        }
    }

    /// The chain member `L_j` for any integer level, via `L_{j+r} = L_j·π`.
    pub fn lattice_at_level(&self, j: i64) -> Lattice {
        let r = self.chain_len() as i64;
        let q = j.div_euclid(r);
        let i = j.rem_euclid(r) as usize;
        self.lattices[i].scaled_pi(q)
    }

    /// The breakpoint `t_j` for any integer level, via `t_{j+r} = t_j + p`.
    pub fn level_break(&self, j: i64) -> Rational64 {
        let r = self.chain_len() as i64;
        let q = j.div_euclid(r);
        let i = j.rem_euclid(r) as usize;
        self.breaks[i] + self.period * Rational64::from_integer(q)
    }

    /// The translated function `(Λ + s)(t) = Λ(t + s)`.
    pub fn translated(&self, s: Rational64) -> LatticeFunction {
        let mut pairs: Vec<(Rational64, Lattice)> = self
            .breaks
            .iter()
            .zip(&self.lattices)
            .map(|(t, l)| {
                let (tp, n) = self.window(*t - s);
                (tp, l.scaled_pi(-n))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let breaks = pairs.iter().map(|(t, _)| *t).collect();
        let lattices = pairs.into_iter().map(|(_, l)| l).collect();
        LatticeFunction { alg: self.alg.clone(), period: self.period, breaks, lattices }
    }

    /// The dual function `Λ^#(t) = (Λ((-t)^+))^#` for the given lattice
    /// dualizer (which must anti-commute with π-scaling, as every pairing
    /// dual does).
    pub fn dual_with(
        &self,
        dualize: impl Fn(&Lattice) -> Result<Lattice>,
    ) -> Result<LatticeFunction> {
        let mut pairs = Vec::with_capacity(self.chain_len());
        for t in &self.breaks {
            let (tp, _) = self.window(-*t);
            let value = dualize(&self.right_limit(-tp))?;
            pairs.push((tp, value));
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        LatticeFunction::from_breakpoints(&self.alg, self.period, pairs)
    }

    /// Jump positions with their dimensions over the residue field of the
    /// order: `(t_i, dim Λ(t_i)/Λ(t_i^+))`. The dimensions over one period
    /// sum to the ambient rank.
    pub fn type_vector(&self) -> Result<Vec<(Rational64, u64)>> {
        let r = self.chain_len();
        let mut out = Vec::with_capacity(r);
        for i in 0..r {
            let next =
                if i + 1 < r { self.lattices[i + 1].clone() } else { self.lattices[0].scaled_pi(1) };
            out.push((self.breaks[i], self.lattices[i].quotient_dim(&next)?));
        }
        Ok(out)
    }

    /// Compares the types of two functions. In `Translated` mode, returns
    /// the translation `s` (applied to `other`) that matches the types;
    /// `Equal` mode returns zero on success.
    pub fn same_type(&self, other: &LatticeFunction, mode: TypeMode) -> Result<Option<Rational64>> {
        if self.period != other.period || self.ambient() != other.ambient() {
            return Ok(None);
        }
        let mine = self.type_vector()?;
        match mode {
            TypeMode::Equal => {
                let theirs = other.type_vector()?;
                Ok((mine == theirs).then(|| Rational64::from_integer(0)))
            }
            TypeMode::Translated => {
                if self.chain_len() != other.chain_len() {
                    return Ok(None);
                }
                // A type-matching translation must map jump times to jump
                // times, so it aligns other's first breakpoint with one of
                // ours.
                for b in &self.breaks {
                    let s = other.breaks[0] - *b;
                    let shifted = other.translated(s);
                    if shifted.type_vector()? == mine {
                        return Ok(Some(s));
                    }
                }
                Ok(None)
            }
        }
    }

    /// The barycentric respacing: same chain, jumps at `i·p/r`, anchored so
    /// that the level-0 lattice keeps its jump at time `0`.
    pub fn barycenter(&self) -> Result<LatticeFunction> {
        let r = self.chain_len() as i64;
        let pairs = (0..r)
            .map(|i| {
                (
                    self.period * Rational64::new(i, r),
                    self.lattices[i as usize].clone(),
                )
            })
            .collect();
        LatticeFunction::from_breakpoints(&self.alg, self.period, pairs)
    }

    /// The representative of the translation class with first breakpoint at
    /// zero, together with the translation that produces it.
    pub fn translation_rep(&self) -> (LatticeFunction, Rational64) {
        let s = self.breaks[0];
        (self.translated(s), s)
    }

    /// The endomorphism lattice `𝔤_Λ(t) = {x ∈ M_m(D) : xΛ(s) ⊆ Λ(s+t) ∀s}`
    /// as a lattice over the center (ambient dimension `m²d²`), in the
    /// flattened coordinates of [`DMat::flatten_k`].
    pub fn square_lattice_at(&self, t: Rational64) -> Result<Lattice> {
        let center = crate::algebra::field_algebra(self.alg.base());
        let basis = ok_basis(&self.alg);
        let mut acc: Option<Lattice> = None;
        for (i, l) in self.lattices.iter().enumerate() {
            let target = self.evaluate(self.breaks[i] + t);
            let hom = hom_lattice(&center, l, &target, &basis)?;
            acc = Some(match acc {
                None => hom,
                Some(a) => a.intersect(&hom)?,
            });
        }
        Ok(acc.expect("nonempty chain"))
    }
}

/// `Hom(M, N) = B_N · M_m(o_D) · B_M^{-1}` as a lattice over the center in
/// flattened coordinates.
fn hom_lattice(
    center: &DivisionAlgebra,
    m: &Lattice,
    n: &Lattice,
    order_basis: &[DElem],
) -> Result<Lattice> {
    let alg = m.algebra().clone();
    let dim = m.ambient();
    let bm_inv = m.basis_mat().inv()?;
    let bn = n.basis_mat();
    let mut cols: Vec<Vec<DElem>> = Vec::with_capacity(dim * dim * order_basis.len());
    for i in 0..dim {
        for j in 0..dim {
            for beta in order_basis {
                let mut e = DMat::zero(&alg, dim, dim);
                *e.at_mut(i, j) = beta.clone();
                let gen = bn.mul(&e).mul(&bm_inv);
                cols.push(
                    gen.flatten_k().iter().map(|c| DElem::from_center(center, c)).collect(),
                );
            }
        }
    }
    Lattice::from_columns(center, dim * dim * order_basis.len(), &cols)
}

/// `x` reduced into `[0, p)` modulo `p`.
fn rat_mod(x: Rational64, p: Rational64) -> Rational64 {
    x - p * Rational64::from_integer((x / p).floor().to_integer())
}

/// Smallest `c ≥ 0` with `b·π^c ⊆ a` and `a·π^c ⊆ b`.
fn pi_distance(a: &Lattice, b: &Lattice) -> Result<i64> {
    let mut c = 0i64;
    loop {
        if a.contains_lattice(&b.scaled_pi(c))? && b.contains_lattice(&a.scaled_pi(c))? {
            return Ok(c);
        }
        c += 1;
        if c > 512 {
            return Err(Error::Internal("lattices too many scaling steps apart".into()));
        }
    }
}

/// Builds the left-continuous function of the given period from value
/// samples taken at a superset of its jump sites: samples where the value
/// does not actually jump are pruned (cyclically, comparing the last
/// against the uniformizer slide of the first).
pub fn function_from_samples(
    alg: &DivisionAlgebra,
    period: Rational64,
    samples: Vec<(Rational64, Lattice)>,
) -> Result<LatticeFunction> {
    if samples.is_empty() {
        return Err(Error::InconsistentProfile("no samples".into()));
    }
    let mut samples = samples;
    samples.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Rational64, Lattice)> = Vec::new();
    for (t, l) in samples {
        if let Some(last) = merged.last() {
            if last.0 == t {
                if !last.1.try_eq(&l)? {
                    return Err(Error::Internal("conflicting samples at one site".into()));
                }
                continue;
            }
        }
        merged.push((t, l));
    }
    // By left continuity, a site is a jump exactly when its value differs
    // from the next kept site's value.
    loop {
        let n = merged.len();
        if n == 1 {
            break;
        }
        let mut drop_idx = None;
        for i in 0..n {
            let next_val =
                if i + 1 < n { merged[i + 1].1.clone() } else { merged[0].1.scaled_pi(1) };
            if merged[i].1.try_eq(&next_val)? {
                drop_idx = Some(i);
                break;
            }
        }
        match drop_idx {
            Some(i) => {
                merged.remove(i);
            }
            None => break,
        }
    }
    LatticeFunction::from_breakpoints(alg, period, merged)
}

/// The pointwise geodesic midpoint
/// `mid(f, g)(t) = Σ_{t₁+t₂=2t} f(t₁) ∩ g(t₂)`
/// of two functions with equal periods and ambient spaces. In a common
/// splitting basis this averages the jump offsets coordinate-wise, so the
/// result is the midpoint of the segment from `f` to `g`.
pub fn midpoint(f: &LatticeFunction, g: &LatticeFunction) -> Result<LatticeFunction> {
    if f.period() != g.period() || f.ambient() != g.ambient() {
        return Err(Error::BadParameter(
            "midpoint needs matching periods and ambient spaces".into(),
        ));
    }
    let p = f.period();
    let two = Rational64::from_integer(2);
    let zero = Rational64::from_integer(0);
    // Candidate jump sites: half-sums of break pairs, both halves mod p.
    let mut cand: Vec<Rational64> = Vec::new();
    for a in f.breaks() {
        for b in g.breaks() {
            let m = (*a + *b) / two;
            cand.push(rat_mod(m, p));
            cand.push(rat_mod(m + p / two, p));
        }
    }
    cand.sort();
    cand.dedup();
    // Per splitting coordinate, the summand is largest where the decreasing
    // f-exponent crosses the increasing g-exponent, at most half the π-gap
    // away from `t`; beyond that the coordinate exponents only grow. Since
    // both functions are left-continuous, the value on each constancy piece
    // is picked up by sampling the piece midpoints.
    let gap = pi_distance(&f.evaluate(zero), &g.evaluate(zero))?;
    let k = gap / 2 + 3;
    let mut samples = Vec::with_capacity(cand.len());
    for t in cand {
        let mut sites: Vec<Rational64> = Vec::new();
        for j in -k..=k {
            let shift = p * Rational64::from_integer(j);
            for a in f.breaks() {
                sites.push(*a + shift);
            }
            for b in g.breaks() {
                sites.push(two * t - (*b + shift));
            }
        }
        sites.sort();
        sites.dedup();
        // Sample the constancy pieces at their midpoints and the crossing
        // sites themselves (where the two one-sided values meet, the
        // summand can exceed both adjacent pieces).
        let mut all = sites.clone();
        for w in sites.windows(2) {
            all.push((w[0] + w[1]) / two);
        }
        let mut acc: Option<Lattice> = None;
        for t1 in all {
            let part = f.evaluate(t1).intersect(&g.evaluate(two * t - t1))?;
            acc = Some(match acc {
                None => part,
                Some(x) => x.sum(&part)?,
            });
        }
        samples.push((t, acc.expect("site list is nonempty")));
    }
    function_from_samples(f.algebra(), p, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{field_algebra, quaternion_algebra};
    use crate::arith::{local_field, KElem, LocalField};
    use crate::fq::{fq, FqElem};

    fn base(q: u64) -> LocalField {
        let (p, n) = match q {
            3 => (3, 1),
            5 => (5, 1),
            9 => (3, 2),
            _ => unreachable!(),
        };
        local_field(&fq(p, n).unwrap(), 32, "w").unwrap()
    }

    fn quat(q: u64) -> DivisionAlgebra {
        let k = base(q);
        quaternion_algebra(&k, &FqElem::one(k.residue())).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    /// The two-step chain in D²: o², then (πe_1, e_2)·o, wrapping to o²π.
    fn two_step(alg: &DivisionAlgebra) -> LatticeFunction {
        let l0 = Lattice::standard(alg, 2);
        let cols = vec![
            vec![DElem::pi_pow(alg, 1), DElem::zero(alg)],
            vec![DElem::zero(alg), DElem::one(alg)],
        ];
        let l1 = Lattice::from_columns(alg, 2, &cols).unwrap();
        LatticeFunction::from_breakpoints(
            alg,
            r(1, 2),
            vec![(r(0, 1), l0), (r(1, 4), l1)],
        )
        .unwrap()
    }

    #[test]
    fn construction_validates_chains() {
        let alg = quat(3);
        let l0 = Lattice::standard(&alg, 2);
        // Non-strict chain (repeated lattice) is rejected.
        let bad = LatticeFunction::from_breakpoints(
            &alg,
            r(1, 2),
            vec![(r(0, 1), l0.clone()), (r(1, 4), l0.clone())],
        );
        assert!(matches!(bad, Err(Error::InconsistentProfile(_))));
        // Unsorted breakpoints are rejected.
        let l1 = l0.scaled_pi(1);
        let bad2 = LatticeFunction::from_breakpoints(
            &alg,
            r(1, 2),
            vec![(r(1, 4), l0.clone()), (r(0, 1), l1)],
        );
        assert!(matches!(bad2, Err(Error::InconsistentProfile(_))));
        // Breakpoint outside the window is rejected.
        let bad3 =
            LatticeFunction::from_breakpoints(&alg, r(1, 2), vec![(r(3, 4), l0.clone())]);
        assert!(matches!(bad3, Err(Error::InconsistentProfile(_))));
        // A non-chain pair (incomparable lattices) is rejected.
        let skew = Lattice::from_columns(
            &alg,
            2,
            &[
                vec![DElem::pi_pow(&alg, 1), DElem::zero(&alg)],
                vec![DElem::zero(&alg), DElem::pi_pow(&alg, -1)],
            ],
        )
        .unwrap();
        let bad4 = LatticeFunction::from_breakpoints(
            &alg,
            r(1, 2),
            vec![(r(0, 1), l0), (r(1, 4), skew)],
        );
        assert!(matches!(bad4, Err(Error::InconsistentProfile(_))));
    }

    #[test]
    fn evaluation_window_and_periodicity() {
        let alg = quat(3);
        let f = two_step(&alg);
        let l0 = f.lattices()[0].clone();
        let l1 = f.lattices()[1].clone();
        // Values on the half-open intervals.
        assert!(f.evaluate(r(0, 1)).try_eq(&l0).unwrap());
        assert!(f.evaluate(r(1, 8)).try_eq(&l1).unwrap());
        assert!(f.evaluate(r(1, 4)).try_eq(&l1).unwrap());
        assert!(f.evaluate(r(3, 8)).try_eq(&l0.scaled_pi(1)).unwrap());
        assert!(f.evaluate(r(1, 2)).try_eq(&l0.scaled_pi(1)).unwrap());
        // Right limits.
        assert!(f.right_limit(r(0, 1)).try_eq(&l1).unwrap());
        assert!(f.right_limit(r(1, 4)).try_eq(&l0.scaled_pi(1)).unwrap());
        // Negative times and general periodicity Λ(t+p) = Λ(t)π.
        assert!(f.evaluate(r(-1, 4)).try_eq(&l1.scaled_pi(-1)).unwrap());
        for t in [r(0, 1), r(1, 8), r(1, 4), r(2, 5)] {
            let shifted = f.evaluate(t + r(1, 2));
            assert!(shifted.try_eq(&f.evaluate(t).scaled_pi(1)).unwrap());
        }
        // Chain accessors agree with evaluation at the breakpoints.
        assert!(f.lattice_at_level(0).try_eq(&l0).unwrap());
        assert!(f.lattice_at_level(1).try_eq(&l1).unwrap());
        assert!(f.lattice_at_level(2).try_eq(&l0.scaled_pi(1)).unwrap());
        assert!(f.lattice_at_level(-1).try_eq(&l1.scaled_pi(-1)).unwrap());
        assert_eq!(f.level_break(3), r(3, 4));
        assert_eq!(f.level_break(-2), r(-1, 2));
    }

    #[test]
    fn translation_is_pointwise_shift() {
        let alg = quat(5);
        let f = two_step(&alg);
        for s in [r(1, 8), r(1, 4), r(-3, 8), r(5, 4)] {
            let g = f.translated(s);
            for t in [r(0, 1), r(1, 8), r(1, 4), r(1, 3), r(-2, 7)] {
                assert!(
                    g.evaluate(t).try_eq(&f.evaluate(t + s)).unwrap(),
                    "translate {s} at {t}"
                );
            }
        }
        // Translating by a full period is exactly a π-rescale.
        let g = f.translated(r(1, 2));
        for t in [r(0, 1), r(1, 8)] {
            assert!(g.evaluate(t).try_eq(&f.evaluate(t).scaled_pi(1)).unwrap());
        }
    }

    #[test]
    fn dual_function_is_an_involution() {
        let alg = quat(3);
        let f = two_step(&alg);
        let dualize = |l: &Lattice| l.dual_standard();
        let fd = f.dual_with(dualize).unwrap();
        // Anti-monotone consistency: the dual of the dual returns the
        // original function, breakpoints and lattices alike.
        let fdd = fd.dual_with(dualize).unwrap();
        assert_eq!(fdd.breaks(), f.breaks());
        for (a, b) in fdd.lattices().iter().zip(f.lattices()) {
            assert!(a.try_eq(b).unwrap());
        }
        // Pointwise check of the defining formula at sample times.
        for t in [r(0, 1), r(1, 8), r(1, 4), r(-1, 3)] {
            let direct = f.right_limit(-t).dual_standard().unwrap();
            assert!(fd.evaluate(t).try_eq(&direct).unwrap(), "dual value at {t}");
        }
    }

    #[test]
    fn type_vector_and_modes() {
        let alg = quat(3);
        let f = two_step(&alg);
        let tv = f.type_vector().unwrap();
        assert_eq!(tv, vec![(r(0, 1), 1), (r(1, 4), 1)]);
        // Sum of jump dimensions per period is the ambient rank.
        assert_eq!(tv.iter().map(|(_, d)| d).sum::<u64>(), 2);
        // A translated copy: same type only up to translation.
        let g = f.translated(r(1, 8));
        assert_eq!(f.same_type(&g, TypeMode::Equal).unwrap(), None);
        let s = f.same_type(&g, TypeMode::Translated).unwrap().unwrap();
        let aligned = g.translated(s);
        assert_eq!(aligned.type_vector().unwrap(), tv);
        // A function with a different jump profile matches in neither mode.
        let single =
            LatticeFunction::from_single(&alg, r(1, 2), Lattice::standard(&alg, 2)).unwrap();
        assert_eq!(f.same_type(&single, TypeMode::Translated).unwrap(), None);
    }

    #[test]
    fn barycenter_spaces_jumps_evenly() {
        let alg = quat(3);
        let l0 = Lattice::standard(&alg, 3);
        let c1 = vec![
            vec![DElem::pi_pow(&alg, 1), DElem::zero(&alg), DElem::zero(&alg)],
            vec![DElem::zero(&alg), DElem::one(&alg), DElem::zero(&alg)],
            vec![DElem::zero(&alg), DElem::zero(&alg), DElem::one(&alg)],
        ];
        let l1 = Lattice::from_columns(&alg, 3, &c1).unwrap();
        let c2 = vec![
            vec![DElem::pi_pow(&alg, 1), DElem::zero(&alg), DElem::zero(&alg)],
            vec![DElem::zero(&alg), DElem::pi_pow(&alg, 1), DElem::zero(&alg)],
            vec![DElem::zero(&alg), DElem::zero(&alg), DElem::one(&alg)],
        ];
        let l2 = Lattice::from_columns(&alg, 3, &c2).unwrap();
        let f = LatticeFunction::from_breakpoints(
            &alg,
            r(1, 2),
            vec![(r(0, 1), l0), (r(1, 16), l1), (r(3, 8), l2)],
        )
        .unwrap();
        let b = f.barycenter().unwrap();
        assert_eq!(b.breaks(), &[r(0, 1), r(1, 6), r(1, 3)]);
        // Same chain, so the jump dimensions are unchanged in order.
        let dims: Vec<u64> = f.type_vector().unwrap().into_iter().map(|(_, d)| d).collect();
        let bdims: Vec<u64> = b.type_vector().unwrap().into_iter().map(|(_, d)| d).collect();
        assert_eq!(dims, bdims);
        // Translation representative puts the first break at zero.
        let g = f.translated(r(-1, 16));
        let (rep, s) = g.translation_rep();
        assert_eq!(s, g.breaks()[0]);
        assert_eq!(rep.breaks()[0], r(0, 1));
    }

    #[test]
    fn square_lattice_is_a_filtered_order() {
        let alg = quat(3);
        let f = two_step(&alg);
        let g0 = f.square_lattice_at(r(0, 1)).unwrap();
        assert!(g0.is_full());
        // The identity endomorphism lies in 𝔤(0).
        let id = DMat::identity(&alg, 2).flatten_k();
        assert!(g0.contains(&id_to_center(&alg, &id)).unwrap());
        // 𝔤(0) is closed under multiplication (it is an order).
        let m = f.ambient();
        for a in g0.basis_cols().iter().take(4) {
            for b in g0.basis_cols().iter().take(4) {
                let ma = DMat::unflatten_k(&alg, m, m, &from_center(&alg, a));
                let mb = DMat::unflatten_k(&alg, m, m, &from_center(&alg, b));
                let prod = ma.mul(&mb).flatten_k();
                assert!(g0.contains(&id_to_center(&alg, &prod)).unwrap());
            }
        }
        // Filtration: 𝔤(t) ⊆ 𝔤(0) for t ≥ 0, with strict drops across jumps.
        let g_quarter = f.square_lattice_at(r(1, 4)).unwrap();
        assert!(g0.contains_lattice(&g_quarter).unwrap());
        // Membership characterization: x ∈ 𝔤(t) ⟺ xΛ(s) ⊆ Λ(s+t) at all
        // breakpoints.
        for x in g_quarter.basis_cols().iter().take(3) {
            let mx = DMat::unflatten_k(&alg, m, m, &from_center(&alg, x));
            for (i, l) in f.lattices().iter().enumerate() {
                let target = f.evaluate(f.breaks()[i] + r(1, 4));
                for col in l.basis_cols() {
                    assert!(target.contains(&mx.apply(col)).unwrap());
                }
            }
        }
    }

    // The square-lattice ambient works over the center algebra; these two
    // helpers convert between KElem vectors and center DElem vectors.
    fn id_to_center(alg: &DivisionAlgebra, v: &[KElem]) -> Vec<DElem> {
        let center = field_algebra(alg.base());
        v.iter().map(|c| DElem::from_center(&center, c)).collect()
    }

    fn from_center(alg: &DivisionAlgebra, v: &[DElem]) -> Vec<KElem> {
        let _ = alg;
        v.iter().map(|d| d.comps()[0].clone()).collect()
    }

    #[test]
    fn midpoint_averages_along_translations() {
        let alg = quat(3);
        let f = two_step(&alg);
        // Idempotence and symmetry.
        assert!(midpoint(&f, &f).unwrap().try_eq(&f).unwrap());
        let s = r(1, 8);
        let g = f.translated(s);
        let mid = midpoint(&f, &g).unwrap();
        assert!(midpoint(&g, &f).unwrap().try_eq(&mid).unwrap());
        // The midpoint of a function and its translate is the half-translate.
        assert!(mid.try_eq(&f.translated(r(1, 16))).unwrap());
        // Against a π-slide of itself: half a period.
        let gp = f.translated(r(1, 2));
        let mid2 = midpoint(&f, &gp).unwrap();
        assert!(mid2.try_eq(&f.translated(r(1, 4))).unwrap());
    }
}
