//! Full and partial lattices in a column space over a division algebra.
//!
//! A lattice here is a finitely generated right `o_D`-submodule of `D^m`
//! spanned by `r ≤ m` independent columns. Because `o_D` is a (possibly
//! noncommutative) complete discrete valuation ring with uniformizer `π_D`
//! and *two-sided* maximal ideal, every such module has a unique triangular
//! canonical basis, which this module computes and keeps: two lattices are
//! equal iff their canonical bases agree entrywise.
//!
//! The canonical basis has strictly increasing pivot rows, pivot entries
//! `π_D^{s_j}`, zeros above each pivot, and entries below a pivot row
//! reduced to their digits under that row's own pivot exponent.
//!
//! On top of the normal form sit the module-theoretic operations: sums,
//! intersections (through duality for the standard pairing), membership and
//! coordinates, quotient dimensions over the residue field of `o_D`,
//! adapted (Smith) bases for a sublattice, and preimage lattices
//! `{x : T x ∈ o_D^m}` used to intersect with subspaces and to solve
//! integrality conditions.

use num_rational::Rational64;

use crate::algebra::{same_algebra, DElem, DMat, DivisionAlgebra, Involution};
use crate::error::{Error, Result};

/// A right `o_D`-lattice of rank `r` inside `D^m`, held in canonical form.
#[derive(Clone)]
pub struct Lattice {
    alg: DivisionAlgebra,
    ambient: usize,
    /// Canonical basis, one inner `Vec` per basis column.
    basis: Vec<Vec<DElem>>,
    /// Pivot row of each basis column, strictly increasing.
    pivot_rows: Vec<usize>,
    /// π_D-adic exponent of each pivot entry.
    pivot_exps: Vec<i64>,
}

impl Lattice {
    /// The lattice spanned by the given columns (any number, any rank).
    pub fn from_columns(
        alg: &DivisionAlgebra,
        ambient: usize,
        cols: &[Vec<DElem>],
    ) -> Result<Lattice> {
        for c in cols {
            if c.len() != ambient {
                return Err(Error::BadParameter("column length mismatch".into()));
            }
        }
        let mut work: Vec<Vec<DElem>> = cols.to_vec();
        let mut basis = Vec::new();
        let mut pivot_rows = Vec::new();
        let mut pivot_exps = Vec::new();
        for row in 0..ambient {
            // Pivot: remaining column with minimal π_D-valuation in this row.
            let mut best: Option<(i64, usize)> = None;
            for (idx, col) in work.iter().enumerate() {
                if col[row].try_is_zero()? {
                    continue;
                }
                let v = col[row].val_scaled()?;
                if best.map(|(bv, _)| v < bv).unwrap_or(true) {
                    best = Some((v, idx));
                }
            }
            let (s, idx) = match best {
                Some(b) => b,
                None => continue,
            };
            let mut piv = work.swap_remove(idx);
            // Normalize the pivot entry to exactly π_D^s by a right unit.
            let unit = &piv[row].inv()? * &DElem::pi_pow(alg, s);
            for e in piv.iter_mut() {
                *e = &*e * &unit;
            }
            // Eliminate this row from every remaining column.
            for col in work.iter_mut() {
                if col[row].try_is_zero()? {
                    continue;
                }
                let mult = &DElem::pi_pow(alg, -s) * &col[row];
                for (ce, pe) in col.iter_mut().zip(piv.iter()) {
                    *ce = &*ce - &(pe * &mult);
                }
            }
            basis.push(piv);
            pivot_rows.push(row);
            pivot_exps.push(s);
        }
        // Leftover columns must now be zero, or the input was inconsistent
        // (can only fail through undecidable digits, which erred above).
        for col in &work {
            for e in col {
                if !e.try_is_zero()? {
                    return Err(Error::Internal("nonzero residual column after echelon".into()));
                }
            }
        }
        // Reduce entries at later pivot rows to canonical digits.
        let r = basis.len();
        for j in 0..r {
            for i in j + 1..r {
                let row = pivot_rows[i];
                let s = pivot_exps[i];
                let cur = basis[j][row].clone();
                let red = cur.reduce_mod_pi_pow(s)?;
                let rem = &cur - &red;
                if rem.try_is_zero()? {
                    continue;
                }
                let z = &DElem::pi_pow(alg, -s) * &rem;
                let sub: Vec<DElem> = basis[i].iter().map(|e| e * &z).collect();
                for (be, se) in basis[j].iter_mut().zip(sub.iter()) {
                    *be = &*be - se;
                }
            }
        }
        Ok(Lattice { alg: alg.clone(), ambient, basis, pivot_rows, pivot_exps })
    }

    /// The standard lattice `o_D^m`.
    pub fn standard(alg: &DivisionAlgebra, m: usize) -> Lattice {
        let basis: Vec<Vec<DElem>> = (0..m)
            .map(|j| {
                (0..m)
                    .map(|i| if i == j { DElem::one(alg) } else { DElem::zero(alg) })
                    .collect()
            })
            .collect();
        Lattice {
            alg: alg.clone(),
            ambient: m,
            basis,
            pivot_rows: (0..m).collect(),
            pivot_exps: vec![0; m],
        }
    }

    pub fn algebra(&self) -> &DivisionAlgebra {
        &self.alg
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.ambient
    }

    pub fn basis_cols(&self) -> &[Vec<DElem>] {
        &self.basis
    }

    pub fn pivot_exps(&self) -> &[i64] {
        &self.pivot_exps
    }

    /// Canonical basis as a matrix (ambient × rank).
    pub fn basis_mat(&self) -> DMat {
        DMat::from_cols(&self.alg, &self.basis)
    }

    pub fn try_eq(&self, other: &Lattice) -> Result<bool> {
        if !same_algebra(&self.alg, &other.alg)
            || self.ambient != other.ambient
            || self.rank() != other.rank()
            || self.pivot_rows != other.pivot_rows
        {
            return Ok(false);
        }
        if self.pivot_exps != other.pivot_exps {
            return Ok(false);
        }
        for (a, b) in self.basis.iter().zip(&other.basis) {
            for (x, y) in a.iter().zip(b) {
                if !x.try_eq(y)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The translate `M·π_D^k` (still a lattice: `π_D o_D = o_D π_D`).
    pub fn scaled_pi(&self, k: i64) -> Lattice {
        let pi = DElem::pi_pow(&self.alg, k);
        // Right-multiplying the canonical basis by π^k stays canonical: the
        // pivots become π^{s+k} and reduced digits shift uniformly.
        let basis: Vec<Vec<DElem>> =
            self.basis.iter().map(|c| c.iter().map(|e| e * &pi).collect()).collect();
        Lattice {
            alg: self.alg.clone(),
            ambient: self.ambient,
            basis,
            pivot_rows: self.pivot_rows.clone(),
            pivot_exps: self.pivot_exps.iter().map(|s| s + k).collect(),
        }
    }

    /// Sum of two lattices in the same ambient space.
    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        if self.ambient != other.ambient {
            return Err(Error::BadParameter("ambient dimension mismatch".into()));
        }
        let mut cols = self.basis.clone();
        cols.extend(other.basis.iter().cloned());
        Lattice::from_columns(&self.alg, self.ambient, &cols)
    }

    /// Dual with respect to the standard pairing `s(u, v) = Σ ρ(u_i) v_i`
    /// (`ρ` the main involution): `{v : s(b, v) ∈ o_D for b in M}`.
    ///
    /// Requires a full lattice. This is an involution exchanging sums and
    /// intersections; the π_D-twisted dual of a hermitian space is built on
    /// top of it elsewhere.
    pub fn dual_standard(&self) -> Result<Lattice> {
        if !self.is_full() {
            return Err(Error::BadParameter("standard dual needs a full lattice".into()));
        }
        let rho = Involution::main(&self.alg);
        let bstar = self.basis_mat().conj_transpose(&rho);
        let inv = bstar.inv()?;
        Lattice::from_columns(&self.alg, self.ambient, &inv.columns())
    }

    /// Intersection of two full lattices, via duality.
    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        let a = self.dual_standard()?;
        let b = other.dual_standard()?;
        a.sum(&b)?.dual_standard()
    }

    /// Coordinates of `v` in the canonical basis, as elements of `D`
    /// (not necessarily integral). Errors with `NotContained` when `v` lies
    /// outside the spanned subspace.
    pub fn coords(&self, v: &[DElem]) -> Result<Vec<DElem>> {
        if v.len() != self.ambient {
            return Err(Error::BadParameter("vector length mismatch".into()));
        }
        let mut rem: Vec<DElem> = v.to_vec();
        let mut coords = Vec::with_capacity(self.rank());
        for (j, b) in self.basis.iter().enumerate() {
            let row = self.pivot_rows[j];
            let a = &DElem::pi_pow(&self.alg, -self.pivot_exps[j]) * &rem[row];
            for (re, be) in rem.iter_mut().zip(b.iter()) {
                *re = &*re - &(be * &a);
            }
            coords.push(a);
        }
        for e in &rem {
            if !e.try_is_zero()? {
                return Err(Error::NotContained("vector outside the spanned subspace".into()));
            }
        }
        Ok(coords)
    }

    /// Membership test: `v ∈ M` iff its coordinates are all integral.
    pub fn contains(&self, v: &[DElem]) -> Result<bool> {
        let coords = match self.coords(v) {
            Ok(c) => c,
            Err(Error::NotContained(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        for c in &coords {
            if c.try_is_zero()? {
                continue;
            }
            if c.val()? < Rational64::from_integer(0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether `other ⊆ self`.
    pub fn contains_lattice(&self, other: &Lattice) -> Result<bool> {
        for col in &other.basis {
            if !self.contains(col)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Dimension of `M/N` over the residue field of `o_D`, for `N ⊆ M` of
    /// equal rank: the sum of the elementary-divisor exponents.
    pub fn quotient_dim(&self, sub: &Lattice) -> Result<u64> {
        let t = self.transition_to(sub)?;
        let mut total: i64 = 0;
        // The exponent sum is the π_D-valuation of the reduced norm of the
        // transition matrix (block-triangular splitting of the Hermite
        // form), but the Hermite form itself is just as cheap and avoids
        // precision loss on large matrices.
        let lat = Lattice::from_columns(&self.alg, t.rows(), &t.columns())?;
        if lat.rank() != self.rank() {
            return Err(Error::Internal("transition matrix lost rank".into()));
        }
        for s in &lat.pivot_exps {
            if *s < 0 {
                return Err(Error::NotContained("not a sublattice".into()));
            }
            total += s;
        }
        Ok(total as u64)
    }

    /// Coordinates of `sub`'s basis in `self`'s basis, as a rank × rank
    /// matrix. Errors when the two lattices span different subspaces.
    pub fn transition_to(&self, sub: &Lattice) -> Result<DMat> {
        if self.rank() != sub.rank() {
            return Err(Error::BadParameter("rank mismatch".into()));
        }
        let mut cols = Vec::with_capacity(sub.rank());
        for c in &sub.basis {
            cols.push(self.coords(c)?);
        }
        Ok(DMat::from_cols(&self.alg, &cols))
    }

    /// A basis of `self` adapted to the sublattice `sub`: returns pairs
    /// `(b_i, e_i)` such that the `b_i` form a basis of `self` and the
    /// `b_i·π_D^{e_i}` form a basis of `sub`.
    pub fn adapted_to(&self, sub: &Lattice) -> Result<Vec<(Vec<DElem>, i64)>> {
        let t = self.transition_to(sub)?;
        let (u, exps) = smith_left_transform(&t)?;
        // New basis of `self`: old basis times U (a unimodular column mix).
        let b = self.basis_mat().mul(&u);
        let mut out = Vec::with_capacity(self.rank());
        for (j, e) in exps.iter().enumerate() {
            if *e < 0 {
                return Err(Error::NotContained("not a sublattice".into()));
            }
            out.push((b.col(j), *e));
        }
        Ok(out)
    }
}

/// The lattice `{x ∈ D^r : T·x ∈ o_D^m}` for a matrix `T` of full column
/// rank `r`: the standard dual of the lattice spanned by the columns
/// `ρ(t_i)^T` built from the rows `t_i` of `T`.
pub fn preimage_lattice(t: &DMat) -> Result<Lattice> {
    let alg = t.algebra().clone();
    let r = t.cols();
    let rho = Involution::main(&alg);
    // Spanning set of the row module, turned into columns.
    let cols: Vec<Vec<DElem>> =
        (0..t.rows()).map(|i| (0..r).map(|j| rho.apply(t.at(i, j))).collect()).collect();
    let row_lat = Lattice::from_columns(&alg, r, &cols)?;
    if !row_lat.is_full() {
        return Err(Error::BadParameter("matrix does not have full column rank".into()));
    }
    row_lat.dual_standard()
}

/// Smith decomposition, left transform only: finds unimodular `U` and
/// increasing exponents `e_i` with `T = U·diag(π^{e_i})·W` for some
/// unimodular `W`. Requires `T` square and invertible over `D`.
fn smith_left_transform(t: &DMat) -> Result<(DMat, Vec<i64>)> {
    let alg = t.algebra().clone();
    let n = t.rows();
    if n != t.cols() {
        return Err(Error::BadParameter("smith form needs a square matrix".into()));
    }
    let mut a: Vec<Vec<DElem>> =
        (0..n).map(|i| (0..n).map(|j| t.at(i, j).clone()).collect()).collect();
    // u = L^{-1} where L collects the row operations applied to `a`.
    let mut u = DMat::identity(&alg, n);
    let mut exps = Vec::with_capacity(n);
    for k in 0..n {
        // Global minimum valuation in the remaining minor, row-major ties.
        let mut best: Option<(i64, usize, usize)> = None;
        for i in k..n {
            for j in k..n {
                if a[i][j].try_is_zero()? {
                    continue;
                }
                let v = a[i][j].val_scaled()?;
                if best.map(|(bv, _, _)| v < bv).unwrap_or(true) {
                    best = Some((v, i, j));
                }
            }
        }
        let (s, pi, pj) = best.ok_or_else(|| Error::Singular("smith form of singular matrix".into()))?;
        // Row swap on `a` ↔ column swap on u = L^{-1}.
        if pi != k {
            a.swap(pi, k);
            for row in 0..n {
                let tmp = u.at(row, pi).clone();
                *u.at_mut(row, pi) = u.at(row, k).clone();
                *u.at_mut(row, k) = tmp;
            }
        }
        // Column swap on `a` is a right operation; no effect on U.
        if pj != k {
            for row in a.iter_mut() {
                row.swap(pj, k);
            }
        }
        // Normalize pivot to π^s by a right unit (column operation).
        let unit = &a[k][k].inv()? * &DElem::pi_pow(&alg, s);
        for row in a.iter_mut() {
            row[k] = &row[k] * &unit;
        }
        // Eliminate the rest of column k with left (row) operations,
        // mirrored as inverse column operations on U.
        for i in k + 1..n {
            if a[i][k].try_is_zero()? {
                continue;
            }
            let c = &a[i][k] * &DElem::pi_pow(&alg, -s);
            for j in k..n {
                let sub = &c * &a[k][j];
                a[i][j] = &a[i][j] - &sub;
            }
            // row_i -= c·row_k on a ⟹ col_k += col_i·c on U.
            for row in 0..n {
                let add = &*u.at(row, i) * &c;
                let cur = u.at(row, k).clone();
                *u.at_mut(row, k) = &cur + &add;
            }
        }
        // Eliminate the rest of row k with right (column) operations.
        for j in k + 1..n {
            if a[k][j].try_is_zero()? {
                continue;
            }
            let c = &DElem::pi_pow(&alg, -s) * &a[k][j];
            for i in k..n {
                let sub = &a[i][k] * &c;
                a[i][j] = &a[i][j] - &sub;
            }
        }
        exps.push(s);
    }
    Ok((u, exps))
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

    struct Rng(u64);

    impl Rng {
        fn next(&mut self) -> u64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            self.0
        }

        fn delem(&mut self, alg: &DivisionAlgebra, min_pow: i64) -> DElem {
            let f = alg.comp_field().clone();
            let q = f.residue().order();
            let comps: Vec<KElem> = (0..alg.d() as usize)
                .map(|_| {
                    let digits: Vec<FqElem> =
                        (0..4).map(|_| FqElem::from_index(f.residue(), self.next() % q)).collect();
                    KElem::from_digits(&f, min_pow + (self.next() % 2) as i64, &digits)
                })
                .collect();
            DElem::from_comps(alg, comps)
        }

        fn unit(&mut self, alg: &DivisionAlgebra) -> DElem {
            loop {
                let x = self.delem(alg, 0);
                if let Ok(v) = x.val() {
                    if v == Rational64::from_integer(0) {
                        return x;
                    }
                }
            }
        }

        /// A random full lattice: diag(π^{k_i}) times a unimodular mix.
        fn lattice(&mut self, alg: &DivisionAlgebra, m: usize) -> Lattice {
            let cols: Vec<Vec<DElem>> = (0..m)
                .map(|j| {
                    (0..m)
                        .map(|i| {
                            if i == j {
                                let k = (self.next() % 5) as i64 - 2;
                                DElem::pi_pow(alg, k)
                            } else if self.next() % 2 == 0 {
                                self.delem(alg, 0)
                            } else {
                                DElem::zero(alg)
                            }
                        })
                        .collect()
                })
                .collect();
            Lattice::from_columns(alg, m, &cols).unwrap()
        }
    }

    #[test]
    fn canonical_form_is_span_invariant() {
        let alg = quat(3);
        let mut rng = Rng(71);
        for _ in 0..4 {
            let m = 3;
            let lat = rng.lattice(&alg, m);
            // Right-multiply the basis by a unimodular matrix: same span.
            let mut mixed: Vec<Vec<DElem>> = lat.basis_cols().to_vec();
            // column j += column i · unit (i ≠ j), plus a swap.
            let u = rng.unit(&alg);
            let add: Vec<DElem> = mixed[0].iter().map(|e| e * &u).collect();
            for (a, b) in mixed[2].iter_mut().zip(add.iter()) {
                *a = &*a + b;
            }
            mixed.swap(0, 1);
            let lat2 = Lattice::from_columns(&alg, m, &mixed).unwrap();
            assert!(lat.try_eq(&lat2).unwrap());
            // Redundant spanning set: doubling a generator changes nothing.
            let mut redundant = mixed.clone();
            redundant.push(mixed[1].clone());
            let lat3 = Lattice::from_columns(&alg, m, &redundant).unwrap();
            assert!(lat.try_eq(&lat3).unwrap());
        }
    }

    #[test]
    fn membership_and_coords() {
        let alg = quat(5);
        let mut rng = Rng(5);
        let lat = rng.lattice(&alg, 3);
        // Integral combinations of basis vectors are members.
        for _ in 0..5 {
            let coeffs: Vec<DElem> = (0..3).map(|_| rng.delem(&alg, 0)).collect();
            let mut v = vec![DElem::zero(&alg); 3];
            for (b, c) in lat.basis_cols().iter().zip(&coeffs) {
                for (ve, be) in v.iter_mut().zip(b.iter()) {
                    *ve = &*ve + &(be * c);
                }
            }
            assert!(lat.contains(&v).unwrap());
            let got = lat.coords(&v).unwrap();
            for (g, c) in got.iter().zip(&coeffs) {
                assert!(g.try_eq(c).unwrap());
            }
        }
        // Dividing a basis vector by π leaves the lattice.
        let v: Vec<DElem> = lat.basis_cols()[0]
            .iter()
            .map(|e| e * &DElem::pi_pow(&alg, -1))
            .collect();
        assert!(!lat.contains(&v).unwrap());
    }

    #[test]
    fn second_isomorphism_dimension_identity() {
        let alg = quat(3);
        let mut rng = Rng(99);
        for _ in 0..3 {
            let m = rng.lattice(&alg, 2);
            let n = rng.lattice(&alg, 2);
            let s = m.sum(&n).unwrap();
            let i = m.intersect(&n).unwrap();
            assert!(s.contains_lattice(&m).unwrap());
            assert!(s.contains_lattice(&n).unwrap());
            assert!(m.contains_lattice(&i).unwrap());
            assert!(n.contains_lattice(&i).unwrap());
            // dim (M+N)/N = dim M/(M∩N).
            let lhs = s.quotient_dim(&n).unwrap();
            let rhs = m.quotient_dim(&i).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dual_is_an_involution_and_swaps_ops() {
        let alg = quat(9);
        let mut rng = Rng(17);
        let m = rng.lattice(&alg, 2);
        let n = rng.lattice(&alg, 2);
        assert!(m.dual_standard().unwrap().dual_standard().unwrap().try_eq(&m).unwrap());
        let lhs = m.sum(&n).unwrap().dual_standard().unwrap();
        let rhs = m.dual_standard().unwrap().intersect(&n.dual_standard().unwrap()).unwrap();
        assert!(lhs.try_eq(&rhs).unwrap());
        // The standard lattice is self-dual.
        let std = Lattice::standard(&alg, 2);
        assert!(std.dual_standard().unwrap().try_eq(&std).unwrap());
    }

    #[test]
    fn quotient_dimension_oracles() {
        // Explicit elementary divisors over the quaternion order.
        let alg = quat(3);
        let m = Lattice::standard(&alg, 2);
        let cols = vec![
            vec![DElem::pi_pow(&alg, 2), DElem::zero(&alg)],
            vec![DElem::zero(&alg), DElem::pi_pow(&alg, 3)],
        ];
        let n = Lattice::from_columns(&alg, 2, &cols).unwrap();
        assert_eq!(m.quotient_dim(&n).unwrap(), 5);
        // dim M/Mπ^k = m·k (residue field of o_D is κ_L, one dim per step).
        let mut rng = Rng(31);
        let lat = rng.lattice(&alg, 3);
        for k in 1..4i64 {
            assert_eq!(lat.quotient_dim(&lat.scaled_pi(k)).unwrap(), 3 * k as u64);
        }
        // Same over the field case: dim M/Mϖ = m.
        let f = field_algebra(&base(5));
        let lat1 = rng.lattice(&f, 3);
        assert_eq!(lat1.quotient_dim(&lat1.scaled_pi(1)).unwrap(), 3);
    }

    #[test]
    fn adapted_basis_recovers_sublattice() {
        let alg = quat(3);
        let mut rng = Rng(47);
        let m = rng.lattice(&alg, 3);
        let n = m.intersect(&rng.lattice(&alg, 3)).unwrap();
        let pairs = m.adapted_to(&n).unwrap();
        // The b_i span M.
        let b: Vec<Vec<DElem>> = pairs.iter().map(|(b, _)| b.clone()).collect();
        let again = Lattice::from_columns(&alg, 3, &b).unwrap();
        assert!(again.try_eq(&m).unwrap());
        // The b_i π^{e_i} span N.
        let scaled: Vec<Vec<DElem>> = pairs
            .iter()
            .map(|(b, e)| b.iter().map(|x| x * &DElem::pi_pow(&alg, *e)).collect())
            .collect();
        let sub = Lattice::from_columns(&alg, 3, &scaled).unwrap();
        assert!(sub.try_eq(&n).unwrap());
        // Exponents increase.
        for w in pairs.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn rank_deficient_canonical_form() {
        let alg = quat(5);
        let mut rng = Rng(13);
        // Two independent columns in D³ plus their mixes.
        let c1: Vec<DElem> = (0..3).map(|_| rng.delem(&alg, 0)).collect();
        let c2: Vec<DElem> = (0..3).map(|_| rng.delem(&alg, 1)).collect();
        let lat = Lattice::from_columns(&alg, 3, &[c1.clone(), c2.clone()]).unwrap();
        if lat.rank() != 2 {
            // Degenerate random draw; extremely unlikely but not a failure
            // of the canonical form.
            return;
        }
        let mix: Vec<DElem> = c1
            .iter()
            .zip(&c2)
            .map(|(a, b)| &(a * &DElem::pi_pow(&alg, 1)) + b)
            .collect();
        let lat2 = Lattice::from_columns(&alg, 3, &[mix, c2.clone(), c1]).unwrap();
        // Same span: π·c1 + c2, c2, c1 generate the same module.
        assert!(lat.try_eq(&lat2).unwrap());
        assert!(lat.contains(&c2).unwrap());
        // Vectors outside the column span are rejected.
        let outside = vec![DElem::one(&alg), DElem::zero(&alg), DElem::zero(&alg)];
        match lat.coords(&outside) {
            Err(Error::NotContained(_)) => {}
            other => panic!("expected NotContained, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn preimage_lattice_solves_integrality() {
        let alg = quat(3);
        let mut rng = Rng(61);
        // T: 3×2 with full column rank.
        let t = DMat::from_fn(&alg, 3, 2, |i, j| {
            if i == j {
                DElem::pi_pow(&alg, -1)
            } else {
                rng.delem(&alg, 0)
            }
        });
        let pre = preimage_lattice(&t).unwrap();
        assert!(pre.is_full());
        // Every basis vector of the preimage maps into o_D³.
        for c in pre.basis_cols() {
            let img = t.apply(c);
            for e in &img {
                if !e.try_is_zero().unwrap() {
                    assert!(e.val().unwrap() >= Rational64::from_integer(0));
                }
            }
        }
        // Scaling a basis vector by π^{-1} must break integrality somewhere
        // (the preimage is exactly the solution set, not just contained).
        for c in pre.basis_cols() {
            let stretched: Vec<DElem> =
                c.iter().map(|e| e * &DElem::pi_pow(&alg, -1)).collect();
            let img = t.apply(&stretched);
            let bad = img.iter().any(|e| {
                !e.try_is_zero().unwrap()
                    && e.val().unwrap() < Rational64::from_integer(0)
            });
            assert!(bad, "preimage lattice is not maximal");
        }
    }

    #[test]
    fn field_case_matches_commutative_expectations() {
        let k = base(9);
        let alg = field_algebra(&k);
        let mut rng = Rng(23);
        let m = rng.lattice(&alg, 3);
        let n = rng.lattice(&alg, 3);
        let s = m.sum(&n).unwrap();
        let i = m.intersect(&n).unwrap();
        assert_eq!(
            s.quotient_dim(&n).unwrap(),
            m.quotient_dim(&i).unwrap()
        );
        assert!(m.dual_standard().unwrap().dual_standard().unwrap().try_eq(&m).unwrap());
    }
}
