//! ε-hermitian spaces over the algebra and their classification.
//!
//! A form is stored by its Gram matrix `G` with respect to an involution
//! `ρ` and a sign `ε`: `h(v, w) = ρ(v)ᵀ G w`, so that
//! `h(v·a, w·b) = ρ(a)·h(v,w)·b` and `h(w,v) = ε·ρ(h(v,w))`, forcing
//! `G^* = ε·G`. Matrices act on columns from the left; the adjoint of `g`
//! is `σ(g) = G⁻¹ g^* G` and `g` is unitary when `σ(g)·g = 1`.
//!
//! On top of evaluation sit the structural algorithms: duals of lattices
//! and of lattice functions, diagonalization, isotropic vectors (with an
//! honest anisotropy certificate), hyperbolic (Witt) decompositions,
//! isometry of forms, and a family of unitary moves used to randomize
//! instances. Everything audits its own output and returns `Internal` on
//! violated invariants rather than silently proceeding.

use rand::Rng;

use crate::algebra::{
    dvec_add, dvec_scale_right, dvec_sub, ok_basis, DElem, DMat, DivisionAlgebra, Involution,
};
use crate::arith::KElem;
use crate::error::{Error, Result};
use crate::fq::fq_elements;
use crate::kmat;
use crate::latfun::LatticeFunction;
use crate::lattice::{preimage_lattice, Lattice};
use crate::norms::{solve_binary_norm, solve_norm_for_involution, sqrt_in_field};
use crate::random::{random_dmat, random_nonzero_delem};

/// A nondegenerate ε-hermitian form over the algebra.
#[derive(Clone)]
pub struct HermitianForm {
    alg: DivisionAlgebra,
    rho: Involution,
    epsilon: i64,
    gram: DMat,
    gram_inv: DMat,
}

/// A hyperbolic decomposition: pairs `(v_i, w_i)` with
/// `h(v_i,v_i) = h(w_i,w_i) = 0`, `h(v_i,w_i) = 1`, mutually orthogonal,
/// plus a diagonalized anisotropic kernel.
#[derive(Clone)]
pub struct WittBasis {
    pub pairs: Vec<(Vec<DElem>, Vec<DElem>)>,
    pub kernel: Vec<Vec<DElem>>,
    pub kernel_values: Vec<DElem>,
}

impl WittBasis {
    /// All basis vectors in order `v_1, w_1, …, v_r, w_r, u_1, …`.
    pub fn columns(&self) -> Vec<Vec<DElem>> {
        let mut out = Vec::new();
        for (v, w) in &self.pairs {
            out.push(v.clone());
            out.push(w.clone());
        }
        out.extend(self.kernel.iter().cloned());
        out
    }
}

pub(crate) fn std_basis(alg: &DivisionAlgebra, m: usize) -> Vec<Vec<DElem>> {
    let id = DMat::identity(alg, m);
    (0..m).map(|j| id.col(j)).collect()
}

impl HermitianForm {
    pub fn new(
        alg: &DivisionAlgebra,
        rho: &Involution,
        epsilon: i64,
        gram: DMat,
    ) -> Result<HermitianForm> {
        let p = alg.base().residue().p();
        if p == 2 {
            return Err(Error::EvenResidueChar(p));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::BadParameter("form sign must be ±1".into()));
        }
        if gram.rows() != gram.cols() || gram.rows() == 0 {
            return Err(Error::BadParameter("Gram matrix must be square and nonempty".into()));
        }
        let star = gram.conj_transpose(rho);
        let expected = if epsilon == 1 { gram.clone() } else { gram.neg() };
        if !star.try_eq(&expected)? {
            return Err(Error::BadParameter("Gram matrix is not ε-symmetric".into()));
        }
        let gram_inv = gram
            .inv()
            .map_err(|_| Error::Degenerate("Gram matrix is singular".into()))?;
        Ok(HermitianForm { alg: alg.clone(), rho: rho.clone(), epsilon, gram, gram_inv })
    }

    pub fn algebra(&self) -> &DivisionAlgebra {
        &self.alg
    }

    pub fn rho(&self) -> &Involution {
        &self.rho
    }

    pub fn epsilon(&self) -> i64 {
        self.epsilon
    }

    pub fn gram(&self) -> &DMat {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    /// `h(v, w) = ρ(v)ᵀ G w`.
    pub fn eval(&self, v: &[DElem], w: &[DElem]) -> Result<DElem> {
        if v.len() != self.dim() || w.len() != self.dim() {
            return Err(Error::BadParameter("form arguments have the wrong length".into()));
        }
        let gw = self.gram.apply(w);
        let mut acc = DElem::zero(&self.alg);
        for (vi, gwi) in v.iter().zip(&gw) {
            acc = &acc + &(&self.rho.apply(vi) * gwi);
        }
        Ok(acc)
    }

    /// The adjoint `σ(g) = G⁻¹ g^* G`, characterized by
    /// `h(g·v, w) = h(v, σ(g)·w)`.
    pub fn adjoint(&self, g: &DMat) -> DMat {
        self.gram_inv.mul(&g.conj_transpose(&self.rho)).mul(&self.gram)
    }

    pub fn is_unitary(&self, g: &DMat) -> Result<bool> {
        self.adjoint(g).mul(g).try_eq(&DMat::identity(&self.alg, self.dim()))
    }

    /// The form pulled back along `g`: `h'(x, y) = h(g·x, g·y)`, with Gram
    /// matrix `g^* G g`. Isometric to the original for invertible `g`.
    pub fn transformed(&self, g: &DMat) -> Result<HermitianForm> {
        let gram = g.conj_transpose(&self.rho).mul(&self.gram).mul(g);
        HermitianForm::new(&self.alg, &self.rho, self.epsilon, gram)
    }

    /// The restriction to the span of the given columns (which must be
    /// independent with nondegenerate restriction).
    pub fn restricted(&self, cols: &[Vec<DElem>]) -> Result<HermitianForm> {
        let b = DMat::from_cols(&self.alg, cols);
        let gram = b.conj_transpose(&self.rho).mul(&self.gram).mul(&b);
        HermitianForm::new(&self.alg, &self.rho, self.epsilon, gram)
    }

    /// The dual lattice `M^# = {v : h(v, M) ⊆ 𝔭_D}`.
    pub fn dual_lattice(&self, m: &Lattice) -> Result<Lattice> {
        if !m.is_full() {
            return Err(Error::BadParameter("dual of a non-full lattice".into()));
        }
        let star = self.gram.mul(&m.basis_mat()).conj_transpose(&self.rho);
        let pi_inv = DElem::pi_pow(&self.alg, -1);
        let t = DMat::from_fn(&self.alg, star.rows(), star.cols(), |i, j| {
            &pi_inv * star.at(i, j)
        });
        preimage_lattice(&t)
    }

    /// The dual lattice function `Λ^#(t) = (Λ((-t)⁺))^#`.
    pub fn dual_function(&self, f: &LatticeFunction) -> Result<LatticeFunction> {
        f.dual_with(|l| self.dual_lattice(l))
    }

    /// Whether `Λ^# = Λ` pointwise.
    pub fn is_selfdual(&self, f: &LatticeFunction) -> Result<bool> {
        self.dual_function(f)?.try_eq(f)
    }

    fn is_alternating_case(&self) -> bool {
        self.alg.d() == 1 && self.rho.theta().is_identity() && self.epsilon == -1
    }

    /// A vector of the spanned space with `h(v,v) ≠ 0`, together with that
    /// value. `None` means the restriction of `h` to the span is
    /// alternating (`h(v,v) ≡ 0`).
    fn anisotropic_probe(&self, space: &[Vec<DElem>]) -> Result<Option<(Vec<DElem>, DElem)>> {
        for s in space {
            let q = self.eval(s, s)?;
            if !q.try_is_zero()? {
                return Ok(Some((s.clone(), q)));
            }
        }
        // h(u_i + u_j·μ, ·) probes reach every symmetrized product; if all
        // vanish along an o-basis of the algebra, the form is alternating.
        let basis = ok_basis(&self.alg);
        for i in 0..space.len() {
            for j in i + 1..space.len() {
                for mu in &basis {
                    let v = dvec_add(&space[i], &dvec_scale_right(&space[j], mu));
                    let q = self.eval(&v, &v)?;
                    if !q.try_is_zero()? {
                        return Ok(Some((v, q)));
                    }
                }
            }
        }
        Ok(None)
    }

    /// An orthogonal basis with its diagonal values, or `None` for the one
    /// genuinely alternating case (index 1, identity involution, ε = -1).
    pub fn diagonalize(&self) -> Result<Option<(Vec<Vec<DElem>>, Vec<DElem>)>> {
        let m = self.dim();
        let mut space = std_basis(&self.alg, m);
        let mut cols: Vec<Vec<DElem>> = Vec::new();
        let mut vals: Vec<DElem> = Vec::new();
        while !space.is_empty() {
            let Some((v, q)) = self.anisotropic_probe(&space)? else {
                if cols.is_empty() && self.is_alternating_case() {
                    return Ok(None);
                }
                return Err(Error::Internal(
                    "alternating block inside a non-alternating form".into(),
                ));
            };
            let qi = q.inv()?;
            let mut proj = Vec::with_capacity(space.len());
            for s in &space {
                let c = &qi * &self.eval(&v, s)?;
                proj.push(dvec_sub(s, &dvec_scale_right(&v, &c)));
            }
            let reduced = Lattice::from_columns(&self.alg, m, &proj)?;
            let new_space = reduced.basis_cols().to_vec();
            if new_space.len() + 1 != space.len() {
                return Err(Error::Internal("orthogonal complement has wrong rank".into()));
            }
            cols.push(v);
            vals.push(q);
            space = new_space;
        }
        // Audit: the claimed basis really diagonalizes the form.
        let b = DMat::from_cols(&self.alg, &cols);
        let s = b.conj_transpose(&self.rho).mul(&self.gram).mul(&b);
        for i in 0..m {
            for j in 0..m {
                let ok = if i == j { s.at(i, j).try_eq(&vals[i])? } else { s.at(i, j).try_is_zero()? };
                if !ok {
                    return Err(Error::Internal("diagonalization audit failed".into()));
                }
            }
        }
        Ok(Some((cols, vals)))
    }

    /// A nonzero vector with `h(v,v) = 0`, or `None` when the form is
    /// anisotropic. The search is exact: residue-level solutions are lifted
    /// by square roots and norm solvers, never by numerical iteration on
    /// the vector itself.
    pub fn isotropic_vector(&self) -> Result<Option<Vec<DElem>>> {
        let m = self.dim();
        let Some((cols, vals)) = self.diagonalize()? else {
            // Alternating: every vector is isotropic.
            return Ok(Some(std_basis(&self.alg, m)[0].clone()));
        };
        if self.alg.d() == 1 {
            return if self.rho.theta().is_identity() {
                isotropic_diag_quadratic(&self.alg, &cols, &vals)
            } else {
                isotropic_diag_second_kind(&self.alg, &self.rho, &cols, &vals)
            };
        }
        if self.epsilon == 1 {
            if m < 2 {
                return Ok(None);
            }
            // The reduced norm is onto the center, so any central target is
            // represented and every rank-2 form is isotropic.
            let target = -&vals[0];
            let c = represent_scalar(&self.alg, &self.rho, self.epsilon, &vals[1], &target)?
                .ok_or_else(|| Error::Internal("central ratio not represented".into()))?;
            return Ok(Some(dvec_add(&cols[0], &dvec_scale_right(&cols[1], &c))));
        }
        // Skew case: a pair ⟨a_i, a_j⟩ is isotropic exactly when the
        // reduced norms agree up to squares; rank ≥ 4 always finds a pair
        // (the norm classes of traceless elements fill only three cosets).
        for i in 0..m {
            for j in i + 1..m {
                let target = -&vals[i];
                if let Some(c) =
                    represent_scalar(&self.alg, &self.rho, self.epsilon, &vals[j], &target)?
                {
                    return Ok(Some(dvec_add(&cols[i], &dvec_scale_right(&cols[j], &c))));
                }
            }
        }
        Ok(None)
    }

    /// A full hyperbolic decomposition with anisotropic kernel.
    pub fn witt_basis(&self) -> Result<WittBasis> {
        let m = self.dim();
        let mut space = std_basis(&self.alg, m);
        let mut pairs = Vec::new();
        loop {
            if space.is_empty() {
                break;
            }
            let sub = self.restricted(&space)?;
            let Some(coords) = sub.isotropic_vector()? else {
                break;
            };
            let v = expand(&space, &coords);
            // Partner: some current basis vector pairs nontrivially with v.
            let mut w0 = None;
            for s in &space {
                let p = self.eval(&v, s)?;
                if !p.try_is_zero()? {
                    w0 = Some((s.clone(), p));
                    break;
                }
            }
            let (w0, p) = w0.ok_or_else(|| Error::Degenerate("isotropic vector pairs with nothing".into()))?;
            let w1 = dvec_scale_right(&w0, &p.inv()?);
            // One-shot correction to an isotropic partner:
            // h(w - v·c, w - v·c) = h(w,w) - ε·c - ρ(c) = 0 for c = ε·h(w,w)/2.
            let hww = self.eval(&w1, &w1)?;
            let half = KElem::from_integer(self.alg.base(), 2).inv()?;
            let mut c = &hww * &DElem::from_center(&self.alg, &half);
            if self.epsilon == -1 {
                c = -&c;
            }
            let w = dvec_sub(&w1, &dvec_scale_right(&v, &c));
            if !self.eval(&w, &w)?.try_is_zero()? || !self.eval(&v, &w)?.try_eq(&DElem::one(&self.alg))? {
                return Err(Error::Internal("hyperbolic pair normalization failed".into()));
            }
            // Orthogonal projection away from the pair:
            // pr(x) = v·ε·h(w,x) + w·h(v,x).
            let mut proj = Vec::with_capacity(space.len());
            for s in &space {
                let mut cw = self.eval(&w, s)?;
                if self.epsilon == -1 {
                    cw = -&cw;
                }
                let cv = self.eval(&v, s)?;
                let pr = dvec_add(&dvec_scale_right(&v, &cw), &dvec_scale_right(&w, &cv));
                proj.push(dvec_sub(s, &pr));
            }
            let reduced = Lattice::from_columns(&self.alg, m, &proj)?;
            let new_space = reduced.basis_cols().to_vec();
            if new_space.len() + 2 != space.len() {
                return Err(Error::Internal("hyperbolic complement has wrong rank".into()));
            }
            pairs.push((v, w));
            space = new_space;
        }
        let (kernel, kernel_values) = if space.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            let sub = self.restricted(&space)?;
            let Some((cols, vals)) = sub.diagonalize()? else {
                return Err(Error::Internal("anisotropic kernel cannot be alternating".into()));
            };
            (cols.iter().map(|c| expand(&space, c)).collect(), vals)
        };
        Ok(WittBasis { pairs, kernel, kernel_values })
    }

    /// The Witt index (number of hyperbolic planes).
    pub fn witt_index(&self) -> Result<usize> {
        Ok(self.witt_basis()?.pairs.len())
    }

    /// Whether two forms over the same (algebra, involution, sign) datum
    /// are isometric: equal dimension, equal Witt index, and isometric
    /// anisotropic kernels (decided by represent-and-split recursion).
    pub fn isometric(&self, other: &HermitianForm) -> Result<bool> {
        Ok(self.isometry_witness(other)?.is_some())
    }

    /// An isometry witness: a matrix `g` with `h_other(g·v, g·w) = h_self(v, w)`,
    /// or `None` when the forms are not isometric. Built by lining up Witt
    /// bases of both forms and matching the anisotropic kernels vector by
    /// vector; the result is audited against the Gram matrices.
    pub fn isometry_witness(&self, other: &HermitianForm) -> Result<Option<DMat>> {
        if self.epsilon != other.epsilon
            || self.rho.sign() != other.rho.sign()
            || self.rho.theta() != other.rho.theta()
        {
            return Err(Error::BadParameter(
                "isometry comparison needs a common involution and sign".into(),
            ));
        }
        if self.dim() != other.dim() {
            return Ok(None);
        }
        let wa = self.witt_basis()?;
        let wb = other.witt_basis()?;
        if wa.pairs.len() != wb.pairs.len() {
            return Ok(None);
        }
        let Some(matched) = aniso_match(other, &wb.kernel, &wa.kernel_values)? else {
            return Ok(None);
        };
        // Both Witt bases now have the same Gram matrix (hyperbolic blocks
        // followed by the diagonalized kernel of self), so the change of
        // basis from one to the other transports other onto self.
        let mut sx = Vec::with_capacity(self.dim());
        for (v, w) in &wa.pairs {
            sx.push(v.clone());
            sx.push(w.clone());
        }
        sx.extend(wa.kernel.iter().cloned());
        let mut sy = Vec::with_capacity(self.dim());
        for (v, w) in &wb.pairs {
            sy.push(v.clone());
            sy.push(w.clone());
        }
        sy.extend(matched);
        let g = DMat::from_cols(&self.alg, &sy).mul(&DMat::from_cols(&self.alg, &sx).inv()?);
        if !other.transformed(&g)?.gram().try_eq(&self.gram)? {
            return Err(Error::Internal("isometry witness fails the transport audit".into()));
        }
        Ok(Some(g))
    }

    /// A random word in unitary moves adapted to a hyperbolic basis: torus
    /// scalings, pair swaps, pair-to-pair and kernel-to-pair shears. Every
    /// factor is audited to be unitary. With no hyperbolic pairs there are
    /// no moves and the identity is returned.
    pub fn random_unitary<R: Rng>(
        &self,
        basis: &WittBasis,
        rng: &mut R,
        steps: usize,
    ) -> Result<DMat> {
        let m = self.dim();
        let r = basis.pairs.len();
        if r == 0 {
            return Ok(DMat::identity(&self.alg, m));
        }
        let cols = basis.columns();
        let s_mat = DMat::from_cols(&self.alg, &cols);
        let s_inv = s_mat.inv()?;
        let mut total = DMat::identity(&self.alg, m);
        for _ in 0..steps {
            let mut images = cols.clone();
            let kind = rng.gen_range(0..4u8);
            match kind {
                0 => {
                    // Torus: v ↦ v·α, w ↦ w·ρ(α)⁻¹.
                    let i = rng.gen_range(0..r);
                    let alpha = random_nonzero_delem(&self.alg, rng, -1, 1);
                    images[2 * i] = dvec_scale_right(&cols[2 * i], &alpha);
                    images[2 * i + 1] =
                        dvec_scale_right(&cols[2 * i + 1], &self.rho.apply(&alpha).inv()?);
                }
                1 => {
                    // Swap: v ↦ w·λ, w ↦ v·ε·ρ(λ)⁻¹.
                    let i = rng.gen_range(0..r);
                    let lambda = random_nonzero_delem(&self.alg, rng, -1, 1);
                    let mut mu = self.rho.apply(&lambda).inv()?;
                    if self.epsilon == -1 {
                        mu = -&mu;
                    }
                    images[2 * i] = dvec_scale_right(&cols[2 * i + 1], &lambda);
                    images[2 * i + 1] = dvec_scale_right(&cols[2 * i], &mu);
                }
                2 if r >= 2 => {
                    // Shear between pairs: w_i += v_j·c, w_j -= v_i·ε·ρ(c).
                    let i = rng.gen_range(0..r);
                    let mut j = rng.gen_range(0..r - 1);
                    if j >= i {
                        j += 1;
                    }
                    let c = random_nonzero_delem(&self.alg, rng, -1, 1);
                    let mut cc = self.rho.apply(&c);
                    if self.epsilon == -1 {
                        cc = -&cc;
                    }
                    images[2 * i + 1] =
                        dvec_add(&cols[2 * i + 1], &dvec_scale_right(&cols[2 * j], &c));
                    images[2 * j + 1] =
                        dvec_sub(&cols[2 * j + 1], &dvec_scale_right(&cols[2 * i], &cc));
                }
                3 if !basis.kernel.is_empty() => {
                    // Kernel shear: u ↦ u + v·c₁ forces w ↦ w - u·c₂ - v·c₃
                    // with c₂ = a⁻¹ρ(c₁) and c₃ = ε·ρ(c₂)·a·c₂/2.
                    let i = rng.gen_range(0..r);
                    let l = rng.gen_range(0..basis.kernel.len());
                    let a = &basis.kernel_values[l];
                    let c1 = random_nonzero_delem(&self.alg, rng, -1, 1);
                    let c2 = &a.inv()? * &self.rho.apply(&c1);
                    let half = KElem::from_integer(self.alg.base(), 2).inv()?;
                    let mut c3 = &(&(&self.rho.apply(&c2) * a) * &c2)
                        * &DElem::from_center(&self.alg, &half);
                    if self.epsilon == -1 {
                        c3 = -&c3;
                    }
                    images[2 * r + l] = dvec_add(&cols[2 * r + l], &dvec_scale_right(&cols[2 * i], &c1));
                    let drop = dvec_add(
                        &dvec_scale_right(&basis.kernel[l], &c2),
                        &dvec_scale_right(&cols[2 * i], &c3),
                    );
                    images[2 * i + 1] = dvec_sub(&cols[2 * i + 1], &drop);
                }
                _ => continue,
            }
            let g = DMat::from_cols(&self.alg, &images).mul(&s_inv);
            if !self.is_unitary(&g)? {
                return Err(Error::Internal("generated move is not unitary".into()));
            }
            total = g.mul(&total);
        }
        Ok(total)
    }
}

/// `Σ space_l · coords_l`: a vector of the subspace in ambient coordinates.
pub(crate) fn expand(space: &[Vec<DElem>], coords: &[DElem]) -> Vec<DElem> {
    let mut acc = vec![DElem::zero(space[0][0].algebra()); space[0].len()];
    for (s, c) in space.iter().zip(coords) {
        acc = dvec_add(&acc, &dvec_scale_right(s, c));
    }
    acc
}

/// Solves `ρ(c)·a·c = b` for ε-symmetric `a, b`. `None` certifies that no
/// solution exists (the obstruction is a square or norm class).
pub fn represent_scalar(
    alg: &DivisionAlgebra,
    rho: &Involution,
    epsilon: i64,
    a: &DElem,
    b: &DElem,
) -> Result<Option<DElem>> {
    for x in [a, b] {
        if x.try_is_zero()? {
            return Err(Error::BadParameter("scalar representation of zero".into()));
        }
        let mut sx = rho.apply(x);
        if epsilon == -1 {
            sx = -&sx;
        }
        if !sx.try_eq(x)? {
            return Err(Error::BadParameter("scalar is not ε-symmetric".into()));
        }
    }
    if alg.d() == 1 {
        let field = alg.base();
        let ratio = &b.comps()[0] * &a.comps()[0].inv()?;
        let sol = if rho.theta().is_identity() {
            sqrt_in_field(&ratio)?
        } else {
            solve_norm_for_involution(field, rho.theta(), &ratio)?
        };
        return Ok(sol.map(|c| DElem::from_comp_field(alg, &c)));
    }
    // Quaternion case: the algorithms below use ρ(c)·c = Nrd(c), which is
    // specific to the main involution.
    let is_main = rho.sign() == -1 && rho.theta() == alg.tau().unwrap();
    if !is_main {
        return Err(Error::WrongCase(
            "scalar representation over the quaternions needs the main involution".into(),
        ));
    }
    let l = alg.l_ext().unwrap();
    if epsilon == 1 {
        // Central targets: ρ(c)·a·c = a·Nrd(c), and Nrd is onto the center
        // (units through the unramified norm, odd valuations through π).
        let a_k = l.descend(&a.comps()[0])?;
        let b_k = l.descend(&b.comps()[0])?;
        let t = &b_k * &a_k.inv()?;
        let n = t.valuation()?;
        // Nrd(π^n) = (-c_unit·ϖ)^n.
        let base = alg.base();
        let mut nrd_pi_n =
            KElem::from_residue(base, &alg.c_unit().pow_signed(n)).shifted(n);
        if n.rem_euclid(2) == 1 {
            nrd_pi_n = -&nrd_pi_n;
        }
        let unit = &t * &nrd_pi_n.inv()?;
        let y = l.solve_norm(&unit)?;
        let c = &DElem::from_comp_field(alg, &y) * &DElem::pi_pow(alg, n);
        audit_represented(alg, rho, a, b, &c)?;
        return Ok(Some(c));
    }
    // Traceless targets: solvable exactly when Nrd(b)/Nrd(a) is a square.
    let ratio = &b.nrd()? * &a.nrd()?.inv()?;
    let Some(s) = sqrt_in_field(&ratio)? else {
        return Ok(None);
    };
    let b1 = b * &DElem::from_center(alg, &s.inv()?);
    // Conjugate a onto b1 (same trace and norm ⟹ conjugate), then scale
    // inside k(b1) to fix the norm factor.
    let c1 = solve_conjugation(alg, a, &b1)?;
    let mu = &s * &c1.nrd()?.inv()?;
    let nb1 = b1.nrd()?;
    let c = if let Some((x0, x1)) = solve_binary_norm(&nb1, &mu)? {
        let z = &DElem::from_center(alg, &x0) + &(&DElem::from_center(alg, &x1) * &b1);
        &c1 * &z
    } else {
        // Twist by an anticommuting unit: exactly one of the two cosets of
        // norms from k(b1) contains the needed factor.
        let w = solve_anticommutation(alg, &b1)?;
        if !w.trd()?.try_is_zero()? {
            return Err(Error::Internal("anticommuting element is not traceless".into()));
        }
        let mu2 = &mu * &(-&w.nrd()?).inv()?;
        let Some((x0, x1)) = solve_binary_norm(&nb1, &mu2)? else {
            return Err(Error::Internal("neither norm coset represents the factor".into()));
        };
        let z = &DElem::from_center(alg, &x0) + &(&DElem::from_center(alg, &x1) * &b1);
        &(&c1 * &w) * &z
    };
    audit_represented(alg, rho, a, b, &c)?;
    Ok(Some(c))
}

fn audit_represented(
    alg: &DivisionAlgebra,
    rho: &Involution,
    a: &DElem,
    b: &DElem,
    c: &DElem,
) -> Result<()> {
    let _ = alg;
    let got = &(&rho.apply(c) * a) * c;
    if got.try_eq(b)? {
        Ok(())
    } else {
        Err(Error::Internal("scalar representation audit failed".into()))
    }
}

/// A nonzero `x` with `a·x = x·b` (exists whenever `a, b` share trace and
/// norm, by conjugacy in a division algebra).
fn solve_conjugation(alg: &DivisionAlgebra, a: &DElem, b: &DElem) -> Result<DElem> {
    linear_delem_solve(alg, |e| &(a * e) - &(e * b))
}

/// A nonzero `x` with `b·x = -x·b` (the orthogonal complement of `k(b)`).
fn solve_anticommutation(alg: &DivisionAlgebra, b: &DElem) -> Result<DElem> {
    linear_delem_solve(alg, |e| &(b * e) + &(e * b))
}

fn linear_delem_solve(
    alg: &DivisionAlgebra,
    op: impl Fn(&DElem) -> DElem,
) -> Result<DElem> {
    let basis = ok_basis(alg);
    let n = basis.len();
    let mut mat = kmat::zero(alg.base(), n, n);
    for (j, e) in basis.iter().enumerate() {
        let coords = op(e).k_coords();
        for (i, c) in coords.into_iter().enumerate() {
            mat[i][j] = c;
        }
    }
    let kern = kmat::kernel(&mat)?;
    let Some(first) = kern.first() else {
        return Err(Error::Internal("linear solve over the algebra found no kernel".into()));
    };
    Ok(DElem::from_k_coords(alg, first))
}

/// Isotropic vector of a diagonalized quadratic form (index 1, identity
/// involution): values split by valuation parity, pairs are square tests,
/// and any three values of equal parity are isotropic by a residue count.
fn isotropic_diag_quadratic(
    alg: &DivisionAlgebra,
    cols: &[Vec<DElem>],
    vals: &[DElem],
) -> Result<Option<Vec<DElem>>> {
    let field = alg.base();
    let m = vals.len();
    // Normalize each value by an even power of ϖ so its valuation is 0 or 1.
    let mut ncols = Vec::with_capacity(m);
    let mut nvals = Vec::with_capacity(m);
    let mut parity = Vec::with_capacity(m);
    for (c, v) in cols.iter().zip(vals) {
        let e = v.comps()[0].valuation()?;
        let shift = e.div_euclid(2);
        let scale = DElem::from_center(alg, &KElem::uniformizer_pow(field, -shift));
        ncols.push(dvec_scale_right(c, &scale));
        nvals.push(v.comps()[0].shifted(-2 * shift));
        parity.push(e.rem_euclid(2));
    }
    // Pairs within a parity class: a_i + a_j·c² = 0 has a solution exactly
    // when -a_i/a_j is a square.
    for i in 0..m {
        for j in i + 1..m {
            if parity[i] != parity[j] {
                continue;
            }
            let ratio = -&(&nvals[i] * &nvals[j].inv()?);
            if let Some(c) = sqrt_in_field(&ratio)? {
                let cd = DElem::from_comp_field(alg, &c);
                return Ok(Some(dvec_add(&ncols[i], &dvec_scale_right(&ncols[j], &cd))));
            }
        }
    }
    // Triples within a parity class: the residue form has a nontrivial
    // zero with all coordinates nonzero (zeros would be pair solutions),
    // and both lifts are exact square roots.
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                if parity[i] != parity[j] || parity[j] != parity[k] {
                    continue;
                }
                let p = parity[i];
                let (ui, uj, uk) = (
                    nvals[i].shifted(-p),
                    nvals[j].shifted(-p),
                    nvals[k].shifted(-p),
                );
                let (ri, rj, rk) =
                    (ui.leading()?.1, uj.leading()?.1, uk.leading()?.1);
                for x_res in fq_elements(field.residue()) {
                    if x_res.is_zero() {
                        continue;
                    }
                    let num = &(-&rk) - &(&ri * &(&x_res * &x_res));
                    if num.is_zero() {
                        continue;
                    }
                    let r = &num * &rj.inv();
                    if !r.is_square() {
                        continue;
                    }
                    let x = KElem::from_residue(field, &x_res);
                    let y_sq = &(&(-&uk) - &(&ui * &(&x * &x))) * &uj.inv()?;
                    let y = sqrt_in_field(&y_sq)?.ok_or_else(|| {
                        Error::Internal("residue square failed to lift in triple".into())
                    })?;
                    let xd = DElem::from_comp_field(alg, &x);
                    let yd = DElem::from_comp_field(alg, &y);
                    let v = dvec_add(
                        &dvec_add(
                            &dvec_scale_right(&ncols[i], &xd),
                            &dvec_scale_right(&ncols[j], &yd),
                        ),
                        &ncols[k],
                    );
                    return Ok(Some(v));
                }
            }
        }
    }
    Ok(None)
}

/// Isotropic vector of a diagonalized form along a nontrivial order-2
/// automorphism: pair tests are norm equations, triples enumerate one
/// residue coordinate and solve a norm equation for the second.
fn isotropic_diag_second_kind(
    alg: &DivisionAlgebra,
    rho: &Involution,
    cols: &[Vec<DElem>],
    vals: &[DElem],
) -> Result<Option<Vec<DElem>>> {
    let field = alg.base();
    let theta = rho.theta();
    let m = vals.len();
    // Normalize valuations into {0, 1} by norm factors N(ϖ^s).
    let mut ncols = Vec::with_capacity(m);
    let mut nvals = Vec::with_capacity(m);
    for (c, v) in cols.iter().zip(vals) {
        let e = v.comps()[0].valuation()?;
        let shift = e.div_euclid(2);
        let w = KElem::uniformizer_pow(field, -shift);
        let factor = &theta.apply(&w) * &w;
        ncols.push(dvec_scale_right(c, &DElem::from_comp_field(alg, &w)));
        nvals.push(&v.comps()[0] * &factor);
    }
    for i in 0..m {
        for j in i + 1..m {
            let target = -&(&nvals[i] * &nvals[j].inv()?);
            if let Some(c) = solve_norm_for_involution(field, theta, &target)? {
                let cd = DElem::from_comp_field(alg, &c);
                return Ok(Some(dvec_add(&ncols[i], &dvec_scale_right(&ncols[j], &cd))));
            }
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                for z_res in fq_elements(field.residue()) {
                    if z_res.is_zero() {
                        continue;
                    }
                    let z1 = KElem::from_residue(field, &z_res);
                    let n1 = &theta.apply(&z1) * &z1;
                    let num = &(-&nvals[k]) - &(&n1 * &nvals[i]);
                    if num.try_is_zero()? {
                        continue;
                    }
                    let target = &num * &nvals[j].inv()?;
                    if let Some(z2) = solve_norm_for_involution(field, theta, &target)? {
                        let z1d = DElem::from_comp_field(alg, &z1);
                        let z2d = DElem::from_comp_field(alg, &z2);
                        let v = dvec_add(
                            &dvec_add(
                                &dvec_scale_right(&ncols[i], &z1d),
                                &dvec_scale_right(&ncols[j], &z2d),
                            ),
                            &ncols[k],
                        );
                        return Ok(Some(v));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Isometry of anisotropic diagonal forms by represent-and-split: `b`
/// represents `a₀` exactly when `⟨-a₀⟩ ⊥ b` is isotropic, and the witness
/// splits off an isometric line from both sides.
/// Finds an orthogonal family `w_1, …, w_k` inside the span of `space`
/// (columns of the ambient space of `target`) with `h(w_l, w_l) = a_l` for
/// the given anisotropic values, or `None` when no such family exists.
/// Represent-and-split: extend `⟨-a_0⟩` by the diagonalized subspace, read
/// a representing vector off an isotropic one, then recurse on the
/// orthogonal complement of the represented line.
pub(crate) fn aniso_match(
    target: &HermitianForm,
    space: &[Vec<DElem>],
    avals: &[DElem],
) -> Result<Option<Vec<Vec<DElem>>>> {
    if avals.len() != space.len() {
        return Ok(None);
    }
    if avals.is_empty() {
        return Ok(Some(Vec::new()));
    }
    let alg = target.algebra();
    let sub = target.restricted(space)?;
    let Some((cols, vals)) = sub.diagonalize()? else {
        return Err(Error::Internal("anisotropic subspace cannot be alternating".into()));
    };
    let lines: Vec<Vec<DElem>> = cols.iter().map(|c| expand(space, c)).collect();
    let a0 = &avals[0];
    let mut ext = vec![-a0];
    ext.extend(vals.iter().cloned());
    let ext_form = diagonal_form(alg, target.rho(), target.epsilon(), &ext)?;
    let Some(iso) = ext_form.isotropic_vector()? else {
        return Ok(None);
    };
    let c0 = &iso[0];
    if c0.try_is_zero()? {
        return Err(Error::Internal("anisotropic summand produced an isotropic vector".into()));
    }
    let c0i = c0.inv()?;
    let mut w = vec![DElem::zero(alg); target.dim()];
    for (line, coord) in lines.iter().zip(&iso[1..]) {
        w = dvec_add(&w, &dvec_scale_right(line, &(coord * &c0i)));
    }
    if !target.eval(&w, &w)?.try_eq(a0)? {
        return Err(Error::Internal("represented vector misses its value".into()));
    }
    if avals.len() == 1 {
        return Ok(Some(vec![w]));
    }
    // Orthogonal complement of w inside the span, then recurse.
    let a0i = a0.inv()?;
    let mut proj = Vec::with_capacity(lines.len());
    for line in &lines {
        let c = &a0i * &target.eval(&w, line)?;
        proj.push(dvec_sub(line, &dvec_scale_right(&w, &c)));
    }
    let reduced = Lattice::from_columns(alg, target.dim(), &proj)?;
    if reduced.rank() + 1 != space.len() {
        return Err(Error::Internal("represented line has a complement of wrong rank".into()));
    }
    let Some(rest) = aniso_match(target, reduced.basis_cols(), &avals[1..])? else {
        return Ok(None);
    };
    let mut out = vec![w];
    out.extend(rest);
    Ok(Some(out))
}

/// The diagonal form with the given ε-symmetric values.
pub fn diagonal_form(
    alg: &DivisionAlgebra,
    rho: &Involution,
    epsilon: i64,
    values: &[DElem],
) -> Result<HermitianForm> {
    let n = values.len();
    let gram = DMat::from_fn(alg, n, n, |i, j| {
        if i == j { values[i].clone() } else { DElem::zero(alg) }
    });
    HermitianForm::new(alg, rho, epsilon, gram)
}

/// Gram matrix of `r` hyperbolic pairs plus a diagonal kernel, in the
/// ordering `v_1, w_1, …, v_r, w_r, u_1, …`.
pub fn hyperbolic_gram(
    alg: &DivisionAlgebra,
    epsilon: i64,
    pairs: usize,
    kernel_values: &[DElem],
) -> DMat {
    let n = 2 * pairs + kernel_values.len();
    DMat::from_fn(alg, n, n, |i, j| {
        if i < 2 * pairs || j < 2 * pairs {
            if i / 2 == j / 2 && i + 1 == j {
                DElem::one(alg)
            } else if i / 2 == j / 2 && j + 1 == i {
                let one = DElem::one(alg);
                if epsilon == -1 {
                    -&one
                } else {
                    one
                }
            } else {
                DElem::zero(alg)
            }
        } else if i == j {
            kernel_values[i - 2 * pairs].clone()
        } else {
            DElem::zero(alg)
        }
    })
}

/// A random nondegenerate form `A + ε·A^*` of the given dimension.
pub fn random_form<R: Rng>(
    alg: &DivisionAlgebra,
    rho: &Involution,
    epsilon: i64,
    m: usize,
    rng: &mut R,
) -> Result<HermitianForm> {
    if alg.d() == 1 && rho.theta().is_identity() && epsilon == -1 && m % 2 == 1 {
        return Err(Error::BadParameter("odd-dimensional alternating forms are singular".into()));
    }
    for _ in 0..64 {
        let a = random_dmat(alg, rng, m, m, -1, 1);
        let mut star = a.conj_transpose(rho);
        if epsilon == -1 {
            star = star.neg();
        }
        match HermitianForm::new(alg, rho, epsilon, a.add(&star)) {
            Ok(h) => return Ok(h),
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Internal("random symmetrized matrices kept degenerating".into()))
}
