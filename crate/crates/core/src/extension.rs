//! Tamely ramified extensions of a local field, with explicit towers.
//!
//! An extension `E|k` is stored as a two-step tower: the unramified step
//! enlarges the residue field from `κ` to `κ_E`, the ramified step adjoins
//! `π_E` with `π_E^e = ζ·ϖ` for a unit constant `ζ ∈ κ_E` and `e` coprime
//! to the residue characteristic. Since everything has equal
//! characteristic, `E` is itself a Laurent-series field `κ_E((π_E))` and
//! reuses the same element arithmetic as the base.
//!
//! Automorphisms of such a field are pairs (Frobenius power, unit): the map
//! `Σ c_s π^s ↦ Σ c_s^{p^j} u^s π^s`. The module enumerates all
//! automorphisms restricting to a prescribed automorphism of the base,
//! computes traces through the tower, decomposes elements in tower
//! coordinates, and solves unramified norm equations.

use std::fmt;
use std::sync::Arc;

use once_cell::sync::OnceCell;

use crate::arith::{local_field, KElem, LocalField, MIN_DECIDE_DIGITS};
use crate::error::{Error, Result};
use crate::fq::{fq, FqBasisDecomp, FqElem, FqEmbedding};

/// An automorphism of a Laurent-series local field:
/// `Σ c_s π^s ↦ Σ c_s^{p^frob_p} · unit^s · π^s`.
#[derive(Clone)]
pub struct FieldAut {
    frob_p: usize,
    unit: FqElem,
}

impl FieldAut {
    pub fn new(frob_p: usize, unit: FqElem) -> FieldAut {
        assert!(!unit.is_zero(), "automorphism unit must be nonzero");
        let n = unit.field().degree();
        FieldAut { frob_p: frob_p % n, unit }
    }

    pub fn identity(field: &LocalField) -> FieldAut {
        FieldAut { frob_p: 0, unit: FqElem::one(field.residue()) }
    }

    pub fn frob_p(&self) -> usize {
        self.frob_p
    }

    pub fn unit(&self) -> &FqElem {
        &self.unit
    }

    pub fn is_identity(&self) -> bool {
        self.frob_p == 0 && self.unit.is_one()
    }

    pub fn apply(&self, x: &KElem) -> KElem {
        let field = x.field().clone();
        let mut digits = Vec::new();
        let lo = x.min_pow();
        let hi = if x.is_exact() { lo + stored_len(x) } else { x.prec() };
        for s in lo..hi {
            let c = x.coeff(s).expect("tracked digit");
            if c.is_zero() {
                digits.push(c);
            } else {
                digits.push(&c.frobenius(self.frob_p) * &self.unit.pow_signed(s));
            }
        }
        if x.is_exact() {
            KElem::from_digits(&field, lo, &digits)
        } else {
            KElem::from_digits_prec(&field, lo, &digits, x.prec())
        }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &FieldAut) -> FieldAut {
        let n = self.unit.field().degree();
        FieldAut {
            frob_p: (self.frob_p + other.frob_p) % n,
            unit: &other.unit.frobenius(self.frob_p) * &self.unit,
        }
    }

    pub fn inverse(&self) -> FieldAut {
        let n = self.unit.field().degree();
        let frob_inv = (n - self.frob_p) % n;
        let unit_inv = self.unit.frobenius(frob_inv).inv();
        FieldAut { frob_p: frob_inv, unit: unit_inv }
    }

    /// Order as a group element.
    pub fn order(&self) -> u64 {
        let mut cur = self.clone();
        let mut o = 1;
        while !cur.is_identity() {
            cur = cur.compose(self);
            o += 1;
            assert!(o < 10_000, "automorphism order runaway");
        }
        o
    }
}

impl PartialEq for FieldAut {
    fn eq(&self, other: &Self) -> bool {
        self.frob_p == other.frob_p && self.unit == other.unit
    }
}

impl Eq for FieldAut {}

impl fmt::Debug for FieldAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(frob^{}, u={})", self.frob_p, self.unit.index())
    }
}

fn stored_len(x: &KElem) -> i64 {
    // Number of digit slots that carry information for exact elements.
    let mut hi = x.min_pow();
    let mut s = x.min_pow();
    loop {
        match x.coeff(s) {
            Ok(c) => {
                if !c.is_zero() {
                    hi = s + 1;
                }
            }
            Err(_) => break,
        }
        s += 1;
        if s - x.min_pow() > 4096 {
            break;
        }
    }
    hi - x.min_pow()
}

/// Immutable data of a tame extension `E|k`.
pub struct FieldExtensionData {
    base: LocalField,
    field: LocalField,
    e: u64,
    f: usize,
    zeta: FqElem,
    res_embed: FqEmbedding,
    tower: OnceCell<FqBasisDecomp>,
}

pub type FieldExtension = Arc<FieldExtensionData>;

/// Builds the tame extension of `base` with ramification `e`, residue degree
/// `f`, and uniformizer relation `π_E^e = ζ·ϖ` where `ζ` is the residue
/// generator raised to `zeta_dlog`.
pub fn field_extension(
    base: &LocalField,
    e: u64,
    f: usize,
    zeta_dlog: u64,
    label: &str,
) -> Result<FieldExtension> {
    let p = base.residue().p();
    if e == 0 || f == 0 {
        return Err(Error::BadParameter("extension degrees must be positive".into()));
    }
    if e % p == 0 {
        return Err(Error::WildRamification { e, p });
    }
    let kappa_e = fq(p, base.residue().degree() * f)?;
    let prec_e = base
        .prec()
        .checked_mul(e as i64)
        .ok_or_else(|| Error::BadParameter("precision overflow".into()))?;
    let field = local_field(&kappa_e, prec_e, label)?;
    let res_embed = FqEmbedding::new(base.residue(), &kappa_e)?;
    let zeta = FqElem::from_dlog(&kappa_e, zeta_dlog);
    Ok(Arc::new(FieldExtensionData {
        base: base.clone(),
        field,
        e,
        f,
        zeta,
        res_embed,
        tower: OnceCell::new(),
    }))
}

impl FieldExtensionData {
    pub fn base(&self) -> &LocalField {
        &self.base
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn degree(&self) -> u64 {
        self.e * self.f as u64
    }

    pub fn zeta(&self) -> &FqElem {
        &self.zeta
    }

    pub fn res_embed(&self) -> &FqEmbedding {
        &self.res_embed
    }

    pub fn uniformizer(&self) -> KElem {
        KElem::uniformizer_pow(&self.field, 1)
    }

    /// The image of the base uniformizer: `ϖ = ζ^{-1} π_E^e`.
    pub fn base_uniformizer_image(&self) -> KElem {
        KElem::from_residue(&self.field, &self.zeta.inv()).shifted(self.e as i64)
    }

    /// Embeds a base-field element into `E`, digit by digit.
    pub fn embed(&self, x: &KElem) -> KElem {
        embed_series(x, &self.res_embed, &self.zeta, self.e, &self.field)
    }

    /// Canonical residue generator `γ` of `κ_E`.
    pub fn residue_generator(&self) -> FqElem {
        FqElem::generator(self.field.residue())
    }

    fn tower_decomp(&self) -> &FqBasisDecomp {
        self.tower.get_or_init(|| {
            let gamma = self.residue_generator();
            let mut basis = Vec::with_capacity(self.f);
            let mut cur = FqElem::one(self.field.residue());
            for _ in 0..self.f {
                basis.push(cur.clone());
                cur = &cur * &gamma;
            }
            FqBasisDecomp::new(&self.res_embed, &basis).expect("powers of the generator form a basis")
        })
    }

    /// Tower coordinates: writes `x = Σ_{i<e, j<f} embed(a_ij) γ^j π_E^i`
    /// with `a_ij` in the base field. Returned as an `e × f` matrix.
    pub fn tower_coords(&self, x: &KElem) -> Vec<Vec<KElem>> {
        let e = self.e as i64;
        let dec = self.tower_decomp();
        // Collect, for each digit exponent s = i + e*m of x, the κ_E digit
        // c_s ζ^m as the ϖ^m digit of the (i, j) slots.
        let lo = x.min_pow();
        let hi = if x.is_exact() { lo + stored_len(x) } else { x.prec() };
        // Base-field digit windows per residue class i.
        let mut rows: Vec<Vec<Vec<(i64, FqElem)>>> = vec![vec![Vec::new(); self.f]; self.e as usize];
        for s in lo..hi {
            let c = x.coeff(s).expect("tracked digit");
            if c.is_zero() {
                continue;
            }
            let i = s.rem_euclid(e);
            let m = (s - i) / e;
            let adj = &c * &self.zeta.pow_signed(m);
            for (j, aj) in dec.decompose(&adj).into_iter().enumerate() {
                if !aj.is_zero() {
                    rows[i as usize][j].push((m, aj));
                }
            }
        }
        let mut out = Vec::with_capacity(self.e as usize);
        for (i, row) in rows.into_iter().enumerate() {
            let mut orow = Vec::with_capacity(self.f);
            for digits in row {
                let elem = if digits.is_empty() {
                    KElem::zero(&self.base)
                } else {
                    let mlo = digits.iter().map(|(m, _)| *m).min().unwrap();
                    let mhi = digits.iter().map(|(m, _)| *m).max().unwrap();
                    let zero = FqElem::zero(self.base.residue());
                    let mut ds = vec![zero; (mhi - mlo + 1) as usize];
                    for (m, c) in digits {
                        ds[(m - mlo) as usize] = c;
                    }
                    KElem::from_digits(&self.base, mlo, &ds)
                };
                let elem = if x.is_exact() {
                    elem
                } else {
                    // Digits of slot i are known for i + e*m < prec(x).
                    let bound = div_floor_i64(x.prec() - 1 - i as i64, e) + 1;
                    elem.truncated(bound)
                };
                orow.push(elem);
            }
            out.push(orow);
        }
        out
    }

    /// Inverse of [`Self::tower_coords`].
    pub fn from_tower_coords(&self, coords: &[Vec<KElem>]) -> KElem {
        let gamma = self.residue_generator();
        let mut acc = KElem::zero(&self.field);
        for (i, row) in coords.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                if a.try_is_zero().unwrap_or(false) {
                    // Exactly-zero slots contribute nothing but must not
                    // silently drop precision; handled below via min().
                }
                let lift = self.embed(a);
                let basis = KElem::from_residue(&self.field, &gamma.pow(j as u64)).shifted(i as i64);
                acc = &acc + &(&lift * &basis);
            }
        }
        acc
    }

    /// All automorphisms of `E` restricting to `rho` on the base.
    pub fn automorphisms_over(&self, rho: &FieldAut) -> Vec<FieldAut> {
        let kappa = self.base.residue();
        let kappa_e = self.field.residue();
        let n_base = kappa.degree();
        let n_big = kappa_e.degree();
        let big_order = kappa_e.mult_order();
        let mut out = Vec::new();
        // rho(ϖ) = u0·ϖ with digits twisted by p^{j0}.
        let u0 = self.res_embed.map(rho.unit());
        let zeta_dlog = self.zeta.dlog();
        let u0_dlog = u0.dlog();
        for jj in 0..(n_big / n_base.max(1)) {
            let j = rho.frob_p() + jj * n_base; // absolute p-power, ≡ j0 mod n_base
            // Required: u^e = embed(u0) · ζ^{p^j - 1}.
            let pj = pow_mod_u64(kappa.p(), j as u64, big_order);
            let target = (zeta_dlog as u128 * ((pj + big_order - 1) % big_order) as u128
                + u0_dlog as u128)
                % big_order as u128;
            let target = target as u64;
            let g = gcd_u64(self.e % big_order, big_order).max(1);
            if target % g != 0 {
                continue;
            }
            let b0 = crate::arith::solve_linear_congruence(self.e % big_order, target, big_order)
                .expect("divisibility checked");
            let step = big_order / g;
            for t in 0..g {
                let b = (b0 + t * step) % big_order;
                out.push(FieldAut::new(j, FqElem::from_dlog(kappa_e, b)));
            }
        }
        out.sort_by_key(|a| (a.frob_p, a.unit.index()));
        out
    }

    /// The automorphism group of `E|k`.
    pub fn automorphisms(&self) -> Vec<FieldAut> {
        self.automorphisms_over(&FieldAut::identity(&self.base))
    }

    /// Trace to the base field, through the tower: the ramified step keeps
    /// exponents divisible by `e` (scaled by `e`), the unramified step takes
    /// residue traces digit by digit.
    pub fn trace_to_base(&self, x: &KElem) -> KElem {
        let e = self.e as i64;
        let q = self.base.residue().order();
        let kappa_e = self.field.residue();
        let e_scalar = FqElem::from_u64(self.base.residue(), self.e);
        let lo = x.min_pow();
        let hi = if x.is_exact() { lo + stored_len(x) } else { x.prec() };
        let mut digits: Vec<(i64, FqElem)> = Vec::new();
        for s in lo..hi {
            if s.rem_euclid(e) != 0 {
                continue;
            }
            let c = x.coeff(s).expect("tracked digit");
            let m = s / e;
            if c.is_zero() {
                continue;
            }
            // Residue trace of c ζ^m, then scale by e.
            let z = &c * &self.zeta.pow_signed(m);
            let mut tr = FqElem::zero(kappa_e);
            let mut conj = z.clone();
            for _ in 0..self.f {
                tr = &tr + &conj;
                conj = conj.pow(q);
            }
            let tr_small = self
                .res_embed
                .preimage(&tr)
                .expect("residue trace lands in the base residue field");
            let d = &tr_small * &e_scalar;
            if !d.is_zero() {
                digits.push((m, d));
            }
        }
        let elem = if digits.is_empty() {
            KElem::zero(&self.base)
        } else {
            let mlo = digits.iter().map(|(m, _)| *m).min().unwrap();
            let mhi = digits.iter().map(|(m, _)| *m).max().unwrap();
            let zero = FqElem::zero(self.base.residue());
            let mut ds = vec![zero; (mhi - mlo + 1) as usize];
            for (m, c) in digits {
                ds[(m - mlo) as usize] = c;
            }
            KElem::from_digits(&self.base, mlo, &ds)
        };
        if x.is_exact() {
            elem
        } else {
            elem.truncated(div_floor_i64(x.prec() - 1, e) + 1)
        }
    }

    /// Norm to the base field; only for unramified extensions, where the
    /// extension is Galois over the base with cyclic Frobenius group.
    pub fn norm_to_base(&self, x: &KElem) -> Result<KElem> {
        if self.e != 1 {
            return Err(Error::BadParameter("norm_to_base requires an unramified extension".into()));
        }
        let n_base = self.base.residue().degree();
        let mut prod = KElem::one(&self.field);
        for j in 0..self.f {
            let aut = FieldAut::new(j * n_base, FqElem::one(self.field.residue()));
            prod = &prod * &aut.apply(x);
        }
        self.descend(&prod)
    }

    /// Reinterprets an element of `E` whose digits all lie in the embedded
    /// base residue field as a base-field element. Only for `e = 1`.
    pub fn descend(&self, x: &KElem) -> Result<KElem> {
        if self.e != 1 {
            return Err(Error::BadParameter("descend requires an unramified extension".into()));
        }
        let lo = x.min_pow();
        let hi = if x.is_exact() { lo + stored_len(x) } else { x.prec() };
        let mut digits = Vec::new();
        for s in lo..hi {
            let c = x.coeff(s).expect("tracked digit");
            let small = self
                .res_embed
                .preimage(&c)
                .ok_or_else(|| Error::NotContained("digit outside the base residue field".into()))?;
            digits.push(small);
        }
        Ok(if x.is_exact() {
            KElem::from_digits(&self.base, lo, &digits)
        } else {
            KElem::from_digits_prec(&self.base, lo, &digits, x.prec())
        })
    }

    /// Solves the unramified norm equation `Nm(b) = target` for a unit
    /// target: Teichmüller part by discrete log, one-unit part by digitwise
    /// Hensel corrections through the (surjective) trace.
    pub fn solve_norm(&self, target: &KElem) -> Result<KElem> {
        if self.e != 1 {
            return Err(Error::BadParameter("solve_norm requires an unramified extension".into()));
        }
        let (v, c) = target.leading()?;
        if v != 0 {
            return Err(Error::BadParameter(format!(
                "solve_norm expects a unit target, got valuation {v}"
            )));
        }
        let kappa = self.base.residue();
        let kappa_e = self.field.residue();
        let q1 = kappa.mult_order();
        let big1 = kappa_e.mult_order();
        // Residue norm is z ↦ z^{(Q-1)/(q-1)}; solve by discrete log.
        let exp = big1 / q1;
        let a = self.res_embed.map(&c).dlog();
        // Need exp * b ≡ a mod (Q-1).
        let b = crate::arith::solve_linear_congruence(exp % big1, a, big1)
            .ok_or_else(|| Error::NoSuchRoots("unit is not a residue norm".into()))?;
        let mut bb = KElem::from_residue(&self.field, &FqElem::from_dlog(kappa_e, b));

        // Precompute a residue element with nonzero trace for corrections.
        let q = kappa.order();
        let mut tr_unit = None;
        let gamma = FqElem::generator(kappa_e);
        let mut cand = FqElem::one(kappa_e);
        for _ in 0..kappa_e.degree() + 1 {
            let mut tr = FqElem::zero(kappa_e);
            let mut conj = cand.clone();
            for _ in 0..self.f {
                tr = &tr + &conj;
                conj = conj.pow(q);
            }
            if !tr.is_zero() {
                tr_unit = Some((cand.clone(), self.res_embed.preimage(&tr).expect("trace in base")));
                break;
            }
            cand = &cand * &gamma;
        }
        let (tr_cand, tr_val) = tr_unit.ok_or_else(|| Error::Internal("trace identically zero".into()))?;

        let rel = if target.is_exact() { self.base.prec() } else { target.prec().min(self.base.prec()) };
        if rel < MIN_DECIDE_DIGITS {
            return Err(Error::PrecisionExhausted { remaining: rel });
        }
        for _ in 0..rel + 2 {
            let nb = self.norm_to_base(&bb)?;
            let defect = &(target * &nb.inv()?) - &KElem::one(&self.base);
            match defect.try_is_zero() {
                Ok(true) => break,
                Ok(false) => {}
                Err(_) => break, // out of digits: as converged as precision allows
            }
            let j = defect.valuation()?;
            if j >= rel {
                break;
            }
            let digit = defect.coeff(j)?;
            // Want Nm(b(1+y)) ≈ Nm(b)(1 + Tr(y)): choose y = c0·π^j with
            // residue trace equal to the defect digit.
            let c0 = &tr_cand * &self.res_embed.map(&(&digit * &tr_val.inv()));
            let y = KElem::from_residue(&self.field, &c0).shifted(j);
            bb = &bb * &(&KElem::one(&self.field) + &y);
            bb = bb.truncated(rel);
        }
        Ok(bb)
    }

    /// Valuation normalized to the base: `ν_k = ν_E / e` (as a pair).
    pub fn val_over_base(&self, x: &KElem) -> Result<(i64, u64)> {
        Ok((x.valuation()?, self.e))
    }
}

impl fmt::Debug for FieldExtensionData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} | {} (e={}, f={}, zeta={})",
            self.field,
            self.base,
            self.e,
            self.f,
            self.zeta.index()
        )
    }
}

/// Embeds a series digitwise: digits through `dig`, `ϖ ↦ ζ^{-1} π^e`.
pub(crate) fn embed_series(
    x: &KElem,
    dig: &FqEmbedding,
    zeta: &FqElem,
    e: u64,
    target: &LocalField,
) -> KElem {
    let e = e as i64;
    let lo = x.min_pow();
    let hi = if x.is_exact() { lo + stored_len(x) } else { x.prec() };
    let mut acc = KElem::zero(target);
    for s in lo..hi {
        let c = x.coeff(s).expect("tracked digit");
        if c.is_zero() {
            continue;
        }
        let digit = &dig.map(&c) * &zeta.pow_signed(-s);
        acc = &acc + &KElem::from_residue(target, &digit).shifted(e * s);
    }
    if x.is_exact() {
        acc
    } else {
        acc.truncated(e * x.prec())
    }
}

fn div_floor_i64(a: i64, b: i64) -> i64 {
    num_integer::Integer::div_floor(&a, &b)
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    num_integer::Integer::gcd(&a, &b)
}

fn pow_mod_u64(base: u64, mut e: u64, m: u64) -> u64 {
    let mut b = base as u128 % m as u128;
    let mut acc = 1u128;
    let m = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc as u64
}
