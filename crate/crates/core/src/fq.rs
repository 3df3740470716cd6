//! Finite fields of odd characteristic with canonical, reproducible moduli.
//!
//! `F_{p^n}` is realized as `F_p[x]/(m)` where `m` is the first monic
//! degree-`n` polynomial — coefficients enumerated as the base-`p` digits of
//! 0, 1, 2, … — whose class of `x` generates the multiplicative group.
//! Requesting the same field twice therefore yields the same modulus, the
//! same canonical generator, and the same discrete-log indexing, which keeps
//! serialized instances stable across runs and platforms.
//!
//! The module also provides the two workhorses everything downstream leans
//! on: subfield embeddings with canonical images (used to build residue
//! towers), and dense linear algebra over an arbitrary `F_q` (used for
//! graded pieces of lattice chains and residue solves).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Immutable data of a finite field `F_{p^n}`.
#[derive(Debug)]
pub struct FqData {
    p: u64,
    n: usize,
    /// Monic modulus; coefficients of `x^0 .. x^n`, last entry 1.
    modulus: Vec<u8>,
    /// `p^n`.
    order: u64,
    /// Factorization of `p^n - 1` as (prime, multiplicity) pairs.
    unit_factors: Vec<(u64, u32)>,
}

/// Shared handle to an interned field.
pub type Fq = Arc<FqData>;

static REGISTRY: Lazy<Mutex<HashMap<(u64, usize), Fq>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Returns the interned field `F_{p^n}`.
///
/// `p` must be an odd prime below 256 and `p^n` must stay below `2^50`; that
/// range keeps discrete logarithms and factoring of the unit-group order
/// exact in `u64` arithmetic.
pub fn fq(p: u64, n: usize) -> Result<Fq> {
    if p == 2 {
        return Err(Error::EvenResidueChar(2));
    }
    if !is_prime_u64(p) {
        return Err(Error::BadParameter(format!("{p} is not prime")));
    }
    if p > 255 {
        return Err(Error::BadParameter(format!(
            "residue characteristic {p} exceeds the supported range"
        )));
    }
    if n == 0 {
        return Err(Error::BadParameter("extension degree must be positive".into()));
    }
    let order = (n as u32)
        .try_into()
        .ok()
        .and_then(|e: u32| p.checked_pow(e))
        .filter(|&q| q < (1u64 << 50))
        .ok_or_else(|| Error::BadParameter(format!("field order p^{n} is too large")))?;

    let mut reg = REGISTRY.lock().unwrap();
    if let Some(f) = reg.get(&(p, n)) {
        return Ok(f.clone());
    }
    let modulus = find_canonical_modulus(p, n, order);
    let unit_factors = factor_u64(order - 1);
    let field = Arc::new(FqData { p, n, modulus, order, unit_factors });
    reg.insert((p, n), field.clone());
    Ok(field)
}

impl FqData {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// Number of elements `p^n`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Order of the multiplicative group, `p^n - 1`.
    pub fn mult_order(&self) -> u64 {
        self.order - 1
    }

    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }

    /// Factorization of `p^n - 1`.
    pub fn unit_factors(&self) -> &[(u64, u32)] {
        &self.unit_factors
    }
}

impl fmt::Display for FqData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 1 {
            write!(f, "F_{}", self.p)
        } else {
            write!(f, "F_{}^{}", self.p, self.n)
        }
    }
}

fn same_field(a: &FqData, b: &FqData) -> bool {
    a.p == b.p && a.n == b.n
}

/// An element of a finite field, stored as `n` coefficients over `F_p`.
#[derive(Clone)]
pub struct FqElem {
    field: Fq,
    /// Coefficients of `1, x, .., x^{n-1}`; always exactly `n` entries.
    c: Vec<u8>,
}

impl PartialEq for FqElem {
    fn eq(&self, other: &Self) -> bool {
        same_field(&self.field, &other.field) && self.c == other.c
    }
}

impl Eq for FqElem {}

impl std::hash::Hash for FqElem {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.field.p.hash(state);
        self.field.n.hash(state);
        self.c.hash(state);
    }
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.index(), self.field)
    }
}

impl fmt::Display for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl FqElem {
    pub fn field(&self) -> &Fq {
        &self.field
    }

    pub fn zero(field: &Fq) -> FqElem {
        FqElem { field: field.clone(), c: vec![0; field.n] }
    }

    pub fn one(field: &Fq) -> FqElem {
        FqElem::from_u64(field, 1)
    }

    /// The image of the integer `v` in the prime subfield.
    pub fn from_u64(field: &Fq, v: u64) -> FqElem {
        let mut c = vec![0u8; field.n];
        c[0] = (v % field.p) as u8;
        FqElem { field: field.clone(), c }
    }

    /// Builds an element from coefficients of `1, x, .., x^{n-1}` (reduced
    /// mod `p`; shorter vectors are zero-padded).
    pub fn from_coeffs(field: &Fq, coeffs: &[u64]) -> FqElem {
        assert!(coeffs.len() <= field.n, "coefficient vector longer than field degree");
        let mut c = vec![0u8; field.n];
        for (i, &v) in coeffs.iter().enumerate() {
            c[i] = (v % field.p) as u8;
        }
        FqElem { field: field.clone(), c }
    }

    /// Packs the coefficient vector into the base-`p` integer
    /// `sum c_i p^i`; the inverse of [`FqElem::from_index`].
    pub fn index(&self) -> u64 {
        let mut v = 0u64;
        for &ci in self.c.iter().rev() {
            v = v * self.field.p + ci as u64;
        }
        v
    }

    /// Unpacks a base-`p` digit vector; the inverse of [`FqElem::index`].
    pub fn from_index(field: &Fq, mut idx: u64) -> FqElem {
        let mut c = vec![0u8; field.n];
        for slot in c.iter_mut() {
            *slot = (idx % field.p) as u8;
            idx /= field.p;
        }
        assert_eq!(idx, 0, "index out of range for {}", field);
        FqElem { field: field.clone(), c }
    }

    /// The canonical generator of the multiplicative group: the class of
    /// `x`, reduced mod the modulus.
    pub fn generator(field: &Fq) -> FqElem {
        let xi = poly_rem(&[0, 1], &field.modulus, field.p);
        let mut c = vec![0u8; field.n];
        c[..xi.len()].copy_from_slice(&xi);
        FqElem { field: field.clone(), c }
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn is_one(&self) -> bool {
        self.c[0] == 1 && self.c[1..].iter().all(|&x| x == 0)
    }

    pub fn pow(&self, mut e: u64) -> FqElem {
        let mut base = self.clone();
        let mut acc = FqElem::one(&self.field);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn pow_signed(&self, e: i64) -> FqElem {
        if e >= 0 {
            self.pow(e as u64)
        } else {
            self.inv().pow(e.unsigned_abs())
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> FqElem {
        assert!(!self.is_zero(), "inverse of zero in {}", self.field);
        self.pow(self.field.order - 2)
    }

    /// `p^j`-power Frobenius. The exponent is reduced modulo the unit-group
    /// order so large `j` stay exact.
    pub fn frobenius(&self, j: usize) -> FqElem {
        if self.is_zero() {
            return self.clone();
        }
        let m = self.field.mult_order();
        let mut e = 1u64;
        for _ in 0..j {
            e = ((e as u128 * self.field.p as u128) % m as u128) as u64;
        }
        self.pow(e)
    }

    /// Discrete log with respect to the canonical generator; panics on zero.
    pub fn dlog(&self) -> u64 {
        assert!(!self.is_zero(), "discrete log of zero in {}", self.field);
        let g = FqElem::generator(&self.field);
        dlog_with_factors(&g, self, self.field.mult_order(), &self.field.unit_factors)
            .expect("canonical generator is primitive")
    }

    /// `generator^idx`.
    pub fn from_dlog(field: &Fq, idx: u64) -> FqElem {
        FqElem::generator(field).pow(idx % field.mult_order())
    }

    /// Multiplicative order; panics on zero.
    pub fn order(&self) -> u64 {
        assert!(!self.is_zero(), "order of zero in {}", self.field);
        let mut o = self.field.mult_order();
        for &(l, _) in &self.field.unit_factors {
            while o % l == 0 && self.pow(o / l).is_one() {
                o /= l;
            }
        }
        o
    }

    pub fn is_square(&self) -> bool {
        self.is_zero() || self.pow(self.field.mult_order() / 2).is_one()
    }

    /// A square root if one exists, chosen canonically as
    /// `generator^(dlog/2)` (so results are reproducible).
    pub fn sqrt(&self) -> Option<FqElem> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let k = self.dlog();
        if k % 2 != 0 {
            return None;
        }
        Some(FqElem::from_dlog(&self.field, k / 2))
    }
}

impl std::ops::Add for &FqElem {
    type Output = FqElem;
    fn add(self, rhs: &FqElem) -> FqElem {
        debug_assert!(same_field(&self.field, &rhs.field), "field mismatch in add");
        let p = self.field.p;
        let c = self
            .c
            .iter()
            .zip(&rhs.c)
            .map(|(&a, &b)| ((a as u64 + b as u64) % p) as u8)
            .collect();
        FqElem { field: self.field.clone(), c }
    }
}

impl std::ops::Sub for &FqElem {
    type Output = FqElem;
    fn sub(self, rhs: &FqElem) -> FqElem {
        debug_assert!(same_field(&self.field, &rhs.field), "field mismatch in sub");
        let p = self.field.p;
        let c = self
            .c
            .iter()
            .zip(&rhs.c)
            .map(|(&a, &b)| ((a as u64 + p - b as u64) % p) as u8)
            .collect();
        FqElem { field: self.field.clone(), c }
    }
}

impl std::ops::Neg for &FqElem {
    type Output = FqElem;
    fn neg(self) -> FqElem {
        let p = self.field.p;
        let c = self.c.iter().map(|&a| ((p - a as u64) % p) as u8).collect();
        FqElem { field: self.field.clone(), c }
    }
}

impl std::ops::Mul for &FqElem {
    type Output = FqElem;
    fn mul(self, rhs: &FqElem) -> FqElem {
        debug_assert!(same_field(&self.field, &rhs.field), "field mismatch in mul");
        let p = self.field.p;
        let n = self.field.n;
        let mut prod = vec![0u64; 2 * n - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.c.iter().enumerate() {
                prod[i + j] += a as u64 * b as u64;
            }
        }
        // Reduce modulo the monic modulus, highest degree first.
        for i in (n..prod.len()).rev() {
            let c = prod[i] % p;
            prod[i] = 0;
            if c != 0 {
                for j in 0..n {
                    let m = self.field.modulus[j] as u64;
                    if m != 0 {
                        // add c * (p - m) ≡ -c*m  (keeps everything nonnegative)
                        prod[i - n + j] += c * (p - m);
                    }
                }
            }
        }
        let c = prod[..n].iter().map(|&v| (v % p) as u8).collect();
        FqElem { field: self.field.clone(), c }
    }
}

/// Iterates all elements of a field in index order. Only sensible for small
/// fields; callers enumerate residues of bounded size.
pub fn fq_elements(field: &Fq) -> impl Iterator<Item = FqElem> {
    let f = field.clone();
    (0..f.order()).map(move |i| FqElem::from_index(&f, i))
}

// ---------------------------------------------------------------------------
// Discrete logarithms (Pohlig–Hellman over baby-step/giant-step)
// ---------------------------------------------------------------------------

/// Baby-step giant-step in the cyclic group generated by `base` of order
/// dividing `order`. Returns `k` with `base^k = target`.
fn bsgs(base: &FqElem, target: &FqElem, order: u64) -> Option<u64> {
    let m = (order as f64).sqrt().ceil() as u64 + 1;
    let mut table: HashMap<Vec<u8>, u64> = HashMap::with_capacity(m as usize);
    let mut cur = FqElem::one(base.field());
    for j in 0..m {
        table.entry(cur.c.clone()).or_insert(j);
        cur = &cur * base;
    }
    let giant = base.pow(m).inv();
    let mut cur = target.clone();
    let mut i = 0u64;
    while i * m <= order {
        if let Some(&j) = table.get(&cur.c) {
            return Some((i * m + j) % order.max(1));
        }
        cur = &cur * &giant;
        i += 1;
    }
    None
}

/// Discrete log in the subgroup generated by `base` of order `l^v`.
fn dlog_prime_power(base: &FqElem, target: &FqElem, l: u64, v: u32) -> Option<u64> {
    let mut x = 0u64;
    let gamma = base.pow(l.pow(v - 1));
    for j in 0..v {
        let h = (target * &base.pow_signed(-(x as i64))).pow(l.pow(v - 1 - j));
        let d = bsgs(&gamma, &h, l)?;
        x += d * l.pow(j);
    }
    Some(x)
}

/// Discrete log of `target` with respect to `base`, where `base` has order
/// exactly `order` with the given factorization.
pub fn dlog_with_factors(
    base: &FqElem,
    target: &FqElem,
    order: u64,
    factors: &[(u64, u32)],
) -> Option<u64> {
    if target.is_zero() {
        return None;
    }
    if order == 1 {
        return target.is_one().then_some(0);
    }
    let mut residue: i128 = 0;
    let mut modulus: i128 = 1;
    for &(l, v) in factors {
        let pe = l.pow(v);
        let co = order / pe;
        let b = base.pow(co);
        let t = target.pow(co);
        let xi = dlog_prime_power(&b, &t, l, v)? as i128;
        // CRT-combine x ≡ residue (mod modulus), x ≡ xi (mod pe).
        let pe = pe as i128;
        let g = modulus.extended_gcd(&pe);
        debug_assert_eq!(g.gcd, 1);
        let mut t0 = ((xi - residue) / 1) % pe;
        t0 = (t0 * g.x).rem_euclid(pe);
        residue += modulus * t0;
        modulus *= pe;
        residue = residue.rem_euclid(modulus);
    }
    let x = residue as u64 % order;
    (&base.pow(x) == target).then_some(x)
}

/// Discrete log of `target` with respect to `base` of multiplicative order
/// `order` (factored on the fly).
pub fn dlog_in(base: &FqElem, target: &FqElem, order: u64) -> Option<u64> {
    dlog_with_factors(base, target, order, &factor_u64(order))
}

// ---------------------------------------------------------------------------
// Subfield embeddings
// ---------------------------------------------------------------------------

/// An embedding `F_{p^s} -> F_{p^{st}}` with a canonical image: the class of
/// `x` in the small field maps to the lexicographically smallest root of the
/// small modulus inside the big field.
#[derive(Clone, Debug)]
pub struct FqEmbedding {
    small: Fq,
    big: Fq,
    /// Images of `1, x, .., x^{s-1}`.
    images: Vec<FqElem>,
    /// Left inverse of the coefficient matrix, over `F_p`; used by
    /// [`FqEmbedding::preimage`].
    left_inv: Vec<Vec<u8>>,
}

impl FqEmbedding {
    pub fn new(small: &Fq, big: &Fq) -> Result<FqEmbedding> {
        if small.p != big.p {
            return Err(Error::BadParameter(format!(
                "cannot embed {} into {}: different characteristic",
                small, big
            )));
        }
        if big.n % small.n != 0 {
            return Err(Error::BadParameter(format!(
                "cannot embed {} into {}: degree does not divide",
                small, big
            )));
        }
        let root = if small.n == big.n {
            FqElem::generator(big)
        } else {
            canonical_root_in(small, big)?
        };
        let mut images = Vec::with_capacity(small.n);
        let mut cur = FqElem::one(big);
        for _ in 0..small.n {
            images.push(cur.clone());
            cur = &cur * &root;
        }
        let left_inv = fp_left_inverse(big.p, big.n, &images)
            .ok_or_else(|| Error::Internal("embedding images are dependent".into()))?;
        Ok(FqEmbedding { small: small.clone(), big: big.clone(), images, left_inv })
    }

    /// The identity embedding of a field into itself.
    pub fn identity(field: &Fq) -> FqEmbedding {
        FqEmbedding::new(field, field).expect("identity embedding")
    }

    pub fn small(&self) -> &Fq {
        &self.small
    }

    pub fn big(&self) -> &Fq {
        &self.big
    }

    pub fn map(&self, a: &FqElem) -> FqElem {
        debug_assert!(same_field(a.field(), &self.small), "embedding source mismatch");
        let mut acc = FqElem::zero(&self.big);
        for (i, img) in self.images.iter().enumerate() {
            if a.c[i] != 0 {
                let s = FqElem::from_u64(&self.big, a.c[i] as u64);
                acc = &acc + &(&s * img);
            }
        }
        acc
    }

    /// Composes `inner: A -> B` with `outer: B -> C` into `A -> C`.
    pub fn compose(inner: &FqEmbedding, outer: &FqEmbedding) -> Result<FqEmbedding> {
        if !same_field(&inner.big, &outer.small) {
            return Err(Error::BadParameter("embedding composition mismatch".into()));
        }
        let images: Vec<FqElem> = inner.images.iter().map(|im| outer.map(im)).collect();
        let left_inv = fp_left_inverse(outer.big.p, outer.big.n, &images)
            .ok_or_else(|| Error::Internal("composed embedding degenerate".into()))?;
        Ok(FqEmbedding { small: inner.small.clone(), big: outer.big.clone(), images, left_inv })
    }

    /// Pulls `b` back along the embedding if it lies in the image.
    pub fn preimage(&self, b: &FqElem) -> Option<FqElem> {
        debug_assert!(same_field(b.field(), &self.big), "embedding target mismatch");
        let p = self.big.p;
        let mut c = vec![0u8; self.small.n];
        for (i, row) in self.left_inv.iter().enumerate() {
            let mut acc = 0u64;
            for (j, &rj) in row.iter().enumerate() {
                acc += rj as u64 * b.c[j] as u64;
            }
            c[i] = (acc % p) as u8;
        }
        let candidate = FqElem { field: self.small.clone(), c };
        (self.map(&candidate) == *b).then_some(candidate)
    }
}

/// The lexicographically smallest root, in the big field, of the small
/// field's modulus.
fn canonical_root_in(small: &Fq, big: &Fq) -> Result<FqElem> {
    let lifted: Vec<FqElem> = small
        .modulus
        .iter()
        .map(|&c| FqElem::from_u64(big, c as u64))
        .collect();
    let any_root = poly::find_root_splitting(&lifted, big)?;
    // All roots are Frobenius conjugates; pick the lexicographically
    // smallest coefficient vector so the choice is representation-canonical.
    let mut best = any_root.clone();
    let mut cur = any_root;
    for _ in 1..small.n {
        cur = cur.frobenius(1);
        if cur.c < best.c {
            best = cur.clone();
        }
    }
    Ok(best)
}

/// Left inverse over `F_p` of the n×s coefficient matrix whose columns are
/// `images`; `None` if the columns are dependent.
fn fp_left_inverse(p: u64, n: usize, images: &[FqElem]) -> Option<Vec<Vec<u8>>> {
    let s = images.len();
    // Rows of the augmented system [M^T-style]: we row-reduce [M | I_n] and
    // read off, for each pivot, the combination producing the unit vector.
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(n);
    for r in 0..n {
        let mut row = vec![0u8; s + n];
        for (cidx, img) in images.iter().enumerate() {
            row[cidx] = img.c[r];
        }
        row[s + r] = 1;
        rows.push(row);
    }
    fp_rref(&mut rows, p);
    // After reduction the first s columns must contain the identity in the
    // top s rows (full column rank).
    let mut left = vec![vec![0u8; n]; s];
    for i in 0..s {
        // Row i must have pivot at column i.
        if rows[i][i] != 1 || rows[i][..i].iter().any(|&v| v != 0) {
            return None;
        }
        for j in 0..s {
            if j != i && rows[i][j] != 0 {
                return None;
            }
        }
        left[i].copy_from_slice(&rows[i][s..]);
    }
    Some(left)
}

/// In-place reduced row echelon form over `F_p` for small `u8` matrices.
fn fp_rref(rows: &mut [Vec<u8>], p: u64) {
    if rows.is_empty() {
        return;
    }
    let ncols = rows[0].len();
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row >= rows.len() {
            break;
        }
        let Some(src) = (pivot_row..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = fp_inv(rows[pivot_row][col] as u64, p);
        for v in rows[pivot_row].iter_mut() {
            *v = ((*v as u64 * inv) % p) as u8;
        }
        for r in 0..rows.len() {
            if r != pivot_row && rows[r][col] != 0 {
                let f = rows[r][col] as u64;
                for cc in 0..ncols {
                    let sub = (f * rows[pivot_row][cc] as u64) % p;
                    rows[r][cc] = ((rows[r][cc] as u64 + p - sub) % p) as u8;
                }
            }
        }
        pivot_row += 1;
    }
}

fn fp_inv(a: u64, p: u64) -> u64 {
    // p is a small prime; Fermat.
    let mut e = p - 2;
    let mut base = a % p;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Decomposition over a basis of a bigger field
// ---------------------------------------------------------------------------

/// Decomposes elements of a big field over a fixed basis as a module over an
/// embedded small field: given `e: κ -> κ_E` and a κ-basis `b_0..b_{f-1}` of
/// `κ_E`, writes `z = sum e(c_j) · b_j` exactly.
#[derive(Clone, Debug)]
pub struct FqBasisDecomp {
    small: Fq,
    big: Fq,
    emb_images: Vec<FqElem>,
    basis: Vec<FqElem>,
    /// Inverse over `F_p` of the big.n × big.n matrix with columns
    /// `e(x^i) · b_j` (column index `j*s + i`).
    inv: Vec<Vec<u8>>,
}

impl FqBasisDecomp {
    pub fn new(emb: &FqEmbedding, basis: &[FqElem]) -> Result<FqBasisDecomp> {
        let small = emb.small().clone();
        let big = emb.big().clone();
        let s = small.n;
        let f = big.n / s;
        if basis.len() != f {
            return Err(Error::BadParameter(format!(
                "basis has {} vectors, expected {}",
                basis.len(),
                f
            )));
        }
        let mut columns: Vec<FqElem> = Vec::with_capacity(big.n);
        for b in basis {
            for img in &emb.images {
                columns.push(img * b);
            }
        }
        let inv = fp_square_inverse(big.p, big.n, &columns).ok_or_else(|| {
            Error::Degenerate("vectors do not form a basis over the embedded field".into())
        })?;
        Ok(FqBasisDecomp {
            small,
            big,
            emb_images: emb.images.clone(),
            basis: basis.to_vec(),
            inv,
        })
    }

    pub fn basis(&self) -> &[FqElem] {
        &self.basis
    }

    /// Coefficients `c_j` in the small field with `z = sum e(c_j) b_j`.
    pub fn decompose(&self, z: &FqElem) -> Vec<FqElem> {
        debug_assert!(same_field(z.field(), &self.big));
        let p = self.big.p;
        let s = self.small.n;
        let f = self.big.n / s;
        let mut w = vec![0u8; self.big.n];
        for (i, row) in self.inv.iter().enumerate() {
            let mut acc = 0u64;
            for (j, &rj) in row.iter().enumerate() {
                acc += rj as u64 * z.c[j] as u64;
            }
            w[i] = (acc % p) as u8;
        }
        (0..f)
            .map(|j| {
                let coeffs: Vec<u64> = (0..s).map(|i| w[j * s + i] as u64).collect();
                FqElem::from_coeffs(&self.small, &coeffs)
            })
            .collect()
    }

    /// Reassembles `z` from coefficients; inverse of [`Self::decompose`].
    pub fn compose(&self, coeffs: &[FqElem]) -> FqElem {
        let s = self.small.n;
        let mut acc = FqElem::zero(&self.big);
        for (j, c) in coeffs.iter().enumerate() {
            let mut image = FqElem::zero(&self.big);
            for i in 0..s {
                if c.c[i] != 0 {
                    let scal = FqElem::from_u64(&self.big, c.c[i] as u64);
                    image = &image + &(&scal * &self.emb_images[i]);
                }
            }
            acc = &acc + &(&image * &self.basis[j]);
        }
        acc
    }
}

/// Inverse over `F_p` of the square matrix whose columns are the coefficient
/// vectors of `columns`.
fn fp_square_inverse(p: u64, n: usize, columns: &[FqElem]) -> Option<Vec<Vec<u8>>> {
    assert_eq!(columns.len(), n);
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(n);
    for r in 0..n {
        let mut row = vec![0u8; 2 * n];
        for (cidx, col) in columns.iter().enumerate() {
            row[cidx] = col.c[r];
        }
        row[n + r] = 1;
        rows.push(row);
    }
    fp_rref(&mut rows, p);
    let mut inv = vec![vec![0u8; n]; n];
    for i in 0..n {
        if rows[i][i] != 1 {
            return None;
        }
        for j in 0..n {
            if j != i && rows[i][j] != 0 {
                return None;
            }
        }
        inv[i].copy_from_slice(&rows[i][n..]);
    }
    Some(inv)
}

// ---------------------------------------------------------------------------
// Canonical modulus search
// ---------------------------------------------------------------------------

fn find_canonical_modulus(p: u64, n: usize, order: u64) -> Vec<u8> {
    let unit_factors = factor_u64(order - 1);
    let mut v = 0u64;
    loop {
        // modulus = x^n + sum c_i x^i with c_i the base-p digits of v.
        let mut m = vec![0u8; n + 1];
        m[n] = 1;
        let mut rest = v;
        for slot in m.iter_mut().take(n) {
            *slot = (rest % p) as u8;
            rest /= p;
        }
        assert!(rest == 0, "exhausted modulus candidates for F_{p}^{n}");
        if poly_is_irreducible(&m, p, n) && poly_is_primitive(&m, p, order, &unit_factors) {
            return m;
        }
        v += 1;
    }
}

fn poly_is_irreducible(m: &[u8], p: u64, n: usize) -> bool {
    if n == 1 {
        return true;
    }
    // x^{p^n} ≡ x mod m, and gcd(x^{p^{n/l}} - x, m) = 1 for primes l | n.
    let x = vec![0u8, 1];
    let pn = p.pow(n as u32);
    let xq = poly_powmod(&x, pn, m, p);
    if poly_trimmed(&xq) != poly_trimmed(&x) {
        return false;
    }
    for l in prime_divisors(n as u64) {
        let e = p.pow((n as u64 / l) as u32);
        let xe = poly_powmod(&x, e, m, p);
        let diff = poly_sub(&xe, &x, p);
        let g = poly_gcd(&diff, m, p);
        if poly_deg(&g) != Some(0) {
            return false;
        }
    }
    true
}

fn poly_is_primitive(m: &[u8], p: u64, order: u64, unit_factors: &[(u64, u32)]) -> bool {
    let x = vec![0u8, 1];
    let full = poly_powmod(&x, order - 1, m, p);
    if poly_deg(&full) != Some(0) || full[0] != 1 {
        return false;
    }
    for &(l, _) in unit_factors {
        let e = (order - 1) / l;
        let xe = poly_powmod(&x, e, m, p);
        if poly_deg(&xe) == Some(0) && xe[0] == 1 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Raw polynomial arithmetic over F_p (u8 coefficients)
// ---------------------------------------------------------------------------

fn poly_trimmed(a: &[u8]) -> &[u8] {
    let mut end = a.len();
    while end > 0 && a[end - 1] == 0 {
        end -= 1;
    }
    &a[..end]
}

fn poly_deg(a: &[u8]) -> Option<usize> {
    let t = poly_trimmed(a);
    if t.is_empty() {
        None
    } else {
        Some(t.len() - 1)
    }
}

fn poly_sub(a: &[u8], b: &[u8], p: u64) -> Vec<u8> {
    let len = a.len().max(b.len());
    let mut out = vec![0u8; len];
    for i in 0..len {
        let av = *a.get(i).unwrap_or(&0) as u64;
        let bv = *b.get(i).unwrap_or(&0) as u64;
        out[i] = ((av + p - bv) % p) as u8;
    }
    out
}

fn poly_mul_raw(a: &[u8], b: &[u8], p: u64) -> Vec<u8> {
    let (a, b) = (poly_trimmed(a), poly_trimmed(b));
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &av) in a.iter().enumerate() {
        for (j, &bv) in b.iter().enumerate() {
            out[i + j] += av as u64 * bv as u64;
        }
    }
    out.into_iter().map(|v| (v % p) as u8).collect()
}

/// Remainder of `a` modulo the monic polynomial `m`.
fn poly_rem(a: &[u8], m: &[u8], p: u64) -> Vec<u8> {
    let dm = poly_deg(m).expect("modulus nonzero");
    debug_assert_eq!(m[dm], 1, "modulus must be monic");
    let mut r: Vec<u64> = a.iter().map(|&v| v as u64 % p).collect();
    let mut i = r.len();
    while i > dm {
        i -= 1;
        let c = r[i] % p;
        r[i] = 0;
        if c != 0 {
            for j in 0..dm {
                r[i - dm + j] += c * (p - m[j] as u64);
            }
        }
    }
    let mut out: Vec<u8> = r.into_iter().map(|v| (v % p) as u8).collect();
    out.truncate(dm);
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

fn poly_powmod(base: &[u8], mut e: u64, m: &[u8], p: u64) -> Vec<u8> {
    let mut b = poly_rem(base, m, p);
    let mut acc = vec![1u8];
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem(&poly_mul_raw(&acc, &b, p), m, p);
        }
        b = poly_rem(&poly_mul_raw(&b, &b, p), m, p);
        e >>= 1;
    }
    acc
}

fn poly_gcd(a: &[u8], b: &[u8], p: u64) -> Vec<u8> {
    let mut a = poly_trimmed(a).to_vec();
    let mut b = poly_trimmed(b).to_vec();
    while !b.is_empty() {
        // a mod b with b made monic first.
        let db = b.len() - 1;
        let lead_inv = fp_inv(b[db] as u64, p);
        let monic: Vec<u8> = b.iter().map(|&v| ((v as u64 * lead_inv) % p) as u8).collect();
        let r = poly_rem(&a, &monic, p);
        a = b;
        b = poly_trimmed(&r).to_vec();
    }
    if let Some(d) = poly_deg(&a) {
        let inv = fp_inv(a[d] as u64, p);
        a.iter().map(|&v| ((v as u64 * inv) % p) as u8).collect()
    } else {
        a
    }
}

// ---------------------------------------------------------------------------
// Integer helpers
// ---------------------------------------------------------------------------

pub(crate) fn is_prime_u64(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    if x % 2 == 0 {
        return x == 2;
    }
    let mut d = 3u64;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Trial-division factorization, (prime, multiplicity) in increasing order.
pub(crate) fn factor_u64(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if m < 2 {
        return out;
    }
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            let mut e = 0;
            while m % d == 0 {
                m /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

fn prime_divisors(n: u64) -> Vec<u64> {
    factor_u64(n).into_iter().map(|(p, _)| p).collect()
}

// ---------------------------------------------------------------------------
// Generic polynomials over an Fq
// ---------------------------------------------------------------------------

/// Dense polynomials with [`FqElem`] coefficients (index = degree, trimmed).
pub mod poly {
    use super::{fq_elements, Error, Fq, FqElem, Result};

    pub fn trim(v: &mut Vec<FqElem>) {
        while v.last().map(FqElem::is_zero).unwrap_or(false) {
            v.pop();
        }
    }

    pub fn deg(v: &[FqElem]) -> Option<usize> {
        v.iter().rposition(|c| !c.is_zero())
    }

    pub fn mul(a: &[FqElem], b: &[FqElem], field: &Fq) -> Vec<FqElem> {
        let (da, db) = match (deg(a), deg(b)) {
            (Some(da), Some(db)) => (da, db),
            _ => return Vec::new(),
        };
        let mut out = vec![FqElem::zero(field); da + db + 1];
        for i in 0..=da {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..=db {
                out[i + j] = &out[i + j] + &(&a[i] * &b[j]);
            }
        }
        out
    }

    /// Quotient and remainder by a nonzero divisor.
    pub fn divrem(a: &[FqElem], b: &[FqElem], field: &Fq) -> (Vec<FqElem>, Vec<FqElem>) {
        let db = deg(b).expect("division by zero polynomial");
        let lead_inv = b[db].inv();
        let mut r: Vec<FqElem> = a.to_vec();
        trim(&mut r);
        if r.len() <= db {
            return (Vec::new(), r);
        }
        let mut q = vec![FqElem::zero(field); r.len() - db];
        while let Some(dr) = deg(&r) {
            if dr < db {
                break;
            }
            let c = &r[dr] * &lead_inv;
            q[dr - db] = c.clone();
            for j in 0..=db {
                r[dr - db + j] = &r[dr - db + j] - &(&c * &b[j]);
            }
            trim(&mut r);
        }
        trim(&mut q);
        (q, r)
    }

    pub fn rem(a: &[FqElem], b: &[FqElem], field: &Fq) -> Vec<FqElem> {
        divrem(a, b, field).1
    }

    pub fn gcd_monic(a: &[FqElem], b: &[FqElem], field: &Fq) -> Vec<FqElem> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = rem(&a, &b, field);
            a = b;
            b = r;
        }
        if let Some(d) = deg(&a) {
            let inv = a[d].inv();
            a.iter().map(|c| c * &inv).collect()
        } else {
            a
        }
    }

    pub fn powmod(base: &[FqElem], mut e: u64, m: &[FqElem], field: &Fq) -> Vec<FqElem> {
        let mut b = rem(base, m, field);
        let mut acc = vec![FqElem::one(field)];
        while e > 0 {
            if e & 1 == 1 {
                acc = rem(&mul(&acc, &b, field), m, field);
            }
            b = rem(&mul(&b, &b, field), m, field);
            e >>= 1;
        }
        acc
    }

    pub fn eval(f: &[FqElem], x: &FqElem) -> FqElem {
        let field = x.field();
        let mut acc = FqElem::zero(field);
        for c in f.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Finds a root of a polynomial that splits into distinct linear factors
    /// over `field`, deterministically: trial shifts are scanned in index
    /// order, so the same input always yields the same root.
    pub fn find_root_splitting(f: &[FqElem], field: &Fq) -> Result<FqElem> {
        let mut cur: Vec<FqElem> = f.to_vec();
        trim(&mut cur);
        let d = deg(&cur).ok_or_else(|| Error::NoSuchRoots("zero polynomial".into()))?;
        if d == 0 {
            return Err(Error::NoSuchRoots("constant polynomial".into()));
        }
        // Make monic.
        let inv = cur[d].inv();
        let mut cur: Vec<FqElem> = cur.iter().map(|c| c * &inv).collect();
        let half = field.mult_order() / 2;
        loop {
            let d = deg(&cur).unwrap();
            if d == 1 {
                return Ok(-&cur[0]);
            }
            let mut split = None;
            for c in fq_elements(field) {
                // g = gcd((y + c)^((q-1)/2) - 1, cur)
                let shift = vec![c, FqElem::one(field)];
                let mut h = powmod(&shift, half, &cur, field);
                if h.is_empty() {
                    // y = -c is a root outright.
                    return Ok(-&shift[0]);
                }
                h[0] = &h[0] - &FqElem::one(field);
                let g = gcd_monic(&h, &cur, field);
                if let Some(dg) = deg(&g) {
                    if dg > 0 && dg < d {
                        let (q, _r) = divrem(&cur, &g, field);
                        split = Some(if dg <= d - dg { g } else { q });
                        break;
                    }
                }
            }
            cur = split.ok_or_else(|| {
                Error::NoSuchRoots("polynomial does not split into distinct linear factors".into())
            })?;
        }
    }

    /// All roots of a squarefree polynomial that splits over `field`.
    pub fn all_roots_splitting(f: &[FqElem], field: &Fq) -> Result<Vec<FqElem>> {
        let mut cur: Vec<FqElem> = f.to_vec();
        trim(&mut cur);
        let mut roots = Vec::new();
        while deg(&cur).unwrap_or(0) > 0 {
            let r = find_root_splitting(&cur, field)?;
            let lin = vec![-&r, FqElem::one(field)];
            let (q, rem_) = divrem(&cur, &lin, field);
            if !rem_.is_empty() {
                return Err(Error::Internal("claimed root does not divide".into()));
            }
            roots.push(r);
            cur = q;
        }
        Ok(roots)
    }
}

// ---------------------------------------------------------------------------
// Dense linear algebra over an Fq
// ---------------------------------------------------------------------------

/// Row-reduction based routines over an arbitrary residue field; matrices
/// are `Vec` of rows.
pub mod linalg {
    use super::{Fq, FqElem};

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(rows: &mut [Vec<FqElem>]) -> Vec<usize> {
        let mut pivots = Vec::new();
        if rows.is_empty() {
            return pivots;
        }
        let ncols = rows[0].len();
        let mut pr = 0;
        for col in 0..ncols {
            if pr >= rows.len() {
                break;
            }
            let Some(src) = (pr..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(pr, src);
            let inv = rows[pr][col].inv();
            for v in rows[pr].iter_mut() {
                *v = &*v * &inv;
            }
            for r in 0..rows.len() {
                if r != pr && !rows[r][col].is_zero() {
                    let f = rows[r][col].clone();
                    for cc in 0..ncols {
                        let sub = &f * &rows[pr][cc];
                        rows[r][cc] = &rows[r][cc] - &sub;
                    }
                }
            }
            pivots.push(col);
            pr += 1;
        }
        pivots
    }

    pub fn rank(rows: &[Vec<FqElem>]) -> usize {
        let mut m = rows.to_vec();
        rref(&mut m).len()
    }

    /// One solution of `A x = b` (free variables set to zero), or `None`.
    pub fn solve(a: &[Vec<FqElem>], b: &[FqElem], field: &Fq) -> Option<Vec<FqElem>> {
        let nrows = a.len();
        if nrows == 0 {
            return Some(Vec::new());
        }
        let ncols = a[0].len();
        let mut aug: Vec<Vec<FqElem>> = a
            .iter()
            .zip(b)
            .map(|(row, bi)| {
                let mut r = row.clone();
                r.push(bi.clone());
                r
            })
            .collect();
        let pivots = rref(&mut aug);
        if pivots.contains(&ncols) {
            return None; // inconsistent
        }
        let mut x = vec![FqElem::zero(field); ncols];
        for (i, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[i][ncols].clone();
        }
        Some(x)
    }

    /// Basis of the right kernel of `A`.
    pub fn kernel(a: &[Vec<FqElem>], ncols: usize, field: &Fq) -> Vec<Vec<FqElem>> {
        let mut m = a.to_vec();
        let pivots = rref(&mut m);
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let mut out = Vec::new();
        for free in 0..ncols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![FqElem::zero(field); ncols];
            v[free] = FqElem::one(field);
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -&m[i][free];
            }
            out.push(v);
        }
        out
    }

    /// Inverse of a square matrix, or `None` if singular.
    pub fn invert(a: &[Vec<FqElem>], field: &Fq) -> Option<Vec<Vec<FqElem>>> {
        let n = a.len();
        let mut aug: Vec<Vec<FqElem>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                assert_eq!(row.len(), n, "invert: matrix not square");
                let mut r = row.clone();
                for j in 0..n {
                    r.push(if i == j { FqElem::one(field) } else { FqElem::zero(field) });
                }
                r
            })
            .collect();
        let pivots = rref(&mut aug);
        if pivots.len() != n {
            return None;
        }
        Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
    }

    /// Matrix-vector product.
    pub fn matvec(a: &[Vec<FqElem>], x: &[FqElem], field: &Fq) -> Vec<FqElem> {
        a.iter()
            .map(|row| {
                let mut acc = FqElem::zero(field);
                for (aij, xj) in row.iter().zip(x) {
                    acc = &acc + &(aij * xj);
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_moduli_small_fields() {
        // Hand-derived: first monic polynomial in digit order whose root
        // generates the unit group.
        assert_eq!(fq(3, 1).unwrap().modulus(), &[1, 1]); // x + 1, gen = 2
        assert_eq!(fq(5, 1).unwrap().modulus(), &[2, 1]); // x + 2, gen = 3
        assert_eq!(fq(3, 2).unwrap().modulus(), &[2, 1, 1]); // x^2 + x + 2
        assert_eq!(fq(3, 3).unwrap().modulus(), &[1, 2, 0, 1]); // x^3 + 2x + 1
        assert_eq!(fq(5, 2).unwrap().modulus(), &[2, 1, 1]); // x^2 + x + 2

        assert_eq!(FqElem::generator(&fq(3, 1).unwrap()).index(), 2);
        assert_eq!(FqElem::generator(&fq(5, 1).unwrap()).index(), 3);
        assert_eq!(FqElem::generator(&fq(7, 1).unwrap()).index(), 5);
    }

    #[test]
    fn generator_orders() {
        for (p, n) in [(3, 1), (3, 2), (3, 3), (3, 4), (5, 1), (5, 2), (5, 3), (7, 2)] {
            let f = fq(p, n).unwrap();
            let g = FqElem::generator(&f);
            assert_eq!(g.order(), f.mult_order(), "generator of {f} not primitive");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(fq(2, 1), Err(Error::EvenResidueChar(2))));
        assert!(matches!(fq(9, 1), Err(Error::BadParameter(_))));
        assert!(matches!(fq(3, 0), Err(Error::BadParameter(_))));
    }

    #[test]
    fn element_enumeration_distinct() {
        let f = fq(3, 3).unwrap();
        let all: Vec<FqElem> = fq_elements(&f).collect();
        assert_eq!(all.len(), 27);
        for (i, a) in all.iter().enumerate() {
            assert_eq!(a.index(), i as u64);
        }
    }

    #[test]
    fn dlog_roundtrip() {
        // 3^6 - 1 = 728 = 2^3 * 7 * 13 exercises the CRT combination.
        let f = fq(3, 6).unwrap();
        for k in [0u64, 1, 2, 100, 331, 727] {
            let x = FqElem::from_dlog(&f, k);
            assert_eq!(x.dlog(), k);
        }
        let f = fq(5, 3).unwrap();
        for k in [0u64, 5, 61, 123] {
            assert_eq!(FqElem::from_dlog(&f, k).dlog(), k);
        }
    }

    #[test]
    fn dlog_in_matches_subgroup() {
        let f = fq(3, 4).unwrap();
        let g = FqElem::generator(&f);
        // h = g^5 has order 16 inside the group of order 80.
        let h = g.pow(5);
        assert_eq!(h.order(), 16);
        let t = h.pow(11);
        assert_eq!(dlog_in(&h, &t, 16), Some(11));
    }

    #[test]
    fn sqrt_counts() {
        let f = fq(7, 2).unwrap();
        let mut squares = 0;
        for a in fq_elements(&f) {
            match a.sqrt() {
                Some(r) => {
                    assert_eq!(&r * &r, a);
                    squares += 1;
                }
                None => assert!(!a.is_square()),
            }
        }
        // 0 plus (q-1)/2 nonzero squares.
        assert_eq!(squares, 1 + (f.order() - 1) / 2);
    }

    #[test]
    fn frobenius_is_field_automorphism() {
        let f = fq(3, 4).unwrap();
        let a = FqElem::from_index(&f, 57);
        let b = FqElem::from_index(&f, 33);
        assert_eq!((&a + &b).frobenius(1), &a.frobenius(1) + &b.frobenius(1));
        assert_eq!((&a * &b).frobenius(1), &a.frobenius(1) * &b.frobenius(1));
        // Fixed field of frob^2 has 9 elements.
        let fixed = fq_elements(&f).filter(|x| x.frobenius(2) == *x).count();
        assert_eq!(fixed, 9);
    }

    #[test]
    fn embedding_is_ring_hom() {
        let small = fq(3, 2).unwrap();
        let big = fq(3, 6).unwrap();
        let e = FqEmbedding::new(&small, &big).unwrap();
        assert!(e.map(&FqElem::one(&small)).is_one());
        for (ia, ib) in [(3u64, 7u64), (5, 8), (2, 2), (4, 1)] {
            let a = FqElem::from_index(&small, ia);
            let b = FqElem::from_index(&small, ib);
            assert_eq!(e.map(&(&a + &b)), &e.map(&a) + &e.map(&b));
            assert_eq!(e.map(&(&a * &b)), &e.map(&a) * &e.map(&b));
        }
        // Image of the generator keeps its order.
        let g = FqElem::generator(&small);
        assert_eq!(e.map(&g).order(), small.mult_order());
        // Preimage roundtrip, and rejection of non-image elements.
        for ia in 0..9u64 {
            let a = FqElem::from_index(&small, ia);
            assert_eq!(e.preimage(&e.map(&a)), Some(a));
        }
        let outside = FqElem::generator(&big); // order 728, not in F_9
        assert_eq!(e.preimage(&outside), None);
    }

    #[test]
    fn embedding_composition() {
        let f3 = fq(3, 1).unwrap();
        let f9 = fq(3, 2).unwrap();
        let f729 = fq(3, 6).unwrap();
        let e1 = FqEmbedding::new(&f3, &f9).unwrap();
        let e2 = FqEmbedding::new(&f9, &f729).unwrap();
        let comp = FqEmbedding::compose(&e1, &e2).unwrap();
        for i in 0..3u64 {
            let a = FqElem::from_index(&f3, i);
            assert_eq!(comp.map(&a), e2.map(&e1.map(&a)));
        }
    }

    #[test]
    fn embedding_is_canonical_across_lookups() {
        let small = fq(3, 3).unwrap();
        let big = fq(3, 6).unwrap();
        let e1 = FqEmbedding::new(&small, &big).unwrap();
        let e2 = FqEmbedding::new(&small, &big).unwrap();
        let g = FqElem::generator(&small);
        assert_eq!(e1.map(&g), e2.map(&g));
    }

    #[test]
    fn basis_decomposition_roundtrip() {
        let kappa = fq(3, 2).unwrap();
        let big = fq(3, 6).unwrap();
        let e = FqEmbedding::new(&kappa, &big).unwrap();
        let gamma = FqElem::generator(&big);
        let basis = vec![FqElem::one(&big), gamma.clone(), &gamma * &gamma];
        let dec = FqBasisDecomp::new(&e, &basis).unwrap();
        for idx in [0u64, 1, 5, 100, 500, 728] {
            let z = FqElem::from_index(&big, idx);
            let coeffs = dec.decompose(&z);
            assert_eq!(coeffs.len(), 3);
            assert_eq!(dec.compose(&coeffs), z);
        }
        // A dependent set is rejected.
        let bad = vec![FqElem::one(&big), FqElem::one(&big), gamma];
        assert!(FqBasisDecomp::new(&e, &bad).is_err());
    }

    #[test]
    fn polynomial_roots() {
        let f = fq(5, 2).unwrap();
        // (y - a)(y - b) for chosen a, b.
        let a = FqElem::from_index(&f, 7);
        let b = FqElem::from_index(&f, 19);
        let poly = poly::mul(
            &[-&a, FqElem::one(&f)],
            &[-&b, FqElem::one(&f)],
            &f,
        );
        let mut roots = poly::all_roots_splitting(&poly, &f).unwrap();
        roots.sort_by_key(|r| r.index());
        let mut expect = vec![a, b];
        expect.sort_by_key(|r| r.index());
        assert_eq!(roots, expect);
    }

    #[test]
    fn linalg_invert_and_kernel() {
        let f = fq(3, 2).unwrap();
        let e = |i: u64| FqElem::from_index(&f, i);
        let a = vec![
            vec![e(1), e(2), e(0)],
            vec![e(3), e(1), e(1)],
            vec![e(0), e(4), e(7)],
        ];
        if let Some(inv) = linalg::invert(&a, &f) {
            // A * A^{-1} = I.
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = FqElem::zero(&f);
                    for k in 0..3 {
                        acc = &acc + &(&a[i][k] * &inv[k][j]);
                    }
                    assert_eq!(acc.is_one(), i == j);
                    if i != j {
                        assert!(acc.is_zero());
                    }
                }
            }
        }
        // Kernel of a rank-1 matrix in 3 columns has dimension 2.
        let r1 = vec![vec![e(1), e(2), e(3)]];
        let ker = linalg::kernel(&r1, 3, &f);
        assert_eq!(ker.len(), 2);
        for v in &ker {
            let img = linalg::matvec(&r1, v, &f);
            assert!(img[0].is_zero());
        }
    }

    proptest! {
        #[test]
        fn field_laws_f81(ia in 0u64..81, ib in 0u64..81, ic in 0u64..81) {
            let f = fq(3, 4).unwrap();
            let a = FqElem::from_index(&f, ia);
            let b = FqElem::from_index(&f, ib);
            let c = FqElem::from_index(&f, ic);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a - &a, FqElem::zero(&f));
            if !a.is_zero() {
                prop_assert!((&a * &a.inv()).is_one());
            }
            prop_assert_eq!(FqElem::from_index(&f, a.index()), a);
        }
    }
}
