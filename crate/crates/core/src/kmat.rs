//! Dense matrices over a commutative local field.
//!
//! Thin helpers on `Vec<Vec<KElem>>` (rows): products, determinants,
//! inverses, and linear solves, all with minimum-valuation pivoting so that
//! precision loss stays bounded. Used for reduced norms through the
//! splitting of a quaternion algebra and for the linear systems that define
//! descended pairings.

use crate::arith::{KElem, LocalField};
use crate::error::{Error, Result};

pub type KMat = Vec<Vec<KElem>>;

pub fn zero(field: &LocalField, m: usize, n: usize) -> KMat {
    vec![vec![KElem::zero(field); n]; m]
}

pub fn identity(field: &LocalField, n: usize) -> KMat {
    let mut a = zero(field, n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = KElem::one(field);
    }
    a
}

pub fn mul(a: &KMat, b: &KMat) -> KMat {
    let m = a.len();
    let inner = b.len();
    let n = if inner > 0 { b[0].len() } else { 0 };
    assert!(a.iter().all(|r| r.len() == inner), "dimension mismatch in mul");
    let field = a[0][0].field().clone();
    let mut out = zero(&field, m, n);
    for i in 0..m {
        for k in 0..inner {
            if a[i][k].try_is_zero().unwrap_or(false) {
                continue;
            }
            for j in 0..n {
                out[i][j] = &out[i][j] + &(&a[i][k] * &b[k][j]);
            }
        }
    }
    out
}

pub fn matvec(a: &KMat, x: &[KElem]) -> Vec<KElem> {
    a.iter()
        .map(|row| {
            let field = row[0].field().clone();
            let mut acc = KElem::zero(&field);
            for (aij, xj) in row.iter().zip(x) {
                acc = &acc + &(aij * xj);
            }
            acc
        })
        .collect()
}

pub fn transpose(a: &KMat) -> KMat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Picks, among rows `from..`, the row whose entry in `col` is provably
/// nonzero with minimal valuation. `Ok(None)` means the whole column is
/// provably zero; undecidable entries raise `PrecisionExhausted`.
fn pivot_row(m: &KMat, col: usize, from: usize) -> Result<Option<usize>> {
    let mut best: Option<(i64, usize)> = None;
    for r in from..m.len() {
        let entry = &m[r][col];
        if entry.try_is_zero()? {
            continue;
        }
        let v = entry.valuation()?;
        if best.map(|(bv, _)| v < bv).unwrap_or(true) {
            best = Some((v, r));
        }
    }
    Ok(best.map(|(_, r)| r))
}

/// Determinant by Gaussian elimination with min-valuation pivoting.
pub fn det(a: &KMat) -> Result<KElem> {
    let n = a.len();
    if n == 0 {
        return Err(Error::BadParameter("determinant of empty matrix".into()));
    }
    let field = a[0][0].field().clone();
    let mut m = a.to_vec();
    let mut acc = KElem::one(&field);
    let mut neg = false;
    for col in 0..n {
        let Some(p) = pivot_row(&m, col, col)? else {
            return Ok(KElem::zero(&field));
        };
        if p != col {
            m.swap(p, col);
            neg = !neg;
        }
        let piv = m[col][col].clone();
        acc = &acc * &piv;
        let piv_inv = piv.inv()?;
        for r in col + 1..n {
            if m[r][col].try_is_zero().unwrap_or(false) {
                continue;
            }
            let f = &m[r][col] * &piv_inv;
            for cc in col..n {
                let sub = &f * &m[col][cc];
                m[r][cc] = &m[r][cc] - &sub;
            }
        }
    }
    Ok(if neg { -&acc } else { acc })
}

/// Inverse by Gauss–Jordan; `Singular` if the matrix is not invertible.
pub fn inv(a: &KMat) -> Result<KMat> {
    let n = a.len();
    let field = a[0][0].field().clone();
    let mut m: KMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            assert_eq!(row.len(), n, "inv: matrix not square");
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { KElem::one(&field) } else { KElem::zero(&field) });
            }
            r
        })
        .collect();
    for col in 0..n {
        let p = pivot_row(&m, col, col)?
            .ok_or_else(|| Error::Singular(format!("no pivot in column {col}")))?;
        m.swap(p, col);
        let piv_inv = m[col][col].inv()?;
        for cc in 0..2 * n {
            m[col][cc] = &m[col][cc] * &piv_inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].try_is_zero().unwrap_or(false) {
                let f = m[r][col].clone();
                for cc in 0..2 * n {
                    let sub = &f * &m[col][cc];
                    m[r][cc] = &m[r][cc] - &sub;
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Solves `A x = b` for square invertible `A`.
pub fn solve(a: &KMat, b: &[KElem]) -> Result<Vec<KElem>> {
    let ai = inv(a)?;
    Ok(matvec(&ai, b))
}

/// Basis over the valuation ring of the row span of `rows` inside `k^n`,
/// assuming the span has full rank `n`. Elimination keeps quotients
/// integral by always pivoting on the minimum-valuation entry, so the
/// returned `n` rows generate exactly the same `o`-module as the input.
pub fn row_lattice_basis(rows: &[Vec<KElem>], n: usize) -> Result<KMat> {
    let mut work: Vec<Vec<KElem>> = Vec::new();
    for r in rows {
        if r.len() != n {
            return Err(Error::BadParameter("row length mismatch".into()));
        }
        let mut all_zero = true;
        for x in r {
            if !x.try_is_zero()? {
                all_zero = false;
                break;
            }
        }
        if !all_zero {
            work.push(r.clone());
        }
    }
    let mut basis: Vec<Vec<KElem>> = Vec::new();
    for col in 0..n {
        let mut best: Option<(i64, usize)> = None;
        for (idx, r) in work.iter().enumerate() {
            if r[col].try_is_zero()? {
                continue;
            }
            let v = r[col].valuation()?;
            if best.map(|(bv, _)| v < bv).unwrap_or(true) {
                best = Some((v, idx));
            }
        }
        let Some((_, idx)) = best else {
            continue;
        };
        let pivot = work.remove(idx);
        let piv_inv = pivot[col].inv()?;
        for r in work.iter_mut() {
            if r[col].try_is_zero()? {
                continue;
            }
            let q = &r[col] * &piv_inv;
            for cc in col..n {
                let sub = &q * &pivot[cc];
                r[cc] = &r[cc] - &sub;
            }
        }
        basis.push(pivot);
    }
    if basis.len() != n {
        return Err(Error::Singular("row span does not have full rank".into()));
    }
    Ok(basis)
}

/// Basis of `{x : A x = 0}` for a rectangular `A`, one vector per free
/// column of the reduced row echelon form. Empty result means the kernel is
/// provably trivial at working precision.
pub fn kernel(a: &KMat) -> Result<Vec<Vec<KElem>>> {
    let m = a.len();
    if m == 0 {
        return Err(Error::BadParameter("kernel of empty matrix".into()));
    }
    let n = a[0].len();
    let field = a[0][0].field().clone();
    let mut rr = a.to_vec();
    // Row reduce with column pivots recorded; free columns feed the basis.
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut row = 0usize;
    for col in 0..n {
        if row >= m {
            break;
        }
        let Some(p) = pivot_row(&rr, col, row)? else {
            continue;
        };
        rr.swap(p, row);
        let piv_inv = rr[row][col].inv()?;
        for cc in col..n {
            rr[row][cc] = &rr[row][cc] * &piv_inv;
        }
        for r in 0..m {
            if r != row && !rr[r][col].try_is_zero().unwrap_or(false) {
                let f = rr[r][col].clone();
                for cc in col..n {
                    let sub = &f * &rr[row][cc];
                    rr[r][cc] = &rr[r][cc] - &sub;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![KElem::zero(&field); n];
        v[free] = KElem::one(&field);
        for &(r, c) in &pivots {
            v[c] = -&rr[r][free];
        }
        basis.push(v);
    }
    Ok(basis)
}
