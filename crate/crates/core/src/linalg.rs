//! Small dense helpers on top of `faer`.

use faer::{c64, Col, Mat};

pub type CMat = Mat<c64>;
pub type CCol = Col<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

#[inline]
pub fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_col(v: &CCol) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}

/// Largest row sum of moduli (induced ∞-norm).
pub fn inf_norm(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> c64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let aik = a[(i, k)];
            if aik != ZERO {
                acc += aik * b[(k, i)];
            }
        }
    }
    acc
}

/// Nonzero entries of every column, `(row, value)`, in row order.
pub(crate) fn column_entries(m: &CMat) -> Vec<Vec<(usize, c64)>> {
    (0..m.ncols())
        .map(|j| {
            (0..m.nrows())
                .filter_map(|i| {
                    let v = m[(i, j)];
                    (v != ZERO).then_some((i, v))
                })
                .collect()
        })
        .collect()
}

/// Nonzero entries of every row, `(column, value)`, in column order.
pub(crate) fn row_entries(m: &CMat) -> Vec<Vec<(usize, c64)>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .filter_map(|j| {
                    let v = m[(i, j)];
                    (v != ZERO).then_some((j, v))
                })
                .collect()
        })
        .collect()
}
