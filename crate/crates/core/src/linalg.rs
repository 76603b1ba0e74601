//! Small dense and banded solvers.

use alloc::vec::Vec;

use crate::math::FloatExt;
use crate::{Error, Result};

/// Thomas algorithm. `lower[0]` and `upper[n-1]` are ignored.
pub fn tridiagonal_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = alloc::vec![0.0; n];
    let mut d = alloc::vec![0.0; n];
    let mut beta = diag[0];
    c[0] = if n > 1 { upper[0] / beta } else { 0.0 };
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / beta;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

pub type Block = [[f64; 2]; 2];

fn mat_mul(a: &Block, b: &Block) -> Block {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_vec(a: &Block, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn inverse2(a: &Block) -> Result<Block> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs()).max(a[1][0].abs());
    if !(det.abs() > 1e-300 && det.abs() > 1e-15 * scale * scale) {
        return Err(Error::Singular(alloc::format!("2×2 block with determinant {det}")));
    }
    Ok([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Block Thomas algorithm for 2×2 blocks.
pub fn block_tridiagonal_solve(
    lower: &[Block],
    diag: &[Block],
    upper: &[Block],
    rhs: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let n = diag.len();
    let mut c: Vec<Block> = alloc::vec![[[0.0; 2]; 2]; n];
    let mut d: Vec<[f64; 2]> = alloc::vec![[0.0; 2]; n];
    let mut inv = inverse2(&diag[0])?;
    if n > 1 {
        c[0] = mat_mul(&inv, &upper[0]);
    }
    d[0] = mat_vec(&inv, rhs[0]);
    for i in 1..n {
        let lc = mat_mul(&lower[i], &c[i - 1]);
        let m = [
            [diag[i][0][0] - lc[0][0], diag[i][0][1] - lc[0][1]],
            [diag[i][1][0] - lc[1][0], diag[i][1][1] - lc[1][1]],
        ];
        inv = inverse2(&m)?;
        if i + 1 < n {
            c[i] = mat_mul(&inv, &upper[i]);
        }
        let ld = mat_vec(&lower[i], d[i - 1]);
        d[i] = mat_vec(&inv, [rhs[i][0] - ld[0], rhs[i][1] - ld[1]]);
    }
    for i in (0..n - 1).rev() {
        let cd = mat_vec(&c[i], d[i + 1]);
        d[i] = [d[i][0] - cd[0], d[i][1] - cd[1]];
    }
    Ok(d)
}

/// Preconditioned conjugate gradients for an operator that is symmetric
/// positive definite in the inner product Σ wᵢ xᵢ yᵢ. Stops when the
/// weighted residual norm falls below `tol` times that of `rhs`.
pub fn weighted_pcg<A, P>(
    apply: A,
    precond: P,
    weights: &[f64],
    rhs: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>>
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(weights).map(|((x, y), w)| x * y * w).sum()
    };
    let ax = apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let target = tol * dot(rhs, rhs).sqrt();
    if dot(&r, &r).sqrt() <= target {
        return Ok(x);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular("operator not positive definite".into()));
        }
        let a = rz / pap;
        for i in 0..x.len() {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let res = dot(&r, &r).sqrt();
        if res <= target {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let b = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + b * p[i];
        }
    }
    let res = dot(&r, &r).sqrt();
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}
