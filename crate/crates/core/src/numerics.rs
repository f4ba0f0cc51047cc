//! Linear-algebra kernels: a CSR symmetric operator, unpreconditioned
//! conjugate gradient, and minimum-norm dense least squares.
//!
//! Dot products accumulate left to right in index order so that repeated
//! solves are bitwise reproducible; matrix-vector products may fan out over
//! rows but each row is summed sequentially.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

/// Linear operator `v -> M v` on `R^n`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `M v` into `out`. Both slices have length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);

    fn is_symmetric(&self) -> bool;
}

/// Compressed-sparse-row square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates and
    /// dropping explicit zeros.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= n || c >= n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.max(c) + 1,
            });
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = CsrMatrix {
            n,
            row_ptr,
            col_idx: merged.iter().map(|t| t.1).collect(),
            values: merged.iter().map(|t| t.2).collect(),
            symmetric: false,
        };
        m.symmetric = m.check_symmetric();
        Ok(m)
    }

    fn check_symmetric(&self) -> bool {
        (0..self.n).all(|r| {
            self.row(r)
                .all(|(c, v)| self.get(c, r).to_bits() == v.to_bits())
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                d[(r, c)] = v;
            }
        }
        d
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(v, &mut out);
        out
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        par::fill_indexed(out, |r| {
            let mut acc = 0.0;
            for (c, a) in self.row(r) {
                acc += a * v[c];
            }
            acc
        });
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Sequential dot product in index order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||Mx - b|| <= tol ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `||Mx - b|| / ||b||` of the returned iterate.
    pub residual: f64,
}

/// Solves `M x = b` for symmetric positive (semi)definite `M` starting from
/// `x = 0`.
pub fn conjugate_gradient<M: LinearOperator + ?Sized>(
    m: &M,
    b: &[f64],
    opts: &CgOptions,
) -> Result<CgSolution> {
    let n = m.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if !m.is_symmetric() {
        return Err(Error::param(
            "operator",
            "conjugate gradient needs a symmetric operator",
        ));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = opts.tol * b_norm;

    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut mp = vec![0.0; n];
    let mut rr = dot(&r, &r);

    for iteration in 1..=max_iter {
        m.apply(&p, &mut mp);
        let curvature = dot(&p, &mp);
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(Error::Breakdown {
                iteration,
                curvature,
            });
        }
        let alpha = rr / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * mp[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            // the recursive residual can drift from the true one
            let true_r = residual_vector(m, &x, b);
            let true_norm = norm2(&true_r);
            if true_norm <= target {
                return Ok(CgSolution {
                    x,
                    iterations: iteration,
                    residual: true_norm / b_norm,
                });
            }
            r = true_r;
            rr = dot(&r, &r);
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let residual = norm2(&residual_vector(m, &x, b)) / b_norm;
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

fn residual_vector<M: LinearOperator + ?Sized>(m: &M, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut mx = vec![0.0; x.len()];
    m.apply(x, &mut mx);
    b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect()
}

/// Minimum-norm solution of `min ||A X - B||_F` through the SVD of `A`.
/// Singular values below `max(m, k) * eps * sigma_max` are treated as zero.
pub fn least_squares_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return Err(Error::param("A", "matrix must be non-empty"));
    }
    if b.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.nrows(),
        });
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Ok(DMatrix::zeros(k, b.ncols()));
    }
    let cutoff = m.max(k) as f64 * f64::EPSILON * sigma_max;
    svd.solve(b, cutoff)
        .map_err(|e| Error::param("A", e.to_string()))
}
