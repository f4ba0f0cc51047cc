//! Sparse three-way tensors and CP (PARAFAC) decomposition by alternating
//! least squares.
//!
//! Each ALS sweep updates the mode-1, mode-2 and mode-3 factors in turn. The
//! subproblem for mode 1 is `min_A || X_(1) - A (C ⊙ B)^T ||`, which is solved
//! through its normal equations: the right-hand side is the MTTKRP
//! `X_(1) (C ⊙ B)` accumulated over the nonzeros only, and the Gram matrix of
//! the Khatri-Rao product is the Hadamard product `(C^T C) * (B^T B)`. The
//! minimum-norm solution of that `R x R` system equals the minimum-norm
//! solution of the full Khatri-Rao system, so the tensor is never unfolded
//! densely.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::least_squares_solve;
use crate::par;

pub type Shape3 = (usize, usize, usize);

/// One stored coordinate `(i, j, k, value)`.
pub type Entry = (usize, usize, usize, f64);

/// Tensors with at most this many cells get an exact residual by visiting
/// every cell; larger ones fall back to the Gram identity off the support.
const EXACT_RESIDUAL_CELLS: usize = 1 << 22;

/// Coordinate-format three-way tensor, entries sorted by `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor3 {
    shape: Shape3,
    entries: Vec<Entry>,
}

impl SparseTensor3 {
    /// Sorts the entries and rejects out-of-range or repeated coordinates.
    /// Explicit zeros are dropped.
    pub fn new(shape: Shape3, mut entries: Vec<Entry>) -> Result<Self> {
        let (m, t, o) = shape;
        for &(i, j, k, _) in &entries {
            if i >= m || j >= t || k >= o {
                return Err(Error::param(
                    "entries",
                    format!("coordinate ({i}, {j}, {k}) outside shape {shape:?}"),
                ));
            }
        }
        entries.retain(|e| e.3 != 0.0);
        entries.sort_by_key(|e| (e.0, e.1, e.2));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].0, w[0].1, w[0].2) == (w[1].0, w[1].1, w[1].2))
        {
            return Err(Error::param(
                "entries",
                format!("duplicate coordinate ({}, {}, {})", w[0].0, w[0].1, w[0].2),
            ));
        }
        Ok(SparseTensor3 { shape, entries })
    }

    pub fn zeros(shape: Shape3) -> Self {
        SparseTensor3 {
            shape,
            entries: Vec::new(),
        }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn cells(&self) -> usize {
        self.shape.0 * self.shape.1 * self.shape.2
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1, e.2).cmp(&(i, j, k)))
            .map(|pos| self.entries[pos].3)
            .unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.3).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|e| e.3 * e.3).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    fn check_finite(&self) -> Result<()> {
        match self.entries.iter().find(|e| !e.3.is_finite()) {
            Some(&(i, j, k, _)) => Err(Error::NonFinite(i, j, k)),
            None => Ok(()),
        }
    }
}

/// `sqrt(Σ (x - y)^2)` over the union of both supports.
pub fn frobenius_distance(x: &SparseTensor3, y: &SparseTensor3) -> Result<f64> {
    if x.shape != y.shape {
        return Err(Error::ShapeMismatch(x.shape, y.shape));
    }
    let (mut a, mut b) = (x.entries.iter().peekable(), y.entries.iter().peekable());
    let mut acc = 0.0;
    loop {
        let diff = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&&ea), None) => {
                a.next();
                ea.3
            }
            (None, Some(&&eb)) => {
                b.next();
                eb.3
            }
            (Some(&&ea), Some(&&eb)) => match (ea.0, ea.1, ea.2).cmp(&(eb.0, eb.1, eb.2)) {
                std::cmp::Ordering::Less => {
                    a.next();
                    ea.3
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                    eb.3
                }
                std::cmp::Ordering::Equal => {
                    a.next();
                    b.next();
                    ea.3 - eb.3
                }
            },
        };
        acc += diff * diff;
    }
    Ok(acc.sqrt())
}

/// Weighted sum of `rank` outer products `λ_r a_r ∘ b_r ∘ c_r`.
///
/// After [`CpModel::normalize`] every factor column has unit norm, weights
/// are non-increasing, and the largest-magnitude entry of each mode-1 and
/// mode-2 column is nonnegative. The mode-3 column carries whatever sign keeps
/// the weight positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    pub weights: Vec<f64>,
    /// Mode-1 factor, `m x R` (AS profiles).
    pub a: DMatrix<f64>,
    /// Mode-2 factor, `T x R` (update-stream profiles).
    pub b: DMatrix<f64>,
    /// Mode-3 factor, `o x R` (vantage-point profiles).
    pub c: DMatrix<f64>,
}

impl CpModel {
    pub fn new(
        weights: Vec<f64>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self> {
        let r = weights.len();
        for f in [&a, &b, &c] {
            if f.ncols() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: f.ncols(),
                });
            }
        }
        Ok(CpModel { weights, a, b, c })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Shape3 {
        (self.a.nrows(), self.b.nrows(), self.c.nrows())
    }

    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.rank() {
            acc += self.weights[r] * self.a[(i, r)] * self.b[(j, r)] * self.c[(k, r)];
        }
        acc
    }

    /// `<X̂, X̂>` from the factor Gram matrices.
    pub fn norm_squared(&self) -> f64 {
        let ga = self.a.transpose() * &self.a;
        let gb = self.b.transpose() * &self.b;
        let gc = self.c.transpose() * &self.c;
        let mut acc = 0.0;
        for r in 0..self.rank() {
            for s in 0..self.rank() {
                acc += self.weights[r] * self.weights[s] * ga[(r, s)] * gb[(r, s)] * gc[(r, s)];
            }
        }
        acc
    }

    /// `<X, X̂>` over the stored entries of `x`.
    pub fn inner_with(&self, x: &SparseTensor3) -> f64 {
        x.entries
            .iter()
            .map(|&(i, j, k, v)| v * self.value_at(i, j, k))
            .sum()
    }

    /// Rescales columns to unit norm, fixes signs and sorts by weight.
    pub fn normalize(&mut self) {
        let rank = self.rank();
        for r in 0..rank {
            let mut w = self.weights[r];
            for f in [&mut self.a, &mut self.b, &mut self.c] {
                let n = f.column(r).norm();
                if n > 0.0 {
                    f.column_mut(r).scale_mut(1.0 / n);
                    w *= n;
                } else {
                    w = 0.0;
                }
            }
            let sa = dominant_sign(self.a.column(r).as_slice());
            let sb = dominant_sign(self.b.column(r).as_slice());
            let mut sc = sa * sb;
            if w < 0.0 {
                w = -w;
                sc = -sc;
            }
            self.a.column_mut(r).scale_mut(sa);
            self.b.column_mut(r).scale_mut(sb);
            self.c.column_mut(r).scale_mut(sc);
            self.weights[r] = w;
        }
        let mut order: Vec<usize> = (0..rank).collect();
        order.sort_by(|&p, &q| self.weights[q].total_cmp(&self.weights[p]).then(p.cmp(&q)));
        let permute = |f: &DMatrix<f64>| DMatrix::from_fn(f.nrows(), rank, |i, r| f[(i, order[r])]);
        self.a = permute(&self.a);
        self.b = permute(&self.b);
        self.c = permute(&self.c);
        self.weights = order.iter().map(|&r| self.weights[r]).collect();
    }
}

fn dominant_sign(col: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &v in col {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `||X - X̂||_F^2` without densifying `X`.
pub fn squared_residual(model: &CpModel, x: &SparseTensor3) -> Result<f64> {
    if model.shape() != x.shape {
        return Err(Error::ShapeMismatch(x.shape, model.shape()));
    }
    if x.cells() <= EXACT_RESIDUAL_CELLS {
        Ok(exact_squared_residual(model, x))
    } else {
        let on_support: f64 = x
            .entries
            .iter()
            .map(|&(i, j, k, v)| {
                let h = model.value_at(i, j, k);
                (v - h) * (v - h) - h * h
            })
            .sum();
        Ok((on_support + model.norm_squared()).max(0.0))
    }
}

/// Visits every cell; partial sums per mode-1 slice are combined in order.
fn exact_squared_residual(model: &CpModel, x: &SparseTensor3) -> f64 {
    let (m, t, o) = x.shape;
    let rank = model.rank();
    let mut slice_start = vec![0usize; m + 1];
    for e in &x.entries {
        slice_start[e.0 + 1] += 1;
    }
    for i in 0..m {
        slice_start[i + 1] += slice_start[i];
    }
    let partials = par::map_range(m, |i| {
        let slice = &x.entries[slice_start[i]..slice_start[i + 1]];
        let mut next = 0;
        let mut acc = 0.0;
        let mut u = vec![0.0; rank];
        for j in 0..t {
            for r in 0..rank {
                u[r] = model.weights[r] * model.a[(i, r)] * model.b[(j, r)];
            }
            for k in 0..o {
                let mut h = 0.0;
                for r in 0..rank {
                    h += u[r] * model.c[(k, r)];
                }
                let v = match slice.get(next) {
                    Some(&(_, jj, kk, v)) if jj == j && kk == k => {
                        next += 1;
                        v
                    }
                    _ => 0.0,
                };
                acc += (v - h) * (v - h);
            }
        }
        acc
    });
    partials.into_iter().sum()
}

/// `||X - X̂||_F / ||X||_F`.
pub fn reconstruction_error(model: &CpModel, x: &SparseTensor3) -> Result<f64> {
    let norm_sq = x.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok((squared_residual(model, x)? / norm_sq).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpOptions {
    pub max_sweeps: usize,
    /// Stop once the fit `1 - ||X - X̂|| / ||X||` changes by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl CpOptions {
    pub fn with_seed(seed: u64) -> Self {
        CpOptions {
            max_sweeps: 200,
            tol: 1e-6,
            seed,
        }
    }
}

/// Per-sweep diagnostics of an ALS run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlsTrace {
    pub sweeps: usize,
    pub converged: bool,
    /// `||X - X̂||^2 / ||X||^2` after each sweep.
    pub relative_sq_errors: Vec<f64>,
}

/// Nonzeros grouped by one mode's index, for row-parallel MTTKRP.
struct ModeIndex {
    row_ptr: Vec<usize>,
    order: Vec<usize>,
}

impl ModeIndex {
    fn build(x: &SparseTensor3, mode: usize) -> Self {
        let dim = [x.shape.0, x.shape.1, x.shape.2][mode];
        let key = |e: &Entry| [e.0, e.1, e.2][mode];
        let mut order: Vec<usize> = (0..x.entries.len()).collect();
        order.sort_by_key(|&p| key(&x.entries[p]));
        let mut row_ptr = vec![0usize; dim + 1];
        for e in &x.entries {
            row_ptr[key(e) + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        ModeIndex { row_ptr, order }
    }
}

/// Matricized tensor times Khatri-Rao product for one mode.
fn mttkrp(
    x: &SparseTensor3,
    index: &ModeIndex,
    mode: usize,
    factors: [&DMatrix<f64>; 3],
) -> DMatrix<f64> {
    let rank = factors[0].ncols();
    let dim = index.row_ptr.len() - 1;
    let rows = par::map_range(dim, |row| {
        let mut acc = vec![0.0; rank];
        for &p in &index.order[index.row_ptr[row]..index.row_ptr[row + 1]] {
            let (i, j, k, v) = x.entries[p];
            let (f1, f2, p1, p2) = match mode {
                0 => (factors[1], factors[2], j, k),
                1 => (factors[0], factors[2], i, k),
                _ => (factors[0], factors[1], i, j),
            };
            for r in 0..rank {
                acc[r] += v * f1[(p1, r)] * f2[(p2, r)];
            }
        }
        acc
    });
    DMatrix::from_fn(dim, rank, |i, r| rows[i][r])
}

fn random_unit_columns(rows: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut f = DMatrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0));
    for mut col in f.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    f
}

/// Rank-`rank` CP decomposition by alternating least squares.
pub fn cp_als(x: &SparseTensor3, rank: usize, opts: &CpOptions) -> Result<CpModel> {
    cp_als_traced(x, rank, opts).map(|(model, _)| model)
}

/// [`cp_als`] plus the per-sweep error history.
pub fn cp_als_traced(
    x: &SparseTensor3,
    rank: usize,
    opts: &CpOptions,
) -> Result<(CpModel, AlsTrace)> {
    let (m, t, o) = x.shape;
    let max_rank = (t * o).min(m * o).min(m * t);
    if rank == 0 || rank > max_rank {
        return Err(Error::param(
            "rank",
            format!("must lie in 1..={max_rank} for shape {:?}", x.shape),
        ));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if opts.max_sweeps == 0 {
        return Err(Error::param("max_sweeps", "must be at least 1"));
    }
    x.check_finite()?;
    let norm_sq = x.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::ZeroTensor);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut factors = [
        random_unit_columns(m, rank, &mut rng),
        random_unit_columns(t, rank, &mut rng),
        random_unit_columns(o, rank, &mut rng),
    ];
    let mut weights = vec![1.0; rank];
    let indices = [
        ModeIndex::build(x, 0),
        ModeIndex::build(x, 1),
        ModeIndex::build(x, 2),
    ];

    let mut history = Vec::new();
    let mut prev_fit: Option<f64> = None;
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        for mode in 0..3 {
            let rhs = mttkrp(
                x,
                &indices[mode],
                mode,
                [&factors[0], &factors[1], &factors[2]],
            );
            let (p, q) = match mode {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let gram = (factors[p].transpose() * &factors[p])
                .component_mul(&(factors[q].transpose() * &factors[q]));
            let mut updated = least_squares_solve(&gram, &rhs.transpose())?.transpose();
            for (r, w) in weights.iter_mut().enumerate() {
                let n = updated.column(r).norm();
                *w = n;
                if n > 0.0 {
                    updated.column_mut(r).scale_mut(1.0 / n);
                }
            }
            factors[mode] = updated;
        }
        let model = CpModel {
            weights: weights.clone(),
            a: factors[0].clone(),
            b: factors[1].clone(),
            c: factors[2].clone(),
        };
        let rel_sq = squared_residual(&model, x)? / norm_sq;
        history.push(rel_sq);
        let fit = 1.0 - rel_sq.sqrt();
        if let Some(prev) = prev_fit {
            if (fit - prev).abs() < opts.tol {
                converged = true;
                break;
            }
        }
        if rel_sq == 0.0 {
            converged = true;
            break;
        }
        prev_fit = Some(fit);
    }

    let [a, b, c] = factors;
    let mut model = CpModel { weights, a, b, c };
    model.normalize();
    let trace = AlsTrace {
        sweeps: history.len(),
        converged,
        relative_sq_errors: history,
    };
    Ok((model, trace))
}
