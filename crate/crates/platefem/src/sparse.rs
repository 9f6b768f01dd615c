//! Symmetric sparse matrices, homogeneous constraint elimination, and the
//! linear solver behind every discretization in the crate.
//!
//! Element loops push `(row, col, value)` triplets; [`SymSparseMatrix::assemble`]
//! compresses them to CSR, summing duplicates in insertion order so repeated
//! runs produce bit-identical matrices. Essential boundary conditions are
//! *eliminated*, not penalized: a [`LinearConstraintSet`] carries per-block
//! orthonormal null-space bases, and [`reduce`] forms `Zᵀ A Z`, which stays
//! symmetric positive definite for every boundary mode, including the
//! rank-deficient tangent pairs that full simple support produces at boundary
//! vertices.
//!
//! Solves go through a sparse Cholesky factorization (via `faer`) with Jacobi
//! equilibration and compensated-residual defect correction up to the
//! residual target (or, for the finest fourth-order systems, up to the
//! double-precision rounding floor — see [`Factorization::solve`]); systems
//! beyond [`DIRECT_DOF_LIMIT`] fall back to diagonally preconditioned
//! conjugate gradients. Quintic plate matrices are notoriously ill
//! conditioned, so the report carries a power-iteration condition estimate.

use crate::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;
use std::time::Instant;

/// Largest dimension handed to the direct factorization.
pub const DIRECT_DOF_LIMIT: usize = 200_000;
/// Relative residual every successful solve must meet (systems whose
/// rounding floor exceeds this are accepted at the floor instead).
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Convergence target for the conjugate-gradient fallback.
pub const PCG_TOL: f64 = 1e-12;
/// Singular values below `RANK_TOL * σ_max` count as zero in constraint blocks.
pub const RANK_TOL: f64 = 1e-10;
/// Power-iteration length for the condition estimate.
pub const CONDITION_STEPS: usize = 50;

/// Unassembled element contributions.
#[derive(Clone, Debug)]
pub struct TripletList {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletList {
    pub fn new(dim: usize) -> Self {
        TripletList {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// Scatter a dense element block: `block[(a, b)]` is added at
    /// `(dofs[a], dofs[b])`.
    pub fn add_dense_block(&mut self, dofs: &[usize], block: &DMatrix<f64>) {
        debug_assert_eq!(block.nrows(), dofs.len());
        debug_assert_eq!(block.ncols(), dofs.len());
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                let v = block[(a, b)];
                if v != 0.0 {
                    self.push(ga, gb, v);
                }
            }
        }
    }

    /// Concatenate another list over the same dof set (used to add
    /// stabilization or penalty terms to an energy matrix).
    pub fn extend_from(&mut self, other: &TripletList) {
        debug_assert_eq!(self.dim, other.dim);
        self.entries.extend_from_slice(&other.entries);
    }
}

/// Compressed sparse row storage of a symmetric matrix (both triangles kept).
#[derive(Clone, Debug)]
pub struct SymSparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymSparseMatrix {
    /// Compress a triplet list, summing duplicates in insertion order
    /// (deterministic for a fixed triplet order).
    pub fn assemble(triplets: &TripletList) -> Result<Self> {
        let dim = triplets.dim;
        for &(i, j, _) in &triplets.entries {
            if i >= dim || j >= dim {
                return Err(Error::InvalidArgument(format!(
                    "triplet index ({i}, {j}) outside dimension {dim}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.entries.len()).collect();
        order.sort_by_key(|&k| {
            let (i, j, _) = triplets.entries[k];
            (i, j)
        });
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = triplets.entries[k];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SymSparseMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    /// The quadratic form `xᵀ A x` (energy evaluations).
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.matvec(x))
            .map(|(&xi, yi)| xi * yi)
            .sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// One homogeneous constraint block: `rows * u[dofs] = 0`.
#[derive(Clone, Debug)]
pub struct ConstraintBlock {
    /// Affected global dofs (unique, disjoint from every other block).
    pub dofs: Vec<usize>,
    /// `k x dofs.len()` coefficients, one constraint per row.
    pub rows: DMatrix<f64>,
}

#[derive(Clone, Debug)]
struct ReducedBlock {
    dofs: Vec<usize>,
    /// Original constraint rows, kept for verification.
    rows: DMatrix<f64>,
    /// Orthonormal null-space basis, `dofs.len() x null_dim`.
    basis: DMatrix<f64>,
}

/// A set of disjoint homogeneous constraint blocks with precomputed
/// null-space bases (rank decided by [`RANK_TOL`], so collinear tangents at
/// flat boundary vertices degrade gracefully instead of failing).
#[derive(Clone, Debug)]
pub struct LinearConstraintSet {
    dim: usize,
    blocks: Vec<ReducedBlock>,
}

impl LinearConstraintSet {
    /// No constraints: reduction is the identity.
    pub fn none(dim: usize) -> Self {
        LinearConstraintSet {
            dim,
            blocks: Vec::new(),
        }
    }

    /// Constrain each listed dof to zero.
    pub fn fix_dofs(dim: usize, dofs: impl IntoIterator<Item = usize>) -> Result<Self> {
        let blocks = dofs
            .into_iter()
            .map(|d| ConstraintBlock {
                dofs: vec![d],
                rows: DMatrix::from_element(1, 1, 1.0),
            })
            .collect();
        Self::new(dim, blocks)
    }

    pub fn new(dim: usize, blocks: Vec<ConstraintBlock>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut reduced = Vec::with_capacity(blocks.len());
        for (bid, block) in blocks.into_iter().enumerate() {
            let m = block.dofs.len();
            if m == 0 || block.rows.ncols() != m {
                return Err(Error::BadConstraint {
                    block: bid,
                    detail: format!(
                        "{} dofs with {}-column rows",
                        m,
                        block.rows.ncols()
                    ),
                });
            }
            for &d in &block.dofs {
                if d >= dim {
                    return Err(Error::BadConstraint {
                        block: bid,
                        detail: format!("dof {d} outside dimension {dim}"),
                    });
                }
                if std::mem::replace(&mut seen[d], true) {
                    return Err(Error::BadConstraint {
                        block: bid,
                        detail: format!("dof {d} appears in more than one block"),
                    });
                }
            }
            if block.rows.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadConstraint {
                    block: bid,
                    detail: "non-finite constraint coefficient".into(),
                });
            }
            let basis = null_space_basis(&block.rows);
            reduced.push(ReducedBlock {
                dofs: block.dofs,
                rows: block.rows,
                basis,
            });
        }
        // Canonical order: by smallest dof. Reduction output is then
        // independent of the order blocks were supplied in.
        reduced.sort_by_key(|b| b.dofs.iter().copied().min().unwrap());
        Ok(LinearConstraintSet {
            dim,
            blocks: reduced,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Null-space dimension of block `b` (how many free directions remain).
    pub fn block_null_dim(&self, b: usize) -> usize {
        self.blocks[b].basis.ncols()
    }

    /// Dimension after elimination.
    pub fn reduced_dim(&self) -> usize {
        let removed: usize = self
            .blocks
            .iter()
            .map(|b| b.dofs.len() - b.basis.ncols())
            .sum();
        self.dim - removed
    }

    /// Largest violation `|rows * x[dofs]|` over all blocks and constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for block in &self.blocks {
            for k in 0..block.rows.nrows() {
                let mut acc = 0.0;
                for (p, &d) in block.dofs.iter().enumerate() {
                    acc += block.rows[(k, p)] * x[d];
                }
                worst = worst.max(acc.abs());
            }
        }
        worst
    }
}

/// Orthonormal basis of the null space of `rows`, with rank cut at
/// [`RANK_TOL`] relative to the largest singular value.
fn null_space_basis(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let m = rows.ncols();
    if rows.nrows() == 0 {
        return DMatrix::identity(m, m);
    }
    // Pad to at least m rows so the thin SVD still carries all m right
    // singular vectors.
    let k = rows.nrows().max(m);
    let mut padded = DMatrix::zeros(k, m);
    padded.view_mut((0, 0), (rows.nrows(), m)).copy_from(rows);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd with v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = if sigma_max == 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * sigma_max)
            .count()
    };
    let null_dim = m - rank;
    let mut basis = DMatrix::zeros(m, null_dim);
    for q in 0..null_dim {
        for p in 0..m {
            basis[(p, q)] = v_t[(rank + q, p)];
        }
    }
    basis
}

/// Row-wise view of the elimination matrix `Z`: for each full dof, the
/// reduced columns it maps to and with what weight.
#[derive(Clone, Debug)]
pub struct Reduction {
    full_dim: usize,
    reduced_dim: usize,
    row_map: Vec<Vec<(usize, f64)>>,
}

impl Reduction {
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }

    /// `x = Z x_reduced`; satisfies every constraint by construction.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        debug_assert_eq!(reduced.len(), self.reduced_dim);
        let mut full = vec![0.0; self.full_dim];
        for (i, cols) in self.row_map.iter().enumerate() {
            full[i] = cols.iter().map(|&(q, w)| w * reduced[q]).sum();
        }
        full
    }

    /// `Zᵀ v` (restriction of loads and residuals).
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.full_dim);
        let mut reduced = vec![0.0; self.reduced_dim];
        for (i, cols) in self.row_map.iter().enumerate() {
            for &(q, w) in cols {
                reduced[q] += w * v[i];
            }
        }
        reduced
    }
}

/// Eliminate constraints: returns `(Zᵀ A Z, Zᵀ b, Z)` with reduced columns
/// ordered by ascending smallest dof, so the result does not depend on the
/// order constraint blocks were supplied in.
pub fn reduce(
    a: &SymSparseMatrix,
    b: &[f64],
    constraints: &LinearConstraintSet,
) -> Result<(SymSparseMatrix, Vec<f64>, Reduction)> {
    if a.dim() != constraints.dim() || b.len() != a.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: matrix {}, rhs {}, constraints {}",
            a.dim(),
            b.len(),
            constraints.dim()
        )));
    }
    let dim = a.dim();
    let mut block_of = vec![usize::MAX; dim];
    let mut block_min = vec![usize::MAX; constraints.blocks.len()];
    for (bid, block) in constraints.blocks.iter().enumerate() {
        for &d in &block.dofs {
            block_of[d] = bid;
        }
        block_min[bid] = block.dofs.iter().copied().min().unwrap();
    }

    let mut row_map: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    let mut next_col = 0usize;
    for dof in 0..dim {
        if block_of[dof] == usize::MAX {
            row_map[dof].push((next_col, 1.0));
            next_col += 1;
        } else if block_min[block_of[dof]] == dof {
            let block = &constraints.blocks[block_of[dof]];
            for (p, &d) in block.dofs.iter().enumerate() {
                for q in 0..block.basis.ncols() {
                    let w = block.basis[(p, q)];
                    if w != 0.0 {
                        row_map[d].push((next_col + q, w));
                    }
                }
            }
            next_col += block.basis.ncols();
        }
    }
    let reduction = Reduction {
        full_dim: dim,
        reduced_dim: next_col,
        row_map,
    };

    let mut triplets = TripletList::new(reduction.reduced_dim);
    for i in 0..dim {
        if reduction.row_map[i].is_empty() {
            continue;
        }
        for (j, v) in a.row(i) {
            for &(p, wi) in &reduction.row_map[i] {
                for &(q, wj) in &reduction.row_map[j] {
                    triplets.push(p, q, wi * v * wj);
                }
            }
        }
    }
    let reduced_a = SymSparseMatrix::assemble(&triplets)?;
    let reduced_b = reduction.restrict(b);
    Ok((reduced_a, reduced_b, reduction))
}

/// How a solve was performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Pcg,
}

/// Outcome of a successful solve.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub method: SolveMethod,
    /// Refinement steps (direct) or CG iterations.
    pub iterations: usize,
    /// `‖b - Ax‖₂ / ‖b‖₂` of the returned solution; at most [`RESIDUAL_TOL`]
    /// unless the system's double-precision rounding floor lies above it.
    pub rel_residual: f64,
    pub wall_seconds: f64,
    /// Power-iteration estimate of `λ_max(A) / λ_min(A)`; direct solves only.
    pub cond_estimate: Option<f64>,
}

/// Sparse Cholesky factorization of the Jacobi-equilibrated matrix
/// `D A D`, `D = diag(A)^(-1/2)`, reusable across right-hand sides.
pub struct Factorization<'a> {
    a: &'a SymSparseMatrix,
    scale: Vec<f64>,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

/// Factor a symmetric positive definite matrix.
pub fn factor(a: &SymSparseMatrix) -> Result<Factorization<'_>> {
    let dim = a.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty system".into()));
    }
    let mut scale = a.diagonal();
    for (i, d) in scale.iter_mut().enumerate() {
        if *d <= 0.0 || !d.is_finite() {
            return Err(Error::Solve(format!(
                "diagonal entry {i} is {d}; matrix is not positive definite"
            )));
        }
        *d = 1.0 / d.sqrt();
    }
    let mut trips = Vec::with_capacity(a.nnz());
    for i in 0..dim {
        for (j, v) in a.row(i) {
            trips.push(Triplet::new(i, j, scale[i] * v * scale[j]));
        }
    }
    let scaled = SparseColMat::try_new_from_triplets(dim, dim, &trips)
        .map_err(|e| Error::Solve(format!("sparse structure: {e:?}")))?;
    let llt = scaled
        .as_ref()
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| Error::Solve(format!("Cholesky factorization failed: {e:?}")))?;
    Ok(Factorization { a, scale, llt })
}

/// Upper bound on defect-correction steps in [`Factorization::solve`]; each
/// step contracts the error by roughly `eps * cond(A)`, so the bound is only
/// reached when the target sits below the attainable rounding floor.
const MAX_REFINE_STEPS: usize = 12;

/// `eps * ‖ |A| |x| ‖ / ‖b‖`: the relative residual produced by merely
/// rounding the exact solution to doubles. A computed residual at or below
/// this level is certified unimprovable in this precision — for the finest
/// fourth-order systems (condition beyond 1e8) the floor rises above
/// [`RESIDUAL_TOL`], and no double-precision vector satisfies the target.
fn rounding_floor(a: &SymSparseMatrix, x: &[f64], norm_b: f64) -> f64 {
    let mut y = vec![0.0; a.dim()];
    for (i, yi) in y.iter_mut().enumerate() {
        for (j, v) in a.row(i) {
            *yi += v.abs() * x[j].abs();
        }
    }
    f64::EPSILON * norm2(&y) / norm_b
}

/// `b - A x` with FMA-exact products and compensated accumulation. Plain
/// floating-point residuals saturate near `eps * cond(A)`, which for the
/// finest plate systems sits at the residual target itself; the compensated
/// evaluation keeps the defect meaningful there so correction steps can
/// still make progress.
fn compensated_residual(a: &SymSparseMatrix, x: &[f64], b: &[f64], r: &mut Vec<f64>) {
    r.clear();
    for i in 0..a.dim() {
        let mut sum = b[i];
        let mut comp = 0.0;
        for (j, v) in a.row(i) {
            let p = -v * x[j];
            let e = (-v).mul_add(x[j], -p);
            let t = sum + p;
            comp += if sum.abs() >= p.abs() {
                (sum - t) + p
            } else {
                (p - t) + sum
            };
            sum = t;
            comp += e;
        }
        r.push(sum + comp);
    }
}

impl Factorization<'_> {
    /// `A⁻¹ v` through the equilibrated factors.
    fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        let dim = v.len();
        let rhs = faer::Mat::from_fn(dim, 1, |i, _| self.scale[i] * v[i]);
        let y = self.llt.solve(&rhs);
        (0..dim).map(|i| self.scale[i] * y[(i, 0)]).collect()
    }

    /// Solve to [`RESIDUAL_TOL`], polishing with compensated-residual defect
    /// correction. When the target is not representable — the iteration has
    /// stalled at or below the rounding floor `eps ‖|A||x|‖ / ‖b‖` — the
    /// iterate is accepted as exact-to-precision and the achieved residual
    /// is reported; a stall above the floor is still an error.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
        let start = Instant::now();
        let dim = self.a.dim();
        if b.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "rhs length {} vs dimension {dim}",
                b.len()
            )));
        }
        let norm_b = norm2(b);
        if norm_b == 0.0 {
            return Ok((
                vec![0.0; dim],
                SolverReport {
                    method: SolveMethod::Direct,
                    iterations: 0,
                    rel_residual: 0.0,
                    wall_seconds: start.elapsed().as_secs_f64(),
                    cond_estimate: None,
                },
            ));
        }
        let mut x = self.apply_inverse(b);
        let mut r = Vec::with_capacity(dim);
        compensated_residual(self.a, &x, b, &mut r);
        let mut rel = norm2(&r) / norm_b;
        let mut iterations = 0;
        while rel > RESIDUAL_TOL && iterations < MAX_REFINE_STEPS {
            let dx = self.apply_inverse(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
            compensated_residual(self.a, &candidate, b, &mut r);
            let next = norm2(&r) / norm_b;
            iterations += 1;
            if next >= rel {
                break;
            }
            x = candidate;
            rel = next;
        }
        if rel > RESIDUAL_TOL {
            let floor = rounding_floor(self.a, &x, norm_b);
            if rel > floor {
                return Err(Error::Solve(format!(
                    "relative residual {rel:.3e} after iterative refinement \
                     (target {RESIDUAL_TOL:.1e}, rounding floor {floor:.1e})"
                )));
            }
        }
        let cond = condition_estimate(self.a, self, CONDITION_STEPS);
        Ok((
            x,
            SolverReport {
                method: SolveMethod::Direct,
                iterations,
                rel_residual: rel,
                wall_seconds: start.elapsed().as_secs_f64(),
                cond_estimate: Some(cond),
            },
        ))
    }
}

/// Solve `A x = b` for symmetric positive definite `A`: direct Cholesky up
/// to [`DIRECT_DOF_LIMIT`] unknowns, preconditioned conjugate gradients
/// beyond. Deterministic for a fixed matrix.
pub fn solve(a: &SymSparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
    if a.dim() <= DIRECT_DOF_LIMIT {
        factor(a)?.solve(b)
    } else {
        pcg(a, b)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Deterministic pseudo-random start vector for power iterations.
fn seed_vector(dim: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..dim)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            // Map the top bits to (-1, 1).
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

/// Crude condition estimate: `steps` power iterations on `A` for the largest
/// eigenvalue and on `A⁻¹` (through the factorization) for the smallest.
pub fn condition_estimate(a: &SymSparseMatrix, f: &Factorization<'_>, steps: usize) -> f64 {
    let dim = a.dim();
    let mut v = seed_vector(dim);
    let mut lambda_max = 0.0;
    for _ in 0..steps {
        let w = a.matvec(&v);
        let n = norm2(&w);
        if n == 0.0 {
            return f64::INFINITY;
        }
        lambda_max = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        v = w.iter().map(|x| x / n).collect();
    }
    let mut u = seed_vector(dim);
    let mut inv_lambda_min = 0.0;
    for _ in 0..steps {
        let w = f.apply_inverse(&u);
        let n = norm2(&w);
        if n == 0.0 {
            return f64::INFINITY;
        }
        inv_lambda_min = u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        u = w.iter().map(|x| x / n).collect();
    }
    (lambda_max * inv_lambda_min).abs()
}

/// Conjugate gradients with Jacobi preconditioning, for systems too large to
/// factor directly.
fn pcg(a: &SymSparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
    let start = Instant::now();
    let dim = a.dim();
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; dim],
            SolverReport {
                method: SolveMethod::Pcg,
                iterations: 0,
                rel_residual: 0.0,
                wall_seconds: start.elapsed().as_secs_f64(),
                cond_estimate: None,
            },
        ));
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::Solve("non-positive diagonal in PCG".into()));
    }
    let precondition =
        |r: &[f64]| -> Vec<f64> { r.iter().zip(&diag).map(|(ri, di)| ri / di).collect() };

    let mut x = vec![0.0; dim];
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iterations = 100_000;
    for it in 1..=max_iterations {
        let ap = a.matvec(&p);
        let p_ap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if p_ap <= 0.0 {
            return Err(Error::Solve(format!(
                "PCG breakdown at iteration {it}: non-positive curvature {p_ap:.3e}"
            )));
        }
        let alpha = rz / p_ap;
        for i in 0..dim {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / norm_b;
        if rel <= PCG_TOL {
            return Ok((
                x,
                SolverReport {
                    method: SolveMethod::Pcg,
                    iterations: it,
                    rel_residual: rel,
                    wall_seconds: start.elapsed().as_secs_f64(),
                    cond_estimate: None,
                },
            ));
        }
        z = precondition(&r);
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..dim {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solve(format!(
        "PCG did not reach {PCG_TOL:.1e} within {max_iterations} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix_from(dim: usize, entries: &[(usize, usize, f64)]) -> SymSparseMatrix {
        let mut t = TripletList::new(dim);
        for &(i, j, v) in entries {
            t.push(i, j, v);
        }
        SymSparseMatrix::assemble(&t).unwrap()
    }

    #[test]
    fn duplicates_sum_and_bounds_are_checked() {
        let a = matrix_from(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);

        let empty = SymSparseMatrix::assemble(&TripletList::new(3)).unwrap();
        assert_eq!(empty.nnz(), 0);
        assert_eq!(empty.matvec(&[1.0, 2.0, 3.0]), vec![0.0; 3]);

        let mut bad = TripletList::new(2);
        bad.push(0, 2, 1.0);
        assert!(matches!(
            SymSparseMatrix::assemble(&bad),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn assembly_is_deterministic() {
        let entries = [(1usize, 0usize, 0.1), (0, 0, 0.7), (1, 0, 0.2), (0, 1, 0.3)];
        let a = matrix_from(2, &entries);
        let b = matrix_from(2, &entries);
        assert_eq!(a.values, b.values);
        assert_eq!(a.col_idx, b.col_idx);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = matrix_from(3, &[(0, 0, 2.0), (0, 2, -1.0), (2, 0, -1.0), (1, 1, 4.0), (2, 2, 3.0)]);
        let x = [1.0, 2.0, 3.0];
        let dense = a.to_dense();
        let y = a.matvec(&x);
        for i in 0..3 {
            let want: f64 = (0..3).map(|j| dense[(i, j)] * x[j]).sum();
            assert_eq!(y[i], want);
        }
        assert_eq!(a.quadratic_form(&x), 2.0 - 6.0 + 16.0 + 27.0);
    }

    #[test]
    fn fixing_a_dof_removes_its_row_and_column() {
        let a = matrix_from(
            3,
            &[(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (0, 1, 1.0), (1, 0, 1.0)],
        );
        let b = [1.0, 2.0, 3.0];
        let c = LinearConstraintSet::fix_dofs(3, [1]).unwrap();
        assert_eq!(c.reduced_dim(), 2);
        let (ar, br, z) = reduce(&a, &b, &c).unwrap();
        assert_eq!(ar.dim(), 2);
        assert_eq!(ar.get(0, 0), 2.0);
        assert_eq!(ar.get(1, 1), 2.0);
        assert_eq!(ar.get(0, 1), 0.0);
        assert_eq!(br, vec![1.0, 3.0]);
        let x = z.expand(&[0.5, 1.5]);
        assert_eq!(x, vec![0.5, 0.0, 1.5]);
    }

    #[test]
    fn empty_constraint_set_is_identity() {
        let a = matrix_from(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.5)]);
        let b = [1.0, -1.0];
        let (ar, br, z) = reduce(&a, &b, &LinearConstraintSet::none(2)).unwrap();
        assert_eq!(ar.to_dense(), a.to_dense());
        assert_eq!(br, b.to_vec());
        assert_eq!(z.expand(&br), b.to_vec());
    }

    /// The full simple-support block at a boundary vertex: value, both
    /// tangential derivatives, and both tangential-tangential Hessian entries
    /// vanish. With two independent tangents that is 5 constraints on the 6
    /// vertex dofs (value, gradient, Hessian), leaving exactly one direction.
    fn support_block(t1: [f64; 2], t2: [f64; 2]) -> ConstraintBlock {
        let mut rows = DMatrix::zeros(5, 6);
        rows[(0, 0)] = 1.0;
        for (r, t) in [(1, t1), (2, t2)] {
            rows[(r, 1)] = t[0];
            rows[(r, 2)] = t[1];
        }
        for (r, t) in [(3, t1), (4, t2)] {
            rows[(r, 3)] = t[0] * t[0];
            rows[(r, 4)] = 2.0 * t[0] * t[1];
            rows[(r, 5)] = t[1] * t[1];
        }
        ConstraintBlock {
            dofs: (0..6).collect(),
            rows,
        }
    }

    #[test]
    fn full_support_block_leaves_one_direction() {
        let c = LinearConstraintSet::new(6, vec![support_block([1.0, 0.0], [0.6, 0.8])]).unwrap();
        assert_eq!(c.block_null_dim(0), 1);
        assert_eq!(c.reduced_dim(), 1);
        // The surviving direction satisfies all five constraints.
        let a = matrix_from(6, &(0..6).map(|i| (i, i, 1.0)).collect::<Vec<_>>());
        let (_, _, z) = reduce(&a, &[0.0; 6], &c).unwrap();
        let x = z.expand(&[1.0]);
        assert!(c.max_violation(&x) <= 1e-12);
    }

    #[test]
    fn collinear_tangents_lose_rank_gracefully() {
        // A degenerate "corner" where both tangents coincide: only 3
        // independent constraints remain, so 3 directions survive.
        let c = LinearConstraintSet::new(6, vec![support_block([1.0, 0.0], [-1.0, 0.0])]).unwrap();
        assert_eq!(c.block_null_dim(0), 3);
    }

    #[test]
    fn block_order_does_not_change_the_reduction() {
        let a = matrix_from(
            4,
            &[
                (0, 0, 4.0),
                (1, 1, 5.0),
                (2, 2, 6.0),
                (3, 3, 7.0),
                (0, 3, 1.0),
                (3, 0, 1.0),
            ],
        );
        let b = [1.0, 2.0, 3.0, 4.0];
        let block_a = ConstraintBlock {
            dofs: vec![0, 1],
            rows: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
        };
        let block_b = ConstraintBlock {
            dofs: vec![2, 3],
            rows: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        };
        let c1 = LinearConstraintSet::new(4, vec![block_a.clone(), block_b.clone()]).unwrap();
        let c2 = LinearConstraintSet::new(4, vec![block_b, block_a]).unwrap();
        let (a1, b1, z1) = reduce(&a, &b, &c1).unwrap();
        let (a2, b2, z2) = reduce(&a, &b, &c2).unwrap();
        assert_eq!(a1.to_dense(), a2.to_dense());
        assert_eq!(b1, b2);
        let (x1, _) = solve(&a1, &b1).unwrap();
        let (x2, _) = solve(&a2, &b2).unwrap();
        let e1 = z1.expand(&x1);
        let e2 = z2.expand(&x2);
        for (u, v) in e1.iter().zip(&e2) {
            assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn overlapping_blocks_are_rejected() {
        let block = |dofs: Vec<usize>| ConstraintBlock {
            rows: DMatrix::from_element(1, dofs.len(), 1.0),
            dofs,
        };
        let err = LinearConstraintSet::new(4, vec![block(vec![0, 1]), block(vec![1, 2])]);
        assert!(matches!(err, Err(Error::BadConstraint { block: 1, .. })));
    }

    #[test]
    fn solve_examples() {
        let eye = matrix_from(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let (x, report) = solve(&eye, &[3.0, -1.0, 0.5]).unwrap();
        assert_eq!(x, vec![3.0, -1.0, 0.5]);
        assert_eq!(report.method, SolveMethod::Direct);
        assert!(report.rel_residual <= RESIDUAL_TOL);

        let a = matrix_from(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let (x, report) = solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-12 && (x[1] - 1.0).abs() <= 1e-12);
        assert!(report.cond_estimate.unwrap() < 10.0);
    }

    #[test]
    fn indefinite_systems_error_out() {
        let a = matrix_from(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(Error::Solve(_))));
    }

    #[test]
    fn condition_estimate_tracks_diagonal_spread() {
        let a = matrix_from(2, &[(0, 0, 1.0), (1, 1, 100.0)]);
        let f = factor(&a).unwrap();
        let cond = condition_estimate(&a, &f, CONDITION_STEPS);
        assert!((50.0..200.0).contains(&cond), "estimate {cond}");
    }

    #[test]
    fn pcg_agrees_with_direct_on_a_small_spd_system() {
        // Tridiagonal SPD test matrix.
        let n = 50;
        let mut t = TripletList::new(n);
        for i in 0..n {
            t.push(i, i, 2.5);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let a = SymSparseMatrix::assemble(&t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x_direct, _) = solve(&a, &b).unwrap();
        let (x_pcg, report) = pcg(&a, &b).unwrap();
        assert_eq!(report.method, SolveMethod::Pcg);
        assert!(report.rel_residual <= PCG_TOL);
        for (u, v) in x_direct.iter().zip(&x_pcg) {
            assert!((u - v).abs() <= 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// CSR assembly against a dense accumulation oracle: identical sums
        /// (bitwise, since both add duplicates in insertion order).
        #[test]
        fn assembly_matches_dense_oracle(
            entries in proptest::collection::vec(
                (0usize..8, 0usize..8, -3.0f64..3.0),
                0..64,
            )
        ) {
            let mut t = TripletList::new(8);
            let mut dense = DMatrix::<f64>::zeros(8, 8);
            for &(i, j, v) in &entries {
                t.push(i, j, v);
                dense[(i, j)] += v;
            }
            let a = SymSparseMatrix::assemble(&t).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    prop_assert_eq!(a.get(i, j), dense[(i, j)]);
                }
            }
        }

        /// Null-space bases are orthonormal and annihilated by the rows.
        #[test]
        fn null_bases_are_orthonormal(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 12),
        ) {
            let rows = DMatrix::from_row_slice(3, 4, &coeffs);
            let basis = null_space_basis(&rows);
            let gram = basis.transpose() * &basis;
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((gram[(i, j)] - want).abs() <= 1e-12);
                }
            }
            let image = &rows * &basis;
            let scale = rows.amax().max(1e-30);
            prop_assert!(image.amax() <= 1e-10 * scale.max(1.0));
        }
    }
}
