use nalgebra::{DMatrix, DVector};

use crate::cone::{Cone, RowBlock, RowKind};
use crate::{ConicError, Real, Result};

/// Coordinate-format sparse matrix. Duplicate entries are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct Triplets<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Real> Triplets<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != T::zero() {
            self.entries.push((row, col, value));
        }
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let mut t = Triplets::new(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                t.push(i, j, m[(i, j)]);
            }
        }
        t
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        let mut y = DVector::zeros(self.nrows);
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// True when every stored entry sits on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(i, j, _)| i == j)
    }
}

/// One block of cone rows: `b − A x ∈ cone`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeBlock<T> {
    pub a: Triplets<T>,
    pub b: DVector<T>,
    pub cone: Cone,
}

/// Canonical program consumed by [`crate::solve`].
///
/// Dual variables are ordered as: equality rows first, then cone blocks in
/// the order they are listed.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram<T> {
    pub var_count: usize,
    pub p: Triplets<T>,
    pub q: DVector<T>,
    pub a_eq: Triplets<T>,
    pub b_eq: DVector<T>,
    pub cone_rows: Vec<ConeBlock<T>>,
    /// Constant added to the objective; does not affect the solve.
    pub offset: T,
}

impl<T: Real> ConicProgram<T> {
    pub fn eq_rows(&self) -> usize {
        self.a_eq.nrows
    }

    pub fn row_count(&self) -> usize {
        self.a_eq.nrows + self.cone_rows.iter().map(|c| c.cone.dim()).sum::<usize>()
    }

    /// `½ xᵀ P x + qᵀ x + offset`.
    pub fn objective(&self, x: &DVector<T>) -> T {
        let px = self.p.mul_vec(x);
        T::lit(0.5) * x.dot(&px) + self.q.dot(x) + self.offset
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.var_count;
        let mismatch = |what: String| Err(ConicError::DimensionMismatch(what));
        if self.p.nrows != n || self.p.ncols != n {
            return mismatch(format!("P is {}x{}, expected {n}x{n}", self.p.nrows, self.p.ncols));
        }
        if self.q.len() != n {
            return mismatch(format!("q has length {}, expected {n}", self.q.len()));
        }
        if self.a_eq.ncols != n || self.a_eq.nrows != self.b_eq.len() {
            return mismatch(format!(
                "Aeq is {}x{} with beq of length {}",
                self.a_eq.nrows,
                self.a_eq.ncols,
                self.b_eq.len()
            ));
        }
        for (k, blk) in self.cone_rows.iter().enumerate() {
            let d = blk.cone.dim();
            if blk.a.ncols != n || blk.a.nrows != d || blk.b.len() != d || d == 0 {
                return mismatch(format!(
                    "cone block {k}: A is {}x{}, b has length {}, cone dim {d}",
                    blk.a.nrows,
                    blk.a.ncols,
                    blk.b.len()
                ));
            }
        }
        self.check_psd()
    }

    fn check_psd(&self) -> Result<()> {
        if self.p.nnz() == 0 {
            return Ok(());
        }
        let dense = self.p.to_dense();
        let scale = dense.iter().fold(T::one(), |a, v| a.max(v.abs()));
        let tol = T::default_epsilon().sqrt() * scale;
        for i in 0..self.var_count {
            for j in 0..i {
                if (dense[(i, j)] - dense[(j, i)]).abs() > tol {
                    return Err(ConicError::NotPositiveSemidefinite);
                }
            }
        }
        if self.p.is_diagonal() {
            return if dense.diagonal().iter().all(|v| *v >= T::zero()) {
                Ok(())
            } else {
                Err(ConicError::NotPositiveSemidefinite)
            };
        }
        let mut shifted = dense;
        for i in 0..self.var_count {
            shifted[(i, i)] += tol;
        }
        shifted
            .cholesky()
            .map(|_| ())
            .ok_or(ConicError::NotPositiveSemidefinite)
    }

    /// Stacks all rows into one dense system `b − A x ∈ Z × K₁ × … × K_r`.
    pub(crate) fn stacked(&self) -> Stacked<T> {
        let n = self.var_count;
        let m = self.row_count();
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        let mut blocks = Vec::with_capacity(self.cone_rows.len() + 1);
        let meq = self.a_eq.nrows;
        for &(i, j, v) in &self.a_eq.entries {
            a[(i, j)] += v;
        }
        b.rows_mut(0, meq).copy_from(&self.b_eq);
        if meq > 0 {
            blocks.push(RowBlock { kind: RowKind::Zero, start: 0, len: meq });
        }
        let mut off = meq;
        for blk in &self.cone_rows {
            for &(i, j, v) in &blk.a.entries {
                a[(off + i, j)] += v;
            }
            let d = blk.cone.dim();
            b.rows_mut(off, d).copy_from(&blk.b);
            let kind = match blk.cone {
                Cone::Nonneg(_) => RowKind::Nonneg,
                Cone::SecondOrder(_) => RowKind::Soc,
            };
            blocks.push(RowBlock { kind, start: off, len: d });
            off += d;
        }
        let quad = if self.p.is_diagonal() {
            let mut d = DVector::zeros(n);
            for &(i, _, v) in &self.p.entries {
                d[i] += v;
            }
            Quad::Diagonal(d)
        } else {
            Quad::Dense(self.p.to_dense())
        };
        Stacked { p: quad, q: self.q.clone(), a, b, blocks }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Quad<T: Real> {
    Diagonal(DVector<T>),
    Dense(DMatrix<T>),
}

impl<T: Real> Quad<T> {
    pub fn mul(&self, x: &DVector<T>) -> DVector<T> {
        match self {
            Quad::Diagonal(d) => d.component_mul(x),
            Quad::Dense(p) => p * x,
        }
    }
}

/// Dense working form shared by the solver and the residual checks.
#[derive(Clone, Debug)]
pub(crate) struct Stacked<T: Real> {
    pub p: Quad<T>,
    pub q: DVector<T>,
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub blocks: Vec<RowBlock>,
}

impl<T: Real> Stacked<T> {
    pub fn project(&self, s: &mut DVector<T>) {
        for blk in &self.blocks {
            crate::cone::project_cone(blk.kind, &mut s.as_mut_slice()[blk.start..blk.start + blk.len]);
        }
    }

    pub fn project_dual(&self, y: &mut DVector<T>) {
        for blk in &self.blocks {
            crate::cone::project_dual_cone(blk.kind, &mut y.as_mut_slice()[blk.start..blk.start + blk.len]);
        }
    }

    pub fn has_soc(&self) -> bool {
        self.blocks.iter().any(|b| b.kind == RowKind::Soc)
    }
}
