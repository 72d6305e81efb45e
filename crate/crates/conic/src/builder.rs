//! Incremental construction of [`ConicProgram`]s from affine expressions.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::{Cone, ConeBlock, ConicProgram, Real, Triplets};

/// Contiguous range of decision variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarBlock {
    pub start: usize,
    pub len: usize,
}

impl VarBlock {
    pub fn index(&self, i: usize) -> usize {
        assert!(i < self.len, "variable {i} outside block of length {}", self.len);
        self.start + i
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    /// Extracts this block from a full primal vector.
    pub fn slice<T: Real>(&self, x: &DVector<T>) -> DVector<T> {
        x.rows(self.start, self.len).into_owned()
    }
}

/// Vector-valued affine function `G x + h` with sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineExpr<T> {
    rows: Vec<Vec<(usize, T)>>,
    constant: Vec<T>,
}

impl<T: Real> AffineExpr<T> {
    pub fn zeros(len: usize) -> Self {
        AffineExpr { rows: vec![Vec::new(); len], constant: vec![T::zero(); len] }
    }

    pub fn len(&self) -> usize {
        self.constant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constant.is_empty()
    }

    /// The variables of `block`, one per row.
    pub fn vars(block: VarBlock) -> Self {
        AffineExpr {
            rows: block.range().map(|j| vec![(j, T::one())]).collect(),
            constant: vec![T::zero(); block.len],
        }
    }

    pub fn var(index: usize) -> Self {
        AffineExpr { rows: vec![vec![(index, T::one())]], constant: vec![T::zero()] }
    }

    pub fn constant(values: &[T]) -> Self {
        AffineExpr { rows: vec![Vec::new(); values.len()], constant: values.to_vec() }
    }

    /// `M x_block`.
    pub fn from_matrix(m: &DMatrix<T>, block: VarBlock) -> Self {
        assert_eq!(m.ncols(), block.len, "matrix columns vs block length");
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter_map(|j| {
                        let v = m[(i, j)];
                        (v != T::zero()).then(|| (block.start + j, v))
                    })
                    .collect()
            })
            .collect();
        AffineExpr { rows, constant: vec![T::zero(); m.nrows()] }
    }

    pub fn plus(mut self, other: &AffineExpr<T>) -> Self {
        assert_eq!(self.len(), other.len(), "expression lengths");
        for (i, row) in other.rows.iter().enumerate() {
            self.rows[i].extend(row.iter().copied());
            self.constant[i] += other.constant[i];
        }
        self.compact()
    }

    pub fn minus(self, other: &AffineExpr<T>) -> Self {
        self.plus(&other.clone().scaled(-T::one()))
    }

    pub fn scaled(mut self, k: T) -> Self {
        for row in &mut self.rows {
            row.iter_mut().for_each(|(_, v)| *v *= k);
        }
        self.constant.iter_mut().for_each(|c| *c *= k);
        self
    }

    /// Adds `c` to the constant part.
    pub fn offset(mut self, c: &[T]) -> Self {
        assert_eq!(c.len(), self.len(), "offset length");
        self.constant.iter_mut().zip(c).for_each(|(a, b)| *a += *b);
        self
    }

    pub fn stack(parts: &[AffineExpr<T>]) -> Self {
        let mut out = AffineExpr { rows: Vec::new(), constant: Vec::new() };
        for p in parts {
            out.rows.extend(p.rows.iter().cloned());
            out.constant.extend(p.constant.iter().copied());
        }
        out
    }

    pub fn rows(&self, range: Range<usize>) -> Self {
        AffineExpr { rows: self.rows[range.clone()].to_vec(), constant: self.constant[range].to_vec() }
    }

    pub fn row(&self, i: usize) -> Self {
        self.rows(i..i + 1)
    }

    /// One-row expression holding the sum of all rows.
    pub fn sum(&self) -> Self {
        let mut row = Vec::new();
        let mut c = T::zero();
        for (r, k) in self.rows.iter().zip(&self.constant) {
            row.extend(r.iter().copied());
            c += *k;
        }
        AffineExpr { rows: vec![row], constant: vec![c] }.compact()
    }

    /// Left-multiplies by a dense matrix.
    pub fn left_mul(&self, m: &DMatrix<T>) -> Self {
        assert_eq!(m.ncols(), self.len(), "matrix columns vs expression length");
        let mut out = AffineExpr::zeros(m.nrows());
        for i in 0..m.nrows() {
            for k in 0..self.len() {
                let w = m[(i, k)];
                if w == T::zero() {
                    continue;
                }
                out.rows[i].extend(self.rows[k].iter().map(|&(j, v)| (j, v * w)));
                out.constant[i] += w * self.constant[k];
            }
        }
        out.compact()
    }

    pub fn evaluate(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.len(),
            self.rows
                .iter()
                .zip(&self.constant)
                .map(|(r, c)| r.iter().fold(*c, |a, &(j, v)| a + v * x[j])),
        )
    }

    fn compact(mut self) -> Self {
        for row in &mut self.rows {
            if row.len() < 2 {
                continue;
            }
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, T)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some((lj, lv)) if *lj == j => *lv += v,
                    _ => merged.push((j, v)),
                }
            }
            merged.retain(|&(_, v)| v != T::zero());
            *row = merged;
        }
        self
    }
}

/// Handle to a group of rows added through the builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintRef {
    block: Option<usize>,
    offset: usize,
    len: usize,
}

impl ConstraintRef {
    /// Positions of these rows in the solver's dual vector.
    pub fn rows<T: Real>(&self, prog: &ConicProgram<T>) -> Range<usize> {
        match self.block {
            None => self.offset..self.offset + self.len,
            Some(b) => {
                let start = prog.eq_rows() + prog.cone_rows[..b].iter().map(|c| c.cone.dim()).sum::<usize>();
                start..start + self.len
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

type Row<T> = Vec<(usize, T)>;

#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder<T> {
    var_count: usize,
    q: Vec<T>,
    p: Vec<(usize, usize, T)>,
    offset: T,
    eq: Vec<(Row<T>, T)>,
    cones: Vec<(Cone, Vec<(Row<T>, T)>)>,
}

impl<T: Real> ProgramBuilder<T> {
    pub fn new() -> Self {
        ProgramBuilder {
            var_count: 0,
            q: Vec::new(),
            p: Vec::new(),
            offset: T::zero(),
            eq: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn add_vars(&mut self, len: usize) -> VarBlock {
        let blk = VarBlock { start: self.var_count, len };
        self.var_count += len;
        self.q.resize(self.var_count, T::zero());
        blk
    }

    pub fn add_var(&mut self) -> usize {
        self.add_vars(1).start
    }

    /// Adds a one-row affine expression to the objective.
    pub fn add_cost(&mut self, e: &AffineExpr<T>) {
        assert_eq!(e.len(), 1, "cost expression must be scalar");
        for &(j, v) in &e.rows[0] {
            self.q[j] += v;
        }
        self.offset += e.constant[0];
    }

    /// Adds `½ coef · x_i x_j` (symmetrized) to the objective.
    pub fn add_quadratic(&mut self, i: usize, j: usize, coef: T) {
        if i == j {
            self.p.push((i, i, coef));
        } else {
            let h = coef * T::lit(0.5);
            self.p.push((i, j, h));
            self.p.push((j, i, h));
        }
    }

    /// `e = 0`.
    pub fn eq_zero(&mut self, e: &AffineExpr<T>) -> ConstraintRef {
        let offset = self.eq.len();
        for (row, c) in e.rows.iter().zip(&e.constant) {
            self.eq.push((row.clone(), -*c));
        }
        ConstraintRef { block: None, offset, len: e.len() }
    }

    /// `e ≥ 0` componentwise.
    pub fn nonneg(&mut self, e: &AffineExpr<T>) -> ConstraintRef {
        self.cone(Cone::Nonneg(e.len()), e)
    }

    /// `‖e[1..]‖₂ ≤ e[0]`.
    pub fn soc(&mut self, e: &AffineExpr<T>) -> ConstraintRef {
        self.cone(Cone::SecondOrder(e.len()), e)
    }

    fn cone(&mut self, cone: Cone, e: &AffineExpr<T>) -> ConstraintRef {
        assert!(!e.is_empty(), "empty cone constraint");
        // s = G x + h = b − A x, so A = −G and b = h
        let rows = e
            .rows
            .iter()
            .zip(&e.constant)
            .map(|(r, c)| (r.iter().map(|&(j, v)| (j, -v)).collect(), *c))
            .collect();
        self.cones.push((cone, rows));
        ConstraintRef { block: Some(self.cones.len() - 1), offset: 0, len: e.len() }
    }

    pub fn build(self) -> ConicProgram<T> {
        let n = self.var_count;
        let mut p = Triplets::new(n, n);
        for (i, j, v) in self.p {
            p.push(i, j, v);
        }
        let mut a_eq = Triplets::new(self.eq.len(), n);
        let mut b_eq = DVector::zeros(self.eq.len());
        for (i, (row, rhs)) in self.eq.into_iter().enumerate() {
            for (j, v) in row {
                a_eq.push(i, j, v);
            }
            b_eq[i] = rhs;
        }
        let cone_rows = self
            .cones
            .into_iter()
            .map(|(cone, rows)| {
                let mut a = Triplets::new(rows.len(), n);
                let mut b = DVector::zeros(rows.len());
                for (i, (row, c)) in rows.into_iter().enumerate() {
                    for (j, v) in row {
                        a.push(i, j, v);
                    }
                    b[i] = c;
                }
                ConeBlock { a, b, cone }
            })
            .collect();
        ConicProgram { var_count: n, p, q: DVector::from_vec(self.q), a_eq, b_eq, cone_rows, offset: self.offset }
    }
}
