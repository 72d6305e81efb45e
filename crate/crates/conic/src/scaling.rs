//! Modified Ruiz equilibration of the KKT matrix `[P Aᵀ; A 0]`.
//!
//! Rows inside a second-order cone block share one factor so the cone is
//! mapped onto itself.

use nalgebra::DVector;

use crate::cone::RowKind;
use crate::program::{Quad, Stacked};
use crate::Real;

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

pub(crate) struct Scaling<T: Real> {
    /// Variable scaling, `x = D x̄`.
    pub d: DVector<T>,
    /// Row scaling, `Ā = E A D`, `b̄ = E b`.
    pub e: DVector<T>,
    /// Cost scaling, `P̄ = c D P D`, `q̄ = c D q`.
    pub c: T,
}

impl<T: Real> Scaling<T> {
    pub fn identity(n: usize, m: usize) -> Self {
        Scaling { d: DVector::from_element(n, T::one()), e: DVector::from_element(m, T::one()), c: T::one() }
    }

    pub fn unscale_x(&self, xs: &DVector<T>) -> DVector<T> {
        self.d.component_mul(xs)
    }

    pub fn unscale_y(&self, ys: &DVector<T>) -> DVector<T> {
        self.e.component_mul(ys) / self.c
    }

    pub fn scale_x(&self, x: &DVector<T>) -> DVector<T> {
        x.component_div(&self.d)
    }

    pub fn scale_y(&self, y: &DVector<T>) -> DVector<T> {
        y.component_div(&self.e) * self.c
    }
}

fn clamp_norm<T: Real>(v: T) -> T {
    if v < T::lit(MIN_SCALE) {
        T::one()
    } else {
        v.min(T::lit(MAX_SCALE))
    }
}

/// Equilibrates `st` in place and returns the applied scaling.
pub(crate) fn equilibrate<T: Real>(st: &mut Stacked<T>, iters: usize) -> Scaling<T> {
    let n = st.a.ncols();
    let m = st.a.nrows();
    let mut sc = Scaling::identity(n, m);
    for _ in 0..iters {
        let mut col = DVector::<T>::zeros(n);
        let mut row = DVector::<T>::zeros(m);
        match &st.p {
            Quad::Diagonal(d) => {
                for j in 0..n {
                    col[j] = d[j].abs();
                }
            }
            Quad::Dense(p) => {
                for j in 0..n {
                    col[j] = p.column(j).iter().fold(T::zero(), |a, v| a.max(v.abs()));
                }
            }
        }
        for j in 0..n {
            for i in 0..m {
                let v = st.a[(i, j)].abs();
                if v > col[j] {
                    col[j] = v;
                }
                if v > row[i] {
                    row[i] = v;
                }
            }
        }
        let dj: DVector<T> = col.map(|v| T::one() / clamp_norm(v).sqrt());
        let mut ei: DVector<T> = row.map(|v| T::one() / clamp_norm(v).sqrt());
        for blk in st.blocks.iter().filter(|b| b.kind == RowKind::Soc) {
            let seg = &mut ei.as_mut_slice()[blk.start..blk.start + blk.len];
            let mean = seg.iter().fold(T::zero(), |a, v| a + *v) / T::lit(blk.len as f64);
            seg.iter_mut().for_each(|v| *v = mean);
        }
        apply(st, &dj, &ei);
        sc.d.component_mul_assign(&dj);
        sc.e.component_mul_assign(&ei);
    }

    // cost scaling
    let pnorm = match &st.p {
        Quad::Diagonal(d) => {
            if n == 0 {
                T::zero()
            } else {
                d.iter().fold(T::zero(), |a, v| a + v.abs()) / T::lit(n as f64)
            }
        }
        Quad::Dense(p) => {
            if n == 0 {
                T::zero()
            } else {
                (0..n)
                    .map(|j| p.column(j).iter().fold(T::zero(), |a, v| a.max(v.abs())))
                    .fold(T::zero(), |a, v| a + v)
                    / T::lit(n as f64)
            }
        }
    };
    let qnorm = st.q.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let c = T::one() / clamp_norm(pnorm.max(qnorm));
    match &mut st.p {
        Quad::Diagonal(d) => *d *= c,
        Quad::Dense(p) => *p *= c,
    }
    st.q *= c;
    sc.c = c;
    sc
}

fn apply<T: Real>(st: &mut Stacked<T>, d: &DVector<T>, e: &DVector<T>) {
    let n = d.len();
    match &mut st.p {
        Quad::Diagonal(p) => {
            for j in 0..n {
                p[j] *= d[j] * d[j];
            }
        }
        Quad::Dense(p) => {
            for j in 0..n {
                for i in 0..n {
                    p[(i, j)] *= d[i] * d[j];
                }
            }
        }
    }
    st.q.component_mul_assign(d);
    for j in 0..n {
        let mut c = st.a.column_mut(j);
        c.component_mul_assign(e);
        c *= d[j];
    }
    st.b.component_mul_assign(e);
}
