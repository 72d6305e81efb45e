//! Reduced solves of the regularized KKT system
//!
//! ```text
//! [ P + σI    Aᵀ    ] [ x ]   [ r1 ]
//! [   A     −R⁻¹    ] [ ν ] = [ r2 ]
//! ```
//!
//! through whichever Schur complement is smaller.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::program::{Quad, Stacked};
use crate::{ConicError, Real, Result};

pub(crate) enum KktFactor<T: Real> {
    /// `(P + σI + Aᵀ R A) x = r1 + Aᵀ R r2`.
    Primal(Cholesky<T, Dyn>),
    /// `(A H⁻¹ Aᵀ + R⁻¹) ν = A H⁻¹ r1 − r2` with diagonal `H = P + σI`.
    Dual { chol: Cholesky<T, Dyn>, hinv: DVector<T> },
}

impl<T: Real> KktFactor<T> {
    pub fn new(st: &Stacked<T>, sigma: T, rho: &DVector<T>) -> Result<Self> {
        let n = st.a.ncols();
        let m = st.a.nrows();
        match &st.p {
            Quad::Diagonal(d) if m < n => {
                let hinv = d.map(|v| T::one() / (v + sigma));
                let mut ah = st.a.clone();
                for j in 0..n {
                    let s = hinv[j].sqrt();
                    ah.column_mut(j).scale_mut(s);
                }
                let mut k = &ah * ah.transpose();
                for i in 0..m {
                    k[(i, i)] += T::one() / rho[i];
                }
                let chol = k
                    .cholesky()
                    .ok_or_else(|| ConicError::NumericalBreakdown("dual KKT factorization".into()))?;
                Ok(KktFactor::Dual { chol, hinv })
            }
            _ => {
                let mut h = match &st.p {
                    Quad::Diagonal(d) => DMatrix::from_diagonal(d),
                    Quad::Dense(p) => p.clone(),
                };
                let mut ar = st.a.clone();
                for i in 0..m {
                    let s = rho[i].sqrt();
                    ar.row_mut(i).scale_mut(s);
                }
                h += ar.tr_mul(&ar);
                for j in 0..n {
                    h[(j, j)] += sigma;
                }
                let chol = h
                    .cholesky()
                    .ok_or_else(|| ConicError::NumericalBreakdown("primal KKT factorization".into()))?;
                Ok(KktFactor::Primal(chol))
            }
        }
    }

    pub fn solve(
        &self,
        a: &DMatrix<T>,
        rho: &DVector<T>,
        r1: &DVector<T>,
        r2: &DVector<T>,
    ) -> (DVector<T>, DVector<T>) {
        match self {
            KktFactor::Primal(chol) => {
                let rr2 = rho.component_mul(r2);
                let rhs = r1 + a.tr_mul(&rr2);
                let x = chol.solve(&rhs);
                let nu = rho.component_mul(&(a * &x - r2));
                (x, nu)
            }
            KktFactor::Dual { chol, hinv } => {
                let hr1 = hinv.component_mul(r1);
                let rhs = a * &hr1 - r2;
                let nu = chol.solve(&rhs);
                let x = hinv.component_mul(&(r1 - a.tr_mul(&nu)));
                (x, nu)
            }
        }
    }
}
