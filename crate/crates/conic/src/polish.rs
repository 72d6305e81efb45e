//! Active-set refinement for LP/QP solutions.
//!
//! Rows guessed active from the ADMM iterate are treated as equalities and
//! the resulting KKT system is solved with a small regularization followed
//! by iterative refinement against the unregularized system.

use nalgebra::{DMatrix, DVector};

use crate::cone::RowKind;
use crate::program::{Quad, Stacked};
use crate::Real;

const REFINE_STEPS: usize = 25;

/// Returns refined `(x, y)` in the scaled space, or `None` when the reduced
/// system is too large or singular.
pub(crate) fn polish<T: Real>(
    st: &Stacked<T>,
    z: &DVector<T>,
    y: &DVector<T>,
    max_dim: usize,
) -> Option<(DVector<T>, DVector<T>)> {
    let n = st.a.ncols();
    let mut active = Vec::new();
    for blk in &st.blocks {
        for i in blk.start..blk.start + blk.len {
            let take = match blk.kind {
                RowKind::Zero => true,
                // slack s = b − z against the multiplier
                RowKind::Nonneg => st.b[i] - z[i] < y[i],
                RowKind::Soc => return None,
            };
            if take {
                active.push(i);
            }
        }
    }
    let ma = active.len();
    let dim = n + ma;
    if dim > max_dim {
        return None;
    }
    let delta = T::lit(1e-9);
    let mut kkt = DMatrix::<T>::zeros(dim, dim);
    match &st.p {
        Quad::Diagonal(d) => {
            for j in 0..n {
                kkt[(j, j)] = d[j];
            }
        }
        Quad::Dense(p) => kkt.view_mut((0, 0), (n, n)).copy_from(p),
    }
    for (r, &i) in active.iter().enumerate() {
        for j in 0..n {
            let v = st.a[(i, j)];
            kkt[(n + r, j)] = v;
            kkt[(j, n + r)] = v;
        }
    }
    let mut reg = kkt.clone();
    for j in 0..n {
        reg[(j, j)] += delta;
    }
    for r in 0..ma {
        reg[(n + r, n + r)] -= delta;
    }
    let lu = reg.lu();
    let mut rhs = DVector::<T>::zeros(dim);
    for j in 0..n {
        rhs[j] = -st.q[j];
    }
    for (r, &i) in active.iter().enumerate() {
        rhs[n + r] = st.b[i];
    }
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..REFINE_STEPS {
        let resid = &rhs - &kkt * &sol;
        let step = lu.solve(&resid)?;
        sol += step;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let xp = sol.rows(0, n).into_owned();
    let mut yp = DVector::<T>::zeros(y.len());
    for (r, &i) in active.iter().enumerate() {
        yp[i] = sol[n + r];
    }
    Some((xp, yp))
}
