use nalgebra::DVector;

use crate::program::Stacked;
use crate::{inf_norm, ConicProgram, Real};

/// Scale-normalized optimality measures of a primal/dual pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals<T> {
    /// Distance of `b − A x` from the cone, over `1 + max(‖b‖∞, ‖Ax‖∞)`.
    pub primal: T,
    /// Stationarity `‖Px + q + Aᵀy‖∞` and dual-cone violation of `y`, normalized.
    pub dual: T,
    /// `|xᵀPx + qᵀx + bᵀy|` over `1 + max(|primal obj|, |dual obj|)`.
    pub gap: T,
}

impl<T: Real> Residuals<T> {
    pub fn max(&self) -> T {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Re-checks a candidate pair against the program, independently of the
/// solver loop. `y` is ordered as equality rows followed by cone blocks.
pub fn residuals<T: Real>(prog: &ConicProgram<T>, x: &DVector<T>, y: &DVector<T>) -> Residuals<T> {
    assert_eq!(x.len(), prog.var_count, "primal candidate length");
    assert_eq!(y.len(), prog.row_count(), "dual candidate length");
    stacked_residuals(&prog.stacked(), x, y)
}

pub(crate) fn stacked_residuals<T: Real>(st: &Stacked<T>, x: &DVector<T>, y: &DVector<T>) -> Residuals<T> {
    let ax = &st.a * x;
    let s = &st.b - &ax;
    let mut proj = s.clone();
    st.project(&mut proj);
    let pviol = inf_norm((&s - &proj).as_slice());
    let pscale = T::one() + inf_norm(st.b.as_slice()).max(inf_norm(ax.as_slice()));
    let primal = pviol / pscale;

    let px = st.p.mul(x);
    let aty = st.a.tr_mul(y);
    let stat = &px + &st.q + &aty;
    let dscale = T::one()
        + inf_norm(px.as_slice())
            .max(inf_norm(st.q.as_slice()))
            .max(inf_norm(aty.as_slice()));
    let mut ydual = y.clone();
    st.project_dual(&mut ydual);
    let yviol = inf_norm((y - &ydual).as_slice()) / (T::one() + inf_norm(y.as_slice()));
    let dual = (inf_norm(stat.as_slice()) / dscale).max(yviol);

    let xpx = x.dot(&px);
    let qx = st.q.dot(x);
    let by = st.b.dot(y);
    let pobj = T::lit(0.5) * xpx + qx;
    let dobj = -T::lit(0.5) * xpx - by;
    let gap = (pobj - dobj).abs() / (T::one() + pobj.abs().max(dobj.abs()));
    Residuals { primal, dual, gap }
}
