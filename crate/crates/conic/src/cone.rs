use crate::Real;

/// Cone attached to a block of rows `b − A x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `{ s : s ≥ 0 }` of the given dimension.
    Nonneg(usize),
    /// `{ (t, v) : ‖v‖₂ ≤ t }`; the dimension counts `t`.
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(d) | Cone::SecondOrder(d) => d,
        }
    }
}

/// Row block of the stacked constraint system as the solver sees it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RowKind {
    Zero,
    Nonneg,
    Soc,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct RowBlock {
    pub kind: RowKind,
    pub start: usize,
    pub len: usize,
}

/// Euclidean projection onto the cone, in place.
pub(crate) fn project_cone<T: Real>(kind: RowKind, s: &mut [T]) {
    match kind {
        RowKind::Zero => s.iter_mut().for_each(|v| *v = T::zero()),
        RowKind::Nonneg => s.iter_mut().for_each(|v| *v = v.max(T::zero())),
        RowKind::Soc => project_soc(s),
    }
}

/// Euclidean projection onto the dual cone, in place.
pub(crate) fn project_dual_cone<T: Real>(kind: RowKind, y: &mut [T]) {
    match kind {
        RowKind::Zero => {}
        RowKind::Nonneg => y.iter_mut().for_each(|v| *v = v.max(T::zero())),
        RowKind::Soc => project_soc(y),
    }
}

fn project_soc<T: Real>(s: &mut [T]) {
    if s.is_empty() {
        return;
    }
    let t = s[0];
    let vnorm = s[1..].iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
    if vnorm <= t {
        return;
    }
    if vnorm <= -t {
        s.iter_mut().for_each(|v| *v = T::zero());
        return;
    }
    let half = T::lit(0.5) * (t + vnorm);
    s[0] = half;
    let k = half / vnorm;
    s[1..].iter_mut().for_each(|v| *v *= k);
}
