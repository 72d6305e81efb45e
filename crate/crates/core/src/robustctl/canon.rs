//! Lowering of cost terms, norms and boxes into builder rows.

use deepc_conic::{AffineExpr, ProgramBuilder};

use super::{expand_bounds, CostTerm, OutputConstraint, TermForm};
use crate::ambiguity::NormIndex;
use crate::{Real, Result};

/// `M z − c` for a term acting on `z`.
fn residual_expr<T: Real>(term: &CostTerm<T>, z: &AffineExpr<T>) -> AffineExpr<T> {
    let e = match &term.matrix {
        Some(m) => z.left_mul(m),
        None => z.clone(),
    };
    match &term.offset {
        Some(c) => e.offset(&c.iter().map(|v| -*v).collect::<Vec<_>>()),
        None => e,
    }
}

/// Adds `scale · Σ terms(z)` to the objective. Returns the number of
/// epigraph scalars introduced.
pub(crate) fn add_terms<T: Real>(
    b: &mut ProgramBuilder<T>,
    terms: &[CostTerm<T>],
    z: &AffineExpr<T>,
    scale: T,
) -> Result<usize> {
    let mut epigraphs = 0;
    for term in terms {
        term.check(z.len())?;
        let w = term.weight * scale;
        if w == T::zero() {
            continue;
        }
        let r = residual_expr(term, z);
        match term.form {
            TermForm::Norm2 => {
                let t = b.add_var();
                b.soc(&AffineExpr::stack(&[AffineExpr::var(t), r]));
                b.add_cost(&AffineExpr::var(t).scaled(w));
                epigraphs += 1;
            }
            TermForm::SqNorm2 => {
                let v = b.add_vars(r.len());
                b.eq_zero(&AffineExpr::vars(v).minus(&r));
                for j in v.range() {
                    b.add_quadratic(j, j, w * T::lit(2.0));
                }
            }
        }
    }
    Ok(epigraphs)
}

/// `‖e‖_q ≤ t` for an existing scalar expression `t`.
pub(crate) fn norm_bound<T: Real>(b: &mut ProgramBuilder<T>, e: &AffineExpr<T>, t: &AffineExpr<T>, q: NormIndex) {
    match q {
        NormIndex::Two => {
            b.soc(&AffineExpr::stack(&[t.clone(), e.clone()]));
        }
        NormIndex::Inf => {
            let tt = AffineExpr::stack(&vec![t.clone(); e.len()]);
            b.nonneg(&AffineExpr::stack(&[tt.clone().minus(e), tt.plus(e)]));
        }
        NormIndex::One => {
            let a = b.add_vars(e.len());
            let ae = AffineExpr::vars(a);
            b.nonneg(&AffineExpr::stack(&[ae.clone().minus(e), ae.clone().plus(e)]));
            b.nonneg(&t.clone().minus(&ae.sum()));
        }
    }
}

/// New scalar `t` with `‖e‖_q ≤ t`.
pub(crate) fn norm_epigraph<T: Real>(b: &mut ProgramBuilder<T>, e: &AffineExpr<T>, q: NormIndex) -> usize {
    let t = b.add_var();
    norm_bound(b, e, &AffineExpr::var(t), q);
    t
}

/// `lower ≤ e ≤ upper` on the finite entries.
pub(crate) fn add_box<T: Real>(b: &mut ProgramBuilder<T>, e: &AffineExpr<T>, lower: &[T], upper: &[T]) {
    let mut rows = Vec::new();
    for j in 0..e.len() {
        if upper[j].is_finite() {
            rows.push(e.row(j).scaled(-T::one()).offset(&[upper[j]]));
        }
        if lower[j].is_finite() {
            rows.push(e.row(j).offset(&[-lower[j]]));
        }
    }
    if !rows.is_empty() {
        b.nonneg(&AffineExpr::stack(&rows));
    }
}

/// Hard output constraint `h(y) ≤ 0` on a predicted future output.
pub(crate) fn add_hard_output<T: Real>(
    b: &mut ProgramBuilder<T>,
    y: &AffineExpr<T>,
    output: &OutputConstraint<T>,
    p: usize,
    t_f: usize,
) -> Result<()> {
    match output {
        OutputConstraint::None => {}
        OutputConstraint::Box { lower, upper } => {
            let lo = expand_bounds(lower, p, t_f, "output")?;
            let hi = expand_bounds(upper, p, t_f, "output")?;
            add_box(b, y, &lo, &hi);
        }
        OutputConstraint::PiecewiseAffine { pieces, .. } => {
            for pc in pieces {
                check_piece(&pc.a, y.len())?;
                let row = y.left_mul(&row_matrix(&pc.a)).offset(&[pc.b]);
                b.nonneg(&row.scaled(-T::one()));
            }
        }
    }
    Ok(())
}

/// `a` as a 1×n matrix.
pub(crate) fn row_matrix<T: Real>(a: &nalgebra::DVector<T>) -> nalgebra::DMatrix<T> {
    nalgebra::DMatrix::from_row_slice(1, a.len(), a.as_slice())
}

pub(crate) fn check_piece<T: Real>(a: &nalgebra::DVector<T>, dim: usize) -> Result<()> {
    if a.len() != dim {
        return Err(crate::DeepcError::DimensionMismatch(format!(
            "affine piece of length {} for a future output of length {dim}",
            a.len()
        )));
    }
    Ok(())
}
