//! Deterministic and distributionally robust DeePC programs.
//!
//! The decision variable is the column combination `g`. The deterministic
//! program pins the past window with `Up g = u_ini`, `Yp g = y_ini` and imposes
//! hard input/output sets. The robust program averages the output costs over
//! the `N` recorded batches, lifts the past-output equality into the `f3`
//! penalty, adds the Wasserstein regularizer `L_obj ε ‖g‖_q` and replaces the
//! output set by a CVaR constraint tightened by `L_con ε ‖g‖_q` (or, for
//! piecewise-affine constraint functions, by the dual system over a
//! polyhedral support).

pub(crate) mod canon;

mod assemble;

pub use assemble::{
    assemble_deterministic, assemble_robust, assemble_robust_affine, extract_solution, solve_deterministic,
    solve_deterministic_from, solve_robust, solve_robust_from, Assembled, Layout, Mode,
};

use std::time::Duration;

use deepc_conic::{SolveStatus, WarmStart};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambiguity::NormIndex;
use crate::linalg::spectral_norm;
use crate::trajlib::Signal;
use crate::{DeepcError, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermForm {
    /// `w ‖M z − c‖₂`.
    Norm2,
    /// `w ‖M z − c‖₂²`; not Lipschitz, so only allowed where no robustification applies.
    SqNorm2,
}

/// One summand of a cost function acting on a stacked argument `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTerm<T: Real> {
    pub weight: T,
    /// `None` means the identity.
    pub matrix: Option<DMatrix<T>>,
    /// `None` means zero.
    pub offset: Option<DVector<T>>,
    pub form: TermForm,
}

impl<T: Real> CostTerm<T> {
    pub fn norm(weight: T, matrix: Option<DMatrix<T>>, offset: Option<DVector<T>>) -> Self {
        CostTerm { weight, matrix, offset, form: TermForm::Norm2 }
    }

    pub fn squared(weight: T, matrix: Option<DMatrix<T>>, offset: Option<DVector<T>>) -> Self {
        CostTerm { weight, matrix, offset, form: TermForm::SqNorm2 }
    }

    /// Distance of a time-stacked signal to a constant reference over `steps` steps.
    pub fn tracking(weight: T, reference: &[T], steps: usize, form: TermForm) -> Self {
        let c = DVector::from_iterator(reference.len() * steps, (0..steps).flat_map(|_| reference.iter().copied()));
        CostTerm { weight, matrix: None, offset: Some(c), form }
    }

    /// Like [`CostTerm::tracking`] but restricted to `channels` of a
    /// `dim`-dimensional signal; `reference` has one entry per selected channel.
    pub fn channels(weight: T, dim: usize, channels: &[usize], reference: &[T], steps: usize, form: TermForm) -> Self {
        assert_eq!(channels.len(), reference.len(), "one reference value per channel");
        let k = channels.len();
        let mut sel = DMatrix::zeros(k * steps, dim * steps);
        for t in 0..steps {
            for (i, &ch) in channels.iter().enumerate() {
                assert!(ch < dim, "channel {ch} out of range");
                sel[(t * k + i, t * dim + ch)] = T::one();
            }
        }
        let c = DVector::from_iterator(k * steps, (0..steps).flat_map(|_| reference.iter().copied()));
        CostTerm { weight, matrix: Some(sel), offset: Some(c), form }
    }

    fn out_dim(&self, arg_dim: usize) -> usize {
        self.matrix.as_ref().map_or(arg_dim, |m| m.nrows())
    }

    pub(crate) fn check(&self, arg_dim: usize) -> Result<()> {
        if !self.weight.is_finite() || self.weight < T::zero() {
            return Err(DeepcError::Invalid("cost weights must be finite and nonnegative".into()));
        }
        if let Some(m) = &self.matrix {
            if m.ncols() != arg_dim {
                return Err(DeepcError::DimensionMismatch(format!(
                    "cost matrix has {} columns for an argument of length {arg_dim}",
                    m.ncols()
                )));
            }
        }
        if let Some(c) = &self.offset {
            if c.len() != self.out_dim(arg_dim) {
                return Err(DeepcError::DimensionMismatch(format!(
                    "cost offset of length {} for {} rows",
                    c.len(),
                    self.out_dim(arg_dim)
                )));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, z: &DVector<T>) -> T {
        let mut r = match &self.matrix {
            Some(m) => m * z,
            None => z.clone(),
        };
        if let Some(c) = &self.offset {
            r -= c;
        }
        match self.form {
            TermForm::Norm2 => self.weight * r.norm(),
            TermForm::SqNorm2 => self.weight * r.norm_squared(),
        }
    }

    /// Columns of the argument the term depends on.
    fn support(&self, arg_dim: usize) -> Vec<usize> {
        match &self.matrix {
            None => (0..arg_dim).collect(),
            Some(m) => (0..m.ncols()).filter(|&j| m.column(j).iter().any(|v| *v != T::zero())).collect(),
        }
    }

    /// Operator norm `‖M‖_{r→2}` restricted to the support (exact for r ∈ {1, 2},
    /// an upper bound for r = ∞).
    fn operator_norm(&self, arg_dim: usize, r: NormIndex) -> T {
        let m = match &self.matrix {
            Some(m) => m.clone(),
            None => DMatrix::identity(arg_dim, arg_dim),
        };
        let support = self.support(arg_dim);
        if support.is_empty() {
            return T::zero();
        }
        let col_norms: Vec<T> = support.iter().map(|&j| m.column(j).norm()).collect();
        match r {
            NormIndex::Two => spectral_norm(&m),
            NormIndex::One => col_norms.iter().fold(T::zero(), |a, &b| a.max(b)),
            NormIndex::Inf => {
                let sum = col_norms.iter().fold(T::zero(), |a, &b| a + b);
                (T::lit(support.len() as f64).sqrt() * spectral_norm(&m)).min(sum)
            }
        }
    }
}

/// `f1` acts on `Uf g`, `f2` on `Yf g`, `f3` on `Yp g − y_ini`; each is a sum of terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostSpec<T: Real> {
    pub f1: Vec<CostTerm<T>>,
    pub f2: Vec<CostTerm<T>>,
    pub f3: Vec<CostTerm<T>>,
}

fn sum_terms<T: Real>(terms: &[CostTerm<T>], z: &DVector<T>) -> T {
    terms.iter().fold(T::zero(), |a, t| a + t.evaluate(z))
}

impl<T: Real> CostSpec<T> {
    pub fn evaluate_f1(&self, u: &DVector<T>) -> T {
        sum_terms(&self.f1, u)
    }

    pub fn evaluate_f2(&self, y: &DVector<T>) -> T {
        sum_terms(&self.f2, y)
    }

    pub fn evaluate_f3(&self, sigma: &DVector<T>) -> T {
        sum_terms(&self.f3, sigma)
    }

    pub(crate) fn check(&self, u_dim: usize, yf_dim: usize, yp_dim: usize) -> Result<()> {
        self.f1.iter().try_for_each(|t| t.check(u_dim))?;
        self.f2.iter().try_for_each(|t| t.check(yf_dim))?;
        self.f3.iter().try_for_each(|t| t.check(yp_dim))
    }

    pub fn has_squared_output_terms(&self) -> bool {
        self.f2.iter().chain(&self.f3).any(|t| t.form == TermForm::SqNorm2)
    }

    /// Lipschitz constant of `(y_p, y_f) ↦ f3(y_p − y_ini) + f2(y_f)` with respect
    /// to the `r`-norm of the stacked argument.
    ///
    /// Each term contributes `w ‖M‖_{r→2}`. When the terms depend on pairwise
    /// disjoint coordinates the contributions combine through the dual
    /// `q`-norm, otherwise they add up.
    pub fn lipschitz_objective(&self, r: NormIndex, yp_dim: usize, yf_dim: usize) -> T {
        let mut bounds = Vec::new();
        let mut supports = Vec::new();
        for (terms, start, dim) in [(&self.f3, 0, yp_dim), (&self.f2, yp_dim, yf_dim)] {
            for t in terms.iter().filter(|t| t.weight > T::zero()) {
                let sup = t.support(dim);
                if sup.is_empty() {
                    continue;
                }
                bounds.push(t.weight * t.operator_norm(dim, r));
                supports.extend(sup.into_iter().map(|j| j + start));
            }
        }
        let total = supports.len();
        supports.sort_unstable();
        supports.dedup();
        if supports.len() == total {
            r.dual().norm(&bounds)
        } else {
            bounds.iter().fold(T::zero(), |a, &b| a + b)
        }
    }
}

/// Input set `𝒰` as a box. Bounds have length `m` (repeated every step) or
/// `m T_f`; non-finite entries leave that side open.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBox<T: Real> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

pub(crate) fn expand_bounds<T: Real>(b: &[T], dim: usize, steps: usize, what: &str) -> Result<Vec<T>> {
    if b.len() == dim {
        Ok((0..steps).flat_map(|_| b.iter().copied()).collect())
    } else if b.len() == dim * steps {
        Ok(b.to_vec())
    } else {
        Err(DeepcError::DimensionMismatch(format!(
            "{what} bounds of length {} (expected {dim} or {})",
            b.len(),
            dim * steps
        )))
    }
}

fn check_order<T: Real>(lower: &[T], upper: &[T]) -> Result<()> {
    // written so that NaN bounds fail as well
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(DeepcError::Invalid("box bounds must satisfy lower ≤ upper".into()));
    }
    Ok(())
}

impl<T: Real> InputBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(DeepcError::DimensionMismatch("input bounds of different lengths".into()));
        }
        check_order(&lower, &upper)?;
        Ok(InputBox { lower, upper })
    }

    pub fn lower_bounds(&self, m: usize, t_f: usize) -> Result<Vec<T>> {
        expand_bounds(&self.lower, m, t_f, "input")
    }

    pub fn upper_bounds(&self, m: usize, t_f: usize) -> Result<Vec<T>> {
        expand_bounds(&self.upper, m, t_f, "input")
    }
}

/// One affine piece `ℓ_k(y) = a_kᵀ y + b_k` of the constraint function on the
/// predicted future output `y = Yf g`. In sample space this is `⟨M_k g, ξ⟩ + b_k`
/// with `M_k g` equal to `a_k ⊗ g` on the future-output rows and zero elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece<T: Real> {
    pub a: DVector<T>,
    pub b: T,
}

/// Polyhedral support `{ξ : F ξ ≤ d}` of the sample distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Support<T: Real> {
    pub f: DMatrix<T>,
    pub d: DVector<T>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum OutputConstraint<T: Real> {
    #[default]
    None,
    /// `h(y) = max_j max(y_j − upper_j, lower_j − y_j) ≤ 0`, Lipschitz constant 1.
    /// Bounds have length `p` or `p T_f`; non-finite entries are dropped.
    Box { lower: Vec<T>, upper: Vec<T> },
    /// `h = max_k ℓ_k`; `support = None` is the whole sample space.
    PiecewiseAffine { pieces: Vec<AffinePiece<T>>, support: Option<Support<T>> },
}

impl<T: Real> OutputConstraint<T> {
    pub fn output_box(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(DeepcError::DimensionMismatch("output bounds of different lengths".into()));
        }
        check_order(&lower, &upper)?;
        Ok(OutputConstraint::Box { lower, upper })
    }

    /// `h(y)` for a predicted future output.
    pub fn evaluate(&self, y: &DVector<T>, p: usize, t_f: usize) -> Result<T> {
        match self {
            OutputConstraint::None => Ok(T::lit(f64::NEG_INFINITY)),
            OutputConstraint::Box { lower, upper } => {
                let lo = expand_bounds(lower, p, t_f, "output")?;
                let hi = expand_bounds(upper, p, t_f, "output")?;
                let mut h = T::lit(f64::NEG_INFINITY);
                for j in 0..y.len() {
                    if hi[j].is_finite() {
                        h = h.max(y[j] - hi[j]);
                    }
                    if lo[j].is_finite() {
                        h = h.max(lo[j] - y[j]);
                    }
                }
                Ok(h)
            }
            OutputConstraint::PiecewiseAffine { pieces, .. } => {
                Ok(pieces.iter().fold(T::lit(f64::NEG_INFINITY), |h, pc| h.max(pc.a.dot(y) + pc.b)))
            }
        }
    }

    fn is_active(&self, p: usize, t_f: usize) -> Result<bool> {
        Ok(match self {
            OutputConstraint::None => false,
            OutputConstraint::Box { lower, upper } => {
                let lo = expand_bounds(lower, p, t_f, "output")?;
                let hi = expand_bounds(upper, p, t_f, "output")?;
                lo.iter().chain(&hi).any(|v| v.is_finite())
            }
            OutputConstraint::PiecewiseAffine { pieces, .. } => !pieces.is_empty(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec<T: Real> {
    pub input: Option<InputBox<T>>,
    pub output: OutputConstraint<T>,
    /// CVaR level `α ∈ (0, 1)`.
    pub alpha: T,
}

impl<T: Real> Default for ConstraintSpec<T> {
    fn default() -> Self {
        ConstraintSpec { input: None, output: OutputConstraint::None, alpha: T::lit(0.1) }
    }
}

impl<T: Real> ConstraintSpec<T> {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub(crate) fn check_alpha(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(DeepcError::Invalid(format!("CVaR level {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RobustSolution<T: Real> {
    pub g: DVector<T>,
    /// `Uf g` as a `T_f`-step signal.
    pub u_star: Signal<T>,
    /// `Yf⁽ⁱ⁾ g` for every batch.
    pub y_pred: Vec<Signal<T>>,
    /// Program objective re-evaluated at `g`.
    pub objective: T,
    /// Objective reported by the solver (includes auxiliary variables).
    pub solver_objective: T,
    pub tau: Option<T>,
    pub s: Vec<T>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub solve_time: Duration,
    /// Raw solver point, for starting the next solve of the same shape.
    pub warm: WarmStart<T>,
}

impl<T: Real> RobustSolution<T> {
    /// First `nu` planned inputs.
    pub fn first_inputs(&self, nu: usize) -> Signal<T> {
        self.u_star.window(0, nu.min(self.u_star.len()))
    }
}
