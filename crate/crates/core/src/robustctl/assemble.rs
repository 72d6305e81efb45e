use deepc_conic::{solve, solve_warm, AffineExpr, ConicProgram, ConstraintRef, ProgramBuilder, Settings, SolveResult, SolveStatus, VarBlock, WarmStart};
use log::debug;
use nalgebra::{DMatrix, DVector};

use super::canon;
use super::{expand_bounds, ConstraintSpec, CostSpec, OutputConstraint, RobustSolution, Support};
use crate::ambiguity::{AmbiguitySpec, NormIndex};
use crate::trajlib::{DataBlocks, Signal};
use crate::{DeepcError, Real, Result};

/// Residual level under which an iteration-limited solve is still accepted.
const NEAR_OPTIMAL_RESIDUAL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    /// Lipschitz (box) output constraint or none.
    Robust,
    /// Piecewise-affine output constraint over a polyhedral support.
    RobustAffine,
}

/// Where the named quantities live in the assembled program.
#[derive(Clone, Debug)]
pub struct Layout {
    pub g: VarBlock,
    pub tau: Option<usize>,
    pub s: Option<VarBlock>,
    pub lambda: Option<usize>,
    /// Epigraph of `‖g‖_q`, shared by the regularizer and the CVaR row.
    pub norm_g: Option<usize>,
    /// Dual multipliers `γ_ik`, batch-major.
    pub gamma: Vec<VarBlock>,
    /// Epigraph scalars of the norm-form cost terms.
    pub cost_epigraphs: usize,
    pub eq_rows: ConstraintRef,
    pub cvar_row: Option<ConstraintRef>,
    /// One block per batch (`τ + h(Yf⁽ⁱ⁾ g) ≤ s_i`, or one per batch and piece).
    pub hinge_rows: Vec<ConstraintRef>,
    /// `s_i ≥ 0`, one per batch.
    pub s_rows: Vec<ConstraintRef>,
}

#[derive(Clone, Debug)]
struct Evaluation<T: Real> {
    cost: CostSpec<T>,
    y_ini: DVector<T>,
    eps_obj: T,
    l_obj: T,
    q: NormIndex,
}

#[derive(Clone, Debug)]
pub struct Assembled<T: Real> {
    pub program: ConicProgram<T>,
    pub layout: Layout,
    pub mode: Mode,
    eval: Evaluation<T>,
}

impl<T: Real> Assembled<T> {
    /// Lipschitz constant used in the objective regularizer.
    pub fn l_obj(&self) -> T {
        self.eval.l_obj
    }

    /// Objective of the program as a function of `g` alone.
    pub fn objective_at(&self, blocks: &DataBlocks<T>, g: &DVector<T>) -> T {
        let c = &self.eval.cost;
        let f1 = c.evaluate_f1(&(&blocks.uf * g));
        if self.mode == Mode::Deterministic {
            return f1 + c.evaluate_f2(&(&blocks.yf[0] * g));
        }
        let n = blocks.batches();
        let mut avg = T::zero();
        for i in 0..n {
            avg += c.evaluate_f2(&(&blocks.yf[i] * g)) + c.evaluate_f3(&(&blocks.yp[i] * g - &self.eval.y_ini));
        }
        let reg = if self.eval.eps_obj > T::zero() {
            self.eval.eps_obj * self.eval.l_obj * self.eval.q.norm(g.as_slice())
        } else {
            T::zero()
        };
        f1 + avg / T::lit(n as f64) + reg
    }
}

fn check_window<T: Real>(blocks: &DataBlocks<T>, u_ini: &DVector<T>, y_ini: &DVector<T>) -> Result<()> {
    blocks.validate()?;
    if u_ini.len() != blocks.m * blocks.t_ini || y_ini.len() != blocks.p * blocks.t_ini {
        return Err(DeepcError::DimensionMismatch(format!(
            "initial window of lengths ({}, {}), expected ({}, {})",
            u_ini.len(),
            y_ini.len(),
            blocks.m * blocks.t_ini,
            blocks.p * blocks.t_ini
        )));
    }
    Ok(())
}

fn neg<T: Real>(v: &DVector<T>) -> Vec<T> {
    v.iter().map(|x| -*x).collect()
}

fn add_input_box<T: Real>(b: &mut ProgramBuilder<T>, u: &AffineExpr<T>, c: &ConstraintSpec<T>, m: usize, t_f: usize) -> Result<()> {
    if let Some(ib) = &c.input {
        canon::add_box(b, u, &ib.lower_bounds(m, t_f)?, &ib.upper_bounds(m, t_f)?);
    }
    Ok(())
}

/// Deterministic DeePC on batch 0: `Up g = u_ini`, `Yp g = y_ini`, hard
/// input and output sets, objective `f1(Uf g) + f2(Yf g)`. `f3` is unused.
/// `u_ini` and `y_ini` are time-stacked.
pub fn assemble_deterministic<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
) -> Result<Assembled<T>> {
    check_window(blocks, u_ini, y_ini)?;
    let (m, p, t_f) = (blocks.m, blocks.p, blocks.t_f);
    cost.check(m * t_f, p * t_f, p * blocks.t_ini)?;
    let mut b = ProgramBuilder::new();
    let g = b.add_vars(blocks.columns());
    let eq_rows = b.eq_zero(&AffineExpr::stack(&[
        AffineExpr::from_matrix(&blocks.up, g).offset(&neg(u_ini)),
        AffineExpr::from_matrix(&blocks.yp[0], g).offset(&neg(y_ini)),
    ]));
    let u = AffineExpr::from_matrix(&blocks.uf, g);
    let y = AffineExpr::from_matrix(&blocks.yf[0], g);
    let mut cost_epigraphs = canon::add_terms(&mut b, &cost.f1, &u, T::one())?;
    cost_epigraphs += canon::add_terms(&mut b, &cost.f2, &y, T::one())?;
    add_input_box(&mut b, &u, constraints, m, t_f)?;
    canon::add_hard_output(&mut b, &y, &constraints.output, p, t_f)?;
    Ok(Assembled {
        program: b.build(),
        layout: Layout {
            g,
            tau: None,
            s: None,
            lambda: None,
            norm_g: None,
            gamma: Vec::new(),
            cost_epigraphs,
            eq_rows,
            cvar_row: None,
            hinge_rows: Vec::new(),
            s_rows: Vec::new(),
        },
        mode: Mode::Deterministic,
        eval: Evaluation {
            cost: cost.clone(),
            y_ini: y_ini.clone(),
            eps_obj: T::zero(),
            l_obj: T::zero(),
            q: NormIndex::Two,
        },
    })
}

/// Robust program with a Lipschitz box output constraint (or none).
pub fn assemble_robust<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    spec: &AmbiguitySpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
) -> Result<Assembled<T>> {
    if matches!(constraints.output, OutputConstraint::PiecewiseAffine { .. }) {
        return Err(DeepcError::Invalid("piecewise-affine constraints go through assemble_robust_affine".into()));
    }
    assemble_robust_inner(blocks, cost, constraints, spec, u_ini, y_ini)
}

/// Robust program with a piecewise-affine output constraint over a
/// polyhedral support, using per-sample, per-piece dual multipliers.
pub fn assemble_robust_affine<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    spec: &AmbiguitySpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
) -> Result<Assembled<T>> {
    if !matches!(constraints.output, OutputConstraint::PiecewiseAffine { .. }) {
        return Err(DeepcError::Invalid("assemble_robust_affine needs a piecewise-affine output constraint".into()));
    }
    assemble_robust_inner(blocks, cost, constraints, spec, u_ini, y_ini)
}

fn assemble_robust_inner<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    spec: &AmbiguitySpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
) -> Result<Assembled<T>> {
    check_window(blocks, u_ini, y_ini)?;
    spec.validate()?;
    let (m, p, t_ini, t_f) = (blocks.m, blocks.p, blocks.t_ini, blocks.t_f);
    cost.check(m * t_f, p * t_f, p * t_ini)?;
    let eps_obj = spec.epsilon;
    let eps_con = spec.epsilon_constraint();
    if eps_obj > T::zero() && cost.has_squared_output_terms() {
        return Err(DeepcError::SquaredTermInRobustMode);
    }
    let q = spec.r.dual();
    let n = blocks.batches();
    let inv_n = T::one() / T::lit(n as f64);
    let l_obj = cost.lipschitz_objective(spec.r, p * t_ini, p * t_f);
    let constrained = constraints.output.is_active(p, t_f)?;
    if constrained {
        constraints.check_alpha()?;
    }

    let mut b = ProgramBuilder::new();
    let g = b.add_vars(blocks.columns());
    let ge = AffineExpr::vars(g);
    let eq_rows = b.eq_zero(&AffineExpr::from_matrix(&blocks.up, g).offset(&neg(u_ini)));
    let u = AffineExpr::from_matrix(&blocks.uf, g);
    let mut cost_epigraphs = canon::add_terms(&mut b, &cost.f1, &u, T::one())?;
    add_input_box(&mut b, &u, constraints, m, t_f)?;
    let ys: Vec<AffineExpr<T>> = blocks.yf.iter().map(|yf| AffineExpr::from_matrix(yf, g)).collect();
    for i in 0..n {
        let sigma = AffineExpr::from_matrix(&blocks.yp[i], g).offset(&neg(y_ini));
        cost_epigraphs += canon::add_terms(&mut b, &cost.f2, &ys[i], inv_n)?;
        cost_epigraphs += canon::add_terms(&mut b, &cost.f3, &sigma, inv_n)?;
    }

    let reg_obj = eps_obj * l_obj;
    let mode = match constraints.output {
        OutputConstraint::PiecewiseAffine { .. } => Mode::RobustAffine,
        _ => Mode::Robust,
    };
    let trivial_support = matches!(constraints.output, OutputConstraint::PiecewiseAffine { support: None, .. });
    let needs_norm = reg_obj > T::zero()
        || (constrained && eps_con > T::zero() && (mode == Mode::Robust || trivial_support));
    let norm_g = needs_norm.then(|| canon::norm_epigraph(&mut b, &ge, q));
    if let (Some(t), true) = (norm_g, reg_obj > T::zero()) {
        b.add_cost(&AffineExpr::var(t).scaled(reg_obj));
    }

    let mut layout = Layout {
        g,
        tau: None,
        s: None,
        lambda: None,
        norm_g,
        gamma: Vec::new(),
        cost_epigraphs,
        eq_rows,
        cvar_row: None,
        hinge_rows: Vec::new(),
        s_rows: Vec::new(),
    };

    if constrained {
        let tau = b.add_var();
        let s = b.add_vars(n);
        let tau_e = AffineExpr::var(tau);
        let s_mean = AffineExpr::vars(s).sum().scaled(inv_n);
        // −τα + (tightening) + mean s ≤ 0, written as a nonnegative row
        let mut cvar = tau_e.clone().scaled(constraints.alpha).minus(&s_mean);
        match &constraints.output {
            OutputConstraint::Box { lower, upper } => {
                let lo = expand_bounds(lower, p, t_f, "output")?;
                let hi = expand_bounds(upper, p, t_f, "output")?;
                if let (Some(t), true) = (norm_g, eps_con > T::zero()) {
                    cvar = cvar.minus(&AffineExpr::var(t).scaled(eps_con));
                }
                for (i, y) in ys.iter().enumerate() {
                    let slack = AffineExpr::var(s.index(i)).minus(&tau_e);
                    let mut rows = Vec::new();
                    for j in 0..p * t_f {
                        if hi[j].is_finite() {
                            rows.push(slack.clone().minus(&y.row(j)).offset(&[hi[j]]));
                        }
                        if lo[j].is_finite() {
                            rows.push(slack.clone().plus(&y.row(j)).offset(&[-lo[j]]));
                        }
                    }
                    layout.hinge_rows.push(b.nonneg(&AffineExpr::stack(&rows)));
                }
            }
            OutputConstraint::PiecewiseAffine { pieces, support } => {
                for pc in pieces {
                    canon::check_piece(&pc.a, p * t_f)?;
                }
                let dim = p * (t_ini + t_f) * blocks.columns();
                if let Some(sup) = support {
                    check_support(sup, dim)?;
                }
                let lambda = match (support, norm_g) {
                    (None, None) => None,
                    _ => Some(b.add_var()),
                };
                if let Some(l) = lambda {
                    cvar = cvar.minus(&AffineExpr::var(l).scaled(eps_con));
                    layout.lambda = Some(l);
                }
                if let (None, Some(t), Some(l)) = (support, norm_g, lambda) {
                    // unrestricted support: the optimal γ vanishes and the
                    // dual-norm row reduces to ‖a_k‖_q ‖g‖_q ≤ λ
                    let rows: Vec<_> = pieces
                        .iter()
                        .map(|pc| AffineExpr::var(l).minus(&AffineExpr::var(t).scaled(q.norm(pc.a.as_slice()))))
                        .collect();
                    b.nonneg(&AffineExpr::stack(&rows));
                }
                let pad = |a: &DVector<T>| {
                    let mut full = DVector::zeros(p * (t_ini + t_f));
                    full.rows_mut(p * t_ini, p * t_f).copy_from(a);
                    full
                };
                let eye_k = DMatrix::<T>::identity(blocks.columns(), blocks.columns());
                for (i, y) in ys.iter().enumerate() {
                    let slack = AffineExpr::var(s.index(i)).minus(&tau_e);
                    let xi = blocks.sample(i);
                    let mut rows = Vec::new();
                    for pc in pieces {
                        let mut row = slack.clone().minus(&y.left_mul(&canon::row_matrix(&pc.a))).offset(&[-pc.b]);
                        if let (Some(sup), Some(l)) = (support, lambda) {
                            let gamma = b.add_vars(sup.d.len());
                            b.nonneg(&AffineExpr::vars(gamma));
                            let gap = &sup.d - &sup.f * &xi;
                            row = row.minus(&AffineExpr::from_matrix(&canon::row_matrix(&gap), gamma));
                            let mg = AffineExpr::from_matrix(&pad(&pc.a).kronecker(&eye_k), g);
                            let dual = AffineExpr::from_matrix(&sup.f.transpose(), gamma).minus(&mg);
                            canon::norm_bound(&mut b, &dual, &AffineExpr::var(l), q);
                            layout.gamma.push(gamma);
                        }
                        rows.push(row);
                    }
                    layout.hinge_rows.push(b.nonneg(&AffineExpr::stack(&rows)));
                }
            }
            OutputConstraint::None => unreachable!("inactive constraints are skipped"),
        }
        layout.cvar_row = Some(b.nonneg(&cvar));
        for i in 0..n {
            layout.s_rows.push(b.nonneg(&AffineExpr::var(s.index(i))));
        }
        layout.tau = Some(tau);
        layout.s = Some(s);
    }

    let program = b.build();
    debug!(
        "assembled {:?} program: {} variables, {} equality rows, {} cone blocks",
        mode,
        program.var_count,
        program.eq_rows(),
        program.cone_rows.len()
    );
    Ok(Assembled { program, layout, mode, eval: Evaluation { cost: cost.clone(), y_ini: y_ini.clone(), eps_obj, l_obj, q } })
}

/// Errors with `EmptySupport` when `{ξ : F ξ ≤ d}` has no point.
fn check_support<T: Real>(sup: &Support<T>, dim: usize) -> Result<()> {
    if sup.f.ncols() != dim || sup.f.nrows() != sup.d.len() {
        return Err(DeepcError::DimensionMismatch(format!(
            "support F is {}×{}, d has length {}, sample dimension {dim}",
            sup.f.nrows(),
            sup.f.ncols(),
            sup.d.len()
        )));
    }
    if sup.d.is_empty() {
        return Ok(());
    }
    let mut b = ProgramBuilder::new();
    let xi = b.add_vars(dim);
    b.nonneg(&AffineExpr::from_matrix(&sup.f, xi).scaled(-T::one()).offset(sup.d.as_slice()));
    let res = solve(&b.build(), &Settings::default())?;
    match res.status {
        SolveStatus::Infeasible => Err(DeepcError::EmptySupport),
        _ => Ok(()),
    }
}

fn accept_status<T: Real>(raw: &SolveResult<T>) -> Result<()> {
    match raw.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible => Err(DeepcError::Infeasible),
        SolveStatus::Unbounded => Err(DeepcError::SolverFailure("program is unbounded".into())),
        SolveStatus::IterLimit if raw.residuals().max() <= T::lit(NEAR_OPTIMAL_RESIDUAL) => Ok(()),
        SolveStatus::IterLimit => Err(DeepcError::SolverFailure(format!(
            "iteration limit after {} iterations (residuals {:.1e}, {:.1e}, {:.1e})",
            raw.iterations, raw.primal_residual, raw.dual_residual, raw.gap
        ))),
    }
}

/// Maps a raw solve back to `g`, the planned inputs and the predictions.
pub fn extract_solution<T: Real>(asm: &Assembled<T>, raw: &SolveResult<T>, blocks: &DataBlocks<T>) -> Result<RobustSolution<T>> {
    accept_status(raw)?;
    if raw.x.len() != asm.program.var_count {
        return Err(DeepcError::DimensionMismatch("solution does not match the program".into()));
    }
    let g = asm.layout.g.slice(&raw.x);
    let u_star = Signal::from_vector(&(&blocks.uf * &g), blocks.m)?;
    let y_pred = blocks
        .yf
        .iter()
        .map(|yf| Signal::from_vector(&(yf * &g), blocks.p))
        .collect::<Result<Vec<_>>>()?;
    Ok(RobustSolution {
        objective: asm.objective_at(blocks, &g),
        solver_objective: raw.objective,
        tau: asm.layout.tau.map(|t| raw.x[t]),
        s: asm.layout.s.map(|s| s.slice(&raw.x).iter().copied().collect()).unwrap_or_default(),
        g,
        u_star,
        y_pred,
        status: raw.status,
        iterations: raw.iterations,
        solve_time: raw.solve_time,
        warm: WarmStart::from_result(raw),
    })
}

pub fn solve_deterministic<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    settings: &Settings<T>,
) -> Result<RobustSolution<T>> {
    solve_deterministic_from(blocks, cost, constraints, u_ini, y_ini, settings, None)
}

/// [`solve_deterministic`] started from a previous solution of the same shape.
pub fn solve_deterministic_from<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    settings: &Settings<T>,
    start: Option<&WarmStart<T>>,
) -> Result<RobustSolution<T>> {
    let asm = assemble_deterministic(blocks, cost, constraints, u_ini, y_ini)?;
    let raw = run(&asm.program, settings, start)?;
    extract_solution(&asm, &raw, blocks)
}

fn run<T: Real>(prog: &ConicProgram<T>, settings: &Settings<T>, start: Option<&WarmStart<T>>) -> Result<SolveResult<T>> {
    Ok(match start {
        Some(w) => solve_warm(prog, settings, w)?,
        None => solve(prog, settings)?,
    })
}

/// Assembles with the variant matching the output constraint, solves and extracts.
pub fn solve_robust<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    spec: &AmbiguitySpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    settings: &Settings<T>,
) -> Result<RobustSolution<T>> {
    solve_robust_from(blocks, cost, constraints, spec, u_ini, y_ini, settings, None)
}

/// [`solve_robust`] started from a previous solution of the same shape.
#[allow(clippy::too_many_arguments)]
pub fn solve_robust_from<T: Real>(
    blocks: &DataBlocks<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    spec: &AmbiguitySpec<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    settings: &Settings<T>,
    start: Option<&WarmStart<T>>,
) -> Result<RobustSolution<T>> {
    let asm = assemble_robust_inner(blocks, cost, constraints, spec, u_ini, y_ini)?;
    let raw = run(&asm.program, settings, start)?;
    extract_solution(&asm, &raw, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{presets, simulate, NoiseSpec};
    use crate::robustctl::{AffinePiece, CostTerm, InputBox, TermForm};
    use crate::trajlib::{partition_data, Structure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blocks(n: usize, noise: f64, structure: Structure, len: usize) -> DataBlocks<f64> {
        blocks_with_window(n, noise, structure, len, 2)
    }

    fn blocks_with_window(n: usize, noise: f64, structure: Structure, len: usize, t_ini: usize) -> DataBlocks<f64> {
        let sys = presets::double_integrator::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = Signal::from_scalars(&u).unwrap();
        let ys: Vec<_> = (0..n)
            .map(|i| {
                let ns = if noise > 0.0 { NoiseSpec::gaussian(noise, 3).with_stream(i as u64) } else { NoiseSpec::none() };
                simulate(&sys, &DVector::zeros(2), &u, &ns).unwrap()
            })
            .collect();
        partition_data(&u, &ys, t_ini, 5, structure).unwrap()
    }

    fn tracking_cost(form: TermForm) -> CostSpec<f64> {
        CostSpec {
            f1: vec![CostTerm::tracking(0.1, &[0.0], 5, form)],
            f2: vec![CostTerm::tracking(1.0, &[1.0], 5, form)],
            f3: vec![CostTerm::tracking(10.0, &[0.0], 2, TermForm::Norm2)],
        }
    }

    #[test]
    fn zero_cost_feasibility_has_zero_value() {
        let bl = blocks(1, 0.0, Structure::Hankel, 60);
        // the 4th recorded window is itself a trajectory
        let col = 3;
        let u_ini = bl.up.column(col).into_owned();
        let y_ini = bl.yp[0].column(col).into_owned();
        let sol = solve_deterministic(&bl, &CostSpec::default(), &ConstraintSpec::default(), &u_ini, &y_ini, &Settings::default())
            .unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!((&bl.up * &sol.g - &u_ini).amax() < 1e-6);
    }

    #[test]
    fn inconsistent_initial_output_is_infeasible() {
        // three samples over-determine the state of the double integrator
        let bl = blocks_with_window(1, 0.0, Structure::Hankel, 60, 3);
        let u_ini = DVector::zeros(3);
        // free response with zero input has constant increments
        let y_ini = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let asm = assemble_deterministic(&bl, &CostSpec::default(), &ConstraintSpec::default(), &u_ini, &y_ini).unwrap();
        let raw = solve(&asm.program, &Settings::default()).unwrap();
        assert_eq!(raw.status, SolveStatus::Infeasible);
        assert!(matches!(extract_solution(&asm, &raw, &bl), Err(DeepcError::Infeasible)));
    }

    #[test]
    fn zero_window_and_zero_targets_give_zero_input() {
        let bl = blocks(1, 0.0, Structure::Hankel, 60);
        let cost = CostSpec { f1: vec![CostTerm::squared(1.0, None, None)], f2: vec![CostTerm::squared(1.0, None, None)], f3: vec![] };
        let z = DVector::zeros(2);
        let sol = solve_deterministic(&bl, &cost, &ConstraintSpec::default(), &z, &z, &Settings::default()).unwrap();
        assert_eq!(sol.u_star.len(), 5);
        assert!(sol.u_star.matrix().amax() < 1e-6);
    }

    #[test]
    fn census_of_robust_program() {
        let bl = blocks(3, 0.01, Structure::Page, 7 * 10);
        assert_eq!(bl.columns(), 10);
        let cons = ConstraintSpec {
            input: None,
            output: OutputConstraint::output_box(vec![-2.0], vec![2.0]).unwrap(),
            alpha: 0.1,
        };
        let spec = AmbiguitySpec::new(0.01, NormIndex::Two);
        let cost = tracking_cost(TermForm::Norm2);
        let asm = assemble_robust(&bl, &cost, &cons, &spec, &DVector::zeros(2), &DVector::zeros(2)).unwrap();
        // f1 once, f2 and f3 per batch
        let epigraphs = 1 + 2 * 3;
        assert_eq!(asm.layout.cost_epigraphs, epigraphs);
        assert_eq!(asm.program.var_count, 10 + 1 + 3 + epigraphs + 1);
        assert_eq!(asm.program.eq_rows(), 2);
        assert!(asm.layout.cvar_row.is_some());
        assert_eq!(asm.layout.hinge_rows.len(), 3);
        assert_eq!(asm.layout.s_rows.len(), 3);
    }

    #[test]
    fn squared_output_terms_are_rejected_when_robust() {
        let bl = blocks(2, 0.01, Structure::Page, 70);
        let cost = tracking_cost(TermForm::SqNorm2);
        let z = DVector::zeros(2);
        let spec = AmbiguitySpec::new(0.1, NormIndex::Two);
        let err = assemble_robust(&bl, &cost, &ConstraintSpec::default(), &spec, &z, &z);
        assert!(matches!(err, Err(DeepcError::SquaredTermInRobustMode)));
        let spec0 = AmbiguitySpec::new(0.0, NormIndex::Two);
        assert!(assemble_robust(&bl, &cost, &ConstraintSpec::default(), &spec0, &z, &z).is_ok());
    }

    #[test]
    fn reported_objective_matches_reevaluation() {
        let bl = blocks(3, 0.02, Structure::Page, 7 * 12);
        let cons = ConstraintSpec {
            input: Some(InputBox::new(vec![-1.0], vec![1.0]).unwrap()),
            output: OutputConstraint::output_box(vec![-0.5], vec![1.2]).unwrap(),
            alpha: 0.2,
        };
        let spec = AmbiguitySpec::new(0.05, NormIndex::Two);
        let z = DVector::zeros(2);
        let sol = solve_robust(&bl, &tracking_cost(TermForm::Norm2), &cons, &spec, &z, &z, &Settings::default()).unwrap();
        let asm = assemble_robust(&bl, &tracking_cost(TermForm::Norm2), &cons, &spec, &z, &z).unwrap();
        assert!((sol.objective - asm.objective_at(&bl, &sol.g)).abs() < 1e-8);
        assert!((sol.objective - sol.solver_objective).abs() < 1e-5 * (1.0 + sol.objective.abs()));
        assert_eq!(sol.u_star.to_vector(), &bl.uf * &sol.g);
    }

    #[test]
    fn empty_support_is_reported() {
        let bl = blocks(1, 0.01, Structure::Page, 7 * 4);
        let dim = 7 * bl.columns();
        // ξ₀ ≤ −1 and −ξ₀ ≤ −1
        let mut f = DMatrix::zeros(2, dim);
        f[(0, 0)] = 1.0;
        f[(1, 0)] = -1.0;
        let cons = ConstraintSpec {
            input: None,
            output: OutputConstraint::PiecewiseAffine {
                pieces: vec![AffinePiece { a: DVector::from_element(5, 1.0), b: -1.0 }],
                support: Some(Support { f, d: DVector::from_vec(vec![-1.0, -1.0]) }),
            },
            alpha: 0.1,
        };
        let z = DVector::zeros(2);
        let spec = AmbiguitySpec::new(0.1, NormIndex::Two);
        let err = assemble_robust_affine(&bl, &tracking_cost(TermForm::Norm2), &cons, &spec, &z, &z);
        assert!(matches!(err, Err(DeepcError::EmptySupport)));
    }

    #[test]
    fn very_negative_piece_leaves_problem_unconstrained() {
        let bl = blocks(2, 0.01, Structure::Page, 7 * 10);
        let z = DVector::zeros(2);
        let spec = AmbiguitySpec::new(0.01, NormIndex::Two);
        let cost = tracking_cost(TermForm::Norm2);
        let free = solve_robust(&bl, &cost, &ConstraintSpec::default(), &spec, &z, &z, &Settings::default()).unwrap();
        let cons = ConstraintSpec {
            input: None,
            output: OutputConstraint::PiecewiseAffine {
                pieces: vec![AffinePiece { a: DVector::from_element(5, 1.0), b: -1e4 }],
                support: None,
            },
            alpha: 0.1,
        };
        let held = solve_robust(&bl, &cost, &cons, &spec, &z, &z, &Settings::default()).unwrap();
        assert!((free.objective - held.objective).abs() < 1e-5);
    }
}
