//! Receding-horizon execution against a simulated plant.

use std::collections::VecDeque;
use std::time::Instant;

use deepc_conic::{Settings, SolveStatus, WarmStart};
use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySpec;
use crate::plant::{NoiseSpec, Simulator, SystemModel};
use crate::robustctl::{solve_deterministic_from, solve_robust_from, ConstraintSpec, CostSpec, RobustSolution};
use crate::trajlib::{DataBlocks, Signal};
use crate::{DeepcError, Result};

/// How the first `T_ini` samples are produced before control starts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    /// Hold `u_ref`.
    #[default]
    HoverInput,
    /// Replay the past input window of the first recorded column.
    RecordedTail,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnFailure {
    /// Apply the next input of the last successful plan (or `u_ref` once it
    /// is used up) and re-solve at the next step.
    #[default]
    ReapplyShifted,
    Abort,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    /// Inputs applied per solve, `1 ≤ ν ≤ T_f`.
    pub nu: usize,
    pub sim_steps: usize,
    pub y_ref: DVector<f64>,
    pub u_ref: DVector<f64>,
    pub bootstrap: Bootstrap,
    pub on_failure: OnFailure,
}

impl LoopConfig {
    pub fn validate(&self, t_f: usize, m: usize, p: usize) -> Result<()> {
        if self.nu == 0 || self.nu > t_f {
            return Err(DeepcError::Invalid(format!("control horizon {} outside 1..={t_f}", self.nu)));
        }
        if self.sim_steps < self.nu {
            return Err(DeepcError::Invalid("simulation shorter than one control horizon".into()));
        }
        if self.y_ref.len() != p || self.u_ref.len() != m {
            return Err(DeepcError::DimensionMismatch("references do not match the plant".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Controller {
    /// Hard initial-window equalities on batch 0, hard output set.
    Deterministic,
    Robust(AmbiguitySpec<f64>),
}

/// True plant used in closed loop.
#[derive(Clone, Debug)]
pub struct PlantSetup<'a> {
    pub sys: &'a SystemModel<f64>,
    pub noise: NoiseSpec,
    pub x0: DVector<f64>,
}

/// Data and problem shared by every solve of a run.
#[derive(Clone, Debug)]
pub struct ControlProblem<'a> {
    pub blocks: &'a DataBlocks<f64>,
    pub cost: &'a CostSpec<f64>,
    pub constraints: &'a ConstraintSpec<f64>,
    pub controller: Controller,
    pub settings: Settings<f64>,
}

impl ControlProblem<'_> {
    pub fn solve(&self, u_ini: &DVector<f64>, y_ini: &DVector<f64>) -> Result<RobustSolution<f64>> {
        self.solve_from(u_ini, y_ini, None)
    }

    pub fn solve_from(
        &self,
        u_ini: &DVector<f64>,
        y_ini: &DVector<f64>,
        start: Option<&WarmStart<f64>>,
    ) -> Result<RobustSolution<f64>> {
        match &self.controller {
            Controller::Deterministic => {
                solve_deterministic_from(self.blocks, self.cost, self.constraints, u_ini, y_ini, &self.settings, start)
            }
            Controller::Robust(spec) => {
                solve_robust_from(self.blocks, self.cost, self.constraints, spec, u_ini, y_ini, &self.settings, start)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub u: DVector<f64>,
    /// Noise-free plant output.
    pub y: DVector<f64>,
    /// Output as seen by the controller.
    pub y_meas: DVector<f64>,
    /// Set on steps that started a solve.
    pub objective: Option<f64>,
    pub status: String,
    pub solve_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
    pub y_ref: DVector<f64>,
    pub tracking_error: f64,
    pub failures: usize,
}

impl RunLog {
    /// `Σ_t ‖y_t − y_ref‖₂²` over the recorded steps.
    pub fn recompute_tracking_error(&self) -> f64 {
        tracking_error(&self.records, &self.y_ref)
    }

    pub fn solve_times_ms(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.solve_ms).collect()
    }

    pub fn mean_solve_ms(&self) -> Option<f64> {
        let t = self.solve_times_ms();
        (!t.is_empty()).then(|| t.iter().sum::<f64>() / t.len() as f64)
    }

    /// Fraction of steps whose output lies in `[lower, upper]` componentwise.
    pub fn fraction_inside(&self, lower: &[f64], upper: &[f64]) -> f64 {
        if self.records.is_empty() {
            return 1.0;
        }
        let inside = self
            .records
            .iter()
            .filter(|r| r.y.iter().enumerate().all(|(i, &v)| v >= lower[i % lower.len()] && v <= upper[i % upper.len()]))
            .count();
        inside as f64 / self.records.len() as f64
    }
}

fn tracking_error(records: &[StepRecord], y_ref: &DVector<f64>) -> f64 {
    records.iter().map(|r| (&r.y - y_ref).norm_squared()).sum()
}

fn stack(window: &VecDeque<DVector<f64>>) -> DVector<f64> {
    DVector::from_iterator(window.iter().map(|v| v.len()).sum(), window.iter().flat_map(|v| v.iter().copied()))
}

fn bootstrap_inputs(cfg: &LoopConfig, blocks: &DataBlocks<f64>) -> Result<Vec<DVector<f64>>> {
    let t_ini = blocks.t_ini;
    match cfg.bootstrap {
        Bootstrap::HoverInput => Ok(vec![cfg.u_ref.clone(); t_ini]),
        Bootstrap::RecordedTail => {
            let col = blocks.up.column(0).into_owned();
            let sig = Signal::from_vector(&col, blocks.m)?;
            Ok((0..t_ini).map(|t| sig.sample(t)).collect())
        }
    }
}

struct Window {
    t_ini: usize,
    u: VecDeque<DVector<f64>>,
    y: VecDeque<DVector<f64>>,
    applied: Vec<DVector<f64>>,
    measured: Vec<DVector<f64>>,
}

impl Window {
    fn push(&mut self, u: DVector<f64>, y: DVector<f64>) {
        self.applied.push(u.clone());
        self.measured.push(y.clone());
        self.u.push_back(u);
        self.y.push_back(y);
        if self.u.len() > self.t_ini {
            self.u.pop_front();
            self.y.pop_front();
        }
    }

    /// `(u_ini, y_ini)`, checked against the full history.
    fn current(&self) -> (DVector<f64>, DVector<f64>) {
        let n = self.applied.len();
        assert!(
            self.u.len() == self.t_ini
                && self.u.iter().eq(self.applied[n - self.t_ini..].iter())
                && self.y.iter().eq(self.measured[n - self.t_ini..].iter()),
            "initial window is not the most recent T_ini samples"
        );
        (stack(&self.u), stack(&self.y))
    }
}

/// Runs the loop for `cfg.sim_steps` control steps after a `T_ini`-step
/// bootstrap. Each period solves with the most recent `T_ini` applied inputs
/// and measured outputs, applies the first `ν` planned inputs and logs the
/// noise-free output.
pub fn run_receding_horizon(plant: &PlantSetup, problem: &ControlProblem, cfg: &LoopConfig) -> Result<RunLog> {
    let blocks = problem.blocks;
    cfg.validate(blocks.t_f, blocks.m, blocks.p)?;
    if plant.sys.m() != blocks.m || plant.sys.p() != blocks.p {
        return Err(DeepcError::DimensionMismatch("plant does not match the recorded data".into()));
    }
    let mut sim = Simulator::new(plant.sys, &plant.x0, &plant.noise)?;
    let mut window = Window {
        t_ini: blocks.t_ini,
        u: VecDeque::new(),
        y: VecDeque::new(),
        applied: Vec::new(),
        measured: Vec::new(),
    };
    for u in bootstrap_inputs(cfg, blocks)? {
        let out = sim.step(&u)?;
        window.push(u, out.y_meas);
    }

    let mut records = Vec::with_capacity(cfg.sim_steps);
    let mut failures = 0;
    let mut plan: Option<(Signal<f64>, usize)> = None;
    let mut warm: Option<WarmStart<f64>> = None;
    let mut t = 0;
    while t < cfg.sim_steps {
        let (u_ini, y_ini) = window.current();
        let start = Instant::now();
        let solved = problem.solve_from(&u_ini, &y_ini, warm.as_ref());
        let solve_ms = start.elapsed().as_secs_f64() * 1e3;
        let (n_apply, mut objective, mut status) = match solved {
            Ok(sol) => {
                let status = match sol.status {
                    SolveStatus::Optimal => "optimal",
                    _ => "near_optimal",
                };
                let obj = sol.objective;
                warm = Some(sol.warm);
                plan = Some((sol.u_star, 0));
                (cfg.nu, Some(obj), status)
            }
            Err(e) => {
                failures += 1;
                if cfg.on_failure == OnFailure::Abort {
                    return Err(e);
                }
                warn!("solve failed at step {t}: {e}");
                (1, None, "failed")
            }
        };
        let mut solve_ms = Some(solve_ms);
        for _ in 0..n_apply {
            if t >= cfg.sim_steps {
                break;
            }
            let u = match &mut plan {
                Some((sig, idx)) if *idx < sig.len() => {
                    *idx += 1;
                    sig.sample(*idx - 1)
                }
                _ => cfg.u_ref.clone(),
            };
            let out = sim.step(&u)?;
            if !out.y_true.iter().all(|v| v.is_finite()) {
                return Err(DeepcError::Invalid(format!("plant output diverged at step {t}")));
            }
            records.push(StepRecord {
                t,
                u: u.clone(),
                y: out.y_true,
                y_meas: out.y_meas.clone(),
                objective: objective.take(),
                status: status.to_string(),
                solve_ms: solve_ms.take(),
            });
            status = "planned";
            window.push(u, out.y_meas);
            t += 1;
        }
    }
    let tracking_error = tracking_error(&records, &cfg.y_ref);
    Ok(RunLog { records, y_ref: cfg.y_ref.clone(), tracking_error, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::collect::{collect_data, CollectConfig, InputGen};
    use crate::plant::presets;
    use crate::robustctl::{CostTerm, InputBox, OutputConstraint, TermForm};
    use crate::trajlib::Structure;

    fn setup(nu: usize) -> (SystemModel<f64>, DataBlocks<f64>, CostSpec<f64>, ConstraintSpec<f64>, LoopConfig) {
        let sys = presets::double_integrator::<f64>();
        let cc = CollectConfig {
            input: InputGen { seed: 11, scale: 1.0 },
            len: 120,
            batches: 1,
            t_ini: 2,
            t_f: 8,
            structure: Structure::Hankel,
            columns: None,
            x0: DVector::zeros(2),
            stabilizer: None,
        };
        let blocks = collect_data(&sys, &NoiseSpec::none(), &cc).unwrap();
        let cost = CostSpec {
            f1: vec![CostTerm::tracking(0.01, &[0.0], 8, TermForm::SqNorm2)],
            f2: vec![CostTerm::tracking(1.0, &[1.0], 8, TermForm::SqNorm2)],
            f3: vec![],
        };
        let cons = ConstraintSpec {
            input: Some(InputBox::new(vec![-2.0], vec![2.0]).unwrap()),
            output: OutputConstraint::None,
            alpha: 0.1,
        };
        let cfg = LoopConfig {
            nu,
            sim_steps: 40,
            y_ref: DVector::from_vec(vec![1.0]),
            u_ref: DVector::zeros(1),
            bootstrap: Bootstrap::HoverInput,
            on_failure: OnFailure::ReapplyShifted,
        };
        (sys, blocks, cost, cons, cfg)
    }

    fn run(nu: usize) -> RunLog {
        let (sys, blocks, cost, cons, cfg) = setup(nu);
        let plant = PlantSetup { sys: &sys, noise: NoiseSpec::none(), x0: DVector::zeros(2) };
        let problem = ControlProblem {
            blocks: &blocks,
            cost: &cost,
            constraints: &cons,
            controller: Controller::Deterministic,
            settings: Settings::default(),
        };
        run_receding_horizon(&plant, &problem, &cfg).unwrap()
    }

    #[test]
    fn deterministic_loop_reaches_reference() {
        let log = run(1);
        assert_eq!(log.records.len(), 40);
        assert_eq!(log.failures, 0);
        let last = log.records.last().unwrap();
        assert!((last.y[0] - 1.0).abs() < 1e-3, "final output {}", last.y[0]);
        assert_eq!(log.tracking_error, log.recompute_tracking_error());
    }

    #[test]
    fn full_horizon_executes_plan_between_solves() {
        let log = run(8);
        let solves = log.records.iter().filter(|r| r.solve_ms.is_some()).count();
        assert_eq!(solves, 5);
        assert!(log.records.iter().skip(1).take(7).all(|r| r.status == "planned"));
    }

    #[test]
    fn rejects_bad_horizon() {
        let (sys, blocks, cost, cons, cfg) = setup(1);
        let plant = PlantSetup { sys: &sys, noise: NoiseSpec::none(), x0: DVector::zeros(2) };
        let problem = ControlProblem {
            blocks: &blocks,
            cost: &cost,
            constraints: &cons,
            controller: Controller::Deterministic,
            settings: Settings::default(),
        };
        let bad = LoopConfig { nu: 9, ..cfg };
        assert!(run_receding_horizon(&plant, &problem, &bad).is_err());
    }
}
