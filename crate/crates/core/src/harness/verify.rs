//! Self-checks runnable from the command line.

use std::fmt;
use std::str::FromStr;

use deepc_conic::Settings;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ambiguity::{epsilon_radius, worst_case_expectation_oracle, AmbiguitySpec, Concentration, EmpiricalDistribution, NormIndex, OracleSettings};
use crate::plant::{is_controllable, lag, mpc_solve, propagate, simulate, NoiseSpec, SystemModel};
use crate::robustctl::{assemble_robust, solve_deterministic, ConstraintSpec, CostSpec, CostTerm, InputBox, OutputConstraint, TermForm};
use crate::trajlib::{
    check_membership, data_matrix_rank, is_page_exciting, page_length_bound, partition_data, trajectory_vector, Signal, Structure,
    DEFAULT_RANK_TOL,
};
use crate::{DeepcError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Lemma,
    Reformulation,
    Equivalence,
    Concentration,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lemma, Suite::Reformulation, Suite::Equivalence, Suite::Concentration];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Lemma => "lemma",
            Suite::Reformulation => "reformulation",
            Suite::Equivalence => "equivalence",
            Suite::Concentration => "concentration",
        }
    }
}

impl FromStr for Suite {
    type Err = DeepcError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| DeepcError::Invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: String, measured: f64, tolerance: f64, passed: bool) {
        self.checks.push(Check { name, passed, measured, tolerance });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}/{}: measured {:.3e}, tolerance {:.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                self.suite.as_str(),
                c.name,
                c.measured,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

pub fn verify(suite: Suite, seed: u64) -> Result<VerifyReport> {
    match suite {
        Suite::Lemma => lemma(seed),
        Suite::Reformulation => reformulation(seed),
        Suite::Equivalence => equivalence(seed),
        Suite::Concentration => concentration(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Random system with spectral radius in `[0.5, 0.95]` that is controllable
/// and has a lag (is observable).
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> SystemModel<f64> {
    loop {
        let a = gaussian(rng, n, n);
        let rho = SystemModel::new(a.clone(), DMatrix::zeros(n, m), DMatrix::zeros(p, n), DMatrix::zeros(p, m))
            .expect("square state matrix")
            .spectral_radius();
        if rho < 1e-3 {
            continue;
        }
        let a = a * (rng.random_range(0.5..0.95) / rho);
        let sys = SystemModel::new(a, gaussian(rng, n, m), gaussian(rng, p, n), gaussian(rng, p, m)).expect("consistent shapes");
        if is_controllable(&sys, 1e-8) && lag(&sys, 1e-8).is_ok() {
            return sys;
        }
    }
}

fn random_signal(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Signal<f64> {
    Signal::new(gaussian(rng, dim, len)).expect("nonempty")
}

/// Noise-free Page data of depth `n + 1` from a Page-exciting input: fresh
/// trajectories must lie in the span and the rank must be `m L + n`.
fn lemma(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport { suite: Suite::Lemma, checks: Vec::new() };
    for k in 0..20 {
        let (n, m, p) = (rng.random_range(1..=4), rng.random_range(1..=2), rng.random_range(1..=2));
        let sys = random_system(&mut rng, n, m, p);
        let l = lag(&sys, 1e-8)?;
        let depth = n + 1;
        let len = page_length_bound(m, depth, n + 1);
        let u = loop {
            let u = random_signal(&mut rng, m, len);
            if is_page_exciting(&u, depth, n + 1, DEFAULT_RANK_TOL)? {
                break u;
            }
        };
        let x0 = gaussian(&mut rng, n, 1).column(0).into_owned();
        let y = simulate(&sys, &x0, &u, &NoiseSpec::none())?;
        let blocks = partition_data(&u, &[y], l, depth - l, Structure::Page)?;
        let rank = data_matrix_rank(&blocks, 0, DEFAULT_RANK_TOL);
        let expected = m * depth + n;
        report.push(format!("system {k} rank (n={n}, m={m}, p={p})"), (rank as f64 - expected as f64).abs(), 0.0, rank == expected);
        let mut misses = 0;
        for _ in 0..50 {
            let uf = random_signal(&mut rng, m, depth);
            let xf = gaussian(&mut rng, n, 1).column(0).into_owned();
            let yf = simulate(&sys, &xf, &uf, &NoiseSpec::none())?;
            if !check_membership(&blocks, 0, &trajectory_vector(&uf, &yf, l), 1e-7)? {
                misses += 1;
            }
        }
        report.push(format!("system {k} membership"), misses as f64, 0.0, misses == 0);
    }
    Ok(report)
}

/// Robust objective at a fixed `g` against the brute-force worst case.
fn reformulation(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport { suite: Suite::Reformulation, checks: Vec::new() };
    let (t_ini, t_f, cols) = (2, 3, 5);
    for k in 0..10 {
        let sys = random_system(&mut rng, 2, 1, 1);
        let batches = 1 + k % 5;
        let u = random_signal(&mut rng, 1, cols * (t_ini + t_f));
        let ys = (0..batches)
            .map(|i| simulate(&sys, &DVector::zeros(2), &u, &NoiseSpec::gaussian(0.1, seed + k as u64).with_stream(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let blocks = partition_data(&u, &ys, t_ini, t_f, Structure::Page)?;
        let r = if k % 2 == 0 { NormIndex::Two } else { NormIndex::One };
        let cost = CostSpec {
            f1: vec![],
            f2: vec![CostTerm::tracking(1.0 + rng.random::<f64>(), &[rng.random_range(-1.0..1.0)], t_f, TermForm::Norm2)],
            f3: vec![CostTerm::norm(2.0 + rng.random::<f64>(), None, None)],
        };
        let eps = 0.05 + 0.2 * rng.random::<f64>();
        let spec = AmbiguitySpec::new(eps, r);
        let u_ini = DVector::zeros(t_ini);
        let y_ini = gaussian(&mut rng, t_ini, 1).column(0).into_owned();
        let asm = assemble_robust(&blocks, &cost, &ConstraintSpec::unconstrained(), &spec, &u_ini, &y_ini)?;
        let g = gaussian(&mut rng, cols, 1).column(0).into_owned();
        let reformulated = asm.objective_at(&blocks, &g);
        let dist = EmpiricalDistribution::from_blocks(&blocks, r)?;
        let past = t_ini;
        let phi = |c: &DVector<f64>| {
            let sigma = c.rows(0, past) - &y_ini;
            cost.evaluate_f2(&c.rows(past, t_f).into_owned()) + cost.evaluate_f3(&sigma)
        };
        let oracle = worst_case_expectation_oracle(&dist, &phi, &g, eps, &OracleSettings { seed: k as u64, ..Default::default() })?;
        let rel = (reformulated - oracle).abs() / oracle.abs().max(1e-12);
        report.push(format!("instance {k} (N={batches}, r={r})"), rel, 0.01, rel <= 0.01);
    }
    Ok(report)
}

/// Deterministic DeePC on noise-free data against model-based MPC from the
/// state reached by the initial window.
fn equivalence(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport { suite: Suite::Equivalence, checks: Vec::new() };
    let t_f = 6;
    let mut settings = Settings::default();
    settings.max_iter = 400_000;
    for k in 0..10 {
        let (n, m, p) = (rng.random_range(2..=3), rng.random_range(1..=2), rng.random_range(1..=2));
        let sys = random_system(&mut rng, n, m, p);
        let t_ini = lag(&sys, 1e-8)?;
        let u = random_signal(&mut rng, m, 400);
        let y = simulate(&sys, &DVector::zeros(n), &u, &NoiseSpec::none())?;
        let blocks = partition_data(&u, &[y], t_ini, t_f, Structure::Hankel)?;
        let x_start = gaussian(&mut rng, n, 1).column(0).into_owned();
        let u_win = random_signal(&mut rng, m, t_ini);
        let y_win = simulate(&sys, &x_start, &u_win, &NoiseSpec::none())?;
        let x_now = propagate(&sys, &x_start, &u_win);
        let reference: Vec<f64> = (0..p).map(|_| rng.random_range(2.0..4.0)).collect();
        let cost = CostSpec {
            f1: vec![CostTerm::squared(0.1, None, None)],
            f2: vec![CostTerm::tracking(1.0, &reference, t_f, TermForm::SqNorm2)],
            f3: vec![],
        };
        let bound = 0.3;
        let constraints = ConstraintSpec {
            input: Some(InputBox::new(vec![-bound; m], vec![bound; m])?),
            output: OutputConstraint::None,
            alpha: 0.1,
        };
        let deepc = solve_deterministic(&blocks, &cost, &constraints, &u_win.to_vector(), &y_win.to_vector(), &settings)?;
        let mpc = mpc_solve(&sys, &x_now, &cost, &constraints, t_f, &settings)?;
        let diff = (deepc.u_star.to_vector() - mpc.u.to_vector()).amax();
        let active = mpc.u.to_vector().iter().any(|v| (v.abs() - bound).abs() < 1e-6);
        report.push(format!("instance {k} (n={n}, m={m}, p={p}, box active: {active})"), diff, 1e-6, diff <= 1e-6 && active);
    }
    Ok(report)
}

/// Radius formula on hand-computed values and its monotonicity in `N`.
fn concentration() -> Result<VerifyReport> {
    let mut report = VerifyReport { suite: Suite::Concentration, checks: Vec::new() };
    let mut spec = AmbiguitySpec::new(0.0, NormIndex::Two);
    spec.concentration = Some(Concentration { c1: 1.0, c2: 1.0, a: 2.0 });
    // ln(c1/β) = 1 ≤ c2 N = 2: (1/2)^(1/5)
    spec.beta = (-1.0f64).exp();
    let e = epsilon_radius(&spec, 2, 5)?;
    let d = (e - 0.5f64.powf(0.2)).abs();
    report.push("power branch".into(), d, 1e-10, d <= 1e-10);
    // ln(c1/β) = 4 > c2 N = 2: 2^(1/2)
    spec.beta = (-4.0f64).exp();
    let e = epsilon_radius(&spec, 2, 5)?;
    let d = (e - 2f64.sqrt()).abs();
    report.push("small-sample branch".into(), d, 1e-10, d <= 1e-10);
    spec.beta = 0.05;
    spec.concentration = Some(Concentration { c1: 2.0, c2: 0.5, a: 1.5 });
    let radii = (1..=100).map(|n| epsilon_radius(&spec, n, 3)).collect::<Result<Vec<_>>>()?;
    let worst = radii.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    report.push("nonincreasing in N over 1..=100".into(), worst.max(0.0), 0.0, worst <= 0.0);
    Ok(report)
}
