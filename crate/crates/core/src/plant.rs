//! Discrete-time LTI plants `x⁺ = A x + B u`, `y = C x + D u + w`.
//!
//! Besides simulation this module computes the structural quantities used by
//! the data-driven side (observability matrix, lag, impulse-response Toeplitz
//! matrix, controllability), recovers initial states from input/output
//! windows and solves the model-based predictive control baseline.

use deepc_conic::{solve, AffineExpr, ProgramBuilder, Settings, SolveStatus};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{least_squares, numerical_rank};
use crate::robustctl::canon;
use crate::robustctl::{ConstraintSpec, CostSpec, OutputConstraint};
use crate::trajlib::{Signal, DEFAULT_RANK_TOL};
use crate::{DeepcError, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
}

impl<T: Real> SystemModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let (m, p) = (b.ncols(), c.nrows());
        if n == 0 || m == 0 || p == 0 {
            return Err(DeepcError::DimensionMismatch("state, input and output dimensions must be positive".into()));
        }
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || d.shape() != (p, m) {
            return Err(DeepcError::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(SystemModel { a, b, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Converts the scalar type, e.g. to run an `f64` preset in `f32`.
    pub fn cast<S: Real>(&self) -> SystemModel<S> {
        let cv = |m: &DMatrix<T>| m.map(|v| S::lit(v.to_f64()));
        SystemModel { a: cv(&self.a), b: cv(&self.b), c: cv(&self.c), d: cv(&self.d) }
    }

    /// One step of the noise-free dynamics: `(x⁺, y)`.
    pub fn step(&self, x: &DVector<T>, u: &DVector<T>) -> (DVector<T>, DVector<T>) {
        let y = &self.c * x + &self.d * u;
        (&self.a * x + &self.b * u, y)
    }

    /// Largest eigenvalue modulus of `A`.
    pub fn spectral_radius(&self) -> T {
        self.a.complex_eigenvalues().iter().fold(T::zero(), |acc, e| acc.max((e.re * e.re + e.im * e.im).sqrt()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    GaussianOutput,
}

/// Additive output noise; each `(seed, stream)` pair gives an independent,
/// reproducible sequence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    /// Per output channel; a single entry applies to every channel.
    #[serde(default)]
    pub std: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn gaussian(std: f64, seed: u64) -> Self {
        NoiseSpec { kind: NoiseKind::GaussianOutput, std: vec![std], seed, stream: 0 }
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        NoiseSpec { stream, ..self.clone() }
    }

    pub fn is_active(&self) -> bool {
        self.kind == NoiseKind::GaussianOutput && self.std.iter().any(|&s| s > 0.0)
    }

    fn channel_std(&self, p: usize) -> Result<Vec<f64>> {
        if self.std.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(DeepcError::Invalid("noise standard deviations must be finite and nonnegative".into()));
        }
        match self.std.len() {
            1 => Ok(vec![self.std[0]; p]),
            l if l == p => Ok(self.std.clone()),
            l => Err(DeepcError::DimensionMismatch(format!("{l} noise levels for {p} outputs"))),
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Output of one simulation step.
#[derive(Clone, Debug)]
pub struct StepOutput<T: Real> {
    /// Noise-free output `C x + D u`.
    pub y_true: DVector<T>,
    /// Measured output (noise added).
    pub y_meas: DVector<T>,
}

/// A stateful simulation run that owns its state and noise stream.
#[derive(Clone, Debug)]
pub struct Simulator<'a, T: Real> {
    sys: &'a SystemModel<T>,
    x: DVector<T>,
    std: Vec<T>,
    rng: Option<ChaCha8Rng>,
}

impl<'a, T: Real> Simulator<'a, T> {
    pub fn new(sys: &'a SystemModel<T>, x0: &DVector<T>, noise: &NoiseSpec) -> Result<Self> {
        if x0.len() != sys.n() {
            return Err(DeepcError::DimensionMismatch(format!("x0 has length {}, system order {}", x0.len(), sys.n())));
        }
        let (std, rng) = if noise.is_active() {
            (noise.channel_std(sys.p())?.into_iter().map(T::lit).collect(), Some(noise.rng()))
        } else {
            (vec![T::zero(); sys.p()], None)
        };
        Ok(Simulator { sys, x: x0.clone(), std, rng })
    }

    pub fn state(&self) -> &DVector<T> {
        &self.x
    }

    pub fn set_state(&mut self, x: DVector<T>) {
        self.x = x;
    }

    pub fn step(&mut self, u: &DVector<T>) -> Result<StepOutput<T>> {
        if u.len() != self.sys.m() {
            return Err(DeepcError::DimensionMismatch(format!("input of length {}, expected {}", u.len(), self.sys.m())));
        }
        let (x_next, y_true) = self.sys.step(&self.x, u);
        self.x = x_next;
        let mut y_meas = y_true.clone();
        if let Some(rng) = self.rng.as_mut() {
            for (y, s) in y_meas.iter_mut().zip(&self.std) {
                let w: f64 = StandardNormal.sample(rng);
                *y += *s * T::lit(w);
            }
        }
        Ok(StepOutput { y_true, y_meas })
    }
}

/// Simulates `u` from `x0`; returns the measured output.
pub fn simulate<T: Real>(sys: &SystemModel<T>, x0: &DVector<T>, u: &Signal<T>, noise: &NoiseSpec) -> Result<Signal<T>> {
    if u.dim() != sys.m() {
        return Err(DeepcError::DimensionMismatch(format!("input dimension {}, expected {}", u.dim(), sys.m())));
    }
    let mut sim = Simulator::new(sys, x0, noise)?;
    let mut y = DMatrix::zeros(sys.p(), u.len());
    for t in 0..u.len() {
        y.set_column(t, &sim.step(&u.sample(t))?.y_meas);
    }
    Signal::new(y)
}

/// State reached after applying `u` from `x0`.
pub fn propagate<T: Real>(sys: &SystemModel<T>, x0: &DVector<T>, u: &Signal<T>) -> DVector<T> {
    (0..u.len()).fold(x0.clone(), |x, t| sys.step(&x, &u.sample(t)).0)
}

/// `col(C, CA, …, CA^{depth−1})`.
pub fn observability_matrix<T: Real>(sys: &SystemModel<T>, depth: usize) -> DMatrix<T> {
    let (n, p) = (sys.n(), sys.p());
    let mut o = DMatrix::zeros(p * depth, n);
    let mut cak = sys.c.clone();
    for k in 0..depth {
        o.view_mut((k * p, 0), (p, n)).copy_from(&cak);
        cak = &cak * &sys.a;
    }
    o
}

/// Smallest `ℓ` with `rank 𝒪_ℓ = n`.
pub fn lag<T: Real>(sys: &SystemModel<T>, rank_tol: T) -> Result<usize> {
    let n = sys.n();
    (1..=n)
        .find(|&l| numerical_rank(&observability_matrix(sys, l), rank_tol) == n)
        .ok_or(DeepcError::Unobservable)
}

/// Block lower-triangular impulse-response matrix with blocks `D, CB, CAB, …`.
pub fn toeplitz_impulse<T: Real>(sys: &SystemModel<T>, t_f: usize) -> DMatrix<T> {
    let (m, p) = (sys.m(), sys.p());
    let mut markov = Vec::with_capacity(t_f);
    markov.push(sys.d.clone());
    let mut akb = sys.b.clone();
    for _ in 1..t_f {
        markov.push(&sys.c * &akb);
        akb = &sys.a * akb;
    }
    let mut t = DMatrix::zeros(p * t_f, m * t_f);
    for i in 0..t_f {
        for j in 0..=i {
            t.view_mut((i * p, j * m), (p, m)).copy_from(&markov[i - j]);
        }
    }
    t
}

pub fn controllability_matrix<T: Real>(sys: &SystemModel<T>) -> DMatrix<T> {
    let (n, m) = (sys.n(), sys.m());
    let mut c = DMatrix::zeros(n, n * m);
    let mut akb = sys.b.clone();
    for k in 0..n {
        c.view_mut((0, k * m), (n, m)).copy_from(&akb);
        akb = &sys.a * akb;
    }
    c
}

/// Kalman rank test on `(A, B)`.
pub fn is_controllable<T: Real>(sys: &SystemModel<T>, rank_tol: T) -> bool {
    numerical_rank(&controllability_matrix(sys), rank_tol) == sys.n()
}

/// Infinite-horizon discrete LQR gain `K` (so `u = −K x`) for state weight
/// `q·I` and input weight `r·I`, by Riccati value iteration.
pub fn lqr_gain<T: Real>(sys: &SystemModel<T>, q: T, r: T) -> Result<DMatrix<T>> {
    if !(q > T::zero() && r > T::zero()) {
        return Err(DeepcError::Invalid("LQR weights must be positive".into()));
    }
    let (n, m) = (sys.n(), sys.m());
    let (a, b) = (&sys.a, &sys.b);
    let qm = DMatrix::<T>::identity(n, n) * q;
    let rm = DMatrix::<T>::identity(m, m) * r;
    let mut p = qm.clone();
    let mut k = DMatrix::zeros(m, n);
    for _ in 0..100_000 {
        let btp = b.transpose() * &p;
        let s = &rm + &btp * b;
        let k_new = s
            .lu()
            .solve(&(&btp * a))
            .ok_or_else(|| DeepcError::SolverFailure("singular Riccati step".into()))?;
        let p_new = &qm + a.transpose() * &p * a - a.transpose() * &p * b * &k_new;
        let p_new = (&p_new + p_new.transpose()) * T::lit(0.5);
        let delta = (&p_new - &p).abs().max();
        p = p_new;
        k = k_new;
        if delta <= T::lit(1e-12) * (T::one() + p.abs().max()) {
            return Ok(k);
        }
        if !delta.is_finite() {
            break;
        }
    }
    if (a - b * &k).complex_eigenvalues().iter().all(|z| (z.re * z.re + z.im * z.im).sqrt() < T::one()) {
        Ok(k)
    } else {
        Err(DeepcError::SolverFailure("Riccati iteration did not converge".into()))
    }
}

#[derive(Clone, Debug)]
pub struct InitialState<T: Real> {
    /// State at the start of the window.
    pub x: DVector<T>,
    /// `‖𝒪 x + 𝒯 u − y‖₂`.
    pub residual: T,
}

/// Least-squares solution of `y_ini = 𝒪 x + 𝒯 u_ini`.
pub fn initial_state_from_data<T: Real>(
    sys: &SystemModel<T>,
    u_ini: &Signal<T>,
    y_ini: &Signal<T>,
    rank_tol: T,
) -> Result<InitialState<T>> {
    if u_ini.len() != y_ini.len() || u_ini.dim() != sys.m() || y_ini.dim() != sys.p() {
        return Err(DeepcError::DimensionMismatch("initial window does not match the system".into()));
    }
    let l = lag(sys, rank_tol)?;
    let len = u_ini.len();
    if len < l {
        return Err(DeepcError::WindowTooShort { len, lag: l });
    }
    let o = observability_matrix(sys, len);
    let rhs = y_ini.to_vector() - toeplitz_impulse(sys, len) * u_ini.to_vector();
    let (x, residual) = least_squares(&o, &rhs, T::lit(DEFAULT_RANK_TOL));
    Ok(InitialState { x, residual })
}

#[derive(Clone, Debug)]
pub struct MpcSolution<T: Real> {
    pub u: Signal<T>,
    pub y: Signal<T>,
    pub objective: T,
}

/// Model-based finite-horizon optimal control from `x0`: minimize
/// `f1(u) + f2(y)` subject to the dynamics and the input/output constraints.
pub fn mpc_solve<T: Real>(
    sys: &SystemModel<T>,
    x0: &DVector<T>,
    cost: &CostSpec<T>,
    constraints: &ConstraintSpec<T>,
    t_f: usize,
    settings: &Settings<T>,
) -> Result<MpcSolution<T>> {
    let (m, p) = (sys.m(), sys.p());
    if x0.len() != sys.n() {
        return Err(DeepcError::DimensionMismatch("x0 does not match the system order".into()));
    }
    let mut b = ProgramBuilder::new();
    let u = b.add_vars(m * t_f);
    let y = b.add_vars(p * t_f);
    let free = observability_matrix(sys, t_f) * x0;
    let toe = toeplitz_impulse(sys, t_f);
    let ue = AffineExpr::vars(u);
    let ye = AffineExpr::vars(y);
    b.eq_zero(&ye.clone().minus(&AffineExpr::from_matrix(&toe, u)).offset(&(-free).as_slice().to_vec()));
    canon::add_terms(&mut b, &cost.f1, &ue, T::one())?;
    canon::add_terms(&mut b, &cost.f2, &ye, T::one())?;
    if let Some(ib) = &constraints.input {
        canon::add_box(&mut b, &ue, &ib.lower_bounds(m, t_f)?, &ib.upper_bounds(m, t_f)?);
    }
    canon::add_hard_output(&mut b, &ye, &constraints.output, p, t_f)?;
    let prog = b.build();
    let res = solve(&prog, settings)?;
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(DeepcError::Infeasible),
        s => return Err(DeepcError::SolverFailure(format!("MPC solve ended with status {}", s.as_str()))),
    }
    let uv = u.slice(&res.x);
    let yv = y.slice(&res.x);
    let objective = cost.evaluate_f1(&uv) + cost.evaluate_f2(&yv);
    Ok(MpcSolution { u: Signal::from_vector(&uv, m)?, y: Signal::from_vector(&yv, p)?, objective })
}

/// Whether the output constraint admits any output at all (used by callers
/// that want to skip the model solve for an unconstrained problem).
pub fn has_output_constraint<T: Real>(c: &ConstraintSpec<T>) -> bool {
    !matches!(c.output, OutputConstraint::None)
}

/// Built-in plant presets.
pub mod presets {
    use super::*;

    /// Sampling period of [`double_integrator`].
    pub const DOUBLE_INTEGRATOR_DT: f64 = 0.1;
    /// Sampling period of [`quad_lin`] (25 Hz).
    pub const QUAD_DT: f64 = 0.04;
    pub const QUAD_MASS: f64 = 0.0275;
    pub const GRAVITY: f64 = 9.81;
    /// Thrust that balances gravity.
    pub const QUAD_HOVER_THRUST: f64 = QUAD_MASS * GRAVITY;

    /// Position/velocity double integrator observed through its position.
    pub fn double_integrator<T: Real>() -> SystemModel<T> {
        let dt = DOUBLE_INTEGRATOR_DT;
        let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[dt * dt / 2.0, dt]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let d = DMatrix::zeros(1, 1);
        SystemModel::new(a, b, c, d).expect("preset dimensions are consistent").cast()
    }

    /// Hover-linearized quadcopter: states `(p_x, p_y, p_z, v_x, v_y, v_z)`,
    /// inputs `(f_tot − f_hover, ω_x, ω_y)`, outputs the three positions.
    /// Body rates act as small-angle tilt commands scaled by gravity.
    pub fn quad_lin<T: Real>() -> SystemModel<T> {
        let dt = QUAD_DT;
        let mut a = DMatrix::<f64>::identity(6, 6);
        for i in 0..3 {
            a[(i, i + 3)] = dt;
        }
        // input column gains per axis: x from ω_y, y from −ω_x, z from thrust
        let gains = [(0usize, 2usize, GRAVITY), (1, 1, -GRAVITY), (2, 0, 1.0 / QUAD_MASS)];
        let mut b = DMatrix::<f64>::zeros(6, 3);
        for &(axis, input, k) in &gains {
            b[(axis, input)] = k * dt * dt / 2.0;
            b[(axis + 3, input)] = k * dt;
        }
        let mut c = DMatrix::<f64>::zeros(3, 6);
        for i in 0..3 {
            c[(i, i)] = 1.0;
        }
        SystemModel::new(a, b, c, DMatrix::zeros(3, 3)).expect("preset dimensions are consistent").cast()
    }

    pub fn by_name<T: Real>(name: &str) -> Result<SystemModel<T>> {
        match name {
            "double_integrator" => Ok(double_integrator()),
            "quad_lin" => Ok(quad_lin()),
            other => Err(DeepcError::Invalid(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixJson {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct SystemJson {
    A: MatrixJson,
    B: MatrixJson,
    C: MatrixJson,
    D: Option<MatrixJson>,
    n: usize,
    m: usize,
    p: usize,
}

fn matrix_from_json<T: Real>(j: &MatrixJson, rows: usize, cols: usize, name: &str) -> Result<DMatrix<T>> {
    let flat: Vec<f64> = match j {
        MatrixJson::Nested(r) => {
            if r.len() != rows || r.iter().any(|row| row.len() != cols) {
                return Err(DeepcError::DimensionMismatch(format!("{name} is not {rows}×{cols}")));
            }
            r.concat()
        }
        MatrixJson::Flat(v) => v.clone(),
    };
    if flat.len() != rows * cols {
        return Err(DeepcError::DimensionMismatch(format!("{name} has {} entries, expected {}", flat.len(), rows * cols)));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &flat).map(T::lit))
}

impl<T: Real> SystemModel<T> {
    /// Parses `{"A":…, "B":…, "C":…, "D":…, "n":…, "m":…, "p":…}` with
    /// row-major matrices given either flat or as nested rows. `D` defaults to zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: SystemJson = serde_json::from_str(text)?;
        let d = match &j.D {
            Some(d) => matrix_from_json(d, j.p, j.m, "D")?,
            None => DMatrix::zeros(j.p, j.m),
        };
        SystemModel::new(
            matrix_from_json(&j.A, j.n, j.n, "A")?,
            matrix_from_json(&j.B, j.n, j.m, "B")?,
            matrix_from_json(&j.C, j.p, j.n, "C")?,
            d,
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<T>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect()
        };
        serde_json::json!({
            "A": rows(&self.a), "B": rows(&self.b), "C": rows(&self.c), "D": rows(&self.d),
            "n": self.n(), "m": self.m(), "p": self.p(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_sys(a: f64, b: f64, c: f64, d: f64) -> SystemModel<f64> {
        let s = |v| DMatrix::from_element(1, 1, v);
        SystemModel::new(s(a), s(b), s(c), s(d)).unwrap()
    }

    #[test]
    fn lqr_scalar_golden_ratio() {
        // P² − P − 1 = 0 for x⁺ = x + u with unit weights; K = P / (1 + P)
        let k = lqr_gain(&scalar_sys(1.0, 1.0, 1.0, 0.0), 1.0, 1.0).unwrap();
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((k[(0, 0)] - p / (1.0 + p)).abs() < 1e-10);
    }

    #[test]
    fn lqr_stabilizes_presets() {
        for sys in [presets::double_integrator::<f64>(), presets::quad_lin()] {
            let k = lqr_gain(&sys, 1.0, 1.0).unwrap();
            let closed = SystemModel::new(&sys.a - &sys.b * &k, sys.b.clone(), sys.c.clone(), sys.d.clone()).unwrap();
            assert!(closed.spectral_radius() < 1.0);
        }
        assert!(lqr_gain(&scalar_sys(1.0, 1.0, 1.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn feedthrough_and_integrator() {
        let u = Signal::from_scalars(&[1.0, -2.0, 3.0]).unwrap();
        let y = simulate(&scalar_sys(0.0, 0.0, 0.0, 1.0), &DVector::zeros(1), &u, &NoiseSpec::none()).unwrap();
        assert_eq!(y, u);
        let ones = Signal::from_scalars(&[1.0, 1.0, 1.0]).unwrap();
        let y = simulate(&scalar_sys(1.0, 1.0, 1.0, 0.0), &DVector::zeros(1), &ones, &NoiseSpec::none()).unwrap();
        assert_eq!(y.matrix().as_slice(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn noisy_simulation_is_reproducible() {
        let sys = presets::double_integrator::<f64>();
        let u = Signal::from_scalars(&[0.3; 20]).unwrap();
        let noise = NoiseSpec::gaussian(0.1, 42);
        let a = simulate(&sys, &DVector::zeros(2), &u, &noise).unwrap();
        let b = simulate(&sys, &DVector::zeros(2), &u, &noise).unwrap();
        assert_eq!(a, b);
        let c = simulate(&sys, &DVector::zeros(2), &u, &noise.with_stream(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lag_examples() {
        let full = SystemModel::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        assert_eq!(lag(&full, 1e-9).unwrap(), 1);
        let chain = SystemModel { c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), d: DMatrix::zeros(1, 1), ..full.clone() };
        assert_eq!(lag(&chain, 1e-9).unwrap(), 2);
        let blind = SystemModel { c: DMatrix::zeros(1, 2), ..chain };
        assert!(matches!(lag(&blind, 1e-9), Err(DeepcError::Unobservable)));
    }

    #[test]
    fn toeplitz_examples() {
        let sys = presets::double_integrator::<f64>();
        assert_eq!(toeplitz_impulse(&sys, 1), sys.d);
        let t2 = toeplitz_impulse(&sys, 2);
        let cb = (&sys.c * &sys.b)[(0, 0)];
        assert_eq!(t2.as_slice(), &[0.0, cb, 0.0, 0.0]);
        let zero = SystemModel { b: DMatrix::zeros(2, 1), ..sys };
        assert_eq!(toeplitz_impulse(&zero, 3).norm(), 0.0);
    }

    #[test]
    fn controllability_examples() {
        let a0 = SystemModel::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        assert!(is_controllable(&a0, 1e-9));
        let b0 = SystemModel { b: DMatrix::zeros(2, 2), ..a0 };
        assert!(!is_controllable(&b0, 1e-9));
        assert!(is_controllable(&presets::double_integrator::<f64>(), 1e-9));
    }

    #[test]
    fn initial_state_round_trip() {
        let sys = presets::double_integrator::<f64>();
        let x0 = DVector::from_vec(vec![0.7, -1.3]);
        let u = Signal::from_scalars(&[0.5, -0.2, 1.0, 0.0]).unwrap();
        let y = simulate(&sys, &x0, &u, &NoiseSpec::none()).unwrap();
        let est = initial_state_from_data(&sys, &u, &y, 1e-9).unwrap();
        assert!((est.x - x0).amax() < 1e-9);
        assert!(est.residual < 1e-9);
        let short = initial_state_from_data(&sys, &u.window(0, 1), &y.window(0, 1), 1e-9);
        assert!(matches!(short, Err(DeepcError::WindowTooShort { len: 1, lag: 2 })));
    }

    #[test]
    fn full_state_output_recovers_state_directly() {
        let sys = SystemModel::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.9]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        let y = Signal::from_samples(&[vec![0.25, -4.0]]).unwrap();
        let est = initial_state_from_data(&sys, &Signal::from_scalars(&[1.0]).unwrap(), &y, 1e-9).unwrap();
        assert_eq!(est.x.as_slice(), &[0.25, -4.0]);
    }

    #[test]
    fn noisy_window_leaves_residual() {
        let sys = presets::double_integrator::<f64>();
        let u = Signal::from_scalars(&[0.0; 6]).unwrap();
        let y = simulate(&sys, &DVector::from_vec(vec![1.0, 0.1]), &u, &NoiseSpec::gaussian(0.05, 3)).unwrap();
        assert!(initial_state_from_data(&sys, &u, &y, 1e-9).unwrap().residual > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let sys = presets::quad_lin::<f64>();
        let text = sys.to_json().to_string();
        assert_eq!(SystemModel::<f64>::from_json(&text).unwrap(), sys);
        let flat = r#"{"A":[1,0.1,0,1],"B":[0,0.1],"C":[1,0],"n":2,"m":1,"p":1}"#;
        let s = SystemModel::<f64>::from_json(flat).unwrap();
        assert_eq!(s.d, DMatrix::zeros(1, 1));
    }

    #[test]
    fn quad_preset_shape() {
        let q = presets::quad_lin::<f64>();
        assert_eq!((q.n(), q.m(), q.p()), (6, 3, 3));
        assert!(is_controllable(&q, 1e-9));
        assert_eq!(lag(&q, 1e-9).unwrap(), 2);
    }
}
