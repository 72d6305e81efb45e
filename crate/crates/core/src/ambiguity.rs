//! Empirical distributions over vectorized output data matrices, the
//! discrete Wasserstein metric, CVaR, the concentration-based radius and a
//! brute-force evaluator of worst-case expectations over Wasserstein balls.

use std::fmt;
use std::str::FromStr;

use deepc_conic::{solve, AffineExpr, ProgramBuilder, Settings, SolveStatus};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::trajlib::{read_numeric_csv, DataBlocks};
use crate::{DeepcError, Real, Result};

/// Norm index `r ∈ {1, 2, ∞}` of the transport cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NormIndex {
    One,
    #[default]
    Two,
    Inf,
}

impl NormIndex {
    /// Dual index `q` with `1/r + 1/q = 1`.
    pub fn dual(self) -> NormIndex {
        match self {
            NormIndex::One => NormIndex::Inf,
            NormIndex::Two => NormIndex::Two,
            NormIndex::Inf => NormIndex::One,
        }
    }

    pub fn norm<T: Real>(self, v: &[T]) -> T {
        match self {
            NormIndex::One => v.iter().fold(T::zero(), |a, x| a + x.abs()),
            NormIndex::Two => v.iter().fold(T::zero(), |a, x| a + *x * *x).sqrt(),
            NormIndex::Inf => v.iter().fold(T::zero(), |a, x| a.max(x.abs())),
        }
    }

    /// A vector `u` with `‖u‖_self = 1` and `⟨u, v⟩ = ‖v‖_dual`.
    pub fn aligned_unit<T: Real>(self, v: &DVector<T>) -> DVector<T> {
        let mut u = DVector::zeros(v.len());
        if v.is_empty() {
            return u;
        }
        match self {
            NormIndex::Two => {
                let n = v.norm();
                if n > T::zero() {
                    u = v / n;
                } else {
                    u[0] = T::one();
                }
            }
            NormIndex::One => {
                let j = v.iamax();
                u[j] = if v[j] < T::zero() { -T::one() } else { T::one() };
            }
            NormIndex::Inf => {
                for (ui, vi) in u.iter_mut().zip(v.iter()) {
                    *ui = if *vi < T::zero() { -T::one() } else { T::one() };
                }
            }
        }
        u
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormIndex::One => "1",
            NormIndex::Two => "2",
            NormIndex::Inf => "inf",
        }
    }
}

impl fmt::Display for NormIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormIndex {
    type Err = DeepcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "one" => Ok(NormIndex::One),
            "2" | "two" => Ok(NormIndex::Two),
            "inf" | "infinity" | "∞" => Ok(NormIndex::Inf),
            other => Err(DeepcError::Invalid(format!("unknown norm index {other:?}"))),
        }
    }
}

impl Serialize for NormIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NormIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(x) => x.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Light-tail constants `(c₁, c₂, a)` of the measure concentration bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concentration<T> {
    pub c1: T,
    pub c2: T,
    pub a: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguitySpec<T: Real> {
    /// Radius used in the objective.
    pub epsilon: T,
    /// Radius used in the CVaR constraint; `None` reuses `epsilon`.
    pub epsilon_con: Option<T>,
    pub r: NormIndex,
    /// Confidence parameter `β ∈ (0, 1)`.
    pub beta: T,
    pub concentration: Option<Concentration<T>>,
}

impl<T: Real> AmbiguitySpec<T> {
    pub fn new(epsilon: T, r: NormIndex) -> Self {
        AmbiguitySpec { epsilon, epsilon_con: None, r, beta: T::lit(0.1), concentration: None }
    }

    pub fn epsilon_constraint(&self) -> T {
        self.epsilon_con.unwrap_or(self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: T| e.is_finite() && e >= T::zero();
        if !ok(self.epsilon) || !ok(self.epsilon_constraint()) {
            return Err(DeepcError::Invalid("Wasserstein radii must be finite and nonnegative".into()));
        }
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(DeepcError::Invalid(format!("confidence parameter {} outside (0, 1)", self.beta)));
        }
        Ok(())
    }
}

/// Weighted atoms `ξ̂⁽ⁱ⁾` with a transport norm.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution<T: Real> {
    pub samples: Vec<DVector<T>>,
    pub weights: Vec<T>,
    pub r: NormIndex,
}

const WEIGHT_TOL: f64 = 1e-12;

impl<T: Real> EmpiricalDistribution<T> {
    /// Uniform weights.
    pub fn new(samples: Vec<DVector<T>>, r: NormIndex) -> Result<Self> {
        let n = samples.len();
        let w = vec![T::one() / T::lit(n.max(1) as f64); n];
        Self::with_weights(samples, w, r)
    }

    pub fn with_weights(samples: Vec<DVector<T>>, weights: Vec<T>, r: NormIndex) -> Result<Self> {
        if samples.is_empty() {
            return Err(DeepcError::InsufficientData("empirical distribution without samples".into()));
        }
        let d = samples[0].len();
        if samples.iter().any(|s| s.len() != d) || weights.len() != samples.len() {
            return Err(DeepcError::DimensionMismatch("samples and weights must agree in size".into()));
        }
        let total = weights.iter().fold(T::zero(), |a, &w| a + w);
        if weights.iter().any(|&w| !(w >= T::zero())) || (total - T::one()).abs() > T::lit(WEIGHT_TOL).max(T::machine_epsilon() * T::lit(4.0 * weights.len() as f64)) {
            return Err(DeepcError::Invalid("weights must be nonnegative and sum to one".into()));
        }
        Ok(EmpiricalDistribution { samples, weights, r })
    }

    /// One atom per recorded batch: the rows of `col(Yp⁽ⁱ⁾, Yf⁽ⁱ⁾)` concatenated.
    pub fn from_blocks(blocks: &DataBlocks<T>, r: NormIndex) -> Result<Self> {
        Self::new((0..blocks.batches()).map(|i| blocks.sample(i)).collect(), r)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_uniform(&self) -> bool {
        let u = T::one() / T::lit(self.len() as f64);
        self.weights.iter().all(|&w| (w - u).abs() <= T::lit(WEIGHT_TOL))
    }

    /// `E[f(ξ)]`.
    pub fn expectation(&self, f: impl Fn(&DVector<T>) -> T) -> T {
        self.samples.iter().zip(&self.weights).fold(T::zero(), |a, (s, &w)| a + w * f(s))
    }

    /// One sample per row; `# norm=<r>` and, for non-uniform weights,
    /// `# weights=<w1> <w2> …` comment lines first.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!("# norm={}\n", self.r);
        if !self.is_uniform() {
            let ws: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
            out.push_str(&format!("# weights={}\n", ws.join(" ")));
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for s in &self.samples {
            w.write_record(s.iter().map(|v| v.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| DeepcError::Invalid(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| DeepcError::Invalid(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = NormIndex::Two;
        let mut weights = None;
        for line in text.lines().filter_map(|l| l.trim().strip_prefix('#')) {
            let line = line.trim();
            if let Some(v) = line.strip_prefix("norm=") {
                r = v.parse()?;
            } else if let Some(v) = line.strip_prefix("weights=") {
                let w = v
                    .split_whitespace()
                    .map(|x| x.parse::<f64>().map(T::lit).map_err(|_| DeepcError::Invalid(format!("bad weight {x:?}"))))
                    .collect::<Result<Vec<T>>>()?;
                weights = Some(w);
            }
        }
        let samples: Vec<DVector<T>> = read_numeric_csv::<T>(text)?.into_iter().map(DVector::from_vec).collect();
        match weights {
            Some(w) => Self::with_weights(samples, w, r),
            None => Self::new(samples, r),
        }
    }
}

/// Optimal transport cost between two empirical distributions, from the
/// transport linear program.
pub fn wasserstein_distance<T: Real>(p: &EmpiricalDistribution<T>, q: &EmpiricalDistribution<T>) -> Result<T> {
    if p.dim() != q.dim() {
        return Err(DeepcError::DimensionMismatch(format!("sample dimensions {} and {}", p.dim(), q.dim())));
    }
    if p.r != q.r {
        return Err(DeepcError::DimensionMismatch(format!("norm indices {} and {}", p.r, q.r)));
    }
    let (n, m) = (p.len(), q.len());
    let cost = DMatrix::from_fn(n, m, |i, j| p.r.norm((&p.samples[i] - &q.samples[j]).as_slice()));
    // a single atom on either side leaves only one feasible plan
    if n == 1 || m == 1 {
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..m {
                total += cost[(i, j)] * if n == 1 { q.weights[j] } else { p.weights[i] };
            }
        }
        return Ok(total);
    }
    let mut b = ProgramBuilder::new();
    let pi = b.add_vars(n * m);
    let idx = |i: usize, j: usize| pi.index(i * m + j);
    let mut cost_row = AffineExpr::zeros(1);
    for i in 0..n {
        for j in 0..m {
            cost_row = cost_row.plus(&AffineExpr::var(idx(i, j)).scaled(cost[(i, j)]));
        }
    }
    b.add_cost(&cost_row);
    let mut marginals = Vec::with_capacity(n + m);
    for i in 0..n {
        let row = AffineExpr::stack(&(0..m).map(|j| AffineExpr::var(idx(i, j))).collect::<Vec<_>>()).sum();
        marginals.push(row.offset(&[-p.weights[i]]));
    }
    // the last column marginal is implied by the others
    for j in 0..m - 1 {
        let col = AffineExpr::stack(&(0..n).map(|i| AffineExpr::var(idx(i, j))).collect::<Vec<_>>()).sum();
        marginals.push(col.offset(&[-q.weights[j]]));
    }
    b.eq_zero(&AffineExpr::stack(&marginals));
    b.nonneg(&AffineExpr::vars(pi));
    let settings = Settings::default().with_tolerance(T::lit(1e-10));
    let res = solve(&b.build(), &settings)?;
    if res.status != SolveStatus::Optimal {
        return Err(DeepcError::SolverFailure(format!("transport problem ended with status {}", res.status.as_str())));
    }
    Ok(res.objective.max(T::zero()))
}

/// Conditional value-at-risk: the expectation over the worst `alpha` mass.
/// Equals `inf_τ τ + E[(v − τ)₊]/α`. `weights = None` means uniform.
pub fn cvar<T: Real>(values: &[T], weights: Option<&[T]>, alpha: T) -> T {
    assert!(!values.is_empty(), "cvar of an empty sample");
    let n = values.len();
    let uniform = vec![T::one() / T::lit(n as f64); n];
    let w = weights.unwrap_or(&uniform);
    assert_eq!(w.len(), n, "one weight per value");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    if alpha <= T::zero() {
        return values[order[0]];
    }
    let alpha = alpha.min(T::one());
    let mut left = alpha;
    let mut acc = T::zero();
    for &i in &order {
        let take = w[i].min(left);
        acc += take * values[i];
        left -= take;
        if left <= T::zero() {
            break;
        }
    }
    // guards against weights summing to slightly less than alpha = 1
    acc / (alpha - left.max(T::zero()))
}

/// Smallest radius whose ball contains the data-generating distribution with
/// confidence `1 − β`, for `N` samples and dimension exponent `k`.
pub fn epsilon_radius<T: Real>(spec: &AmbiguitySpec<T>, n: usize, k: usize) -> Result<T> {
    let c = spec
        .concentration
        .ok_or_else(|| DeepcError::InvalidConstants("concentration constants are required".into()))?;
    if !(c.a > T::one()) || !(c.c1 > T::zero()) || !(c.c2 > T::zero()) {
        return Err(DeepcError::InvalidConstants(format!("c1={}, c2={}, a={}", c.c1, c.c2, c.a)));
    }
    if !(spec.beta > T::zero() && spec.beta < T::one()) {
        return Err(DeepcError::Invalid(format!("confidence parameter {} outside (0, 1)", spec.beta)));
    }
    if n == 0 || k == 0 {
        return Err(DeepcError::Invalid("sample count and dimension exponent must be positive".into()));
    }
    let log_term = (c.c1 / spec.beta).ln();
    let n_t = T::lit(n as f64);
    let base = log_term / (c.c2 * n_t);
    let exponent = if n_t >= log_term / c.c2 { T::one() / T::lit(k as f64) } else { T::one() / c.a };
    Ok(base.max(T::zero()).powf(exponent))
}

/// Search resolution of [`worst_case_expectation_oracle`].
#[derive(Clone, Debug)]
pub struct OracleSettings {
    /// Points of the geometric λ grid.
    pub lambda_points: usize,
    /// Random perturbation directions tried per search.
    pub random_directions: usize,
    /// Hill-climbing rounds on the best directions.
    pub refine_rounds: usize,
    /// Largest perturbation, relative to `1 + max |ξᵢᵀ g|`.
    pub horizon: f64,
    pub seed: u64,
    /// Orthonormal basis (columns) of the subspace the perturbations
    /// `ξ − ξ̂⁽ⁱ⁾` are restricted to; `None` is the whole space.
    pub subspace: Option<DMatrix<f64>>,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { lambda_points: 200, random_directions: 64, refine_rounds: 200, horizon: 1e6, seed: 0, subspace: None }
    }
}

/// Brute-force `sup_{Q ∈ B_ε(P)} E_Q[φ(Ξ g)]`, where `Ξ` is the sample reshaped
/// to a matrix with `len(g)` columns (row-major) and `φ` is convex.
///
/// Evaluates the dual `inf_λ λε + Σ wᵢ sup_ξ (φ(Ξ g) − λ‖ξ − ξ̂ᵢ‖_r)`: each
/// inner supremum is searched along a finite set of unit perturbations found
/// by gradient and random search, and, by convexity along each ray, is
/// attained at the ray's endpoints; λ is scanned on a grid and refined.
/// Intended as a test oracle only.
pub fn worst_case_expectation_oracle(
    p: &EmpiricalDistribution<f64>,
    phi: &dyn Fn(&DVector<f64>) -> f64,
    g: &DVector<f64>,
    epsilon: f64,
    settings: &OracleSettings,
) -> Result<f64> {
    let k = g.len();
    if k == 0 || p.dim() % k != 0 {
        return Err(DeepcError::DimensionMismatch(format!("sample dimension {} is not a multiple of {k}", p.dim())));
    }
    let rows = p.dim() / k;
    let reshape = |xi: &DVector<f64>| DMatrix::from_row_slice(rows, k, xi.as_slice());
    let centres: Vec<DVector<f64>> = p.samples.iter().map(|xi| reshape(xi) * g).collect();
    let base: Vec<f64> = centres.iter().map(phi).collect();
    let mean = base.iter().zip(&p.weights).map(|(v, w)| v * w).sum::<f64>();
    if epsilon <= 0.0 || g.amax() == 0.0 {
        return Ok(mean);
    }
    if let Some(b) = &settings.subspace {
        if b.nrows() != p.dim() {
            return Err(DeepcError::DimensionMismatch("subspace basis rows must equal the sample dimension".into()));
        }
    }
    let scale = 1.0 + centres.iter().map(|c| c.amax()).fold(0.0, f64::max);
    let reach = settings.horizon * scale;
    let search = DirectionSearch { phi, g, rows, k, r: p.r, anchor: &centres[0], reach, settings };
    let effects = search.run();

    // growth rate of every candidate: d/dt φ(s + t v) at large t
    let slopes: Vec<f64> = effects.iter().map(|v| search.growth(v)).collect();
    let top = slopes.iter().cloned().fold(0.0, f64::max);
    let t_max = reach / effects.iter().map(|v| v.amax()).fold(f64::MIN_POSITIVE, f64::max);
    let t_grid: Vec<f64> = (0..=8).map(|j| t_max * 10f64.powi(-j)).collect();
    // per sample and direction, φ at the grid points along the ray
    let ray_values: Vec<Vec<Vec<f64>>> = centres
        .iter()
        .map(|c| effects.iter().map(|v| t_grid.iter().map(|&t| phi(&(c + v * t))).collect()).collect())
        .collect();
    let dual = |lambda: f64| -> f64 {
        let mut total = lambda * epsilon;
        for (i, w) in p.weights.iter().enumerate() {
            let mut best = base[i];
            for vals in &ray_values[i] {
                for (val, &t) in vals.iter().zip(&t_grid) {
                    best = best.max(val - lambda * t);
                }
            }
            total += w * best;
        }
        total
    };

    let mut candidates: Vec<f64> = vec![0.0];
    if top > 0.0 {
        let (lo, hi) = (top / 100.0, top * 100.0);
        let n = settings.lambda_points.max(2);
        candidates.extend((0..n).map(|j| lo * (hi / lo).powf(j as f64 / (n - 1) as f64)));
        // breakpoints of the piecewise-linear dual
        candidates.extend(slopes.iter().copied().filter(|s| *s > 0.0));
    }
    let (mut best_l, mut best_v) = (0.0, dual(0.0));
    for &l in &candidates {
        let v = dual(l);
        if v < best_v {
            best_l = l;
            best_v = v;
        }
    }
    if top > 0.0 {
        let (mut a, mut b) = ((best_l / 1.05).max(0.0), best_l * 1.05);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let (x1, x2) = (b - gr * (b - a), a + gr * (b - a));
            if dual(x1) < dual(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        best_v = best_v.min(dual(0.5 * (a + b)));
    }
    Ok(best_v)
}

/// Finds unit-cost perturbations with the largest growth of `φ`. Each
/// candidate is stored through its effect `v = Δ g` on the argument of `φ`,
/// normalized so that `‖Δ‖_r = 1`.
struct DirectionSearch<'a> {
    phi: &'a dyn Fn(&DVector<f64>) -> f64,
    g: &'a DVector<f64>,
    rows: usize,
    k: usize,
    r: NormIndex,
    anchor: &'a DVector<f64>,
    reach: f64,
    settings: &'a OracleSettings,
}

impl DirectionSearch<'_> {
    fn growth(&self, v: &DVector<f64>) -> f64 {
        let n = v.amax();
        if n == 0.0 {
            return 0.0;
        }
        let t = self.reach / n;
        ((self.phi)(&(self.anchor + v * t)) - (self.phi)(self.anchor)) / t
    }

    /// Effect of a full perturbation matrix (row-major vector).
    fn effect_of(&self, delta: &DVector<f64>) -> Option<DVector<f64>> {
        let n = self.r.norm(delta.as_slice());
        if n == 0.0 {
            return None;
        }
        Some(DMatrix::from_row_slice(self.rows, self.k, delta.as_slice()) * self.g / n)
    }

    /// `d ⊗ ĝ` with `ĝ` the unit `r`-vector aligned with `g`.
    fn rank_one(&self, d: &DVector<f64>) -> DVector<f64> {
        let gh = self.r.aligned_unit(self.g);
        DVector::from_iterator(self.rows * self.k, (0..self.rows).flat_map(|i| gh.iter().map(move |x| d[i] * x)))
    }

    fn project(&self, delta: &DVector<f64>) -> DVector<f64> {
        match &self.settings.subspace {
            Some(b) => b * (b.transpose() * delta),
            None => delta.clone(),
        }
    }

    fn gradient_at(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = v.amax().max(1e-300);
        let x = self.anchor + v * (self.reach / n);
        let h = 1e-6 * (1.0 + x.amax());
        DVector::from_iterator(
            self.rows,
            (0..self.rows).map(|j| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                ((self.phi)(&xp) - (self.phi)(&xm)) / (2.0 * h)
            }),
        )
    }

    fn run(&self) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.settings.seed);
        let mut deltas: Vec<DVector<f64>> = Vec::new();
        // rank-one directions along signed unit vectors of the φ argument
        for j in 0..self.rows {
            for sgn in [1.0, -1.0] {
                let mut d = DVector::zeros(self.rows);
                d[j] = sgn;
                deltas.push(self.rank_one(&d));
            }
        }
        for _ in 0..self.settings.random_directions {
            let d = DVector::from_fn(self.rows, |_, _| rng.random_range(-1.0..1.0));
            deltas.push(self.rank_one(&d));
            deltas.push(DVector::from_fn(self.rows * self.k, |_, _| rng.random_range(-1.0..1.0)));
        }
        let mut pool: Vec<(DVector<f64>, f64)> = deltas
            .into_iter()
            .filter_map(|d| {
                let d = self.project(&d);
                let v = self.effect_of(&d)?;
                let gr = self.growth(&v);
                Some((d, gr))
            })
            .collect();

        // fixed-point iteration: move along the dual direction of the gradient
        let mut seeds: Vec<usize> = (0..pool.len()).collect();
        seeds.sort_by(|&a, &b| pool[b].1.total_cmp(&pool[a].1));
        for &s in seeds.iter().take(8) {
            let mut d = pool[s].0.clone();
            for _ in 0..30 {
                let Some(v) = self.effect_of(&d) else { break };
                let grad = self.gradient_at(&v);
                let next = self.project(&self.rank_one(&self.r.dual().aligned_unit(&grad)));
                let Some(nv) = self.effect_of(&next) else { break };
                let gr = self.growth(&nv);
                pool.push((next.clone(), gr));
                if (&next - &d).amax() < 1e-12 {
                    break;
                }
                d = next;
            }
        }

        // random hill climbing from the current best
        let (mut best, mut best_g) = pool.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().expect("nonempty pool");
        let mut step = 0.5;
        for _ in 0..self.settings.refine_rounds {
            let kick = DVector::from_fn(best.len(), |_, _| rng.random_range(-1.0..1.0));
            let trial = self.project(&(&best / self.r.norm(best.as_slice()).max(1e-300) + kick * step));
            if let Some(v) = self.effect_of(&trial) {
                let gr = self.growth(&v);
                if gr > best_g {
                    best = trial;
                    best_g = gr;
                    continue;
                }
            }
            step *= 0.97;
        }
        pool.push((best, best_g));
        pool.sort_by(|a, b| b.1.total_cmp(&a.1));
        pool.truncate(16);
        pool.iter().filter_map(|(d, _)| self.effect_of(d)).collect()
    }
}
