//! JSON experiment configuration.
//!
//! A document has the sections `system`, `data`, `cost`, `constraints`,
//! `ambiguity`, `loop` and an optional `solver`. Bounds use `null` for an
//! open side. See `configs/` in the repository root for complete examples.

use std::path::Path;

use deepc_conic::Settings;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::closed_loop::{Bootstrap, Controller, LoopConfig, OnFailure};
use super::collect::{CollectConfig, InputGen};
use crate::ambiguity::{AmbiguitySpec, Concentration, NormIndex};
use crate::plant::{lqr_gain, presets, NoiseSpec, SystemModel};
use crate::robustctl::{ConstraintSpec, CostSpec, CostTerm, InputBox, OutputConstraint, TermForm};
use crate::trajlib::Structure;
use crate::{DeepcError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub data: DataSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub constraints: ConstraintsSection,
    #[serde(default)]
    pub ambiguity: AmbiguitySection,
    #[serde(rename = "loop")]
    pub control: LoopSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Name from [`presets::by_name`]; exclusive with `model`.
    #[serde(default)]
    pub preset: Option<String>,
    /// Inline model in the [`SystemModel::from_json`] format.
    #[serde(default)]
    pub model: Option<serde_json::Value>,
    /// Initial state for collection and control; zero when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Output noise standard deviation, one value or one per channel. Empty
    /// means noise-free.
    #[serde(default)]
    pub noise_std: Vec<f64>,
    /// State feedback used only while recording data.
    #[serde(default)]
    pub stabilizer: Option<StabilizerSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StabilizerSection {
    /// Explicit gain `K` (rows = inputs), applied as `u = v − K x`.
    Gain(Vec<Vec<f64>>),
    /// LQR gain for weights `q·I`, `r·I`.
    Lqr { q: f64, r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(rename = "T", alias = "t")]
    pub len: usize,
    #[serde(rename = "N", alias = "n", default = "one")]
    pub batches: usize,
    #[serde(rename = "T_ini", alias = "t_ini")]
    pub t_ini: usize,
    #[serde(rename = "T_f", alias = "t_f")]
    pub t_f: usize,
    #[serde(default = "page")]
    pub structure: Structure,
    #[serde(default)]
    pub seed: u64,
    /// Half-width of the uniform exploration input.
    #[serde(default = "unit")]
    pub input_scale: f64,
    /// Keep only this many columns (error if `T` cannot provide them).
    #[serde(default)]
    pub columns: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(default)]
    pub f1: Vec<TermSection>,
    #[serde(default)]
    pub f2: Vec<TermSection>,
    #[serde(default)]
    pub f3: Vec<TermSection>,
}

/// `weight · ‖(z_t[channels] − reference)_t‖` over every time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub weight: f64,
    #[serde(default = "norm2")]
    pub form: TermForm,
    /// Zero-based channel indices; all channels when absent.
    #[serde(default)]
    pub channels: Option<Vec<usize>>,
    /// One value per selected channel; zero when absent.
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSection {
    #[serde(default)]
    pub input_lower: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub input_upper: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub output_lower: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub output_upper: Option<Vec<Option<f64>>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for ConstraintsSection {
    fn default() -> Self {
        ConstraintsSection { input_lower: None, input_upper: None, output_lower: None, output_upper: None, alpha: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Deterministic,
    #[default]
    Robust,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguitySection {
    #[serde(default)]
    pub mode: ControllerKind,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub epsilon_con: Option<f64>,
    #[serde(default)]
    pub r: NormIndex,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub concentration: Option<Concentration<f64>>,
    /// Replace `epsilon` by the concentration-based radius for the recorded
    /// data size.
    #[serde(default)]
    pub auto_radius: bool,
}

impl Default for AmbiguitySection {
    fn default() -> Self {
        AmbiguitySection {
            mode: ControllerKind::Robust,
            epsilon: 0.0,
            epsilon_con: None,
            r: NormIndex::Two,
            beta: 0.1,
            concentration: None,
            auto_radius: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    #[serde(default = "one")]
    pub nu: usize,
    pub steps: usize,
    pub y_ref: Vec<f64>,
    /// Input held during bootstrap; zero when absent.
    #[serde(default)]
    pub u_ref: Option<Vec<f64>>,
    #[serde(default)]
    pub bootstrap: Bootstrap,
    #[serde(default)]
    pub on_failure: OnFailure,
    /// Seed of the measurement noise during control.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { tolerance: default_tolerance(), max_iter: default_max_iter() }
    }
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn page() -> Structure {
    Structure::Page
}
fn norm2() -> TermForm {
    TermForm::Norm2
}
fn default_alpha() -> f64 {
    0.1
}
fn default_beta() -> f64 {
    0.1
}
fn default_tolerance() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    50_000
}

fn open_bounds(b: &[Option<f64>], fill: f64) -> Vec<f64> {
    b.iter().map(|v| v.unwrap_or(fill)).collect()
}

impl TermSection {
    fn build(&self, dim: usize, steps: usize) -> Result<CostTerm<f64>> {
        let channels: Vec<usize> = self.channels.clone().unwrap_or_else(|| (0..dim).collect());
        if let Some(&bad) = channels.iter().find(|&&c| c >= dim) {
            return Err(DeepcError::Invalid(format!("cost channel {bad} out of range for dimension {dim}")));
        }
        let reference = self.reference.clone().unwrap_or_else(|| vec![0.0; channels.len()]);
        if reference.len() != channels.len() {
            return Err(DeepcError::DimensionMismatch(format!(
                "{} reference values for {} channels",
                reference.len(),
                channels.len()
            )));
        }
        Ok(CostTerm::channels(self.weight, dim, &channels, &reference, steps, self.form))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn system_model(&self) -> Result<SystemModel<f64>> {
        match (&self.system.preset, &self.system.model) {
            (Some(name), None) => presets::by_name(name),
            (None, Some(v)) => SystemModel::from_json(&v.to_string()),
            _ => Err(DeepcError::Invalid("system needs exactly one of `preset` and `model`".into())),
        }
    }

    pub fn x0(&self, n: usize) -> Result<DVector<f64>> {
        match &self.system.x0 {
            None => Ok(DVector::zeros(n)),
            Some(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
            Some(v) => Err(DeepcError::DimensionMismatch(format!("x0 of length {} for order {n}", v.len()))),
        }
    }

    /// Noise during data collection; batch `i` draws from stream `i`.
    pub fn collection_noise(&self) -> NoiseSpec {
        self.noise_with_seed(self.data.seed)
    }

    /// Noise during closed-loop control.
    pub fn control_noise(&self) -> NoiseSpec {
        self.noise_with_seed(self.control.seed).with_stream(u64::MAX)
    }

    fn noise_with_seed(&self, seed: u64) -> NoiseSpec {
        match self.system.noise_std.as_slice() {
            [] => NoiseSpec::none(),
            std => NoiseSpec { std: std.to_vec(), ..NoiseSpec::gaussian(0.0, seed) },
        }
    }

    pub fn stabilizer(&self, sys: &SystemModel<f64>) -> Result<Option<DMatrix<f64>>> {
        match &self.system.stabilizer {
            None => Ok(None),
            Some(StabilizerSection::Lqr { q, r }) => lqr_gain(sys, *q, *r).map(Some),
            Some(StabilizerSection::Gain(rows)) => {
                if rows.len() != sys.m() || rows.iter().any(|r| r.len() != sys.n()) {
                    return Err(DeepcError::DimensionMismatch("stabilizer gain must be m × n".into()));
                }
                Ok(Some(DMatrix::from_row_iterator(sys.m(), sys.n(), rows.iter().flatten().copied())))
            }
        }
    }

    pub fn collect_config(&self, sys: &SystemModel<f64>) -> Result<CollectConfig> {
        Ok(CollectConfig {
            input: InputGen { seed: self.data.seed, scale: self.data.input_scale },
            len: self.data.len,
            batches: self.data.batches,
            t_ini: self.data.t_ini,
            t_f: self.data.t_f,
            structure: self.data.structure,
            columns: self.data.columns,
            x0: self.x0(sys.n())?,
            stabilizer: self.stabilizer(sys)?,
        })
    }

    /// Cost for a given window split; `f3` spans `t_ini` steps.
    pub fn cost_spec(&self, m: usize, p: usize, t_ini: usize, t_f: usize) -> Result<CostSpec<f64>> {
        let build = |terms: &[TermSection], dim, steps| terms.iter().map(|t| t.build(dim, steps)).collect::<Result<Vec<_>>>();
        Ok(CostSpec { f1: build(&self.cost.f1, m, t_f)?, f2: build(&self.cost.f2, p, t_f)?, f3: build(&self.cost.f3, p, t_ini)? })
    }

    pub fn constraint_spec(&self) -> Result<ConstraintSpec<f64>> {
        let c = &self.constraints;
        let input = match (&c.input_lower, &c.input_upper) {
            (None, None) => None,
            (lo, hi) => {
                let n = lo.as_ref().or(hi.as_ref()).map_or(0, Vec::len);
                let lo = lo.as_ref().map_or(vec![f64::NEG_INFINITY; n], |b| open_bounds(b, f64::NEG_INFINITY));
                let hi = hi.as_ref().map_or(vec![f64::INFINITY; n], |b| open_bounds(b, f64::INFINITY));
                Some(InputBox::new(lo, hi)?)
            }
        };
        let output = match (&c.output_lower, &c.output_upper) {
            (None, None) => OutputConstraint::None,
            (lo, hi) => {
                let n = lo.as_ref().or(hi.as_ref()).map_or(0, Vec::len);
                let lo = lo.as_ref().map_or(vec![f64::NEG_INFINITY; n], |b| open_bounds(b, f64::NEG_INFINITY));
                let hi = hi.as_ref().map_or(vec![f64::INFINITY; n], |b| open_bounds(b, f64::INFINITY));
                OutputConstraint::output_box(lo, hi)?
            }
        };
        let spec = ConstraintSpec { input, output, alpha: c.alpha };
        spec.check_alpha()?;
        Ok(spec)
    }

    pub fn ambiguity_spec(&self) -> AmbiguitySpec<f64> {
        let a = &self.ambiguity;
        AmbiguitySpec {
            epsilon: a.epsilon,
            epsilon_con: a.epsilon_con,
            r: a.r,
            beta: a.beta,
            concentration: a.concentration,
        }
    }

    /// Controller for `n_batches` recorded batches of `k` columns.
    pub fn controller(&self, n_batches: usize, k: usize) -> Result<Controller> {
        match self.ambiguity.mode {
            ControllerKind::Deterministic => Ok(Controller::Deterministic),
            ControllerKind::Robust => {
                let mut spec = self.ambiguity_spec();
                if self.ambiguity.auto_radius {
                    spec.epsilon = crate::ambiguity::epsilon_radius(&spec, n_batches, k)?;
                }
                spec.validate()?;
                Ok(Controller::Robust(spec))
            }
        }
    }

    pub fn loop_config(&self, m: usize, p: usize) -> Result<LoopConfig> {
        let l = &self.control;
        if l.y_ref.len() != p {
            return Err(DeepcError::DimensionMismatch(format!("y_ref of length {} for {p} outputs", l.y_ref.len())));
        }
        let u_ref = match &l.u_ref {
            None => DVector::zeros(m),
            Some(v) if v.len() == m => DVector::from_column_slice(v),
            Some(v) => return Err(DeepcError::DimensionMismatch(format!("u_ref of length {} for {m} inputs", v.len()))),
        };
        Ok(LoopConfig {
            nu: l.nu,
            sim_steps: l.steps,
            y_ref: DVector::from_column_slice(&l.y_ref),
            u_ref,
            bootstrap: l.bootstrap,
            on_failure: l.on_failure,
        })
    }

    pub fn settings(&self) -> Settings<f64> {
        let mut s = Settings::default().with_tolerance(self.solver.tolerance);
        s.max_iter = self.solver.max_iter;
        s
    }
}
