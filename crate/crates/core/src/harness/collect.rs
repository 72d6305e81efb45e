//! Offline data collection: one exploration input, `N` noisy output batches.

use log::info;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::plant::{simulate, NoiseSpec, SystemModel};
use crate::trajlib::{is_hankel_exciting, is_page_exciting, partition_data, DataBlocks, Signal, Structure, DEFAULT_RANK_TOL};
use crate::{DeepcError, Result};

/// Uniform exploration input on `[−scale, scale]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputGen {
    pub seed: u64,
    pub scale: f64,
}

impl InputGen {
    pub fn generate(&self, m: usize, len: usize) -> Signal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let data = DMatrix::from_fn(m, len, |_, _| rng.random_range(-self.scale..=self.scale));
        Signal::new(data).expect("nonempty input")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectConfig {
    pub input: InputGen,
    /// Raw signal length `T`.
    pub len: usize,
    pub batches: usize,
    pub t_ini: usize,
    pub t_f: usize,
    pub structure: Structure,
    pub columns: Option<usize>,
    pub x0: DVector<f64>,
    /// `u = v − K x` while recording; the applied `u` is what gets stored.
    pub stabilizer: Option<DMatrix<f64>>,
}

/// Raw recorded signals before partitioning.
#[derive(Clone, Debug, PartialEq)]
pub struct RawData {
    pub u: Signal<f64>,
    pub ys: Vec<Signal<f64>>,
}

impl RawData {
    pub fn partition(&self, t_ini: usize, t_f: usize, structure: Structure) -> Result<DataBlocks<f64>> {
        partition_data(&self.u, &self.ys, t_ini, t_f, structure)
    }
}

/// Applied input of length `len`. Noise acts on outputs only, so with a
/// stabilizer the state path (and hence the applied input) is the same for
/// every batch.
fn applied_input(sys: &SystemModel<f64>, cfg: &CollectConfig, len: usize) -> Result<Signal<f64>> {
    let v = cfg.input.generate(sys.m(), len);
    let Some(k) = &cfg.stabilizer else {
        return Ok(v);
    };
    if k.nrows() != sys.m() || k.ncols() != sys.n() {
        return Err(DeepcError::DimensionMismatch("stabilizer gain must be m × n".into()));
    }
    let mut x = cfg.x0.clone();
    let mut u = DMatrix::zeros(sys.m(), len);
    for t in 0..len {
        let ut = v.sample(t) - k * &x;
        x = sys.step(&x, &ut).0;
        u.set_column(t, &ut);
    }
    Signal::new(u)
}

/// Records the input and `cfg.batches` output signals of length `len`.
pub fn record(sys: &SystemModel<f64>, noise: &NoiseSpec, cfg: &CollectConfig, len: usize) -> Result<RawData> {
    if cfg.batches == 0 {
        return Err(DeepcError::InsufficientData("at least one output batch is needed".into()));
    }
    if cfg.x0.len() != sys.n() {
        return Err(DeepcError::DimensionMismatch("x0 does not match the system order".into()));
    }
    let u = applied_input(sys, cfg, len)?;
    let ys = (0..cfg.batches)
        .map(|i| simulate(sys, &cfg.x0, &u, &noise.with_stream(noise.stream.wrapping_add(i as u64))))
        .collect::<Result<Vec<_>>>()?;
    Ok(RawData { u, ys })
}

/// Records data and partitions it into past/future blocks, truncated to
/// `cfg.columns` columns when requested.
pub fn collect_data(sys: &SystemModel<f64>, noise: &NoiseSpec, cfg: &CollectConfig) -> Result<DataBlocks<f64>> {
    let depth = cfg.t_ini + cfg.t_f;
    if let Some(k) = cfg.columns {
        let need = cfg.structure.samples_for_columns(k, depth);
        if cfg.len < need {
            return Err(DeepcError::InsufficientData(format!(
                "{} columns of depth {depth} need {need} samples, got {}",
                k, cfg.len
            )));
        }
    }
    let raw = record(sys, noise, cfg, cfg.len)?;
    let mut blocks = raw.partition(cfg.t_ini, cfg.t_f, cfg.structure)?;
    if let Some(k) = cfg.columns {
        blocks = blocks.truncate_columns(k);
    }
    if log::log_enabled!(log::Level::Info) {
        let exciting = match cfg.structure {
            Structure::Hankel => is_hankel_exciting(&raw.u, depth + sys.n(), DEFAULT_RANK_TOL),
            Structure::Page => is_page_exciting(&raw.u, depth, sys.n() + 1, DEFAULT_RANK_TOL)?,
        };
        info!(
            "collected {} batches, {} columns ({}), input exciting: {exciting}",
            blocks.batches(),
            blocks.columns(),
            cfg.structure.as_str()
        );
    }
    Ok(blocks)
}
