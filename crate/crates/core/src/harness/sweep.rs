//! Parameter sweeps over closed-loop runs.
//!
//! Every trial records its data once; all axis values of that trial reuse it
//! (and the same closed-loop noise), so values are compared on equal data.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_loop::{run_receding_horizon, ControlProblem, PlantSetup, RunLog};
use super::collect::{record, RawData};
use super::config::ExperimentConfig;
use crate::plant::SystemModel;
use crate::trajlib::{DataBlocks, Structure};
use crate::{DeepcError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    Columns,
    Structure,
    Tini,
    Batches,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Columns => "columns",
            SweepAxis::Structure => "structure",
            SweepAxis::Tini => "t_ini",
            SweepAxis::Batches => "batches",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = DeepcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epsilon" | "eps" => Ok(SweepAxis::Epsilon),
            "columns" | "k" => Ok(SweepAxis::Columns),
            "structure" => Ok(SweepAxis::Structure),
            "tini" | "t_ini" => Ok(SweepAxis::Tini),
            "batches" | "n" => Ok(SweepAxis::Batches),
            other => Err(DeepcError::Invalid(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisValue {
    Real(f64),
    Count(usize),
    Structure(Structure),
}

impl AxisValue {
    pub fn parse(axis: SweepAxis, s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || DeepcError::Invalid(format!("bad {axis} value {s:?}"));
        match axis {
            SweepAxis::Epsilon => {
                let v: f64 = s.parse().map_err(|_| bad())?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(bad());
                }
                Ok(AxisValue::Real(v))
            }
            SweepAxis::Columns | SweepAxis::Tini | SweepAxis::Batches => {
                let v: usize = s.parse().map_err(|_| bad())?;
                if v == 0 {
                    return Err(bad());
                }
                Ok(AxisValue::Count(v))
            }
            SweepAxis::Structure => match s.to_ascii_lowercase().as_str() {
                "page" => Ok(AxisValue::Structure(Structure::Page)),
                "hankel" => Ok(AxisValue::Structure(Structure::Hankel)),
                _ => Err(bad()),
            },
        }
    }

    fn count(&self) -> usize {
        match self {
            AxisValue::Count(c) => *c,
            _ => 0,
        }
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Real(v) => write!(f, "{v:e}"),
            AxisValue::Count(c) => write!(f, "{c}"),
            AxisValue::Structure(s) => f.write_str(s.as_str()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    pub trials: usize,
    /// Record solve times. Without them the CSV is byte-reproducible.
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: AxisValue,
    pub trial: usize,
    pub tracking_error: Option<f64>,
    pub mean_solve_ms: Option<f64>,
    pub failures: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Columns: axis value, trial, tracking_error, mean_solve_ms, failures,
    /// error. Missing numbers are left empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([self.axis.as_str(), "trial", "tracking_error", "mean_solve_ms", "failures", "error"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.trial.to_string(),
                opt(r.tracking_error),
                opt(r.mean_solve_ms),
                r.failures.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| DeepcError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Distinct values in first-seen order.
    pub fn values(&self) -> Vec<AxisValue> {
        let mut out: Vec<AxisValue> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.value) {
                out.push(r.value);
            }
        }
        out
    }

    /// Rows of one value.
    pub fn rows_for(&self, value: AxisValue) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.value == value)
    }

    /// Per-value statistic of the tracking error over successful trials.
    pub fn summarize(&self, stat: impl Fn(&mut [f64]) -> f64) -> Vec<(AxisValue, f64)> {
        self.values()
            .into_iter()
            .map(|v| {
                let mut e: Vec<f64> = self.rows_for(v).filter_map(|r| r.tracking_error).collect();
                (v, if e.is_empty() { f64::NAN } else { stat(&mut e) })
            })
            .collect()
    }

    pub fn median_errors(&self) -> Vec<(AxisValue, f64)> {
        self.summarize(|e| median(e))
    }

    pub fn mean_solve_ms(&self) -> Vec<(AxisValue, f64)> {
        self.values()
            .into_iter()
            .map(|v| {
                let t: Vec<f64> = self.rows_for(v).filter_map(|r| r.mean_solve_ms).collect();
                (v, if t.is_empty() { f64::NAN } else { t.iter().sum::<f64>() / t.len() as f64 })
            })
            .collect()
    }
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Collects data for `cfg`, then runs the closed loop once.
pub fn run_config(cfg: &ExperimentConfig) -> Result<(DataBlocks<f64>, RunLog)> {
    let sys = cfg.system_model()?;
    let cc = cfg.collect_config(&sys)?;
    let blocks = super::collect::collect_data(&sys, &cfg.collection_noise(), &cc)?;
    let log = run_blocks(cfg, &sys, &blocks, cfg.control.seed)?;
    Ok((blocks, log))
}

/// Closed loop on given data with control noise seeded by `loop_seed`.
pub fn run_blocks(cfg: &ExperimentConfig, sys: &SystemModel<f64>, blocks: &DataBlocks<f64>, loop_seed: u64) -> Result<RunLog> {
    let cost = cfg.cost_spec(blocks.m, blocks.p, blocks.t_ini, blocks.t_f)?;
    let constraints = cfg.constraint_spec()?;
    let mut lc = cfg.clone();
    lc.control.seed = loop_seed;
    let plant = PlantSetup { sys, noise: lc.control_noise(), x0: cfg.x0(sys.n())? };
    let problem = ControlProblem {
        blocks,
        cost: &cost,
        constraints: &constraints,
        controller: cfg.controller(blocks.batches(), blocks.columns())?,
        settings: cfg.settings(),
    };
    run_receding_horizon(&plant, &problem, &cfg.loop_config(blocks.m, blocks.p)?)
}

fn apply_value(cfg: &ExperimentConfig, axis: SweepAxis, value: AxisValue) -> ExperimentConfig {
    let mut c = cfg.clone();
    match (axis, value) {
        (SweepAxis::Epsilon, AxisValue::Real(e)) => c.ambiguity.epsilon = e,
        (SweepAxis::Columns, AxisValue::Count(k)) => c.data.columns = Some(k),
        (SweepAxis::Structure, AxisValue::Structure(s)) => c.data.structure = s,
        (SweepAxis::Tini, AxisValue::Count(t)) => c.data.t_ini = t,
        (SweepAxis::Batches, AxisValue::Count(n)) => c.data.batches = n,
        _ => unreachable!("values are parsed per axis"),
    }
    c
}

fn blocks_for(cfg: &ExperimentConfig, raw: &RawData) -> Result<DataBlocks<f64>> {
    let d = &cfg.data;
    let mut blocks = raw.partition(d.t_ini, d.t_f, d.structure)?;
    if d.batches > blocks.batches() {
        return Err(DeepcError::InsufficientData(format!("{} batches requested, {} recorded", d.batches, blocks.batches())));
    }
    blocks = blocks.truncate_batches(d.batches);
    if let Some(k) = d.columns {
        if k > blocks.columns() {
            return Err(DeepcError::InsufficientData(format!("{k} columns requested, {} available", blocks.columns())));
        }
        blocks = blocks.truncate_columns(k);
    }
    Ok(blocks)
}

fn trial_seeds(cfg: &ExperimentConfig, trial: usize) -> (u64, u64) {
    (cfg.data.seed.wrapping_add(trial as u64), cfg.control.seed.wrapping_add(trial as u64))
}

/// Runs every `(value, trial)` pair. Individual failures become flagged rows.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[AxisValue], opts: SweepOptions) -> Result<SweepTable> {
    if values.is_empty() || opts.trials == 0 {
        return Err(DeepcError::Invalid("a sweep needs at least one value and one trial".into()));
    }
    let sys = base.system_model()?;
    // enough raw data for every value of the axis
    let mut rec_cfg = base.clone();
    let max_count = values.iter().map(AxisValue::count).max().unwrap_or(0);
    match axis {
        SweepAxis::Batches => rec_cfg.data.batches = rec_cfg.data.batches.max(max_count),
        SweepAxis::Columns => {
            let need = base.data.structure.samples_for_columns(max_count, base.data.t_ini + base.data.t_f);
            rec_cfg.data.len = rec_cfg.data.len.max(need);
        }
        _ => {}
    }
    let raws: Vec<Result<RawData>> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut c = rec_cfg.clone();
            c.data.seed = trial_seeds(base, trial).0;
            let cc = c.collect_config(&sys)?;
            record(&sys, &c.collection_noise(), &cc, cc.len)
        })
        .collect();
    let grid: Vec<(AxisValue, usize)> = values.iter().flat_map(|&v| (0..opts.trials).map(move |t| (v, t))).collect();
    let rows = grid
        .par_iter()
        .map(|&(value, trial)| {
            let cfg = apply_value(base, axis, value);
            let outcome = raws[trial]
                .as_ref()
                .map_err(|e| DeepcError::Invalid(e.to_string()))
                .and_then(|raw| blocks_for(&cfg, raw))
                .and_then(|blocks| run_blocks(&cfg, &sys, &blocks, trial_seeds(base, trial).1));
            match outcome {
                Ok(log) => SweepRow {
                    value,
                    trial,
                    tracking_error: Some(log.tracking_error),
                    mean_solve_ms: if opts.timing { log.mean_solve_ms() } else { None },
                    failures: log.failures,
                    error: None,
                },
                Err(e) => {
                    warn!("{axis}={value} trial {trial}: {e}");
                    SweepRow { value, trial, tracking_error: None, mean_solve_ms: None, failures: 0, error: Some(e.to_string()) }
                }
            }
        })
        .collect();
    Ok(SweepTable { axis, rows })
}
