//! Command-line front end: `collect`, `control`, `sweep`, `verify`, `plot`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deepc_core::ambiguity::EmpiricalDistribution;
use deepc_core::harness::report::{runlog_csv, runlog_svg, signal_csv, sweep_svg};
use deepc_core::harness::{
    record, run_blocks, sweep, verify, AxisValue, ExperimentConfig, Suite, SweepAxis, SweepOptions, SweepTable,
};
use deepc_core::{DeepcError, Result};

#[derive(Parser)]
#[command(name = "deepc", version, about = "Distributionally robust data-enabled predictive control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record input/output data and write the raw signals and samples.
    Collect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Collect data, run the receding-horizon loop and write runlog.csv.
    Control {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        /// Also write runlog.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Grid of closed-loop runs over one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// epsilon, columns, structure, t_ini or batches.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Leave solve times out so the output is byte-reproducible.
        #[arg(long)]
        no_timing: bool,
        /// Also write an SVG of the error curve next to the CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Run a self-check suite: lemma, reformulation, equivalence,
    /// concentration or all.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render runlog.csv or sweep.csv as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Logarithmic x axis (sweep files only).
        #[arg(long)]
        log_x: bool,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn collect(config: &Path, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let sys = cfg.system_model()?;
    let cc = cfg.collect_config(&sys)?;
    let raw = record(&sys, &cfg.collection_noise(), &cc, cc.len)?;
    write(&out.join("u.csv"), &signal_csv(&raw.u, "u")?)?;
    for (i, y) in raw.ys.iter().enumerate() {
        write(&out.join(format!("y_{}.csv", i + 1)), &signal_csv(y, "y")?)?;
    }
    let mut blocks = raw.partition(cc.t_ini, cc.t_f, cc.structure)?;
    if let Some(k) = cc.columns {
        blocks = blocks.truncate_columns(k);
    }
    let dist = EmpiricalDistribution::from_blocks(&blocks, cfg.ambiguity.r)?;
    write(&out.join("samples.csv"), &dist.to_csv()?)?;
    println!(
        "{} samples of length {}, {} batches, {} columns -> {}",
        raw.u.len(),
        raw.u.dim(),
        blocks.batches(),
        blocks.columns(),
        out.display()
    );
    Ok(())
}

fn control(config: &Path, out: &Path, plot: bool) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let sys = cfg.system_model()?;
    let blocks = deepc_core::harness::collect_data(&sys, &cfg.collection_noise(), &cfg.collect_config(&sys)?)?;
    let log = run_blocks(&cfg, &sys, &blocks, cfg.control.seed)?;
    let csv = runlog_csv(&log)?;
    write(&out.join("runlog.csv"), &csv)?;
    if plot {
        write(&out.join("runlog.svg"), &runlog_svg(&csv, "closed loop")?)?;
    }
    println!(
        "tracking error {:.6e}, {} failed solves, mean solve {:.2} ms -> {}",
        log.tracking_error,
        log.failures,
        log.mean_solve_ms().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn run_sweep(
    config: &Path,
    axis: SweepAxis,
    values: &[String],
    opts: SweepOptions,
    out: &Path,
    plot: bool,
) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let values = values.iter().map(|v| AxisValue::parse(axis, v)).collect::<Result<Vec<_>>>()?;
    let table = sweep(&cfg, axis, &values, opts)?;
    write(out, &table.to_csv()?)?;
    if plot {
        write(&out.with_extension("svg"), &sweep_svg(&table, axis == SweepAxis::Epsilon))?;
    }
    for (v, e) in table.median_errors() {
        println!("{axis}={v}: median tracking error {e:.6e}");
    }
    Ok(())
}

fn run_verify(suite: &str, seed: u64) -> Result<bool> {
    let suites = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse::<Suite>()?] };
    let mut ok = true;
    for s in suites {
        let report = verify(s, seed)?;
        print!("{report}");
        ok &= report.passed();
    }
    Ok(ok)
}

/// Reads a sweep CSV back into a table for plotting.
fn read_sweep(text: &str) -> Result<SweepTable> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let axis: SweepAxis = rdr.headers()?.get(0).unwrap_or_default().parse()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |j: usize| rec.get(j).and_then(|s| s.parse::<f64>().ok());
        rows.push(deepc_core::harness::SweepRow {
            value: AxisValue::parse(axis, rec.get(0).unwrap_or_default())?,
            trial: num(1).unwrap_or(0.0) as usize,
            tracking_error: num(2),
            mean_solve_ms: num(3),
            failures: num(4).unwrap_or(0.0) as usize,
            error: rec.get(5).filter(|s| !s.is_empty()).map(String::from),
        });
    }
    Ok(SweepTable { axis, rows })
}

fn plot(input: &Path, out: &Path, log_x: bool) -> Result<()> {
    let text = fs::read_to_string(input)?;
    let first = text.lines().next().unwrap_or_default();
    let svg = if first.starts_with("t,") {
        runlog_svg(&text, &input.display().to_string())?
    } else if first.contains("tracking_error") {
        sweep_svg(&read_sweep(&text)?, log_x)
    } else {
        return Err(DeepcError::Invalid(format!("{} is neither a run log nor a sweep table", input.display())));
    };
    write(out, &svg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Collect { config, out } => collect(&config, &out).map(|_| true),
        Command::Control { config, out, plot } => control(&config, &out, plot).map(|_| true),
        Command::Sweep { config, axis, values, trials, out, no_timing, plot } => {
            run_sweep(&config, axis, &values, SweepOptions { trials, timing: !no_timing }, &out, plot).map(|_| true)
        }
        Command::Verify { suite, seed } => run_verify(&suite, seed),
        Command::Plot { input, out, log_x } => plot(&input, &out, log_x).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
