use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use lambda_chirp::{
    compare_engines, integrate2, integrate3, scan1d, spot_validate, sweep2d, AdiabaticSolution,
    AxisSpec, Complex, DynamicsError, EngineSet, Quad, Setup, SpotReport, State2, SweepResult,
    Weights,
};
use thiserror::Error;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::output::{self, PlotKind, SweepMeta};
use crate::report::{AdiabaticityReport, CrossingReport};

/// Coherent ground-state superpositions in a Λ system driven by a chirped pulse.
#[derive(Debug, Parser)]
#[command(name = "lambda-chirp", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output file (standard output when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// numeric, dressed or both.
    #[arg(long, global = true)]
    pub engine: Option<EngineSet>,

    /// Integrate the full three-level system or the reduced two-level one.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub levels: u8,

    /// Swept parameter as name:start:stop:count (name: e0p, wp, beta, tau_p).
    #[arg(long = "axis", global = true, value_name = "SPEC")]
    pub axes: Vec<AxisSpec>,

    /// Recompute K random cells of a dressed result numerically.
    #[arg(long, global = true, value_name = "K", requires = "seed")]
    pub spot_validate: Option<usize>,

    /// Seed for --spot-validate.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Also write a gnuplot script `<out>.gp`.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Time evolution of the amplitudes.
    Simulate,
    /// Final coherence along one axis.
    Scan,
    /// Final coherence over a two-axis grid.
    Sweep,
    /// Resonance crossings of the chirped detuning.
    Crossings,
    /// Adiabaticity of the passage.
    CheckAdiabatic,
    /// Numeric and dressed time series side by side.
    Compare,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("numerical failure: {message}")]
    Numerical { message: String, t: Option<f64> },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical { .. } => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Where data goes: a file, or the caller's writer.
struct Sink<'a> {
    path: Option<PathBuf>,
    writer: Box<dyn Write + 'a>,
}

impl<'a> Sink<'a> {
    fn open(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Self, CliError> {
        Ok(match path {
            Some(p) => Sink {
                path: Some(p.to_path_buf()),
                writer: Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
            },
            None => Sink {
                path: None,
                writer: Box::new(stdout),
            },
        })
    }

    fn name(&self) -> String {
        self.path
            .as_ref()
            .map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string())
    }

    fn io(&self, e: io::Error) -> CliError {
        CliError::Io {
            path: self.name(),
            source: e,
        }
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| self.io(e))
    }
}

fn io_err(p: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: p.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Runs one command. Data goes to `--out` or `stdout`; diagnostics go to
/// standard error.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| usage("--config <PATH> is required"))?;
    let mut cfg = load_config(path)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    if !cli.axes.is_empty() {
        cfg.axes = cli.axes.clone();
    }
    if cli.engine.is_some() {
        cfg.engine = cli.engine;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cfg.axes.len() > 2 {
        return Err(usage("at most two axes may be given"));
    }
    if cli.gnuplot && cfg.out.is_none() {
        return Err(usage("--gnuplot needs --out"));
    }
    if cli.levels != 3 && cli.command != Command::Simulate {
        return Err(usage("--levels only applies to simulate"));
    }
    if cli.spot_validate.is_some() && !matches!(cli.command, Command::Scan | Command::Sweep) {
        return Err(usage("--spot-validate only applies to scan and sweep"));
    }

    match cli.command {
        Command::Simulate => simulate(cli, &cfg, stdout),
        Command::Scan | Command::Sweep => grid(cli, &cfg, stdout),
        Command::Crossings => {
            let r = CrossingReport::new(&cfg.pulse);
            text_report(&r.text(), &r, &cfg, stdout)
        }
        Command::CheckAdiabatic => {
            let r = AdiabaticityReport::new(&cfg.pulse, &cfg.sim);
            text_report(&r.text(), &r, &cfg, stdout)
        }
        Command::Compare => compare(cli, &cfg, stdout),
    }
}

fn text_report<R: serde::Serialize>(
    text: &str,
    report: &R,
    cfg: &RunConfig,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| io_err(Path::new("<stdout>"), e))?;
    if let Some(out) = &cfg.out {
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        write_file(out, &(json + "\n"))?;
    }
    Ok(())
}

fn gnuplot(cli: &Cli, cfg: &RunConfig, kind: PlotKind, xlabel: &str, ylabel: &str) -> Result<(), CliError> {
    if let (true, Some(out)) = (cli.gnuplot, &cfg.out) {
        write_file(
            &output::sidecar(out, ".gp"),
            &output::gnuplot_script(kind, out, xlabel, ylabel),
        )?;
    }
    Ok(())
}

fn simulate(cli: &Cli, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let engine = cfg.engine.unwrap_or(EngineSet::Numeric);
    if engine == EngineSet::Both {
        return Err(usage("simulate runs a single engine; use compare for both"));
    }
    if engine == EngineSet::Dressed && cli.levels == 2 {
        return Err(usage("--levels 2 applies to the numeric engine"));
    }
    if cli.levels == 2 && cfg.system.omega_r != 0.0 {
        return Err(usage("--levels 2 needs omega_R = 0 (the dark state must decouple)"));
    }
    let mut sink = Sink::open(cfg.out.as_deref(), stdout)?;
    let (p, sys, sim) = (&cfg.pulse, &cfg.system, &cfg.sim);

    let result: Result<(Vec<f64>, Vec<[Complex<f64>; 3]>), CliError> = match (engine, cli.levels) {
        (EngineSet::Dressed, _) => AdiabaticSolution::compute(p, sys, sim, &Quad::default())
            .map(|s| {
                let states = (0..s.times.len()).map(|i| [s.a1[i], s.a2[i], s.a3[i]]).collect();
                (s.times, states)
            })
            .map_err(failed),
        (_, 2) => {
            let w = Weights::from_ratio(sys.dipole_ratio);
            let init = State2::from_bare(&lambda_chirp::State3::from_array(sim.initial_state), &w);
            integrate2(p, sim, init)
                .map(|tr| {
                    let bare = tr.to_bare(&w);
                    let states = bare.states.iter().map(|s| [s.a1, s.a2, s.a3]).collect();
                    (bare.times, states)
                })
                .map_err(numerical)
        }
        _ => integrate3(p, sys, sim)
            .map(|tr| {
                let states = tr.states.iter().map(|s| [s.a1, s.a2, s.a3]).collect();
                (tr.times, states)
            })
            .map_err(numerical),
    };

    match result {
        Ok((times, states)) => {
            output::write_trajectory(&mut sink.writer, p, &times, states).map_err(|e| sink.io(e))?;
            sink.finish()?;
            gnuplot(cli, cfg, PlotKind::Trajectory, "t (ns)", "")
        }
        Err(err) => {
            let (msg, t) = match &err {
                CliError::Numerical { message, t } => (message.clone(), *t),
                e => (e.to_string(), None),
            };
            let w = &mut sink.writer;
            let written = writeln!(w, "{}", output::TRAJECTORY_HEADER)
                .and_then(|_| output::write_failure(w, &msg, t));
            written.map_err(|e| sink.io(e))?;
            sink.finish()?;
            Err(err)
        }
    }
}

fn numerical(e: DynamicsError) -> CliError {
    CliError::Numerical {
        message: e.to_string(),
        t: e.failure_time(),
    }
}

fn failed(message: impl ToString) -> CliError {
    CliError::Numerical {
        message: message.to_string(),
        t: None,
    }
}

fn grid(cli: &Cli, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sweep = cli.command == Command::Sweep;
    let needed = if sweep { 2 } else { 1 };
    if cfg.axes.len() != needed {
        return Err(usage(format!(
            "{} needs exactly {needed} axis (--axis name:start:stop:count), got {}",
            if sweep { "sweep" } else { "scan" },
            cfg.axes.len()
        )));
    }
    let default_engine = if sweep { EngineSet::Dressed } else { EngineSet::Both };
    let engines = cfg.engine.unwrap_or(default_engine);
    let setup = Setup::new(cfg.pulse, cfg.system, cfg.sim);

    let to_usage = |e: lambda_chirp::SweepError| usage(e.to_string());
    let r: SweepResult = if sweep {
        sweep2d(cfg.axes[0], cfg.axes[1], &setup, engines).map_err(to_usage)?
    } else {
        scan1d(cfg.axes[0], &setup, engines).map_err(to_usage)?
    };
    let deviation = compare_engines(&r).ok();
    let spot: Option<SpotReport> = match cli.spot_validate {
        Some(k) => Some(spot_validate(&r, k, cli.seed.unwrap_or_default()).map_err(to_usage)?),
        None => None,
    };

    let mut sink = Sink::open(cfg.out.as_deref(), stdout)?;
    let written = if sweep {
        output::write_sweep(&mut sink.writer, &r)
    } else {
        output::write_scan(&mut sink.writer, &r)
    };
    written.map_err(|e| sink.io(e))?;
    sink.finish()?;

    if let Some(out) = &cfg.out {
        let command = if sweep { "sweep" } else { "scan" };
        let meta = SweepMeta::new(command, cfg.to_raw(), &r, deviation.as_ref(), spot.as_ref());
        let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        write_file(&output::sidecar(out, ".meta.json"), &(json + "\n"))?;
    }
    let (kind, x, y) = if sweep {
        (PlotKind::Sweep, r.axis1.name.as_str(), r.axis2.map_or("", |a| a.name.as_str()))
    } else {
        (PlotKind::Scan, r.axis1.name.as_str(), "")
    };
    gnuplot(cli, cfg, kind, x, y)?;

    eprintln!("{} cells in {:.3} s", r.len(), r.total_seconds);
    if let Some(d) = &deviation {
        eprintln!(
            "engine deviation: max {} (cell {}), mean {}",
            d.max,
            d.argmax.map_or("-".into(), |i| i.to_string()),
            d.mean
        );
    }
    let mut spot_failures = 0;
    if let Some(rep) = &spot {
        eprintln!("spot validation (seed {}): max deviation {}", rep.seed, rep.max_deviation);
        for c in &rep.checks {
            let at = match c.x2 {
                Some(x2) => format!("({}, {})", c.x1, x2),
                None => format!("{}", c.x1),
            };
            match &c.error {
                Some(e) => {
                    spot_failures += 1;
                    eprintln!("  cell {} {at}: numeric failed: {e}", c.index);
                }
                None => eprintln!(
                    "  cell {} {at}: dressed {} numeric {} deviation {}",
                    c.index, c.dressed, c.numeric, c.deviation
                ),
            }
        }
    }
    if !r.failures.is_empty() || spot_failures > 0 {
        return Err(failed(format!(
            "{} cell evaluations failed",
            r.failures.len() + spot_failures
        )));
    }
    Ok(())
}

fn compare(cli: &Cli, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (p, sys, sim) = (&cfg.pulse, &cfg.system, &cfg.sim);
    let numeric = integrate3(p, sys, sim).map_err(numerical)?;
    let dressed = AdiabaticSolution::compute(p, sys, sim, &Quad::default())
        .map_err(failed)?;
    let n: Vec<_> = numeric.states.iter().map(|s| [s.a1, s.a2, s.a3]).collect();
    let d: Vec<_> = (0..dressed.times.len())
        .map(|i| [dressed.a1[i], dressed.a2[i], dressed.a3[i]])
        .collect();

    let mut sink = Sink::open(cfg.out.as_deref(), stdout)?;
    output::write_compare(&mut sink.writer, &numeric.times, &n, &d).map_err(|e| sink.io(e))?;
    sink.finish()?;
    gnuplot(cli, cfg, PlotKind::Compare, "t (ns)", "")?;

    let max_dn2 = n
        .iter()
        .zip(&d)
        .map(|(a, b)| (a[1].norm_sqr() - b[1].norm_sqr()).abs())
        .fold(0.0, f64::max);
    let rn = numeric.final_coherence();
    eprintln!(
        "final |rho13|: numeric {rn}, dressed {}, deviation {}",
        dressed.rho13_abs_final,
        (rn - dressed.rho13_abs_final).abs()
    );
    eprintln!("max |n2 numeric - n2 dressed| = {max_dn2}");
    Ok(())
}
