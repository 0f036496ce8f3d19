//! CSV, metadata and gnuplot emission.
//!
//! Floats are written in Rust's shortest round-trip form (`{:?}`), so a
//! file reproduces the in-memory values exactly when parsed back, and the
//! same values always produce the same bytes. Lines end in `\n`; comment
//! lines start with `#`.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use lambda_chirp::sweep::CellFailure;
use lambda_chirp::{
    effective_detuning, rabi_coupling, AxisSpec, Complex, Deviation, EngineSet, Pulse, SpotReport,
    SweepResult,
};
use serde::Serialize;

use crate::config::RawConfig;

pub const TRAJECTORY_HEADER: &str =
    "t,re_a1,im_a1,re_a2,im_a2,re_a3,im_a3,n1,n2,n3,abs_rho13,eps_eff,rabi";
pub const SCAN_HEADER: &str = "axis_value,abs_rho13_numeric,abs_rho13_dressed,deviation";
pub const COMPARE_HEADER: &str = "t,n1_numeric,n2_numeric,n3_numeric,abs_rho13_numeric,\
n1_dressed,n2_dressed,n3_dressed,abs_rho13_dressed";

#[inline]
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_row<W: Write>(w: &mut W, fields: &[f64]) -> io::Result<()> {
    let mut line = String::with_capacity(fields.len() * 24);
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&num(*v));
    }
    line.push('\n');
    w.write_all(line.as_bytes())
}

/// One sampled state of the bare amplitudes.
pub fn write_trajectory<W: Write>(
    w: &mut W,
    pulse: &Pulse,
    times: &[f64],
    states: impl IntoIterator<Item = [Complex<f64>; 3]>,
) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (&t, [a1, a2, a3]) in times.iter().zip(states) {
        write_row(
            w,
            &[
                t,
                a1.re,
                a1.im,
                a2.re,
                a2.im,
                a3.re,
                a3.im,
                a1.norm_sqr(),
                a2.norm_sqr(),
                a3.norm_sqr(),
                (a1 * a3.conj()).norm(),
                effective_detuning(t, pulse),
                rabi_coupling(t, pulse),
            ],
        )?;
    }
    Ok(())
}

/// Footer appended when a run stops on a numerical failure.
pub fn write_failure<W: Write>(w: &mut W, message: &str, t: Option<f64>) -> io::Result<()> {
    writeln!(w, "# error: {message}")?;
    if let Some(t) = t {
        writeln!(w, "# failed at t = {}", num(t))?;
    }
    Ok(())
}

fn write_cell_failures<W: Write>(w: &mut W, failures: &[CellFailure]) -> io::Result<()> {
    for f in failures {
        writeln!(w, "# failed cell {} ({}): {}", f.index, f.engine, f.message)?;
    }
    Ok(())
}

fn optional(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `axis_value,abs_rho13_numeric,abs_rho13_dressed,deviation`; columns of an
/// engine that was not run are left empty.
pub fn write_scan<W: Write>(w: &mut W, r: &SweepResult) -> io::Result<()> {
    writeln!(w, "{SCAN_HEADER}")?;
    for (i, x) in r.axis1.values().into_iter().enumerate() {
        let n = r.numeric.as_ref().map(|v| v[i]);
        let d = r.dressed.as_ref().map(|v| v[i]);
        let dev = n.zip(d).map(|(a, b)| (a - b).abs());
        writeln!(w, "{},{},{},{}", num(x), optional(n), optional(d), optional(dev))?;
    }
    write_cell_failures(w, &r.failures)
}

/// Header of a grid file: the two axis names, then the value columns.
pub fn sweep_header(r: &SweepResult) -> String {
    let a2 = r.axis2.map_or("axis2", |a| a.name.as_str());
    let values = match r.engines {
        EngineSet::Both => "abs_rho13_numeric,abs_rho13_dressed,deviation",
        _ => "abs_rho13",
    };
    format!("{},{a2},{values}", r.axis1.name)
}

/// Long format, one row per cell in row-major order.
pub fn write_sweep<W: Write>(w: &mut W, r: &SweepResult) -> io::Result<()> {
    writeln!(w, "{}", sweep_header(r))?;
    for i in 0..r.len() {
        let (x1, x2) = r.coordinates(i);
        let x2 = x2.unwrap_or(f64::NAN);
        match (&r.numeric, &r.dressed) {
            (Some(n), Some(d)) => write_row(w, &[x1, x2, n[i], d[i], (n[i] - d[i]).abs()])?,
            (Some(v), None) | (None, Some(v)) => write_row(w, &[x1, x2, v[i]])?,
            (None, None) => {}
        }
    }
    write_cell_failures(w, &r.failures)
}

/// Populations and coherence of both engines on a common time grid.
pub fn write_compare<W: Write>(
    w: &mut W,
    times: &[f64],
    numeric: &[[Complex<f64>; 3]],
    dressed: &[[Complex<f64>; 3]],
) -> io::Result<()> {
    writeln!(w, "{COMPARE_HEADER}")?;
    let obs = |[a1, a2, a3]: [Complex<f64>; 3]| {
        [a1.norm_sqr(), a2.norm_sqr(), a3.norm_sqr(), (a1 * a3.conj()).norm()]
    };
    for ((&t, &n), &d) in times.iter().zip(numeric).zip(dressed) {
        let (n, d) = (obs(n), obs(d));
        write_row(w, &[t, n[0], n[1], n[2], n[3], d[0], d[1], d[2], d[3]])?;
    }
    Ok(())
}

/// Parses a file written by this module: the header and the numeric rows.
/// Comment lines are skipped and empty fields read as NaN.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or("empty file")?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| {
                if f.is_empty() {
                    Ok(f64::NAN)
                } else {
                    f.parse::<f64>().map_err(|e| format!("row {}: {f:?}: {e}", i + 1))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("row {} has {} fields, expected {}", i + 1, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// `<out>.meta.json` next to `<out>`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn version() -> String {
    match option_env!("LAMBDA_CHIRP_GIT_DESCRIBE") {
        Some(d) if !d.is_empty() => format!("{} ({d})", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationSummary {
    pub max: f64,
    pub mean: f64,
    pub argmax: Option<usize>,
    pub compared: usize,
}

impl From<&Deviation> for DeviationSummary {
    fn from(d: &Deviation) -> Self {
        Self {
            max: d.max,
            mean: d.mean,
            argmax: d.argmax,
            compared: d.compared,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellTiming {
    pub total_seconds: f64,
    pub max_cell_seconds: f64,
    pub mean_cell_seconds: f64,
}

/// Sidecar metadata of a scan or sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMeta<'a> {
    pub command: &'a str,
    pub version: String,
    pub engine: EngineSet,
    pub parameters: RawConfig,
    pub axes: Vec<AxisSpec>,
    pub cells: usize,
    pub failures: &'a [CellFailure],
    pub deviation: Option<DeviationSummary>,
    pub spot_validation: Option<&'a SpotReport>,
    pub timing: CellTiming,
}

impl<'a> SweepMeta<'a> {
    pub fn new(
        command: &'a str,
        parameters: RawConfig,
        r: &'a SweepResult,
        deviation: Option<&Deviation>,
        spot: Option<&'a SpotReport>,
    ) -> Self {
        let n = r.cell_seconds.len().max(1) as f64;
        Self {
            command,
            version: version(),
            engine: r.engines,
            parameters,
            axes: std::iter::once(r.axis1).chain(r.axis2).collect(),
            cells: r.len(),
            failures: &r.failures,
            deviation: deviation.map(DeviationSummary::from),
            spot_validation: spot,
            timing: CellTiming {
                total_seconds: r.total_seconds,
                max_cell_seconds: r.cell_seconds.iter().copied().fold(0.0, f64::max),
                mean_cell_seconds: r.cell_seconds.iter().sum::<f64>() / n,
            },
        }
    }
}

/// Which plot a gnuplot script should draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Trajectory,
    Scan,
    Sweep,
    Compare,
}

/// A self-contained gnuplot script that renders `csv` to `<csv>.png`.
pub fn gnuplot_script(kind: PlotKind, csv: &Path, xlabel: &str, ylabel: &str) -> String {
    let data = csv.display();
    let mut s = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{data}.png'\n\
         set key outside right\nset xlabel '{xlabel}'\n"
    );
    let body = match kind {
        PlotKind::Trajectory => format!(
            "set ylabel 'population / coherence'\n\
             plot '{data}' using 1:8 with lines title 'n1', \\\n\
             \x20    '' using 1:9 with lines title 'n2', \\\n\
             \x20    '' using 1:10 with lines title 'n3', \\\n\
             \x20    '' using 1:11 with lines title '|rho13|'\n"
        ),
        PlotKind::Scan => format!(
            "set ylabel '|rho13(final)|'\nset yrange [0:0.5]\n\
             plot '{data}' using 1:2 with linespoints title 'numeric', \\\n\
             \x20    '' using 1:3 with lines title 'dressed'\n"
        ),
        PlotKind::Sweep => format!(
            "set ylabel '{ylabel}'\nset cblabel '|rho13(final)|'\nset cbrange [0:0.5]\n\
             set view map\nplot '{data}' using 1:2:3 with image notitle\n"
        ),
        PlotKind::Compare => format!(
            "set ylabel 'population / coherence'\n\
             plot '{data}' using 1:3 with lines title 'n2 numeric', \\\n\
             \x20    '' using 1:7 with lines dashtype 2 title 'n2 dressed', \\\n\
             \x20    '' using 1:5 with lines title '|rho13| numeric', \\\n\
             \x20    '' using 1:9 with lines dashtype 2 title '|rho13| dressed'\n"
        ),
    };
    s.push_str(&body);
    s
}
