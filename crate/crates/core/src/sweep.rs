//! Parameter scans and grids of the final coherence.
//!
//! Cells are independent and evaluated in parallel with rayon; results are
//! always assembled by cell index, so the output does not depend on the
//! scheduling. 2D grids are stored row-major with the first axis outermost.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dressed::final_coherence_dressed;
use crate::dynamics::propagate3;
use crate::model::{PulseParams, SimConfig, SystemParams};
use crate::quadrature::QuadratureSpec;

/// Default cap on the number of cells in a 2D grid (500 × 500).
pub const DEFAULT_MAX_CELLS: usize = 500 * 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid axis {axis}: {reason}")]
    Axis { axis: String, reason: String },
    #[error("grid of {cells} cells exceeds the cap of {cap}")]
    GridTooLarge { cells: usize, cap: usize },
    #[error("both axes sweep {0}")]
    DuplicateAxis(AxisName),
    #[error("result has no {0} values")]
    MissingEngine(Engine),
    #[error("cannot pick {k} cells from a grid of {n}")]
    TooManySpots { k: usize, n: usize },
}

/// Pulse parameter an axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "e0p")]
    E0p,
    #[serde(rename = "wp")]
    Wp,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "tau_p")]
    TauP,
}

impl AxisName {
    pub const ALL: [AxisName; 4] = [AxisName::E0p, AxisName::Wp, AxisName::Beta, AxisName::TauP];

    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::E0p => "e0p",
            AxisName::Wp => "wp",
            AxisName::Beta => "beta",
            AxisName::TauP => "tau_p",
        }
    }

    /// Returns `pulse` with this parameter set to `value`.
    pub fn apply(self, pulse: &PulseParams<f64>, value: f64) -> PulseParams<f64> {
        let mut p = *pulse;
        match self {
            AxisName::E0p => p.e0p = value,
            AxisName::Wp => p.wp = value,
            AxisName::Beta => p.beta = value,
            AxisName::TauP => p.tau_p = value,
        }
        p
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxisName::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| SweepError::Axis {
                axis: s.to_string(),
                reason: "expected one of e0p, wp, beta, tau_p".into(),
            })
    }
}

/// Uniform grid `start, …, stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(name: AxisName, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            start,
            stop,
            count,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |reason: &str| SweepError::Axis {
            axis: self.name.to_string(),
            reason: reason.to_string(),
        };
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if self.start >= self.stop {
            return Err(bad("start must be below stop"));
        }
        if self.count < 2 {
            return Err(bad("count must be at least 2"));
        }
        Ok(())
    }

    /// The axis points; both end points are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        crate::model::uniform_grid(self.start, self.stop, self.count)
    }
}

/// Parses `name:start:stop:count`, e.g. `e0p:-100:-10:91`.
impl FromStr for AxisSpec {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| SweepError::Axis {
            axis: s.to_string(),
            reason,
        };
        let parts: Vec<&str> = s.split(':').collect();
        let [name, start, stop, count] = parts[..] else {
            return Err(bad("expected name:start:stop:count".into()));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}")));
        let spec = AxisSpec {
            name: name.trim().parse()?,
            start: num(start)?,
            stop: num(stop)?,
            count: count
                .trim()
                .parse()
                .map_err(|e| bad(format!("{count:?}: {e}")))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One way of predicting the final coherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Schrödinger integration of the three-level system.
    Numeric,
    /// Adiabatic dressed-state closed form.
    Dressed,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Numeric => "numeric",
            Engine::Dressed => "dressed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineSet {
    Numeric,
    #[default]
    Dressed,
    Both,
}

impl EngineSet {
    pub fn contains(self, e: Engine) -> bool {
        matches!(
            (self, e),
            (EngineSet::Both, _) | (EngineSet::Numeric, Engine::Numeric) | (EngineSet::Dressed, Engine::Dressed)
        )
    }
}

impl FromStr for EngineSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "numeric" => Ok(EngineSet::Numeric),
            "dressed" => Ok(EngineSet::Dressed),
            "both" => Ok(EngineSet::Both),
            _ => Err(format!("unknown engine {s:?} (expected numeric, dressed or both)")),
        }
    }
}

impl fmt::Display for EngineSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineSet::Numeric => "numeric",
            EngineSet::Dressed => "dressed",
            EngineSet::Both => "both",
        })
    }
}

/// Everything held fixed while the axes vary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Setup {
    pub pulse: PulseParams<f64>,
    pub system: SystemParams<f64>,
    pub sim: SimConfig<f64>,
    #[serde(skip)]
    pub quadrature: QuadratureSpec<f64>,
    pub max_cells: usize,
}

impl Setup {
    pub fn new(pulse: PulseParams<f64>, system: SystemParams<f64>, sim: SimConfig<f64>) -> Self {
        Self {
            pulse,
            system,
            sim,
            quadrature: QuadratureSpec::default(),
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    /// Final `|ρ13|` of one engine for `pulse`.
    pub fn coherence(&self, engine: Engine, pulse: &PulseParams<f64>) -> Result<f64, String> {
        match engine {
            Engine::Numeric => propagate3(pulse, &self.system, &self.sim)
                .map(|(s, _)| (s.a1 * s.a3.conj()).norm())
                .map_err(|e| e.to_string()),
            Engine::Dressed => {
                final_coherence_dressed(pulse, &self.system, &self.sim, &self.quadrature)
                    .map_err(|e| e.to_string())
            }
        }
    }
}

/// A cell an engine could not evaluate. Its value is stored as NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub index: usize,
    pub engine: Engine,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis1: AxisSpec,
    pub axis2: Option<AxisSpec>,
    pub setup: Setup,
    pub engines: EngineSet,
    /// Row-major `|ρ13|` from the numeric engine, if requested.
    pub numeric: Option<Vec<f64>>,
    /// Row-major `|ρ13|` from the dressed engine, if requested.
    pub dressed: Option<Vec<f64>>,
    pub failures: Vec<CellFailure>,
    /// Wall-clock seconds spent on each cell (all engines).
    pub cell_seconds: Vec<f64>,
    pub total_seconds: f64,
}

impl SweepResult {
    pub fn len(&self) -> usize {
        self.axis1.count * self.axis2.map_or(1, |a| a.count)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self, engine: Engine) -> Option<&[f64]> {
        match engine {
            Engine::Numeric => self.numeric.as_deref(),
            Engine::Dressed => self.dressed.as_deref(),
        }
    }

    /// Axis coordinates of cell `index`: `(x1, x2)`.
    pub fn coordinates(&self, index: usize) -> (f64, Option<f64>) {
        let n2 = self.axis2.map_or(1, |a| a.count);
        let x1 = self.axis1.values()[index / n2];
        let x2 = self.axis2.map(|a| a.values()[index % n2]);
        (x1, x2)
    }

    /// Pulse evaluated at cell `index`.
    pub fn cell_pulse(&self, index: usize) -> PulseParams<f64> {
        let (x1, x2) = self.coordinates(index);
        let p = self.axis1.name.apply(&self.setup.pulse, x1);
        match (self.axis2, x2) {
            (Some(a), Some(x)) => a.name.apply(&p, x),
            _ => p,
        }
    }
}

/// Final coherence along one axis.
pub fn scan1d(axis: AxisSpec, setup: &Setup, engines: EngineSet) -> Result<SweepResult, SweepError> {
    axis.validate()?;
    let pulses: Vec<_> = axis.values().into_iter().map(|x| axis.name.apply(&setup.pulse, x)).collect();
    Ok(run(axis, None, setup, engines, &pulses))
}

/// Final coherence over the product of two axes, `axis1` outermost.
pub fn sweep2d(
    axis1: AxisSpec,
    axis2: AxisSpec,
    setup: &Setup,
    engines: EngineSet,
) -> Result<SweepResult, SweepError> {
    axis1.validate()?;
    axis2.validate()?;
    if axis1.name == axis2.name {
        return Err(SweepError::DuplicateAxis(axis1.name));
    }
    let cells = axis1.count.saturating_mul(axis2.count);
    if cells > setup.max_cells {
        return Err(SweepError::GridTooLarge {
            cells,
            cap: setup.max_cells,
        });
    }
    let xs2 = axis2.values();
    let pulses: Vec<_> = axis1
        .values()
        .into_iter()
        .flat_map(|x1| {
            let p = axis1.name.apply(&setup.pulse, x1);
            xs2.iter().map(move |&x2| axis2.name.apply(&p, x2))
        })
        .collect();
    Ok(run(axis1, Some(axis2), setup, engines, &pulses))
}

struct Cell {
    numeric: Option<Result<f64, String>>,
    dressed: Option<Result<f64, String>>,
    seconds: f64,
}

fn run(
    axis1: AxisSpec,
    axis2: Option<AxisSpec>,
    setup: &Setup,
    engines: EngineSet,
    pulses: &[PulseParams<f64>],
) -> SweepResult {
    let start = Instant::now();
    let cells: Vec<Cell> = pulses
        .par_iter()
        .map(|p| {
            let t = Instant::now();
            let eval = |e: Engine| engines.contains(e).then(|| setup.coherence(e, p));
            let numeric = eval(Engine::Numeric);
            let dressed = eval(Engine::Dressed);
            Cell {
                numeric,
                dressed,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut failures = Vec::new();
    let mut collect = |engine: Engine, pick: fn(&Cell) -> &Option<Result<f64, String>>| {
        if !engines.contains(engine) {
            return None;
        }
        let values = cells
            .iter()
            .enumerate()
            .map(|(index, c)| match pick(c) {
                Some(Ok(v)) => *v,
                Some(Err(message)) => {
                    failures.push(CellFailure {
                        index,
                        engine,
                        message: message.clone(),
                    });
                    f64::NAN
                }
                None => f64::NAN,
            })
            .collect();
        Some(values)
    };
    let numeric = collect(Engine::Numeric, |c| &c.numeric);
    let dressed = collect(Engine::Dressed, |c| &c.dressed);
    failures.sort_by_key(|f| (f.index, f.engine == Engine::Dressed));

    SweepResult {
        axis1,
        axis2,
        setup: *setup,
        engines,
        numeric,
        dressed,
        failures,
        cell_seconds: cells.iter().map(|c| c.seconds).collect(),
        total_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Cellwise disagreement between the two engines. Cells where either
/// engine failed are excluded from the statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    /// `|numeric − dressed|` per cell (NaN where a value is missing).
    pub per_cell: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub argmax: Option<usize>,
    pub compared: usize,
}

pub fn compare_engines(r: &SweepResult) -> Result<Deviation, SweepError> {
    let num = r.numeric.as_ref().ok_or(SweepError::MissingEngine(Engine::Numeric))?;
    let dre = r.dressed.as_ref().ok_or(SweepError::MissingEngine(Engine::Dressed))?;
    let per_cell: Vec<f64> = num.iter().zip(dre).map(|(a, b)| (a - b).abs()).collect();
    let mut max = 0.0;
    let mut argmax = None;
    let mut sum = 0.0;
    let mut compared = 0;
    for (i, &d) in per_cell.iter().enumerate() {
        if d.is_nan() {
            continue;
        }
        compared += 1;
        sum += d;
        if argmax.is_none() || d > max {
            max = d;
            argmax = Some(i);
        }
    }
    let mean = if compared > 0 { sum / compared as f64 } else { 0.0 };
    Ok(Deviation {
        per_cell,
        max,
        mean,
        argmax,
        compared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotCheck {
    pub index: usize,
    pub x1: f64,
    pub x2: Option<f64>,
    pub dressed: f64,
    /// NaN if the integrator failed; see `error`.
    pub numeric: f64,
    pub deviation: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotReport {
    pub seed: u64,
    pub checks: Vec<SpotCheck>,
    /// Largest deviation over the checks that produced a value.
    pub max_deviation: f64,
}

/// Indices of `k` distinct cells out of `n`, reproducible for a given seed.
pub fn spot_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, SweepError> {
    if k > n {
        return Err(SweepError::TooManySpots { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Recomputes `k` randomly chosen cells of a dressed-engine result with the
/// numeric engine.
pub fn spot_validate(grid: &SweepResult, k: usize, seed: u64) -> Result<SpotReport, SweepError> {
    let dressed = grid.dressed.as_ref().ok_or(SweepError::MissingEngine(Engine::Dressed))?;
    let picked = spot_indices(grid.len(), k, seed)?;
    let checks: Vec<SpotCheck> = picked
        .par_iter()
        .map(|&index| {
            let (x1, x2) = grid.coordinates(index);
            let numeric = grid.setup.coherence(Engine::Numeric, &grid.cell_pulse(index));
            let d = dressed[index];
            let (numeric, error) = match numeric {
                Ok(v) => (v, None),
                Err(e) => (f64::NAN, Some(e)),
            };
            SpotCheck {
                index,
                x1,
                x2,
                dressed: d,
                numeric,
                deviation: (numeric - d).abs(),
                error,
            }
        })
        .collect();
    let max_deviation = checks
        .iter()
        .map(|c| c.deviation)
        .filter(|d| !d.is_nan())
        .fold(0.0, f64::max);
    Ok(SpotReport {
        seed,
        checks,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(wp: f64, e0p: f64) -> Setup {
        Setup::new(
            PulseParams::new(wp, 5.0, e0p, 25.0),
            SystemParams::default(),
            SimConfig::default(),
        )
    }

    #[test]
    fn axis_parsing() {
        let a: AxisSpec = "e0p:-100:-10:91".parse().unwrap();
        assert_eq!(a, AxisSpec::new(AxisName::E0p, -100.0, -10.0, 91));
        let v = a.values();
        assert_eq!(v.len(), 91);
        assert_eq!(v[0], -100.0);
        assert_eq!(v[90], -10.0);
        assert_eq!(v[10], -90.0);
        assert!("tau_p:1:2:2".parse::<AxisSpec>().is_ok());
        for bad in ["e0p:0:1", "gamma:0:1:3", "wp:1:0:3", "wp:0:1:1", "wp:0:x:3", "wp:0:inf:3"] {
            assert!(bad.parse::<AxisSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn engine_sets() {
        assert!(EngineSet::Both.contains(Engine::Numeric));
        assert!(!EngineSet::Dressed.contains(Engine::Numeric));
        assert_eq!("both".parse::<EngineSet>().unwrap(), EngineSet::Both);
        assert!("all".parse::<EngineSet>().is_err());
    }

    #[test]
    fn zero_coupling_scan_is_zero() {
        let s = setup(0.0, -30.0);
        let r = scan1d(AxisSpec::new(AxisName::E0p, -50.0, -10.0, 2), &s, EngineSet::Both).unwrap();
        assert_eq!(r.numeric.as_deref(), Some(&[0.0, 0.0][..]));
        assert_eq!(r.dressed.as_deref(), Some(&[0.0, 0.0][..]));
        let d = compare_engines(&r).unwrap();
        assert_eq!(d.max, 0.0);
        assert_eq!(d.compared, 2);
    }

    #[test]
    fn grid_layout_is_row_major() {
        let s = setup(15.0, -30.0);
        let a1 = AxisSpec::new(AxisName::E0p, -60.0, -20.0, 3);
        let a2 = AxisSpec::new(AxisName::Wp, 0.0, 20.0, 2);
        let r = sweep2d(a1, a2, &s, EngineSet::Dressed).unwrap();
        let v = r.dressed.as_ref().unwrap();
        assert_eq!(v.len(), 6);
        assert!(r.numeric.is_none());
        for i in 0..3 {
            // wp = 0 column
            assert_eq!(v[2 * i], 0.0);
            let p = r.cell_pulse(2 * i + 1);
            assert_eq!((p.e0p, p.wp), (a1.values()[i], 20.0));
            assert_eq!(v[2 * i + 1], s.coherence(Engine::Dressed, &p).unwrap());
        }
        assert_eq!(r.coordinates(5), (-20.0, Some(20.0)));
    }

    #[test]
    fn grid_cap_and_duplicate_axes() {
        let mut s = setup(15.0, -30.0);
        s.max_cells = 10;
        let a = AxisSpec::new(AxisName::E0p, -1.0, 0.0, 4);
        let b = AxisSpec::new(AxisName::Wp, 0.0, 1.0, 3);
        assert!(matches!(
            sweep2d(a, b, &s, EngineSet::Dressed),
            Err(SweepError::GridTooLarge { cells: 12, cap: 10 })
        ));
        assert!(matches!(sweep2d(a, a, &s, EngineSet::Dressed), Err(SweepError::DuplicateAxis(_))));
    }

    #[test]
    fn failures_are_recorded_per_cell() {
        // beta = 0 has no adiabatic branch; the other cell is fine.
        let s = setup(15.0, -30.0);
        let r = scan1d(AxisSpec::new(AxisName::Beta, 0.0, 25.0, 2), &s, EngineSet::Dressed).unwrap();
        let v = r.dressed.as_ref().unwrap();
        assert!(v[0].is_nan());
        assert!((0.0..=0.5).contains(&v[1]));
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].index, 0);
        assert_eq!(r.failures[0].engine, Engine::Dressed);
    }

    #[test]
    fn compare_requires_both_engines() {
        let s = setup(0.0, -30.0);
        let r = scan1d(AxisSpec::new(AxisName::Wp, 0.0, 1.0, 2), &s, EngineSet::Dressed).unwrap();
        assert_eq!(compare_engines(&r), Err(SweepError::MissingEngine(Engine::Numeric)));
        assert!(spot_validate(&r, 0, 1).unwrap().checks.is_empty());
    }

    #[test]
    fn spot_selection_is_reproducible() {
        let a = spot_indices(40_000, 20, 7).unwrap();
        assert_eq!(a, spot_indices(40_000, 20, 7).unwrap());
        assert_ne!(a, spot_indices(40_000, 20, 8).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(spot_indices(5, 5, 0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(spot_indices(3, 4, 0).is_err());
    }

    #[test]
    fn spot_validation_recomputes_numerically() {
        let s = setup(15.0, -30.0);
        let r = scan1d(AxisSpec::new(AxisName::E0p, -40.0, -20.0, 3), &s, EngineSet::Both).unwrap();
        let dressed_only = SweepResult {
            numeric: None,
            engines: EngineSet::Dressed,
            ..r.clone()
        };
        let rep = spot_validate(&dressed_only, 2, 3).unwrap();
        assert_eq!(rep.checks.len(), 2);
        for c in &rep.checks {
            assert_eq!(c.numeric, r.numeric.as_ref().unwrap()[c.index]);
            assert_eq!(c.dressed, r.dressed.as_ref().unwrap()[c.index]);
            assert!(c.error.is_none());
        }
    }

    #[test]
    fn parallel_results_are_deterministic() {
        let s = setup(15.0, -30.0);
        let a1 = AxisSpec::new(AxisName::E0p, -100.0, 0.0, 7);
        let a2 = AxisSpec::new(AxisName::Wp, 0.0, 40.0, 5);
        let r1 = sweep2d(a1, a2, &s, EngineSet::Dressed).unwrap();
        let r2 = sweep2d(a1, a2, &s, EngineSet::Dressed).unwrap();
        let bits = |r: &SweepResult| r.dressed.as_ref().unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&r1), bits(&r2));
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let r3 = single.install(|| sweep2d(a1, a2, &s, EngineSet::Dressed).unwrap());
        assert_eq!(bits(&r1), bits(&r3));
    }
}
