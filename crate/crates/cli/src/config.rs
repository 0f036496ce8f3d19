//! Run configuration: a flat JSON object.
//!
//! ```json
//! {"tau_p": 5, "wp": 35, "e0p": -30, "beta": 15}
//! ```
//!
//! `tau_p`, `wp`, `e0p` and `beta` are required; everything else has a
//! default. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use lambda_chirp::{
    AxisSpec, Complex, EngineSet, Formulation, ParamError, PulseParams, SimConfig, SweepError,
    SystemParams,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Invalid(#[from] ParamError),
    #[error("invalid `axes`: {0}")]
    Axis(#[from] SweepError),
    #[error("invalid `engine`: {0}")]
    Engine(String),
}

/// A complex amplitude, written either as a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Amplitude> for Complex<f64> {
    fn from(a: Amplitude) -> Self {
        match a {
            Amplitude::Real(re) => Complex::new(re, 0.0),
            Amplitude::Complex([re, im]) => Complex::new(re, im),
        }
    }
}

/// The file format, key for key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub tau_p: Option<f64>,
    pub wp: Option<f64>,
    pub e0p: Option<f64>,
    pub beta: Option<f64>,
    pub chirp_factor: Option<f64>,
    pub dipole_ratio: Option<f64>,
    #[serde(rename = "omega_R")]
    pub omega_r: Option<f64>,
    pub omega_13: Option<f64>,
    pub t_span_multiplier: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub n_samples: Option<usize>,
    pub formulation: Option<Formulation>,
    pub initial_state: Option<[Amplitude; 3]>,
    /// `name:start:stop:count` strings, as for `--axis`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pulse: PulseParams<f64>,
    pub system: SystemParams<f64>,
    pub sim: SimConfig<f64>,
    pub axes: Vec<AxisSpec>,
    pub engine: Option<EngineSet>,
    pub out: Option<PathBuf>,
    /// Non-fatal findings, e.g. a violated broadband condition.
    pub warnings: Vec<String>,
}

impl RunConfig {
    /// Fully resolved parameters in file form; loading them back yields
    /// the same pulse, system and simulation settings.
    pub fn to_raw(&self) -> RawConfig {
        let amp = |c: Complex<f64>| Amplitude::Complex([c.re, c.im]);
        RawConfig {
            tau_p: Some(self.pulse.tau_p),
            wp: Some(self.pulse.wp),
            e0p: Some(self.pulse.e0p),
            beta: Some(self.pulse.beta),
            chirp_factor: Some(self.pulse.chirp_factor),
            dipole_ratio: Some(self.system.dipole_ratio),
            omega_r: Some(self.system.omega_r),
            omega_13: self.system.omega_13,
            t_span_multiplier: Some(self.sim.t_span_multiplier),
            rel_tol: Some(self.sim.rel_tol),
            abs_tol: Some(self.sim.abs_tol),
            n_samples: Some(self.sim.n_samples),
            formulation: Some(self.sim.formulation),
            initial_state: Some(self.sim.initial_state.map(amp)),
            axes: None,
            engine: None,
            out: None,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    resolve(raw)
}

pub fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let defaults = SimConfig::<f64>::default();
    // Missing required keys get harmless placeholders so that an invalid
    // value that *is* present is reported first.
    let pulse = PulseParams::new(
        raw.wp.unwrap_or(0.0),
        raw.tau_p.unwrap_or(1.0),
        raw.e0p.unwrap_or(0.0),
        raw.beta.unwrap_or(0.0),
    )
    .with_chirp_factor(raw.chirp_factor.unwrap_or(3.0));
    pulse.validate()?;
    for (key, v) in [("tau_p", raw.tau_p), ("wp", raw.wp), ("e0p", raw.e0p), ("beta", raw.beta)] {
        if v.is_none() {
            return Err(ConfigError::Missing(key));
        }
    }

    let system = SystemParams {
        dipole_ratio: raw.dipole_ratio.unwrap_or(1.0),
        omega_r: raw.omega_r.unwrap_or(0.0),
        omega_13: raw.omega_13,
    };
    system.validate()?;

    let sim = SimConfig {
        t_span_multiplier: raw.t_span_multiplier.unwrap_or(defaults.t_span_multiplier),
        rel_tol: raw.rel_tol.unwrap_or(defaults.rel_tol),
        abs_tol: raw.abs_tol.unwrap_or(defaults.abs_tol),
        n_samples: raw.n_samples.unwrap_or(defaults.n_samples),
        initial_state: raw
            .initial_state
            .map(|s| s.map(Complex::from))
            .unwrap_or(defaults.initial_state),
        formulation: raw.formulation.unwrap_or_default(),
    };
    sim.validate()?;

    let axes = raw
        .axes
        .unwrap_or_default()
        .iter()
        .map(|a| a.parse::<AxisSpec>())
        .collect::<Result<Vec<_>, _>>()?;
    let engine = raw
        .engine
        .map(|e| e.parse::<EngineSet>().map_err(ConfigError::Engine))
        .transpose()?;

    let mut warnings = Vec::new();
    if system.broadband_valid(&pulse) == Some(false) {
        warnings.push(format!(
            "broadband condition 1/tau_p > omega_13 fails ({} <= {})",
            1.0 / pulse.tau_p,
            system.omega_13.unwrap_or_default()
        ));
    }

    Ok(RunConfig {
        pulse,
        system,
        sim,
        axes,
        engine,
        out: raw.out,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"tau_p": 5, "wp": 35, "e0p": -30, "beta": 15}"#).unwrap();
        assert_eq!(c.pulse, PulseParams::new(35.0, 5.0, -30.0, 15.0));
        assert_eq!(c.system, SystemParams::default());
        assert_eq!(c.sim, SimConfig::default());
        assert!(c.axes.is_empty());
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn invalid_value_names_the_key() {
        let e = parse_config(r#"{"tau_p": -1}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(ParamError { field: "tau_p", .. })), "{e}");
        assert!(e.to_string().contains("tau_p"));
        let e = parse_config(r#"{"tau_p": 5, "wp": 1, "e0p": 0, "beta": 1, "n_samples": 1}"#).unwrap_err();
        assert!(e.to_string().contains("n_samples"));
        let e = parse_config(r#"{"tau_p": 5, "wp": 1, "e0p": 0, "beta": 1, "initial_state": [1, 1, 0]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("initial_state"));
    }

    #[test]
    fn missing_and_unknown_keys() {
        let e = parse_config(r#"{"tau_p": 5, "wp": 1, "beta": 1}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Missing("e0p")));
        let e = parse_config(r#"{"tau_p": 5, "wp": 1, "e0p": 0, "beta": 1, "Beta": 2}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field `Beta`"), "{e}");
        assert!(matches!(parse_config("{"), Err(ConfigError::Json(_))));
    }

    #[test]
    fn positive_detuning_has_no_crossings() {
        let c = parse_config(r#"{"tau_p": 5, "wp": 15, "e0p": 30, "beta": 25}"#).unwrap();
        assert!(lambda_chirp::resonance_crossings(&c.pulse).is_empty());
    }

    #[test]
    fn optional_keys() {
        let c = parse_config(
            r#"{"tau_p": 5, "wp": 15, "e0p": 30, "beta": 25, "chirp_factor": 1,
                "dipole_ratio": 2, "omega_R": 0.5, "omega_13": 1,
                "t_span_multiplier": 3, "rel_tol": 1e-9, "abs_tol": 1e-11, "n_samples": 11,
                "formulation": "direct", "initial_state": [[0, 0.6], 0, 0.8],
                "axes": ["e0p:-100:0:5", "wp:0:40:3"], "engine": "both", "out": "x.csv"}"#,
        )
        .unwrap();
        assert_eq!(c.pulse.chirp_factor, 1.0);
        assert_eq!(c.system.omega_r, 0.5);
        assert_eq!(c.sim.formulation, Formulation::Direct);
        assert_eq!(c.sim.initial_state[0], Complex::new(0.0, 0.6));
        assert_eq!(c.axes.len(), 2);
        assert_eq!(c.engine, Some(EngineSet::Both));
        assert_eq!(c.out.as_deref(), Some(Path::new("x.csv")));
        // 1/tau_p = 0.2 is not above omega_13 = 1.
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn resolved_parameters_round_trip() {
        let c = parse_config(r#"{"tau_p": 5, "wp": 15, "e0p": -30, "beta": 25, "omega_13": 0.1}"#).unwrap();
        let text = serde_json::to_string(&c.to_raw()).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!((back.pulse, back.system, back.sim), (c.pulse, c.system, c.sim));
    }

    #[test]
    fn bad_axes_and_engine() {
        let base = r#""tau_p": 5, "wp": 15, "e0p": -30, "beta": 25"#;
        assert!(matches!(
            parse_config(&format!(r#"{{{base}, "axes": ["e0p:0:-1:3"]}}"#)),
            Err(ConfigError::Axis(_))
        ));
        assert!(matches!(
            parse_config(&format!(r#"{{{base}, "engine": "fast"}}"#)),
            Err(ConfigError::Engine(_))
        ));
    }
}
