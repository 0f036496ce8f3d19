//! Physical parameters of the pulse and the three-level system, and the
//! time-dependent coupling and detuning they define.
//!
//! Units follow the figure axes: time in ns, every angular frequency in
//! rad/ns, the chirp rate in rad/ns³. There is no factor of 2π anywhere.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Parameter validation failure. `field` names the offending key.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

impl ParamError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Gaussian, quadratically chirped pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams<T> {
    /// Peak Rabi amplitude `wp` (rad/ns).
    pub wp: T,
    /// Half pulse duration (ns).
    pub tau_p: T,
    /// One-photon detuning at the pulse centre (rad/ns).
    pub e0p: T,
    /// Chirp rate (rad/ns³).
    pub beta: T,
    /// Multiplier `k` in `e0p + k·beta·t²`.
    pub chirp_factor: T,
}

impl<T: Real> PulseParams<T> {
    /// Pulse with the default chirp factor of 3.
    pub fn new(wp: T, tau_p: T, e0p: T, beta: T) -> Self {
        Self {
            wp,
            tau_p,
            e0p,
            beta,
            chirp_factor: T::lit(3.0),
        }
    }

    pub fn with_chirp_factor(mut self, k: T) -> Self {
        self.chirp_factor = k;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_finite("wp", self.wp)?;
        check_finite("tau_p", self.tau_p)?;
        check_finite("e0p", self.e0p)?;
        check_finite("beta", self.beta)?;
        check_finite("chirp_factor", self.chirp_factor)?;
        if self.tau_p <= T::zero() {
            return Err(ParamError::new("tau_p", "must be > 0"));
        }
        if self.wp < T::zero() {
            return Err(ParamError::new("wp", "must be >= 0"));
        }
        if self.chirp_factor <= T::zero() {
            return Err(ParamError::new("chirp_factor", "must be > 0"));
        }
        Ok(())
    }

    /// Peak value of the coupling, `√2·wp`.
    pub fn peak_coupling(&self) -> T {
        T::SQRT_2() * self.wp
    }
}

/// Level structure of the Λ system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    /// Ratio `d23/d12` of the two transition dipoles.
    pub dipole_ratio: T,
    /// Raman (two-photon) detuning (rad/ns).
    pub omega_r: T,
    /// Ground-state splitting, only used for the broadband check (rad/ns).
    pub omega_13: Option<T>,
}

impl<T: Real> Default for SystemParams<T> {
    fn default() -> Self {
        Self {
            dipole_ratio: T::one(),
            omega_r: T::zero(),
            omega_13: None,
        }
    }
}

impl<T: Real> SystemParams<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        check_finite("dipole_ratio", self.dipole_ratio)?;
        check_finite("omega_R", self.omega_r)?;
        if self.dipole_ratio == T::zero() {
            return Err(ParamError::new("dipole_ratio", "must be non-zero"));
        }
        if let Some(w) = self.omega_13 {
            check_finite("omega_13", w)?;
            if w < T::zero() {
                return Err(ParamError::new("omega_13", "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Whether the pulse bandwidth `1/tau_p` exceeds the ground splitting.
    /// `None` when no splitting was supplied.
    pub fn broadband_valid(&self, pulse: &PulseParams<T>) -> Option<bool> {
        self.omega_13.map(|w| T::one() / pulse.tau_p > w)
    }
}

/// How the excited-state amplitude is carried by the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// Integrate the bare amplitudes as written.
    Direct,
    /// Factor the fast detuning phase out of `a2`.
    #[default]
    PhaseRemoved,
}

/// Integration span, tolerances and initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    /// Span is `[-m·tau_p, +m·tau_p]`.
    pub t_span_multiplier: T,
    pub rel_tol: T,
    pub abs_tol: T,
    pub n_samples: usize,
    /// Initial `(a1, a2, a3)`.
    pub initial_state: [Complex<T>; 3],
    pub formulation: Formulation,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            t_span_multiplier: T::lit(4.0),
            rel_tol: T::lit(1e-8),
            abs_tol: T::lit(1e-10),
            n_samples: 2000,
            initial_state: [Complex::new(T::one(), T::zero()), Complex::default(), Complex::default()],
            formulation: Formulation::PhaseRemoved,
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        check_finite("t_span_multiplier", self.t_span_multiplier)?;
        if self.t_span_multiplier < T::lit(2.0) {
            return Err(ParamError::new("t_span_multiplier", "must be >= 2"));
        }
        if !(self.rel_tol > T::zero()) {
            return Err(ParamError::new("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > T::zero()) {
            return Err(ParamError::new("abs_tol", "must be > 0"));
        }
        if self.n_samples < 2 {
            return Err(ParamError::new("n_samples", "must be >= 2"));
        }
        let norm: T = self
            .initial_state
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr());
        // 1e-12 is below f32 resolution, so the check scales with epsilon.
        let tol = T::lit(1e-12).max(T::lit(8.0) * T::epsilon());
        if !((norm - T::one()).abs() <= tol) {
            return Err(ParamError::new(
                "initial_state",
                format!("must be normalized, |a|^2 = {norm}"),
            ));
        }
        Ok(())
    }

    /// Start and end of the integration span for `pulse`.
    pub fn span(&self, pulse: &PulseParams<T>) -> (T, T) {
        let half = self.t_span_multiplier * pulse.tau_p;
        (-half, half)
    }

    /// `n_samples` uniformly spaced times covering the span, endpoints exact.
    pub fn sample_times(&self, pulse: &PulseParams<T>) -> Vec<T> {
        let (t0, t1) = self.span(pulse);
        uniform_grid(t0, t1, self.n_samples)
    }
}

pub(crate) fn uniform_grid<T: Real>(t0: T, t1: T, n: usize) -> Vec<T> {
    debug_assert!(n >= 2);
    let last = n - 1;
    let dt = (t1 - t0) / T::from_count(last);
    (0..n)
        .map(|i| if i == last { t1 } else { t0 + dt * T::from_count(i) })
        .collect()
}

fn check_finite<T: Real>(field: &'static str, v: T) -> Result<(), ParamError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ParamError::new(field, "must be finite"))
    }
}

/// Coupling `F(t) = √2·wp·exp(-t²/2τp²)` of the bright state to `|2⟩`.
#[inline]
pub fn rabi_coupling<T: Real>(t: T, p: &PulseParams<T>) -> T {
    let x = t / p.tau_p;
    p.peak_coupling() * (-(x * x) / T::lit(2.0)).exp()
}

/// `dF/dt`.
#[inline]
pub fn rabi_coupling_rate<T: Real>(t: T, p: &PulseParams<T>) -> T {
    -t / (p.tau_p * p.tau_p) * rabi_coupling(t, p)
}

/// Diagonal detuning `e0p + k·beta·t²` of the rotating-frame Hamiltonian.
#[inline]
pub fn effective_detuning<T: Real>(t: T, p: &PulseParams<T>) -> T {
    p.e0p + p.chirp_factor * p.beta * t * t
}

/// `dε/dt = 2·k·beta·t`.
#[inline]
pub fn effective_detuning_rate<T: Real>(t: T, p: &PulseParams<T>) -> T {
    T::lit(2.0) * p.chirp_factor * p.beta * t
}

/// Antiderivative `∫₀ᵗ ε dt' = e0p·t + k·beta·t³/3`.
#[inline]
pub fn detuning_phase<T: Real>(t: T, p: &PulseParams<T>) -> T {
    t * (p.e0p + p.chirp_factor * p.beta * t * t / T::lit(3.0))
}

/// Detuning of the instantaneous carrier frequency, `e0p + beta·t²`.
#[inline]
pub fn instantaneous_detuning<T: Real>(t: T, p: &PulseParams<T>) -> T {
    p.e0p + p.beta * t * t
}

/// Real roots of the effective detuning, ascending.
///
/// Two symmetric roots when `e0p·beta < 0`, the tangency `t = 0` when
/// `e0p = 0`, none otherwise. With `beta = 0` and `e0p = 0` the detuning
/// vanishes identically; this is reported as the single root `t = 0`.
pub fn resonance_crossings<T: Real>(p: &PulseParams<T>) -> Vec<T> {
    if p.e0p == T::zero() {
        return vec![T::zero()];
    }
    let curvature = p.chirp_factor * p.beta;
    if curvature == T::zero() {
        return Vec::new();
    }
    let s = -p.e0p / curvature;
    if s > T::zero() {
        let r = s.sqrt();
        vec![-r, r]
    } else {
        Vec::new()
    }
}
