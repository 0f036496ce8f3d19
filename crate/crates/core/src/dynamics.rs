//! Schrödinger propagation `da/dt = i·H(t)·a` of the bare three-level
//! amplitudes and of the reduced `(a2, gb)` system.
//!
//! In the phase-removed formulation the integrator carries
//! `ã2 = a2·exp(-i∫₀ᵗ ε dt')`. The right-hand side is then bounded by the
//! coupling rather than by the detuning, which grows like `t²` in the tails.
//! Reported amplitudes always have the phase restored.

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::brightdark::{from_bright_dark, to_bright_dark, DipoleWeights};
use crate::model::{
    detuning_phase, effective_detuning, rabi_coupling, Formulation, ParamError, PulseParams,
    SimConfig, SystemParams,
};
use crate::ode::{self, OdeError, StepStats, Tolerances};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Integrator(#[from] OdeError),
    #[error("norm drift {drift:e} exceeds limit {limit:e}")]
    NormDrift { drift: f64, limit: f64 },
}

impl DynamicsError {
    /// Time at which integration stopped, when known.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            Self::Integrator(OdeError::StepUnderflow { t, .. })
            | Self::Integrator(OdeError::TooManySteps { t, .. })
            | Self::Integrator(OdeError::NonFinite { t }) => Some(*t),
            _ => None,
        }
    }
}

/// Bare amplitudes of `|1⟩`, `|2⟩`, `|3⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector3<T> {
    pub a1: Complex<T>,
    pub a2: Complex<T>,
    pub a3: Complex<T>,
}

impl<T: Real> StateVector3<T> {
    pub fn new(a1: Complex<T>, a2: Complex<T>, a3: Complex<T>) -> Self {
        Self { a1, a2, a3 }
    }

    pub fn from_array(a: [Complex<T>; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn norm_sqr(&self) -> T {
        self.a1.norm_sqr() + self.a2.norm_sqr() + self.a3.norm_sqr()
    }
}

/// Reduced amplitudes: excited `a2`, bright `gb`, and the dark `gd` that the
/// pulse never touches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector2<T> {
    pub a2: Complex<T>,
    pub gb: Complex<T>,
    pub gd: Complex<T>,
}

impl<T: Real> StateVector2<T> {
    pub fn norm_sqr(&self) -> T {
        self.a2.norm_sqr() + self.gb.norm_sqr() + self.gd.norm_sqr()
    }

    pub fn from_bare(s: &StateVector3<T>, w: &DipoleWeights<T>) -> Self {
        let (gb, gd) = to_bright_dark(s.a1, s.a3, w);
        Self { a2: s.a2, gb, gd }
    }

    pub fn to_bare(&self, w: &DipoleWeights<T>) -> StateVector3<T> {
        let (a1, a3) = from_bright_dark(self.gb, self.gd, w);
        StateVector3::new(a1, self.a2, a3)
    }
}

/// Populations and ground-state coherence of one bare state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables<T> {
    pub n1: T,
    pub n2: T,
    pub n3: T,
    pub rho13: Complex<T>,
}

/// `n_k = |a_k|²`, `ρ13 = a1·a3*`.
#[inline]
pub fn observables<T: Real>(s: &StateVector3<T>) -> Observables<T> {
    Observables {
        n1: s.a1.norm_sqr(),
        n2: s.a2.norm_sqr(),
        n3: s.a3.norm_sqr(),
        rho13: s.a1 * s.a3.conj(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub steps: StepStats,
    /// `max_t | ‖a(t)‖² − ‖a(t₀)‖² |` over every accepted step.
    pub max_norm_drift: f64,
}

/// Sampled solution together with the drive functions on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T, S> {
    pub times: Vec<T>,
    pub states: Vec<S>,
    pub eps: Vec<T>,
    pub rabi: Vec<T>,
    pub stats: TrajectoryStats,
}

pub type Trajectory3<T> = Trajectory<T, StateVector3<T>>;
pub type Trajectory2<T> = Trajectory<T, StateVector2<T>>;

impl<T, S> Trajectory<T, S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&S> {
        self.states.last()
    }
}

impl<T: Real> Trajectory3<T> {
    pub fn observables(&self) -> Vec<Observables<T>> {
        self.states.iter().map(observables).collect()
    }

    pub fn n1(&self) -> Vec<T> {
        self.states.iter().map(|s| s.a1.norm_sqr()).collect()
    }

    pub fn n2(&self) -> Vec<T> {
        self.states.iter().map(|s| s.a2.norm_sqr()).collect()
    }

    pub fn n3(&self) -> Vec<T> {
        self.states.iter().map(|s| s.a3.norm_sqr()).collect()
    }

    pub fn rho13_abs(&self) -> Vec<T> {
        self.states.iter().map(|s| (s.a1 * s.a3.conj()).norm()).collect()
    }

    /// `|ρ13|` at the end of the span.
    pub fn final_coherence(&self) -> T {
        self.final_state()
            .map(|s| (s.a1 * s.a3.conj()).norm())
            .unwrap_or_else(T::zero)
    }
}

impl<T: Real> Trajectory2<T> {
    /// Reconstructs bare amplitudes through the bright/dark rotation.
    pub fn to_bare(&self, w: &DipoleWeights<T>) -> Trajectory3<T> {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s.to_bare(w)).collect(),
            eps: self.eps.clone(),
            rabi: self.rabi.clone(),
            stats: self.stats,
        }
    }
}

/// Rotating-frame Hamiltonian on `(|1⟩, |2⟩, |3⟩)`.
///
/// The couplings `F·c1` and `F·c3` share the bright-state coupling `F`
/// in the ratio of the dipoles; for equal dipoles both equal `F/√2`.
pub fn hamiltonian3<T: Real>(t: T, pulse: &PulseParams<T>, sys: &SystemParams<T>) -> [[T; 3]; 3] {
    let w = DipoleWeights::from_ratio(sys.dipole_ratio);
    let f = rabi_coupling(t, pulse);
    let o12 = f * w.c1;
    let o23 = f * w.c3;
    let z = T::zero();
    [
        [z, o12, z],
        [o12, effective_detuning(t, pulse), o23],
        [z, o23, sys.omega_r],
    ]
}

/// Reduced Hamiltonian on `(a2, gb)`: `[[ε, F], [F, 0]]`.
pub fn hamiltonian2<T: Real>(t: T, pulse: &PulseParams<T>) -> [[T; 2]; 2] {
    let f = rabi_coupling(t, pulse);
    [[effective_detuning(t, pulse), f], [f, T::zero()]]
}

fn validate<T: Real>(
    pulse: &PulseParams<T>,
    sys: Option<&SystemParams<T>>,
    cfg: &SimConfig<T>,
) -> Result<(), ParamError> {
    pulse.validate()?;
    if let Some(sys) = sys {
        sys.validate()?;
    }
    cfg.validate()
}

fn norm_limit<T: Real>(cfg: &SimConfig<T>) -> f64 {
    100.0 * cfg.rel_tol.max(cfg.abs_tol).to_f64().unwrap_or(f64::NAN)
}

fn check_drift(drift: f64, limit: f64) -> Result<(), DynamicsError> {
    if drift > limit {
        Err(DynamicsError::NormDrift { drift, limit })
    } else {
        Ok(())
    }
}

/// `e^{iθ}`
#[inline]
fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Propagates the bare three-level amplitudes over the configured span,
/// sampling `cfg.n_samples` uniformly spaced times.
pub fn integrate3<T: Real>(
    pulse: &PulseParams<T>,
    sys: &SystemParams<T>,
    cfg: &SimConfig<T>,
) -> Result<Trajectory3<T>, DynamicsError> {
    validate(pulse, Some(sys), cfg)?;
    let times = cfg.sample_times(pulse);
    integrate3_at(pulse, sys, cfg, &times)
}

/// Like [`integrate3`] but returns only the state at the end of the span.
pub fn propagate3<T: Real>(
    pulse: &PulseParams<T>,
    sys: &SystemParams<T>,
    cfg: &SimConfig<T>,
) -> Result<(StateVector3<T>, TrajectoryStats), DynamicsError> {
    validate(pulse, Some(sys), cfg)?;
    let (_, t1) = cfg.span(pulse);
    let tr = integrate3_at(pulse, sys, cfg, &[t1])?;
    Ok((tr.states[0], tr.stats))
}

fn integrate3_at<T: Real>(
    pulse: &PulseParams<T>,
    sys: &SystemParams<T>,
    cfg: &SimConfig<T>,
    times: &[T],
) -> Result<Trajectory3<T>, DynamicsError> {
    let (t0, _) = cfg.span(pulse);
    let w = DipoleWeights::from_ratio(sys.dipole_ratio);
    let omega_r = sys.omega_r;
    let i = Complex::<T>::i();
    let tol = Tolerances {
        rel: cfg.rel_tol,
        abs: cfg.abs_tol,
    };
    let y0 = cfg.initial_state;
    let n0 = y0.iter().fold(T::zero(), |a, v| a + v.norm_sqr());
    let mut drift = T::zero();
    let monitor = |_t: T, y: &[Complex<T>; 3]| {
        let n = y[0].norm_sqr() + y[1].norm_sqr() + y[2].norm_sqr();
        drift = drift.max((n - n0).abs());
    };

    let (raw, steps) = match cfg.formulation {
        Formulation::Direct => ode::integrate(
            |t, y: &[Complex<T>; 3]| {
                let f = rabi_coupling(t, pulse);
                let (o12, o23) = (f * w.c1, f * w.c3);
                [
                    i * y[1] * o12,
                    i * (y[1] * effective_detuning(t, pulse) + y[0] * o12 + y[2] * o23),
                    i * (y[1] * o23 + y[2] * omega_r),
                ]
            },
            t0,
            y0,
            times,
            tol,
            ode::DEFAULT_MAX_STEPS,
            monitor,
        )?,
        Formulation::PhaseRemoved => {
            let mut y = y0;
            y[1] = y[1] * cis(-detuning_phase(t0, pulse));
            ode::integrate(
                |t, y: &[Complex<T>; 3]| {
                    let f = rabi_coupling(t, pulse);
                    let (o12, o23) = (f * w.c1, f * w.c3);
                    let ph = cis(detuning_phase(t, pulse));
                    let a2 = y[1] * ph;
                    [
                        i * a2 * o12,
                        i * ph.conj() * (y[0] * o12 + y[2] * o23),
                        i * (a2 * o23 + y[2] * omega_r),
                    ]
                },
                t0,
                y,
                times,
                tol,
                ode::DEFAULT_MAX_STEPS,
                monitor,
            )?
        }
    };

    let states = raw
        .iter()
        .zip(times)
        .map(|(y, &t)| {
            let a2 = match cfg.formulation {
                Formulation::Direct => y[1],
                Formulation::PhaseRemoved => y[1] * cis(detuning_phase(t, pulse)),
            };
            StateVector3::new(y[0], a2, y[2])
        })
        .collect();

    let drift = drift.to_f64().unwrap_or(f64::NAN);
    check_drift(drift, norm_limit(cfg))?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        eps: times.iter().map(|&t| effective_detuning(t, pulse)).collect(),
        rabi: times.iter().map(|&t| rabi_coupling(t, pulse)).collect(),
        stats: TrajectoryStats {
            steps,
            max_norm_drift: drift,
        },
    })
}

/// Propagates the reduced system `da2/dt = iε·a2 + iF·gb`, `dgb/dt = iF·a2`
/// with `gd` carried unchanged.
///
/// `cfg.initial_state` is ignored in favour of `initial`, which must be
/// normalized like it.
pub fn integrate2<T: Real>(
    pulse: &PulseParams<T>,
    cfg: &SimConfig<T>,
    initial: StateVector2<T>,
) -> Result<Trajectory2<T>, DynamicsError> {
    let mut check = *cfg;
    check.initial_state = [initial.a2, initial.gb, initial.gd];
    validate(pulse, None, &check)?;

    let times = cfg.sample_times(pulse);
    let (t0, _) = cfg.span(pulse);
    let i = Complex::<T>::i();
    let tol = Tolerances {
        rel: cfg.rel_tol,
        abs: cfg.abs_tol,
    };
    let gd = initial.gd;
    let gd2 = gd.norm_sqr();
    let n0 = initial.norm_sqr();
    let mut drift = T::zero();
    let monitor = |_t: T, y: &[Complex<T>; 2]| {
        drift = drift.max((y[0].norm_sqr() + y[1].norm_sqr() + gd2 - n0).abs());
    };

    let (raw, steps) = match cfg.formulation {
        Formulation::Direct => ode::integrate(
            |t, y: &[Complex<T>; 2]| {
                let f = rabi_coupling(t, pulse);
                [
                    i * (y[0] * effective_detuning(t, pulse) + y[1] * f),
                    i * y[0] * f,
                ]
            },
            t0,
            [initial.a2, initial.gb],
            &times,
            tol,
            ode::DEFAULT_MAX_STEPS,
            monitor,
        )?,
        Formulation::PhaseRemoved => ode::integrate(
            |t, y: &[Complex<T>; 2]| {
                let f = rabi_coupling(t, pulse);
                let ph = cis(detuning_phase(t, pulse));
                [i * ph.conj() * y[1] * f, i * ph * y[0] * f]
            },
            t0,
            [initial.a2 * cis(-detuning_phase(t0, pulse)), initial.gb],
            &times,
            tol,
            ode::DEFAULT_MAX_STEPS,
            monitor,
        )?,
    };

    let states = raw
        .iter()
        .zip(&times)
        .map(|(y, &t)| {
            let a2 = match cfg.formulation {
                Formulation::Direct => y[0],
                Formulation::PhaseRemoved => y[0] * cis(detuning_phase(t, pulse)),
            };
            StateVector2 { a2, gb: y[1], gd }
        })
        .collect();

    let drift = drift.to_f64().unwrap_or(f64::NAN);
    check_drift(drift, norm_limit(cfg))?;
    Ok(Trajectory {
        eps: times.iter().map(|&t| effective_detuning(t, pulse)).collect(),
        rabi: times.iter().map(|&t| rabi_coupling(t, pulse)).collect(),
        times,
        states,
        stats: TrajectoryStats {
            steps,
            max_norm_drift: drift,
        },
    })
}
