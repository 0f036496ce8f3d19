//! Coherent preparation of ground-state superpositions in a Λ-type
//! three-level system by a single pulse with a quadratic frequency chirp.
//!
//! Two independent engines predict the coherence `|ρ13|` left behind by the
//! pulse:
//!
//! * [`dynamics`] integrates the Schrödinger equation with an adaptive
//!   Dormand–Prince 8(5,3) scheme;
//! * [`dressed`] follows the adiabatic dressed state of the reduced
//!   bright/excited system and evaluates the closed form `½|sin φ|`.
//!
//! [`sweep`] maps either engine over pulse parameters in parallel.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which is what the sweep engine
//! and the command-line tool use.

pub mod brightdark;
pub mod dressed;
pub mod dynamics;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod scalar;
pub mod sweep;

pub use num_complex::Complex;

pub use brightdark::{from_bright_dark, to_bright_dark, DipoleWeights};
pub use dressed::{
    accumulated_phase, adiabatic_amplitudes, adiabatic_branch, adiabaticity_global,
    adiabaticity_local, dressed_eigenvectors, final_coherence_dressed, max_local_adiabaticity,
    mixing_angle, quasi_energies, reconstruct_bare, total_phase, AdiabaticSolution, Branch,
    DressedError, DressedPoint, GlobalAdiabaticity,
};
pub use dynamics::{
    hamiltonian2, hamiltonian3, integrate2, integrate3, observables, propagate3, DynamicsError,
    Observables, StateVector2, StateVector3, Trajectory,
};
pub use model::{
    effective_detuning, instantaneous_detuning, rabi_coupling, resonance_crossings, Formulation,
    ParamError, PulseParams, SimConfig, SystemParams,
};
pub use quadrature::QuadratureSpec;
pub use sweep::{
    compare_engines, scan1d, spot_validate, sweep2d, AxisName, AxisSpec, Deviation, Engine, EngineSet,
    Setup, SpotReport, SweepError, SweepResult,
};
pub use scalar::Real;

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type Pulse = PulseParams<f64>;
pub type Pulse32 = PulseParams<f32>;
pub type System = SystemParams<f64>;
pub type System32 = SystemParams<f32>;
pub type Sim = SimConfig<f64>;
pub type Sim32 = SimConfig<f32>;
pub type Quad = QuadratureSpec<f64>;
pub type Quad32 = QuadratureSpec<f32>;
pub type State3 = StateVector3<f64>;
pub type State2 = StateVector2<f64>;
pub type Trajectory3 = dynamics::Trajectory3<f64>;
pub type Trajectory2 = dynamics::Trajectory2<f64>;
pub type Adiabatic = AdiabaticSolution<f64>;
pub type Weights = DipoleWeights<f64>;
