//! Dressed-state (adiabatic) description of the reduced `(a2, gb)` system.
//!
//! The instantaneous eigenvalues of `[[ε, F], [F, 0]]` are the quasi-energies
//! `w± = ε/2 ± √(ε²/4 + F²)`. Because `ε(t)` grows quadratically, both tails
//! of the pulse have the same sign of detuning, and exactly one branch has an
//! eigenvalue tending to zero with an eigenvector tending to the bright
//! state. A bright amplitude that follows this branch adiabatically ends the
//! pulse with its initial magnitude and the accumulated phase
//! `φ = ∫ w_b dt`. Recombined with the untouched dark amplitude this gives
//! `|ρ13(∞)| = ½|sin φ|` for an atom starting in `|1⟩`.
//!
//! Sign convention: with `da/dt = +iHa` an eigenvector evolves as
//! `exp(+i∫w dt)`. Only `|sin φ|` is observable, so the opposite convention
//! would give identical populations and coherence magnitudes.

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::brightdark::{from_bright_dark, to_bright_dark, DipoleWeights};
use crate::model::{
    effective_detuning, effective_detuning_rate, rabi_coupling, rabi_coupling_rate,
    resonance_crossings, ParamError, PulseParams, SimConfig, SystemParams,
};
use crate::quadrature::{self, QuadError, QuadratureSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DressedError {
    #[error("chirp rate is zero: the adiabatic branch is undefined")]
    ZeroChirp,
    #[error("degenerate point: detuning and coupling both vanish")]
    Degenerate,
    #[error("adiabatic closed form needs the excited state empty at t0")]
    ExcitedInitialState,
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Dressed branch label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// Quasi-energies `(w+, w-)`.
///
/// The branch that would suffer cancellation is obtained from the product
/// `w+·w- = -F²`, so the small eigenvalue stays accurate far from resonance.
#[inline]
pub fn quasi_energies<T: Real>(eps: T, f: T) -> (T, T) {
    let half = eps / T::lit(2.0);
    let root = half.hypot(f);
    if eps == T::zero() && f == T::zero() {
        return (T::zero(), T::zero());
    }
    if eps >= T::zero() {
        let wp = half + root;
        (wp, -(f * f) / wp)
    } else {
        let wm = half - root;
        (-(f * f) / wm, wm)
    }
}

/// Eigenvalue of one branch.
#[inline]
pub fn branch_energy<T: Real>(branch: Branch, eps: T, f: T) -> T {
    let (wp, wm) = quasi_energies(eps, f);
    match branch {
        Branch::Plus => wp,
        Branch::Minus => wm,
    }
}

/// Normalized eigenvectors in `(a2, gb)` ordering, gb component ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedVectors<T> {
    pub plus: [T; 2],
    pub minus: [T; 2],
    /// Set at `ε = F = 0`, where the basis vectors are returned.
    pub degenerate: bool,
}

impl<T: Real> DressedVectors<T> {
    pub fn get(&self, branch: Branch) -> [T; 2] {
        match branch {
            Branch::Plus => self.plus,
            Branch::Minus => self.minus,
        }
    }
}

fn eigenvector<T: Real>(w: T, eps: T, f: T) -> [T; 2] {
    // Both rows of (H - w)v = 0 give a candidate; keep the better conditioned.
    let (x1, y1) = (w, f);
    let (x2, y2) = (f, w - eps);
    let n1 = x1.hypot(y1);
    let n2 = x2.hypot(y2);
    let (mut x, mut y, n) = if n1 >= n2 { (x1, y1, n1) } else { (x2, y2, n2) };
    if y < T::zero() || (y == T::zero() && x < T::zero()) {
        x = -x;
        y = -y;
    }
    [x / n, y / n]
}

/// Eigenvectors `v± ∝ (w±, F)` of the reduced Hamiltonian.
pub fn dressed_eigenvectors<T: Real>(eps: T, f: T) -> DressedVectors<T> {
    if eps == T::zero() && f == T::zero() {
        return DressedVectors {
            plus: [T::one(), T::zero()],
            minus: [T::zero(), T::one()],
            degenerate: true,
        };
    }
    let (wp, wm) = quasi_energies(eps, f);
    DressedVectors {
        plus: eigenvector(wp, eps, f),
        minus: eigenvector(wm, eps, f),
        degenerate: false,
    }
}

/// The branch connected to the bare bright state in both tails.
///
/// For `beta > 0` the detuning tends to `+∞`, where `w-` → 0 with
/// eigenvector → `gb`; for `beta < 0` the roles mirror.
pub fn adiabatic_branch<T: Real>(beta: T) -> Result<Branch, DressedError> {
    if beta > T::zero() {
        Ok(Branch::Minus)
    } else if beta < T::zero() {
        Ok(Branch::Plus)
    } else {
        Err(DressedError::ZeroChirp)
    }
}

/// `θ = atan(ε/F)` on `[-π/2, π/2]`.
pub fn mixing_angle<T: Real>(eps: T, f: T) -> Result<T, DressedError> {
    if eps == T::zero() && f == T::zero() {
        return Err(DressedError::Degenerate);
    }
    Ok(eps.atan2(f.abs()))
}

/// `|dθ/dt| / √(ε² + F²)`, with `dθ/dt = (ε'F − εF')/(ε² + F²)` evaluated
/// from the analytic derivatives.
pub fn adiabaticity_local<T: Real>(t: T, pulse: &PulseParams<T>) -> T {
    let eps = effective_detuning(t, pulse);
    let f = rabi_coupling(t, pulse);
    let gap2 = eps * eps + f * f;
    if gap2 == T::zero() {
        return T::infinity();
    }
    let dtheta =
        (effective_detuning_rate(t, pulse) * f - eps * rabi_coupling_rate(t, pulse)) / gap2;
    dtheta.abs() / gap2.sqrt()
}

/// Global adiabaticity estimate `F0² ≫ 2kβ·t_tr` (`6β·t_tr` for `k = 3`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalAdiabaticity<T> {
    /// `F0²`.
    pub lhs: T,
    /// `2k|β|·t_tr`.
    pub rhs: T,
    pub ratio: T,
    pub t_tr: T,
}

/// `t_tr` is the time between the two resonance crossings when they exist,
/// otherwise `tau_p`; `t_tr_override` replaces it.
pub fn adiabaticity_global<T: Real>(
    pulse: &PulseParams<T>,
    t_tr_override: Option<T>,
) -> GlobalAdiabaticity<T> {
    let f0 = pulse.peak_coupling();
    let lhs = f0 * f0;
    let t_tr = t_tr_override.unwrap_or_else(|| match resonance_crossings(pulse).as_slice() {
        [a, b] => *b - *a,
        _ => pulse.tau_p,
    });
    let rhs = T::lit(2.0) * pulse.chirp_factor * pulse.beta.abs() * t_tr;
    let ratio = if lhs == T::zero() {
        T::zero()
    } else if rhs == T::zero() {
        T::infinity()
    } else {
        lhs / rhs
    };
    GlobalAdiabaticity {
        lhs,
        rhs,
        ratio,
        t_tr,
    }
}

/// Largest local adiabaticity ratio on `n` uniform samples of `[t0, t1]`.
pub fn max_local_adiabaticity<T: Real>(pulse: &PulseParams<T>, t0: T, t1: T, n: usize) -> (T, T) {
    crate::model::uniform_grid(t0, t1, n.max(2))
        .into_iter()
        .map(|t| (t, adiabaticity_local(t, pulse)))
        .fold((t0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Snapshot of the dressed picture at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedPoint<T> {
    pub t: T,
    pub w_plus: T,
    pub w_minus: T,
    pub v_plus: [T; 2],
    pub v_minus: [T; 2],
    /// Bright component of the tracked branch, `F/√(w_b² + F²)`.
    pub gamma: T,
    pub theta: T,
    pub adiabaticity_ratio: T,
}

pub fn dressed_point<T: Real>(t: T, pulse: &PulseParams<T>) -> Result<DressedPoint<T>, DressedError> {
    let branch = adiabatic_branch(pulse.beta)?;
    let eps = effective_detuning(t, pulse);
    let f = rabi_coupling(t, pulse);
    let (w_plus, w_minus) = quasi_energies(eps, f);
    let v = dressed_eigenvectors(eps, f);
    Ok(DressedPoint {
        t,
        w_plus,
        w_minus,
        v_plus: v.plus,
        v_minus: v.minus,
        gamma: v.get(branch)[1],
        theta: mixing_angle(eps, f).unwrap_or_else(|_| T::zero()),
        adiabaticity_ratio: adiabaticity_local(t, pulse),
    })
}

fn branch_integrand<T: Real>(pulse: &PulseParams<T>, branch: Branch) -> impl Fn(T) -> T + '_ {
    move |t| branch_energy(branch, effective_detuning(t, pulse), rabi_coupling(t, pulse))
}

fn phase_breaks<T: Real>(pulse: &PulseParams<T>) -> Vec<T> {
    let mut b = resonance_crossings(pulse);
    b.push(T::zero());
    b
}

/// `φ(t) = ∫_{t0}^{t} w_b dt'` at every time in `times` (ascending, with
/// `times[0]` the reference `t0`).
///
/// Each interval is integrated adaptively and the pieces summed, so
/// `φ(times[0]) = 0` exactly. With no coupling the bright state is never
/// dressed and the phase is identically zero.
pub fn accumulated_phase<T: Real>(
    pulse: &PulseParams<T>,
    times: &[T],
    spec: &QuadratureSpec<T>,
) -> Result<Vec<T>, DressedError> {
    pulse.validate()?;
    let branch = adiabatic_branch(pulse.beta)?;
    if pulse.wp == T::zero() {
        return Ok(vec![T::zero(); times.len()]);
    }
    let integrand = branch_integrand(pulse, branch);
    let breaks = phase_breaks(pulse);
    let mut out = Vec::with_capacity(times.len());
    let mut acc = T::zero();
    let mut prev = match times.first() {
        Some(&t) => t,
        None => return Ok(out),
    };
    for &t in times {
        if t != prev {
            acc = acc + quadrature::integrate(&integrand, prev, t, &breaks, spec)?.value;
            prev = t;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Phase accumulated over the whole span `[t0, t1]`, verified by re-running
/// the final partition with doubled nodes.
///
/// Fails if doubling moves the result by more than `1e-9·(1 + |φ|)`.
pub fn total_phase<T: Real>(
    pulse: &PulseParams<T>,
    t0: T,
    t1: T,
    spec: &QuadratureSpec<T>,
) -> Result<T, DressedError> {
    pulse.validate()?;
    let branch = adiabatic_branch(pulse.beta)?;
    if pulse.wp == T::zero() {
        return Ok(T::zero());
    }
    let integrand = branch_integrand(pulse, branch);
    let q = quadrature::integrate(&integrand, t0, t1, &phase_breaks(pulse), spec)?;
    let doubled = quadrature::integrate_doubled(&integrand, &q.panels);
    let doubled = if t1 < t0 { -doubled } else { doubled };
    let change = (doubled - q.value).abs();
    let allowed = T::lit(1e-9) * (T::one() + q.value.abs());
    if change > allowed {
        return Err(QuadError::DoublingMismatch {
            change: change.to_f64().unwrap_or(f64::NAN),
            allowed: allowed.to_f64().unwrap_or(f64::NAN),
        }
        .into());
    }
    Ok(q.value)
}

/// Bright and excited amplitudes `(gb, a2)` of the adiabatic solution at
/// time `t`, given the accumulated phase `phase = φ(t)`.
///
/// `gb = Γ·gb0·e^{iφ}`, `a2 = (w_b/√(w_b²+F²))·gb0·e^{iφ}`, which are the
/// components of the tracked eigenvector, so `|gb|² + |a2|² = |gb0|²`.
pub fn adiabatic_amplitudes<T: Real>(
    t: T,
    pulse: &PulseParams<T>,
    phase: T,
    gb0: Complex<T>,
) -> Result<(Complex<T>, Complex<T>), DressedError> {
    let branch = adiabatic_branch(pulse.beta)?;
    if pulse.wp == T::zero() {
        return Ok((gb0, Complex::new(T::zero(), T::zero())));
    }
    let v = dressed_eigenvectors(effective_detuning(t, pulse), rabi_coupling(t, pulse)).get(branch);
    let carrier = gb0 * Complex::from_polar(T::one(), phase);
    Ok((carrier * v[1], carrier * v[0]))
}

/// Bare ground amplitudes `(a1, a3)` at time `t` from the adiabatic bright
/// amplitude and the frozen dark amplitude.
pub fn reconstruct_bare<T: Real>(
    t: T,
    pulse: &PulseParams<T>,
    sys: &SystemParams<T>,
    phase: T,
    a1_0: Complex<T>,
    a3_0: Complex<T>,
) -> Result<(Complex<T>, Complex<T>), DressedError> {
    let w = DipoleWeights::from_ratio(sys.dipole_ratio);
    let (gb0, gd0) = to_bright_dark(a1_0, a3_0, &w);
    let (gb, _) = adiabatic_amplitudes(t, pulse, phase, gb0)?;
    Ok(from_bright_dark(gb, gd0, &w))
}

fn ground_initial<T: Real>(cfg: &SimConfig<T>) -> Result<(Complex<T>, Complex<T>), DressedError> {
    let [a1, a2, a3] = cfg.initial_state;
    if a2 != Complex::new(T::zero(), T::zero()) {
        return Err(DressedError::ExcitedInitialState);
    }
    Ok((a1, a3))
}

/// `|ρ13|` at the end of the span predicted by adiabatic following.
///
/// Evaluates the bare amplitudes at `t1` through [`reconstruct_bare`]; for
/// equal dipoles and an atom starting in `|1⟩` this is `½|sin φ(t1)|` up to
/// the residual dressing `1 − Γ(t1)` of the tail.
pub fn final_coherence_dressed<T: Real>(
    pulse: &PulseParams<T>,
    sys: &SystemParams<T>,
    cfg: &SimConfig<T>,
    spec: &QuadratureSpec<T>,
) -> Result<T, DressedError> {
    sys.validate()?;
    cfg.validate()?;
    let (a1_0, a3_0) = ground_initial(cfg)?;
    let (t0, t1) = cfg.span(pulse);
    let phi = total_phase(pulse, t0, t1, spec)?;
    let (a1, a3) = reconstruct_bare(t1, pulse, sys, phi, a1_0, a3_0)?;
    Ok((a1 * a3.conj()).norm())
}

/// Time series of the adiabatic solution on a sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticSolution<T> {
    pub times: Vec<T>,
    pub phi: Vec<T>,
    pub gb: Vec<Complex<T>>,
    pub a2: Vec<Complex<T>>,
    pub a1: Vec<Complex<T>>,
    pub a3: Vec<Complex<T>>,
    pub rho13_abs_final: T,
}

impl<T: Real> AdiabaticSolution<T> {
    /// Evaluates the closed form on the sample grid of `cfg`.
    pub fn compute(
        pulse: &PulseParams<T>,
        sys: &SystemParams<T>,
        cfg: &SimConfig<T>,
        spec: &QuadratureSpec<T>,
    ) -> Result<Self, DressedError> {
        sys.validate()?;
        cfg.validate()?;
        let (a1_0, a3_0) = ground_initial(cfg)?;
        let w = DipoleWeights::from_ratio(sys.dipole_ratio);
        let (gb0, gd0) = to_bright_dark(a1_0, a3_0, &w);
        let times = cfg.sample_times(pulse);
        let phi = accumulated_phase(pulse, &times, spec)?;
        let n = times.len();
        let (mut gb, mut a2, mut a1, mut a3) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (&t, &p) in times.iter().zip(&phi) {
            let (b, e) = adiabatic_amplitudes(t, pulse, p, gb0)?;
            let (x1, x3) = from_bright_dark(b, gd0, &w);
            gb.push(b);
            a2.push(e);
            a1.push(x1);
            a3.push(x3);
        }
        let rho13_abs_final = match (a1.last(), a3.last()) {
            (Some(&x1), Some(&x3)) => (x1 * x3.conj()).norm(),
            _ => T::zero(),
        };
        Ok(Self {
            times,
            phi,
            gb,
            a2,
            a1,
            a3,
            rho13_abs_final,
        })
    }
}
