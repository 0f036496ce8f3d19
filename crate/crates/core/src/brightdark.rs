//! Rotation between the bare ground amplitudes `(a1, a3)` and the
//! bright/dark superpositions `(gb, gd)`.
//!
//! The bright state is the combination the pulse couples to `|2⟩`; the dark
//! state is orthogonal to it and decouples for any real dipole ratio.

use num_complex::Complex;

use crate::scalar::Real;

/// Normalized dipole weights `c1 = 1/√(1+r²)`, `c3 = r/√(1+r²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleWeights<T> {
    pub c1: T,
    pub c3: T,
}

impl<T: Real> DipoleWeights<T> {
    pub fn from_ratio(r: T) -> Self {
        let d = (T::one() + r * r).sqrt();
        Self {
            c1: T::one() / d,
            c3: r / d,
        }
    }

    /// Equal dipoles, `c1 = c3 = 1/√2`.
    pub fn equal() -> Self {
        let c = T::FRAC_1_SQRT_2();
        Self { c1: c, c3: c }
    }
}

/// `gb = c1·a1 + c3·a3`, `gd = c3·a1 − c1·a3`.
#[inline]
pub fn to_bright_dark<T: Real>(
    a1: Complex<T>,
    a3: Complex<T>,
    w: &DipoleWeights<T>,
) -> (Complex<T>, Complex<T>) {
    (a1 * w.c1 + a3 * w.c3, a1 * w.c3 - a3 * w.c1)
}

/// Inverse of [`to_bright_dark`]. The rotation is its own inverse.
#[inline]
pub fn from_bright_dark<T: Real>(
    gb: Complex<T>,
    gd: Complex<T>,
    w: &DipoleWeights<T>,
) -> (Complex<T>, Complex<T>) {
    (gb * w.c1 + gd * w.c3, gb * w.c3 - gd * w.c1)
}
