//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The panel with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol·|I|)`. Panels are processed in a
//! fixed order so results are reproducible bit for bit.

#![allow(clippy::excessive_precision)]

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {panels} panels")]
    NotConverged {
        estimate: f64,
        error: f64,
        panels: usize,
    },
    #[error("node doubling changed the integral by {change:e} (allowed {allowed:e})")]
    DoublingMismatch { change: f64, allowed: f64 },
    #[error("integrand not finite at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-13),
            max_panels: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    /// Final partition of the domain, ascending.
    pub panels: Vec<(T, T)>,
    pub evals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: (integral, |Kronrod − Gauss|).
pub fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]`, splitting first at any `breaks` inside.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    breaks: &[T],
    spec: &QuadratureSpec<T>,
) -> Result<Quadrature<T>, QuadError> {
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
            panels: vec![],
            evals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };

    let mut edges = vec![lo];
    let mut inner: Vec<T> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    // (a, b, value, error)
    let mut panels: Vec<(T, T, T, T)> = Vec::with_capacity(64);
    let mut evals = 0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        panels.push((w[0], w[1], v, e));
    }

    loop {
        let value = panels.iter().fold(T::zero(), |s, p| s + p.2);
        let error = panels.iter().fold(T::zero(), |s, p| s + p.3);
        if !value.is_finite() {
            let t = panels
                .iter()
                .find(|p| !p.2.is_finite())
                .map(|p| p.0.to_f64().unwrap_or(f64::NAN))
                .unwrap_or(f64::NAN);
            return Err(QuadError::NonFinite { t });
        }
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= target {
            panels.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite panel edges"));
            return Ok(Quadrature {
                value: value * sign,
                error,
                panels: panels.iter().map(|p| (p.0, p.1)).collect(),
                evals,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -T::one()), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (pa, pb, _, _) = panels[worst];
        let pm = (pa + pb) / T::lit(2.0);
        if panels.len() >= spec.max_panels || !(pm > pa && pm < pb) {
            return Err(QuadError::NotConverged {
                estimate: value.to_f64().unwrap_or(f64::NAN),
                error: error.to_f64().unwrap_or(f64::NAN),
                panels: panels.len(),
            });
        }
        let (v1, e1) = gk15(&mut f, pa, pm);
        let (v2, e2) = gk15(&mut f, pm, pb);
        evals += 30;
        panels[worst] = (pa, pm, v1, e1);
        panels.push((pm, pb, v2, e2));
    }
}

/// Re-evaluates `f` on `panels` with every panel halved, i.e. twice the
/// nodes of the partition an adaptive run settled on.
pub fn integrate_doubled<T: Real, F: FnMut(T) -> T>(mut f: F, panels: &[(T, T)]) -> T {
    panels.iter().fold(T::zero(), |acc, &(a, b)| {
        let m = (a + b) / T::lit(2.0);
        acc + gk15(&mut f, a, m).0 + gk15(&mut f, m, b).0
    })
}
