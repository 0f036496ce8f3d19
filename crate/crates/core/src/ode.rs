//! Dormand–Prince 8(5,3) integrator for small complex linear systems.
//!
//! The eighth-order solution is propagated; its local error is estimated
//! by Hairer's blend of the embedded fifth- and third-order solutions,
//! measured per component against `abs_tol + rel_tol·max(|y_i|, |y_i'|)`.
//! Output is produced at caller supplied times by landing steps on them
//! exactly.

#![allow(clippy::excessive_precision)]

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

/// Integrator failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub rel: T,
    pub abs: T,
}

/// Counters gathered during one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

pub const DEFAULT_MAX_STEPS: usize = 50_000_000;

const STAGES: usize = 12;

// Stage couplings a[i][j] for stages 2..=12 (row i holds i + 1 entries).
const A: [&[f64]; 11] = [
    &[5.26001519587677318785587544488e-2],
    &[1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2],
    &[2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2],
    &[2.41365134159266685502369798665e-1, 0.0, -8.84549479328286085344864962717e-1, 9.24834003261792003115737966543e-1],
    &[3.7037037037037037037037037037e-2, 0.0, 0.0, 1.70828608729473871279604482173e-1, 1.25467687566822425016691814123e-1],
    &[3.7109375e-2, 0.0, 0.0, 1.70252211019544039314978060272e-1, 6.02165389804559606850219397283e-2, -1.7578125e-2],
    &[3.70920001185047927108779319836e-2, 0.0, 0.0, 1.70383925712239993810214054705e-1, 1.07262030446373284651809199168e-1, -1.53194377486244017527936158236e-2, 8.27378916381402288758473766002e-3],
    &[6.24110958716075717114429577812e-1, 0.0, 0.0, -3.36089262944694129406857109825, -8.68219346841726006818189891453e-1, 2.75920996994467083049415600797e1, 2.01540675504778934086186788979e1, -4.34898841810699588477366255144e1],
    &[4.77662536438264365890433908527e-1, 0.0, 0.0, -2.48811461997166764192642586468, -5.90290826836842996371446475743e-1, 2.12300514481811942347288949897e1, 1.52792336328824235832596922938e1, -3.32882109689848629194453265587e1, -2.03312017085086261358222928593e-2],
    &[-9.3714243008598732571704021658e-1, 0.0, 0.0, 5.18637242884406370830023853209, 1.09143734899672957818500254654, -8.14978701074692612513997267357, -1.85200656599969598641566180701e1, 2.27394870993505042818970056734e1, 2.49360555267965238987089396762, -3.0467644718982195003823669022],
    &[2.27331014751653820792359768449, 0.0, 0.0, -1.05344954667372501984066689879e1, -2.00087205822486249909675718444, -1.79589318631187989172765950534e1, 2.79488845294199600508499808837e1, -2.85899827713502369474065508674, -8.87285693353062954433549289258, 1.23605671757943030647266201528e1, 6.43392746015763530355970484046e-1],
];
// Nodes of stages 2..=12.
const C: [f64; 11] = [0.526001519587677318785587544488e-1, 0.789002279381515978178381316732e-1, 0.118350341907227396726757197510, 0.281649658092772603273242802490, 0.333333333333333333333333333333, 0.25, 0.307692307692307692307692307692, 0.651282051282051282051282051282, 0.6, 0.857142857142857142857142857142, 1.0];
// Eighth-order weights.
const B: [f64; 12] = [5.42937341165687622380535766363e-2, 0.0, 0.0, 0.0, 0.0, 4.45031289275240888144113950566, 1.89151789931450038304281599044, -5.8012039600105847814672114227, 3.1116436695781989440891606237e-1, -1.52160949662516078556178806805e-1, 2.01365400804030348374776537501e-1, 4.47106157277725905176885569043e-2];
// Fifth-order error weights.
const E5: [f64; 12] = [0.1312004499419488073250102996e-1, 0.0, 0.0, 0.0, 0.0, -0.1225156446376204440720569753e1, -0.4957589496572501915214079952, 0.1664377182454986536961530415e1, -0.3503288487499736816886487290, 0.3341791187130174790297318841, 0.8192320648511571246570742613e-1, -0.2235530786388629525884427845e-1];
// Third-order error weights on stages 1, 9 and 12.
const BHH: [f64; 3] = [0.244094488188976377952755905512, 0.733846688281611857341361741547, 0.220588235294117647058823529412e-1];

struct Tableau<T> {
    a: [[T; STAGES]; STAGES - 1],
    c: [T; STAGES - 1],
    b: [T; STAGES],
    e5: [T; STAGES],
    bhh: [T; 3],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let l = T::lit;
        let mut a = [[T::zero(); STAGES]; STAGES - 1];
        for (row, src) in a.iter_mut().zip(A) {
            for (dst, &v) in row.iter_mut().zip(src) {
                *dst = l(v);
            }
        }
        Self {
            a,
            c: C.map(l),
            b: B.map(l),
            e5: E5.map(l),
            bhh: BHH.map(l),
        }
    }
}

type State<T, const N: usize> = [Complex<T>; N];

#[inline]
fn norm<T: Real, const N: usize>(y: &State<T, N>) -> T {
    y.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()).sqrt()
}

/// `Σ_j w_j·k_j` over the first `w.len()` stages, componentwise.
#[inline]
fn weighted<T: Real, const N: usize>(w: &[T], k: &[State<T, N>]) -> State<T, N> {
    let mut out = [Complex::new(T::zero(), T::zero()); N];
    for (wj, kj) in w.iter().zip(k) {
        if *wj != T::zero() {
            for (o, v) in out.iter_mut().zip(kj) {
                *o = *o + *v * *wj;
            }
        }
    }
    out
}

#[inline]
fn axpy<T: Real, const N: usize>(y: &State<T, N>, h: T, d: &State<T, N>) -> State<T, N> {
    let mut out = *y;
    for (o, v) in out.iter_mut().zip(d) {
        *o = *o + *v * h;
    }
    out
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to the last entry of `outputs`.
///
/// `outputs` must be non-decreasing and start at or after `t0`. The state
/// is recorded at each output time. `monitor` sees every accepted state
/// (including the initial one) and may track invariants such as the norm.
pub fn integrate<T, const N: usize, F, M>(
    mut rhs: F,
    t0: T,
    y0: State<T, N>,
    outputs: &[T],
    tol: Tolerances<T>,
    max_steps: usize,
    mut monitor: M,
) -> Result<(Vec<State<T, N>>, StepStats), OdeError>
where
    T: Real,
    F: FnMut(T, &State<T, N>) -> State<T, N>,
    M: FnMut(T, &State<T, N>),
{
    let tab = Tableau::<T>::new();
    let mut stats = StepStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    monitor(t, &y);

    let Some(&t_end) = outputs.last() else {
        return Ok((out, stats));
    };

    let zero = [Complex::new(T::zero(), T::zero()); N];
    let mut k = [zero; STAGES];
    k[0] = rhs(t, &y);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut rhs, t, &y, &k[0], t_end - t, tol, &mut stats);
    let mut last_rejected = false;

    let safe = T::lit(0.9);
    let fac_min = T::lit(1.0 / 3.0);
    let fac_max = T::lit(6.0);
    let expo = T::lit(1.0 / 8.0);
    let tiny = T::lit(16.0) * T::epsilon();
    let hundredth = T::lit(0.01);

    for &target in outputs {
        while t < target {
            if stats.accepted + stats.rejected >= max_steps {
                return Err(OdeError::TooManySteps {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    max_steps,
                });
            }
            let remaining = target - t;
            let lands = h >= remaining;
            let step = if lands { remaining } else { h };
            if step <= tiny * t.abs().max(T::one()) {
                return Err(OdeError::StepUnderflow {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    h: step.to_f64().unwrap_or(f64::NAN),
                });
            }

            for s in 1..STAGES {
                let ys = axpy(&y, step, &weighted(&tab.a[s - 1][..s], &k[..s]));
                k[s] = rhs(t + tab.c[s - 1] * step, &ys);
            }
            stats.rhs_evals += STAGES - 1;

            let incr = weighted(&tab.b, &k);
            let y_new = axpy(&y, step, &incr);
            let d5 = weighted(&tab.e5, &k);

            let mut e5 = T::zero();
            let mut e3 = T::zero();
            for i in 0..N {
                let scale = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
                let d3 = incr[i] - k[0][i] * tab.bhh[0] - k[8][i] * tab.bhh[1] - k[11][i] * tab.bhh[2];
                e5 = e5.max(d5[i].norm() / scale);
                e3 = e3.max(d3.norm() / scale);
            }
            let den = e5 * e5 + hundredth * e3 * e3;
            let err = if den > T::zero() {
                step * e5 * e5 / den.sqrt()
            } else {
                T::zero()
            };
            if !err.is_finite() || y_new.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(OdeError::NonFinite {
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }

            let fac = (err.powf(expo) / safe)
                .max(T::one() / fac_max)
                .min(T::one() / fac_min);
            if err <= T::one() {
                let t_new = if lands { target } else { t + step };
                let mut h_new = step / fac;
                if last_rejected {
                    h_new = h_new.min(step);
                }
                // A step cut short to land on an output should not shrink
                // the next one.
                if lands {
                    h_new = h_new.max(h.min(step * fac_max));
                }
                k[0] = rhs(t_new, &y_new);
                stats.rhs_evals += 1;
                t = t_new;
                y = y_new;
                h = h_new;
                last_rejected = false;
                stats.accepted += 1;
                monitor(t, &y);
            } else {
                h = step / fac;
                last_rejected = true;
                stats.rejected += 1;
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

fn initial_step<T, const N: usize, F>(
    rhs: &mut F,
    t: T,
    y: &State<T, N>,
    f0: &State<T, N>,
    span: T,
    tol: Tolerances<T>,
    stats: &mut StepStats,
) -> T
where
    T: Real,
    F: FnMut(T, &State<T, N>) -> State<T, N>,
{
    let scale = tol.abs + tol.rel * norm(y);
    let d0 = norm(y) / scale;
    let d1 = norm(f0) / scale;
    let small = T::lit(1e-10);
    let h0 = if d0 < small || d1 < small {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    }
    .min(span.abs());
    let f1 = rhs(t + h0, &axpy(y, h0, f0));
    stats.rhs_evals += 1;
    let mut diff = T::zero();
    for i in 0..N {
        diff = diff.max((f1[i] - f0[i]).norm());
    }
    let d2 = diff / scale / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / dmax).powf(T::lit(1.0 / 8.0))
    };
    (T::lit(100.0) * h0).min(h1).min(span.abs()).max(T::epsilon() * T::lit(1e3))
}
