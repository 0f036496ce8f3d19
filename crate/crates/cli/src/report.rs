//! Resonance-crossing and adiabaticity reports.

use std::fmt::Write as _;

use lambda_chirp::model::effective_detuning_rate;
use lambda_chirp::{
    adiabaticity_global, adiabaticity_local, max_local_adiabaticity, rabi_coupling,
    resonance_crossings, GlobalAdiabaticity, Pulse, Sim,
};
use serde::Serialize;

/// Global ratio above which the passage is called adiabatic.
pub const ADIABATIC_RATIO: f64 = 10.0;

/// Samples used to locate the largest local adiabaticity ratio.
const LOCAL_SAMPLES: usize = 4001;

/// Up to four decimals, trailing zeros dropped: `30`, `0.8165`.
pub fn human(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    /// dε/dt at the crossing (rad/ns²).
    pub detuning_rate: f64,
    pub rabi: f64,
    /// Local adiabaticity ratio, `|ε′|/F²` at a crossing.
    pub adiabaticity_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosestApproach {
    pub t: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    /// Present when the detuning never vanishes.
    pub closest_approach: Option<ClosestApproach>,
}

impl CrossingReport {
    pub fn new(pulse: &Pulse) -> Self {
        let crossings: Vec<Crossing> = resonance_crossings(pulse)
            .into_iter()
            .map(|t| Crossing {
                t,
                detuning_rate: effective_detuning_rate(t, pulse),
                rabi: rabi_coupling(t, pulse),
                adiabaticity_ratio: adiabaticity_local(t, pulse),
            })
            .collect();
        // The detuning is a parabola with its vertex at the pulse centre.
        let closest_approach = crossings.is_empty().then(|| ClosestApproach {
            t: 0.0,
            gap: pulse.e0p.abs(),
        });
        Self {
            crossings,
            closest_approach,
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        if let Some(c) = &self.closest_approach {
            let _ = writeln!(
                s,
                "no crossings; closest approach at t={}, gap {} rad/ns",
                human(c.t),
                human(c.gap)
            );
            return s;
        }
        let times: Vec<String> = self.crossings.iter().map(|c| human(c.t)).collect();
        let _ = writeln!(
            s,
            "{} crossing{} at t = {} ns",
            self.crossings.len(),
            if self.crossings.len() == 1 { "" } else { "s" },
            times.join(", ")
        );
        for c in &self.crossings {
            let _ = writeln!(
                s,
                "  t = {} ns: d(eps)/dt = {} rad/ns^2, F = {} rad/ns, |eps'|/F^2 = {}",
                human(c.t),
                human(c.detuning_rate),
                human(c.rabi),
                human(c.adiabaticity_ratio)
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalMaximum {
    pub t: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdiabaticityReport {
    pub crossings: Vec<f64>,
    pub global: GlobalAdiabaticity<f64>,
    pub max_local: LocalMaximum,
    /// `global.ratio ≥ ADIABATIC_RATIO`.
    pub adiabatic: bool,
}

impl AdiabaticityReport {
    pub fn new(pulse: &Pulse, sim: &Sim) -> Self {
        let global = adiabaticity_global(pulse, None);
        let (t0, t1) = sim.span(pulse);
        let (t, ratio) = max_local_adiabaticity(pulse, t0, t1, LOCAL_SAMPLES);
        Self {
            crossings: resonance_crossings(pulse),
            adiabatic: global.ratio >= ADIABATIC_RATIO,
            global,
            max_local: LocalMaximum { t, ratio },
        }
    }

    pub fn text(&self) -> String {
        let g = &self.global;
        let mut s = String::new();
        let _ = writeln!(s, "F0^2            = {} rad^2/ns^2", human(g.lhs));
        let _ = writeln!(
            s,
            "2k|beta|*t_tr   = {} rad^2/ns^2 (t_tr = {} ns)",
            human(g.rhs),
            human(g.t_tr)
        );
        let _ = writeln!(s, "ratio           = {}", human(g.ratio));
        let _ = writeln!(
            s,
            "max local ratio = {} at t = {} ns",
            human(self.max_local.ratio),
            human(self.max_local.t)
        );
        let _ = writeln!(
            s,
            "{}",
            if self.adiabatic {
                format!("adiabatic (ratio >= {ADIABATIC_RATIO})")
            } else {
                format!("non-adiabatic (ratio < {ADIABATIC_RATIO})")
            }
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_formatting() {
        assert_eq!(human(30.0), "30");
        assert_eq!(human(0.816496580927726), "0.8165");
        assert_eq!(human(-0.816496580927726), "-0.8165");
        assert_eq!(human(-0.00001), "0");
        assert_eq!(human(f64::INFINITY), "inf");
    }

    #[test]
    fn crossings_of_the_negative_detuning_pulse() {
        let r = CrossingReport::new(&Pulse::new(35.0, 5.0, -30.0, 15.0));
        assert_eq!(r.crossings.len(), 2);
        assert!(r.closest_approach.is_none());
        assert!((r.crossings[1].t - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(r.text().starts_with("2 crossings at t = -0.8165, 0.8165 ns"));
    }

    #[test]
    fn positive_detuning_reports_the_gap() {
        let r = CrossingReport::new(&Pulse::new(15.0, 5.0, 30.0, 25.0));
        assert!(r.crossings.is_empty());
        assert_eq!(r.text(), "no crossings; closest approach at t=0, gap 30 rad/ns\n");
    }

    #[test]
    fn adiabaticity_verdicts() {
        let r = AdiabaticityReport::new(&Pulse::new(35.0, 5.0, -30.0, 15.0), &Sim::default());
        assert!(r.adiabatic);
        assert!(r.text().contains("ratio           = 16.6701"));
        let weak = AdiabaticityReport::new(&Pulse::new(0.0, 5.0, -30.0, 15.0), &Sim::default());
        assert_eq!(weak.global.ratio, 0.0);
        assert!(!weak.adiabatic);
        assert!(weak.text().contains("non-adiabatic"));
    }
}
