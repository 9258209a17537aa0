//! Canned run setups used by the CLI and the verification suites.

use num_complex::Complex64;

use super::{PulseEnvelope, StirapParams, StirapState};

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub initial: StirapState,
    pub params: StirapParams,
    pub t_end: f64,
}

/// Counterintuitive two-pulse photoassociation run at zero decay and zero
/// detuning: the bound-bound pulse leads, the free-bound pulse follows, and
/// a strong seed field keeps the bound-bound coupling effective from the
/// start. 100 free atoms, time unit = pulse width, span of ten widths.
pub fn adiabatic_transfer() -> Preset {
    let zero = Complex64::new(0.0, 0.0);
    Preset {
        name: "adiabatic-transfer",
        initial: StirapState::new(
            Complex64::new(10.0, 0.0),
            zero,
            zero,
            Complex64::new(10.0, 0.0),
            -5.0,
        ),
        params: StirapParams {
            lambda: [[0.0; 3]; 3],
            kappa: Complex64::new(2.0, 0.0),
            omega2_peak: Complex64::new(2.0, 0.0),
            delta1: 0.0,
            delta2: 0.0,
            gamma: [0.0; 3],
            kappa_pulse: PulseEnvelope::gaussian(1.0, 1.0),
            omega2_pulse: PulseEnvelope::gaussian(-1.0, 1.0),
        },
        t_end: 5.0,
    }
}

/// Same pulse geometry with everything switched off; a flat trajectory.
pub fn quiescent() -> Preset {
    let mut p = adiabatic_transfer();
    p.name = "quiescent";
    p.params.kappa = Complex64::new(0.0, 0.0);
    p.params.omega2_peak = Complex64::new(0.0, 0.0);
    p
}

pub fn by_name(name: &str) -> Option<Preset> {
    match name {
        "adiabatic-transfer" => Some(adiabatic_transfer()),
        "quiescent" => Some(quiescent()),
        _ => None,
    }
}
