//! Mean-field dynamics of stimulated Raman two-color photoassociation under
//! EIT: three matter modes (free atoms, ground molecules, excited molecules)
//! coupled to a signal field amplitude, with mean-field frequency shifts,
//! pulse-shaped couplings and decay.
//!
//! Two coupling variants sit behind [`CouplingVariant`] and are selected by
//! name. `printed` keeps the bound-bound coupling at full strength in the
//! excited-molecule equation while its partners carry 1/2. `symmetrized`
//! carries the 1/2 in all three places that coupling enters and conjugates
//! it where the Hamiltonian derivation does; it is the variant whose flow
//! conserves both quadratic charges Q1 = n1 + 2 n2 + 2 n3 and Q2 = nf - n2
//! at zero decay. The printed layout conserves Q2 and
//! n1 + 2 n2 + 2 n3 + 2 nf instead of Q1; that imbalance is surfaced in
//! diagnostics rather than silently repaired.

pub mod ode;
pub mod presets;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::adiabatic_condition;

/// Multiplicative pulse envelope, unit peak.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    /// Peak time, seconds.
    pub center: f64,
    /// Width parameter, seconds.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Gaussian,
    Sech,
}

impl PulseEnvelope {
    pub fn gaussian(center: f64, width: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            center,
            width,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        match self.shape {
            PulseShape::Gaussian => (-0.5 * x * x).exp(),
            PulseShape::Sech => 1.0 / x.cosh(),
        }
    }

    /// Envelope mirrored about the midpoint of [t0, t1].
    pub fn reversed(&self, t0: f64, t1: f64) -> Self {
        Self {
            center: t0 + t1 - self.center,
            ..*self
        }
    }
}

/// Physical parameters of one run. Angular frequencies in rad/s, times in
/// seconds, decay rates in 1/s.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StirapParams {
    /// Two-body interaction coefficients between the matter modes,
    /// symmetric 3x3, rad/s per particle.
    pub lambda: [[f64; 3]; 3],
    /// Free-bound coupling peak (per amplitude).
    pub kappa: Complex64,
    /// Bound-bound coupling peak.
    pub omega2_peak: Complex64,
    /// Rotating-frame detunings.
    pub delta1: f64,
    pub delta2: f64,
    /// Amplitude decay rates of the three matter modes.
    pub gamma: [f64; 3],
    pub kappa_pulse: PulseEnvelope,
    pub omega2_pulse: PulseEnvelope,
}

impl StirapParams {
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.lambda.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != self.lambda[j][i] {
                    return Err(Error::Validation(format!(
                        "lambda must be symmetric, entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        if self.gamma.iter().any(|g| *g < 0.0) {
            return Err(Error::Validation("decay rates must be nonnegative".into()));
        }
        if self.kappa_pulse.width <= 0.0 || self.omega2_pulse.width <= 0.0 {
            return Err(Error::Validation("pulse widths must be positive".into()));
        }
        Ok(())
    }

    pub fn kappa_at(&self, t: f64) -> Complex64 {
        self.kappa * self.kappa_pulse.value(t)
    }

    pub fn omega2_at(&self, t: f64) -> Complex64 {
        self.omega2_peak * self.omega2_pulse.value(t)
    }

    /// Mean-field shifted detunings for the current populations.
    pub fn effective_detunings(&self, populations: [f64; 3]) -> [f64; 2] {
        let shift = |row: &[f64; 3]| -> f64 {
            row.iter().zip(populations).map(|(l, n)| l * n).sum::<f64>()
        };
        [
            self.delta1 - shift(&self.lambda[0]),
            self.delta2 - shift(&self.lambda[1]),
        ]
    }
}

/// Mean-field amplitudes of the three matter modes and the signal field at
/// one instant; populations are |amp|^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StirapState {
    pub amp1: Complex64,
    pub amp2: Complex64,
    pub amp3: Complex64,
    pub ampf: Complex64,
    pub t: f64,
}

impl StirapState {
    pub fn new(amp1: Complex64, amp2: Complex64, amp3: Complex64, ampf: Complex64, t: f64) -> Self {
        Self {
            amp1,
            amp2,
            amp3,
            ampf,
            t,
        }
    }

    pub fn populations(&self) -> [f64; 4] {
        [
            self.amp1.norm_sqr(),
            self.amp2.norm_sqr(),
            self.amp3.norm_sqr(),
            self.ampf.norm_sqr(),
        ]
    }

    /// Atom-counting charge n1 + 2 n2 + 2 n3.
    pub fn charge_atoms(&self) -> f64 {
        let [n1, n2, n3, _] = self.populations();
        n1 + 2.0 * n2 + 2.0 * n3
    }

    /// Photon-molecule difference nf - n2.
    pub fn charge_field(&self) -> f64 {
        let [_, n2, _, nf] = self.populations();
        nf - n2
    }

    fn to_flat(self) -> [f64; 8] {
        [
            self.amp1.re, self.amp1.im, self.amp2.re, self.amp2.im, self.amp3.re, self.amp3.im,
            self.ampf.re, self.ampf.im,
        ]
    }

    fn from_flat(y: &[f64; 8], t: f64) -> Self {
        Self {
            amp1: Complex64::new(y[0], y[1]),
            amp2: Complex64::new(y[2], y[3]),
            amp3: Complex64::new(y[4], y[5]),
            ampf: Complex64::new(y[6], y[7]),
            t,
        }
    }
}

/// One member of the family of coupling layouts for the four mean-field
/// equations.
pub trait CouplingVariant: Send + Sync {
    fn name(&self) -> &'static str;

    /// Time derivatives of (a1, a2, a3, f) given the instantaneous pulse
    /// values and effective detunings.
    fn derivatives(
        &self,
        amps: [Complex64; 4],
        kappa_t: Complex64,
        omega2_t: Complex64,
        delta: [f64; 2],
        gamma: [f64; 3],
    ) -> [Complex64; 4];
}

/// Coupling layout with the bound-bound term at full strength in the
/// excited-molecule equation while its partners carry 1/2.
pub struct PrintedEquations;

/// Hamiltonian-consistent layout: the bound-bound coupling carries 1/2 in
/// all three equations it enters and is conjugated on the de-excitation
/// side. Conserves both quadratic charges at zero decay.
pub struct SymmetrizedEquations;

const I: Complex64 = Complex64::new(0.0, 1.0);

impl CouplingVariant for PrintedEquations {
    fn name(&self) -> &'static str {
        "printed"
    }

    fn derivatives(
        &self,
        [a1, a2, a3, f]: [Complex64; 4],
        kappa_t: Complex64,
        omega2_t: Complex64,
        [d1, d2]: [f64; 2],
        [g1, g2, g3]: [f64; 3],
    ) -> [Complex64; 4] {
        // effective free-bound Rabi coupling: omega1 = kappa(t) a1
        let omega1 = kappa_t * a1;
        [
            (-g1 + I * d1) * a1 + I * omega1.conj() * a3,
            (-g2 + I * d2) * a2 + I * (omega2_t / 2.0) * f.conj() * a3,
            -g3 * a3 + I * (omega1 / 2.0) * a1 + I * omega2_t * f * a2,
            I * (omega2_t / 2.0) * a2.conj() * a3,
        ]
    }
}

impl CouplingVariant for SymmetrizedEquations {
    fn name(&self) -> &'static str {
        "symmetrized"
    }

    fn derivatives(
        &self,
        [a1, a2, a3, f]: [Complex64; 4],
        kappa_t: Complex64,
        omega2_t: Complex64,
        [d1, d2]: [f64; 2],
        [g1, g2, g3]: [f64; 3],
    ) -> [Complex64; 4] {
        let omega1 = kappa_t * a1;
        let half = omega2_t / 2.0;
        [
            (-g1 + I * d1) * a1 + I * omega1.conj() * a3,
            (-g2 + I * d2) * a2 + I * half.conj() * f.conj() * a3,
            -g3 * a3 + I * (omega1 / 2.0) * a1 + I * half * f * a2,
            I * half.conj() * a2.conj() * a3,
        ]
    }
}

/// Registry of coupling variants, keyed by name.
pub fn variant_registry() -> BTreeMap<&'static str, &'static dyn CouplingVariant> {
    let mut map: BTreeMap<&'static str, &'static dyn CouplingVariant> = BTreeMap::new();
    map.insert("printed", &PrintedEquations);
    map.insert("symmetrized", &SymmetrizedEquations);
    map
}

pub fn resolve_variant(name: &str) -> Result<&'static dyn CouplingVariant> {
    let registry = variant_registry();
    registry.get(name).copied().ok_or_else(|| Error::UnknownStrategy {
        kind: "equation variant",
        name: name.to_string(),
        known: registry.keys().copied().collect::<Vec<_>>().join(", "),
    })
}

/// Right-hand side of the mean-field system at the state's own time,
/// recomputing pulse values and mean-field detunings.
pub fn rhs(
    state: &StirapState,
    params: &StirapParams,
    variant: &dyn CouplingVariant,
) -> [Complex64; 4] {
    let [n1, n2, n3, _] = state.populations();
    let delta = params.effective_detunings([n1, n2, n3]);
    variant.derivatives(
        [state.amp1, state.amp2, state.amp3, state.ampf],
        params.kappa_at(state.t),
        params.omega2_at(state.t),
        delta,
        params.gamma,
    )
}

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

/// Accepted integration knots plus step-control counters.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<StirapState>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// Conservation and adiabaticity diagnostics of one trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub charge_atoms_initial: f64,
    /// max_t |Q1(t) - Q1(0)| / |Q1(0)|
    pub charge_atoms_drift_rel: f64,
    /// max_t |Q2(t) - Q2(0)| scaled by |Q2(0)| (or Q1(0) if that vanishes)
    pub charge_field_drift_rel: f64,
    /// Drift of the charge the printed coupling layout actually
    /// conserves, n1 + 2 n2 + 2 n3 + 2 nf.
    pub charge_atoms_plus_field_drift_rel: f64,
    /// max_t n3(t) / Q1(0)
    pub max_excited_fraction: f64,
    /// 2 n2(end) / Q1(0): fraction of atoms bound into ground molecules.
    pub final_molecular_fraction: f64,
    /// Adiabatic-condition trace (n3 << n1 < n2) per sample.
    #[serde(skip)]
    pub adiabatic_trace: Vec<bool>,
}

impl Trajectory {
    pub fn initial(&self) -> &StirapState {
        &self.samples[0]
    }

    pub fn last(&self) -> &StirapState {
        self.samples.last().expect("nonempty trajectory")
    }

    pub fn diagnostics(&self, adiabatic_ratio: f64) -> Diagnostics {
        let q1_0 = self.initial().charge_atoms();
        let q2_0 = self.initial().charge_field();
        let q3 = |s: &StirapState| s.charge_atoms() + 2.0 * s.populations()[3];
        let q3_0 = q3(self.initial());
        let q2_scale = if q2_0.abs() > 1e-12 { q2_0.abs() } else { q1_0 };
        let mut d1: f64 = 0.0;
        let mut d2: f64 = 0.0;
        let mut d3: f64 = 0.0;
        let mut max_n3: f64 = 0.0;
        let mut trace = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let [n1, n2, n3, _] = s.populations();
            d1 = d1.max((s.charge_atoms() - q1_0).abs());
            d2 = d2.max((s.charge_field() - q2_0).abs());
            d3 = d3.max((q3(s) - q3_0).abs());
            max_n3 = max_n3.max(n3);
            trace.push(adiabatic_condition(n1, n2, n3, adiabatic_ratio));
        }
        let [_, n2_end, _, _] = self.last().populations();
        Diagnostics {
            charge_atoms_initial: q1_0,
            charge_atoms_drift_rel: d1 / q1_0,
            charge_field_drift_rel: d2 / q2_scale,
            charge_atoms_plus_field_drift_rel: d3 / q3_0,
            max_excited_fraction: max_n3 / q1_0,
            final_molecular_fraction: 2.0 * n2_end / q1_0,
            adiabatic_trace: trace,
        }
    }
}

/// Integrate the mean-field system from `initial.t` to `t_end`.
pub fn integrate(
    initial: &StirapState,
    params: &StirapParams,
    variant: &dyn CouplingVariant,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let f = |t: f64, y: &[f64; 8]| -> [f64; 8] {
        let s = StirapState::from_flat(y, t);
        let d = rhs(&s, params, variant);
        [
            d[0].re, d[0].im, d[1].re, d[1].im, d[2].re, d[2].im, d[3].re, d[3].im,
        ]
    };
    let sol = ode::solve(f, initial.t, initial.to_flat(), t_end, rel_tol, abs_tol)?;
    Ok(Trajectory {
        samples: sol
            .points
            .iter()
            .map(|(t, y)| StirapState::from_flat(y, *t))
            .collect(),
        steps_accepted: sol.steps_accepted,
        steps_rejected: sol.steps_rejected,
    })
}

/// Oblique-angle trace along a trajectory: theta(t) =
/// atan(|Omega2(t)| sqrt(N) / |Omega1(t)|) with N the initial atom charge
/// and Omega1 = kappa(t) a1(t). Samples where Omega1 vanishes are flagged
/// undefined rather than rejected.
pub fn eit_angle_trace(traj: &Trajectory, params: &StirapParams) -> Vec<Option<f64>> {
    let root_n = traj.initial().charge_atoms().sqrt();
    traj.samples
        .iter()
        .map(|s| {
            let omega1 = (params.kappa_at(s.t) * s.amp1).norm();
            let omega2 = params.omega2_at(s.t).norm();
            if omega1 == 0.0 {
                None
            } else {
                Some((omega2 * root_n / omega1).atan())
            }
        })
        .collect()
}
