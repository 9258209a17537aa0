//! Atomic-medium states and the exact spin-quadrature moments of the
//! collective excitation \u{3be} = a\u{2082}\u{207a}a\u{2081}/\u{221a}N.
//!
//! Each medium kind sits behind the [`AtomicMedium`] trait and is registered
//! by name, so run configurations can select one at runtime. The moments use
//! the same Q, P convention as the Gaussian engine (vacuum variance 1).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::ModeMoments;

/// Spin-quadrature moments of the collective excitation, quadrature
/// convention Q = \u{3be} + \u{3be}\u{207a}, P = i(\u{3be}\u{207a} \u{2212} \u{3be}).
pub type SpinMoments = ModeMoments;

/// A preparable state of the atomic medium, able to report the exact first
/// and second moments of its collective spin excitation.
pub trait AtomicMedium: Send + Sync {
    /// Registered strategy name ("coherent", "fock", "bec").
    fn kind(&self) -> &'static str;

    /// Exact spin-quadrature moments of \u{3be} for this preparation.
    fn spin_moments(&self) -> SpinMoments;

    /// Short human-readable parameter summary for report metadata.
    fn describe(&self) -> String;
}

/// Idealized coherent medium: unit variances, zero means.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoherentMedium;

impl AtomicMedium for CoherentMedium {
    fn kind(&self) -> &'static str {
        "coherent"
    }

    fn spin_moments(&self) -> SpinMoments {
        SpinMoments::vacuum()
    }

    fn describe(&self) -> String {
        "coherent".into()
    }
}

/// Two-mode number state |n1>|n2> of the atomic levels.
#[derive(Debug, Clone, Copy)]
pub struct FockMedium {
    n1: u64,
    n2: u64,
}

impl FockMedium {
    pub fn new(n1: u64, n2: u64) -> Result<Self> {
        if n1 + n2 == 0 {
            return Err(Error::Validation(
                "Fock medium needs at least one atom (n1 + n2 > 0)".into(),
            ));
        }
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    pub fn n2(&self) -> u64 {
        self.n2
    }

    pub fn total(&self) -> u64 {
        self.n1 + self.n2
    }
}

impl AtomicMedium for FockMedium {
    fn kind(&self) -> &'static str {
        "fock"
    }

    fn spin_moments(&self) -> SpinMoments {
        // <Q^2> = [n1(n2+1) + n2(n1+1)]/N with vanishing means and no Q-P
        // correlation; identical for P. Exact for any occupation.
        let (n1, n2) = (self.n1 as f64, self.n2 as f64);
        let n = n1 + n2;
        let v = (n1 * (n2 + 1.0) + n2 * (n1 + 1.0)) / n;
        SpinMoments {
            mean_q: 0.0,
            mean_p: 0.0,
            vq: v,
            vp: v,
            cov_qp: 0.0,
        }
    }

    fn describe(&self) -> String {
        format!("fock n1={} n2={}", self.n1, self.n2)
    }
}

/// Condensate medium: all N atoms share the single-particle state
/// \u{3b1}\u{2081}|1> + \u{3b1}\u{2082}|2>. Normalization |\u{3b1}\u{2081}|\u{b2} + |\u{3b1}\u{2082}|\u{b2} = 1 is built in by
/// storing |\u{3b1}\u{2081}| and deriving |\u{3b1}\u{2082}|.
#[derive(Debug, Clone, Copy)]
pub struct BecMedium {
    n_atoms: u64,
    mag1: f64,
    phase1: f64,
    phase2: f64,
}

impl BecMedium {
    pub fn new(n_atoms: u64, mag1: f64, phase1: f64, phase2: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Validation("condensate needs N >= 1 atoms".into()));
        }
        if !(0.0..=1.0).contains(&mag1) || !mag1.is_finite() {
            return Err(Error::Validation(format!(
                "|alpha1| must lie in [0, 1], got {mag1}"
            )));
        }
        Ok(Self {
            n_atoms,
            mag1,
            phase1,
            phase2,
        })
    }

    /// Convenience constructor from the level-1 population fraction
    /// |\u{3b1}\u{2081}|\u{b2} and the relative phase \u{3c6} = \u{3c6}\u{2082} \u{2212} \u{3c6}\u{2081}.
    pub fn from_population(n_atoms: u64, alpha1_sq: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha1_sq) || !alpha1_sq.is_finite() {
            return Err(Error::Validation(format!(
                "|alpha1|^2 must lie in [0, 1], got {alpha1_sq}"
            )));
        }
        Self::new(n_atoms, alpha1_sq.sqrt(), 0.0, phi)
    }

    pub fn n_atoms(&self) -> u64 {
        self.n_atoms
    }

    pub fn mag1(&self) -> f64 {
        self.mag1
    }

    pub fn mag2(&self) -> f64 {
        (1.0 - self.mag1 * self.mag1).max(0.0).sqrt()
    }

    /// Relative phase \u{3c6} = \u{3c6}\u{2082} \u{2212} \u{3c6}\u{2081}.
    pub fn phi(&self) -> f64 {
        self.phase2 - self.phase1
    }

    pub fn alpha1(&self) -> Complex64 {
        Complex64::from_polar(self.mag1, self.phase1)
    }

    pub fn alpha2(&self) -> Complex64 {
        Complex64::from_polar(self.mag2(), self.phase2)
    }

    /// Moments computed directly from the binomial expansion of the
    /// condensate state over |k, N-k>, with no large-N approximation.
    /// Serves as the independent check of the closed forms returned by
    /// [`AtomicMedium::spin_moments`]. Feasible up to N = 200.
    pub fn exact_moments(&self) -> Result<SpinMoments> {
        const MAX_N: u64 = 200;
        if self.n_atoms > MAX_N {
            return Err(Error::Capacity(format!(
                "exact condensate expansion limited to N <= {MAX_N}, got {}",
                self.n_atoms
            )));
        }
        let n = self.n_atoms as usize;
        let a1 = self.alpha1();
        let a2 = self.alpha2();

        // amplitudes c_k = sqrt(C(N,k)) a1^k a2^(N-k) on |k, N-k>
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        let mut log_binom = 0.0f64; // ln C(N, k), updated incrementally
        for (k, amp) in amps.iter_mut().enumerate() {
            if k > 0 {
                log_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            let mag = (0.5 * log_binom
                + k as f64 * a1.norm().max(f64::MIN_POSITIVE).ln()
                + (n - k) as f64 * a2.norm().max(f64::MIN_POSITIVE).ln())
            .exp();
            let phase = k as f64 * a1.arg() + (n - k) as f64 * a2.arg();
            *amp = Complex64::from_polar(mag, phase);
            if (k > 0 && a1.norm() == 0.0) || (k < n && a2.norm() == 0.0) {
                *amp = Complex64::new(0.0, 0.0);
            }
        }

        // xi = a2+ a1 / sqrt(N) lowers k by one: xi |k, N-k> =
        // sqrt(k (N-k+1) / N) |k-1, N-k+1>.
        let lower = |v: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
            for k in 1..=n {
                let w = ((k as f64) * ((n - k + 1) as f64) / n as f64).sqrt();
                out[k - 1] += w * v[k];
            }
            out
        };
        let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
            u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
        };

        let xi_psi = lower(&amps);
        let xi2_psi = lower(&xi_psi);
        let mean_xi = dot(&amps, &xi_psi);
        let mean_xi2 = dot(&amps, &xi2_psi);
        let xidag_xi = dot(&xi_psi, &xi_psi);
        // xi xi+ = xi+ xi + [xi, xi+]; evaluate directly via the raising map
        let raise = |v: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
            for k in 0..n {
                let w = (((k + 1) as f64) * ((n - k) as f64) / n as f64).sqrt();
                out[k + 1] += w * v[k];
            }
            out
        };
        let xidag_psi = raise(&amps);
        let xi_xidag = dot(&xidag_psi, &xidag_psi);

        let sym = xidag_xi.re + xi_xidag.re; // <xi xi+ + xi+ xi>
        let mean_q = 2.0 * mean_xi.re;
        let mean_p = 2.0 * mean_xi.im;
        let vq = 2.0 * mean_xi2.re + sym - mean_q * mean_q;
        let vp = -2.0 * mean_xi2.re + sym - mean_p * mean_p;
        let cov_qp = 2.0 * mean_xi2.im - mean_q * mean_p;
        SpinMoments::new(mean_q, mean_p, vq.max(0.0), vp.max(0.0), cov_qp)
    }
}

impl AtomicMedium for BecMedium {
    fn kind(&self) -> &'static str {
        "bec"
    }

    fn spin_moments(&self) -> SpinMoments {
        // Closed forms, exact at every atom number (verified against
        // exact_moments): with c = |a1||a2| and phi the relative phase,
        //   <Q> = 2 sqrt(N) c cos(phi),   <P> = -2 sqrt(N) c sin(phi),
        //   V_Q = 1 - 4 c^2 cos^2(phi),   V_P = 1 - 4 c^2 sin^2(phi),
        //   Cov(Q,P) = 2 c^2 sin(2 phi).
        // The sign of <P> follows from xi = a2+ a1 / sqrt(N); the Fock-space
        // oracle pins it down.
        let c = self.mag1 * self.mag2();
        let phi = self.phi();
        let root_n = (self.n_atoms as f64).sqrt();
        SpinMoments {
            mean_q: 2.0 * root_n * c * phi.cos(),
            mean_p: -2.0 * root_n * c * phi.sin(),
            vq: 1.0 - 4.0 * c * c * phi.cos().powi(2),
            vp: 1.0 - 4.0 * c * c * phi.sin().powi(2),
            cov_qp: 2.0 * c * c * (2.0 * phi).sin(),
        }
    }

    fn describe(&self) -> String {
        format!(
            "bec N={} |alpha1|^2={:.6} phi={:.6}",
            self.n_atoms,
            self.mag1 * self.mag1,
            self.phi()
        )
    }
}

/// Adiabatic-regime predicate on mean level occupations: the excited level
/// must stay far below the initial level, which in turn stays below the
/// target level. "Far below" is quantified by `ratio` (default 0.1).
pub fn adiabatic_condition(n1: f64, n2: f64, n3: f64, ratio: f64) -> bool {
    n3 <= ratio * n1 && n1 < n2
}

pub const DEFAULT_ADIABATIC_RATIO: f64 = 0.1;

/// Declarative medium selection, as found in run-configuration files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediumSpec {
    pub kind: String,
    #[serde(default)]
    pub n1: Option<u64>,
    #[serde(default)]
    pub n2: Option<u64>,
    #[serde(default)]
    pub n_atoms: Option<u64>,
    #[serde(default)]
    pub alpha1_sq: Option<f64>,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub phase1: Option<f64>,
    #[serde(default)]
    pub phase2: Option<f64>,
}

impl MediumSpec {
    pub fn coherent() -> Self {
        Self {
            kind: "coherent".into(),
            n1: None,
            n2: None,
            n_atoms: None,
            alpha1_sq: None,
            phi: None,
            phase1: None,
            phase2: None,
        }
    }

    pub fn bec(n_atoms: u64, alpha1_sq: f64, phi: f64) -> Self {
        Self {
            kind: "bec".into(),
            n_atoms: Some(n_atoms),
            alpha1_sq: Some(alpha1_sq),
            phi: Some(phi),
            ..Self::coherent()
        }
    }

    pub fn fock(n1: u64, n2: u64) -> Self {
        Self {
            kind: "fock".into(),
            n1: Some(n1),
            n2: Some(n2),
            ..Self::coherent()
        }
    }
}

type MediumBuilder = fn(&MediumSpec) -> Result<Box<dyn AtomicMedium>>;

fn build_coherent(_: &MediumSpec) -> Result<Box<dyn AtomicMedium>> {
    Ok(Box::new(CoherentMedium))
}

fn build_fock(spec: &MediumSpec) -> Result<Box<dyn AtomicMedium>> {
    let n1 = spec
        .n1
        .ok_or_else(|| Error::Validation("fock medium needs `n1`".into()))?;
    let n2 = spec
        .n2
        .ok_or_else(|| Error::Validation("fock medium needs `n2`".into()))?;
    Ok(Box::new(FockMedium::new(n1, n2)?))
}

fn build_bec(spec: &MediumSpec) -> Result<Box<dyn AtomicMedium>> {
    let n = spec
        .n_atoms
        .ok_or_else(|| Error::Validation("bec medium needs `n_atoms`".into()))?;
    let a1sq = spec
        .alpha1_sq
        .ok_or_else(|| Error::Validation("bec medium needs `alpha1_sq`".into()))?;
    if !(0.0..=1.0).contains(&a1sq) || !a1sq.is_finite() {
        return Err(Error::Validation(format!(
            "|alpha1|^2 must lie in [0, 1], got {a1sq}"
        )));
    }
    match (spec.phi, spec.phase1, spec.phase2) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::Validation(
            "give either `phi` or `phase1`/`phase2`, not both".into(),
        )),
        (phi, None, None) => Ok(Box::new(BecMedium::from_population(
            n,
            a1sq,
            phi.unwrap_or(0.0),
        )?)),
        (None, p1, p2) => Ok(Box::new(BecMedium::new(
            n,
            a1sq.sqrt(),
            p1.unwrap_or(0.0),
            p2.unwrap_or(0.0),
        )?)),
    }
}

/// Name-keyed registry of medium builders.
pub fn medium_registry() -> BTreeMap<&'static str, MediumBuilder> {
    let mut map: BTreeMap<&'static str, MediumBuilder> = BTreeMap::new();
    map.insert("coherent", build_coherent);
    map.insert("fock", build_fock);
    map.insert("bec", build_bec);
    map
}

/// Build a medium from its declarative spec via the registry.
pub fn build_medium(spec: &MediumSpec) -> Result<Box<dyn AtomicMedium>> {
    let registry = medium_registry();
    match registry.get(spec.kind.as_str()) {
        Some(builder) => builder(spec),
        None => Err(Error::UnknownStrategy {
            kind: "medium",
            name: spec.kind.clone(),
            known: registry.keys().copied().collect::<Vec<_>>().join(", "),
        }),
    }
}
