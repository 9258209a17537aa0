//! Polariton transformation of the signal field and collective excitation,
//! and the correlation criteria that grade a storage run.
//!
//! The bright/dark polariton pair comes from a rotation of the (f, \u{3be})
//! operators by the oblique angle \u{3b8}. Correlation coefficients between input
//! and output quadratures are squared Pearson correlations; they are computed
//! both by generic moment propagation and from the closed forms, and the two
//! routes must agree.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, ModeMap, ModeMoments};
use crate::medium::SpinMoments;

/// Mixing angle of the polariton rotation with its derived weights
/// \u{3bc} = cos \u{3b8}, \u{3bd} = sin \u{3b8} and group index n_g = tan\u{b2}\u{3b8}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonAngle {
    theta: f64,
}

impl PolaritonAngle {
    /// Angle in [0, \u{3c0}/2); the right endpoint is rejected because the group
    /// index diverges there.
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(Error::SingularAngle(format!(
                "theta must lie in [0, pi/2), got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    /// Angle from the control/signal Rabi frequencies and atom number:
    /// tan \u{3b8} = \u{3a9}\u{2082} \u{221a}N / \u{3a9}\u{2081}.
    pub fn from_rabi(omega1: f64, omega2: f64, n_atoms: u64) -> Result<Self> {
        if !(omega1 > 0.0) {
            return Err(Error::SingularAngle(format!(
                "control Rabi frequency must be positive, got {omega1}"
            )));
        }
        if omega2 < 0.0 || n_atoms == 0 {
            return Err(Error::Validation(
                "signal Rabi frequency must be nonnegative and N positive".into(),
            ));
        }
        Self::new((omega2 * (n_atoms as f64).sqrt() / omega1).atan())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> f64 {
        self.theta.cos()
    }

    pub fn nu(&self) -> f64 {
        self.theta.sin()
    }

    /// Group index n_g = \u{3bd}\u{b2}/\u{3bc}\u{b2} = tan\u{b2}\u{3b8}.
    pub fn group_index(&self) -> f64 {
        self.theta.tan().powi(2)
    }
}

/// Two-mode rotation taking (f, \u{3be}) into the bright/dark polariton pair:
/// \u{3a6}_f = \u{3bc} f \u{2212} \u{3bd} \u{3be},  \u{3a6}_\u{3be} = \u{3bc} \u{3be} + \u{3bd} f.
pub fn storage_map(angle: PolaritonAngle) -> ModeMap {
    let (mu, nu) = (angle.mu(), angle.nu());
    ModeMap::rotation(DMatrix::from_row_slice(2, 2, &[mu, -nu, nu, mu]))
}

/// Correlation triple for one quadrature.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrelationTriple {
    /// Input signal vs output signal: distortion survived by the signal.
    pub c1: f64,
    /// Input signal vs stored excitation: quality of the recording.
    pub c2: f64,
    /// Output signal vs stored excitation: clone-style correlation.
    pub c3: f64,
}

/// Per-quadrature correlation triples plus the variances they were built
/// from and the regression gain of the recorded quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub q: CorrelationTriple,
    pub p: CorrelationTriple,
    pub v_signal_in: (f64, f64),
    pub v_signal_out: (f64, f64),
    pub v_medium_in: (f64, f64),
    pub v_medium_out: (f64, f64),
    /// Cov(X_f_in, X_\u{3be}_out)/V_in; equals \u{3bd} for the storage rotation, and
    /// the ideal-recording gain in the limit of a quiet medium.
    pub qnd_gain: f64,
}

const ROUTE_AGREEMENT_TOL: f64 = 1e-10;

fn squared_correlation(cov: f64, v_a: f64, v_b: f64) -> Result<f64> {
    let denom = v_a * v_b;
    if denom == 0.0 {
        if cov == 0.0 {
            // a deterministic variable is uncorrelated with anything
            return Ok(0.0);
        }
        return Err(Error::DegenerateInput(
            "zero variance with nonzero covariance".into(),
        ));
    }
    Ok(cov * cov / denom)
}

/// Closed-form triple for independent inputs with variances (v_f, v_xi).
pub fn closed_form_triple(angle: PolaritonAngle, v_f: f64, v_xi: f64) -> Result<CorrelationTriple> {
    let (mu2, nu2) = (angle.mu().powi(2), angle.nu().powi(2));
    if v_f == 0.0 && v_xi == 0.0 {
        return Err(Error::DegenerateInput(
            "signal and medium variances both zero".into(),
        ));
    }
    let d1 = mu2 * v_f + nu2 * v_xi;
    let d2 = mu2 * v_xi + nu2 * v_f;
    let c1 = if d1 == 0.0 { 0.0 } else { mu2 * v_f / d1 };
    let c2 = if d2 == 0.0 { 0.0 } else { nu2 * v_f / d2 };
    let c3 = if d1 * d2 == 0.0 {
        0.0
    } else {
        mu2 * nu2 * (v_f - v_xi).powi(2) / (d1 * d2)
    };
    Ok(CorrelationTriple { c1, c2, c3 })
}

/// Grade a storage run: propagate the signal and medium moments through the
/// polariton rotation and report the correlation triples for both
/// quadratures, cross-checked against the closed forms.
pub fn correlation_report(
    signal: &ModeMoments,
    medium: &SpinMoments,
    angle: PolaritonAngle,
) -> Result<CorrelationReport> {
    for (what, v) in [
        ("signal vq", signal.vq),
        ("signal vp", signal.vp),
        ("medium vq", medium.vq),
        ("medium vp", medium.vp),
    ] {
        if v < 0.0 {
            return Err(Error::NegativeVariance {
                what: what.into(),
                value: v,
            });
        }
    }
    if (signal.vq == 0.0 && medium.vq == 0.0) || (signal.vp == 0.0 && medium.vp == 0.0) {
        return Err(Error::DegenerateInput(
            "signal and medium variances both zero at the same quadrature".into(),
        ));
    }

    let state = GaussianState::vacuum(&["f", "xi"])?
        .set_mode_moments("f", *signal)?
        .set_mode_moments("xi", *medium)?;
    let (out, cross) = state.apply_map(&storage_map(angle), &["f", "xi"], &["f", "xi"])?;

    // quadrature indices: f -> (0, 1), xi -> (2, 3)
    let triple_from_moments = |qi: usize, xi: usize, v_f_in: f64| -> Result<CorrelationTriple> {
        let v_f_out = out.cov()[(qi, qi)];
        let v_x_out = out.cov()[(xi, xi)];
        Ok(CorrelationTriple {
            c1: squared_correlation(cross[(qi, qi)], v_f_in, v_f_out)?,
            c2: squared_correlation(cross[(qi, xi)], v_f_in, v_x_out)?,
            c3: squared_correlation(out.cov()[(qi, xi)], v_f_out, v_x_out)?,
        })
    };
    let generic_q = triple_from_moments(0, 2, signal.vq)?;
    let generic_p = triple_from_moments(1, 3, signal.vp)?;

    let closed_q = closed_form_triple(angle, signal.vq, medium.vq)?;
    let closed_p = closed_form_triple(angle, signal.vp, medium.vp)?;
    for (route, closed, tag) in [(generic_q, closed_q, "Q"), (generic_p, closed_p, "P")] {
        let worst = (route.c1 - closed.c1)
            .abs()
            .max((route.c2 - closed.c2).abs())
            .max((route.c3 - closed.c3).abs());
        if worst > ROUTE_AGREEMENT_TOL {
            return Err(Error::InternalDisagreement(format!(
                "moment-propagation and closed-form coefficients differ by {worst:.3e} in {tag}"
            )));
        }
    }

    let out_f = out.mode_moments("f")?;
    let out_xi = out.mode_moments("xi")?;
    let qnd_gain = if signal.vq > 0.0 {
        cross[(0, 2)] / signal.vq
    } else {
        cross[(1, 3)] / signal.vp
    };

    Ok(CorrelationReport {
        q: generic_q,
        p: generic_p,
        v_signal_in: (signal.vq, signal.vp),
        v_signal_out: (out_f.vq, out_f.vp),
        v_medium_in: (medium.vq, medium.vp),
        v_medium_out: (out_xi.vq, out_xi.vp),
        qnd_gain,
    })
}

/// Per-quadrature check of the storage conditions: the medium quadrature
/// variance must sit well below \u{3bd}\u{b2}/\u{3bc}\u{b2}, quantified by `margin`.
pub fn qnd_condition_check(
    medium: &SpinMoments,
    angle: PolaritonAngle,
    margin: f64,
) -> Result<(bool, bool)> {
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::Validation(format!(
            "margin must lie in (0, 1], got {margin}"
        )));
    }
    let bound = margin * angle.group_index();
    Ok((medium.vq <= bound, medium.vp <= bound))
}

pub const DEFAULT_QND_MARGIN: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{AtomicMedium, BecMedium, CoherentMedium};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn angle_from_rabi_balanced() {
        let a = PolaritonAngle::from_rabi(2.0, 2.0, 1).unwrap();
        assert_abs_diff_eq!(a.theta(), FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(a.group_index(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_from_rabi_no_signal_coupling() {
        let a = PolaritonAngle::from_rabi(2.0, 0.0, 100).unwrap();
        assert_eq!(a.theta(), 0.0);
        assert_eq!(a.group_index(), 0.0);
    }

    #[test]
    fn angle_from_rabi_group_index_three() {
        let a = PolaritonAngle::from_rabi(1.0, 3.0f64.sqrt(), 1).unwrap();
        assert_abs_diff_eq!(a.group_index(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.nu().powi(2), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn angle_rejects_singular_cases() {
        assert!(PolaritonAngle::from_rabi(0.0, 1.0, 10).is_err());
        assert!(PolaritonAngle::new(FRAC_PI_2).is_err());
        assert!(PolaritonAngle::new(-0.1).is_err());
    }

    #[test]
    fn angle_weights_consistent() {
        let a = PolaritonAngle::new(0.9).unwrap();
        assert_abs_diff_eq!(a.mu().powi(2) + a.nu().powi(2), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            a.group_index(),
            a.nu().powi(2) / a.mu().powi(2),
            epsilon = 1e-10
        );
    }

    #[test]
    fn storage_map_limits() {
        let id = storage_map(PolaritonAngle::new(0.0).unwrap());
        assert!((id.quadrature_matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
        // near pi/2 the rotation approaches a swap with a sign
        let swapish = storage_map(PolaritonAngle::new(FRAC_PI_2 - 1e-9).unwrap());
        let s = swapish.quadrature_matrix();
        assert_abs_diff_eq!(s[(0, 2)], -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s[(2, 0)], 1.0, epsilon = 1e-8);
        assert!(storage_map(PolaritonAngle::new(FRAC_PI_4).unwrap()).is_canonical());
    }

    #[test]
    fn optimum_condensate_point() {
        let medium = BecMedium::from_population(100, 0.5, FRAC_PI_4)
            .unwrap()
            .spin_moments();
        let report = correlation_report(
            &ModeMoments::vacuum(),
            &medium,
            PolaritonAngle::new(FRAC_PI_4).unwrap(),
        )
        .unwrap();
        for t in [report.q, report.p] {
            assert_abs_diff_eq!(t.c1, 2.0 / 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(t.c2, 2.0 / 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(t.c3, 1.0 / 9.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(report.qnd_gain, FRAC_PI_4.sin(), epsilon = 1e-12);
    }

    #[test]
    fn classical_limit_any_angle() {
        let medium = CoherentMedium.spin_moments();
        for theta in [0.0, 0.3, FRAC_PI_4, 1.2, 1.5] {
            let angle = PolaritonAngle::new(theta).unwrap();
            let r = correlation_report(&ModeMoments::vacuum(), &medium, angle).unwrap();
            assert_abs_diff_eq!(r.q.c1, angle.mu().powi(2), epsilon = 1e-12);
            assert_abs_diff_eq!(r.q.c2, angle.nu().powi(2), epsilon = 1e-12);
            assert_abs_diff_eq!(r.q.c3, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn dilute_fock_medium_closed_form() {
        // with V_xi = 1 + 2 n1 the triple collapses to
        //   C1 = mu^2/(1 + 2 nu^2 n1),  C2 = nu^2/(1 + 2 mu^2 n1),
        //   C3 = 4 mu^2 nu^2 n1^2 / (1 + 4 mu^2 nu^2 n1^2 + 2 n1),
        // algebraically exactly; checked here through the generic route.
        for n1 in [0u64, 1, 3, 7] {
            for theta in [0.4, FRAC_PI_4, 1.1] {
                let angle = PolaritonAngle::new(theta).unwrap();
                let v = 1.0 + 2.0 * n1 as f64;
                let medium = SpinMoments::new(0.0, 0.0, v, v, 0.0).unwrap();
                let r = correlation_report(&ModeMoments::vacuum(), &medium, angle).unwrap();
                let (mu2, nu2) = (angle.mu().powi(2), angle.nu().powi(2));
                let n1f = n1 as f64;
                assert_abs_diff_eq!(r.q.c1, mu2 / (1.0 + 2.0 * nu2 * n1f), epsilon = 1e-12);
                assert_abs_diff_eq!(r.q.c2, nu2 / (1.0 + 2.0 * mu2 * n1f), epsilon = 1e-12);
                assert_abs_diff_eq!(
                    r.q.c3,
                    4.0 * mu2 * nu2 * n1f * n1f
                        / (1.0 + 4.0 * mu2 * nu2 * n1f * n1f + 2.0 * n1f),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn partial_population_point_value() {
        // V_xi = 1 - 4*0.3*0.7*cos^2(pi/4) = 0.58, theta = pi/4:
        // C1 = 0.5/(0.5 + 0.29) = 1/1.58
        let medium = BecMedium::from_population(50, 0.3, FRAC_PI_4)
            .unwrap()
            .spin_moments();
        assert_abs_diff_eq!(medium.vq, 0.58, epsilon = 1e-14);
        let r = correlation_report(
            &ModeMoments::vacuum(),
            &medium,
            PolaritonAngle::new(FRAC_PI_4).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.q.c1, 1.0 / 1.58, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let signal = ModeMoments::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let medium = SpinMoments::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let err = correlation_report(
            &signal,
            &medium,
            PolaritonAngle::new(FRAC_PI_4).unwrap(),
        );
        assert!(matches!(err, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn condition_check_examples() {
        let angle = PolaritonAngle::new(FRAC_PI_4).unwrap();
        let quiet = SpinMoments::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(qnd_condition_check(&quiet, angle, 0.1).unwrap(), (true, true));

        let squeezed_q = SpinMoments::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(
            qnd_condition_check(&squeezed_q, angle, 0.1).unwrap(),
            (true, false)
        );

        let zero_angle = PolaritonAngle::new(0.0).unwrap();
        let generic = SpinMoments::new(0.0, 0.0, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(
            qnd_condition_check(&generic, zero_angle, 0.1).unwrap(),
            (false, false)
        );
        assert!(qnd_condition_check(&generic, angle, 0.0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // path independence of the two computation routes over a random
            // grid of angles and variances (the report itself errors if the
            // routes drift apart beyond 1e-10)
            #[test]
            fn routes_agree(
                theta in 0.01..1.55f64,
                v_f in 0.1..3.0f64,
                v_xi in 0.1..3.0f64,
            ) {
                let angle = PolaritonAngle::new(theta).unwrap();
                let signal = ModeMoments::new(0.2, -0.1, v_f, v_f, 0.0).unwrap();
                let medium = SpinMoments::new(0.0, 0.0, v_xi, v_xi, 0.0).unwrap();
                prop_assert!(correlation_report(&signal, &medium, angle).is_ok());
            }

            #[test]
            fn sum_property_at_equal_variances(theta in 0.01..1.55f64, v in 0.1..3.0f64) {
                let angle = PolaritonAngle::new(theta).unwrap();
                let t = closed_form_triple(angle, v, v).unwrap();
                prop_assert!((t.c1 + t.c2 - 1.0).abs() <= 1e-12);
                prop_assert!(t.c3 == 0.0);
            }

            #[test]
            fn ideal_limit_as_medium_quiets(theta in 0.05..1.5f64) {
                let angle = PolaritonAngle::new(theta).unwrap();
                let t = closed_form_triple(angle, 1.0, 1e-9).unwrap();
                prop_assert!(t.c1 > 1.0 - 1e-6 && t.c2 > 1.0 - 1e-6 && t.c3 > 1.0 - 1e-6);
            }

            #[test]
            fn monotone_in_variances(
                theta in 0.05..1.5f64,
                v_lo in 0.1..1.0f64,
                bump in 0.1..1.0f64,
            ) {
                let angle = PolaritonAngle::new(theta).unwrap();
                // C1 decreases in the medium variance at fixed theta
                let a = closed_form_triple(angle, 1.0, v_lo).unwrap();
                let b = closed_form_triple(angle, 1.0, v_lo + bump).unwrap();
                prop_assert!(b.c1 <= a.c1 + 1e-15);
                // C2 increases in the signal variance at fixed theta
                let a = closed_form_triple(angle, v_lo, 1.0).unwrap();
                let b = closed_form_triple(angle, v_lo + bump, 1.0).unwrap();
                prop_assert!(b.c2 >= a.c2 - 1e-15);
            }
        }
    }
}
