//! Adaptive embedded Dormand-Prince 5(4) integrator for small smooth
//! systems. Propagates the fifth-order solution with the fourth-order
//! embedding driving step control; first-same-as-last is exploited.

use crate::error::{Error, Result};

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;

pub struct Solution<const N: usize> {
    /// Accepted knots (t, y), starting with the initial condition and ending
    /// exactly at t_end.
    pub points: Vec<(f64, [f64; N])>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// Integrate dy/dt = f(t, y) from (t0, y0) to t_end with per-step weighted
/// RMS error control on (rel_tol, abs_tol).
pub fn solve<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Solution<N>> {
    if !(t_end > t0) {
        return Err(Error::Validation(format!(
            "integration span must be positive, got [{t0}, {t_end}]"
        )));
    }
    if !(rel_tol > 0.0 && abs_tol > 0.0) {
        return Err(Error::Validation("tolerances must be positive".into()));
    }
    let span = t_end - t0;
    let h_floor = span * 1e-14;

    let axpy = |y: &[f64; N], h: f64, ks: &[&[f64; N]], ws: &[f64]| -> [f64; N] {
        let mut out = *y;
        for (k, w) in ks.iter().zip(ws) {
            for i in 0..N {
                out[i] += h * w * k[i];
            }
        }
        out
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);

    // initial step from the scale of y and its derivative
    let scale_norm = |v: &[f64; N], yref: &[f64; N]| -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let w = abs_tol + rel_tol * yref[i].abs();
            s += (v[i] / w).powi(2);
        }
        (s / N as f64).sqrt()
    };
    let d0 = scale_norm(&y, &y);
    let d1 = scale_norm(&k1, &y);
    let mut h = if d0 > 1e-10 && d1 > 1e-10 {
        (0.01 * d0 / d1).min(0.05 * span)
    } else {
        1e-6 * span
    };

    let mut points = vec![(t, y)];
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    for _ in 0..MAX_STEPS {
        if t >= t_end {
            return Ok(Solution {
                points,
                steps_accepted: accepted,
                steps_rejected: rejected,
            });
        }
        if h < h_floor {
            return Err(Error::Stiffness { t, step: h });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        let k2 = f(t + h / 5.0, &axpy(&y, h, &[&k1], &[1.0 / 5.0]));
        let k3 = f(
            t + 3.0 / 10.0 * h,
            &axpy(&y, h, &[&k1, &k2], &[3.0 / 40.0, 9.0 / 40.0]),
        );
        let k4 = f(
            t + 4.0 / 5.0 * h,
            &axpy(
                &y,
                h,
                &[&k1, &k2, &k3],
                &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
            ),
        );
        let k5 = f(
            t + 8.0 / 9.0 * h,
            &axpy(
                &y,
                h,
                &[&k1, &k2, &k3, &k4],
                &[
                    19372.0 / 6561.0,
                    -25360.0 / 2187.0,
                    64448.0 / 6561.0,
                    -212.0 / 729.0,
                ],
            ),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[&k1, &k2, &k3, &k4, &k5],
                &[
                    9017.0 / 3168.0,
                    -355.0 / 33.0,
                    46732.0 / 5247.0,
                    49.0 / 176.0,
                    -5103.0 / 18656.0,
                ],
            ),
        );
        let y5 = axpy(
            &y,
            h,
            &[&k1, &k3, &k4, &k5, &k6],
            &[
                35.0 / 384.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        );
        let k7 = f(t + h, &y5);

        // embedded error: fifth minus fourth order weights
        let mut err = [0.0; N];
        let e = [
            71.0 / 57_600.0,
            0.0,
            -71.0 / 16_695.0,
            71.0 / 1_920.0,
            -17_253.0 / 339_200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        for (k, w) in [&k1, &k2, &k3, &k4, &k5, &k6, &k7].iter().zip(e) {
            for i in 0..N {
                err[i] += h * w * k[i];
            }
        }
        let mut norm = 0.0;
        for i in 0..N {
            let w = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            norm += (err[i] / w).powi(2);
        }
        let norm = (norm / N as f64).sqrt();

        if norm <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y5;
            k1 = k7;
            points.push((t, y));
            accepted += 1;
        } else {
            rejected += 1;
        }
        let scale = if norm == 0.0 {
            MAX_SCALE
        } else {
            (SAFETY * norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };
        h *= scale;
    }
    Err(Error::Stiffness { t, step: h })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_high_accuracy() {
        let sol = solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, 1e-10, 1e-12).unwrap();
        let (t, y) = *sol.points.last().unwrap();
        assert_eq!(t, 3.0);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let sol = solve(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            20.0 * std::f64::consts::PI,
            1e-10,
            1e-12,
        )
        .unwrap();
        let (_, y) = *sol.points.last().unwrap();
        let energy = y[0] * y[0] + y[1] * y[1];
        assert!((energy - 1.0).abs() < 1e-8);
        assert!((y[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn tighter_tolerance_means_smaller_error() {
        let run = |rtol: f64| {
            let sol = solve(
                |t, y: &[f64; 1]| [y[0] * t.cos()],
                0.0,
                [1.0],
                10.0,
                rtol,
                rtol * 1e-2,
            )
            .unwrap();
            let (t, y) = *sol.points.last().unwrap();
            (y[0] - t.sin().exp()).abs()
        };
        assert!(run(1e-12) < run(1e-6));
        assert!(run(1e-6) < run(1e-3));
    }

    #[test]
    fn rejects_bad_span_and_tolerances() {
        assert!(solve(|_, y: &[f64; 1]| *y, 1.0, [1.0], 0.0, 1e-8, 1e-8).is_err());
        assert!(solve(|_, y: &[f64; 1]| *y, 0.0, [1.0], 1.0, 0.0, 1e-8).is_err());
    }

    #[test]
    fn finite_time_blowup_reports_stiffness() {
        // dy/dt = y^2 from y(0) = 1 diverges at t = 1; the step size
        // underflows there and the failure is surfaced with its location.
        let r = solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, 1e-10, 1e-12);
        match r {
            Err(Error::Stiffness { t, .. }) => assert!((t - 1.0).abs() < 1e-3),
            Err(other) => panic!("expected stiffness, got {other:?}"),
            Ok(_) => panic!("expected stiffness, integration succeeded"),
        }
    }
}
