//! Analytic-vs-oracle comparison suite: every closed form the library leans
//! on is recomputed in the truncated Fock space and tabulated with its
//! deviation and tolerance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloning::{self, balanced_angle};
use crate::error::Result;
use crate::fock::{FockState, ModePrep, Observable};
use crate::gaussian::{GaussianState, ModeMoments};
use crate::medium::{AtomicMedium, BecMedium, CoherentMedium, FockMedium};
use crate::qnd::{closed_form_triple, storage_map, PolaritonAngle};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleCheckConfig {
    /// Max occupation per mode in the randomized scenarios.
    pub cutoff: usize,
    pub scenarios: usize,
    pub seed: u64,
    /// Atom numbers for the condensate-variance convergence sweep.
    pub n_sweep: Vec<u64>,
    /// Self-test hook: shrink every tolerance so the suite must fail.
    pub corrupt_tolerances: bool,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            cutoff: 30,
            scenarios: 20,
            seed: 7,
            n_sweep: vec![10, 20, 50, 100],
            corrupt_tolerances: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub passed: bool,
    pub runtime_seconds: f64,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<44} delta {:>12.4e}  tol {:>9.1e}  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.delta,
                c.tolerance,
                c.detail
            ));
        }
        out.push_str(&format!(
            "oracle-check: {} of {} checks passed in {:.2} s\n",
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len(),
            self.runtime_seconds
        ));
        out
    }
}

fn check(name: impl Into<String>, delta: f64, tolerance: f64, detail: impl Into<String>) -> OracleCheck {
    OracleCheck {
        name: name.into(),
        delta,
        tolerance,
        pass: delta.is_finite() && delta <= tolerance,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, Copy)]
enum ScenarioPrep {
    Coherent(Complex64),
    DisplacedSqueezed { alpha: Complex64, s: f64 },
}

impl ScenarioPrep {
    fn engine_moments(&self) -> ModeMoments {
        match self {
            ScenarioPrep::Coherent(a) => ModeMoments {
                mean_q: 2.0 * a.re,
                mean_p: 2.0 * a.im,
                vq: 1.0,
                vp: 1.0,
                cov_qp: 0.0,
            },
            ScenarioPrep::DisplacedSqueezed { alpha, s } => ModeMoments {
                mean_q: 2.0 * alpha.re,
                mean_p: 2.0 * alpha.im,
                vq: (2.0 * s).exp(),
                vp: (-2.0 * s).exp(),
                cov_qp: 0.0,
            },
        }
    }

    fn describe(&self) -> String {
        match self {
            ScenarioPrep::Coherent(a) => format!("coh({:.2}{:+.2}i)", a.re, a.im),
            ScenarioPrep::DisplacedSqueezed { alpha, s } => {
                format!("sq(s={s:.2})+disp({:.2}{:+.2}i)", alpha.re, alpha.im)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ScenarioMap {
    Beamsplitter(f64),
    Squeezer(f64),
}

#[derive(Debug, Clone, Copy)]
struct Scenario {
    prep_a: ScenarioPrep,
    prep_b: ScenarioPrep,
    map: ScenarioMap,
}

fn random_prep(rng: &mut ChaCha8Rng) -> ScenarioPrep {
    let alpha = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    if rng.gen_bool(0.5) {
        ScenarioPrep::Coherent(alpha)
    } else {
        ScenarioPrep::DisplacedSqueezed {
            alpha,
            s: rng.gen_range(-0.4..0.4),
        }
    }
}

fn run_scenario(sc: &Scenario, cutoff: usize) -> Result<f64> {
    let dim = cutoff + 1;
    // oracle side
    let build = |prep: &ScenarioPrep, label: &str| -> Result<FockState> {
        match prep {
            ScenarioPrep::Coherent(a) => {
                FockState::product(&[(label, dim, ModePrep::Coherent(*a))])
            }
            ScenarioPrep::DisplacedSqueezed { alpha, s } => {
                FockState::product(&[(label, dim, ModePrep::SqueezedVacuum { s: *s })])?
                    .apply_displacement(label, *alpha)
            }
        }
    };
    let input = build(&sc.prep_a, "a")?.tensor(&build(&sc.prep_b, "b")?)?;
    let evolved = match sc.map {
        ScenarioMap::Beamsplitter(theta) => input.apply_beamsplitter("a", "b", theta)?,
        ScenarioMap::Squeezer(gain) => input.apply_two_mode_squeezer("a", "b", gain)?,
    };
    let obs = [
        Observable::Q(0),
        Observable::P(0),
        Observable::Q(1),
        Observable::P(1),
    ];
    let (oracle_means, oracle_cov) = evolved.moments(&obs);

    // engine side
    let st = GaussianState::vacuum(&["a", "b"])?
        .set_mode_moments("a", sc.prep_a.engine_moments())?
        .set_mode_moments("b", sc.prep_b.engine_moments())?;
    let map = match sc.map {
        ScenarioMap::Beamsplitter(theta) => storage_map(PolaritonAngle::new(theta)?),
        ScenarioMap::Squeezer(gain) => {
            let r = gain.acosh();
            let (ch, sh) = (r.cosh(), r.sinh());
            let z = Complex64::new(0.0, 0.0);
            crate::gaussian::ModeMap::new(
                nalgebra::DMatrix::from_row_slice(
                    2,
                    2,
                    &[Complex64::new(ch, 0.0), z, z, Complex64::new(ch, 0.0)],
                ),
                nalgebra::DMatrix::from_row_slice(
                    2,
                    2,
                    &[z, Complex64::new(sh, 0.0), Complex64::new(sh, 0.0), z],
                ),
            )?
        }
    };
    let (out, _) = st.apply_map(&map, &["a", "b"], &["a", "b"])?;

    let mut delta: f64 = 0.0;
    for i in 0..4 {
        delta = delta.max((oracle_means[i] - out.means()[i]).abs());
        for j in 0..4 {
            delta = delta.max((oracle_cov[(i, j)] - out.cov()[(i, j)]).abs());
        }
    }
    Ok(delta)
}

/// Symmetrized covariance between an observable on the input state and an
/// observable on the evolved state, Cov(O_in, U\u{207a} O_out U).
fn two_time_cov(
    input: &FockState,
    evolved: &FockState,
    evolve: impl Fn(&FockState) -> Result<FockState>,
    obs_in: Observable,
    obs_out: Observable,
) -> Result<f64> {
    let (phi, scale) = input.with_raw_amplitudes(input.apply_observable(&obs_in))?;
    let phi_out = evolve(&phi)?;
    let out_applied = evolved.apply_observable(&obs_out);
    let second: Complex64 = phi_out
        .amplitudes()
        .iter()
        .zip(&out_applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    let (mean_in, _) = input.moments(&[obs_in]);
    let (mean_out, _) = evolved.moments(&[obs_out]);
    Ok(scale * second.re - mean_in[0] * mean_out[0])
}

fn scenario_checks(cfg: &OracleCheckConfig, tol_scale: f64) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scenarios: Vec<Scenario> = (0..cfg.scenarios)
        .map(|_| {
            let prep_a = random_prep(&mut rng);
            let prep_b = random_prep(&mut rng);
            let map = if rng.gen_bool(0.7) {
                ScenarioMap::Beamsplitter(rng.gen_range(0.15..1.42))
            } else {
                ScenarioMap::Squeezer(rng.gen_range(1.02..1.15))
            };
            Scenario {
                prep_a,
                prep_b,
                map,
            }
        })
        .collect();
    scenarios
        .par_iter()
        .enumerate()
        .map(|(i, sc)| {
            let delta = run_scenario(sc, cfg.cutoff)?;
            let map_desc = match sc.map {
                ScenarioMap::Beamsplitter(t) => format!("bs({t:.3})"),
                ScenarioMap::Squeezer(g) => format!("tms({g:.3})"),
            };
            Ok(check(
                format!("moments-scenario-{i:02}"),
                delta,
                1e-8 * tol_scale,
                format!(
                    "{} x {} through {map_desc} at cutoff {}",
                    sc.prep_a.describe(),
                    sc.prep_b.describe(),
                    cfg.cutoff
                ),
            ))
        })
        .collect()
}

fn condensate_variance_checks(cfg: &OracleCheckConfig, tol_scale: f64) -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    for &n in &cfg.n_sweep {
        let bec = BecMedium::from_population(n, 0.5, std::f64::consts::FRAC_PI_4)?;
        let closed = bec.spin_moments();
        let exact = bec.exact_moments()?;
        let st = FockState::bec_pair("a1", "a2", n, bec.alpha1(), bec.alpha2(), 3)?;
        let (_, cov) = st.moments(&[
            Observable::SpinQ {
                level1: 0,
                level2: 1,
                n_ref: n,
            },
            Observable::SpinP {
                level1: 0,
                level2: 1,
                n_ref: n,
            },
        ]);
        let d_oracle = (cov[(0, 0)] - closed.vq)
            .abs()
            .max((cov[(1, 1)] - closed.vp).abs());
        let d_binomial = (exact.vq - closed.vq).abs().max((exact.vp - closed.vp).abs());
        let delta = d_oracle.max(d_binomial);
        errors.push(delta);
        checks.push(check(
            format!("condensate-variance-N{n:03}"),
            delta,
            (5.0 / n as f64) * tol_scale,
            "finite-N spin variance vs closed form (Fock + binomial routes)",
        ));
    }
    // convergence trend: above the rounding floor the error must not grow
    let floor = 1e-12;
    let mut trend_ok = true;
    for w in errors.windows(2) {
        if w[1] > floor && w[1] > w[0].max(floor) {
            trend_ok = false;
        }
    }
    let worst = errors.iter().cloned().fold(0.0f64, f64::max);
    checks.push(check(
        "condensate-variance-trend",
        if trend_ok { 0.0 } else { 1.0 },
        0.5 * tol_scale,
        format!(
            "errors over N sweep: {} (non-increasing above {floor:.0e}; closed form is exact, so all sit at rounding level, max {worst:.2e})",
            errors
                .iter()
                .map(|e| format!("{e:.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ));
    Ok(checks)
}

fn fock_structure_checks(tol_scale: f64) -> Result<Vec<OracleCheck>> {
    let (n1, n2) = (2u64, 98u64);
    let medium = FockMedium::new(n1, n2)?;
    let st = FockState::product(&[
        ("a1", n1 as usize + 3, ModePrep::Number(n1 as usize)),
        ("a2", n2 as usize + 3, ModePrep::Number(n2 as usize)),
    ])?;
    let n = n1 + n2;
    let (_, cov) = st.moments(&[Observable::SpinQ {
        level1: 0,
        level2: 1,
        n_ref: n,
    }]);
    let d_exact = (cov[(0, 0)] - medium.spin_moments().vq).abs();
    // the exact variance differs from the dilute-limit value 1 + 2 n1 by
    // exactly 2 n1^2 / N
    let dilute_gap = (medium.spin_moments().vq - (1.0 + 2.0 * n1 as f64)
        + 2.0 * (n1 as f64).powi(2) / n as f64)
        .abs();
    Ok(vec![
        check(
            "fock-variance-exact",
            d_exact,
            1e-12 * tol_scale,
            format!("(n1, n2) = ({n1}, {n2}) spin variance vs closed form"),
        ),
        check(
            "fock-variance-dilute-structure",
            dilute_gap,
            1e-12 * tol_scale,
            "exact variance equals 1 + 2 n1 - 2 n1^2/N identically",
        ),
    ])
}

fn storage_correlation_check(tol_scale: f64) -> Result<OracleCheck> {
    // closed-form correlation triple against genuinely two-time Fock-space
    // correlators, with the collective excitation realized as a bosonic
    // mode in a squeezed state
    let theta = 0.6f64;
    let s = -0.35f64; // V_Q = e^{2s} < 1, V_P = e^{-2s}
    let dim = 26;
    let input = FockState::product(&[
        ("f", dim, ModePrep::Coherent(Complex64::new(0.35, -0.2))),
        ("x", dim, ModePrep::SqueezedVacuum { s }),
    ])?;
    let evolve = |st: &FockState| st.apply_beamsplitter("f", "x", theta);
    let evolved = evolve(&input)?;

    let mut delta: f64 = 0.0;
    for (q_like, v_xi) in [(true, (2.0 * s).exp()), (false, (-2.0 * s).exp())] {
        let (obs_f, obs_x) = if q_like {
            (Observable::Q(0), Observable::Q(1))
        } else {
            (Observable::P(0), Observable::P(1))
        };
        let (_, var_in) = input.moments(&[obs_f]);
        let (_, var_out) = evolved.moments(&[obs_f, obs_x]);
        let c_in_out = two_time_cov(&input, &evolved, evolve, obs_f, obs_f)?;
        let c_in_store = two_time_cov(&input, &evolved, evolve, obs_f, obs_x)?;
        let c1 = c_in_out * c_in_out / (var_in[(0, 0)] * var_out[(0, 0)]);
        let c2 = c_in_store * c_in_store / (var_in[(0, 0)] * var_out[(1, 1)]);
        let (_, cov_out) = evolved.moments(&[obs_f, obs_x]);
        let c3 = cov_out[(0, 1)].powi(2) / (cov_out[(0, 0)] * cov_out[(1, 1)]);
        let closed = closed_form_triple(PolaritonAngle::new(theta)?, 1.0, v_xi)?;
        delta = delta
            .max((c1 - closed.c1).abs())
            .max((c2 - closed.c2).abs())
            .max((c3 - closed.c3).abs());
    }
    Ok(check(
        "storage-correlation-two-time",
        delta,
        1e-8 * tol_scale,
        "closed-form C1..C3 vs two-time Fock correlators (bosonic squeezed medium)",
    ))
}

fn coherent_cloner_check(tol_scale: f64) -> Result<OracleCheck> {
    let alpha = Complex64::new(0.45, 0.3);
    let (df, dc, dx) = (60, 60, 26);
    let input = FockState::product(&[
        ("f", df, ModePrep::Coherent(alpha)),
        ("c", dc, ModePrep::Vacuum),
        ("x", dx, ModePrep::Vacuum),
    ])?;
    let evolve = |st: &FockState| -> Result<FockState> {
        st.apply_two_mode_squeezer("f", "c", std::f64::consts::SQRT_2)?
            .apply_beamsplitter("f", "x", std::f64::consts::FRAC_PI_4)
    };
    let evolved = evolve(&input)?;

    let signal = ModeMoments::with_means(2.0 * alpha.re, 2.0 * alpha.im);
    let engine = cloning::clone_signal(&signal, &CoherentMedium, balanced_angle(), 1e-6)?;

    let obs = [
        Observable::Q(0),
        Observable::P(0),
        Observable::Q(2),
        Observable::P(2),
    ];
    let (means, cov) = evolved.moments(&obs);
    let mut delta: f64 = 0.0;
    for (got, want) in [
        (means[0], engine.bright.mean_q),
        (means[1], engine.bright.mean_p),
        (means[2], engine.dark.mean_q),
        (means[3], engine.dark.mean_p),
        (cov[(0, 0)], engine.bright.vq),
        (cov[(1, 1)], engine.bright.vp),
        (cov[(2, 2)], engine.dark.vq),
        (cov[(3, 3)], engine.dark.vp),
    ] {
        delta = delta.max((got - want).abs());
    }
    // correlation triples from two-time and clone-clone covariances
    let (_, var_in) = input.moments(&[Observable::Q(0)]);
    let c1_cov = two_time_cov(&input, &evolved, evolve, Observable::Q(0), Observable::Q(0))?;
    let c2_cov = two_time_cov(&input, &evolved, evolve, Observable::Q(0), Observable::Q(2))?;
    let c1 = c1_cov * c1_cov / (var_in[(0, 0)] * cov[(0, 0)]);
    let c2 = c2_cov * c2_cov / (var_in[(0, 0)] * cov[(2, 2)]);
    let c3 = cov[(0, 2)].powi(2) / (cov[(0, 0)] * cov[(2, 2)]);
    delta = delta
        .max((c1 - engine.q.c1).abs())
        .max((c2 - engine.q.c2).abs())
        .max((c3 - engine.q.c3).abs());
    Ok(check(
        "coherent-cloner-contracts",
        delta,
        1e-8 * tol_scale,
        "amplifier + balanced mixing on vacuum medium vs moment engine (means, noises, C1..C3)",
    ))
}

fn condensate_cloner_checks(tol_scale: f64) -> Result<Vec<OracleCheck>> {
    // True spin-mode cloning against the engine's bosonic-excitation
    // treatment. The replacement is controlled by the excitation density
    // n1/N, so the gap is probed at fixed mean excitation n1 = 1/2 and
    // growing N, where it shrinks like 1/N (measured N * gap -> about 5).
    // At half filling the commutator of the excitation averages to zero and
    // the gap stays O(1); that regime is a property of the linear
    // treatment, not a numerical defect.
    let run = |n: u64| -> Result<f64> {
        let alpha = Complex64::new(0.25, 0.0);
        let bec = BecMedium::from_population(n, 0.5 / n as f64, std::f64::consts::FRAC_PI_4)?;
        let pad = 3;
        let field = FockState::product(&[
            ("f", 46, ModePrep::Coherent(alpha)),
            ("c", 46, ModePrep::Vacuum),
        ])?;
        let atoms = FockState::bec_pair("a1", "a2", n, bec.alpha1(), bec.alpha2(), pad)?;
        let input = field.tensor(&atoms)?;
        let evolved = input
            .apply_two_mode_squeezer("f", "c", std::f64::consts::SQRT_2)?
            .apply_spin_exchange("f", "a1", "a2", std::f64::consts::FRAC_PI_4, n)?;

        let signal = ModeMoments::with_means(2.0 * alpha.re, 2.0 * alpha.im);
        let engine = cloning::clone_signal(&signal, &bec, balanced_angle(), 1e-6)?;

        let spin_q = Observable::SpinQ {
            level1: 2,
            level2: 3,
            n_ref: n,
        };
        let spin_p = Observable::SpinP {
            level1: 2,
            level2: 3,
            n_ref: n,
        };
        let obs = [Observable::Q(0), Observable::P(0), spin_q, spin_p];
        let (means, cov) = evolved.moments(&obs);
        let mut delta: f64 = 0.0;
        for (got, want) in [
            (means[0], engine.bright.mean_q),
            (means[1], engine.bright.mean_p),
            (means[2], engine.dark.mean_q),
            (means[3], engine.dark.mean_p),
            (cov[(0, 0)], engine.bright.vq),
            (cov[(1, 1)], engine.bright.vp),
            (cov[(2, 2)], engine.dark.vq),
            (cov[(3, 3)], engine.dark.vp),
        ] {
            delta = delta.max((got - want).abs());
        }
        Ok(delta)
    };
    let (n_lo, n_hi) = (8u64, 32u64);
    let d_lo = run(n_lo)?;
    let d_hi = run(n_hi)?;
    Ok(vec![
        check(
            "condensate-cloner-spin-vs-boson",
            d_hi,
            (8.0 / n_hi as f64) * tol_scale,
            format!("replacement gap at N = {n_hi}, mean excitation 1/2"),
        ),
        check(
            "condensate-cloner-convergence",
            d_hi / d_lo.max(1e-300),
            0.45 * tol_scale,
            format!("gap ratio over a 4x atom-number step: {d_hi:.3e} / {d_lo:.3e} tracks 1/N"),
        ),
    ])
}

pub fn oracle_check(cfg: &OracleCheckConfig) -> Result<OracleReport> {
    let start = std::time::Instant::now();
    let tol_scale = if cfg.corrupt_tolerances { 1e-9 } else { 1.0 };
    let mut checks = Vec::new();
    checks.extend(scenario_checks(cfg, tol_scale)?);
    checks.extend(condensate_variance_checks(cfg, tol_scale)?);
    checks.extend(fock_structure_checks(tol_scale)?);
    checks.push(storage_correlation_check(tol_scale)?);
    checks.push(coherent_cloner_check(tol_scale)?);
    checks.extend(condensate_cloner_checks(tol_scale)?);
    let passed = checks.iter().all(|c| c.pass);
    Ok(OracleReport {
        passed,
        runtime_seconds: start.elapsed().as_secs_f64(),
        checks,
    })
}
