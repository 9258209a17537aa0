//! Parameter sweeps, run reports and the oracle check suite behind the CLI.
//!
//! Everything here is deterministic: identical configurations produce
//! byte-identical tables. Sweep points evaluate concurrently; assembly is
//! ordered.

pub mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloning::{self, CloneReport};
use crate::error::{Error, Result};
use crate::gaussian::ModeMoments;
use crate::medium::{build_medium, BecMedium, MediumSpec, DEFAULT_ADIABATIC_RATIO};
use crate::qnd::{self, PolaritonAngle, DEFAULT_QND_MARGIN};
use crate::stirap::{
    self, presets, resolve_variant, Diagnostics, StirapParams, StirapState, Trajectory,
    DEFAULT_ABS_TOL, DEFAULT_REL_TOL,
};

pub mod csvfmt {
    /// 17 significant digits, fixed format, so identical configurations
    /// produce byte-identical files.
    pub fn g17(x: f64) -> String {
        if x.is_nan() {
            return "nan".into();
        }
        format!("{x:.16e}")
    }
}

/// A rectangular numeric table with a `# key=value` metadata block; the
/// common currency of every CSV this crate emits.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|x| csvfmt::g17(*x)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// First/second moments of the incoming signal mode, as configured.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalSpec {
    pub mean_q: f64,
    pub mean_p: f64,
    pub vq: f64,
    pub vp: f64,
    pub cov_qp: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            mean_q: 0.0,
            mean_p: 0.0,
            vq: 1.0,
            vp: 1.0,
            cov_qp: 0.0,
        }
    }
}

impl SignalSpec {
    pub fn moments(&self) -> Result<ModeMoments> {
        ModeMoments::new(self.mean_q, self.mean_p, self.vq, self.vp, self.cov_qp)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggedMedium {
    pub tag: String,
    #[serde(flatten)]
    pub spec: MediumSpec,
}

/// Correlation-coefficient sweep over the mixing angle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QndSweepConfig {
    /// Number of grid points over [0, pi/2).
    pub grid: usize,
    pub margin: f64,
    pub signal: SignalSpec,
    pub media: Vec<TaggedMedium>,
}

impl Default for QndSweepConfig {
    fn default() -> Self {
        // default pair of condensate preparations for the angle sweep:
        // |alpha1|^2 = 0.3 at relative phase pi/4 and 0
        Self {
            grid: 201,
            margin: DEFAULT_QND_MARGIN,
            signal: SignalSpec::default(),
            media: vec![
                TaggedMedium {
                    tag: "phi_quarter_pi".into(),
                    spec: MediumSpec::bec(100, 0.3, std::f64::consts::FRAC_PI_4),
                },
                TaggedMedium {
                    tag: "phi_zero".into(),
                    spec: MediumSpec::bec(100, 0.3, 0.0),
                },
            ],
        }
    }
}

/// Per-medium sweep product: the angle table plus a small summary with the
/// storage-condition verdict at balanced mixing.
#[derive(Debug, Clone, Serialize)]
pub struct QndSweepOutput {
    pub tag: String,
    pub medium: String,
    pub table: Table,
    pub v_medium: (f64, f64),
    pub margin: f64,
    pub conditions_at_balanced: (bool, bool),
}

pub fn qnd_sweep(cfg: &QndSweepConfig) -> Result<Vec<QndSweepOutput>> {
    if cfg.grid < 2 {
        return Err(Error::Validation("sweep grid needs at least 2 points".into()));
    }
    if cfg.media.is_empty() {
        return Err(Error::Validation("no media configured for the sweep".into()));
    }
    let signal = cfg.signal.moments()?;
    let header: Vec<String> = [
        "theta", "C1_Q", "C2_Q", "C3_Q", "C1_P", "C2_P", "C3_P", "V_Q_xi", "V_P_xi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    cfg.media
        .iter()
        .map(|entry| {
            let medium = build_medium(&entry.spec)?;
            let spin = medium.spin_moments();
            let rows = (0..cfg.grid)
                .into_par_iter()
                .map(|k| {
                    let theta =
                        k as f64 * std::f64::consts::FRAC_PI_2 / cfg.grid as f64;
                    let angle = PolaritonAngle::new(theta)?;
                    let r = qnd::correlation_report(&signal, &spin, angle)?;
                    Ok(vec![
                        theta, r.q.c1, r.q.c2, r.q.c3, r.p.c1, r.p.c2, r.p.c3, spin.vq,
                        spin.vp,
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let balanced = PolaritonAngle::new(std::f64::consts::FRAC_PI_4)?;
            let conditions = qnd::qnd_condition_check(&spin, balanced, cfg.margin)?;
            let metadata = vec![
                ("command".into(), "qnd-sweep".into()),
                ("tag".into(), entry.tag.clone()),
                ("medium".into(), medium.describe()),
                ("grid".into(), cfg.grid.to_string()),
                ("margin".into(), csvfmt::g17(cfg.margin)),
                ("signal.vq".into(), csvfmt::g17(signal.vq)),
                ("signal.vp".into(), csvfmt::g17(signal.vp)),
                ("signal.mean_q".into(), csvfmt::g17(signal.mean_q)),
                ("signal.mean_p".into(), csvfmt::g17(signal.mean_p)),
            ];
            Ok(QndSweepOutput {
                tag: entry.tag.clone(),
                medium: medium.describe(),
                table: Table {
                    name: format!("qnd_sweep_{}", entry.tag),
                    metadata,
                    header: header.clone(),
                    rows,
                },
                v_medium: (spin.vq, spin.vp),
                margin: cfg.margin,
                conditions_at_balanced: conditions,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridRange {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 1.0,
            points: 10,
        }
    }
}

impl GridRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.max > self.min) {
            return Err(Error::Validation(format!(
                "bad grid range [{}, {}] x {}",
                self.min, self.max, self.points
            )));
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| self.min + k as f64 * step).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloneGridConfig {
    pub n_atoms: u64,
    pub alpha1_sq: GridRange,
    pub phi: GridRange,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CloneRunConfig {
    /// Mixing angle; the cloner contracts hold at pi/4.
    pub theta: f64,
    pub theta_tolerance: f64,
    pub signal: SignalSpec,
    pub medium: MediumSpec,
    pub grid: Option<CloneGridConfig>,
}

impl Default for CloneRunConfig {
    fn default() -> Self {
        Self {
            theta: std::f64::consts::FRAC_PI_4,
            theta_tolerance: cloning::DEFAULT_THETA_TOLERANCE,
            signal: SignalSpec::default(),
            medium: MediumSpec::coherent(),
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CloneRunOutput {
    pub medium: String,
    pub report: CloneReport,
    #[serde(skip)]
    pub grid_table: Option<Table>,
}

pub fn clone_run(cfg: &CloneRunConfig) -> Result<CloneRunOutput> {
    let medium = build_medium(&cfg.medium)?;
    let angle = PolaritonAngle::new(cfg.theta)?;
    let signal = cfg.signal.moments()?;
    let report = cloning::clone_signal(&signal, medium.as_ref(), angle, cfg.theta_tolerance)?;

    let grid_table = match &cfg.grid {
        None => None,
        Some(grid) => {
            let a_vals = grid.alpha1_sq.values()?;
            let phi_vals = grid.phi.values()?;
            let cells: Vec<(f64, f64)> = a_vals
                .iter()
                .flat_map(|a| phi_vals.iter().map(move |p| (*a, *p)))
                .collect();
            let rows = cells
                .into_par_iter()
                .map(|(a1sq, phi)| {
                    let m = BecMedium::from_population(grid.n_atoms, a1sq, phi)?;
                    let r = cloning::clone_signal(&signal, &m, angle, cfg.theta_tolerance)?;
                    Ok(vec![
                        a1sq,
                        phi,
                        r.added_noise_q,
                        r.added_noise_p,
                        r.fidelity,
                        r.q.c1,
                        r.q.c2,
                        r.q.c3,
                        r.p.c1,
                        r.p.c2,
                        r.p.c3,
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            Some(Table {
                name: "clone_grid".into(),
                metadata: vec![
                    ("command".into(), "clone-report".into()),
                    ("n_atoms".into(), grid.n_atoms.to_string()),
                    ("theta".into(), csvfmt::g17(cfg.theta)),
                    ("signal.vq".into(), csvfmt::g17(signal.vq)),
                    ("signal.vp".into(), csvfmt::g17(signal.vp)),
                ],
                header: [
                    "alpha1_sq",
                    "phi",
                    "added_noise_q",
                    "added_noise_p",
                    "fidelity",
                    "C1_Q",
                    "C2_Q",
                    "C3_Q",
                    "C1_P",
                    "C2_P",
                    "C3_P",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
                rows,
            })
        }
    };

    Ok(CloneRunOutput {
        medium: medium.describe(),
        report,
        grid_table,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct InitialAmplitudes {
    pub amp1: (f64, f64),
    pub amp2: (f64, f64),
    pub amp3: (f64, f64),
    pub ampf: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StirapRunConfig {
    /// Named starting point; explicit params/initial/t values override its
    /// fields when given.
    pub preset: String,
    pub variant: String,
    pub compare_variants: bool,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub adiabatic_ratio: f64,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub params: Option<StirapParams>,
    pub initial: Option<InitialAmplitudes>,
}

impl Default for StirapRunConfig {
    fn default() -> Self {
        Self {
            preset: "adiabatic-transfer".into(),
            variant: "printed".into(),
            compare_variants: false,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            adiabatic_ratio: DEFAULT_ADIABATIC_RATIO,
            t_start: None,
            t_end: None,
            params: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StirapVariantSummary {
    pub variant: String,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub adiabatic_fraction: f64,
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct StirapDiff {
    pub max_abs_population_gap_at_end: f64,
    pub molecular_fraction_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StirapRunOutput {
    pub summaries: Vec<StirapVariantSummary>,
    pub diff: Option<StirapDiff>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

fn resolve_setup(cfg: &StirapRunConfig) -> Result<(StirapState, StirapParams, f64)> {
    let preset = presets::by_name(&cfg.preset).ok_or_else(|| Error::UnknownStrategy {
        kind: "stirap preset",
        name: cfg.preset.clone(),
        known: "adiabatic-transfer, quiescent".into(),
    })?;
    let params = cfg.params.clone().unwrap_or(preset.params);
    let mut initial = preset.initial;
    if let Some(amps) = &cfg.initial {
        initial = StirapState::new(
            num_complex::Complex64::new(amps.amp1.0, amps.amp1.1),
            num_complex::Complex64::new(amps.amp2.0, amps.amp2.1),
            num_complex::Complex64::new(amps.amp3.0, amps.amp3.1),
            num_complex::Complex64::new(amps.ampf.0, amps.ampf.1),
            initial.t,
        );
    }
    if let Some(t0) = cfg.t_start {
        initial.t = t0;
    }
    let t_end = cfg.t_end.unwrap_or(preset.t_end);
    Ok((initial, params, t_end))
}

fn trajectory_table(
    name: &str,
    variant: &str,
    cfg: &StirapRunConfig,
    traj: &Trajectory,
    params: &StirapParams,
) -> Table {
    let angles = stirap::eit_angle_trace(traj, params);
    let rows = traj
        .samples
        .iter()
        .zip(&angles)
        .map(|(s, th)| {
            let [n1, n2, n3, nf] = s.populations();
            vec![
                s.t,
                s.amp1.re,
                s.amp1.im,
                s.amp2.re,
                s.amp2.im,
                s.amp3.re,
                s.amp3.im,
                s.ampf.re,
                s.ampf.im,
                n1,
                n2,
                n3,
                nf,
                s.charge_atoms(),
                s.charge_field(),
                th.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    Table {
        name: name.into(),
        metadata: vec![
            ("command".into(), "stirap-run".into()),
            ("preset".into(), cfg.preset.clone()),
            ("variant".into(), variant.into()),
            ("rel_tol".into(), csvfmt::g17(cfg.rel_tol)),
            ("abs_tol".into(), csvfmt::g17(cfg.abs_tol)),
            ("kappa".into(), format!("{}", params.kappa)),
            ("omega2_peak".into(), format!("{}", params.omega2_peak)),
            (
                "kappa_pulse".into(),
                format!(
                    "{:?}@{}+-{}",
                    params.kappa_pulse.shape, params.kappa_pulse.center, params.kappa_pulse.width
                ),
            ),
            (
                "omega2_pulse".into(),
                format!(
                    "{:?}@{}+-{}",
                    params.omega2_pulse.shape,
                    params.omega2_pulse.center,
                    params.omega2_pulse.width
                ),
            ),
        ],
        header: [
            "t", "re_a1", "im_a1", "re_a2", "im_a2", "re_a3", "im_a3", "re_f", "im_f", "n1",
            "n2", "n3", "nf", "Q1", "Q2", "theta",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows,
    }
}

pub fn stirap_run(cfg: &StirapRunConfig) -> Result<StirapRunOutput> {
    let (initial, params, t_end) = resolve_setup(cfg)?;
    let variants: Vec<&str> = if cfg.compare_variants {
        vec!["printed", "symmetrized"]
    } else {
        vec![cfg.variant.as_str()]
    };

    let mut summaries = Vec::new();
    let mut tables = Vec::new();
    let mut finals: Vec<(StirapState, f64)> = Vec::new();
    for name in &variants {
        let variant = resolve_variant(name)?;
        let traj = stirap::integrate(&initial, &params, variant, t_end, cfg.rel_tol, cfg.abs_tol)?;
        let diag = traj.diagnostics(cfg.adiabatic_ratio);
        let adiabatic_fraction = diag.adiabatic_trace.iter().filter(|b| **b).count() as f64
            / diag.adiabatic_trace.len() as f64;
        tables.push(trajectory_table(
            &format!("stirap_{name}"),
            name,
            cfg,
            &traj,
            &params,
        ));
        finals.push((*traj.last(), diag.final_molecular_fraction));
        summaries.push(StirapVariantSummary {
            variant: name.to_string(),
            steps_accepted: traj.steps_accepted,
            steps_rejected: traj.steps_rejected,
            adiabatic_fraction,
            diagnostics: diag,
        });
    }

    let diff = if finals.len() == 2 {
        let (a, fa) = &finals[0];
        let (b, fb) = &finals[1];
        let gap = a
            .populations()
            .iter()
            .zip(b.populations())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        Some(StirapDiff {
            max_abs_population_gap_at_end: gap,
            molecular_fraction_gap: (fa - fb).abs(),
        })
    } else {
        None
    };

    Ok(StirapRunOutput {
        summaries,
        diff,
        tables,
    })
}
