//! Acceptance gate: one check per headline result, each printed as a
//! PASS/FAIL line with its measured numbers. Run with `--nocapture` to see
//! every line even when all pass.

use std::fmt::Write as _;
use std::time::Instant;

use eitsim::cloning::{balanced_angle, clone_signal};
use eitsim::gaussian::ModeMoments;
use eitsim::medium::{AtomicMedium, BecMedium, CoherentMedium};
use eitsim::qnd::{correlation_report, PolaritonAngle};
use eitsim::report::oracle::{oracle_check, OracleCheckConfig};
use eitsim::report::{qnd_sweep, QndSweepConfig};
use eitsim::stirap::{integrate, presets, resolve_variant};

struct Criterion {
    id: usize,
    name: &'static str,
    outcome: Result<String, String>,
}

fn pass(detail: impl Into<String>) -> Result<String, String> {
    Ok(detail.into())
}

fn fail(detail: impl Into<String>) -> Result<String, String> {
    Err(detail.into())
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn criterion_1_qnd_optimum() -> Result<String, String> {
    let medium = BecMedium::from_population(100, 0.5, std::f64::consts::FRAC_PI_4)
        .map_err(|e| e.to_string())?;
    let spin = medium.spin_moments();
    let signal = ModeMoments::vacuum();
    let angle = PolaritonAngle::new(std::f64::consts::FRAC_PI_4).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = correlation_report(&signal, &spin, angle).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for (t, tag) in [(report.q, "Q"), (report.p, "P")] {
        if !(within(t.c1, 2.0 / 3.0, 1e-12)
            && within(t.c2, 2.0 / 3.0, 1e-12)
            && within(t.c3, 1.0 / 9.0, 1e-12))
        {
            return fail(format!(
                "{tag}: C = ({:.15}, {:.15}, {:.15}), want (2/3, 2/3, 1/9) within 1e-12",
                t.c1, t.c2, t.c3
            ));
        }
    }
    if elapsed.as_secs_f64() >= 1e-3 {
        return fail(format!("took {elapsed:?}, budget 1 ms"));
    }
    pass(format!(
        "C1 = C2 = 2/3, C3 = 1/9 within 1e-12 in {:.1} us",
        elapsed.as_secs_f64() * 1e6
    ))
}

fn criterion_2_classical_limit() -> Result<String, String> {
    let spin = CoherentMedium.spin_moments();
    let signal = ModeMoments::vacuum();
    let mut worst: f64 = 0.0;
    for k in 0..201 {
        let theta = k as f64 * std::f64::consts::FRAC_PI_2 / 201.0;
        let angle = PolaritonAngle::new(theta).map_err(|e| e.to_string())?;
        let r = correlation_report(&signal, &spin, angle).map_err(|e| e.to_string())?;
        let (mu2, nu2) = (angle.mu().powi(2), angle.nu().powi(2));
        for t in [r.q, r.p] {
            worst = worst
                .max((t.c1 - mu2).abs())
                .max((t.c2 - nu2).abs())
                .max(t.c3.abs());
        }
    }
    if worst > 1e-12 {
        return fail(format!(
            "max |C - classical| = {worst:.3e} over the 201-point grid, budget 1e-12"
        ));
    }
    pass(format!(
        "C1 = mu^2, C2 = nu^2, C3 = 0 within {worst:.1e} on 201 angles"
    ))
}

fn criterion_3_angle_sweep_reproduction() -> Result<String, String> {
    let outputs = qnd_sweep(&QndSweepConfig::default()).map_err(|e| e.to_string())?;
    if outputs.len() != 2 || outputs[0].table.rows.len() != 201 {
        return fail("expected two 201-point sweeps");
    }
    let mut worst: f64 = 0.0;
    for out in &outputs {
        let (vq, vp) = out.v_medium;
        for row in &out.table.rows {
            let angle = PolaritonAngle::new(row[0]).map_err(|e| e.to_string())?;
            let (mu2, nu2) = (angle.mu().powi(2), angle.nu().powi(2));
            let closed = |v_xi: f64| {
                let d1 = mu2 + nu2 * v_xi;
                let d2 = mu2 * v_xi + nu2;
                (
                    mu2 / d1,
                    if d2 == 0.0 { 0.0 } else { nu2 / d2 },
                    mu2 * nu2 * (1.0 - v_xi).powi(2) / (d1 * d2),
                )
            };
            let (c1q, c2q, c3q) = closed(vq);
            let (c1p, c2p, c3p) = closed(vp);
            worst = worst
                .max((row[1] - c1q).abs())
                .max((row[2] - c2q).abs())
                .max((row[3] - c3q).abs())
                .max((row[4] - c1p).abs())
                .max((row[5] - c2p).abs())
                .max((row[6] - c3p).abs());
        }
    }
    if worst > 1e-10 {
        return fail(format!("pointwise closed-form gap {worst:.3e} > 1e-10"));
    }
    // zero-phase run: P columns equal the classical values
    let zero_phase = &outputs[1];
    for row in &zero_phase.table.rows {
        let angle = PolaritonAngle::new(row[0]).map_err(|e| e.to_string())?;
        if !(within(row[4], angle.mu().powi(2), 1e-12)
            && within(row[5], angle.nu().powi(2), 1e-12)
            && row[6].abs() <= 1e-14)
        {
            return fail(format!("phi = 0 P-columns not classical at theta = {}", row[0]));
        }
    }
    // curve shapes in the stored quadrature
    for out in &outputs {
        let c1: Vec<f64> = out.table.rows.iter().map(|r| r[1]).collect();
        let c2: Vec<f64> = out.table.rows.iter().map(|r| r[2]).collect();
        let c3: Vec<f64> = out.table.rows.iter().map(|r| r[3]).collect();
        if !c1.windows(2).all(|w| w[1] < w[0]) {
            return fail(format!("{}: C1 not monotone decreasing", out.tag));
        }
        if !c2.windows(2).all(|w| w[1] > w[0]) {
            return fail(format!("{}: C2 not monotone increasing", out.tag));
        }
        let peak = c3
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if peak == 0 || peak == c3.len() - 1 {
            return fail(format!("{}: C3 maximum not interior", out.tag));
        }
        // the curve is mirror-symmetric about the balanced angle, so two
        // grid points can tie at rounding level around the peak
        let tie = 1e-12;
        let rises = c3[..=peak].windows(2).all(|w| w[1] > w[0] - tie);
        let falls = c3[peak..].windows(2).all(|w| w[1] < w[0] + tie);
        if !(rises && falls && c3[peak] > 1e-3) {
            return fail(format!("{}: C3 not single-peaked", out.tag));
        }
    }
    pass(format!(
        "both sweeps match the closed forms within {worst:.1e}; shapes and classical P-columns verified"
    ))
}

fn criterion_4_cloning_contracts() -> Result<String, String> {
    let signal = ModeMoments::with_means(1.9, -3.2);
    let report = clone_signal(&signal, &CoherentMedium, balanced_angle(), 1e-6)
        .map_err(|e| e.to_string())?;
    for clone in [report.bright, report.dark] {
        if !(within(clone.mean_q, 1.9, 1e-12) && within(clone.mean_p, -3.2, 1e-12)) {
            return fail(format!(
                "means not preserved: ({}, {})",
                clone.mean_q, clone.mean_p
            ));
        }
    }
    if !(within(report.added_noise_q, 1.0, 1e-12) && within(report.added_noise_p, 1.0, 1e-12)) {
        return fail(format!(
            "added noise ({}, {}), want exactly one vacuum unit",
            report.added_noise_q, report.added_noise_p
        ));
    }
    for t in [report.q, report.p] {
        if !(within(t.c1, 0.5, 1e-12) && within(t.c2, 0.5, 1e-12) && within(t.c3, 0.25, 1e-12)) {
            return fail(format!("triple ({}, {}, {})", t.c1, t.c2, t.c3));
        }
    }
    if !within(report.fidelity, 2.0 / 3.0, 1e-12) {
        return fail(format!("fidelity {}", report.fidelity));
    }
    pass("means preserved, added noise 1, C = (1/2, 1/2, 1/4), F = 2/3, all within 1e-12")
}

fn criterion_5_condensate_cloning_extremal() -> Result<String, String> {
    let medium = BecMedium::from_population(100, 0.5, std::f64::consts::FRAC_PI_4)
        .map_err(|e| e.to_string())?;
    let report = clone_signal(&ModeMoments::vacuum(), &medium, balanced_angle(), 1e-6)
        .map_err(|e| e.to_string())?;
    for t in [report.q, report.p] {
        if !(within(t.c1, 4.0 / 7.0, 1e-12)
            && within(t.c2, 4.0 / 7.0, 1e-12)
            && within(t.c3, 25.0 / 49.0, 1e-12))
        {
            return fail(format!("triple ({}, {}, {})", t.c1, t.c2, t.c3));
        }
    }
    if !within(report.fidelity, 8.0 / 11.0, 1e-12) {
        return fail(format!("fidelity {}", report.fidelity));
    }
    match (&report.reference_fidelity, &report.fidelity_note) {
        (Some(reference), Some(note)) if *reference == 0.8 && !note.is_empty() => pass(format!(
            "C = (4/7, 4/7, 25/49), F = 8/11 within 1e-12; quoted reference 0.8 shown with note"
        )),
        _ => fail("quoted 0.8 reference or discrepancy note missing"),
    }
}

fn criterion_6_oracle_equivalence() -> Result<String, String> {
    let report = oracle_check(&OracleCheckConfig::default()).map_err(|e| e.to_string())?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        return fail(format!("checks failed: {}", failed.join(", ")));
    }
    if report.runtime_seconds >= 60.0 {
        return fail(format!("runtime {:.1} s, budget 60 s", report.runtime_seconds));
    }
    let scenario_count = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("moments-scenario"))
        .count();
    pass(format!(
        "{} randomized scenarios within 1e-8 plus convergence and structure checks, {:.1} s",
        scenario_count, report.runtime_seconds
    ))
}

fn criterion_7_conservation() -> Result<String, String> {
    // The printed coupling layout provably does not conserve the atom
    // charge (its flow invariant is n1 + 2n2 + 2n3 + 2nf instead), so the
    // conservation gate runs on the Hamiltonian-consistent layout; the
    // printed layout's field charge is still checked alongside.
    let preset = presets::adiabatic_transfer();
    let symmetrized = resolve_variant("symmetrized").map_err(|e| e.to_string())?;
    let printed = resolve_variant("printed").map_err(|e| e.to_string())?;
    let span_widths =
        (preset.t_end - preset.initial.t) / preset.params.kappa_pulse.width;
    if (span_widths - 10.0).abs() > 1e-12 {
        return fail(format!("preset span is {span_widths} pulse widths, want 10"));
    }

    let start = Instant::now();
    let run = |rel: f64, abs: f64| -> Result<(f64, f64), String> {
        let traj = integrate(
            &preset.initial,
            &preset.params,
            symmetrized,
            preset.t_end,
            rel,
            abs,
        )
        .map_err(|e| e.to_string())?;
        let d = traj.diagnostics(0.1);
        Ok((d.charge_atoms_drift_rel, d.charge_field_drift_rel))
    };
    let (q1_default, q2_default) = run(1e-10, 1e-12)?;
    let (q1_half, q2_half) = run(0.5e-10, 0.5e-12)?;
    let elapsed = start.elapsed().as_secs_f64();

    let printed_traj = integrate(
        &preset.initial,
        &preset.params,
        printed,
        preset.t_end,
        1e-10,
        1e-12,
    )
    .map_err(|e| e.to_string())?;
    let printed_diag = printed_traj.diagnostics(0.1);

    let mut detail = String::new();
    write!(
        detail,
        "drift at defaults: Q1 {q1_default:.2e}, Q2 {q2_default:.2e} (printed layout: Q2 {:.2e}, \
         own invariant {:.2e}, atom charge {:.2e}); ",
        printed_diag.charge_field_drift_rel,
        printed_diag.charge_atoms_plus_field_drift_rel,
        printed_diag.charge_atoms_drift_rel
    )
    .ok();

    if q1_default >= 1e-8 || q2_default >= 1e-8 {
        return fail(format!("{detail}drift exceeds 1e-8"));
    }
    if printed_diag.charge_field_drift_rel >= 1e-8 {
        return fail(format!("{detail}printed-layout field-charge drift exceeds 1e-8"));
    }
    if elapsed >= 5.0 {
        return fail(format!("{detail}runtime {elapsed:.2} s, budget 5 s"));
    }

    // Halving both tolerances must improve the worse drift tenfold. An
    // adaptive embedded integrator accepts steps at local error ~ tol, so
    // drift scales linearly with tolerance and the measured ratio sits near
    // 2; the check is kept as stated rather than loosened.
    let worse_default = q1_default.max(q2_default);
    let worse_half = q1_half.max(q2_half);
    let ratio = worse_default / worse_half.max(f64::MIN_POSITIVE);
    write!(
        detail,
        "halved tolerances: Q1 {q1_half:.2e}, Q2 {q2_half:.2e}, improvement {ratio:.2}x; \
         runtime {elapsed:.2} s"
    )
    .ok();
    if ratio < 10.0 {
        return fail(format!(
            "{detail}; tolerance halving improved drift {ratio:.2}x, the stated gate is 10x \
             (drift tracks the tolerance linearly in any error-per-step controlled embedded \
             scheme; a 100x tightening measures ~90x)"
        ));
    }
    pass(detail)
}

fn criterion_8_dark_state_transfer() -> Result<String, String> {
    let preset = presets::adiabatic_transfer();
    let variant = resolve_variant("symmetrized").map_err(|e| e.to_string())?;
    let traj = integrate(
        &preset.initial,
        &preset.params,
        variant,
        preset.t_end,
        1e-10,
        1e-12,
    )
    .map_err(|e| e.to_string())?;
    let d = traj.diagnostics(0.1);
    if d.max_excited_fraction >= 0.05 {
        return fail(format!(
            "excited fraction peaked at {:.4}, budget 0.05",
            d.max_excited_fraction
        ));
    }
    if d.final_molecular_fraction < 0.5 {
        return fail(format!(
            "only {:.1}% of atoms bound into molecules",
            100.0 * d.final_molecular_fraction
        ));
    }
    pass(format!(
        "counterintuitive pulses: excited fraction peaks at {:.4}, {:.1}% of atoms end bound",
        d.max_excited_fraction,
        100.0 * d.final_molecular_fraction
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria = vec![
        Criterion {
            id: 1,
            name: "storage optimum at the balanced condensate point",
            outcome: criterion_1_qnd_optimum(),
        },
        Criterion {
            id: 2,
            name: "classical limit of the correlation triple",
            outcome: criterion_2_classical_limit(),
        },
        Criterion {
            id: 3,
            name: "angle-sweep reproduction of the correlation curves",
            outcome: criterion_3_angle_sweep_reproduction(),
        },
        Criterion {
            id: 4,
            name: "coherent-medium cloning contracts",
            outcome: criterion_4_cloning_contracts(),
        },
        Criterion {
            id: 5,
            name: "condensate cloning at the extremal point",
            outcome: criterion_5_condensate_cloning_extremal(),
        },
        Criterion {
            id: 6,
            name: "moment engine vs Fock-space oracle",
            outcome: criterion_6_oracle_equivalence(),
        },
        Criterion {
            id: 7,
            name: "mean-field charge conservation and tolerance scaling",
            outcome: criterion_7_conservation(),
        },
        Criterion {
            id: 8,
            name: "dark-state photoassociation transfer",
            outcome: criterion_8_dark_state_transfer(),
        },
    ];

    let mut failures = Vec::new();
    for c in &criteria {
        match &c.outcome {
            Ok(detail) => println!("PASS criterion {}: {} -- {}", c.id, c.name, detail),
            Err(detail) => {
                println!("FAIL criterion {}: {} -- {}", c.id, c.name, detail);
                failures.push(c.id);
            }
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance criteria failed: {failures:?}"
    );
}
