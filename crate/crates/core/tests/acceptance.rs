//! Acceptance suite.
//!
//! One test per criterion. Each prints a single `criterion N: PASS|FAIL`
//! line with the measured numbers and then asserts. Run with
//! `cargo test -p spectator-core --test acceptance -- --nocapture` to see
//! the lines.
//!
//! Criteria 6 and 7 are known to fail with the model as specified; their
//! thresholds are kept as stated rather than loosened.

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use spectator_core::bench::{
    fig4_curve, run_budget, synthesize_ramsey, three_spectator_context, FIGURE_TIMING,
};
use spectator_core::device::{gate_duration_from_j, DeviceTopology, GateContext, TransmonSpec};
use spectator_core::dispersive::{
    conditional_phase_error, dynamical_phase_error, leakage_error, shifts_at,
    spectator_phase_error, Resonance, SpectatorPhaseCase, DEFAULT_POLE_EPS,
};
use spectator_core::dynamics::{simulate_two_level, wrap180, TwoLevelGateProblem, UNITARITY_TOL};
use spectator_core::oracle::{
    build_pair_hamiltonian, dressed_spectrum, exact_shifts, fit_transmon, min_shift_overlap,
    shifts_from_spectrum, transmon_beta, HYBRIDIZATION_THRESHOLD,
};
use spectator_core::tomography::{
    cz_error_unitary, process_error, quadratic_infidelity, repeated_gate_error_scaling,
};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

/// Exchange coupling used throughout, MHz.
const J: f64 = 4.5;

/// Relative agreement between perturbative and exact shifts.
const ORACLE_REL_TOL: f64 = 0.15;
/// Absolute floor for the oracle comparison (10 kHz), MHz. Keeps the
/// relative test meaningful where a shift crosses zero.
const ORACLE_ABS_FLOOR: f64 = 0.010;
/// Points used in the oracle comparison must be this far from every pole, MHz.
const ORACLE_POLE_MARGIN: f64 = 50.0;
/// Levels per transmon in the exact oracle.
const ORACLE_DIMS: usize = 5;
const ORACLE_POINTS: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);

/// Where the measured ζ2 divergence of Q3 on Q1 sits, and how far off the
/// exact hybridization onset may be, MHz.
const POLE_TARGET: f64 = -625.0;
const POLE_WINDOW: f64 = 15.0;

/// Phase arithmetic is exact; this covers rounding of the quoted inputs.
const PHASE_TOL_DEG: f64 = 0.1;
const RATIO_TOL: f64 = 0.1;

const GATE_TIME_TOL_NS: f64 = 2.0;

/// Simulated δΦc slope against the closed form.
const SLOPE_REL_TOL: f64 = 0.02;
/// Simulated leakage against the closed form.
const LEAK_REL_TOL: f64 = 0.20;
/// Largest |δ/(2√2J)| in the dynamics comparison.
const DYNAMICS_X_MAX: f64 = 0.1;
const DYNAMICS_RUNS: usize = 50;
const DYNAMICS_BUDGET: Duration = Duration::from_secs(30);

/// Plausible β range for α = −289 MHz between 5 and 7 GHz, MHz.
const BETA_RANGE: (f64, f64) = (-38.0, -26.0);
/// Charge-basis fit must return ω01 and α to this precision, MHz.
const FIT_ROUND_TRIP_TOL: f64 = 0.01;

/// Quadratic expansion vs trace-based ε for phases up to 10°.
const QUADRATIC_TOL: f64 = 1e-4;
const QUADRATIC_MAX_PHASE: f64 = 10.0;
/// ε of three gates over ε of one: 9 within 2%.
const REPEAT_RATIO: f64 = 9.0;
const REPEAT_REL_TOL: f64 = 0.02;

/// Worst-case ε over the eight spectator configurations.
const EPS_RANGE: (f64, f64) = (1e-3, 1e-2);

/// Noiseless fringe fit, degrees.
const NOISELESS_FIT_TOL: f64 = 1e-6;
/// Quoted uncertainty at 3.3·10⁴ shots; readout contrast is not quoted, so
/// the check is ±50% of the value.
const RAMSEY_SHOTS: u64 = 33_000;
const RAMSEY_STDERR: f64 = 0.2;
const RAMSEY_STDERR_REL_TOL: f64 = 0.5;

// ---------------------------------------------------------------------------

fn report(n: u32, pass: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "criterion {n}: {} {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    pass
}

fn transmon(id: &str, freq: f64, anh: f64, beta: f64) -> TransmonSpec {
    TransmonSpec::raw(id, freq, anh, beta)
}

/// Worst |perturbative − exact| / max(15%·|exact|, 10 kHz) over a sweep.
fn oracle_sweep(anh_g: f64, beta_g: f64, anh_s: f64) -> (f64, usize) {
    let poles: Vec<f64> = Resonance::ALL
        .iter()
        .map(|r| r.detuning(anh_g, beta_g, anh_s))
        .collect();
    let half = ORACLE_POINTS / 2;
    let deltas = (0..half)
        .map(|i| 200.0 + 600.0 * i as f64 / (half - 1) as f64)
        .flat_map(|d| [-d, d])
        .filter(|d| poles.iter().all(|p| (d - p).abs() >= ORACLE_POLE_MARGIN));
    let g = transmon("G", 6000.0, anh_g, beta_g);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for delta in deltas {
        let s = transmon("S", 6000.0 + delta, anh_s, 0.0);
        let pert = shifts_at(delta, anh_g, beta_g, anh_s, J, DEFAULT_POLE_EPS).unwrap();
        let h = build_pair_hamiltonian(&g, &s, J, ORACLE_DIMS).unwrap();
        let exact = exact_shifts(&h).unwrap();
        for (p, e) in [(pert.zeta1, exact.zeta1), (pert.zeta12, exact.zeta12)] {
            let tol = (ORACLE_REL_TOL * e.abs()).max(ORACLE_ABS_FLOOR);
            worst = worst.max((p - e).abs() / tol);
        }
        used += 1;
    }
    (worst, used)
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let sets = [
        (-300.0, 0.0, -300.0),
        (-289.0, -35.0, -300.0),
        (-300.0, 0.0, -289.0),
    ];
    let results: Vec<(f64, usize)> = sets
        .iter()
        .map(|&(a, b, s)| oracle_sweep(a, b, s))
        .collect();
    let elapsed = start.elapsed();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let per_sweep = elapsed / sets.len() as u32;
    let pass = worst <= 1.0 && per_sweep < ORACLE_BUDGET && results.iter().all(|r| r.1 > 150);
    let points: Vec<usize> = results.iter().map(|r| r.1).collect();
    assert!(report(
        1,
        pass,
        format!(
            "worst deviation {worst:.3} of tolerance over points {points:?}, {:.2} s per {ORACLE_POINTS}-point sweep",
            per_sweep.as_secs_f64()
        )
    ));
}

#[test]
fn criterion_2_pole_reproduction() {
    let (anh_g, beta_g, anh_s) = (-289.0, -35.0, -300.0);
    let at = |d: f64| shifts_at(d, anh_g, beta_g, anh_s, J, DEFAULT_POLE_EPS).unwrap();
    let offset = 2.0;
    let mut flips = Vec::new();
    for r in Resonance::ALL {
        let p = r.detuning(anh_g, beta_g, anh_s);
        let (lo, hi) = (at(p - offset), at(p + offset));
        if r.affects_zeta1() {
            flips.push((format!("ζ1 {r}"), lo.zeta1.signum() != hi.zeta1.signum()));
        }
        if r.affects_zeta2() {
            flips.push((format!("ζ2 {r}"), lo.zeta2.signum() != hi.zeta2.signum()));
        }
    }
    let all_flip = flips.iter().all(|f| f.1);

    // Exact oracle: hybridization onset of the |21⟩↔|30⟩ crossing.
    let g = transmon("Q1", 5000.0, anh_g, beta_g);
    let spectrum = |d: f64| {
        let s = transmon("Q3", 5000.0 + d, anh_s, 0.0);
        dressed_spectrum(&build_pair_hamiltonian(&g, &s, J, ORACLE_DIMS).unwrap())
    };
    let step = 0.05;
    let scan: Vec<(f64, f64, f64)> = (0..=3000)
        .map(|i| {
            let d = -700.0 + step * i as f64;
            let sp = spectrum(d);
            (d, min_shift_overlap(&sp), shifts_from_spectrum(&sp).zeta2)
        })
        .collect();
    let (coarse_d, _, _) =
        scan.iter().copied().fold(
            (0.0, f64::INFINITY, 0.0),
            |a, s| {
                if s.1 < a.1 {
                    s
                } else {
                    a
                }
            },
        );
    // The crossing is much narrower than the scan step: refine the overlap
    // minimum by golden-section search, then walk out to the flag edges.
    let overlap = |d: f64| min_shift_overlap(&spectrum(d));
    let (mut a, mut b) = (coarse_d - step, coarse_d + step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-9 {
        let (c, d) = (b - inv_phi * (b - a), a + inv_phi * (b - a));
        if overlap(c) < overlap(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let min_d = 0.5 * (a + b);
    let min_ov = overlap(min_d);
    let flagged = min_ov <= HYBRIDIZATION_THRESHOLD;
    let edge = |dir: f64| {
        let mut w = 1e-6;
        while overlap(min_d + dir * w) <= HYBRIDIZATION_THRESHOLD && w < 2.0 * POLE_WINDOW {
            w *= 2.0;
        }
        min_d + dir * w
    };
    let (onset, end) = if flagged {
        (Some(edge(-1.0)), Some(edge(1.0)))
    } else {
        (None, None)
    };
    let bracketed = matches!((onset, end), (Some(a), Some(b))
        if a >= POLE_TARGET - POLE_WINDOW && b <= POLE_TARGET + POLE_WINDOW);
    let exact_before = scan
        .iter()
        .find(|s| s.0 >= POLE_TARGET - POLE_WINDOW)
        .unwrap()
        .2;
    let exact_after = scan
        .iter()
        .find(|s| s.0 >= POLE_TARGET + POLE_WINDOW)
        .unwrap()
        .2;
    let exact_flip = exact_before.signum() != exact_after.signum();

    let pass = all_flip && bracketed && exact_flip;
    let failed: Vec<&str> = flips
        .iter()
        .filter(|f| !f.1)
        .map(|f| f.0.as_str())
        .collect();
    assert!(report(
        2,
        pass,
        format!(
            "sign flips at {} poles (missing {failed:?}); exact hybridization {:?}..{:?} MHz, \
             min overlap {min_ov:.6} at {min_d:.3} MHz; exact ζ2 {exact_before:.3} → {exact_after:.3} MHz",
            flips.len(),
            onset,
            end
        )
    ));
}

#[test]
fn criterion_3_phase_arithmetic() {
    let (t_g, t_b, t_s) = FIGURE_TIMING;
    let ctx = GateContext::new("G1", "G2", vec![], t_g, t_b, t_s).unwrap();
    let zeta1 = -0.133;
    let d_phi_d = dynamical_phase_error(zeta1, &ctx);
    let d_phi_s1 = spectator_phase_error(
        SpectatorPhaseCase::ComputationalDistantOne,
        zeta1,
        0.0,
        0.0,
        &ctx,
    );
    let d_phi_c = conditional_phase_error(zeta1, J);
    let ratio = d_phi_d / d_phi_c;
    let pass = (d_phi_d - 6.85).abs() < PHASE_TOL_DEG
        && (d_phi_s1 - 4.93).abs() < PHASE_TOL_DEG
        && (ratio - -3.575).abs() < RATIO_TOL;
    // The quoted ratio uses t_g = 80 ns for the gate time in δΦc; the
    // library derives it from J (78.6 ns).
    let ratio_80 = d_phi_d / (0.5 * 360.0 * zeta1 * t_g * 1e-3);
    assert!(report(
        3,
        pass,
        format!(
            "δΦd {d_phi_d:.3}° (quoted 6.9), |1⟩-control {d_phi_s1:.3}° (quoted 5.0), \
             δΦd/δΦc {ratio:.3} (−3.575 expected, {ratio_80:.3} with t_g = 80 ns; quoted ≈ −3.5)"
        )
    ));
}

#[test]
fn criterion_4_gate_duration() {
    let t = gate_duration_from_j(J).unwrap();
    let pass = (t - FIGURE_TIMING.0).abs() < GATE_TIME_TOL_NS && (t - 78.567).abs() < 1e-3;
    assert!(report(
        4,
        pass,
        format!("10³/(2√2·{J}) = {t:.3} ns vs 80 ns")
    ));
}

#[test]
fn criterion_5_dynamics_vs_formula() {
    let scale = 2.0 * SQRT_2 * J;
    let start = Instant::now();
    let runs: Vec<(f64, f64, f64, f64)> = (0..DYNAMICS_RUNS)
        .map(|i| {
            let x = -DYNAMICS_X_MAX + 2.0 * DYNAMICS_X_MAX * i as f64 / (DYNAMICS_RUNS - 1) as f64;
            let delta = x * scale;
            let out = simulate_two_level(&TwoLevelGateProblem::ideal(J, delta).unwrap()).unwrap();
            (delta, wrap180(out.phi_c - 180.0), out.leak, out.norm_drift)
        })
        .collect();
    let elapsed = start.elapsed();

    // Least-squares slope through the origin.
    let sxy: f64 = runs.iter().map(|r| r.0 * r.1).sum();
    let sxx: f64 = runs.iter().map(|r| r.0 * r.0).sum();
    let slope = sxy / sxx;
    let expected = conditional_phase_error(1.0, J);
    let slope_err = (slope / expected - 1.0).abs();

    let leak_err = runs
        .iter()
        .filter(|r| r.0.abs() > 0.2 * DYNAMICS_X_MAX * scale)
        .map(|r| (r.2 / leakage_error(r.0, J).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let drift = runs.iter().map(|r| r.3).fold(0.0, f64::max);

    let pass = slope_err < SLOPE_REL_TOL
        && leak_err < LEAK_REL_TOL
        && drift < UNITARITY_TOL
        && elapsed < DYNAMICS_BUDGET;
    assert!(report(
        5,
        pass,
        format!(
            "slope {slope:.5} vs {expected:.5} °/MHz ({:.3}%), worst leakage deviation {:.2}%, \
             norm drift {drift:.1e}, {DYNAMICS_RUNS} runs in {:.2} s",
            100.0 * slope_err,
            100.0 * leak_err,
            elapsed.as_secs_f64()
        )
    ));
}

#[test]
fn criterion_6_sextic_correction() {
    let anh = -289.0;
    let freqs: Vec<f64> = (0..=8).map(|i| 5000.0 + 250.0 * i as f64).collect();
    let betas: Vec<f64> = freqs
        .iter()
        .map(|&f| transmon_beta(f, anh).unwrap())
        .collect();
    let in_range = betas
        .iter()
        .all(|b| (BETA_RANGE.0..=BETA_RANGE.1).contains(b));
    let round_trip = freqs
        .iter()
        .map(|&f| {
            let fit = fit_transmon(f, anh).unwrap();
            (fit.freq - f).abs().max((fit.anh - anh).abs())
        })
        .fold(0.0, f64::max);
    let pass = in_range && round_trip < FIT_ROUND_TRIP_TOL;
    let table: Vec<String> = freqs
        .iter()
        .zip(&betas)
        .map(|(f, b)| format!("{f:.0}:{b:.1}"))
        .collect();
    let q1 = transmon_beta(5240.0, anh).unwrap();
    let ok = report(
        6,
        pass,
        format!(
            "β (MHz) by frequency {}; Q1 at 5240 MHz gives {q1:.1}; fit round trip {round_trip:.1e} MHz",
            table.join(" ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_tomography() {
    let n = 21;
    let grid: Vec<f64> = (0..n)
        .map(|i| -QUADRATIC_MAX_PHASE + 2.0 * QUADRATIC_MAX_PHASE * i as f64 / (n - 1) as f64)
        .collect();
    let mut box_worst: f64 = 0.0;
    let mut ball_worst: f64 = 0.0;
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                let exact = process_error(&cz_error_unitary(a, b, c));
                let diff = (exact - quadratic_infidelity(a, b, c)).abs();
                box_worst = box_worst.max(diff);
                if (a * a + b * b + c * c).sqrt() <= QUADRATIC_MAX_PHASE {
                    ball_worst = ball_worst.max(diff);
                }
            }
        }
    }
    let ideal = process_error(&cz_error_unitary(0.0, 0.0, 0.0));
    let rep = repeated_gate_error_scaling(3, 0.5, 0.3, -0.2).unwrap();
    let ratio_ok = (rep.ratio / REPEAT_RATIO - 1.0).abs() < REPEAT_REL_TOL;
    let pass = box_worst < QUADRATIC_TOL && ideal.abs() < 1e-15 && ratio_ok;
    assert!(report(
        7,
        pass,
        format!(
            "quadratic expansion worst {box_worst:.2e} with every phase ≤ 10° \
             ({ball_worst:.2e} inside the 10° ball); ε(ideal) {ideal:.1e}; ε(3g)/ε(g) {:.4}",
            rep.ratio
        )
    ));
}

#[test]
fn criterion_8_configuration_budget() {
    let device = DeviceTopology::seven_qubit_example();
    let ctx = three_spectator_context();
    let rows = run_budget(&ctx, &device, DEFAULT_POLE_EPS).unwrap();

    // δΦc of each configuration equals the sum over its excited spectators.
    let single = |label: &str| {
        rows.iter()
            .find(|r| r.label == label)
            .unwrap()
            .report
            .d_phi_c
    };
    let additivity = rows
        .iter()
        .map(|r| {
            let sum: f64 = r
                .label
                .chars()
                .enumerate()
                .filter(|(_, c)| *c == '1')
                .map(|(i, _)| {
                    let mut l = ['0'; 3];
                    l[i] = '1';
                    single(&l.iter().collect::<String>())
                })
                .sum();
            (r.report.d_phi_c - sum).abs()
        })
        .fold(0.0, f64::max);

    let curve = fig4_curve(&ctx, &device).unwrap();
    let eps: Vec<f64> = curve.iter().map(|r| r.eps_cz.unwrap()).collect();
    let monotone = eps.windows(2).all(|w| w[1] <= w[0]);
    let quadratic = curve
        .iter()
        .zip(&eps)
        .filter(|(r, _)| r.x != 0.0)
        .map(|(r, e)| e / (r.x * r.x))
        .collect::<Vec<_>>();
    let (qmin, qmax) = quadratic
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| {
            (lo.min(q), hi.max(q))
        });
    let quad_spread = qmax / qmin - 1.0;

    let (worst_label, worst) = rows
        .iter()
        .map(|r| (r.label.as_str(), r.eps_cz))
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let pass = additivity < 1e-12
        && monotone
        && quad_spread < 0.02
        && (EPS_RANGE.0..=EPS_RANGE.1).contains(&worst);
    assert!(report(
        8,
        pass,
        format!(
            "additivity residual {additivity:.1e}°, curve monotone {monotone}, ε/ζ² spread {:.3}%, \
             max ε {:.4}% at |{worst_label}⟩",
            100.0 * quad_spread,
            100.0 * worst
        )
    ));
}

#[test]
fn criterion_9_fringe_synthesis() {
    let truths = [-6.3, -2.1, 0.0, 14.1];
    let noiseless = truths
        .iter()
        .map(|&t| (synthesize_ramsey(t, 0.9, None, 0).unwrap().d_phi_c - t).abs())
        .fold(0.0, f64::max);
    let stderrs: Vec<f64> = (0..20u64)
        .map(|seed| {
            synthesize_ramsey(-2.1, 0.9, Some(RAMSEY_SHOTS), seed)
                .unwrap()
                .stderr
                .unwrap()
        })
        .collect();
    let stderr = stderrs.iter().sum::<f64>() / stderrs.len() as f64;
    let pass = noiseless < NOISELESS_FIT_TOL
        && (stderr / RAMSEY_STDERR - 1.0).abs() <= RAMSEY_STDERR_REL_TOL;
    assert!(report(
        9,
        pass,
        format!(
            "noiseless recovery error {noiseless:.1e}°, fitted uncertainty {stderr:.3}° at {RAMSEY_SHOTS} shots"
        )
    ));
}
