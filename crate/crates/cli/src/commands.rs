use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use spectator_core::bench::{
    budget_csv, ramsey_csv, reproduce_figure, run_budget, run_sweep, sweep_csv,
    synthesize_ramsey_with, Figure, LineChart, OutputFormat, RamseyOptions, Series, SweepParameter,
    SweepRange, SweepSpec,
};
use spectator_core::device::{
    load_device, DeviceTopology, GateContext, Spectator, SpectatorRole, TransmonSpec,
};
use spectator_core::dispersive::{
    conditional_phase_error, leakage_error, shifts_at, OperatingPoint,
};
use spectator_core::dynamics::{
    calibrate_pulse, simulate_full_pair_with, simulate_two_level_with, wrap180, CalibrationOptions,
    GateOutcome, PairGateProblem, PulseShape, SimOptions, TwoLevelGateProblem,
};
use spectator_core::oracle::{
    build_pair_hamiltonian, dressed_spectrum, exact_shifts, min_shift_overlap,
};
use spectator_core::tomography::{
    chi_from_unitary, cz_error_unitary, pauli_label, process_error, quadratic_infidelity,
    repeated_gate_error_scaling,
};
use spectator_core::{Error, Result};

use crate::{
    Cli, Command, Format, GateArgs, Model, RamseyArgs, ShiftsArgs, SimulateArgs, SweepArgs,
    SweepParam, TomoArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    if !(cli.pole_eps.is_finite() && cli.pole_eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "--pole-eps must be ≥ 0, got {}",
            cli.pole_eps
        )));
    }
    match &cli.command {
        Command::Shifts(a) => shifts(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Budget(a) => budget(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Tomo(a) => tomo(a),
        Command::Ramsey(a) => ramsey(cli, a),
        Command::Fig { name } => fig(cli, name),
    }
}

fn device(cli: &Cli) -> Result<DeviceTopology> {
    match &cli.device {
        Some(path) => load_device(path),
        None => Ok(DeviceTopology::seven_qubit_example()),
    }
}

fn format(cli: &Cli) -> OutputFormat {
    match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Svg => OutputFormat::Svg,
        Format::Both => OutputFormat::Both,
    }
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print_json<T: Serialize>(value: &T) {
    stdout(&format!(
        "{}\n",
        serde_json::to_string_pretty(value).expect("output serializes")
    ));
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes a table to `--out` (with an optional chart), or to stdout.
fn emit(cli: &Cli, stem: &str, csv: &str, chart: Option<LineChart>) -> Result<()> {
    let Some(dir) = &cli.out else {
        stdout(csv);
        return Ok(());
    };
    let fmt = format(cli);
    if matches!(fmt, OutputFormat::Csv | OutputFormat::Both) {
        eprintln!(
            "wrote {}",
            write_file(dir, &format!("{stem}.csv"), csv)?.display()
        );
    }
    if let (Some(chart), OutputFormat::Svg | OutputFormat::Both) = (chart, fmt) {
        eprintln!(
            "wrote {}",
            write_file(dir, &format!("{stem}.svg"), &chart.render())?.display()
        );
    }
    Ok(())
}

fn gate_context(a: &GateArgs) -> Result<GateContext> {
    // `--s1 ''` clears the default list.
    let labels = |v: &[String], role| {
        v.iter()
            .filter(|l| !l.is_empty())
            .map(move |l| Spectator {
                label: l.clone(),
                role,
            })
            .collect::<Vec<_>>()
    };
    let mut spectators = labels(&a.s1, SpectatorRole::OnComputationalQubit);
    spectators.extend(labels(&a.s2, SpectatorRole::OnLeakageQubit));
    GateContext::new(a.g1.clone(), a.g2.clone(), spectators, a.tg, a.tb, a.ts)
}

fn shifts(cli: &Cli, a: &ShiftsArgs) -> Result<()> {
    let (gate, spec, j) = match (&a.gate, &a.spectator, a.delta) {
        (Some(g), Some(s), _) => {
            let dev = device(cli)?;
            let gq = dev.require_qubit(g)?.clone();
            let sq = dev.require_qubit(s)?.clone();
            let j = dev.coupling(g, s).ok_or_else(|| {
                Error::validation("spectator", format!("{s} is not coupled to {g}"))
            })?;
            (gq, sq, j)
        }
        (None, None, Some(delta)) => (
            TransmonSpec::raw("G", 6000.0, a.anh_g, a.beta_g),
            TransmonSpec::raw("S", 6000.0 + delta, a.anh_s, 0.0),
            a.j,
        ),
        _ => {
            return Err(Error::InvalidArgument(
                "give --gate and --spectator, or --delta for raw parameters".into(),
            ))
        }
    };
    let delta = spec.freq - gate.freq;
    let perturbative = shifts_at(delta, gate.anh, gate.beta, spec.anh, j, cli.pole_eps);
    let h = build_pair_hamiltonian(&gate, &spec, j, cli.dims)?;
    let d = dressed_spectrum(&h);
    let exact = exact_shifts(&h);
    let out = json!({
        "gate": gate.id,
        "spectator": spec.id,
        "delta_mhz": delta,
        "j_mhz": j,
        "perturbative": match &perturbative {
            Ok(z) => json!(z),
            Err(p) => json!({ "diverged": true, "pole": p, "message": p.to_string() }),
        },
        "exact": match &exact {
            Ok(z) => json!(z),
            Err(e) => json!({ "hybridized": true, "message": e.to_string() }),
        },
        "min_overlap": min_shift_overlap(&d),
        "dims": cli.dims,
    });
    print_json(&out);
    Ok(())
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let parameter = match a.parameter {
        SweepParam::SpectatorDetuning => SweepParameter::SpectatorDetuning,
        SweepParam::GateDetuningDelta => SweepParameter::GateDetuningDelta,
        SweepParam::Zeta1Tot => SweepParameter::Zeta1Tot,
    };
    let mut spec = SweepSpec::new(
        parameter,
        SweepRange::new(a.start, a.stop, a.points)?,
        gate_context(&a.gate)?,
        device(cli)?,
    );
    spec.spectator = a.spectator.clone();
    spec.pole_eps = cli.pole_eps;
    let rows = run_sweep(&spec)?;
    let chart = LineChart {
        title: "Conditional phase error".into(),
        x_label: match parameter {
            SweepParameter::SpectatorDetuning => "Δ (MHz)",
            SweepParameter::GateDetuningDelta => "δ (MHz)",
            SweepParameter::Zeta1Tot => "ζ1,tot (MHz)",
        }
        .into(),
        y_label: "δΦc (deg)".into(),
        y_range: None,
        series: vec![Series {
            name: "δΦc".into(),
            points: rows.iter().map(|r| (r.x, r.d_phi_c)).collect(),
            markers: false,
        }],
    };
    emit(cli, "sweep", &sweep_csv(&rows)?, Some(chart))
}

fn budget(cli: &Cli, a: &GateArgs) -> Result<()> {
    let ctx = gate_context(a)?;
    let rows = run_budget(&ctx, &device(cli)?, cli.pole_eps)?;
    let chart = LineChart {
        title: "CZ error per spectator configuration".into(),
        x_label: "configuration index".into(),
        y_label: "ε_CZ".into(),
        y_range: None,
        series: vec![Series {
            name: "ε_CZ".into(),
            points: rows
                .iter()
                .enumerate()
                .map(|(i, r)| (i as f64, Some(r.eps_cz)))
                .collect(),
            markers: true,
        }],
    };
    emit(cli, "budget", &budget_csv(&ctx, &rows)?, Some(chart))
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    model: &'static str,
    delta_mhz: f64,
    j_mhz: f64,
    pulse: PulseShape,
    phi_c_deg: f64,
    d_phi_c_deg: f64,
    d_phi_c_predicted_deg: f64,
    leak: f64,
    leak_predicted: Option<f64>,
    leak_from_11: f64,
    norm_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<&'a str>,
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let opts = SimOptions {
        dt: a.dt,
        record_every: a.trajectory,
    };
    let (model, j, pulse, reference, out): (_, _, _, f64, GateOutcome) = match a.model {
        Model::TwoLevel => {
            let p = TwoLevelGateProblem::ideal(a.j, a.delta)?;
            let out = simulate_two_level_with(&p, opts)?;
            ("two-level", a.j, p.pulse, 180.0, out)
        }
        Model::Pair => {
            let dev = device(cli)?;
            let g1 = dev.require_qubit(&a.g1)?;
            let g2 = dev.require_qubit(&a.g2)?;
            let j = dev.coupling(&a.g1, &a.g2).ok_or_else(|| {
                Error::validation("g2", format!("{} and {} are not coupled", a.g1, a.g2))
            })?;
            let cal = CalibrationOptions {
                sigma: a.sigma,
                dims: cli.dims,
                ..CalibrationOptions::default()
            };
            let pulse = calibrate_pulse(g1, g2, j, cal)?;
            let base = PairGateProblem::new(g1, g2, j, pulse, 0.0, cli.dims);
            let reference = simulate_full_pair_with(
                &base,
                SimOptions {
                    dt: a.dt,
                    record_every: None,
                },
            )?
            .phi_c;
            let shifted = PairGateProblem {
                spectator_delta: a.delta,
                ..base
            };
            let op = OperatingPoint::for_pair(g1, g2);
            eprintln!(
                "calibrated pulse on {:?}: excursion {:.3} MHz, {:.3} ns (gate point G1 {:.1}, G2 {:.1} MHz)",
                shifted.pulsed, pulse.amplitude, pulse.duration, op.g1_gate, op.g2_gate
            );
            (
                "pair",
                j,
                pulse,
                reference,
                simulate_full_pair_with(&shifted, opts)?,
            )
        }
    };
    let trajectory = match (&cli.out, a.trajectory) {
        (Some(dir), Some(_)) => {
            let mut buf = Vec::new();
            out.write_trajectory_csv(&mut buf)?;
            let body = String::from_utf8(buf).expect("csv is utf-8");
            Some(write_file(dir, "trajectory.csv", &body)?)
        }
        (None, Some(_)) => {
            return Err(Error::InvalidArgument("--trajectory needs --out".into()));
        }
        _ => None,
    };
    let traj = trajectory
        .as_ref()
        .map(|p| p.to_string_lossy().into_owned());
    print_json(&SimulationReport {
        model,
        delta_mhz: a.delta,
        j_mhz: j,
        pulse,
        phi_c_deg: out.phi_c,
        d_phi_c_deg: wrap180(out.phi_c - reference),
        d_phi_c_predicted_deg: conditional_phase_error(a.delta, j),
        leak: out.leak,
        leak_predicted: leakage_error(a.delta, j).ok(),
        leak_from_11: out.leak_from_11,
        norm_drift: out.norm_drift,
        trajectory: traj.as_deref(),
    });
    Ok(())
}

fn tomo(a: &TomoArgs) -> Result<()> {
    let u = cz_error_unitary(a.d1, a.d2, a.dc);
    let chi = chi_from_unitary(&u);
    let mut entries = Vec::new();
    for m in 0..16 {
        for n in 0..16 {
            let v = chi.chi[(m, n)];
            if v.norm() > 1e-12 {
                entries.push(json!({
                    "m": pauli_label(m),
                    "n": pauli_label(n),
                    "re": v.re,
                    "im": v.im,
                }));
            }
        }
    }
    let mut out = json!({
        "d1_deg": a.d1,
        "d2_deg": a.d2,
        "dc_deg": a.dc,
        "eps_cz": process_error(&u),
        "eps_quadratic": quadratic_infidelity(a.d1, a.d2, a.dc),
        "chi_trace": chi.trace().re,
        "chi": entries,
    });
    if let Some(n) = a.repeat {
        let r = repeated_gate_error_scaling(n, a.d1, a.d2, a.dc)?;
        out["repeated"] = json!({ "gates": n, "eps": r.repeated, "ratio": r.ratio });
    }
    print_json(&out);
    Ok(())
}

fn ramsey(cli: &Cli, a: &RamseyArgs) -> Result<()> {
    let r = synthesize_ramsey_with(
        a.phi_c,
        a.contrast,
        a.shots,
        cli.seed,
        RamseyOptions {
            points: a.points,
            offset: a.offset,
        },
    )?;
    if let Some(dir) = &cli.out {
        let fmt = format(cli);
        if matches!(fmt, OutputFormat::Csv | OutputFormat::Both) {
            eprintln!(
                "wrote {}",
                write_file(dir, "ramsey.csv", &ramsey_csv(&r)?)?.display()
            );
        }
        if matches!(fmt, OutputFormat::Svg | OutputFormat::Both) {
            let fine: Vec<f64> = (0..=360).map(f64::from).collect();
            let series = |name: &str, f: &spectator_core::bench::SineFit, data: &[f64]| {
                [
                    Series {
                        name: format!("{name} data"),
                        points: r
                            .phases
                            .iter()
                            .zip(data)
                            .map(|(&x, &y)| (x, Some(y)))
                            .collect(),
                        markers: true,
                    },
                    Series {
                        name: format!("{name} fit"),
                        points: fine.iter().map(|&x| (x, Some(f.eval(x)))).collect(),
                        markers: false,
                    },
                ]
            };
            let mut all = Vec::new();
            all.extend(series("control |0⟩", &r.fit0, &r.control0));
            all.extend(series("control |1⟩", &r.fit1, &r.control1));
            let chart = LineChart {
                title: format!("Ramsey fringes, fitted difference {:.3}°", r.difference),
                x_label: "phase (deg)".into(),
                y_label: "P(|1⟩)".into(),
                y_range: Some((0.0, 1.0)),
                series: all,
            };
            eprintln!(
                "wrote {}",
                write_file(dir, "ramsey.svg", &chart.render())?.display()
            );
        }
    }
    print_json(&json!({
        "phi_c_injected_deg": a.phi_c,
        "contrast": a.contrast,
        "shots": a.shots,
        "seed": cli.seed,
        "difference_deg": r.difference,
        "d_phi_c_deg": r.d_phi_c,
        "stderr_deg": r.stderr,
        "fit_control0": r.fit0,
        "fit_control1": r.fit1,
    }));
    Ok(())
}

fn fig(cli: &Cli, name: &str) -> Result<()> {
    let which: Figure = name.parse()?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
    let files = reproduce_figure(which, &device(cli)?, &dir, format(cli), cli.pole_eps)?;
    let list: String = files.iter().map(|f| format!("{}\n", f.display())).collect();
    stdout(&list);
    Ok(())
}
