//! Scenario runner behind the `spectator-bench` CLI: detuning sweeps, error
//! budgets over spectator configurations, Ramsey fringe synthesis and figure
//! export (CSV plus a minimal SVG line chart).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::device::{
    DeviceTopology, GateContext, Spectator, SpectatorConfig, SpectatorRole, TransmonSpec,
};
use crate::dispersive::{
    conditional_phase_error, dynamical_phase_error, leakage_error, report_from_shifts, shifts_at,
    spectator_shifts, OperatingPoint, PhaseErrorReport, Pole, ShiftTriple, DEFAULT_POLE_EPS,
};
use crate::tomography::{cz_error_unitary, process_error};
use crate::{Error, Result};

/// Maps `f` over `items` (in parallel with the `parallel` feature), keeping
/// input order.
fn ordered_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Largest spectator count enumerated by [`run_budget`] (2^12 rows).
pub const MAX_BUDGET_SPECTATORS: usize = 12;

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Δ = ω_S − ω_G of one spectator against its gate qubit at the gate
    /// operating point; only that spectator is excited.
    SpectatorDetuning,
    /// δ, the |11⟩–|02⟩ detuning during the gate, directly.
    GateDetuningDelta,
    /// ζ1,tot on G1.
    Zeta1Tot,
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectator_detuning" => Ok(Self::SpectatorDetuning),
            "gate_detuning_delta" => Ok(Self::GateDetuningDelta),
            "zeta1_tot" => Ok(Self::Zeta1Tot),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter {other:?}; expected spectator_detuning, \
                 gate_detuning_delta or zeta1_tot"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        let r = Self {
            start,
            stop,
            points,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::validation("range.points", "need at least 2 points"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::validation("range", "bounds must be finite"));
        }
        if self.start == self.stop {
            return Err(Error::validation("range", "start and stop coincide"));
        }
        Ok(())
    }

    /// Evenly spaced values in ascending order.
    pub fn values(&self) -> Vec<f64> {
        let (lo, hi) = if self.start < self.stop {
            (self.start, self.stop)
        } else {
            (self.stop, self.start)
        };
        let n = self.points - 1;
        (0..=n)
            .map(|k| {
                if k == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub range: SweepRange,
    pub ctx: GateContext,
    pub device: DeviceTopology,
    /// Spectator swept by [`SweepParameter::SpectatorDetuning`]; defaults to
    /// the first spectator of `ctx`.
    pub spectator: Option<String>,
    pub pole_eps: f64,
}

impl SweepSpec {
    pub fn new(
        parameter: SweepParameter,
        range: SweepRange,
        ctx: GateContext,
        device: DeviceTopology,
    ) -> Self {
        Self {
            parameter,
            range,
            ctx,
            device,
            spectator: None,
            pole_eps: DEFAULT_POLE_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub shifts: Option<ShiftTriple>,
    /// δ, MHz.
    pub delta: Option<f64>,
    pub d_phi_c: Option<f64>,
    pub d_leak: Option<f64>,
    /// Dynamical phase on the gate qubit the swept quantity acts on, degrees.
    pub d_phi_d: Option<f64>,
    pub eps_cz: Option<f64>,
    pub pole: Option<Pole>,
}

impl SweepRow {
    pub fn diverged(&self) -> bool {
        self.pole.is_some()
    }

    fn flagged(x: f64, pole: Pole) -> Self {
        Self {
            x,
            shifts: None,
            delta: None,
            d_phi_c: None,
            d_leak: None,
            d_phi_d: None,
            eps_cz: None,
            pole: Some(pole),
        }
    }
}

/// Errors from a single-qubit dynamical phase on G1 (`d1`) or G2 (`d2`) and
/// a conditional phase error, through the process matrix.
fn gate_error(d1: f64, d2: f64, dc: f64) -> f64 {
    process_error(&cz_error_unitary(d1, d2, dc))
}

struct SweptSpectator {
    role: SpectatorRole,
    gate: TransmonSpec,
    anh_s: f64,
    j: f64,
}

fn swept_spectator(spec: &SweepSpec) -> Result<SweptSpectator> {
    let label = match &spec.spectator {
        Some(l) => l.clone(),
        None => spec
            .ctx
            .spectators
            .first()
            .map(|s| s.label.clone())
            .ok_or_else(|| Error::validation("spectators", "sweep needs a spectator"))?,
    };
    let s = spec
        .ctx
        .spectators
        .iter()
        .find(|s| s.label == label)
        .ok_or_else(|| Error::validation("spectator", format!("{label} is not a spectator")))?;
    let device = &spec.device;
    let g1 = device.require_qubit(&spec.ctx.g1)?;
    let g2 = device.require_qubit(&spec.ctx.g2)?;
    let op = OperatingPoint::for_pair(g1, g2);
    let (gate, freq) = match s.role {
        SpectatorRole::OnComputationalQubit => (g1, op.g1_gate),
        SpectatorRole::OnLeakageQubit => (g2, op.g2_gate),
    };
    let j = device.coupling(&s.label, &gate.id).ok_or_else(|| {
        Error::validation("spectator", format!("{label} not coupled to {}", gate.id))
    })?;
    Ok(SweptSpectator {
        role: s.role,
        gate: TransmonSpec::raw(gate.id.clone(), freq, gate.anh, gate.beta),
        anh_s: device.require_qubit(&label)?.anh,
        j,
    })
}

/// Evaluates the closed-form errors along `spec.range`. Rows come back in
/// ascending x; rows at poles carry the pole and no values.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.range.validate()?;
    spec.ctx.validate()?;
    spec.ctx.validate_against(&spec.device)?;
    let j_gate = spec
        .device
        .coupling(&spec.ctx.g1, &spec.ctx.g2)
        .expect("validated coupling");
    let ctx = &spec.ctx;
    let xs = spec.range.values();

    let rows: Vec<SweepRow> = match spec.parameter {
        SweepParameter::SpectatorDetuning => {
            let sw = swept_spectator(spec)?;
            ordered_map(&xs, |&x| {
                match shifts_at(x, sw.gate.anh, sw.gate.beta, sw.anh_s, sw.j, spec.pole_eps) {
                    Err(pole) => SweepRow::flagged(x, pole),
                    Ok(z) => {
                        let delta = match sw.role {
                            SpectatorRole::OnComputationalQubit => z.zeta1,
                            SpectatorRole::OnLeakageQubit => -z.zeta12,
                        };
                        let d_phi_c = conditional_phase_error(delta, j_gate);
                        let d_phi_d = dynamical_phase_error(z.zeta1, ctx);
                        let (d1, d2) = match sw.role {
                            SpectatorRole::OnComputationalQubit => (d_phi_d, 0.0),
                            SpectatorRole::OnLeakageQubit => (0.0, d_phi_d),
                        };
                        SweepRow {
                            x,
                            shifts: Some(z),
                            delta: Some(delta),
                            d_phi_c: Some(d_phi_c),
                            d_leak: leakage_error(delta, j_gate).ok(),
                            d_phi_d: Some(d_phi_d),
                            eps_cz: Some(gate_error(d1, d2, d_phi_c)),
                            pole: None,
                        }
                    }
                }
            })
        }
        SweepParameter::GateDetuningDelta => ordered_map(&xs, |&x| {
            let d_phi_c = conditional_phase_error(x, j_gate);
            SweepRow {
                x,
                shifts: None,
                delta: Some(x),
                d_phi_c: Some(d_phi_c),
                d_leak: leakage_error(x, j_gate).ok(),
                d_phi_d: None,
                eps_cz: Some(gate_error(0.0, 0.0, d_phi_c)),
                pole: None,
            }
        }),
        SweepParameter::Zeta1Tot => ordered_map(&xs, |&x| {
            let d_phi_c = conditional_phase_error(x, j_gate);
            let d_phi_d = dynamical_phase_error(x, ctx);
            SweepRow {
                x,
                shifts: None,
                delta: Some(x),
                d_phi_c: Some(d_phi_c),
                d_leak: leakage_error(x, j_gate).ok(),
                d_phi_d: Some(d_phi_d),
                eps_cz: Some(gate_error(d_phi_d, 0.0, d_phi_c)),
                pole: None,
            }
        }),
    };
    if rows.iter().all(SweepRow::diverged) {
        return Err(Error::AllDiverged);
    }
    Ok(rows)
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "x",
    "zeta1_mhz",
    "zeta2_mhz",
    "zeta12_mhz",
    "delta_mhz",
    "d_phi_c_deg",
    "d_leak",
    "d_phi_d_deg",
    "eps_cz",
    "diverged",
    "pole_mhz",
    "resonance",
];

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = CsvOut::new(&SWEEP_COLUMNS)?;
    for r in rows {
        let z = r.shifts;
        w.row(&[
            num(r.x),
            opt(z.map(|z| z.zeta1)),
            opt(z.map(|z| z.zeta2)),
            opt(z.map(|z| z.zeta12)),
            opt(r.delta),
            opt(r.d_phi_c),
            opt(r.d_leak),
            opt(r.d_phi_d),
            opt(r.eps_cz),
            r.diverged().to_string(),
            opt(r.pole.map(|p| p.at)),
            r.pole.map(|p| p.resonance.to_string()).unwrap_or_default(),
        ])?;
    }
    w.finish()
}

// ---------------------------------------------------------------------------
// Error budget

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub config: SpectatorConfig,
    /// Spectator bits in context order, e.g. "101".
    pub label: String,
    pub report: PhaseErrorReport,
    /// Process infidelity of the CZ with these phase errors.
    pub eps_cz: f64,
}

/// One row per spectator configuration, ordered by configuration bits with
/// the first spectator most significant.
pub fn run_budget(
    ctx: &GateContext,
    device: &DeviceTopology,
    pole_eps: f64,
) -> Result<Vec<BudgetRow>> {
    let k = ctx.spectators.len();
    if k > MAX_BUDGET_SPECTATORS {
        return Err(Error::TooManySpectators {
            count: k,
            cap: MAX_BUDGET_SPECTATORS,
        });
    }
    ctx.validate()?;
    let shifts = spectator_shifts(ctx, device, pole_eps)?;
    let j = device
        .coupling(&ctx.g1, &ctx.g2)
        .expect("validated coupling");
    let indices: Vec<usize> = (0..1usize << k).collect();
    ordered_map(&indices, |&index| {
        let config = SpectatorConfig::from_index(ctx, index);
        let report = report_from_shifts(ctx, &shifts, &config, j)?;
        let eps_cz = gate_error(
            report.d_phi_d[&ctx.g1],
            report.d_phi_d[&ctx.g2],
            report.d_phi_c,
        );
        Ok(BudgetRow {
            label: config.label(ctx),
            config,
            report,
            eps_cz,
        })
    })
    .into_iter()
    .collect()
}

pub fn budget_csv(ctx: &GateContext, rows: &[BudgetRow]) -> Result<String> {
    let mut header: Vec<String> = [
        "config",
        "zeta1_tot_mhz",
        "delta_mhz",
        "d_phi_c_deg",
        "d_leak",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.push(format!("d_phi_d_{}_deg", ctx.g1));
    header.push(format!("d_phi_d_{}_deg", ctx.g2));
    for s in &ctx.spectators {
        header.push(format!("d_phi_s_{}_deg", s.label));
    }
    header.push("eps_cz".into());
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvOut::new(&refs)?;
    for r in rows {
        let mut rec = vec![
            r.label.clone(),
            num(r.report.zeta1_tot),
            num(r.report.delta),
            num(r.report.d_phi_c),
            opt(r.report.d_leak),
            num(r.report.d_phi_d[&ctx.g1]),
            num(r.report.d_phi_d[&ctx.g2]),
        ];
        for s in &ctx.spectators {
            rec.push(num(r.report.d_phi_s[&s.label]));
        }
        rec.push(num(r.eps_cz));
        w.row(&rec)?;
    }
    w.finish()
}

// ---------------------------------------------------------------------------
// Ramsey fringes

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamseyOptions {
    /// Phase points per fringe, evenly spread over one period.
    pub points: usize,
    /// Phase offset of the control-in-|0⟩ fringe, degrees.
    pub offset: f64,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        Self {
            points: 8,
            offset: 0.0,
        }
    }
}

/// P(φ) = a + b cos φ + c sin φ, reported as offset + amplitude·cos(φ + phase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SineFit {
    pub offset: f64,
    pub amplitude: f64,
    /// Degrees in [0, 360).
    pub phase: f64,
    /// Standard error of `phase` from binomial shot noise, degrees.
    pub phase_stderr: Option<f64>,
}

impl SineFit {
    pub fn eval(&self, phi_deg: f64) -> f64 {
        self.offset + self.amplitude * (phi_deg + self.phase).to_radians().cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyResult {
    pub phases: Vec<f64>,
    /// Measured |1⟩ probability with the control in |0⟩.
    pub control0: Vec<f64>,
    /// Same with the control in |1⟩.
    pub control1: Vec<f64>,
    pub fit0: SineFit,
    pub fit1: SineFit,
    /// Fitted phase difference, degrees in [0, 360); 180 for an ideal CZ.
    pub difference: f64,
    /// difference − 180°, wrapped to (−180, 180].
    pub d_phi_c: f64,
    pub stderr: Option<f64>,
}

/// Least-squares sine fit. `shots` sets the binomial variance used for the
/// phase standard error.
pub fn fit_sine(phases_deg: &[f64], p: &[f64], shots: Option<u64>) -> Result<SineFit> {
    if phases_deg.len() != p.len() || p.len() < 3 {
        return Err(Error::FitFailure("need at least 3 paired samples".into()));
    }
    let rows: Vec<Vector3<f64>> = phases_deg
        .iter()
        .map(|d| {
            let r = d.to_radians();
            Vector3::new(1.0, r.cos(), r.sin())
        })
        .collect();
    let mut xtx = Matrix3::zeros();
    let mut xty = Vector3::zeros();
    for (x, &y) in rows.iter().zip(p) {
        if !y.is_finite() {
            return Err(Error::FitFailure("non-finite sample".into()));
        }
        xtx += x * x.transpose();
        xty += x * y;
    }
    let inv = xtx
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::FitFailure("phase points do not span a fringe".into()))?;
    let beta = inv * xty;
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    let amp2 = b * b + c * c;
    let spread = p.iter().fold(0.0f64, |m, v| m.max((v - a).abs()));
    if amp2.sqrt() <= 1e-9 * spread.max(1e-12) || amp2 == 0.0 {
        return Err(Error::FitFailure("flat fringe; phase undefined".into()));
    }
    // b cos φ + c sin φ = A cos(φ + θ) with A cos θ = b, A sin θ = −c.
    let theta = (-c).atan2(b);
    let phase_stderr = shots.map(|n| {
        let mut meat = Matrix3::zeros();
        for x in &rows {
            let fitted = (x.dot(&beta)).clamp(0.0, 1.0);
            meat += x * x.transpose() * (fitted * (1.0 - fitted) / n as f64);
        }
        let cov = inv * meat * inv;
        let grad = Vector3::new(0.0, c / amp2, -b / amp2);
        (grad.dot(&(cov * grad))).max(0.0).sqrt().to_degrees()
    });
    Ok(SineFit {
        offset: a,
        amplitude: amp2.sqrt(),
        phase: crate::dynamics::wrap360(theta.to_degrees()),
        phase_stderr,
    })
}

pub fn synthesize_ramsey(
    phi_c: f64,
    contrast: f64,
    shots: Option<u64>,
    seed: u64,
) -> Result<RamseyResult> {
    synthesize_ramsey_with(phi_c, contrast, shots, seed, RamseyOptions::default())
}

/// Two Ramsey fringes on the target, control in |0⟩ and in |1⟩, with
/// P(φ) = ½ + (contrast/2)·cos(φ + offset) and the second fringe shifted by
/// 180° + `phi_c`; optional binomial shot noise from a seeded generator.
pub fn synthesize_ramsey_with(
    phi_c: f64,
    contrast: f64,
    shots: Option<u64>,
    seed: u64,
    opts: RamseyOptions,
) -> Result<RamseyResult> {
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "contrast must be in (0, 1], got {contrast}"
        )));
    }
    if !phi_c.is_finite() {
        return Err(Error::InvalidArgument("phi_c must be finite".into()));
    }
    if opts.points < 3 {
        return Err(Error::InvalidArgument(
            "need at least 3 phase points".into(),
        ));
    }
    if shots == Some(0) {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let phases: Vec<f64> = (0..opts.points)
        .map(|k| 360.0 * k as f64 / opts.points as f64)
        .collect();
    let ideal = |shift: f64| -> Vec<f64> {
        phases
            .iter()
            .map(|phi| 0.5 + 0.5 * contrast * (phi + opts.offset + shift).to_radians().cos())
            .collect()
    };
    let mut control0 = ideal(0.0);
    let mut control1 = ideal(180.0 + phi_c);
    if let Some(n) = shots {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in control0.iter_mut().chain(control1.iter_mut()) {
            let dist = Binomial::new(n, p.clamp(0.0, 1.0))
                .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?;
            *p = dist.sample(&mut rng) as f64 / n as f64;
        }
    }
    let fit0 = fit_sine(&phases, &control0, shots)?;
    let fit1 = fit_sine(&phases, &control1, shots)?;
    let difference = crate::dynamics::wrap360(fit1.phase - fit0.phase);
    let stderr = match (fit0.phase_stderr, fit1.phase_stderr) {
        (Some(a), Some(b)) => Some(a.hypot(b)),
        _ => None,
    };
    Ok(RamseyResult {
        phases,
        control0,
        control1,
        fit0,
        fit1,
        difference,
        d_phi_c: crate::dynamics::wrap180(difference - 180.0),
        stderr,
    })
}

pub fn ramsey_csv(r: &RamseyResult) -> Result<String> {
    let mut w = CsvOut::new(&[
        "phase_deg",
        "p_control0",
        "p_control1",
        "fit_control0",
        "fit_control1",
    ])?;
    for (k, &phi) in r.phases.iter().enumerate() {
        w.row(&[
            num(phi),
            num(r.control0[k]),
            num(r.control1[k]),
            num(r.fit0.eval(phi)),
            num(r.fit1.eval(phi)),
        ])?;
    }
    w.finish()
}

// ---------------------------------------------------------------------------
// Figures

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1c,
    Fig2,
    Fig3,
    Fig4,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1c" => Ok(Self::Fig1c),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            other => Err(Error::InvalidArgument(format!(
                "unknown figure {other:?}; expected fig1c, fig2, fig3 or fig4"
            ))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1c => "fig1c",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Self::Svg | Self::Both)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?}; expected csv, svg or both"
            ))),
        }
    }
}

/// Timing used for the figure scenarios: t_g, t_b, t_s in ns.
pub const FIGURE_TIMING: (f64, f64, f64) = (80.0, 5.0, 53.0);

fn spectator(label: &str, role: SpectatorRole) -> Spectator {
    Spectator {
        label: label.into(),
        role,
    }
}

/// CZ Q4–Q2 with Q1, Q6, Q7 coupled to Q4 (the |Q1 Q6 Q7⟩ configurations).
pub fn three_spectator_context() -> GateContext {
    let (t_g, t_b, t_s) = FIGURE_TIMING;
    let s1 = SpectatorRole::OnComputationalQubit;
    GateContext::new(
        "Q4",
        "Q2",
        vec![
            spectator("Q1", s1),
            spectator("Q6", s1),
            spectator("Q7", s1),
        ],
        t_g,
        t_b,
        t_s,
    )
    .expect("static context is valid")
}

/// Fig. 1(c) parameters: α_G = α_S = −300 MHz, J = 4.5 MHz.
pub fn fig1c_rows(pole_eps: f64) -> Vec<(f64, Result<ShiftTriple, Pole>)> {
    (0..=800)
        .map(|k| -800.0 + 2.0 * k as f64)
        .map(|d| (d, shifts_at(d, -300.0, 0.0, -300.0, 4.5, pole_eps)))
        .collect()
}

/// Writes the figure's CSV and/or SVG files into `out_dir` and returns their
/// paths. Output is deterministic.
pub fn reproduce_figure(
    which: Figure,
    device: &DeviceTopology,
    out_dir: &Path,
    format: OutputFormat,
    pole_eps: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<(String, String)> = Vec::new();
    let name = which.name();
    match which {
        Figure::Fig1c => {
            let rows = fig1c_rows(pole_eps);
            let mut w = CsvOut::new(&[
                "delta_mhz",
                "zeta1_mhz",
                "zeta2_mhz",
                "zeta12_mhz",
                "diverged",
            ])?;
            for (d, z) in &rows {
                let v = z.as_ref().ok();
                w.row(&[
                    num(*d),
                    opt(v.map(|z| z.zeta1)),
                    opt(v.map(|z| z.zeta2)),
                    opt(v.map(|z| z.zeta12)),
                    z.is_err().to_string(),
                ])?;
            }
            files.push((format!("{name}.csv"), w.finish()?));
            let series = |label: &str, f: fn(&ShiftTriple) -> f64| Series {
                name: label.into(),
                points: rows
                    .iter()
                    .map(|(d, z)| (*d, z.as_ref().ok().map(f)))
                    .collect(),
                markers: false,
            };
            let chart = LineChart {
                title: "Dispersive shifts, J = 4.5 MHz, α = −300 MHz".into(),
                x_label: "Δ (MHz)".into(),
                y_label: "shift (MHz)".into(),
                y_range: Some((-1.5, 1.5)),
                series: vec![
                    series("ζ1", |z| z.zeta1),
                    series("ζ2", |z| z.zeta2),
                    series("ζ12", |z| z.zeta12),
                ],
            };
            files.push((format!("{name}.svg"), chart.render()));
        }
        Figure::Fig2 => {
            let (t_g, t_b, t_s) = FIGURE_TIMING;
            let cases = [
                (
                    "s1_Q1_on_Q4",
                    GateContext::new(
                        "Q4",
                        "Q2",
                        vec![spectator("Q1", SpectatorRole::OnComputationalQubit)],
                        t_g,
                        t_b,
                        t_s,
                    )?,
                    SweepRange::new(300.0, 800.0, 251)?,
                ),
                (
                    "s2_Q3_on_Q1",
                    GateContext::new(
                        "Q4",
                        "Q1",
                        vec![spectator("Q3", SpectatorRole::OnLeakageQubit)],
                        t_g,
                        t_b,
                        t_s,
                    )?,
                    SweepRange::new(-800.0, -400.0, 201)?,
                ),
            ];
            let mut w = CsvOut::new(&[
                "case",
                "detuning_mhz",
                "zeta1_mhz",
                "zeta12_mhz",
                "delta_mhz",
                "d_phi_c_deg",
                "d_leak",
                "diverged",
            ])?;
            let mut series = Vec::new();
            for (case, ctx, range) in cases {
                let mut spec = SweepSpec::new(
                    SweepParameter::SpectatorDetuning,
                    range,
                    ctx,
                    device.clone(),
                );
                spec.pole_eps = pole_eps;
                let rows = run_sweep(&spec)?;
                for r in &rows {
                    w.row(&[
                        case.to_string(),
                        num(r.x),
                        opt(r.shifts.map(|z| z.zeta1)),
                        opt(r.shifts.map(|z| z.zeta12)),
                        opt(r.delta),
                        opt(r.d_phi_c),
                        opt(r.d_leak),
                        r.diverged().to_string(),
                    ])?;
                }
                series.push(Series {
                    name: case.into(),
                    points: rows.iter().map(|r| (r.x, r.d_phi_c)).collect(),
                    markers: false,
                });
            }
            files.push((format!("{name}.csv"), w.finish()?));
            let chart = LineChart {
                title: "Conditional phase error vs spectator detuning".into(),
                x_label: "Δ (MHz)".into(),
                y_label: "δΦc (deg)".into(),
                y_range: Some((-30.0, 30.0)),
                series,
            };
            files.push((format!("{name}.svg"), chart.render()));
        }
        Figure::Fig3 | Figure::Fig4 => {
            let ctx = three_spectator_context();
            let rows = run_budget(&ctx, device, pole_eps)?;
            if which == Figure::Fig3 {
                // Sum of the single-spectator rows (one bit set) for comparison.
                let k = ctx.spectators.len();
                let single: Vec<f64> = (0..k)
                    .map(|i| rows[1 << (k - 1 - i)].report.d_phi_c)
                    .collect();
                let mut w =
                    CsvOut::new(&["config", "zeta1_tot_mhz", "d_phi_c_deg", "d_phi_c_sum_deg"])?;
                let mut pts = Vec::new();
                for (idx, r) in rows.iter().enumerate() {
                    let sum: f64 = (0..k)
                        .filter(|i| idx >> (k - 1 - i) & 1 == 1)
                        .map(|i| single[i])
                        .sum();
                    w.row(&[
                        r.label.clone(),
                        num(r.report.zeta1_tot),
                        num(r.report.d_phi_c),
                        num(sum),
                    ])?;
                    pts.push((idx as f64, Some(r.report.d_phi_c)));
                }
                files.push((format!("{name}.csv"), w.finish()?));
                let chart = LineChart {
                    title: "δΦc per |Q1 Q6 Q7⟩ configuration".into(),
                    x_label: "configuration index".into(),
                    y_label: "δΦc (deg)".into(),
                    y_range: None,
                    series: vec![Series {
                        name: "calculated".into(),
                        points: pts,
                        markers: true,
                    }],
                };
                files.push((format!("{name}.svg"), chart.render()));
            } else {
                files.push((format!("{name}.csv"), budget_csv(&ctx, &rows)?));
                let curve = fig4_curve(&ctx, device)?;
                let mut w =
                    CsvOut::new(&["zeta1_tot_mhz", "d_phi_c_deg", "d_phi_d_deg", "eps_cz"])?;
                for r in &curve {
                    w.row(&[num(r.x), opt(r.d_phi_c), opt(r.d_phi_d), opt(r.eps_cz)])?;
                }
                files.push((format!("{name}_curve.csv"), w.finish()?));
                let chart = LineChart {
                    title: "CZ error vs ζ1,tot (phase errors only)".into(),
                    x_label: "ζ1,tot (MHz)".into(),
                    y_label: "ε_CZ".into(),
                    y_range: None,
                    series: vec![
                        Series {
                            name: "model".into(),
                            points: curve.iter().map(|r| (r.x, r.eps_cz)).collect(),
                            markers: false,
                        },
                        Series {
                            name: "configurations".into(),
                            points: rows
                                .iter()
                                .map(|r| (r.report.zeta1_tot, Some(r.eps_cz)))
                                .collect(),
                            markers: true,
                        },
                    ],
                };
                files.push((format!("{name}.svg"), chart.render()));
            }
        }
    }

    let mut written = Vec::new();
    for (file, body) in files {
        let is_csv = file.ends_with(".csv");
        if (is_csv && !format.csv()) || (!is_csv && !format.svg()) {
            continue;
        }
        let path = out_dir.join(file);
        fs::write(&path, body).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// ε_CZ against ζ1,tot over [1.25·min ζ1,tot, 0] of the configurations.
pub fn fig4_curve(ctx: &GateContext, device: &DeviceTopology) -> Result<Vec<SweepRow>> {
    let shifts = spectator_shifts(ctx, device, DEFAULT_POLE_EPS)?;
    let most: f64 = shifts
        .iter()
        .filter_map(|s| s.gate.ok())
        .map(|z| z.zeta1.min(0.0))
        .sum();
    let lo = if most < 0.0 { 1.25 * most } else { -0.25 };
    let spec = SweepSpec::new(
        SweepParameter::Zeta1Tot,
        SweepRange::new(lo, 0.0, 101)?,
        ctx.clone(),
        device.clone(),
    );
    run_sweep(&spec)
}

// ---------------------------------------------------------------------------
// CSV and SVG helpers

/// Nine significant digits.
pub fn num(v: f64) -> String {
    // Normalise −0 so identical results print identically.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.8e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct CsvOut {
    w: csv::Writer<Vec<u8>>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

impl CsvOut {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        Ok(Self { w })
    }

    fn row(&mut self, rec: &[String]) -> Result<()> {
        self.w.write_record(rec).map_err(csv_err)
    }

    fn finish(self) -> Result<String> {
        let bytes = self
            .w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// `None` breaks the line.
    pub points: Vec<(f64, Option<f64>)>,
    pub markers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Values outside are clipped (the line is broken there).
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl LineChart {
    pub fn render(&self) -> String {
        let (w, h) = (640.0, 420.0);
        let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0));
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
        let (mut y0, mut y1) = self.y_range.unwrap_or_else(|| {
            self.series
                .iter()
                .flat_map(|s| s.points.iter().filter_map(|p| p.1))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
                    (a.min(y), b.max(y))
                })
        });
        if !(x0.is_finite() && x1.is_finite()) {
            (x0, x1) = (0.0, 1.0);
        }
        if !(y0.is_finite() && y1.is_finite()) {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        if self.y_range.is_none() {
            let pad = 0.05 * (y1 - y0);
            y0 -= pad;
            y1 += pad;
        }
        let pw = w - left - right;
        let ph = h - top - bottom;
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(xv),
                top + ph + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            escape(&self.y_label)
        );
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(
                s,
                r##"<line x1="{left}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
                left + pw,
                sy(0.0),
                sy(0.0)
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let inside = |y: f64| y >= y0 && y <= y1;
            let mut segment: Vec<String> = Vec::new();
            let flush = |seg: &mut Vec<String>, s: &mut String| {
                if seg.len() > 1 && !series.markers {
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        seg.join(" ")
                    );
                }
                seg.clear();
            };
            for &(x, y) in &series.points {
                match y {
                    Some(y) if inside(y) => {
                        segment.push(format!("{:.2},{:.2}", sx(x), sy(y)));
                        if series.markers {
                            let _ = writeln!(
                                s,
                                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="none" stroke="{color}"/>"#,
                                sx(x),
                                sy(y)
                            );
                        }
                    }
                    _ => flush(&mut segment, &mut s),
                }
            }
            flush(&mut segment, &mut s);
            let ly = top + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}" fill="{color}" text-anchor="end">{}</text>"#,
                left + pw - 8.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let t = format!("{v:.3}");
        let t = t.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.into()
        }
    }
}
