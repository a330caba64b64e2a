//! Time-domain simulation of the non-adiabatic |11⟩↔|02⟩ CZ gate.
//!
//! Hamiltonians are written in MHz and time in ns. Every problem here has the
//! form H(t) = H_0 + a(t)·D with D diagonal (the number operator of the
//! pulsed qubit), so each step is taken with the two-point Gauss–Legendre
//! Magnus expansion
//!
//! ```text
//! Ω = −i·s·h/2·(H(t1) + H(t2)) − (√3/12)·s²h²·(a(t2) − a(t1))·[D, H_0]
//! ```
//!
//! with s = 2π·10⁻³ rad/(MHz·ns), and U_step = exp(Ω) evaluated exactly. The
//! scheme is fourth order and unitary up to rounding.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::device::{gate_duration_from_j, TransmonSpec};
use crate::dispersive::OperatingPoint;
use crate::linalg::{eigh, expm_neg_i_hermitian};
use crate::roots::{bracketed_root, golden_min};
use crate::{Error, Result};

/// rad per MHz·ns.
const TWO_PI_MHZ_NS: f64 = 2.0 * PI * 1e-3;
/// Largest integrator step, ns.
pub const DEFAULT_DT: f64 = 0.01;
/// Allowed norm drift over a simulation.
pub const UNITARITY_TOL: f64 = 1e-9;
/// Filter width used by the device's flux line, ns.
pub const DEFAULT_SIGMA: f64 = 1.0;
/// The Gaussian kernel is truncated at ± this many σ.
const KERNEL_HALF_WIDTH: f64 = 4.0;

pub const CALIBRATION_PHASE_TOL: f64 = 0.05;
pub const CALIBRATION_LEAK_TOL: f64 = 1e-3;

/// Rectangular frequency excursion convolved with a normalized Gaussian.
///
/// The rectangle occupies [4σ, 4σ + duration] inside a simulation window of
/// length duration + 8σ, so the filtered edges fit entirely in the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseShape {
    /// Frequency excursion of the pulsed qubit, MHz.
    pub amplitude: f64,
    /// Rectangle length, ns.
    pub duration: f64,
    /// Gaussian filter width, ns; 0 is the ideal rectangle.
    pub sigma: f64,
}

impl PulseShape {
    pub fn new(amplitude: f64, duration: f64, sigma: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidArgument(format!("pulse duration must be positive, got {duration}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("filter width must be ≥ 0, got {sigma}")));
        }
        if !amplitude.is_finite() {
            return Err(Error::InvalidArgument("pulse amplitude must be finite".into()));
        }
        Ok(Self {
            amplitude,
            duration,
            sigma,
        })
    }

    pub fn rectangle(amplitude: f64, duration: f64) -> Result<Self> {
        Self::new(amplitude, duration, 0.0)
    }

    pub fn padding(&self) -> f64 {
        KERNEL_HALF_WIDTH * self.sigma
    }

    /// Total simulated time, ns.
    pub fn window(&self) -> f64 {
        self.duration + 2.0 * self.padding()
    }

    /// Filtered envelope in [0, 1].
    pub fn envelope(&self, t: f64) -> f64 {
        let start = self.padding();
        let end = start + self.duration;
        if self.sigma == 0.0 {
            return if (start..=end).contains(&t) { 1.0 } else { 0.0 };
        }
        let w = self.padding();
        // ∫ g(u)·1[start ≤ t − u ≤ end] du over |u| ≤ w, normalized.
        let hi = (t - start).min(w);
        let lo = (t - end).max(-w);
        if hi <= lo {
            return 0.0;
        }
        let cdf = |u: f64| libm::erf(u / (SQRT_2 * self.sigma));
        let norm = libm::erf(KERNEL_HALF_WIDTH / SQRT_2);
        ((cdf(hi) - cdf(lo)) / (2.0 * norm)).min(1.0)
    }

    pub fn detuning(&self, t: f64) -> f64 {
        self.amplitude * self.envelope(t)
    }
}

/// One excitation-number block: H_0 and the diagonal of D.
#[derive(Debug, Clone)]
struct Block {
    h0: DMatrix<f64>,
    pulsed: DVector<f64>,
}

impl Block {
    fn commutator(&self) -> DMatrix<f64> {
        let n = self.h0.nrows();
        DMatrix::from_fn(n, n, |i, j| (self.pulsed[i] - self.pulsed[j]) * self.h0[(i, j)])
    }

    fn hamiltonian(&self, a: f64) -> DMatrix<f64> {
        let mut h = self.h0.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += a * self.pulsed[i];
        }
        h
    }
}

/// Sampled state record for trajectory export.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t_ns: f64,
    pub amplitudes: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy)]
struct StepPlan {
    steps: usize,
    h: f64,
}

fn plan(window: f64, dt: f64) -> StepPlan {
    let steps = (window / dt).ceil().max(1.0) as usize;
    StepPlan {
        steps,
        h: window / steps as f64,
    }
}

/// Observer called with (t, U(t)) every given number of steps.
type Recorder<'a> = (usize, &'a mut dyn FnMut(f64, &DMatrix<Complex64>));

/// Propagator of `block` over `plan` with detuning a(t) = `drive(t)`.
/// Calls `record(t, U)` every `record_every` steps when given.
fn propagate<F: Fn(f64) -> f64>(
    block: &Block,
    drive: F,
    plan: StepPlan,
    mut record: Option<Recorder<'_>>,
) -> DMatrix<Complex64> {
    let n = block.h0.nrows();
    let comm = block.commutator();
    let (c1, c2) = (0.5 - 3f64.sqrt() / 6.0, 0.5 + 3f64.sqrt() / 6.0);
    let s = TWO_PI_MHZ_NS;
    let h = plan.h;
    let mut u = DMatrix::<Complex64>::identity(n, n);
    let mut cache: Option<(f64, f64, DMatrix<Complex64>)> = None;
    if let Some((_, rec)) = record.as_mut() {
        rec(0.0, &u);
    }
    for k in 0..plan.steps {
        let t0 = k as f64 * h;
        let a1 = drive(t0 + c1 * h);
        let a2 = drive(t0 + c2 * h);
        let reuse = matches!(&cache, Some((x, y, _)) if *x == a1 && *y == a2);
        if !reuse {
            let sum = block.hamiltonian(a1) + block.hamiltonian(a2);
            let mut kmat: DMatrix<Complex64> = sum.map(|v| Complex64::new(0.5 * s * h * v, 0.0));
            let corr = (3f64.sqrt() / 12.0) * s * s * h * h * (a2 - a1);
            if corr != 0.0 {
                kmat += comm.map(|v| Complex64::new(0.0, -corr * v));
            }
            cache = Some((a1, a2, expm_neg_i_hermitian(&kmat)));
        }
        let step = &cache.as_ref().expect("step cached").2;
        u = step * u;
        if let Some((every, rec)) = record.as_mut() {
            if (k + 1) % *every == 0 || k + 1 == plan.steps {
                rec((k + 1) as f64 * h, &u);
            }
        }
    }
    u
}

fn column_norm_drift(u: &DMatrix<Complex64>, col: usize) -> f64 {
    (u.column(col).norm() - 1.0).abs()
}

/// Wraps degrees into [0, 360).
pub fn wrap360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wraps degrees into (−180, 180].
pub fn wrap180(deg: f64) -> f64 {
    let w = wrap360(deg);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateOutcome {
    /// Conditional phase, degrees in [0, 360).
    pub phi_c: f64,
    /// Population left in |02⟩ when one gate qubit starts in (|0⟩+|1⟩)/√2
    /// and the other in |1⟩.
    pub leak: f64,
    /// |⟨02|U|11⟩|², the transfer out of |11⟩.
    pub leak_from_11: f64,
    /// Largest |‖ψ‖ − 1| over the propagated initial states.
    pub norm_drift: f64,
    /// Basis labels of the trajectory amplitudes.
    pub labels: Vec<String>,
    #[serde(skip)]
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

impl GateOutcome {
    /// Trajectory as CSV: `t_ns` then `re_<label>,im_<label>` per state.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_ns".to_string()];
        for l in &self.labels {
            header.push(format!("re_{l}"));
            header.push(format!("im_{l}"));
        }
        let io = |e: csv::Error| Error::InvalidArgument(format!("trajectory export: {e}"));
        w.write_record(&header).map_err(io)?;
        for p in self.trajectory.iter().flatten() {
            let mut row = vec![format!("{:.6}", p.t_ns)];
            for a in &p.amplitudes {
                row.push(format!("{:.9e}", a.re));
                row.push(format!("{:.9e}", a.im));
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("trajectory export: {e}")))?;
        Ok(())
    }
}

/// |11⟩ and |02⟩ coupled by √2·J with a static spectator detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelGateProblem {
    /// √2·J, MHz.
    pub j_eff: f64,
    /// Static detuning E11 − E02 while the pulse is on, MHz.
    pub delta: f64,
    /// The pulse; outside it E11 − E02 = delta − amplitude.
    pub pulse: PulseShape,
}

impl TwoLevelGateProblem {
    pub fn new(j_eff: f64, delta: f64, pulse: PulseShape) -> Result<Self> {
        if !(j_eff.is_finite() && j_eff > 0.0) {
            return Err(Error::InvalidArgument(format!("j_eff must be positive, got {j_eff}")));
        }
        Ok(Self { j_eff, delta, pulse })
    }

    /// Resonant rectangle of length 10³/(2√2 J) for exchange coupling `j`.
    pub fn ideal(j: f64, delta: f64) -> Result<Self> {
        let t = gate_duration_from_j(j)?;
        Self::new(SQRT_2 * j, delta, PulseShape::rectangle(0.0, t)?)
    }

    /// Largest stable step: 1/(50·max rate), ns.
    pub fn resolution_bound(&self) -> f64 {
        let rate = self
            .j_eff
            .max(self.delta.abs())
            .max(self.pulse.amplitude.abs())
            .max(f64::MIN_POSITIVE);
        1e3 / (50.0 * rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    /// Step size, ns; `None` picks min(0.01 ns, σ/4, resolution bound).
    pub dt: Option<f64>,
    /// Record a trajectory point every this many steps.
    pub record_every: Option<usize>,
}

fn choose_dt(opts: &SimOptions, pulse: &PulseShape, bound: f64) -> Result<f64> {
    match opts.dt {
        Some(dt) if !(dt.is_finite() && dt > 0.0) => {
            Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")))
        }
        Some(dt) if dt > bound => Err(Error::StepSize { dt, bound }),
        Some(dt) => Ok(dt),
        None => {
            let mut dt = DEFAULT_DT.min(bound);
            if pulse.sigma > 0.0 {
                dt = dt.min(pulse.sigma / 4.0);
            }
            Ok(dt)
        }
    }
}

pub fn simulate_two_level(problem: &TwoLevelGateProblem) -> Result<GateOutcome> {
    simulate_two_level_with(problem, SimOptions::default())
}

/// Integrates the {|11⟩, |02⟩} problem from |11⟩.
///
/// `phi_c` is the phase of ⟨11|ψ⟩ relative to the uncoupled |11⟩, which
/// carries exactly the single-qubit phases.
pub fn simulate_two_level_with(problem: &TwoLevelGateProblem, opts: SimOptions) -> Result<GateOutcome> {
    let pulse = problem.pulse;
    let dt = choose_dt(&opts, &pulse, problem.resolution_bound())?;
    let plan = plan(pulse.window(), dt);
    let block = Block {
        h0: DMatrix::from_row_slice(
            2,
            2,
            &[problem.delta - pulse.amplitude, problem.j_eff, problem.j_eff, 0.0],
        ),
        pulsed: DVector::from_vec(vec![1.0, 0.0]),
    };
    let drive = |t: f64| pulse.detuning(t);

    let mut points = Vec::new();
    let mut rec = |t: f64, u: &DMatrix<Complex64>| {
        points.push(TrajectoryPoint {
            t_ns: t,
            amplitudes: vec![u[(0, 0)], u[(1, 0)]],
        });
    };
    let record = opts
        .record_every
        .map(|e| (e.max(1), &mut rec as &mut dyn FnMut(f64, &DMatrix<Complex64>)));
    let u = propagate(&block, drive, plan, record);

    let drift = column_norm_drift(&u, 0);
    if drift > UNITARITY_TOL {
        return Err(Error::UnitarityDrift(drift));
    }
    // Uncoupled |11⟩ accumulates −s∫(E11 − E02) dt in this frame.
    let c1 = 0.5 - 3f64.sqrt() / 6.0;
    let c2 = 0.5 + 3f64.sqrt() / 6.0;
    let integral: f64 = (0..plan.steps)
        .map(|k| {
            let t0 = k as f64 * plan.h;
            0.5 * plan.h * (drive(t0 + c1 * plan.h) + drive(t0 + c2 * plan.h))
        })
        .sum::<f64>()
        + (problem.delta - pulse.amplitude) * pulse.window();
    let reference = -TWO_PI_MHZ_NS * integral;
    let phi_c = wrap360((u[(0, 0)].arg() - reference).to_degrees());
    let leak_from_11 = u[(1, 0)].norm_sqr();
    Ok(GateOutcome {
        phi_c,
        leak: 0.5 * leak_from_11,
        leak_from_11,
        norm_drift: drift,
        labels: vec!["11".into(), "02".into()],
        trajectory: opts.record_every.map(|_| points),
    })
}

/// Which gate qubit the flux pulse moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PulsedQubit {
    G1,
    G2,
}

/// The full two-transmon gate problem.
///
/// `g2` is the qubit whose |2⟩ level is used. The pulse shifts the pulsed
/// qubit's frequency by `pulse.detuning(t)`; `spectator_delta` shifts every
/// excitation of `g1` (a spectator on G1 in |1⟩ with ζ1 = spectator_delta).
#[derive(Debug, Clone, PartialEq)]
pub struct PairGateProblem {
    pub g1: TransmonSpec,
    pub g2: TransmonSpec,
    pub j: f64,
    pub pulse: PulseShape,
    pub spectator_delta: f64,
    pub dims: usize,
    pub pulsed: PulsedQubit,
}

impl PairGateProblem {
    /// Problem with the pulsed qubit chosen from the operating point.
    pub fn new(
        g1: &TransmonSpec,
        g2: &TransmonSpec,
        j: f64,
        pulse: PulseShape,
        spectator_delta: f64,
        dims: usize,
    ) -> Self {
        let op = OperatingPoint::for_pair(g1, g2);
        let pulsed = if op.g2_gate != op.g2_idle {
            PulsedQubit::G2
        } else {
            PulsedQubit::G1
        };
        Self {
            g1: g1.clone(),
            g2: g2.clone(),
            j,
            pulse,
            spectator_delta,
            dims,
            pulsed,
        }
    }

    /// Excursion that puts |11⟩ and |02⟩ on bare resonance.
    pub fn resonant_amplitude(&self) -> f64 {
        let target_g2 = self.g1.freq - self.g2.anh;
        match self.pulsed {
            PulsedQubit::G2 => target_g2 - self.g2.freq,
            PulsedQubit::G1 => self.g2.freq + self.g2.anh - self.g1.freq,
        }
    }

    fn block(&self, excitations: usize) -> (Vec<(usize, usize)>, Block) {
        let states: Vec<(usize, usize)> = (0..=excitations)
            .rev()
            .map(|n1| (n1, excitations - n1))
            .filter(|&(a, b)| a < self.dims && b < self.dims)
            .collect();
        let n = states.len();
        // Rotating frame at ω_G1 per excitation; cancels in the conditional phase.
        let frame = self.g1.freq;
        let energy = |(n1, n2): (usize, usize)| {
            self.g1.level(n1) + self.g2.level(n2) - frame * (n1 + n2) as f64
                + self.spectator_delta * n1 as f64
        };
        let mut h0 = DMatrix::zeros(n, n);
        for (i, &s) in states.iter().enumerate() {
            h0[(i, i)] = energy(s);
            for (k, &t) in states.iter().enumerate() {
                // a_1† a_2: (n1, n2) → (n1+1, n2−1)
                if t.0 == s.0 + 1 && s.1 >= 1 && t.1 == s.1 - 1 {
                    let v = self.j * (t.0 as f64).sqrt() * (s.1 as f64).sqrt();
                    h0[(k, i)] = v;
                    h0[(i, k)] = v;
                }
            }
        }
        let pulsed = DVector::from_iterator(
            n,
            states.iter().map(|&(n1, n2)| match self.pulsed {
                PulsedQubit::G1 => n1 as f64,
                PulsedQubit::G2 => n2 as f64,
            }),
        );
        (states, Block { h0, pulsed })
    }

    fn resolution_bound(&self) -> f64 {
        let rate = (SQRT_2 * self.j)
            .max(self.spectator_delta.abs())
            .max(self.pulse.amplitude.abs())
            .max(f64::MIN_POSITIVE);
        1e3 / (50.0 * rate)
    }
}

/// Idle eigenvectors of a block, labelled by maximum overlap.
fn dressed_columns(block: &Block) -> DMatrix<f64> {
    let n = block.h0.nrows();
    let (_, vecs) = eigh(&block.h0);
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|e| (0..n).map(move |b| (e, b)))
        .map(|(e, b)| (vecs[(b, e)].powi(2), e, b))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut out = DMatrix::zeros(n, n);
    let (mut ue, mut ub) = (vec![false; n], vec![false; n]);
    for (_, e, b) in pairs {
        if !ue[e] && !ub[b] {
            ue[e] = true;
            ub[b] = true;
            let mut col = vecs.column(e).into_owned();
            if col[b] < 0.0 {
                col = -col;
            }
            out.set_column(b, &col);
        }
    }
    out
}

pub fn simulate_full_pair(problem: &PairGateProblem) -> Result<GateOutcome> {
    simulate_full_pair_with(problem, SimOptions::default())
}

/// Integrates the excitation blocks holding |00⟩, |01⟩, |10⟩, |11⟩ and |02⟩.
///
/// The exchange coupling conserves excitation number, so the blocks evolve
/// independently; `dims` only truncates them. Initial and final states are
/// the idle dressed eigenstates, and
/// Φc = arg c11 − arg c10 − arg c01 + arg c00 with c_k = ⟨k̃|U|k̃⟩.
pub fn simulate_full_pair_with(problem: &PairGateProblem, opts: SimOptions) -> Result<GateOutcome> {
    if problem.dims < 3 {
        return Err(Error::InvalidArgument(format!(
            "pair simulation needs at least 3 levels, got {}",
            problem.dims
        )));
    }
    if !(problem.j.is_finite() && problem.j >= 0.0) {
        return Err(Error::InvalidArgument(format!("coupling must be ≥ 0, got {}", problem.j)));
    }
    let pulse = problem.pulse;
    let dt = choose_dt(&opts, &pulse, problem.resolution_bound())?;
    let plan = plan(pulse.window(), dt);
    let drive = |t: f64| pulse.detuning(t);

    let mut amp = std::collections::HashMap::new();
    let mut drift: f64 = 0.0;
    let mut leak_from_11 = 0.0;
    let mut trajectory = None;
    for n in 0..=2 {
        let (states, block) = problem.block(n);
        let dressed = dressed_columns(&block).map(|v| Complex64::new(v, 0.0));
        let idx = |s: (usize, usize)| states.iter().position(|&x| x == s).expect("state in block");

        let mut points = Vec::new();
        let want_record = n == 2 && opts.record_every.is_some();
        let mut rec = |t: f64, u: &DMatrix<Complex64>| {
            let psi = u * dressed.column(idx((1, 1)));
            let amps = (dressed.adjoint() * psi).iter().copied().collect();
            points.push(TrajectoryPoint { t_ns: t, amplitudes: amps });
        };
        let record = if want_record {
            opts.record_every
                .map(|e| (e.max(1), &mut rec as &mut dyn FnMut(f64, &DMatrix<Complex64>)))
        } else {
            None
        };
        let u = propagate(&block, drive, plan, record);
        if want_record {
            trajectory = Some((states.clone(), points));
        }
        let in_dressed = dressed.adjoint() * &u * &dressed;
        for (k, &s) in states.iter().enumerate() {
            drift = drift.max(column_norm_drift(&in_dressed, k));
            amp.insert(s, in_dressed[(k, k)]);
        }
        if n == 2 {
            leak_from_11 = in_dressed[(idx((0, 2)), idx((1, 1)))].norm_sqr();
        }
    }
    if drift > UNITARITY_TOL {
        return Err(Error::UnitarityDrift(drift));
    }
    let arg = |s: (usize, usize)| amp[&s].arg();
    let phi = arg((1, 1)) - arg((1, 0)) - arg((0, 1)) + arg((0, 0));
    let (labels, trajectory) = match trajectory {
        Some((states, pts)) => (
            states.iter().map(|(a, b)| format!("{a}{b}")).collect(),
            Some(pts),
        ),
        None => (vec![], None),
    };
    Ok(GateOutcome {
        phi_c: wrap360(phi.to_degrees()),
        leak: 0.5 * leak_from_11,
        leak_from_11,
        norm_drift: drift,
        labels,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub sigma: f64,
    pub dims: usize,
    /// Durations searched, as a fraction of 10³/(2√2 J) either side.
    pub duration_span: f64,
    pub duration_tol: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            dims: 4,
            duration_span: 0.15,
            duration_tol: 0.005,
        }
    }
}

fn meets_target(out: &GateOutcome) -> bool {
    wrap180(out.phi_c - 180.0).abs() < CALIBRATION_PHASE_TOL && out.leak < CALIBRATION_LEAK_TOL
}

/// Pulse giving Φc = 180° with minimal leakage: a root find on amplitude at
/// fixed duration, nested in a golden-section search over duration.
pub fn calibrate_pulse(
    g1: &TransmonSpec,
    g2: &TransmonSpec,
    j: f64,
    opts: CalibrationOptions,
) -> Result<PulseShape> {
    if !(j.is_finite() && j > 0.0) {
        return Err(Error::NoRoot(format!(
            "no conditional phase can build up without coupling (J = {j})"
        )));
    }
    let t_nominal = gate_duration_from_j(j)?;
    let template = PairGateProblem::new(
        g1,
        g2,
        j,
        PulseShape::new(0.0, t_nominal, opts.sigma)?,
        0.0,
        opts.dims,
    );
    let a0 = template.resonant_amplitude();
    let span = 0.3 * 2.0 * SQRT_2 * j;

    let run = |amplitude: f64, duration: f64| -> Result<GateOutcome> {
        let mut p = template.clone();
        p.pulse = PulseShape::new(amplitude, duration, opts.sigma)?;
        simulate_full_pair(&p)
    };
    let amplitude_for = |duration: f64| -> Option<f64> {
        let phase_error = |a: f64| {
            run(a, duration)
                .map(|o| wrap180(o.phi_c - 180.0))
                .unwrap_or(f64::NAN)
        };
        bracketed_root(phase_error, a0 - span, a0 + span, 1e-7, 100)
    };
    let leak_at = |duration: f64| -> f64 {
        match amplitude_for(duration) {
            Some(a) => run(a, duration).map(|o| o.leak).unwrap_or(1.0),
            None => 1.0,
        }
    };
    let (duration, _) = golden_min(
        leak_at,
        t_nominal * (1.0 - opts.duration_span),
        t_nominal * (1.0 + opts.duration_span),
        opts.duration_tol,
    );
    let amplitude = amplitude_for(duration)
        .ok_or_else(|| Error::NoRoot("Φc = 180° not bracketed by the amplitude search".into()))?;
    let pulse = PulseShape::new(amplitude, duration, opts.sigma)?;
    let out = run(amplitude, duration)?;
    if wrap180(out.phi_c - 180.0).abs() >= CALIBRATION_PHASE_TOL {
        return Err(Error::NoRoot(format!("calibrated Φc = {:.4}°", out.phi_c)));
    }
    if out.leak >= CALIBRATION_LEAK_TOL {
        return Err(Error::NoConvergence(format!(
            "leakage floor {:.2e} above {CALIBRATION_LEAK_TOL}",
            out.leak
        )));
    }
    Ok(pulse)
}

/// Returns `pulse` unchanged when it already meets the calibration targets,
/// otherwise recalibrates.
pub fn recalibrate(
    g1: &TransmonSpec,
    g2: &TransmonSpec,
    j: f64,
    pulse: PulseShape,
    opts: CalibrationOptions,
) -> Result<PulseShape> {
    let p = PairGateProblem::new(g1, g2, j, pulse, 0.0, opts.dims);
    if meets_target(&simulate_full_pair(&p)?) {
        return Ok(pulse);
    }
    calibrate_pulse(g1, g2, j, CalibrationOptions { sigma: pulse.sigma, ..opts })
}
