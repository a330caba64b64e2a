//! Second-order dispersive shifts between a gate qubit G and a spectator S,
//! and the phase and leakage errors they cause in the |11⟩↔|02⟩ CZ.
//!
//! With Δ = ω_S − ω_G (MHz), α_G, α_S the anharmonicities and β_G the sextic
//! correction of G:
//!
//! ```text
//! ζ1  = 2J² [ 1/(Δ − α_G) − 1/(Δ + α_S) ]
//! ζ2  =  J² [ −1/Δ + 2/(Δ − α_G) + 3/(Δ − 2α_G − β_G) − 4/(Δ − α_G + α_S) ]
//! ζ12 = ζ2 − ζ1
//! ```
//!
//! ζ1 (ζ2) is the shift of G's |1⟩ (|2⟩) level when S is in |1⟩, i.e.
//! E11 − E10 − E01 + E00 (E21 − E20 − E01 + E00) of the dressed pair.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;

use serde::Serialize;

use crate::device::{DeviceTopology, GateContext, SpectatorConfig, SpectatorRole, TransmonSpec};
use crate::{Error, Result, MHZ_NS};

/// Distance (MHz) from a pole inside which shifts are reported as divergent.
pub const DEFAULT_POLE_EPS: f64 = 1.0;

/// Largest |δ/(2√2 J)| for which the quartic leakage formula is used.
pub const LEAKAGE_VALIDITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftTriple {
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta12: f64,
}

impl ShiftTriple {
    pub fn new(zeta1: f64, zeta2: f64) -> Self {
        Self {
            zeta1,
            zeta2,
            zeta12: zeta2 - zeta1,
        }
    }

    pub const ZERO: ShiftTriple = ShiftTriple {
        zeta1: 0.0,
        zeta2: 0.0,
        zeta12: 0.0,
    };
}

/// The level crossing behind a perturbative pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Resonance {
    /// |11⟩↔|20⟩ at Δ = α_G.
    R11to20,
    /// |11⟩↔|02⟩ at Δ = −α_S.
    R11to02,
    /// |01⟩↔|10⟩ at Δ = 0.
    R01to10,
    /// |21⟩↔|30⟩ at Δ = 2α_G + β_G.
    R21to30,
    /// |21⟩↔|12⟩ at Δ = α_G − α_S.
    R21to12,
}

impl Resonance {
    pub const ALL: [Resonance; 5] = [
        Resonance::R11to20,
        Resonance::R11to02,
        Resonance::R01to10,
        Resonance::R21to30,
        Resonance::R21to12,
    ];

    /// Detuning Δ = ω_S − ω_G at which the crossing occurs.
    pub fn detuning(self, anh_g: f64, beta_g: f64, anh_s: f64) -> f64 {
        match self {
            Resonance::R11to20 => anh_g,
            Resonance::R11to02 => -anh_s,
            Resonance::R01to10 => 0.0,
            Resonance::R21to30 => 2.0 * anh_g + beta_g,
            Resonance::R21to12 => anh_g - anh_s,
        }
    }

    /// Whether ζ1 has a pole here (ζ2 has one at every resonance except
    /// |11⟩↔|02⟩).
    pub fn affects_zeta1(self) -> bool {
        matches!(self, Resonance::R11to20 | Resonance::R11to02)
    }

    pub fn affects_zeta2(self) -> bool {
        !matches!(self, Resonance::R11to02)
    }
}

impl fmt::Display for Resonance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resonance::R11to20 => "|11>-|20>",
            Resonance::R11to02 => "|11>-|02>",
            Resonance::R01to10 => "|01>-|10>",
            Resonance::R21to30 => "|21>-|30>",
            Resonance::R21to12 => "|21>-|12>",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub resonance: Resonance,
    /// Δ of the pole, MHz.
    pub at: f64,
    /// Δ that was requested, MHz.
    pub detuning: f64,
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Δ = {:.3} MHz is within pole_eps of the {} pole at {:.3} MHz",
            self.detuning, self.resonance, self.at
        )
    }
}

/// Shifts from raw parameters. `delta` is ω_S − ω_G.
pub fn shifts_at(
    delta: f64,
    anh_g: f64,
    beta_g: f64,
    anh_s: f64,
    j: f64,
    pole_eps: f64,
) -> Result<ShiftTriple, Pole> {
    for resonance in Resonance::ALL {
        let at = resonance.detuning(anh_g, beta_g, anh_s);
        if (delta - at).abs() < pole_eps {
            return Err(Pole {
                resonance,
                at,
                detuning: delta,
            });
        }
    }
    let j2 = j * j;
    let zeta1 = 2.0 * j2 * (1.0 / (delta - anh_g) - 1.0 / (delta + anh_s));
    let zeta2 = j2
        * (-1.0 / delta + 2.0 / (delta - anh_g) + 3.0 / (delta - 2.0 * anh_g - beta_g)
            - 4.0 / (delta - anh_g + anh_s));
    Ok(ShiftTriple::new(zeta1, zeta2))
}

/// Dispersive shifts of `gate` caused by `spec` at coupling `j`, with the
/// default pole guard.
pub fn shifts(gate: &TransmonSpec, spec: &TransmonSpec, j: f64) -> Result<ShiftTriple, Pole> {
    shifts_eps(gate, spec, j, DEFAULT_POLE_EPS)
}

pub fn shifts_eps(
    gate: &TransmonSpec,
    spec: &TransmonSpec,
    j: f64,
    pole_eps: f64,
) -> Result<ShiftTriple, Pole> {
    shifts_at(spec.freq - gate.freq, gate.anh, gate.beta, spec.anh, j, pole_eps)
}

/// δ/2π = Σ_{S1 in |1⟩} ζ1 − Σ_{S2 in |1⟩} ζ12, in MHz.
///
/// Each item is (role, shift, bit). Spectators in |0⟩ contribute nothing, so
/// their shift may be anything, including a pole.
pub fn gate_detuning<'a, I>(spectators: I) -> Result<f64>
where
    I: IntoIterator<Item = (SpectatorRole, &'a Result<ShiftTriple, Pole>, u8)>,
{
    let mut delta = 0.0;
    for (role, shift, bit) in spectators {
        if bit == 0 {
            continue;
        }
        let s = shift.as_ref().map_err(|p| Error::Divergent(*p))?;
        delta += match role {
            SpectatorRole::OnComputationalQubit => s.zeta1,
            SpectatorRole::OnLeakageQubit => -s.zeta12,
        };
    }
    Ok(delta)
}

/// δΦc = 180°·δ/(2√2 J), degrees.
pub fn conditional_phase_error(delta: f64, j: f64) -> f64 {
    180.0 * delta / (2.0 * SQRT_2 * j)
}

/// δL = ½(π/2)²(δ/(2√2 J))⁴ for one gate qubit in (|0⟩+|1⟩)/√2 and the other
/// in |1⟩.
pub fn leakage_error(delta: f64, j: f64) -> Result<f64> {
    let x = delta / (2.0 * SQRT_2 * j);
    if !x.is_finite() || x.abs() > LEAKAGE_VALIDITY {
        return Err(Error::InvalidArgument(format!(
            "|δ/(2√2J)| = {:.3} is outside the perturbative range (≤ {LEAKAGE_VALIDITY})",
            x.abs()
        )));
    }
    Ok(0.5 * (std::f64::consts::FRAC_PI_2).powi(2) * x.powi(4))
}

/// δΦd = −ζ1,tot (t_g + 2t_b + t_s), degrees.
pub fn dynamical_phase_error(zeta1_tot: f64, ctx: &GateContext) -> f64 {
    -360.0 * zeta1_tot * ctx.window() * MHZ_NS
}

/// Which roundtrip the spectator's neighbouring gate qubit makes, and the
/// state of the distant gate qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectatorPhaseCase {
    /// Neighbour stays in |1⟩ for the whole window.
    ComputationalDistantZero,
    /// Neighbour makes |1⟩→|0⟩→|1⟩ during the gate (distant qubit in |1⟩).
    ComputationalDistantOne,
    /// Neighbour is the |2⟩-visiting qubit, distant qubit in |0⟩.
    LeakageDistantZero,
    /// Neighbour makes |1⟩→|2⟩→|1⟩ during the gate (distant qubit in |1⟩).
    LeakageDistantOne,
}

impl std::str::FromStr for SpectatorPhaseCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "computational-0" => Self::ComputationalDistantZero,
            "computational-1" => Self::ComputationalDistantOne,
            "leakage-0" => Self::LeakageDistantZero,
            "leakage-1" => Self::LeakageDistantOne,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown spectator-phase case {other:?}; expected computational-0, \
                     computational-1, leakage-0 or leakage-1"
                )))
            }
        })
    }
}

/// Phase error on the spectator itself, degrees.
///
/// `zeta1`/`zeta2` are the shifts at the gate operating point and
/// `zeta1_idle` the shift at the neighbour's idle frequency (only the
/// leakage cases use it).
pub fn spectator_phase_error(
    case: SpectatorPhaseCase,
    zeta1: f64,
    zeta2: f64,
    zeta1_idle: f64,
    ctx: &GateContext,
) -> f64 {
    let idle = 2.0 * ctx.t_b + ctx.t_s;
    let cycles = match case {
        SpectatorPhaseCase::ComputationalDistantZero => zeta1 * (ctx.t_g + idle),
        SpectatorPhaseCase::ComputationalDistantOne => zeta1 * (0.5 * ctx.t_g + idle),
        SpectatorPhaseCase::LeakageDistantZero => zeta1 * ctx.t_g + zeta1_idle * idle,
        SpectatorPhaseCase::LeakageDistantOne => {
            (0.5 * zeta1 + 0.5 * zeta2) * ctx.t_g + zeta1_idle * idle
        }
    };
    -360.0 * cycles * MHZ_NS
}

/// ζ1,tot = Σ q_i ζ1,i.
pub fn zeta1_total(per_spectator: &[(f64, u8)]) -> f64 {
    per_spectator
        .iter()
        .map(|&(z, bit)| if bit == 0 { 0.0 } else { z })
        .sum()
}

/// Qubit frequencies while the flux pulse holds |11⟩ and |02⟩ on resonance.
///
/// The qubit that has to move down does: G2 goes to ω_G1 − α_G2 when it
/// idles above that point, otherwise G1 goes to ω_G2 + α_G2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub g1_idle: f64,
    pub g2_idle: f64,
    pub g1_gate: f64,
    pub g2_gate: f64,
}

impl OperatingPoint {
    pub fn for_pair(g1: &TransmonSpec, g2: &TransmonSpec) -> Self {
        let target = g1.freq - g2.anh;
        if g2.freq >= target {
            Self {
                g1_idle: g1.freq,
                g2_idle: g2.freq,
                g1_gate: g1.freq,
                g2_gate: target,
            }
        } else {
            Self {
                g1_idle: g1.freq,
                g2_idle: g2.freq,
                g1_gate: g2.freq + g2.anh,
                g2_gate: g2.freq,
            }
        }
    }

    /// Flux excursion of (G1, G2), MHz.
    pub fn excursion(&self) -> (f64, f64) {
        (self.g1_gate - self.g1_idle, self.g2_gate - self.g2_idle)
    }
}

/// Shifts of one spectator on its gate qubit at the gate point and at idle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectatorShifts {
    pub label: String,
    pub role: SpectatorRole,
    pub gate: Result<ShiftTriple, Pole>,
    pub idle: Result<ShiftTriple, Pole>,
}

pub fn spectator_shifts(
    ctx: &GateContext,
    device: &DeviceTopology,
    pole_eps: f64,
) -> Result<Vec<SpectatorShifts>> {
    ctx.validate_against(device)?;
    let g1 = device.require_qubit(&ctx.g1)?;
    let g2 = device.require_qubit(&ctx.g2)?;
    let op = OperatingPoint::for_pair(g1, g2);
    ctx.spectators
        .iter()
        .map(|s| {
            let spec = device.require_qubit(&s.label)?;
            let (gate_q, gate_freq) = match s.role {
                SpectatorRole::OnComputationalQubit => (g1, op.g1_gate),
                SpectatorRole::OnLeakageQubit => (g2, op.g2_gate),
            };
            let j = device
                .coupling(&s.label, &gate_q.id)
                .expect("validated coupling");
            let at = |freq: f64| {
                shifts_at(spec.freq - freq, gate_q.anh, gate_q.beta, spec.anh, j, pole_eps)
            };
            Ok(SpectatorShifts {
                label: s.label.clone(),
                role: s.role,
                gate: at(gate_freq),
                idle: at(gate_q.freq),
            })
        })
        .collect()
}

/// Every closed-form error for one spectator configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseErrorReport {
    /// |11⟩–|02⟩ detuning during the gate, MHz.
    pub delta: f64,
    /// Conditional phase error, degrees.
    pub d_phi_c: f64,
    /// Dynamical phase error per gate qubit, degrees.
    pub d_phi_d: BTreeMap<String, f64>,
    /// Phase error on each excited spectator (distant gate qubit in |0⟩),
    /// degrees; zero for spectators in |0⟩.
    pub d_phi_s: BTreeMap<String, f64>,
    /// Leakage population; `None` outside the perturbative range.
    pub d_leak: Option<f64>,
    /// ζ1,tot on G1, MHz.
    pub zeta1_tot: f64,
    /// ζ1,tot on G2 at its gate operating point, MHz.
    pub zeta1_tot_g2: f64,
}

/// Closed-form errors for `config`. Fails with [`Error::Divergent`] if an
/// excited spectator sits on a pole.
pub fn phase_error_report(
    ctx: &GateContext,
    device: &DeviceTopology,
    config: &SpectatorConfig,
    pole_eps: f64,
) -> Result<PhaseErrorReport> {
    let shifts = spectator_shifts(ctx, device, pole_eps)?;
    let j = device.coupling(&ctx.g1, &ctx.g2).expect("validated coupling");
    report_from_shifts(ctx, &shifts, config, j)
}

pub fn report_from_shifts(
    ctx: &GateContext,
    shifts: &[SpectatorShifts],
    config: &SpectatorConfig,
    j: f64,
) -> Result<PhaseErrorReport> {
    let delta = gate_detuning(shifts.iter().map(|s| (s.role, &s.gate, config.bit(&s.label))))?;

    let idle_window = 2.0 * ctx.t_b + ctx.t_s;
    let mut zeta1_tot = 0.0;
    let mut g2_gate = 0.0;
    let mut g2_idle = 0.0;
    let mut d_phi_s = BTreeMap::new();
    for s in shifts {
        let bit = config.bit(&s.label);
        if bit == 0 {
            d_phi_s.insert(s.label.clone(), 0.0);
            continue;
        }
        let gate = s.gate.map_err(Error::Divergent)?;
        let idle = s.idle.map_err(Error::Divergent)?;
        let phase = match s.role {
            SpectatorRole::OnComputationalQubit => {
                zeta1_tot += gate.zeta1;
                spectator_phase_error(
                    SpectatorPhaseCase::ComputationalDistantZero,
                    gate.zeta1,
                    gate.zeta2,
                    idle.zeta1,
                    ctx,
                )
            }
            SpectatorRole::OnLeakageQubit => {
                g2_gate += gate.zeta1;
                g2_idle += idle.zeta1;
                spectator_phase_error(
                    SpectatorPhaseCase::LeakageDistantZero,
                    gate.zeta1,
                    gate.zeta2,
                    idle.zeta1,
                    ctx,
                )
            }
        };
        d_phi_s.insert(s.label.clone(), phase);
    }

    let mut d_phi_d = BTreeMap::new();
    d_phi_d.insert(ctx.g1.clone(), dynamical_phase_error(zeta1_tot, ctx));
    d_phi_d.insert(
        ctx.g2.clone(),
        -360.0 * (g2_gate * ctx.t_g + g2_idle * idle_window) * MHZ_NS,
    );

    Ok(PhaseErrorReport {
        delta,
        d_phi_c: conditional_phase_error(delta, j),
        d_phi_d,
        d_phi_s,
        d_leak: leakage_error(delta, j).ok(),
        zeta1_tot,
        zeta1_tot_g2: g2_gate,
    })
}
