//! Device description: transmons, exchange couplings, gate context and timing.
//!
//! Frequencies are ordinary frequencies (ω/2π) in MHz. Times are in ns.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest qubit frequency accepted in a device file. Anything below is
/// almost certainly a value entered in GHz.
const MIN_FREQ_MHZ: f64 = 100.0;

/// A single transmon treated as an anharmonic oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSpec {
    pub id: String,
    /// 0→1 transition frequency, MHz.
    #[serde(rename = "freq_mhz")]
    pub freq: f64,
    /// Anharmonicity E12 − E01, MHz (negative).
    #[serde(rename = "anh_mhz")]
    pub anh: f64,
    /// Sextic correction: E23 = E12 + anh + beta, MHz.
    #[serde(rename = "beta_mhz", default)]
    pub beta: f64,
}

impl TransmonSpec {
    pub fn new(id: impl Into<String>, freq: f64, anh: f64, beta: f64) -> Result<Self> {
        let spec = Self {
            id: id.into(),
            freq,
            anh,
            beta,
        };
        spec.validate("transmon")?;
        Ok(spec)
    }

    /// Builds an unvalidated spec; oracles and sweeps use this for
    /// off-device parameter points.
    pub fn raw(id: impl Into<String>, freq: f64, anh: f64, beta: f64) -> Self {
        Self {
            id: id.into(),
            freq,
            anh,
            beta,
        }
    }

    /// Energy of Fock level `n` relative to the ground state, MHz.
    pub fn level(&self, n: usize) -> f64 {
        let n = n as f64;
        self.freq * n + 0.5 * self.anh * n * (n - 1.0) + self.beta / 6.0 * n * (n - 1.0) * (n - 2.0)
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::validation(format!("{path}.id"), "empty qubit id"));
        }
        for (name, v) in [("freq_mhz", self.freq), ("anh_mhz", self.anh), ("beta_mhz", self.beta)] {
            if !v.is_finite() {
                return Err(Error::validation(format!("{path}.{name}"), "must be finite"));
            }
        }
        if self.freq < MIN_FREQ_MHZ {
            return Err(Error::validation(
                format!("{path}.freq_mhz"),
                format!("{} MHz is not a plausible transmon frequency (value in GHz?)", self.freq),
            ));
        }
        if self.anh >= 0.0 {
            return Err(Error::validation(
                format!("{path}.anh_mhz"),
                "anharmonicity must be negative (transmon regime)",
            ));
        }
        if self.beta.abs() >= self.anh.abs() {
            return Err(Error::validation(
                format!("{path}.beta_mhz"),
                "|beta| must be smaller than |anh|",
            ));
        }
        Ok(())
    }
}

/// Exchange coupling J/2π between two qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub a: String,
    pub b: String,
    #[serde(rename = "j_mhz")]
    pub j: f64,
}

impl Coupling {
    pub fn touches(&self, label: &str) -> bool {
        self.a == label || self.b == label
    }

    fn key(&self) -> (String, String) {
        if self.a <= self.b {
            (self.a.clone(), self.b.clone())
        } else {
            (self.b.clone(), self.a.clone())
        }
    }
}

/// Qubits plus pairwise couplings. The graph need not be connected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceTopology {
    #[serde(default)]
    pub qubits: Vec<TransmonSpec>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
}

const SEVEN_QUBIT_JSON: &str = include_str!("../data/seven_qubit.json");

impl DeviceTopology {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let topo: DeviceTopology = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    /// The bundled seven-qubit example. Couplings are 4.5 MHz on every edge;
    /// frequencies are representative placeholders that reproduce the quoted
    /// detunings and shifts (Q3–Q1 at −384 MHz, ζ1 of Q1/Q6/Q7 on Q4 near
    /// −133/−37/−34 kHz, Q1 anharmonicity −289 MHz with β = −35 MHz).
    pub fn seven_qubit_example() -> Self {
        Self::from_json_str(SEVEN_QUBIT_JSON).expect("bundled device file is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for (i, q) in self.qubits.iter().enumerate() {
            let path = format!("qubits[{i}]");
            q.validate(&path)?;
            if !ids.insert(q.id.as_str()) {
                return Err(Error::DuplicateQubit {
                    field: format!("{path}.id"),
                    id: q.id.clone(),
                });
            }
        }
        let mut pairs = HashSet::new();
        for (i, c) in self.couplings.iter().enumerate() {
            let path = format!("couplings[{i}]");
            for (end, label) in [("a", &c.a), ("b", &c.b)] {
                if !ids.contains(label.as_str()) {
                    return Err(Error::DanglingCoupling {
                        field: format!("{path}.{end}"),
                        label: label.clone(),
                    });
                }
            }
            if c.a == c.b {
                return Err(Error::validation(format!("{path}.b"), "self-coupling"));
            }
            if !(c.j.is_finite() && c.j > 0.0) {
                return Err(Error::validation(format!("{path}.j_mhz"), "coupling must be positive"));
            }
            if !pairs.insert(c.key()) {
                return Err(Error::validation(
                    path,
                    format!("second coupling between {} and {}", c.a, c.b),
                ));
            }
        }
        Ok(())
    }

    pub fn qubit(&self, id: &str) -> Option<&TransmonSpec> {
        self.qubits.iter().find(|q| q.id == id)
    }

    pub fn require_qubit(&self, id: &str) -> Result<&TransmonSpec> {
        self.qubit(id)
            .ok_or_else(|| Error::validation("qubit", format!("unknown qubit {id:?}")))
    }

    /// J/2π between `a` and `b`, if they are coupled.
    pub fn coupling(&self, a: &str, b: &str) -> Option<f64> {
        self.couplings
            .iter()
            .find(|c| (c.a == a && c.b == b) || (c.a == b && c.b == a))
            .map(|c| c.j)
    }

    pub fn neighbors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.couplings.iter().filter_map(move |c| {
            if c.a == id {
                Some((c.b.as_str(), c.j))
            } else if c.b == id {
                Some((c.a.as_str(), c.j))
            } else {
                None
            }
        })
    }
}

pub fn load_device(path: impl AsRef<Path>) -> Result<DeviceTopology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    DeviceTopology::from_json_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Duration of the non-adiabatic CZ, 2π/(2√2 J), in ns for J/2π in MHz.
pub fn gate_duration_from_j(j: f64) -> Result<f64> {
    if !(j.is_finite() && j > 0.0) {
        return Err(Error::InvalidArgument(format!("coupling must be positive, got {j}")));
    }
    Ok(1e3 / (2.0 * std::f64::consts::SQRT_2 * j))
}

/// Which gate qubit a spectator couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectatorRole {
    /// Couples to G1, which stays in the computational subspace (S1).
    OnComputationalQubit,
    /// Couples to G2, whose |2⟩ level takes part in the gate (S2).
    OnLeakageQubit,
}

impl fmt::Display for SpectatorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectatorRole::OnComputationalQubit => "S1",
            SpectatorRole::OnLeakageQubit => "S2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectator {
    pub label: String,
    pub role: SpectatorRole,
}

/// A CZ between `g1` and `g2` (|11⟩↔|02⟩, so `g2` visits |2⟩) with its
/// spectators and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateContext {
    pub g1: String,
    pub g2: String,
    pub spectators: Vec<Spectator>,
    /// Flux-pulse duration, ns.
    pub t_g: f64,
    /// Buffer before and after the flux pulse, ns.
    pub t_b: f64,
    /// Single-qubit gate duration, ns.
    pub t_s: f64,
}

impl GateContext {
    pub fn new(
        g1: impl Into<String>,
        g2: impl Into<String>,
        spectators: Vec<Spectator>,
        t_g: f64,
        t_b: f64,
        t_s: f64,
    ) -> Result<Self> {
        let ctx = Self {
            g1: g1.into(),
            g2: g2.into(),
            spectators,
            t_g,
            t_b,
            t_s,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g1 == self.g2 {
            return Err(Error::validation("g2", "gate qubits must differ"));
        }
        for (name, t) in [("t_g", self.t_g), ("t_b", self.t_b), ("t_s", self.t_s)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::validation(name, "times must be non-negative"));
            }
        }
        let mut seen = HashSet::new();
        for (i, s) in self.spectators.iter().enumerate() {
            if s.label == self.g1 || s.label == self.g2 {
                return Err(Error::validation(
                    format!("spectators[{i}]"),
                    format!("{} is a gate qubit", s.label),
                ));
            }
            if !seen.insert(s.label.as_str()) {
                return Err(Error::validation(
                    format!("spectators[{i}]"),
                    format!("duplicate spectator {}", s.label),
                ));
            }
        }
        Ok(())
    }

    /// Gate qubit a spectator role couples to.
    pub fn gate_qubit(&self, role: SpectatorRole) -> &str {
        match role {
            SpectatorRole::OnComputationalQubit => &self.g1,
            SpectatorRole::OnLeakageQubit => &self.g2,
        }
    }

    /// Checks every label against `device` and that each spectator is coupled
    /// to the gate qubit its role names.
    pub fn validate_against(&self, device: &DeviceTopology) -> Result<()> {
        device.require_qubit(&self.g1)?;
        device.require_qubit(&self.g2)?;
        if device.coupling(&self.g1, &self.g2).is_none() {
            return Err(Error::validation(
                "g2",
                format!("{} and {} are not coupled", self.g1, self.g2),
            ));
        }
        for (i, s) in self.spectators.iter().enumerate() {
            device.require_qubit(&s.label)?;
            let gate = self.gate_qubit(s.role);
            if device.coupling(&s.label, gate).is_none() {
                return Err(Error::validation(
                    format!("spectators[{i}]"),
                    format!("{} is not coupled to {gate}", s.label),
                ));
            }
        }
        Ok(())
    }

    /// Gate window seen by a dynamical phase: t_g + 2 t_b + t_s.
    pub fn window(&self) -> f64 {
        self.t_g + 2.0 * self.t_b + self.t_s
    }
}

/// Spectator bits, one per spectator of a [`GateContext`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectatorConfig {
    pub bits: BTreeMap<String, u8>,
}

impl SpectatorConfig {
    pub fn new(ctx: &GateContext, bits: BTreeMap<String, u8>) -> Result<Self> {
        for (label, b) in &bits {
            if *b > 1 {
                return Err(Error::validation(format!("bits.{label}"), "bit must be 0 or 1"));
            }
            if !ctx.spectators.iter().any(|s| &s.label == label) {
                return Err(Error::validation(
                    format!("bits.{label}"),
                    "not a spectator of this gate",
                ));
            }
        }
        if bits.len() != ctx.spectators.len() {
            return Err(Error::validation("bits", "every spectator needs a bit"));
        }
        Ok(Self { bits })
    }

    pub fn all_zero(ctx: &GateContext) -> Self {
        Self {
            bits: ctx.spectators.iter().map(|s| (s.label.clone(), 0)).collect(),
        }
    }

    /// Configuration whose bits read `index` in binary, first spectator as
    /// the most significant bit (so index 4 of |Q1Q6Q7⟩ is |100⟩).
    pub fn from_index(ctx: &GateContext, index: usize) -> Self {
        let k = ctx.spectators.len();
        let bits = ctx
            .spectators
            .iter()
            .enumerate()
            .map(|(i, s)| (s.label.clone(), ((index >> (k - 1 - i)) & 1) as u8))
            .collect();
        Self { bits }
    }

    pub fn bit(&self, label: &str) -> u8 {
        self.bits.get(label).copied().unwrap_or(0)
    }

    /// Bits in spectator order, e.g. "101".
    pub fn label(&self, ctx: &GateContext) -> String {
        ctx.spectators
            .iter()
            .map(|s| char::from(b'0' + self.bit(&s.label)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_qubits() -> &'static str {
        r#"{"qubits":[{"id":"A","freq_mhz":6000,"anh_mhz":-300},
                      {"id":"B","freq_mhz":5500,"anh_mhz":-300,"beta_mhz":-30}],
            "couplings":[{"a":"A","b":"B","j_mhz":4.5}]}"#
    }

    #[test]
    fn parses_minimal_device() {
        let d = DeviceTopology::from_json_str(two_qubits()).unwrap();
        assert_eq!(d.qubits.len(), 2);
        assert_eq!(d.qubit("A").unwrap().beta, 0.0);
        assert_eq!(d.coupling("B", "A"), Some(4.5));
    }

    #[test]
    fn empty_device_is_valid() {
        let d = DeviceTopology::from_json_str(r#"{"qubits":[],"couplings":[]}"#).unwrap();
        assert!(d.qubits.is_empty());
    }

    #[test]
    fn dangling_coupling_reports_field() {
        let text = r#"{"qubits":[{"id":"Q1","freq_mhz":6000,"anh_mhz":-300}],
                       "couplings":[{"a":"Q1","b":"Q9","j_mhz":4.5}]}"#;
        match DeviceTopology::from_json_str(text) {
            Err(Error::DanglingCoupling { field, label }) => {
                assert_eq!(field, "couplings[0].b");
                assert_eq!(label, "Q9");
            }
            other => panic!("expected dangling coupling, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = r#"{"qubits":[{"id":"Q1","freq_mhz":6000,"anh_mhz":-300},
                                 {"id":"Q1","freq_mhz":5000,"anh_mhz":-300}],"couplings":[]}"#;
        assert!(matches!(
            DeviceTopology::from_json_str(text),
            Err(Error::DuplicateQubit { field, .. }) if field == "qubits[1].id"
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = r#"{"qubits":[{"id":"Q1","freq_mhz":6000,"anh_mhz":-300,"t1_us":30}],"couplings":[]}"#;
        assert!(matches!(DeviceTopology::from_json_str(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn unit_violations() {
        let ghz = r#"{"qubits":[{"id":"Q1","freq_mhz":6.0,"anh_mhz":-300}],"couplings":[]}"#;
        let err = DeviceTopology::from_json_str(ghz).unwrap_err();
        assert!(err.to_string().starts_with("qubits[0].freq_mhz"), "{err}");

        let positive_anh = r#"{"qubits":[{"id":"Q1","freq_mhz":6000,"anh_mhz":300}],"couplings":[]}"#;
        assert!(DeviceTopology::from_json_str(positive_anh).is_err());

        let big_beta =
            r#"{"qubits":[{"id":"Q1","freq_mhz":6000,"anh_mhz":-300,"beta_mhz":-400}],"couplings":[]}"#;
        assert!(DeviceTopology::from_json_str(big_beta).is_err());
    }

    #[test]
    fn coupling_invariants() {
        let self_loop = r#"{"qubits":[{"id":"A","freq_mhz":6000,"anh_mhz":-300}],
                            "couplings":[{"a":"A","b":"A","j_mhz":4.5}]}"#;
        assert!(DeviceTopology::from_json_str(self_loop).is_err());
        let twice = r#"{"qubits":[{"id":"A","freq_mhz":6000,"anh_mhz":-300},{"id":"B","freq_mhz":5000,"anh_mhz":-300}],
                        "couplings":[{"a":"A","b":"B","j_mhz":4.5},{"a":"B","b":"A","j_mhz":3}]}"#;
        assert!(DeviceTopology::from_json_str(twice).is_err());
        let negative = r#"{"qubits":[{"id":"A","freq_mhz":6000,"anh_mhz":-300},{"id":"B","freq_mhz":5000,"anh_mhz":-300}],
                           "couplings":[{"a":"A","b":"B","j_mhz":-1}]}"#;
        assert!(DeviceTopology::from_json_str(negative).is_err());
    }

    #[test]
    fn seven_qubit_example_loads() {
        let d = DeviceTopology::seven_qubit_example();
        assert_eq!(d.qubits.len(), 7);
        assert!(d.couplings.iter().all(|c| c.j == 4.5));
        let q1 = d.qubit("Q1").unwrap();
        let q3 = d.qubit("Q3").unwrap();
        let q4 = d.qubit("Q4").unwrap();
        // Q1 is pulsed to ω_Q4 − α_Q1 during the Q1–Q4 gate.
        assert_eq!(q3.freq - (q4.freq - q1.anh), -384.0);
        assert_eq!(q1.anh, -289.0);
        for q in &d.qubits {
            if q.id != "Q1" {
                assert!((-305.0..=-290.0).contains(&q.anh), "{}", q.id);
            }
        }
    }

    #[test]
    fn gate_duration_examples() {
        assert!((gate_duration_from_j(4.5).unwrap() - 78.567).abs() < 1e-3);
        let unit = 1e3 / (2.0 * std::f64::consts::SQRT_2);
        assert!((gate_duration_from_j(unit).unwrap() - 1.0).abs() < 1e-12);
        assert!((gate_duration_from_j(2.25).unwrap() - 157.135).abs() < 1e-3);
        assert!(gate_duration_from_j(0.0).is_err());
        assert!(gate_duration_from_j(-4.5).is_err());
    }

    #[test]
    fn gate_context_invariants() {
        let s = |l: &str| Spectator {
            label: l.into(),
            role: SpectatorRole::OnComputationalQubit,
        };
        assert!(GateContext::new("Q4", "Q4", vec![], 80.0, 5.0, 53.0).is_err());
        assert!(GateContext::new("Q4", "Q2", vec![s("Q2")], 80.0, 5.0, 53.0).is_err());
        assert!(GateContext::new("Q4", "Q2", vec![s("Q1"), s("Q1")], 80.0, 5.0, 53.0).is_err());
        assert!(GateContext::new("Q4", "Q2", vec![s("Q1")], 80.0, -5.0, 53.0).is_err());
        let ctx = GateContext::new("Q4", "Q2", vec![s("Q1"), s("Q6"), s("Q7")], 80.0, 5.0, 53.0).unwrap();
        ctx.validate_against(&DeviceTopology::seven_qubit_example()).unwrap();
        assert_eq!(SpectatorConfig::from_index(&ctx, 4).label(&ctx), "100");
        assert_eq!(SpectatorConfig::from_index(&ctx, 3).label(&ctx), "011");
    }

    #[test]
    fn spectator_config_keys_must_match() {
        let ctx = GateContext::new(
            "Q4",
            "Q2",
            vec![Spectator {
                label: "Q1".into(),
                role: SpectatorRole::OnComputationalQubit,
            }],
            80.0,
            5.0,
            53.0,
        )
        .unwrap();
        assert!(SpectatorConfig::new(&ctx, BTreeMap::new()).is_err());
        assert!(SpectatorConfig::new(&ctx, [("Q9".to_string(), 1)].into()).is_err());
        assert!(SpectatorConfig::new(&ctx, [("Q1".to_string(), 2)].into()).is_err());
        assert!(SpectatorConfig::new(&ctx, [("Q1".to_string(), 1)].into()).is_ok());
    }
}
