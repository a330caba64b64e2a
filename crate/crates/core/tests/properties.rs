use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use proptest::prelude::*;
use spectator_core::device::{
    gate_duration_from_j, load_device, Coupling, DeviceTopology, GateContext, Spectator,
    SpectatorConfig, SpectatorRole, TransmonSpec,
};
use spectator_core::dispersive::{
    conditional_phase_error, gate_detuning, leakage_error, shifts_at, ShiftTriple,
};
use spectator_core::tomography::{
    chi_from_unitary, cz_error_unitary, process_error, quadratic_infidelity,
};

fn role(on_g1: bool) -> SpectatorRole {
    if on_g1 {
        SpectatorRole::OnComputationalQubit
    } else {
        SpectatorRole::OnLeakageQubit
    }
}

proptest! {
    /// δ of a configuration is the sum of the single-spectator δ's.
    #[test]
    fn detuning_is_additive(
        spectators in prop::collection::vec((any::<bool>(), -0.5f64..0.5, -0.5f64..0.5, 0u8..2), 1..8),
    ) {
        let shifts: Vec<_> = spectators
            .iter()
            .map(|&(g1, z1, z2, b)| (role(g1), Ok(ShiftTriple::new(z1, z2)), b))
            .collect();
        let total = gate_detuning(shifts.iter().map(|(r, s, b)| (*r, s, *b))).unwrap();
        let singles: f64 = shifts
            .iter()
            .map(|(r, s, b)| gate_detuning(std::iter::once((*r, s, *b))).unwrap())
            .sum();
        prop_assert!((total - singles).abs() < 1e-12);
        let j = 4.5;
        let lhs = conditional_phase_error(total, j);
        let rhs: f64 = shifts
            .iter()
            .map(|(r, s, b)| conditional_phase_error(gate_detuning(std::iter::once((*r, s, *b))).unwrap(), j))
            .sum();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn phase_error_is_odd_and_leakage_even(delta in -3.0f64..3.0, j in 2.0f64..10.0) {
        prop_assert_eq!(conditional_phase_error(-delta, j), -conditional_phase_error(delta, j));
        let (a, b) = (leakage_error(delta, j), leakage_error(-delta, j));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "validity range must be symmetric"),
        }
    }

    #[test]
    fn leakage_is_quartic(delta in -2.0f64..2.0, j in 4.0f64..10.0) {
        let one = leakage_error(delta, j).unwrap();
        let two = leakage_error(2.0 * delta, j).unwrap();
        prop_assert!((two - 16.0 * one).abs() <= 1e-12 * two.abs().max(1e-300));
    }

    #[test]
    fn process_error_symmetric_in_single_qubit_phases(
        d1 in -30.0f64..30.0, d2 in -30.0f64..30.0, dc in -30.0f64..30.0,
    ) {
        let a = process_error(&cz_error_unitary(d1, d2, dc));
        let b = process_error(&cz_error_unitary(d2, d1, dc));
        prop_assert!((a - b).abs() < 1e-14);
        prop_assert!((-1e-15..=1.0).contains(&a));
        prop_assert!((quadratic_infidelity(d1, d2, dc) - quadratic_infidelity(d2, d1, dc)).abs() < 1e-15);
    }

    #[test]
    fn chi_is_a_pure_channel(d1 in -90.0f64..90.0, d2 in -90.0f64..90.0, dc in -90.0f64..90.0) {
        let chi = chi_from_unitary(&cz_error_unitary(d1, d2, dc));
        prop_assert!((chi.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(chi.trace().im.abs() < 1e-12);
        prop_assert!(chi.is_hermitian(1e-12));
        prop_assert_eq!(chi.rank(1e-9), 1);
    }

    #[test]
    fn gate_time_times_coupling_is_constant(j in 0.5f64..50.0) {
        let t = gate_duration_from_j(j).unwrap();
        prop_assert!((t * j - 1e3 / (2.0 * SQRT_2)).abs() < 1e-9);
    }

    /// ζ1 only depends on Δ and the anharmonicities, not on the absolute
    /// frequency, and exchanging the role of the spectator's anharmonicity
    /// mirrors the poles.
    #[test]
    fn zeta1_poles_follow_anharmonicities(anh_g in -350.0f64..-150.0, anh_s in -350.0f64..-150.0) {
        for at in [anh_g, -anh_s] {
            prop_assert!(shifts_at(at, anh_g, 0.0, anh_s, 4.5, 1.0).is_err());
            let below = shifts_at(at - 2.0, anh_g, 0.0, anh_s, 4.5, 1.0);
            let above = shifts_at(at + 2.0, anh_g, 0.0, anh_s, 4.5, 1.0);
            if let (Ok(b), Ok(a)) = (below, above) {
                if (anh_g + anh_s).abs() > 10.0 {
                    prop_assert!(a.zeta1.signum() != b.zeta1.signum());
                }
            }
        }
    }

    #[test]
    fn device_round_trip(
        qubits in prop::collection::vec((4000.0f64..7000.0, -340.0f64..-180.0, -30.0f64..30.0), 2..6),
        j in 1.0f64..10.0,
    ) {
        let topo = DeviceTopology {
            qubits: qubits
                .iter()
                .enumerate()
                .map(|(i, &(f, a, b))| TransmonSpec::new(format!("Q{i}"), f, a, b).unwrap())
                .collect(),
            couplings: (1..qubits.len())
                .map(|i| Coupling { a: "Q0".into(), b: format!("Q{i}"), j })
                .collect(),
        };
        let once = DeviceTopology::from_json_str(&topo.to_json()).unwrap();
        prop_assert_eq!(&once, &topo);
        let twice = DeviceTopology::from_json_str(&once.to_json()).unwrap();
        prop_assert_eq!(once.to_json(), twice.to_json());
    }
}

#[test]
fn load_device_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    std::fs::write(&a, DeviceTopology::seven_qubit_example().to_json()).unwrap();
    let first = load_device(&a).unwrap();
    let b = dir.path().join("b.json");
    std::fs::write(&b, first.to_json()).unwrap();
    assert_eq!(load_device(&b).unwrap(), first);
    assert_eq!(first, DeviceTopology::seven_qubit_example());
}

#[test]
fn configuration_bits_cover_all_states() {
    let s = |l: &str| Spectator {
        label: l.into(),
        role: SpectatorRole::OnComputationalQubit,
    };
    let ctx =
        GateContext::new("Q4", "Q2", vec![s("Q1"), s("Q6"), s("Q7")], 80.0, 5.0, 53.0).unwrap();
    let labels: Vec<String> = (0..8)
        .map(|i| SpectatorConfig::from_index(&ctx, i).label(&ctx))
        .collect();
    assert_eq!(
        labels,
        ["000", "001", "010", "011", "100", "101", "110", "111"]
    );
    let bits: BTreeMap<String, u8> = [("Q1", 1), ("Q6", 0), ("Q7", 1)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    assert_eq!(
        SpectatorConfig::new(&ctx, bits).unwrap(),
        SpectatorConfig::from_index(&ctx, 5)
    );
}
