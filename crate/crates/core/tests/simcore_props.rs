mod common;

use common::*;
use num_complex::Complex64;
use paraquannet_core::simcore::{pauli_expectation, run_circuit};
use paraquannet_core::{Angle, Axis, Circuit, GateKind, GateOp, StateBatch, Statevector};
use proptest::prelude::*;

fn arb_op(n: usize) -> impl Strategy<Value = (GateKind, usize, usize, f64)> {
    let kinds = if n > 1 {
        GateKind::ALL.to_vec()
    } else {
        GateKind::ALL
            .iter()
            .copied()
            .filter(|k| k.arity() == 1)
            .collect()
    };
    (
        proptest::sample::select(kinds),
        0..n,
        1..n.max(2),
        -7.0..7.0f64,
    )
}

/// Circuit with every rotation on its own slot, plus matching parameters.
fn build(n: usize, raw: &[(GateKind, usize, usize, f64)]) -> (Circuit, Vec<f64>) {
    let mut ops = Vec::new();
    let mut params = Vec::new();
    for &(kind, q, shift, theta) in raw {
        let qubits = if kind.arity() == 2 {
            vec![q, (q + shift) % n]
        } else {
            vec![q]
        };
        let angle = kind.is_rotation().then(|| {
            params.push(theta);
            Angle::Slot(params.len() - 1)
        });
        ops.push(GateOp::new(kind, &qubits, angle).unwrap());
    }
    (Circuit::new(n, ops).unwrap(), params)
}

fn arb_circuit() -> impl Strategy<Value = (Circuit, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec(arb_op(n), 0..24).prop_map(move |raw| build(n, &raw))
    })
}

fn arb_state(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map(
        "zero vector",
        |v| {
            let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| v.iter().map(|(a, b)| c(a / norm, b / norm)).collect())
        },
    )
}

fn case() -> impl Strategy<Value = (Circuit, Vec<f64>, Vec<Vec<Complex64>>)> {
    arb_circuit().prop_flat_map(|(circ, params)| {
        let n = circ.qubit_count();
        (
            Just(circ),
            Just(params),
            prop::collection::vec(arb_state(n), 1..5),
        )
    })
}

fn batch_of(states: &[Vec<Complex64>]) -> StateBatch {
    let svs: Vec<Statevector> = states.iter().map(|s| statevector(s)).collect();
    StateBatch::from_statevectors(&svs).unwrap()
}

/// Gate sequence that undoes `circuit`: reversed order, negated angles.
fn inverse(circuit: &Circuit, params: &[f64]) -> (Circuit, Vec<f64>) {
    let mut ops = Vec::new();
    for op in circuit.ops().iter().rev() {
        let mut inv = *op;
        match op.kind {
            GateKind::Sx => {
                // SX⁻¹ = SX³
                ops.extend([inv, inv]);
            }
            _ => {
                if let Some(Angle::Slot(s)) = op.angle {
                    inv.angle = Some(Angle::Fixed(-params[s]));
                }
            }
        }
        ops.push(inv);
    }
    (
        Circuit::new(circuit.qubit_count(), ops).unwrap(),
        Vec::new(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_is_preserved((circ, params, states) in case()) {
        let mut b = batch_of(&states);
        run_circuit(&mut b, &circ, &params).unwrap();
        for r in 0..b.rows() {
            prop_assert!((b.norm_sqr(r).sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_dense_oracle((circ, params, states) in case()) {
        let mut b = batch_of(&states);
        run_circuit(&mut b, &circ, &params).unwrap();
        for (r, s) in states.iter().enumerate() {
            let want = run_dense(&circ, &params, s);
            for (i, w) in want.iter().enumerate() {
                prop_assert!((b.amplitude(r, i) - w).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_sequence_restores_input((circ, params, states) in case()) {
        let mut b = batch_of(&states);
        let orig = b.clone();
        run_circuit(&mut b, &circ, &params).unwrap();
        let (inv, none) = inverse(&circ, &params);
        run_circuit(&mut b, &inv, &none).unwrap();
        for r in 0..b.rows() {
            for i in 0..(1 << circ.qubit_count()) {
                prop_assert!((b.amplitude(r, i) - orig.amplitude(r, i)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn batch_equals_row_loop((circ, params, states) in case()) {
        let mut b = batch_of(&states);
        run_circuit(&mut b, &circ, &params).unwrap();
        for (r, s) in states.iter().enumerate() {
            let mut single = batch_of(std::slice::from_ref(s));
            run_circuit(&mut single, &circ, &params).unwrap();
            for i in 0..(1 << circ.qubit_count()) {
                prop_assert!((b.amplitude(r, i) - single.amplitude(0, i)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn expectations_are_bounded_and_match_oracle((circ, params, states) in case()) {
        let n = circ.qubit_count();
        let mut b = batch_of(&states);
        run_circuit(&mut b, &circ, &params).unwrap();
        for axis in Axis::ALL {
            for q in 0..n {
                let got = pauli_expectation(&b, axis, q).unwrap();
                for (r, g) in got.iter().enumerate() {
                    prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(g));
                    let want = expectation(b.row(r).amplitudes(), n, axis, q);
                    prop_assert!((g - want).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn textbook_gate_actions() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = StateBatch::basis(2, 1, 0).unwrap();
    let bell = Circuit::new(2, vec![GateOp::h(0), GateOp::cnot(0, 1)]).unwrap();
    run_circuit(&mut b, &bell, &[]).unwrap();
    let want = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
    for (i, w) in want.iter().enumerate() {
        assert!((b.amplitude(0, i) - w).norm() < 1e-15);
    }

    let mut b = StateBatch::basis(2, 1, 0b10).unwrap();
    run_circuit(
        &mut b,
        &Circuit::new(2, vec![GateOp::cnot(0, 1)]).unwrap(),
        &[],
    )
    .unwrap();
    assert_eq!(b.amplitude(0, 0b11), c(1.0, 0.0));

    let mut b = StateBatch::basis(1, 1, 0).unwrap();
    let rx = Circuit::new(1, vec![GateOp::rx(0, Angle::Slot(0))]).unwrap();
    run_circuit(&mut b, &rx, &[std::f64::consts::PI]).unwrap();
    assert!((b.amplitude(0, 1) - c(0.0, -1.0)).norm() < 1e-15);
}
