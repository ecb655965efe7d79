//! Dense reference simulator shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use paraquannet_core::{Angle, Axis, Circuit, GateKind, GateOp, Statevector};

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub type M2 = [[C; 2]; 2];

pub fn pauli(axis: Axis) -> M2 {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match axis {
        Axis::X => [[z, o], [o, z]],
        Axis::Y => [[z, -i], [i, z]],
        Axis::Z => [[o, z], [z, -o]],
    }
}

/// `exp(−iθP/2) = cos(θ/2) I − i sin(θ/2) P`.
fn rotation(axis: Axis, theta: f64) -> M2 {
    let p = pauli(axis);
    let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut m = [[c(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            let id = if r == k { cs } else { 0.0 };
            m[r][k] = c(id, 0.0) - c(0.0, sn) * p[r][k];
        }
    }
    m
}

/// Single-qubit target matrix of a gate kind (the controlled kinds give
/// the matrix applied when the control is set).
pub fn target_matrix(kind: GateKind, theta: f64) -> M2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::Rx | GateKind::Crx => rotation(Axis::X, theta),
        GateKind::Ry | GateKind::Cry => rotation(Axis::Y, theta),
        GateKind::Rz | GateKind::Crz => rotation(Axis::Z, theta),
        GateKind::Sx => [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
        GateKind::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        GateKind::X | GateKind::Cnot => pauli(Axis::X),
        GateKind::Y => pauli(Axis::Y),
        GateKind::Z => pauli(Axis::Z),
    }
}

fn bit(index: usize, n: usize, q: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// Full `2^n × 2^n` matrix of one gate (qubit 0 is the most significant bit).
pub fn gate_unitary(op: &GateOp, n: usize, params: &[f64]) -> Vec<Vec<C>> {
    let theta = match op.angle {
        Some(Angle::Slot(s)) => params[s],
        Some(Angle::Fixed(t)) => t,
        None => 0.0,
    };
    let m = target_matrix(op.kind, theta);
    let dim = 1 << n;
    let mut u = vec![vec![c(0.0, 0.0); dim]; dim];
    let two = op.kind.arity() == 2;
    let (ctl, tgt) = if two {
        (Some(op.qubits[0]), op.qubits[1])
    } else {
        (None, op.qubits[0])
    };
    let tmask = 1 << (n - 1 - tgt);
    for col in 0..dim {
        if ctl.is_some_and(|q| bit(col, n, q) == 0) {
            u[col][col] = c(1.0, 0.0);
            continue;
        }
        let b = bit(col, n, tgt);
        for out in 0..2 {
            let row = (col & !tmask) | if out == 1 { tmask } else { 0 };
            u[row][col] += m[out][b];
        }
    }
    u
}

pub fn mat_vec(u: &[Vec<C>], v: &[C]) -> Vec<C> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn run_dense(circuit: &Circuit, params: &[f64], psi: &[C]) -> Vec<C> {
    let n = circuit.qubit_count();
    circuit.ops().iter().fold(psi.to_vec(), |v, op| {
        mat_vec(&gate_unitary(op, n, params), &v)
    })
}

/// `⟨ψ| P_q |ψ⟩` by explicit matrix action.
pub fn expectation(psi: &[C], n: usize, axis: Axis, q: usize) -> f64 {
    let p = pauli(axis);
    let mask = 1 << (n - 1 - q);
    let mut acc = c(0.0, 0.0);
    for (i, a) in psi.iter().enumerate() {
        let b = bit(i, n, q);
        for out in 0..2 {
            let j = (i & !mask) | if out == 1 { mask } else { 0 };
            acc += psi[j].conj() * p[out][b] * a;
        }
    }
    acc.re
}

pub type Rho = Vec<Vec<C>>;

pub fn pure_rho(psi: &[C]) -> Rho {
    psi.iter()
        .map(|a| psi.iter().map(|b| a * b.conj()).collect())
        .collect()
}

fn mat_mul(a: &Rho, b: &Rho) -> Rho {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn dagger(a: &Rho) -> Rho {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| a[j][i].conj()).collect())
        .collect()
}

pub fn conjugate_by(u: &Rho, rho: &Rho) -> Rho {
    mat_mul(&mat_mul(u, rho), &dagger(u))
}

/// Pauli string on `n` qubits as a dense matrix; `None` is identity.
pub fn pauli_string(factors: &[Option<Axis>]) -> Rho {
    let mut m: Rho = vec![vec![c(1.0, 0.0)]];
    for f in factors {
        let p = match f {
            Some(a) => pauli(*a),
            None => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        };
        let d = m.len();
        let mut out = vec![vec![c(0.0, 0.0); 2 * d]; 2 * d];
        for i in 0..d {
            for j in 0..d {
                for a in 0..2 {
                    for b in 0..2 {
                        out[2 * i + a][2 * j + b] = m[i][j] * p[a][b];
                    }
                }
            }
        }
        m = out;
    }
    m
}

pub fn trace_with(op: &Rho, rho: &Rho) -> f64 {
    let d = rho.len();
    (0..d)
        .map(|i| (0..d).map(|k| op[i][k] * rho[k][i]).sum::<C>())
        .sum::<C>()
        .re
}

fn lin(terms: &[(f64, &Rho)]) -> Rho {
    let d = terms[0].1.len();
    let mut out = vec![vec![c(0.0, 0.0); d]; d];
    for (w, m) in terms {
        for i in 0..d {
            for j in 0..d {
                out[i][j] += m[i][j] * *w;
            }
        }
    }
    out
}

/// `(1−p)ρ + p/3 (XρX + YρY + ZρZ)` on qubit `q` of an `n`-qubit `ρ`.
pub fn depolarize_qubit(rho: &Rho, n: usize, q: usize, p: f64) -> Rho {
    let terms: Vec<Rho> = Axis::ALL
        .iter()
        .map(|&a| {
            let mut f = vec![None; n];
            f[q] = Some(a);
            conjugate_by(&pauli_string(&f), rho)
        })
        .collect();
    lin(&[
        (1.0 - p, rho),
        (p / 3.0, &terms[0]),
        (p / 3.0, &terms[1]),
        (p / 3.0, &terms[2]),
    ])
}

/// `(1−p)ρ + p/15 Σ_{(P,Q)≠(I,I)} (P⊗Q)ρ(P⊗Q)` on qubits `a`, `b`.
pub fn depolarize_pair(rho: &Rho, n: usize, a: usize, b: usize, p: f64) -> Rho {
    let opts = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    let mut out = lin(&[(1.0 - p, rho)]);
    for (i, pa) in opts.iter().enumerate() {
        for (j, pb) in opts.iter().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            let mut f = vec![None; n];
            f[a] = *pa;
            f[b] = *pb;
            let t = conjugate_by(&pauli_string(&f), rho);
            out = lin(&[(1.0, &out), (p / 15.0, &t)]);
        }
    }
    out
}

pub fn statevector(amps: &[C]) -> Statevector {
    Statevector::new(amps.to_vec()).unwrap()
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
