//! Compiled circuits.
//!
//! A [`Tape`] is a circuit with every angle resolved to a matrix, optionally
//! interleaved with per-row Pauli insertions (noise trajectories). The
//! forward pass applies it to a batch; the backward pass walks it in
//! reverse, uncomputing the state while propagating the adjoint state and
//! accumulating `∂⟨O⟩/∂θ` for every trainable slot.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::kernel::{self, Mat2};
use super::{Axis, Circuit, GateKind, GateOp, StateBatch};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) enum Step {
    Gate {
        target: usize,
        control: Option<usize>,
        forward: Mat2,
        inverse: Mat2,
        /// Trainable slot and the Pauli generator of the rotation.
        grad: Option<(usize, Axis)>,
    },
    /// Per-row two-qubit Pauli `P⊗Q` encoded as `4·p + q` with
    /// `0 = I, 1 = X, 2 = Y, 3 = Z`; code 0 leaves the row untouched.
    RowPaulis { qubits: [usize; 2], codes: Vec<u8> },
}

#[derive(Debug, Clone)]
pub(crate) struct Tape {
    qubit_count: usize,
    param_count: usize,
    steps: Vec<Step>,
}

pub(crate) fn generator(kind: GateKind) -> Option<Axis> {
    match kind {
        GateKind::Rx | GateKind::Crx => Some(Axis::X),
        GateKind::Ry | GateKind::Cry => Some(Axis::Y),
        GateKind::Rz | GateKind::Crz => Some(Axis::Z),
        _ => None,
    }
}

pub(crate) fn pauli_from_code(code: u8) -> Option<Axis> {
    match code {
        1 => Some(Axis::X),
        2 => Some(Axis::Y),
        3 => Some(Axis::Z),
        _ => None,
    }
}

impl Tape {
    pub(crate) fn new(qubit_count: usize, param_count: usize) -> Tape {
        Tape {
            qubit_count,
            param_count,
            steps: Vec::new(),
        }
    }

    /// Compiles `circuit` at `params`.
    pub(crate) fn compile(circuit: &Circuit, params: &[f64]) -> Result<Tape> {
        if params.len() > circuit.param_count() {
            return Err(Error::Shape(format!(
                "{} parameters supplied for a circuit with {} slots",
                params.len(),
                circuit.param_count()
            )));
        }
        let mut tape = Tape::new(circuit.qubit_count(), circuit.param_count());
        for op in circuit.ops() {
            tape.push_op(op, params)?;
        }
        Ok(tape)
    }

    pub(crate) fn push_op(&mut self, op: &GateOp, params: &[f64]) -> Result<()> {
        op.validate(self.qubit_count)?;
        let theta = op.resolve_angle(params)?;
        let forward = Mat2::for_kind(op.kind, theta);
        let (target, control) = if op.kind.arity() == 2 {
            (op.qubits[1], Some(op.qubits[0]))
        } else {
            (op.qubits[0], None)
        };
        let grad = op.slot().zip(generator(op.kind));
        self.steps.push(Step::Gate {
            target,
            control,
            forward,
            inverse: forward.adjoint(),
            grad,
        });
        Ok(())
    }

    pub(crate) fn push_row_paulis(&mut self, qubits: [usize; 2], codes: Vec<u8>) {
        self.steps.push(Step::RowPaulis { qubits, codes });
    }

    fn check(&self, batch: &StateBatch) -> Result<()> {
        if batch.qubit_count() != self.qubit_count {
            return Err(Error::Shape(format!(
                "batch has {} qubits, circuit expects {}",
                batch.qubit_count(),
                self.qubit_count
            )));
        }
        for step in &self.steps {
            if let Step::RowPaulis { codes, .. } = step {
                if codes.len() != batch.rows() {
                    return Err(Error::Shape(
                        "noise realization does not match batch rows".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn forward(&self, batch: &mut StateBatch) -> Result<()> {
        self.check(batch)?;
        let (n, rows) = (self.qubit_count, batch.rows());
        let (re, im) = batch.parts_mut();
        for step in &self.steps {
            match step {
                Step::Gate {
                    target,
                    control,
                    forward,
                    ..
                } => kernel::apply_mat2(re, im, rows, n, *target, *control, forward),
                Step::RowPaulis { qubits, codes } => {
                    apply_row_paulis(re, im, rows, n, *qubits, codes)
                }
            }
        }
        Ok(())
    }

    /// Reverse pass. `psi` holds the forward output and is uncomputed back
    /// to the input; `lambda` holds `Σ_k u_k O_k ψ` per row. Gradients are
    /// added into `grad` (length `param_count`).
    pub(crate) fn backward(
        &self,
        psi: &mut StateBatch,
        lambda: &mut StateBatch,
        grad: &mut [f64],
    ) -> Result<()> {
        self.check(psi)?;
        self.check(lambda)?;
        if psi.rows() != lambda.rows() {
            return Err(Error::Shape(
                "adjoint state rows differ from forward state".into(),
            ));
        }
        if grad.len() < self.param_count {
            return Err(Error::Shape("gradient buffer too short".into()));
        }
        let (n, rows) = (self.qubit_count, psi.rows());
        let mut acc = vec![0.0; rows];
        for step in self.steps.iter().rev() {
            match step {
                Step::Gate {
                    target,
                    control,
                    inverse,
                    grad: g,
                    ..
                } => {
                    if let Some((slot, axis)) = g {
                        acc.fill(0.0);
                        let (pr, pi) = psi.parts();
                        let (lr, li) = lambda.parts();
                        kernel::generator_overlap(
                            pr, pi, lr, li, rows, n, *target, *control, *axis, &mut acc,
                        );
                        grad[*slot] += kernel::ordered_sum(&acc);
                    }
                    let (pr, pi) = psi.parts_mut();
                    kernel::apply_mat2(pr, pi, rows, n, *target, *control, inverse);
                    let (lr, li) = lambda.parts_mut();
                    kernel::apply_mat2(lr, li, rows, n, *target, *control, inverse);
                }
                Step::RowPaulis { qubits, codes } => {
                    let (pr, pi) = psi.parts_mut();
                    apply_row_paulis(pr, pi, rows, n, *qubits, codes);
                    let (lr, li) = lambda.parts_mut();
                    apply_row_paulis(lr, li, rows, n, *qubits, codes);
                }
            }
        }
        Ok(())
    }
}

fn apply_row_paulis(
    re: &mut [f64],
    im: &mut [f64],
    rows: usize,
    n: usize,
    qubits: [usize; 2],
    codes: &[u8],
) {
    for (row, &code) in codes.iter().enumerate() {
        if code == 0 {
            continue;
        }
        if let Some(p) = pauli_from_code(code >> 2) {
            kernel::apply_pauli_row(re, im, rows, n, qubits[0], p, row);
        }
        if let Some(q) = pauli_from_code(code & 3) {
            kernel::apply_pauli_row(re, im, rows, n, qubits[1], q, row);
        }
    }
}

/// Builds the adjoint seed `λ_r = Σ_k upstream[r, k] · O_k ψ_r`.
pub(crate) fn adjoint_seed(
    psi: &StateBatch,
    observables: &[(Axis, usize)],
    upstream: &[f64],
) -> Result<StateBatch> {
    let rows = psi.rows();
    let k = observables.len();
    if upstream.len() != rows * k {
        return Err(Error::Shape(format!(
            "upstream has {} entries, expected {rows} rows × {k} observables",
            upstream.len()
        )));
    }
    let n = psi.qubit_count();
    for &(_, q) in observables {
        if q >= n {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                qubit_count: n,
            });
        }
    }
    let mut lambda = psi.clone();
    {
        let (lr, li) = lambda.parts_mut();
        lr.fill(0.0);
        li.fill(0.0);
    }
    let mut weights = vec![0.0; rows];
    for (idx, &(axis, qubit)) in observables.iter().enumerate() {
        for (r, w) in weights.iter_mut().enumerate() {
            *w = upstream[r * k + idx];
        }
        let (pr, pi) = psi.parts();
        let (lr, li) = lambda.parts_mut();
        kernel::accumulate_pauli(pr, pi, lr, li, rows, n, qubit, axis, &weights);
    }
    Ok(lambda)
}
