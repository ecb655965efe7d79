//! Batched pure-state simulator.
//!
//! States are kept in a [`StateBatch`] and every gate is applied to all rows
//! at once. Gradients use the adjoint method: one forward pass, then a
//! reverse pass that uncomputes the state alongside the adjoint state.

mod gate;
pub(crate) mod kernel;
mod state;
pub(crate) mod tape;

use alloc::vec;
use alloc::vec::Vec;

pub use gate::{Angle, Circuit, GateKind, GateOp};
pub use state::{amplitude_encode, StateBatch, Statevector, MAX_QUBITS, NORM_TOLERANCE};

use crate::{Error, Result};
use tape::Tape;

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Applies one gate to every row of `batch`.
pub fn apply_gate(batch: &mut StateBatch, op: &GateOp, params: &[f64]) -> Result<()> {
    let mut tape = Tape::new(batch.qubit_count(), params.len());
    tape.push_op(op, params)?;
    tape.forward(batch)
}

/// Runs `circuit` on every row of `batch` in place.
pub fn run_circuit(batch: &mut StateBatch, circuit: &Circuit, params: &[f64]) -> Result<()> {
    check_params(circuit, params)?;
    Tape::compile(circuit, params)?.forward(batch)
}

fn check_params(circuit: &Circuit, params: &[f64]) -> Result<()> {
    if params.len() < circuit.param_count() {
        return Err(Error::MissingParameter {
            slot: params.len(),
            available: params.len(),
        });
    }
    if params.len() > circuit.param_count() {
        return Err(Error::Shape(alloc::format!(
            "{} parameters for {} slots",
            params.len(),
            circuit.param_count()
        )));
    }
    Ok(())
}

/// Exact `⟨ψ_r| P_qubit |ψ_r⟩` for every row.
pub fn pauli_expectation(batch: &StateBatch, axis: Axis, qubit: usize) -> Result<Vec<f64>> {
    let n = batch.qubit_count();
    if qubit >= n {
        return Err(Error::QubitOutOfRange {
            qubit,
            qubit_count: n,
        });
    }
    let mut out = vec![0.0; batch.rows()];
    let (re, im) = batch.parts();
    kernel::expectation_rows(re, im, batch.rows(), n, qubit, axis, &mut out);
    Ok(out)
}

/// Gradient of `Σ_r Σ_k upstream[r, k] ⟨O_k⟩_r` with respect to the
/// circuit parameters, where `upstream` is row-major `rows × observables`.
pub fn adjoint_gradient(
    batch: &StateBatch,
    circuit: &Circuit,
    params: &[f64],
    observables: &[(Axis, usize)],
    upstream: &[f64],
) -> Result<Vec<f64>> {
    check_params(circuit, params)?;
    let tape = Tape::compile(circuit, params)?;
    let mut psi = batch.clone();
    tape.forward(&mut psi)?;
    let mut lambda = tape::adjoint_seed(&psi, observables, upstream)?;
    let mut grad = vec![0.0; circuit.param_count()];
    tape.backward(&mut psi, &mut lambda, &mut grad)?;
    Ok(grad)
}
