use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Supported gate kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Sx,
    H,
    X,
    Y,
    Z,
    Cnot,
    Crx,
    Cry,
    Crz,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Sx,
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::Cnot,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Crx | GateKind::Cry | GateKind::Crz => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            GateKind::Rx
                | GateKind::Ry
                | GateKind::Rz
                | GateKind::Crx
                | GateKind::Cry
                | GateKind::Crz
        )
    }

    /// Stable numeric code used by the checkpoint layout descriptor.
    pub fn code(self) -> u8 {
        match self {
            GateKind::Rx => 0,
            GateKind::Ry => 1,
            GateKind::Rz => 2,
            GateKind::Sx => 3,
            GateKind::H => 4,
            GateKind::X => 5,
            GateKind::Y => 6,
            GateKind::Z => 7,
            GateKind::Cnot => 8,
            GateKind::Crx => 9,
            GateKind::Cry => 10,
            GateKind::Crz => 11,
        }
    }

    pub fn from_code(code: u8) -> Option<GateKind> {
        GateKind::ALL.get(code as usize).copied()
    }
}

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    /// Index into the trainable parameter vector.
    Slot(usize),
    /// Fixed angle in radians.
    Fixed(f64),
}

/// One gate in a circuit. For two-qubit kinds `qubits[0]` is the control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub qubits: [usize; 2],
    pub angle: Option<Angle>,
}

impl GateOp {
    pub fn new(kind: GateKind, qubits: &[usize], angle: Option<Angle>) -> Result<GateOp> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} takes {} qubit(s), got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        if kind.is_rotation() != angle.is_some() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} {} an angle",
                if kind.is_rotation() {
                    "requires"
                } else {
                    "does not take"
                }
            )));
        }
        let mut q = [qubits[0], qubits[0]];
        if qubits.len() == 2 {
            if qubits[0] == qubits[1] {
                return Err(Error::DuplicateQubit(qubits[0]));
            }
            q[1] = qubits[1];
        }
        Ok(GateOp {
            kind,
            qubits: q,
            angle,
        })
    }

    fn single(kind: GateKind, q: usize, angle: Option<Angle>) -> GateOp {
        GateOp {
            kind,
            qubits: [q, q],
            angle,
        }
    }

    fn pair(kind: GateKind, control: usize, target: usize, angle: Option<Angle>) -> GateOp {
        assert_ne!(control, target, "control and target must differ");
        GateOp {
            kind,
            qubits: [control, target],
            angle,
        }
    }

    pub fn rx(q: usize, angle: Angle) -> GateOp {
        Self::single(GateKind::Rx, q, Some(angle))
    }
    pub fn ry(q: usize, angle: Angle) -> GateOp {
        Self::single(GateKind::Ry, q, Some(angle))
    }
    pub fn rz(q: usize, angle: Angle) -> GateOp {
        Self::single(GateKind::Rz, q, Some(angle))
    }
    pub fn sx(q: usize) -> GateOp {
        Self::single(GateKind::Sx, q, None)
    }
    pub fn h(q: usize) -> GateOp {
        Self::single(GateKind::H, q, None)
    }
    pub fn x(q: usize) -> GateOp {
        Self::single(GateKind::X, q, None)
    }
    pub fn y(q: usize) -> GateOp {
        Self::single(GateKind::Y, q, None)
    }
    pub fn z(q: usize) -> GateOp {
        Self::single(GateKind::Z, q, None)
    }
    pub fn cnot(control: usize, target: usize) -> GateOp {
        Self::pair(GateKind::Cnot, control, target, None)
    }
    pub fn crx(control: usize, target: usize, angle: Angle) -> GateOp {
        Self::pair(GateKind::Crx, control, target, Some(angle))
    }
    pub fn cry(control: usize, target: usize, angle: Angle) -> GateOp {
        Self::pair(GateKind::Cry, control, target, Some(angle))
    }
    pub fn crz(control: usize, target: usize, angle: Angle) -> GateOp {
        Self::pair(GateKind::Crz, control, target, Some(angle))
    }

    pub fn targets(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn slot(&self) -> Option<usize> {
        match self.angle {
            Some(Angle::Slot(s)) => Some(s),
            _ => None,
        }
    }

    /// Checks the op against a register size.
    pub fn validate(&self, qubit_count: usize) -> Result<()> {
        for &q in self.targets() {
            if q >= qubit_count {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    qubit_count,
                });
            }
        }
        if self.kind.arity() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::DuplicateQubit(self.qubits[0]));
        }
        if self.kind.is_rotation() != self.angle.is_some() {
            return Err(Error::InvalidGate(format!(
                "{:?} angle mismatch",
                self.kind
            )));
        }
        Ok(())
    }

    /// Resolves the rotation angle against a parameter vector.
    pub fn resolve_angle(&self, params: &[f64]) -> Result<f64> {
        match self.angle {
            Some(Angle::Fixed(a)) => Ok(a),
            Some(Angle::Slot(s)) => params.get(s).copied().ok_or(Error::MissingParameter {
                slot: s,
                available: params.len(),
            }),
            None => Ok(0.0),
        }
    }
}

/// An ordered gate list on a fixed register with trainable slots
/// `0..param_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubit_count: usize,
    ops: Vec<GateOp>,
    param_count: usize,
}

impl Circuit {
    /// Builds a circuit, checking every op and that the referenced slots are
    /// exactly `{0, …, param_count − 1}`.
    pub fn new(qubit_count: usize, ops: Vec<GateOp>) -> Result<Circuit> {
        let mut seen: Vec<bool> = Vec::new();
        for op in &ops {
            op.validate(qubit_count)?;
            if let Some(s) = op.slot() {
                if s >= seen.len() {
                    seen.resize(s + 1, false);
                }
                seen[s] = true;
            }
        }
        if let Some(gap) = seen.iter().position(|&b| !b) {
            return Err(Error::ParameterSlots(format!("slot {gap} is never used")));
        }
        Ok(Circuit {
            qubit_count,
            ops,
            param_count: seen.len(),
        })
    }

    pub fn empty(qubit_count: usize) -> Circuit {
        Circuit {
            qubit_count,
            ops: Vec::new(),
            param_count: 0,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.ops.iter().filter(|op| op.kind.arity() == 2).count()
    }
}
