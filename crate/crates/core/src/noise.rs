//! Trajectory-sampled noise.
//!
//! Mixed-state channels are unravelled into random Pauli insertions on pure
//! states: averaging an observable over trajectories converges to the
//! channel output. Random draws are consumed in a fixed order (row-major,
//! then site order) with exactly one uniform draw per site, and a zero
//! probability consumes no draws at all.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::rng::Rng;
use crate::simcore::kernel::Mat2;
use crate::simcore::tape::Tape;
use crate::simcore::{kernel, Angle, Axis, Circuit, GateKind, GateOp, StateBatch};
use crate::{Error, Result};

/// Noise levels for data and kernel execution. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Coherent `R_x` applied to every qubit of every data state.
    pub data_rx_theta: f64,
    /// Single-qubit depolarizing probability applied to every data qubit.
    pub data_depol_p: f64,
    /// Over-rotation `R_x` appended to every kernel qubit.
    pub gate_1q_theta: f64,
    /// Two-qubit depolarizing probability after every two-qubit kernel gate.
    pub gate_2q_p: f64,
    /// Kernel trajectories averaged per feature when `gate_2q_p > 0`; zero
    /// selects the exact channel average (inference only).
    pub trajectories: usize,
    pub rng_seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            data_rx_theta: 0.0,
            data_depol_p: 0.0,
            gate_1q_theta: 0.0,
            gate_2q_p: 0.0,
            trajectories: 1,
            rng_seed: 0,
        }
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Probability(p));
    }
    Ok(())
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability(self.data_depol_p)?;
        check_probability(self.gate_2q_p)?;
        if !self.data_rx_theta.is_finite() || !self.gate_1q_theta.is_finite() {
            return Err(Error::Config("noise angles must be finite".into()));
        }
        Ok(())
    }

    pub fn has_gate_noise(&self) -> bool {
        self.gate_2q_p > 0.0 || self.gate_1q_theta != 0.0
    }

    pub fn has_data_noise(&self) -> bool {
        self.data_depol_p > 0.0 || self.data_rx_theta != 0.0
    }
}

/// Applies `R_x(theta)` to every qubit of every row.
pub fn apply_data_rx(batch: &mut StateBatch, theta: f64) -> Result<()> {
    if theta == 0.0 {
        return Ok(());
    }
    let n = batch.qubit_count();
    let mut tape = Tape::new(n, 0);
    for q in 0..n {
        tape.push_op(&GateOp::rx(q, Angle::Fixed(theta)), &[])?;
    }
    tape.forward(batch)
}

/// One trajectory of `ε(ρ) = (1−p)ρ + p/3 (XρX + YρY + ZρZ)` on every qubit
/// of every row.
pub fn apply_data_depolarizing(batch: &mut StateBatch, p: f64, rng: &mut Rng) -> Result<()> {
    check_probability(p)?;
    if p == 0.0 {
        return Ok(());
    }
    let (n, rows) = (batch.qubit_count(), batch.rows());
    let (re, im) = batch.parts_mut();
    for row in 0..rows {
        for q in 0..n {
            if let Some(axis) = draw_single_pauli(rng, p) {
                kernel::apply_pauli_row(re, im, rows, n, q, axis, row);
            }
        }
    }
    Ok(())
}

fn draw_single_pauli(rng: &mut Rng, p: f64) -> Option<Axis> {
    let u: f64 = rng.random();
    if u >= p {
        return None;
    }
    Some(match ((3.0 * u / p) as usize).min(2) {
        0 => Axis::X,
        1 => Axis::Y,
        _ => Axis::Z,
    })
}

/// Pauli pair code in `1..=15` (`4·p + q`, `0 = I`) with probability `p`.
fn draw_pair_code(rng: &mut Rng, p: f64) -> u8 {
    let u: f64 = rng.random();
    if u >= p {
        return 0;
    }
    1 + ((15.0 * u / p) as u8).min(14)
}

/// Compiles `circuit` with one noise trajectory per row: after each
/// two-qubit gate a uniformly chosen non-identity `P⊗Q` is inserted with
/// probability `gate_2q_p`, and `R_x(gate_1q_theta)` closes every qubit.
pub(crate) fn noisy_tape(
    circuit: &Circuit,
    params: &[f64],
    rows: usize,
    cfg: &NoiseConfig,
    rng: &mut Rng,
) -> Result<Tape> {
    cfg.validate()?;
    let two_qubit_sites: Vec<usize> = circuit
        .ops()
        .iter()
        .enumerate()
        .filter(|(_, op)| op.kind.arity() == 2)
        .map(|(i, _)| i)
        .collect();
    let mut codes = vec![vec![0u8; rows]; two_qubit_sites.len()];
    if cfg.gate_2q_p > 0.0 {
        for row in 0..rows {
            for site in codes.iter_mut() {
                site[row] = draw_pair_code(rng, cfg.gate_2q_p);
            }
        }
    }
    let mut tape = Tape::new(circuit.qubit_count(), circuit.param_count());
    let mut site = 0;
    let mut codes = codes.into_iter();
    for (i, op) in circuit.ops().iter().enumerate() {
        tape.push_op(op, params)?;
        if two_qubit_sites.get(site) == Some(&i) {
            let c = codes.next().expect("one code vector per site");
            if c.iter().any(|&x| x != 0) {
                tape.push_row_paulis([op.qubits[0], op.qubits[1]], c);
            }
            site += 1;
        }
    }
    if cfg.gate_1q_theta != 0.0 {
        for q in 0..circuit.qubit_count() {
            tape.push_op(&GateOp::rx(q, Angle::Fixed(cfg.gate_1q_theta)), &[])?;
        }
    }
    Ok(tape)
}

/// Runs `circuit` on `batch` with gate noise interleaved (one trajectory per
/// row).
pub fn apply_kernel_gate_noise(
    batch: &mut StateBatch,
    circuit: &Circuit,
    params: &[f64],
    cfg: &NoiseConfig,
    rng: &mut Rng,
) -> Result<()> {
    if batch.qubit_count() != circuit.qubit_count() {
        return Err(Error::Shape(format!(
            "batch has {} qubits, circuit expects {}",
            batch.qubit_count(),
            circuit.qubit_count()
        )));
    }
    noisy_tape(circuit, params, batch.rows(), cfg, rng)?.forward(batch)
}

/// Exact channel average of `⟨P_q⟩` for every row, qubit and axis
/// (`[row][qubit][axis]`), from density-matrix evolution of `circuit` on
/// the rows of `batch` with the gate noise of `cfg`.
///
/// `ρ` is stored as a `2n`-qubit vector with the row index on qubits
/// `0..n` and the column index on qubits `n..2n`, so a gate `U` acts as
/// `U` on the first half and `U*` on the second.
pub fn kernel_channel_expectations(
    batch: &StateBatch,
    circuit: &Circuit,
    params: &[f64],
    cfg: &NoiseConfig,
    axes: &[Axis],
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = circuit.qubit_count();
    if batch.qubit_count() != n {
        return Err(Error::Shape(format!(
            "batch has {} qubits, circuit expects {n}",
            batch.qubit_count()
        )));
    }
    if 2 * n > crate::simcore::MAX_QUBITS {
        return Err(Error::Shape(format!(
            "{n} qubits is too many for the exact channel"
        )));
    }
    let rows = batch.rows();
    let dim = 1usize << n;
    let (pr, pi) = batch.parts();
    let mut re = vec![0.0; dim * dim * rows];
    let mut im = vec![0.0; dim * dim * rows];
    for i in 0..dim {
        for j in 0..dim {
            let out = ((i << n) | j) * rows;
            for r in 0..rows {
                let (ar, ai) = (pr[i * rows + r], pi[i * rows + r]);
                let (br, bi) = (pr[j * rows + r], -pi[j * rows + r]);
                re[out + r] = ar * br - ai * bi;
                im[out + r] = ar * bi + ai * br;
            }
        }
    }
    let unitary =
        |re: &mut [f64], im: &mut [f64], target: usize, control: Option<usize>, m: Mat2| {
            kernel::apply_mat2(re, im, rows, 2 * n, target, control, &m);
            kernel::apply_mat2(
                re,
                im,
                rows,
                2 * n,
                target + n,
                control.map(|c| c + n),
                &m.conjugate(),
            );
        };
    for op in circuit.ops() {
        op.validate(n)?;
        let m = Mat2::for_kind(op.kind, op.resolve_angle(params)?);
        if op.kind.arity() == 2 {
            unitary(&mut re, &mut im, op.qubits[1], Some(op.qubits[0]), m);
            if cfg.gate_2q_p > 0.0 {
                depolarize_pair(&mut re, &mut im, rows, n, op.qubits, cfg.gate_2q_p);
            }
        } else {
            unitary(&mut re, &mut im, op.qubits[0], None, m);
        }
    }
    if cfg.gate_1q_theta != 0.0 {
        for q in 0..n {
            unitary(
                &mut re,
                &mut im,
                q,
                None,
                Mat2::for_kind(GateKind::Rx, cfg.gate_1q_theta),
            );
        }
    }
    let mut out = vec![0.0; rows * n * axes.len()];
    for q in 0..n {
        let m = kernel::mask(n, q);
        for (a, &axis) in axes.iter().enumerate() {
            for i in 0..dim {
                let (j, sign) = match axis {
                    Axis::Z => (i, if i & m == 0 { 1.0 } else { -1.0 }),
                    _ => (i ^ m, if i & m == 0 { -1.0 } else { 1.0 }),
                };
                let at = ((i << n) | j) * rows;
                for r in 0..rows {
                    let v = match axis {
                        Axis::Z => sign * re[at + r],
                        Axis::X => re[at + r],
                        Axis::Y => sign * im[at + r],
                    };
                    out[(r * n + q) * axes.len() + a] += v;
                }
            }
        }
    }
    Ok(out)
}

/// `ρ → (1 − μ)ρ + μ · Tr_ab(ρ) ⊗ I/4` with `μ = 16p/15`, the channel that
/// applies each non-identity `P⊗Q` with probability `p/15`.
fn depolarize_pair(
    re: &mut [f64],
    im: &mut [f64],
    rows: usize,
    n: usize,
    pair: [usize; 2],
    p: f64,
) {
    let mu = 16.0 * p / 15.0;
    let (ra, rb) = (kernel::mask(2 * n, pair[0]), kernel::mask(2 * n, pair[1]));
    let (ca, cb) = (
        kernel::mask(2 * n, pair[0] + n),
        kernel::mask(2 * n, pair[1] + n),
    );
    let all = ra | rb | ca | cb;
    let diag = [0, ra | ca, rb | cb, ra | rb | ca | cb];
    let mut trace_re = vec![0.0; rows];
    let mut trace_im = vec![0.0; rows];
    for base in (0..1usize << (2 * n)).filter(|b| b & all == 0) {
        trace_re.fill(0.0);
        trace_im.fill(0.0);
        for d in diag {
            let at = (base | d) * rows;
            for r in 0..rows {
                trace_re[r] += re[at + r];
                trace_im[r] += im[at + r];
            }
        }
        for s in 0..16usize {
            let bits = [ra, rb, ca, cb]
                .iter()
                .enumerate()
                .filter(|&(k, _)| s >> k & 1 == 1)
                .fold(0, |acc, (_, &b)| acc | b);
            let at = (base | bits) * rows;
            let on_diag = diag.contains(&bits);
            for r in 0..rows {
                re[at + r] *= 1.0 - mu;
                im[at + r] *= 1.0 - mu;
                if on_diag {
                    re[at + r] += 0.25 * mu * trace_re[r];
                    im[at + r] += 0.25 * mu * trace_im[r];
                }
            }
        }
    }
}
