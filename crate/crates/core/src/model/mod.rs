//! The shared-kernel quanvolutional classifier.
//!
//! A 16×16 input grid is cut into sixteen 4×4 patches. Every patch of every
//! sample in a batch is amplitude-encoded into one 4-qubit [`StateBatch`]
//! and the single shared kernel circuit runs over all of them in one pass.
//! Each patch yields four measured values, laid out as a 2×2 block of an
//! 8×8 feature map; a linear head maps the 64 features to 8 logits.
//!
//! [`StateBatch`]: crate::simcore::StateBatch

mod baseline;
mod grid;
mod pqeu;
mod train;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;

pub use baseline::sequential_baseline_forward;
pub use grid::{complex_to_grid, fuse, fused_index, grid_patches, unfuse, PatchBatch, PatchOrigin};
pub use pqeu::{pqeu_forward, Pipeline};
pub use train::{
    evaluate, grids_from_states, loss_and_gradient, split_grids, train, train_grids, Adam,
    EpochMetrics, Evaluation, GridSet, TrainConfig, TrainOutcome,
};

use crate::rng::{self, Rng};
use crate::simcore::{Angle, Circuit, GateOp, Statevector};
use crate::{Error, Result};

pub const GRID: usize = 16;
pub const GRID_CELLS: usize = GRID * GRID;
pub const PATCH: usize = 4;
pub const PATCH_CELLS: usize = PATCH * PATCH;
pub const PATCHES_PER_SAMPLE: usize = (GRID / PATCH) * (GRID / PATCH);
pub const KERNEL_QUBITS: usize = 4;
pub const FEATURES: usize = 64;
pub const CLASSES: usize = 8;
pub const KERNEL_PARAMS: usize = 117;
pub const HEAD_PARAMS: usize = FEATURES * CLASSES + CLASSES;

/// Rotation blocks per kernel stage.
const BLOCKS_PER_STAGE: usize = 3;
const STAGES: usize = 3;

/// The 117-slot shared kernel.
///
/// Three stages, each: an `SX` on every qubit, three blocks of
/// `RX·RY·RZ` on every qubit, then a chain of `CRX` entanglers
/// `0→1, 1→2, 2→3`. That is `3 · (36 + 3) = 117` slots and nine
/// two-qubit gates.
pub fn kernel_template() -> Circuit {
    let mut ops = Vec::new();
    let mut slot = 0;
    let mut next = || {
        slot += 1;
        Angle::Slot(slot - 1)
    };
    for _ in 0..STAGES {
        for q in 0..KERNEL_QUBITS {
            ops.push(GateOp::sx(q));
        }
        for _ in 0..BLOCKS_PER_STAGE {
            for q in 0..KERNEL_QUBITS {
                ops.push(GateOp::rx(q, next()));
                ops.push(GateOp::ry(q, next()));
                ops.push(GateOp::rz(q, next()));
            }
        }
        for q in 0..KERNEL_QUBITS - 1 {
            ops.push(GateOp::crx(q, q + 1, next()));
        }
    }
    Circuit::new(KERNEL_QUBITS, ops).expect("kernel template is well formed")
}

/// Trainable parameters of a baseline that gives each of the sixteen patch
/// positions its own kernel copy.
pub fn unshared_parameter_count(kernel_params: usize) -> usize {
    PATCHES_PER_SAMPLE * kernel_params + HEAD_PARAMS
}

/// Kernel angles plus the linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub kernel: Circuit,
    pub theta: Vec<f64>,
    /// Row-major `8 × 64`.
    pub head_weights: Vec<f64>,
    pub head_bias: Vec<f64>,
}

impl ModelState {
    /// All-zero parameters on `kernel`.
    pub fn zeros(kernel: Circuit) -> Result<ModelState> {
        if kernel.qubit_count() != KERNEL_QUBITS {
            return Err(Error::Shape(alloc::format!(
                "kernel acts on {} qubits",
                kernel.qubit_count()
            )));
        }
        let theta = vec![0.0; kernel.param_count()];
        Ok(ModelState {
            kernel,
            theta,
            head_weights: vec![0.0; FEATURES * CLASSES],
            head_bias: vec![0.0; CLASSES],
        })
    }

    /// Seeded initialization: angles uniform in `(−π/50, π/50)`, head
    /// weights uniform in `±√(6/72)`, zero bias.
    pub fn init(kernel: Circuit, seed: u64) -> Result<ModelState> {
        let mut m = ModelState::zeros(kernel)?;
        let mut rng = rng::substream(seed, rng::stream::INIT);
        let a = PI / 50.0;
        m.theta
            .iter_mut()
            .for_each(|t| *t = rng.random_range(-a..a));
        let b = libm::sqrt(6.0 / (FEATURES + CLASSES) as f64);
        m.head_weights
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-b..b));
        Ok(m)
    }

    /// [`init`](Self::init) on [`kernel_template`].
    pub fn standard(seed: u64) -> ModelState {
        ModelState::init(kernel_template(), seed).expect("template has four qubits")
    }

    pub fn parameter_count(&self) -> usize {
        self.theta.len() + self.head_weights.len() + self.head_bias.len()
    }

    /// `theta ++ head_weights ++ head_bias`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        p.extend_from_slice(&self.theta);
        p.extend_from_slice(&self.head_weights);
        p.extend_from_slice(&self.head_bias);
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.parameter_count() {
            return Err(Error::Shape(alloc::format!(
                "{} parameters for a model with {}",
                p.len(),
                self.parameter_count()
            )));
        }
        let (t, rest) = p.split_at(self.theta.len());
        let (w, b) = rest.split_at(self.head_weights.len());
        self.theta.copy_from_slice(t);
        self.head_weights.copy_from_slice(w);
        self.head_bias.copy_from_slice(b);
        Ok(())
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.theta
            .iter()
            .chain(&self.head_weights)
            .chain(&self.head_bias)
            .map(|v| v * v)
            .sum()
    }

    /// `W x + b` for every row of `features` (`B × 64`).
    pub fn head(&self, features: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(features.len() / FEATURES * CLASSES);
        for x in features.chunks_exact(FEATURES) {
            for j in 0..CLASSES {
                let w = &self.head_weights[j * FEATURES..(j + 1) * FEATURES];
                out.push(self.head_bias[j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
            }
        }
        out
    }
}

/// Logits and log-probabilities, row-major `B × 8`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub logits: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl Output {
    pub fn from_logits(logits: Vec<f64>) -> Output {
        let log_probs = log_softmax(&logits);
        Output { logits, log_probs }
    }

    pub fn rows(&self) -> usize {
        self.logits.len() / CLASSES
    }

    /// Argmax per row, lowest class index on ties.
    pub fn predictions(&self) -> Vec<usize> {
        self.log_probs.chunks_exact(CLASSES).map(argmax).collect()
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Row-wise log-softmax over groups of 8.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks_exact(CLASSES) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + libm::log(row.iter().map(|v| libm::exp(v - m)).sum::<f64>());
        out.extend(row.iter().map(|v| v - lse));
    }
    out
}

/// Mean negative log-likelihood of `labels` plus `l2_lambda · ‖params‖²`.
pub fn loss(log_probs: &[f64], labels: &[u8], model: &ModelState, l2_lambda: f64) -> Result<f64> {
    let rows = log_probs.len() / CLASSES;
    if rows != labels.len() || rows == 0 {
        return Err(Error::Shape(alloc::format!(
            "{rows} prediction rows for {} labels",
            labels.len()
        )));
    }
    let mut nll = 0.0;
    for (row, &y) in log_probs.chunks_exact(CLASSES).zip(labels) {
        let y = y as usize;
        if y >= CLASSES {
            return Err(Error::Label {
                label: y,
                classes: CLASSES,
            });
        }
        nll -= row[y];
    }
    Ok(nll / rows as f64 + l2_lambda * model.l2_norm_sqr())
}

/// Full forward pass from 8-qubit states: grid, patches, shared kernel,
/// fusion, head, log-softmax.
pub fn forward(
    states: &[Statevector],
    model: &ModelState,
    pipeline: &Pipeline,
    rng: &mut Rng,
) -> Result<Output> {
    let mut grids = Vec::with_capacity(states.len() * GRID_CELLS);
    for s in states {
        grids.extend_from_slice(&complex_to_grid(s.amplitudes())?);
    }
    forward_grids(&grids, model, pipeline, rng)
}

/// [`forward`] starting from 16×16 grids (row-major `B × 256`).
pub fn forward_grids(
    grids: &[f64],
    model: &ModelState,
    pipeline: &Pipeline,
    rng: &mut Rng,
) -> Result<Output> {
    let patches = grid_patches(grids)?;
    let features = pqeu_forward(&patches, model, pipeline, rng)?;
    Ok(Output::from_logits(model.head(&features)))
}
