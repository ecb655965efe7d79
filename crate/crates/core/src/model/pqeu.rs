use alloc::vec;
use alloc::vec::Vec;

use super::grid::{fuse, unfuse, PatchBatch};
use super::{ModelState, KERNEL_QUBITS, PATCH_CELLS};
use crate::measure::{self, MeasureConfig, Phase};
use crate::noise::{kernel_channel_expectations, noisy_tape, NoiseConfig};
use crate::rng::Rng;
use crate::simcore::tape::{adjoint_seed, Tape};
use crate::simcore::{amplitude_encode, Axis, StateBatch};
use crate::{Error, Result};

/// Everything that shapes a forward pass besides the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pipeline {
    pub measure: MeasureConfig,
    pub noise: NoiseConfig,
    pub phase: Phase,
}

impl Pipeline {
    pub fn inference(measure: MeasureConfig, noise: NoiseConfig) -> Pipeline {
        Pipeline {
            measure,
            noise,
            phase: Phase::Inference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        self.noise.validate()?;
        if self.exact_channel() && matches!(self.phase, Phase::Training(_)) {
            return Err(Error::Config(
                "the exact gate-noise channel is inference-only; use trajectories > 0 to train"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Kernel copies per patch: one per gate-noise trajectory.
    pub(crate) fn trajectories(&self) -> usize {
        if self.noise.gate_2q_p > 0.0 && self.noise.trajectories > 0 {
            self.noise.trajectories
        } else {
            1
        }
    }

    /// Two-qubit gate noise evaluated by density-matrix evolution instead of
    /// trajectories.
    pub(crate) fn exact_channel(&self) -> bool {
        self.noise.gate_2q_p > 0.0 && self.noise.trajectories == 0
    }
}

/// Kernel outputs before shot and readout noise, `[row][qubit][axis]`,
/// averaged over trajectory copies. Also returns the evolved copies and
/// their tape unless the exact channel was used.
pub(crate) fn kernel_raw(
    encoded: StateBatch,
    model: &ModelState,
    pipeline: &Pipeline,
    axes: &[Axis],
    rng: &mut Rng,
) -> Result<(Vec<f64>, Option<(StateBatch, Tape)>)> {
    if pipeline.exact_channel() {
        let raw = kernel_channel_expectations(
            &encoded,
            &model.kernel,
            &model.theta,
            &pipeline.noise,
            axes,
        )?;
        return Ok((raw, None));
    }
    let rows = encoded.rows();
    let copies = pipeline.trajectories();
    let mut state = if copies > 1 {
        encoded.replicate(copies)
    } else {
        encoded
    };
    let tape = if pipeline.noise.has_gate_noise() {
        noisy_tape(
            &model.kernel,
            &model.theta,
            state.rows(),
            &pipeline.noise,
            rng,
        )?
    } else {
        Tape::compile(&model.kernel, &model.theta)?
    };
    tape.forward(&mut state)?;
    let width = KERNEL_QUBITS * axes.len();
    let mut raw = measure::raw_expectations(&state, axes);
    if copies > 1 {
        let mut mean = vec![0.0; rows * width];
        for k in 0..copies {
            for (m, v) in mean
                .iter_mut()
                .zip(&raw[k * rows * width..(k + 1) * rows * width])
            {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= copies as f64);
        raw = mean;
    }
    Ok((raw, Some((state, tape))))
}

/// Forward state kept for the backward pass.
pub(crate) struct Cache {
    evolved: Option<(StateBatch, Tape)>,
    axes: &'static [Axis],
    scale: f64,
    copies: usize,
}

pub(crate) fn encode_patches(patches: &PatchBatch) -> Result<StateBatch> {
    amplitude_encode(&patches.data, PATCH_CELLS).map_err(|e| match e {
        Error::ZeroEncodingRow { row } => {
            let o = patches.origin[row];
            Error::ZeroPatch {
                sample: o.sample,
                patch_row: o.c,
                patch_col: o.r,
            }
        }
        other => other,
    })
}

/// Encodes every patch, runs the shared kernel once over all of them and
/// returns fused features, row-major `samples × 64`.
pub fn pqeu_forward(
    patches: &PatchBatch,
    model: &ModelState,
    pipeline: &Pipeline,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    forward_cached(patches, model, pipeline, rng).map(|(f, _)| f)
}

pub(crate) fn forward_cached(
    patches: &PatchBatch,
    model: &ModelState,
    pipeline: &Pipeline,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Cache)> {
    pipeline.validate()?;
    if model.theta.len() != model.kernel.param_count() {
        return Err(Error::Shape(alloc::format!(
            "{} angles for a kernel with {} slots",
            model.theta.len(),
            model.kernel.param_count()
        )));
    }
    let encoded = encode_patches(patches)?;
    let axes = measure::axes(pipeline.measure.strategy, pipeline.phase);
    let (raw, evolved) = kernel_raw(encoded, model, pipeline, axes, rng)?;
    let features = measure::observe(&raw, axes.len(), &pipeline.measure, rng)?;
    let scale = measure::feature_scale(&pipeline.measure, axes.len());
    let fused = fuse(&features, &patches.origin, patches.samples);
    Ok((
        fused,
        Cache {
            evolved,
            axes,
            scale,
            copies: pipeline.trajectories(),
        },
    ))
}

/// Kernel-angle gradient given `∂L/∂features` (`samples × 64`).
pub(crate) fn backward(
    patches: &PatchBatch,
    cache: Cache,
    d_features: &[f64],
    grad: &mut [f64],
) -> Result<()> {
    let Cache {
        evolved,
        axes,
        scale,
        copies,
    } = cache;
    let (mut output, tape) = evolved
        .ok_or_else(|| Error::Config("no gradient through the exact gate-noise channel".into()))?;
    let per_patch = unfuse(d_features, &patches.origin);
    let rows = patches.rows();
    let width = KERNEL_QUBITS * axes.len();
    let weight = scale / copies as f64;
    let mut upstream = vec![0.0; rows * copies * width];
    for k in 0..copies {
        for r in 0..rows {
            for q in 0..KERNEL_QUBITS {
                let g = weight * per_patch[r * KERNEL_QUBITS + q];
                for a in 0..axes.len() {
                    upstream[((k * rows + r) * KERNEL_QUBITS + q) * axes.len() + a] = g;
                }
            }
        }
    }
    let observables: Vec<(Axis, usize)> = (0..KERNEL_QUBITS)
        .flat_map(|q| axes.iter().map(move |&a| (a, q)))
        .collect();
    let mut lambda = adjoint_seed(&output, &observables, &upstream)?;
    tape.backward(&mut output, &mut lambda, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Shots, Strategy};
    use crate::model::{grid_patches, PatchOrigin, FEATURES};
    use crate::rng::substream;
    use crate::simcore::Circuit;

    fn analytic(strategy: Strategy) -> Pipeline {
        Pipeline::inference(
            MeasureConfig {
                strategy,
                shots: Shots::Analytic,
                p_measure: 0.0,
                rng_seed: 0,
            },
            NoiseConfig::default(),
        )
    }

    #[test]
    fn identity_kernel_on_basis_patches() {
        let model = ModelState::zeros(Circuit::empty(4)).unwrap();
        let mut grid = [0.0; 256];
        for c in 0..4 {
            for r in 0..4 {
                grid[(4 * c) * 16 + 4 * r] = 1.0;
            }
        }
        let p = grid_patches(&grid).unwrap();
        let f = pqeu_forward(
            &p,
            &model,
            &analytic(Strategy::PauliZ),
            &mut substream(0, 0),
        )
        .unwrap();
        assert_eq!(f, vec![1.0; FEATURES]);
        let f = pqeu_forward(&p, &model, &analytic(Strategy::SMub), &mut substream(0, 0)).unwrap();
        assert!(f.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn zero_patch_reports_provenance() {
        let model = ModelState::standard(0);
        let mut grid = [1.0; 256];
        for y in 4..8 {
            for x in 8..12 {
                grid[y * 16 + x] = 0.0;
            }
        }
        let p = grid_patches(&grid).unwrap();
        assert_eq!(
            pqeu_forward(&p, &model, &analytic(Strategy::AMub), &mut substream(0, 0)),
            Err(Error::ZeroPatch {
                sample: 0,
                patch_row: 1,
                patch_col: 2
            })
        );
    }

    #[test]
    fn patch_order_does_not_change_fused_map() {
        let model = ModelState::standard(3);
        let grid: Vec<f64> = (0..256)
            .map(|i| 0.1 + ((i * 7919) % 97) as f64 / 97.0)
            .collect();
        let p = grid_patches(&grid).unwrap();
        let mut q = p.clone();
        let order: Vec<usize> = (0..16).rev().collect();
        q.origin = order
            .iter()
            .map(|&i| p.origin[i])
            .collect::<Vec<PatchOrigin>>();
        q.data = order.iter().flat_map(|&i| p.row(i).to_vec()).collect();
        let pipe = analytic(Strategy::SMub);
        let a = pqeu_forward(&p, &model, &pipe, &mut substream(0, 0)).unwrap();
        let b = pqeu_forward(&q, &model, &pipe, &mut substream(0, 0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
