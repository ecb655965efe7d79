use alloc::vec::Vec;

use super::pqeu::{encode_patches, kernel_raw, Pipeline};
use super::{fuse, grid_patches, ModelState, Output, PatchBatch, GRID_CELLS, KERNEL_QUBITS};
use crate::measure;
use crate::rng::Rng;
use crate::Result;

/// Conventional data flow: every patch is its own kernel invocation on a
/// one-row state, with the circuit compiled afresh each time.
///
/// Returns the logits and the number of kernel invocations.
pub fn sequential_baseline_forward(
    grids: &[f64],
    model: &ModelState,
    pipeline: &Pipeline,
    rng: &mut Rng,
) -> Result<(Output, usize)> {
    pipeline.validate()?;
    let mut invocations = 0;
    let mut features = Vec::with_capacity(grids.len() / GRID_CELLS * super::FEATURES);
    for grid in grids.chunks_exact(GRID_CELLS) {
        let patches = grid_patches(grid)?;
        let mut per_patch = Vec::with_capacity(patches.rows() * KERNEL_QUBITS);
        for i in 0..patches.rows() {
            let single = PatchBatch {
                samples: 1,
                data: patches.row(i).to_vec(),
                origin: alloc::vec![patches.origin[i]],
            };
            let state = encode_patches(&single)?;
            let axes = measure::axes(pipeline.measure.strategy, pipeline.phase);
            let (raw, _) = kernel_raw(state, model, pipeline, axes, rng)?;
            invocations += 1;
            per_patch.extend(measure::observe(&raw, axes.len(), &pipeline.measure, rng)?);
        }
        features.extend(fuse(&per_patch, &patches.origin, 1));
    }
    Ok((Output::from_logits(model.head(&features)), invocations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{MeasureConfig, Shots, Strategy};
    use crate::model::forward_grids;
    use crate::noise::NoiseConfig;
    use crate::rng::substream;

    #[test]
    fn matches_batched_forward_and_counts_invocations() {
        let model = ModelState::standard(7);
        let grids: Vec<f64> = (0..3 * 256)
            .map(|i| 0.05 + ((i * 31) % 53) as f64 / 53.0)
            .collect();
        for strategy in Strategy::ALL {
            let pipe = Pipeline::inference(
                MeasureConfig {
                    strategy,
                    shots: Shots::Analytic,
                    p_measure: 0.0,
                    rng_seed: 0,
                },
                NoiseConfig::default(),
            );
            let batched = forward_grids(&grids, &model, &pipe, &mut substream(0, 0)).unwrap();
            let (seq, calls) =
                sequential_baseline_forward(&grids, &model, &pipe, &mut substream(0, 0)).unwrap();
            assert_eq!(calls, 3 * 16);
            for (a, b) in batched.logits.iter().zip(&seq.logits) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
