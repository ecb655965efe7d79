use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{FEATURES, GRID, GRID_CELLS, KERNEL_QUBITS, PATCH, PATCHES_PER_SAMPLE, PATCH_CELLS};
use crate::{Error, Result};

/// Modulus map of a 256-amplitude state onto a row-major 16×16 grid:
/// `grid[i][j] = |z[16·i + j]|`.
pub fn complex_to_grid(z: &[Complex64]) -> Result<[f64; GRID_CELLS]> {
    if z.len() != GRID_CELLS {
        return Err(Error::Shape(alloc::format!(
            "{} amplitudes, expected {GRID_CELLS}",
            z.len()
        )));
    }
    let mut g = [0.0; GRID_CELLS];
    for (cell, a) in g.iter_mut().zip(z) {
        *cell = a.norm();
    }
    Ok(g)
}

/// Where a patch row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchOrigin {
    pub sample: usize,
    /// Patch row `c` (grid rows `4c..4c+4`).
    pub c: usize,
    /// Patch column `r` (grid columns `4r..4r+4`).
    pub r: usize,
}

/// Flattened 4×4 patches, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBatch {
    pub samples: usize,
    /// Row-major `rows × 16`.
    pub data: Vec<f64>,
    pub origin: Vec<PatchOrigin>,
}

impl PatchBatch {
    pub fn rows(&self) -> usize {
        self.origin.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * PATCH_CELLS..(i + 1) * PATCH_CELLS]
    }
}

/// Non-overlapping 4×4 tiling of `grids` (row-major `B × 256`). Rows are
/// ordered by sample, then patch row `c`, then patch column `r`.
pub fn grid_patches(grids: &[f64]) -> Result<PatchBatch> {
    if !grids.len().is_multiple_of(GRID_CELLS) {
        return Err(Error::Shape(alloc::format!(
            "{} values do not form 16×16 grids",
            grids.len()
        )));
    }
    let samples = grids.len() / GRID_CELLS;
    let mut data = Vec::with_capacity(grids.len());
    let mut origin = Vec::with_capacity(samples * PATCHES_PER_SAMPLE);
    for (sample, g) in grids.chunks_exact(GRID_CELLS).enumerate() {
        for c in 0..GRID / PATCH {
            for r in 0..GRID / PATCH {
                for y in 0..PATCH {
                    let start = (PATCH * c + y) * GRID + PATCH * r;
                    data.extend_from_slice(&g[start..start + PATCH]);
                }
                origin.push(PatchOrigin { sample, c, r });
            }
        }
    }
    Ok(PatchBatch {
        samples,
        data,
        origin,
    })
}

/// Position in the fused 8×8 map of qubit `k`'s feature for patch `(c, r)`:
/// the four values form a 2×2 block at rows `2c..2c+2`, columns `2r..2r+2`.
pub fn fused_index(c: usize, r: usize, k: usize) -> usize {
    (2 * c + k / 2) * 8 + 2 * r + k % 2
}

/// Scatters per-patch features (`rows × 4`) into per-sample 8×8 maps.
pub fn fuse(features: &[f64], origin: &[PatchOrigin], samples: usize) -> Vec<f64> {
    let mut out = vec![0.0; samples * FEATURES];
    for (row, o) in origin.iter().enumerate() {
        for k in 0..KERNEL_QUBITS {
            out[o.sample * FEATURES + fused_index(o.c, o.r, k)] = features[row * KERNEL_QUBITS + k];
        }
    }
    out
}

/// Inverse of [`fuse`]: gathers fused-map cotangents back to patch rows.
pub fn unfuse(fused: &[f64], origin: &[PatchOrigin]) -> Vec<f64> {
    let mut out = vec![0.0; origin.len() * KERNEL_QUBITS];
    for (row, o) in origin.iter().enumerate() {
        for k in 0..KERNEL_QUBITS {
            out[row * KERNEL_QUBITS + k] = fused[o.sample * FEATURES + fused_index(o.c, o.r, k)];
        }
    }
    out
}
