//! IDX image sets (the MNIST family) and their mapping onto the 16×16
//! model grid.

use alloc::format;
use alloc::vec::Vec;

use crate::model::{GRID, GRID_CELLS};
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Value added to every grid cell before renormalizing, so that blank
/// border patches remain encodable.
pub const BACKGROUND_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major intensities, `count × height × width`.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.pixels[i * n..(i + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImageSet {
    pub images: IdxImages,
    pub labels: Vec<u8>,
}

impl IdxImageSet {
    pub fn new(images: IdxImages, labels: Vec<u8>) -> Result<IdxImageSet> {
        if images.count != labels.len() {
            return Err(Error::Idx(format!(
                "{} images but {} labels",
                images.count,
                labels.len()
            )));
        }
        Ok(IdxImageSet { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Idx("truncated header".into()))
}

fn header(bytes: &[u8], magic: u32, dims: usize) -> Result<(Vec<usize>, usize)> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(Error::Idx(format!(
            "bad magic {found:#010x}, expected {magic:#010x}"
        )));
    }
    let mut shape = Vec::with_capacity(dims);
    let mut total: usize = 1;
    for d in 0..dims {
        let v = read_u32(bytes, 4 + 4 * d)? as usize;
        total = total
            .checked_mul(v)
            .ok_or_else(|| Error::Idx("dimensions overflow".into()))?;
        shape.push(v);
    }
    let start = 4 + 4 * dims;
    let available = bytes.len() - start.min(bytes.len());
    if available < total {
        return Err(Error::Idx(format!(
            "payload has {available} bytes, header declares {total}"
        )));
    }
    if available > total {
        return Err(Error::Idx(format!(
            "{} trailing bytes after payload",
            available - total
        )));
    }
    Ok((shape, start))
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let (shape, start) = header(bytes, IMAGE_MAGIC, 3)?;
    Ok(IdxImages {
        count: shape[0],
        height: shape[1],
        width: shape[2],
        pixels: bytes[start..].to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (_, start) = header(bytes, LABEL_MAGIC, 1)?;
    Ok(bytes[start..].to_vec())
}

/// Parses and pairs an image file with its label file.
pub fn parse_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<IdxImageSet> {
    IdxImageSet::new(parse_images(image_bytes)?, parse_labels(label_bytes)?)
}

/// Overlap weights of an area resize from `from` cells to `to` cells:
/// `w[o][i]` is the fraction of output cell `o` covered by input cell `i`.
fn area_weights(from: usize, to: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = from as f64 / to as f64;
    (0..to)
        .map(|o| {
            let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
            let first = libm::floor(lo) as usize;
            let last = (libm::ceil(hi) as usize).min(from);
            (first..last)
                .filter_map(|i| {
                    let overlap = hi.min(i as f64 + 1.0) - lo.max(i as f64);
                    (overlap > 1e-12).then_some((i, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Box-filter resize of an `height × width` image to 16×16 (unnormalized
/// mean intensities).
pub fn downsample(image: &[u8], height: usize, width: usize) -> Result<[f64; GRID_CELLS]> {
    if image.len() != height * width || height == 0 || width == 0 {
        return Err(Error::Idx(format!(
            "image of {} pixels is not {height}×{width}",
            image.len()
        )));
    }
    let wr = area_weights(height, GRID);
    let wc = area_weights(width, GRID);
    let mut rows = alloc::vec![[0.0; GRID]; height];
    for (y, row) in rows.iter_mut().enumerate() {
        for (o, taps) in wc.iter().enumerate() {
            row[o] = taps
                .iter()
                .map(|&(x, w)| w * image[y * width + x] as f64)
                .sum();
        }
    }
    let mut out = [0.0; GRID_CELLS];
    for (o, taps) in wr.iter().enumerate() {
        for c in 0..GRID {
            out[o * GRID + c] = taps.iter().map(|&(y, w)| w * rows[y][c]).sum();
        }
    }
    Ok(out)
}

/// Downsampled image scaled to unit L2 norm.
pub fn to_grid(image: &[u8], height: usize, width: usize) -> Result<[f64; GRID_CELLS]> {
    let mut g = downsample(image, height, width)?;
    let n = libm::sqrt(g.iter().map(|v| v * v).sum::<f64>());
    if n == 0.0 {
        return Err(Error::ZeroImage);
    }
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

/// [`to_grid`] with [`BACKGROUND_FLOOR`] added to every cell and the
/// result renormalized, so every 4×4 patch has a nonzero entry.
pub fn to_model_grid(image: &[u8], height: usize, width: usize) -> Result<[f64; GRID_CELLS]> {
    let mut g = to_grid(image, height, width)?;
    g.iter_mut().for_each(|v| *v += BACKGROUND_FLOOR);
    let n = libm::sqrt(g.iter().map(|v| v * v).sum::<f64>());
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn idx(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for d in dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn parses_tiny_image_file() {
        let bytes = idx(IMAGE_MAGIC, &[1, 2, 2], &[0, 128, 255, 64]);
        let images = parse_images(&bytes).unwrap();
        assert_eq!((images.count, images.height, images.width), (1, 2, 2));
        assert_eq!(images.image(0), &[0, 128, 255, 64]);
    }

    #[test]
    fn rejects_bad_magic_truncation_and_mismatch() {
        let labels = idx(IMAGE_MAGIC, &[1], &[3]);
        assert!(matches!(parse_labels(&labels), Err(Error::Idx(_))));
        let short = idx(IMAGE_MAGIC, &[2, 2, 2], &[0; 7]);
        assert!(matches!(parse_images(&short), Err(Error::Idx(_))));
        assert!(matches!(parse_images(&[0, 0, 8]), Err(Error::Idx(_))));
        let huge = idx(IMAGE_MAGIC, &[u32::MAX, u32::MAX, u32::MAX], &[]);
        assert!(matches!(parse_images(&huge), Err(Error::Idx(_))));
        let images = idx(IMAGE_MAGIC, &[2, 1, 1], &[1, 2]);
        let labels = idx(LABEL_MAGIC, &[3], &[0, 1, 2]);
        assert!(matches!(parse_idx(&images, &labels), Err(Error::Idx(_))));
    }

    #[test]
    fn constant_image_gives_uniform_grid() {
        let g = to_grid(&[77; 28 * 28], 28, 28).unwrap();
        for v in g {
            assert!((v - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_has_unit_norm_and_zero_image_fails() {
        let img: Vec<u8> = (0..784).map(|i| ((i * 37) % 256) as u8).collect();
        let g = to_grid(&img, 28, 28).unwrap();
        assert!((g.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(to_grid(&[0; 784], 28, 28), Err(Error::ZeroImage));
    }

    #[test]
    fn area_weights_partition_each_output_cell() {
        for taps in area_weights(28, 16) {
            let total: f64 = taps.iter().map(|t| t.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let mut img = vec![0u8; 784];
        img[0] = 255;
        let g = downsample(&img, 28, 28).unwrap();
        assert!(g[0] > 0.0);
        assert!(g[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn model_grid_has_no_blank_patch() {
        let mut img = vec![0u8; 784];
        img[14 * 28 + 14] = 200;
        let g = to_model_grid(&img, 28, 28).unwrap();
        assert!(g.iter().all(|&v| v > 0.0));
    }
}
