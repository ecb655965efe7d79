use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 10;

/// Norm tolerance for constructed and evolved states.
pub const NORM_TOLERANCE: f64 = 1e-10;

fn check_qubits(qubit_count: usize) -> Result<()> {
    if qubit_count == 0 || qubit_count > MAX_QUBITS {
        return Err(Error::Shape(format!(
            "qubit count {qubit_count} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// A single normalized pure state of `qubit_count` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Wraps `amplitudes`, which must have power-of-two length and unit norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Statevector> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let qubit_count = len.trailing_zeros() as usize;
        check_qubits(qubit_count)?;
        let sv = Statevector {
            qubit_count,
            amplitudes,
        };
        let n = sv.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
        Ok(sv)
    }

    /// Wraps amplitudes without the norm check; used for states that are
    /// unitary images of checked states.
    pub(crate) fn from_raw(qubit_count: usize, amplitudes: Vec<Complex64>) -> Statevector {
        debug_assert_eq!(amplitudes.len(), 1 << qubit_count);
        Statevector {
            qubit_count,
            amplitudes,
        }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(qubit_count: usize, index: usize) -> Result<Statevector> {
        check_qubits(qubit_count)?;
        let dim = 1usize << qubit_count;
        if index >= dim {
            return Err(Error::Shape(format!("basis index {index} >= {dim}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector {
            qubit_count,
            amplitudes,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// `rows` statevectors of equal size stored amplitude-major: the values of
/// amplitude `i` for all rows are contiguous, so a gate touching amplitude
/// pair `(i, j)` streams two dense row slices.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBatch {
    qubit_count: usize,
    rows: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl StateBatch {
    /// `rows` copies of `|index⟩`.
    pub fn basis(qubit_count: usize, rows: usize, index: usize) -> Result<StateBatch> {
        check_qubits(qubit_count)?;
        let dim = 1usize << qubit_count;
        if index >= dim {
            return Err(Error::Shape(format!("basis index {index} >= {dim}")));
        }
        let mut re = vec![0.0; dim * rows];
        re[index * rows..(index + 1) * rows].fill(1.0);
        Ok(StateBatch {
            qubit_count,
            rows,
            re,
            im: vec![0.0; dim * rows],
        })
    }

    pub fn from_statevectors(states: &[Statevector]) -> Result<StateBatch> {
        let first = states
            .first()
            .ok_or_else(|| Error::Shape("cannot build a batch from zero states".into()))?;
        let qubit_count = first.qubit_count;
        let dim = 1usize << qubit_count;
        let rows = states.len();
        let mut re = vec![0.0; dim * rows];
        let mut im = vec![0.0; dim * rows];
        for (r, s) in states.iter().enumerate() {
            if s.qubit_count != qubit_count {
                return Err(Error::Shape("mixed qubit counts in batch".into()));
            }
            for (i, a) in s.amplitudes.iter().enumerate() {
                re[i * rows + r] = a.re;
                im[i * rows + r] = a.im;
            }
        }
        Ok(StateBatch {
            qubit_count,
            rows,
            re,
            im,
        })
    }

    /// Builds a batch from real row vectors that are already normalized.
    pub(crate) fn from_real_rows_unchecked(
        qubit_count: usize,
        rows: usize,
        data: &[f64],
    ) -> StateBatch {
        let dim = 1usize << qubit_count;
        debug_assert_eq!(data.len(), rows * dim);
        let mut re = vec![0.0; dim * rows];
        for r in 0..rows {
            for i in 0..dim {
                re[i * rows + r] = data[r * dim + i];
            }
        }
        StateBatch {
            qubit_count,
            rows,
            re,
            im: vec![0.0; dim * rows],
        }
    }

    /// `copies` stacked copies of the batch: row `r` of copy `k` is row
    /// `k·rows + r`.
    pub fn replicate(&self, copies: usize) -> StateBatch {
        let (rows, dim) = (self.rows, self.dim());
        let total = rows * copies;
        let mut re = Vec::with_capacity(dim * total);
        let mut im = Vec::with_capacity(dim * total);
        for i in 0..dim {
            for _ in 0..copies {
                re.extend_from_slice(&self.re[i * rows..(i + 1) * rows]);
                im.extend_from_slice(&self.im[i * rows..(i + 1) * rows]);
            }
        }
        StateBatch {
            qubit_count: self.qubit_count,
            rows: total,
            re,
            im,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        1 << self.qubit_count
    }

    pub fn amplitude(&self, row: usize, index: usize) -> Complex64 {
        let k = index * self.rows + row;
        Complex64::new(self.re[k], self.im[k])
    }

    pub fn row(&self, row: usize) -> Statevector {
        let amps = (0..self.dim()).map(|i| self.amplitude(row, i)).collect();
        Statevector::from_raw(self.qubit_count, amps)
    }

    pub fn to_statevectors(&self) -> Vec<Statevector> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn norm_sqr(&self, row: usize) -> f64 {
        (0..self.dim())
            .map(|i| {
                let k = i * self.rows + row;
                self.re[k] * self.re[k] + self.im[k] * self.im[k]
            })
            .sum()
    }

    /// Largest `|‖ψ_r‖² − 1|` over rows.
    pub fn max_norm_error(&self) -> f64 {
        (0..self.rows)
            .map(|r| (self.norm_sqr(r) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub(crate) fn parts(&self) -> (&[f64], &[f64]) {
        (&self.re, &self.im)
    }
}

/// Amplitude-encodes real rows of length `2^n` into an `n`-qubit batch.
///
/// Each row is L2-normalized. A row with no nonzero entry is rejected.
pub fn amplitude_encode(vectors: &[f64], width: usize) -> Result<StateBatch> {
    if !width.is_power_of_two() || width < 2 {
        return Err(Error::Shape(format!(
            "row width {width} is not a power of two"
        )));
    }
    if !vectors.len().is_multiple_of(width) {
        return Err(Error::Shape(format!(
            "{} values do not form rows of width {width}",
            vectors.len()
        )));
    }
    let qubit_count = width.trailing_zeros() as usize;
    check_qubits(qubit_count)?;
    let rows = vectors.len() / width;
    let mut normalized = Vec::with_capacity(vectors.len());
    for (r, row) in vectors.chunks_exact(width).enumerate() {
        let n2: f64 = row.iter().map(|v| v * v).sum();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::ZeroEncodingRow { row: r });
        }
        let inv = 1.0 / libm::sqrt(n2);
        normalized.extend(row.iter().map(|v| v * inv));
    }
    Ok(StateBatch::from_real_rows_unchecked(
        qubit_count,
        rows,
        &normalized,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn encode_examples() {
        let mut e0 = [0.0; 16];
        e0[0] = 1.0;
        let b = amplitude_encode(&e0, 16).unwrap();
        assert_eq!(b.row(0), Statevector::basis(4, 0).unwrap());

        let b = amplitude_encode(&[1.0; 16], 16).unwrap();
        for i in 0..16 {
            assert_abs_diff_eq!(b.amplitude(0, i).re, 0.25, epsilon = 1e-15);
            assert_eq!(b.amplitude(0, i).im, 0.0);
        }

        let mut v = [0.0; 16];
        v[0] = 3.0;
        v[1] = 4.0;
        let b = amplitude_encode(&v, 16).unwrap();
        assert_abs_diff_eq!(b.amplitude(0, 0).re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(b.amplitude(0, 1).re, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn zero_row_is_an_error() {
        let mut v = vec![1.0; 32];
        v[16..].fill(0.0);
        assert_eq!(
            amplitude_encode(&v, 16),
            Err(Error::ZeroEncodingRow { row: 1 })
        );
    }

    #[test]
    fn statevector_checks_norm_and_length() {
        let half = Complex64::new(0.5, 0.0);
        assert!(matches!(
            Statevector::new(vec![half; 2]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Statevector::new(vec![half; 3]),
            Err(Error::Shape(_))
        ));
        assert!(Statevector::new(vec![half; 4]).is_ok());
    }

    #[test]
    fn batch_round_trips_rows() {
        let a = Statevector::basis(3, 5).unwrap();
        let b = Statevector::basis(3, 2).unwrap();
        let batch = StateBatch::from_statevectors(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(batch.to_statevectors(), vec![a, b]);
    }
}
