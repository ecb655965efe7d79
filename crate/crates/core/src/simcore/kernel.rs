//! Low-level amplitude updates on amplitude-major storage.
//!
//! Every routine walks the pairs `(i, j = i | stride)` of basis indices
//! that differ only in the target bit and streams the two row slices for
//! those amplitudes. Inner loops run over rows with no cross-row
//! dependency, which lets the compiler vectorize them.

use num_complex::Complex64;

use super::{Axis, GateKind};

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// A 2×2 unitary tagged with the cheapest update routine that applies it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Mat2 {
    Diagonal([Complex64; 2]),
    Real([[f64; 2]; 2]),
    General([[Complex64; 2]; 2]),
}

impl Mat2 {
    /// Matrix of the single-qubit part of `kind` (the target action for
    /// controlled kinds) at angle `theta`.
    pub(crate) fn for_kind(kind: GateKind, theta: f64) -> Mat2 {
        let c = libm::cos(theta / 2.0);
        let s = libm::sin(theta / 2.0);
        let z = Complex64::new(0.0, 0.0);
        match kind {
            GateKind::Rx | GateKind::Crx => Mat2::General([
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ]),
            GateKind::Ry | GateKind::Cry => Mat2::Real([[c, -s], [s, c]]),
            GateKind::Rz | GateKind::Crz => {
                Mat2::Diagonal([Complex64::new(c, -s), Complex64::new(c, s)])
            }
            // Principal square root of X: SX·SX = X.
            GateKind::Sx => Mat2::General([
                [Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5)],
                [Complex64::new(0.5, -0.5), Complex64::new(0.5, 0.5)],
            ]),
            GateKind::H => Mat2::Real([
                [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
            ]),
            GateKind::X | GateKind::Cnot => Mat2::Real([[0.0, 1.0], [1.0, 0.0]]),
            GateKind::Y => Mat2::General([
                [z, Complex64::new(0.0, -1.0)],
                [Complex64::new(0.0, 1.0), z],
            ]),
            GateKind::Z => Mat2::Real([[1.0, 0.0], [0.0, -1.0]]),
        }
    }

    pub(crate) fn adjoint(&self) -> Mat2 {
        match *self {
            Mat2::Diagonal([a, b]) => Mat2::Diagonal([a.conj(), b.conj()]),
            Mat2::Real(m) => Mat2::Real([[m[0][0], m[1][0]], [m[0][1], m[1][1]]]),
            Mat2::General(m) => Mat2::General([
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ]),
        }
    }

    /// Elementwise complex conjugate.
    pub(crate) fn conjugate(&self) -> Mat2 {
        match *self {
            Mat2::Diagonal([a, b]) => Mat2::Diagonal([a.conj(), b.conj()]),
            Mat2::Real(m) => Mat2::Real(m),
            Mat2::General(m) => Mat2::General([
                [m[0][0].conj(), m[0][1].conj()],
                [m[1][0].conj(), m[1][1].conj()],
            ]),
        }
    }

    #[cfg(test)]
    pub(crate) fn dense(&self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        match *self {
            Mat2::Diagonal([a, b]) => [[a, z], [z, b]],
            Mat2::Real(m) => [
                [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
                [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
            ],
            Mat2::General(m) => m,
        }
    }
}

/// Bit mask of `qubit` in an `n`-qubit basis index (qubit 0 is the MSB).
#[inline]
pub(crate) fn mask(qubit_count: usize, qubit: usize) -> usize {
    1 << (qubit_count - 1 - qubit)
}

/// Iterates basis indices `i` with the target bit clear (and the control
/// bit set, when given).
#[inline]
pub(crate) fn pair_indices(
    qubit_count: usize,
    target: usize,
    control: Option<usize>,
) -> impl Iterator<Item = (usize, usize)> {
    let dim = 1usize << qubit_count;
    let t = mask(qubit_count, target);
    let c = control.map(|q| mask(qubit_count, q)).unwrap_or(0);
    (0..dim)
        .filter(move |i| i & t == 0 && i & c == c)
        .map(move |i| (i, i | t))
}

/// Mutable row slices of amplitudes `i < j`.
#[inline]
fn split_pair(buf: &mut [f64], rows: usize, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    let (lo, hi) = buf.split_at_mut(j * rows);
    (&mut lo[i * rows..(i + 1) * rows], &mut hi[..rows])
}

#[inline]
fn pair_view(buf: &[f64], rows: usize, i: usize, j: usize) -> (&[f64], &[f64]) {
    (
        &buf[i * rows..(i + 1) * rows],
        &buf[j * rows..(j + 1) * rows],
    )
}

/// Applies `m` to the target qubit of every row.
pub(crate) fn apply_mat2(
    re: &mut [f64],
    im: &mut [f64],
    rows: usize,
    qubit_count: usize,
    target: usize,
    control: Option<usize>,
    m: &Mat2,
) {
    for (i, j) in pair_indices(qubit_count, target, control) {
        let (xr, yr) = split_pair(re, rows, i, j);
        let (xi, yi) = split_pair(im, rows, i, j);
        match m {
            Mat2::Diagonal([a, d]) => {
                diag(xr, xi, *a);
                diag(yr, yi, *d);
            }
            Mat2::Real(mm) => real(xr, xi, yr, yi, mm),
            Mat2::General(mm) => general(xr, xi, yr, yi, mm),
        }
    }
}

#[inline]
fn diag(xr: &mut [f64], xi: &mut [f64], a: Complex64) {
    if a.im == 0.0 && a.re == 1.0 {
        return;
    }
    let n = xr.len();
    let xi = &mut xi[..n];
    for k in 0..n {
        let (r, i) = (xr[k], xi[k]);
        xr[k] = a.re * r - a.im * i;
        xi[k] = a.re * i + a.im * r;
    }
}

#[inline]
fn real(xr: &mut [f64], xi: &mut [f64], yr: &mut [f64], yi: &mut [f64], m: &[[f64; 2]; 2]) {
    let n = xr.len();
    let (xi, yr, yi) = (&mut xi[..n], &mut yr[..n], &mut yi[..n]);
    let [[a, b], [c, d]] = *m;
    for k in 0..n {
        let (x, y) = (xr[k], yr[k]);
        xr[k] = a * x + b * y;
        yr[k] = c * x + d * y;
    }
    for k in 0..n {
        let (x, y) = (xi[k], yi[k]);
        xi[k] = a * x + b * y;
        yi[k] = c * x + d * y;
    }
}

#[inline]
fn general(
    xr: &mut [f64],
    xi: &mut [f64],
    yr: &mut [f64],
    yi: &mut [f64],
    m: &[[Complex64; 2]; 2],
) {
    let n = xr.len();
    let (xi, yr, yi) = (&mut xi[..n], &mut yr[..n], &mut yi[..n]);
    let [[a, b], [c, d]] = *m;
    for k in 0..n {
        let (pr, pi, qr, qi) = (xr[k], xi[k], yr[k], yi[k]);
        xr[k] = a.re * pr - a.im * pi + b.re * qr - b.im * qi;
        xi[k] = a.re * pi + a.im * pr + b.re * qi + b.im * qr;
        yr[k] = c.re * pr - c.im * pi + d.re * qr - d.im * qi;
        yi[k] = c.re * pi + c.im * pr + d.re * qi + d.im * qr;
    }
}

/// Applies Pauli `axis` on `qubit` to a single row.
pub(crate) fn apply_pauli_row(
    re: &mut [f64],
    im: &mut [f64],
    rows: usize,
    qubit_count: usize,
    qubit: usize,
    axis: Axis,
    row: usize,
) {
    for (i, j) in pair_indices(qubit_count, qubit, None) {
        let (a, b) = (i * rows + row, j * rows + row);
        match axis {
            Axis::X => {
                re.swap(a, b);
                im.swap(a, b);
            }
            Axis::Y => {
                // (ψ_i, ψ_j) → (−i ψ_j, i ψ_i)
                let (ir, ii, jr, ji) = (re[a], im[a], re[b], im[b]);
                re[a] = ji;
                im[a] = -jr;
                re[b] = -ii;
                im[b] = ir;
            }
            Axis::Z => {
                re[b] = -re[b];
                im[b] = -im[b];
            }
        }
    }
}

/// `⟨P_qubit⟩` for every row, written into `out`.
pub(crate) fn expectation_rows(
    re: &[f64],
    im: &[f64],
    rows: usize,
    qubit_count: usize,
    qubit: usize,
    axis: Axis,
    out: &mut [f64],
) {
    let out = &mut out[..rows];
    out.fill(0.0);
    for (i, j) in pair_indices(qubit_count, qubit, None) {
        let (xr, yr) = pair_view(re, rows, i, j);
        let (xi, yi) = pair_view(im, rows, i, j);
        match axis {
            Axis::Z => {
                for k in 0..rows {
                    out[k] += xr[k] * xr[k] + xi[k] * xi[k] - yr[k] * yr[k] - yi[k] * yi[k];
                }
            }
            Axis::X => {
                for k in 0..rows {
                    out[k] += 2.0 * (xr[k] * yr[k] + xi[k] * yi[k]);
                }
            }
            Axis::Y => {
                for k in 0..rows {
                    out[k] += 2.0 * (xr[k] * yi[k] - xi[k] * yr[k]);
                }
            }
        }
    }
}

/// `λ += w ⊙ (P_qubit ψ)` row-wise.
#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate_pauli(
    psi_re: &[f64],
    psi_im: &[f64],
    lam_re: &mut [f64],
    lam_im: &mut [f64],
    rows: usize,
    qubit_count: usize,
    qubit: usize,
    axis: Axis,
    weights: &[f64],
) {
    let w = &weights[..rows];
    for (i, j) in pair_indices(qubit_count, qubit, None) {
        let (pr_i, pr_j) = pair_view(psi_re, rows, i, j);
        let (pi_i, pi_j) = pair_view(psi_im, rows, i, j);
        let (lr_i, lr_j) = split_pair(lam_re, rows, i, j);
        let (li_i, li_j) = split_pair(lam_im, rows, i, j);
        match axis {
            Axis::Z => {
                for k in 0..rows {
                    lr_i[k] += w[k] * pr_i[k];
                    li_i[k] += w[k] * pi_i[k];
                    lr_j[k] -= w[k] * pr_j[k];
                    li_j[k] -= w[k] * pi_j[k];
                }
            }
            Axis::X => {
                for k in 0..rows {
                    lr_i[k] += w[k] * pr_j[k];
                    li_i[k] += w[k] * pi_j[k];
                    lr_j[k] += w[k] * pr_i[k];
                    li_j[k] += w[k] * pi_i[k];
                }
            }
            Axis::Y => {
                // (Yψ)_i = −i ψ_j, (Yψ)_j = i ψ_i
                for k in 0..rows {
                    lr_i[k] += w[k] * pi_j[k];
                    li_i[k] -= w[k] * pr_j[k];
                    lr_j[k] -= w[k] * pi_i[k];
                    li_j[k] += w[k] * pr_i[k];
                }
            }
        }
    }
}

/// Adds `Im⟨λ_r| G |ψ_r⟩` for every row into `acc`, where `G` is Pauli
/// `axis` on `target`, restricted to the control-set subspace if given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn generator_overlap(
    psi_re: &[f64],
    psi_im: &[f64],
    lam_re: &[f64],
    lam_im: &[f64],
    rows: usize,
    qubit_count: usize,
    target: usize,
    control: Option<usize>,
    axis: Axis,
    acc: &mut [f64],
) {
    let acc = &mut acc[..rows];
    for (i, j) in pair_indices(qubit_count, target, control) {
        let (pr_i, pr_j) = pair_view(psi_re, rows, i, j);
        let (pi_i, pi_j) = pair_view(psi_im, rows, i, j);
        let (lr_i, lr_j) = pair_view(lam_re, rows, i, j);
        let (li_i, li_j) = pair_view(lam_im, rows, i, j);
        match axis {
            Axis::Z => {
                for k in 0..rows {
                    acc[k] += lr_i[k] * pi_i[k]
                        - li_i[k] * pr_i[k]
                        - (lr_j[k] * pi_j[k] - li_j[k] * pr_j[k]);
                }
            }
            Axis::X => {
                for k in 0..rows {
                    acc[k] += lr_i[k] * pi_j[k] - li_i[k] * pr_j[k] + lr_j[k] * pi_i[k]
                        - li_j[k] * pr_i[k];
                }
            }
            Axis::Y => {
                for k in 0..rows {
                    acc[k] += -(lr_i[k] * pr_j[k] + li_i[k] * pi_j[k])
                        + (lr_j[k] * pr_i[k] + li_j[k] * pi_i[k]);
                }
            }
        }
    }
}

/// Sum with a fixed association order, independent of how the caller
/// produced the slice.
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks = values.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        lanes[0] += c[0];
        lanes[1] += c[1];
        lanes[2] += c[2];
        lanes[3] += c[3];
    }
    let mut total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for v in rest {
        total += v;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        out
    }

    #[test]
    fn sx_squares_to_x() {
        let sx = Mat2::for_kind(GateKind::Sx, 0.0).dense();
        let x = Mat2::for_kind(GateKind::X, 0.0).dense();
        let sq = mul(sx, sx);
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(sq[r][c], x[r][c]);
            }
        }
    }

    #[test]
    fn adjoint_inverts_every_kind() {
        for kind in GateKind::ALL {
            let m = Mat2::for_kind(kind, 0.731);
            let p = mul(m.adjoint().dense(), m.dense());
            for r in 0..2 {
                for c in 0..2 {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (p[r][c] - Complex64::new(want, 0.0)).norm() < 1e-15,
                        "{kind:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn ordered_sum_matches_naive_on_integers() {
        let v: alloc::vec::Vec<f64> = (0..37).map(|x| x as f64).collect();
        assert_eq!(ordered_sum(&v), 666.0);
    }
}
