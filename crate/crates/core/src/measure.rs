//! Measurement strategies over the kernel output.
//!
//! * `PauliZ` reads `⟨Z⟩` on every qubit.
//! * `SMub` reads all three mutually unbiased single-qubit bases and
//!   averages them per qubit.
//! * `AMub` reads one basis per optimizer step, cycling Z → X → Y; at
//!   inference it uses the three-basis mean, which keeps the feature width
//!   and matches what the head saw across training.
//!
//! Finite shots use the Gaussian approximation
//! `μ̂ ~ N(μ, (1 − μ²)/S)` clamped to `[−1, 1]`; symmetric readout flips
//! with probability `p` scale the mean to `(1 − 2p)μ`.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::noise::check_probability;
use crate::rng::Rng;
use crate::simcore::{kernel, Axis, StateBatch};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    PauliZ,
    SMub,
    AMub,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::PauliZ, Strategy::SMub, Strategy::AMub];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::PauliZ => "pauli-z",
            Strategy::SMub => "s-mub",
            Strategy::AMub => "a-mub",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
    }
}

/// Shot budget per expectation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Exact expectations (infinite-shot limit).
    Analytic,
    Finite(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    pub strategy: Strategy,
    pub shots: Shots,
    /// Readout bit-flip probability.
    pub p_measure: f64,
    pub rng_seed: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            strategy: Strategy::AMub,
            shots: Shots::Analytic,
            p_measure: 0.0,
            rng_seed: 0,
        }
    }
}

impl MeasureConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability(self.p_measure)?;
        if self.shots == Shots::Finite(0) {
            return Err(Error::ZeroShots);
        }
        Ok(())
    }

    /// Whether features carry randomness (and so consume draws).
    pub fn is_stochastic(&self) -> bool {
        matches!(self.shots, Shots::Finite(_))
    }
}

/// Alternating-basis schedule: `axis(t) = [Z, X, Y][t mod 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MubSchedule {
    step: u64,
}

impl MubSchedule {
    pub const ORDER: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

    pub fn at(step: u64) -> MubSchedule {
        MubSchedule { step }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn axis(&self) -> Axis {
        Self::ORDER[(self.step % 3) as usize]
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// Whether features are produced for a training step or for inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Training(MubSchedule),
    Inference,
}

/// Bases averaged into each feature.
pub fn axes(strategy: Strategy, phase: Phase) -> &'static [Axis] {
    const Z: [Axis; 1] = [Axis::Z];
    const X: [Axis; 1] = [Axis::X];
    const Y: [Axis; 1] = [Axis::Y];
    const MUB: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];
    match (strategy, phase) {
        (Strategy::PauliZ, _) => &Z,
        (Strategy::SMub, _) | (Strategy::AMub, Phase::Inference) => &MUB,
        (Strategy::AMub, Phase::Training(s)) => match s.axis() {
            Axis::Z => &Z,
            Axis::X => &X,
            Axis::Y => &Y,
        },
    }
}

/// Finite-shot estimate of an expectation `mu`.
pub fn estimate_expectation(mu: f64, shots: Shots, rng: &mut Rng) -> Result<f64> {
    if !(mu.abs() <= 1.0 + 1e-9) {
        return Err(Error::Config(alloc::format!(
            "expectation {mu} outside [-1, 1]"
        )));
    }
    let mu = mu.clamp(-1.0, 1.0);
    match shots {
        Shots::Analytic => Ok(mu),
        Shots::Finite(0) => Err(Error::ZeroShots),
        Shots::Finite(s) => {
            let z: f64 = StandardNormal.sample(rng);
            let sd = libm::sqrt((1.0 - mu * mu) / s as f64);
            Ok((mu + sd * z).clamp(-1.0, 1.0))
        }
    }
}

/// Readout bit flips with probability `p` on an ideal expectation `mu`.
///
/// Analytic: `(1 − 2p)·mu`. Finite shots: the flips are folded into the
/// shot estimate, whose mean becomes `(1 − 2p)·mu` and variance
/// `(1 − ((1 − 2p)mu)²)/S`.
pub fn apply_readout_noise(mu: f64, p: f64, shots: Shots, rng: &mut Rng) -> Result<f64> {
    check_probability(p)?;
    estimate_expectation((1.0 - 2.0 * p) * mu, shots, rng)
}

/// Per-qubit features for every row (row-major `rows × qubits`).
///
/// Returns the features and the scale `∂feature/∂⟨P⟩` shared by every
/// averaged expectation, used by the backward pass.
pub fn measure_features(
    batch: &StateBatch,
    cfg: &MeasureConfig,
    phase: Phase,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    cfg.validate()?;
    let axes = axes(cfg.strategy, phase);
    let raw = raw_expectations(batch, axes);
    let features = observe(&raw, axes.len(), cfg, rng)?;
    Ok((features, feature_scale(cfg, axes.len())))
}

pub(crate) fn feature_scale(cfg: &MeasureConfig, axis_count: usize) -> f64 {
    (1.0 - 2.0 * cfg.p_measure) / axis_count as f64
}

/// Exact expectations laid out `[row][qubit][axis]`.
pub(crate) fn raw_expectations(batch: &StateBatch, axes: &[Axis]) -> Vec<f64> {
    let (n, rows) = (batch.qubit_count(), batch.rows());
    let (re, im) = batch.parts();
    let mut column = vec![0.0; rows];
    let mut out = vec![0.0; rows * n * axes.len()];
    for (a, &axis) in axes.iter().enumerate() {
        for q in 0..n {
            kernel::expectation_rows(re, im, rows, n, q, axis, &mut column);
            for (r, &v) in column.iter().enumerate() {
                out[(r * n + q) * axes.len() + a] = v;
            }
        }
    }
    out
}

/// Applies shot and readout noise to `[row][qubit][axis]` expectations and
/// averages over axes. Draws are consumed in storage order.
pub(crate) fn observe(
    raw: &[f64],
    axis_count: usize,
    cfg: &MeasureConfig,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    raw.chunks_exact(axis_count)
        .map(|per_axis| {
            let mut sum = 0.0;
            for &mu in per_axis {
                sum += apply_readout_noise(mu.clamp(-1.0, 1.0), cfg.p_measure, cfg.shots, rng)?;
            }
            Ok(sum / axis_count as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::simcore::{apply_gate, Angle, GateOp};

    const ANALYTIC: MeasureConfig = MeasureConfig {
        strategy: Strategy::PauliZ,
        shots: Shots::Analytic,
        p_measure: 0.0,
        rng_seed: 0,
    };

    #[test]
    fn schedule_cycles_z_x_y() {
        let mut s = MubSchedule::default();
        let mut seen = Vec::new();
        for _ in 0..6 {
            seen.push(s.axis());
            s.advance();
        }
        assert_eq!(
            seen,
            vec![Axis::Z, Axis::X, Axis::Y, Axis::Z, Axis::X, Axis::Y]
        );
    }

    #[test]
    fn estimate_examples() {
        let mut rng = substream(0, 0);
        assert_eq!(
            estimate_expectation(1.0, Shots::Finite(10), &mut rng).unwrap(),
            1.0
        );
        assert_eq!(
            estimate_expectation(0.3, Shots::Analytic, &mut rng).unwrap(),
            0.3
        );
        assert_eq!(
            estimate_expectation(0.3, Shots::Finite(0), &mut rng),
            Err(Error::ZeroShots)
        );
    }

    #[test]
    fn shot_noise_std_at_zero_mean() {
        let mut rng = substream(1, 0);
        let n = 40_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| estimate_expectation(0.0, Shots::Finite(100), &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        // sd 0.1; the standard error of the sample sd is ≈ 0.1/√(2n).
        assert!((libm::sqrt(var) - 0.1).abs() < 3.0 * 0.1 / libm::sqrt(2.0 * n as f64) + 1e-4);
    }

    #[test]
    fn readout_examples() {
        let mut rng = substream(0, 0);
        assert_eq!(
            apply_readout_noise(0.8, 0.0, Shots::Analytic, &mut rng).unwrap(),
            0.8
        );
        assert_eq!(
            apply_readout_noise(0.8, 0.5, Shots::Analytic, &mut rng).unwrap(),
            0.0
        );
        assert!(
            (apply_readout_noise(0.8, 0.25, Shots::Analytic, &mut rng).unwrap() - 0.4).abs()
                < 1e-15
        );
        assert!(apply_readout_noise(0.8, -0.1, Shots::Analytic, &mut rng).is_err());
    }

    #[test]
    fn feature_examples() {
        let mut rng = substream(0, 0);
        let zero = StateBatch::basis(4, 1, 0).unwrap();
        let (f, _) = measure_features(&zero, &ANALYTIC, Phase::Inference, &mut rng).unwrap();
        assert_eq!(f, vec![1.0; 4]);
        let smub = MeasureConfig {
            strategy: Strategy::SMub,
            ..ANALYTIC
        };
        let (f, scale) = measure_features(&zero, &smub, Phase::Inference, &mut rng).unwrap();
        for v in f {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((scale - 1.0 / 3.0).abs() < 1e-15);

        // |+⟩ ⊗ |0⟩ ⊗ |R⟩ ⊗ |1⟩ measured on the X step of A-MUB.
        let mut s = StateBatch::basis(4, 1, 0b0001).unwrap();
        apply_gate(&mut s, &GateOp::h(0), &[]).unwrap();
        apply_gate(
            &mut s,
            &GateOp::rx(2, Angle::Fixed(-core::f64::consts::FRAC_PI_2)),
            &[],
        )
        .unwrap();
        let amub = MeasureConfig {
            strategy: Strategy::AMub,
            ..ANALYTIC
        };
        let (f, _) =
            measure_features(&s, &amub, Phase::Training(MubSchedule::at(1)), &mut rng).unwrap();
        let want = [1.0, 0.0, 0.0, 0.0];
        for (v, w) in f.iter().zip(want) {
            assert!((v - w).abs() < 1e-15, "{f:?}");
        }
    }

    #[test]
    fn strategy_names_parse() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::parse(s.name()), Some(s));
        }
        assert_eq!(Strategy::parse("A-MUB"), Some(Strategy::AMub));
        assert_eq!(Strategy::parse("bogus"), None);
    }
}
