//! Labelled W-like 8-qubit states.
//!
//! Each of the eight generator families prepares an exact W-like state with
//! a family-specific amplitude profile, then runs a shallow 8-qubit circuit
//! whose small angles are drawn per sample around family means. The circuit
//! pushes a little probability off the single-excitation manifold; samples
//! whose success probability drops below [`SUCCESS_FLOOR`] are redrawn.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::rng::{self, Rng};
use crate::simcore::{run_circuit, Angle, Circuit, GateKind, GateOp, StateBatch, Statevector};
use crate::{Error, Result};

pub const DATA_QUBITS: usize = 8;
pub const CLASSES: usize = 8;
pub const SUCCESS_FLOOR: f64 = 0.95;
/// Draws per sample before generation gives up on a family.
pub const RETRY_BUDGET: usize = 100;

/// Basis index of the single excitation on qubit `i`.
pub fn w_index(i: usize) -> usize {
    1 << (DATA_QUBITS - 1 - i)
}

/// Normalized coefficients `α_1..α_8` of a W-like state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WAmplitudes([Complex64; 8]);

impl WAmplitudes {
    pub fn new(alpha: [Complex64; 8]) -> Result<WAmplitudes> {
        let n: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(Error::NotNormalized(n));
        }
        Ok(WAmplitudes(alpha))
    }

    /// Normalizes `alpha` first.
    pub fn normalized(alpha: [Complex64; 8]) -> Result<WAmplitudes> {
        let n = libm::sqrt(alpha.iter().map(|a| a.norm_sqr()).sum::<f64>());
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        WAmplitudes::new(alpha.map(|a| a / n))
    }

    pub fn symmetric() -> WAmplitudes {
        WAmplitudes([Complex64::new(libm::sqrt(0.125), 0.0); 8])
    }

    pub fn coefficients(&self) -> &[Complex64; 8] {
        &self.0
    }
}

/// `Σ_i α_i |e_i⟩` on 8 qubits.
pub fn prepare_w_like(alpha: &WAmplitudes) -> Statevector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << DATA_QUBITS];
    for (i, a) in alpha.0.iter().enumerate() {
        amps[w_index(i)] = *a;
    }
    Statevector::new(amps).expect("normalized coefficients give a unit state")
}

/// Probability mass on the eight single-excitation basis states.
pub fn success_probability(state: &Statevector) -> f64 {
    let amps = state.amplitudes();
    if amps.len() != 1 << DATA_QUBITS {
        return 0.0;
    }
    (0..DATA_QUBITS).map(|i| amps[w_index(i)].norm_sqr()).sum()
}

/// One class of generated states.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFamily {
    pub class_id: u8,
    /// Mean `|α_i|` profile (normalized on use).
    pub magnitude: [f64; 8],
    /// Mean `arg α_i`.
    pub phase: [f64; 8],
    /// Relative per-sample jitter of each magnitude.
    pub magnitude_spread: f64,
    /// Per-sample jitter of each phase, radians.
    pub phase_spread: f64,
    /// 8-qubit circuit applied after preparation.
    pub template: Circuit,
    pub slot_mean: Vec<f64>,
    pub slot_spread: Vec<f64>,
}

struct FamilySpec {
    magnitude: [f64; 8],
    phase: [f64; 8],
    tilt: f64,
    kind: GateKind,
    couplings: &'static [(usize, usize)],
    coupling: f64,
}

const RING: [(usize, usize); 8] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 0),
];
const CROSS: [(usize, usize); 4] = [(0, 4), (1, 5), (2, 6), (3, 7)];
const LADDER: [(usize, usize); 4] = [(0, 2), (2, 4), (4, 6), (6, 0)];
const MIRROR: [(usize, usize); 4] = [(0, 7), (1, 6), (2, 5), (3, 4)];

/// Magnitude profiles shared by each pair of families `2k`, `2k + 1`.
fn profiles() -> [[f64; 8]; 4] {
    let r = |v: f64| libm::sqrt(v);
    [
        [1.0; 8],
        [
            r(1.0),
            r(2.0),
            r(3.0),
            r(4.0),
            r(5.0),
            r(6.0),
            r(7.0),
            r(8.0),
        ],
        [
            r(1.0),
            r(2.0),
            r(3.0),
            r(4.0),
            r(4.0),
            r(3.0),
            r(2.0),
            r(1.0),
        ],
        [r(2.0), 1.0, r(2.0), 1.0, r(2.0), 1.0, r(2.0), 1.0],
    ]
}

const ALTERNATING: [f64; 8] = [0.0, PI, 0.0, PI, 0.0, PI, 0.0, PI];

/// Pairs share a magnitude profile and an entangling layout; within a pair
/// the second family flips the sign of every other coefficient, which only
/// shows up through the off-manifold admixture.
fn specs() -> [FamilySpec; CLASSES] {
    let layouts: [(GateKind, &'static [(usize, usize)], f64, f64); 4] = [
        (GateKind::Cry, &RING, 0.04, 0.2),
        (GateKind::Crx, &CROSS, 0.06, 0.3),
        (GateKind::Cry, &LADDER, 0.05, 0.3),
        (GateKind::Crz, &MIRROR, 0.06, 0.6),
    ];
    core::array::from_fn(|class| {
        let (kind, couplings, tilt, coupling) = layouts[class / 2];
        FamilySpec {
            magnitude: profiles()[class / 2],
            phase: if class % 2 == 0 {
                [0.0; 8]
            } else {
                ALTERNATING
            },
            tilt,
            kind,
            couplings,
            coupling,
        }
    })
}

const TILT_SPREAD: f64 = 0.01;
const COUPLING_SPREAD: f64 = 0.05;

impl GeneratorFamily {
    /// The eight stand-in generator families, labels `0..8`.
    pub fn standard() -> Vec<GeneratorFamily> {
        specs()
            .into_iter()
            .enumerate()
            .map(|(class, spec)| {
                let mut ops = Vec::new();
                let mut slot_mean = Vec::new();
                let mut slot_spread = Vec::new();
                for q in 0..DATA_QUBITS {
                    ops.push(GateOp::ry(q, Angle::Slot(slot_mean.len())));
                    slot_mean.push(spec.tilt);
                    slot_spread.push(TILT_SPREAD);
                }
                for &(c, t) in spec.couplings {
                    let op = GateOp::new(spec.kind, &[c, t], Some(Angle::Slot(slot_mean.len())))
                        .expect("coupling pairs are distinct");
                    ops.push(op);
                    slot_mean.push(spec.coupling);
                    slot_spread.push(COUPLING_SPREAD);
                }
                GeneratorFamily {
                    class_id: class as u8,
                    magnitude: spec.magnitude,
                    phase: spec.phase,
                    magnitude_spread: 0.08,
                    phase_spread: 0.1,
                    template: Circuit::new(DATA_QUBITS, ops)
                        .expect("template slots are contiguous"),
                    slot_mean,
                    slot_spread,
                }
            })
            .collect()
    }

    /// Draws coefficients around the family profile.
    pub fn draw_alpha(&self, rng: &mut Rng) -> Result<WAmplitudes> {
        let mut alpha = [Complex64::new(0.0, 0.0); 8];
        for (i, a) in alpha.iter_mut().enumerate() {
            let g: f64 = StandardNormal.sample(rng);
            let h: f64 = StandardNormal.sample(rng);
            let m = (self.magnitude[i] * (1.0 + self.magnitude_spread * g)).abs();
            *a = Complex64::from_polar(m, self.phase[i] + self.phase_spread * h);
        }
        WAmplitudes::normalized(alpha)
    }

    /// One candidate state (no success-probability check).
    pub fn draw(&self, rng: &mut Rng) -> Result<Statevector> {
        let alpha = self.draw_alpha(rng)?;
        let params = self
            .slot_mean
            .iter()
            .zip(&self.slot_spread)
            .map(|(&m, &s)| {
                Normal::new(m, s)
                    .map(|d| d.sample(rng))
                    .map_err(|_| Error::Config(format!("invalid spread {s}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut batch = StateBatch::from_statevectors(&[prepare_w_like(&alpha)])?;
        run_circuit(&mut batch, &self.template, &params)?;
        Ok(batch.row(0))
    }

    /// Draws until the success floor holds, at most [`RETRY_BUDGET`] times.
    pub fn sample(&self, rng: &mut Rng) -> Result<Statevector> {
        for _ in 0..RETRY_BUDGET {
            let s = self.draw(rng)?;
            if success_probability(&s) >= SUCCESS_FLOOR {
                return Ok(s);
            }
        }
        Err(Error::Generation {
            family: self.class_id as usize,
            retries: RETRY_BUDGET,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: Statevector,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Generation seed, when known.
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> [usize; CLASSES] {
        let mut counts = [0; CLASSES];
        for s in &self.samples {
            if let Some(c) = counts.get_mut(s.label as usize) {
                *c += 1;
            }
        }
        counts
    }

    /// Per-class minimum success probability (`None` for empty classes).
    pub fn min_success_by_class(&self) -> [Option<f64>; CLASSES] {
        let mut out = [None; CLASSES];
        for s in &self.samples {
            if let Some(slot) = out.get_mut(s.label as usize) {
                let p = success_probability(&s.state);
                *slot = Some(slot.map_or(p, |m: f64| m.min(p)));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.samples {
            if s.label as usize >= CLASSES {
                return Err(Error::Label {
                    label: s.label as usize,
                    classes: CLASSES,
                });
            }
            if s.state.qubit_count() != DATA_QUBITS {
                return Err(Error::Shape(format!(
                    "sample has {} qubits",
                    s.state.qubit_count()
                )));
            }
            let n = s.state.norm_sqr();
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized(n));
            }
        }
        Ok(())
    }
}

/// `per_class` samples from each family, ordered by class then index.
/// Sample `i` of class `c` uses its own substream, so the result is a pure
/// function of `seed`.
pub fn generate_dataset(
    families: &[GeneratorFamily],
    per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::Config("per_class must be at least 1".into()));
    }
    let mut samples = Vec::with_capacity(families.len() * per_class);
    for family in families {
        if family.class_id as usize >= CLASSES {
            return Err(Error::Label {
                label: family.class_id as usize,
                classes: CLASSES,
            });
        }
        for i in 0..per_class {
            let index = family.class_id as u64 * (1 << 32) + i as u64;
            let mut rng = rng::indexed(seed, rng::stream::GENERATE, index);
            samples.push(Sample {
                state: family.sample(&mut rng)?,
                label: family.class_id,
            });
        }
    }
    Ok(Dataset {
        samples,
        seed: Some(seed),
    })
}

/// Stratified split of `labels` into (train, test) index lists. Each class
/// contributes `round(test_fraction · n_class)` test items chosen by a
/// seeded shuffle; both lists are returned in ascending order.
pub fn stratified_split(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} outside [0, 1]"
        )));
    }
    let classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut rng = rng::substream(seed, rng::stream::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i] as usize == c)
            .collect();
        idx.shuffle(&mut rng);
        let k = libm::round(test_fraction * idx.len() as f64) as usize;
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn prepare_examples() {
        let mut a = [c(0.0, 0.0); 8];
        a[0] = c(1.0, 0.0);
        let s = prepare_w_like(&WAmplitudes::new(a).unwrap());
        assert_eq!(s, Statevector::basis(8, 0b1000_0000).unwrap());

        let w = prepare_w_like(&WAmplitudes::symmetric());
        assert_abs_diff_eq!(success_probability(&w), 1.0, epsilon = 1e-15);

        let mut a = [c(0.0, 0.0); 8];
        a[7] = c(0.0, 1.0);
        let s = prepare_w_like(&WAmplitudes::new(a).unwrap());
        assert_eq!(s.amplitudes()[1], c(0.0, 1.0));
        assert_eq!(success_probability(&s), 1.0);

        assert!(matches!(
            WAmplitudes::new([c(1.0, 0.0); 8]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn success_examples() {
        assert_eq!(success_probability(&Statevector::basis(8, 0).unwrap()), 0.0);
        let mut amps = vec![c(0.0, 0.0); 256];
        amps[0] = c(libm::sqrt(0.5), 0.0);
        amps[128] = c(libm::sqrt(0.5), 0.0);
        let s = Statevector::new(amps).unwrap();
        assert_abs_diff_eq!(success_probability(&s), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dataset_is_balanced_deterministic_and_above_floor() {
        let families = GeneratorFamily::standard();
        let a = generate_dataset(&families, 3, 11).unwrap();
        let b = generate_dataset(&families, 3, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), [3; CLASSES]);
        a.validate().unwrap();
        for s in &a.samples {
            assert!(success_probability(&s.state) >= SUCCESS_FLOOR);
        }
    }

    #[test]
    fn impossible_family_reports_its_class() {
        let mut family = GeneratorFamily::standard().remove(2);
        family.slot_mean.iter_mut().for_each(|m| *m = PI / 2.0);
        assert_eq!(
            generate_dataset(&[family], 1, 0),
            Err(Error::Generation {
                family: 2,
                retries: RETRY_BUDGET
            })
        );
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<u8> = (0..80).map(|i| (i % 8) as u8).collect();
        let (train, test) = stratified_split(&labels, 0.2, 3).unwrap();
        assert_eq!(train.len(), 64);
        assert_eq!(test.len(), 16);
        for c in 0..8u8 {
            assert_eq!(test.iter().filter(|&&i| labels[i] == c).count(), 2);
        }
        assert_eq!(stratified_split(&labels, 0.2, 3).unwrap(), (train, test));
    }
}
