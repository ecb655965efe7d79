//! Multi-seed training, noise sweeps and the MNIST subset.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context};
use paraquannet_core::datagen::{generate_dataset, Dataset, GeneratorFamily};
use paraquannet_core::ingest::{to_model_grid, IdxImageSet};
use paraquannet_core::model::{
    evaluate, split_grids, train_grids, EpochMetrics, Evaluation, GridSet, ModelState, Pipeline,
    TrainConfig, TrainOutcome,
};
use paraquannet_core::rng::{indexed, stream};
use paraquannet_core::{Shots, Strategy};

use crate::config::ExperimentConfig;
use crate::formats::{find_idx, load_dataset, load_idx_pair};
use crate::metrics::{mean_std, MetricsRow, SweepRow};

/// Seed of the generated dataset when no file is given.
pub const DATASET_SEED: u64 = 0;

/// The configured dataset file, or a freshly generated standard dataset.
pub fn dataset_for(cfg: &ExperimentConfig) -> anyhow::Result<Dataset> {
    match &cfg.data {
        Some(path) => load_dataset(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(generate_dataset(
            &GeneratorFamily::standard(),
            cfg.per_class,
            DATASET_SEED,
        )?),
    }
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub outcome: TrainOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(runs: &[SeedRun]) -> Summary {
    let acc: Vec<f64> = runs.iter().map(|r| r.outcome.evaluation.accuracy).collect();
    let (mean, std) = mean_std(&acc);
    Summary { mean, std }
}

pub fn metrics_rows(runs: &[SeedRun], strategy: Strategy) -> Vec<MetricsRow> {
    runs.iter()
        .flat_map(|r| {
            r.outcome.metrics.iter().map(move |m| MetricsRow {
                epoch: m.epoch,
                seed: r.seed,
                strategy: strategy.name().to_string(),
                train_loss: m.train_loss,
                test_accuracy: m.test_accuracy,
            })
        })
        .collect()
}

/// Trains one model per configured seed.
pub fn train_seeds(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    on_epoch: &mut dyn FnMut(u64, &EpochMetrics),
) -> anyhow::Result<Vec<SeedRun>> {
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let tc = cfg.for_seed(seed);
        let (train_set, test_set) = split_grids(dataset, &tc)?;
        let outcome = train_grids(
            ModelState::standard(seed),
            &train_set,
            &test_set,
            &tc,
            &mut |m| on_epoch(seed, m),
        )
        .with_context(|| format!("seed {seed}"))?;
        runs.push(SeedRun { seed, outcome });
    }
    Ok(runs)
}

/// Same as `train_seeds` on prepared grids.
pub fn train_grid_seeds(
    train_set: &GridSet,
    test_set: &GridSet,
    cfg: &ExperimentConfig,
    on_epoch: &mut dyn FnMut(u64, &EpochMetrics),
) -> anyhow::Result<Vec<SeedRun>> {
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let tc = cfg.for_seed(seed);
        let outcome = train_grids(
            ModelState::standard(seed),
            train_set,
            test_set,
            &tc,
            &mut |m| on_epoch(seed, m),
        )
        .with_context(|| format!("seed {seed}"))?;
        runs.push(SeedRun { seed, outcome });
    }
    Ok(runs)
}

/// Evaluates `model` on the test side of the seed's split under the
/// inference settings in `tc`.
pub fn evaluate_on_split(
    model: &ModelState,
    dataset: &Dataset,
    tc: &TrainConfig,
) -> anyhow::Result<Evaluation> {
    let (_, test_set) = split_grids(dataset, tc)?;
    evaluate_set(model, &test_set, tc)
}

pub fn evaluate_set(
    model: &ModelState,
    set: &GridSet,
    tc: &TrainConfig,
) -> anyhow::Result<Evaluation> {
    let pipeline = Pipeline::inference(tc.measure, tc.noise);
    let mut rng = indexed(tc.seed, stream::EVAL, 0);
    Ok(evaluate(model, set, &pipeline, &mut rng)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Data `R_x` angle in radians; retrains per level.
    RxTheta,
    /// Data depolarizing probability; retrains per level.
    Depol,
    /// Two-qubit gate depolarizing probability.
    Gate2q,
    /// `gate_2q_p = level` together with `gate_1q_theta = level·π`.
    GateBoth,
    /// Shots per expectation; infinity means analytic.
    Shots,
    /// Readout bit-flip probability.
    Readout,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::RxTheta,
        SweepAxis::Depol,
        SweepAxis::Gate2q,
        SweepAxis::GateBoth,
        SweepAxis::Shots,
        SweepAxis::Readout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::RxTheta => "rx-theta",
            SweepAxis::Depol => "depol",
            SweepAxis::Gate2q => "gate-2q",
            SweepAxis::GateBoth => "gate-both",
            SweepAxis::Shots => "shots",
            SweepAxis::Readout => "readout",
        }
    }

    pub fn parse(s: &str) -> anyhow::Result<SweepAxis> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .with_context(|| {
                let names: Vec<&str> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
                format!(
                    "unknown sweep axis {s:?} (expected one of {})",
                    names.join(", ")
                )
            })
    }

    /// Data axes change the training data, so every level retrains.
    pub fn retrains(self) -> bool {
        matches!(self, SweepAxis::RxTheta | SweepAxis::Depol)
    }

    pub fn default_levels(self) -> Vec<f64> {
        match self {
            SweepAxis::RxTheta => [0.0, 0.05, 0.1, 0.15, 0.2, 0.3]
                .iter()
                .map(|f| f * PI)
                .collect(),
            SweepAxis::Depol => vec![0.0, 0.01, 0.02, 0.05, 0.1],
            SweepAxis::Gate2q | SweepAxis::GateBoth => vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            SweepAxis::Shots => vec![16.0, 64.0, 256.0, 1024.0, f64::INFINITY],
            SweepAxis::Readout => vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }

    /// Writes `level` into the relevant fields of `tc`.
    pub fn apply(self, level: f64, tc: &mut TrainConfig) -> anyhow::Result<()> {
        match self {
            SweepAxis::RxTheta => tc.noise.data_rx_theta = level,
            SweepAxis::Depol => tc.noise.data_depol_p = level,
            SweepAxis::Gate2q => tc.noise.gate_2q_p = level,
            SweepAxis::GateBoth => {
                tc.noise.gate_2q_p = level;
                tc.noise.gate_1q_theta = level * PI;
            }
            SweepAxis::Shots => {
                tc.measure.shots = if level.is_infinite() {
                    Shots::Analytic
                } else if level >= 1.0 && level.fract() == 0.0 && level <= u32::MAX as f64 {
                    Shots::Finite(level as u32)
                } else {
                    bail!("shot level {level} is not a positive integer or inf")
                }
            }
            SweepAxis::Readout => tc.measure.p_measure = level,
        }
        tc.validate()?;
        Ok(())
    }
}

/// Parses a comma-separated level list; `inf` and `analytic` mean infinity
/// and values may carry a `pi` suffix (`0.1pi`).
pub fn parse_levels(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            if t.eq_ignore_ascii_case("analytic") || t.eq_ignore_ascii_case("inf") {
                return Ok(f64::INFINITY);
            }
            let (num, scale) = match t.strip_suffix("pi") {
                Some(n) => (n.trim(), PI),
                None => (t, 1.0),
            };
            let v: f64 = if num.is_empty() {
                1.0
            } else {
                num.parse().with_context(|| format!("bad level {t:?}"))?
            };
            Ok(v * scale)
        })
        .collect()
}

/// Runs a sweep for every strategy, seed and level. Data axes retrain at
/// each level; other axes evaluate the model trained at `cfg`'s settings.
/// Rows come out ordered by level, then strategy, then seed.
pub fn sweep(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    levels: &[f64],
    strategies: &[Strategy],
    log: &mut dyn FnMut(&SweepRow),
) -> anyhow::Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut fixed: Vec<Vec<ModelState>> = Vec::new();
    if !axis.retrains() {
        for &strategy in strategies {
            let mut c = cfg.clone();
            c.train.measure.strategy = strategy;
            let runs = train_seeds(dataset, &c, &mut |_, _| {})?;
            fixed.push(runs.into_iter().map(|r| r.outcome.model).collect());
        }
    }
    for &level in levels {
        for (si, &strategy) in strategies.iter().enumerate() {
            for (k, &seed) in cfg.seeds.iter().enumerate() {
                let mut tc = cfg.for_seed(seed);
                tc.measure.strategy = strategy;
                axis.apply(level, &mut tc)?;
                let accuracy = if axis.retrains() {
                    let (train_set, test_set) = split_grids(dataset, &tc)?;
                    let out = train_grids(
                        ModelState::standard(seed),
                        &train_set,
                        &test_set,
                        &tc,
                        &mut |_| {},
                    )?;
                    out.evaluation.accuracy
                } else {
                    evaluate_on_split(&fixed[si][k], dataset, &tc)?.accuracy
                };
                let row = SweepRow {
                    axis: axis.name().into(),
                    level,
                    seed,
                    strategy: strategy.name().into(),
                    accuracy,
                };
                log(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Class ids and per-class sizes of the MNIST subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistSubset {
    pub classes: Vec<u8>,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

impl Default for MnistSubset {
    fn default() -> Self {
        MnistSubset {
            classes: vec![0, 1, 2, 3],
            train_per_class: 1000,
            test_per_class: 250,
        }
    }
}

/// First `per_class` images of each requested digit in file order, as model
/// grids, relabelled to the position of the digit in `classes`.
pub fn select_grids(
    set: &IdxImageSet,
    classes: &[u8],
    per_class: usize,
) -> anyhow::Result<GridSet> {
    let mut taken = vec![0usize; classes.len()];
    let mut picked: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, digit) in set.labels.iter().enumerate() {
        if let Some(c) = classes.iter().position(|d| d == digit) {
            if taken[c] < per_class {
                taken[c] += 1;
                picked[c].push(i);
            }
        }
    }
    if let Some(c) = taken.iter().position(|&t| t < per_class) {
        bail!(
            "only {} images of digit {} (need {per_class})",
            taken[c],
            classes[c]
        );
    }
    let mut out = GridSet::default();
    for (c, idx) in picked.iter().enumerate() {
        for &i in idx {
            let img = set.images.image(i);
            out.push(
                &to_model_grid(img, set.images.height, set.images.width)?,
                c as u8,
            );
        }
    }
    Ok(out)
}

/// Loads the train and test subsets from the standard MNIST file names in
/// `dir`, gzip-compressed or not.
pub fn load_mnist(dir: &Path, subset: &MnistSubset) -> anyhow::Result<(GridSet, GridSet)> {
    let pair = |img: &str, lbl: &str| -> anyhow::Result<IdxImageSet> {
        Ok(load_idx_pair(&find_idx(dir, img)?, &find_idx(dir, lbl)?)?)
    };
    let train = pair("train-images-idx3-ubyte", "train-labels-idx1-ubyte")?;
    let test = pair("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?;
    Ok((
        select_grids(&train, &subset.classes, subset.train_per_class)?,
        select_grids(&test, &subset.classes, subset.test_per_class)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use paraquannet_core::ingest::IdxImages;

    #[test]
    fn level_parsing() {
        let l = parse_levels("0, 0.1pi, pi, analytic, 64").unwrap();
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 0.1 * PI).abs() < 1e-15);
        assert_eq!(l[2], PI);
        assert!(l[3].is_infinite());
        assert_eq!(l[4], 64.0);
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn axis_names_round_trip_and_unknown_fails() {
        for a in SweepAxis::ALL {
            assert_eq!(SweepAxis::parse(a.name()).unwrap(), a);
        }
        assert!(SweepAxis::parse("gate-1q").is_err());
    }

    #[test]
    fn axis_application() {
        let mut tc = TrainConfig::default();
        SweepAxis::GateBoth.apply(0.2, &mut tc).unwrap();
        assert_eq!(tc.noise.gate_2q_p, 0.2);
        assert!((tc.noise.gate_1q_theta - 0.2 * PI).abs() < 1e-15);
        SweepAxis::Shots.apply(64.0, &mut tc).unwrap();
        assert_eq!(tc.measure.shots, Shots::Finite(64));
        SweepAxis::Shots.apply(f64::INFINITY, &mut tc).unwrap();
        assert_eq!(tc.measure.shots, Shots::Analytic);
        assert!(SweepAxis::Shots.apply(2.5, &mut tc).is_err());
        assert!(SweepAxis::Readout.apply(1.5, &mut tc).is_err());
    }

    #[test]
    fn subset_selection_is_balanced_and_relabelled() {
        let labels = vec![5, 3, 5, 7, 3, 5];
        let pixels: Vec<u8> = (0..6 * 4).map(|i| (i % 7 + 1) as u8).collect();
        let set = IdxImageSet::new(
            IdxImages {
                count: 6,
                height: 2,
                width: 2,
                pixels,
            },
            labels,
        )
        .unwrap();
        let g = select_grids(&set, &[3, 5], 2).unwrap();
        assert_eq!(g.labels, vec![0, 0, 1, 1]);
        assert!(select_grids(&set, &[7], 2).is_err());
    }
}
