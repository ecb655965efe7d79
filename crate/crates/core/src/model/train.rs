use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::pqeu::{backward, forward_cached, Pipeline};
use super::{complex_to_grid, grid_patches, ModelState, Output, CLASSES, FEATURES, GRID_CELLS};
use crate::datagen::{stratified_split, Dataset};
use crate::measure::{MeasureConfig, MubSchedule, Phase};
use crate::noise::{apply_data_depolarizing, apply_data_rx, NoiseConfig};
use crate::rng::{self, stream, Rng};
use crate::simcore::{StateBatch, Statevector};
use crate::{Error, Result};

/// Labelled 16×16 grids, row-major `len × 256`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridSet {
    pub grids: Vec<f64>,
    pub labels: Vec<u8>,
}

impl GridSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn grid(&self, i: usize) -> &[f64] {
        &self.grids[i * GRID_CELLS..(i + 1) * GRID_CELLS]
    }

    pub fn push(&mut self, grid: &[f64], label: u8) {
        self.grids.extend_from_slice(grid);
        self.labels.push(label);
    }

    pub fn subset(&self, indices: &[usize]) -> GridSet {
        let mut out = GridSet::default();
        for &i in indices {
            out.push(self.grid(i), self.labels[i]);
        }
        out
    }
}

const NOISE_CHUNK: usize = 512;

/// Grids of `states` after data noise: `R_x(data_rx_theta)` on every qubit,
/// then one depolarizing trajectory at `data_depol_p`.
pub fn grids_from_states(
    states: &[Statevector],
    noise: &NoiseConfig,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    noise.validate()?;
    let mut grids = Vec::with_capacity(states.len() * GRID_CELLS);
    for chunk in states.chunks(NOISE_CHUNK) {
        if !noise.has_data_noise() {
            for s in chunk {
                grids.extend_from_slice(&complex_to_grid(s.amplitudes())?);
            }
            continue;
        }
        let mut batch = StateBatch::from_statevectors(chunk)?;
        apply_data_rx(&mut batch, noise.data_rx_theta)?;
        apply_data_depolarizing(&mut batch, noise.data_depol_p, rng)?;
        for r in 0..batch.rows() {
            grids.extend_from_slice(&complex_to_grid(batch.row(r).amplitudes())?);
        }
    }
    Ok(grids)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Adam {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / (libm::sqrt(*v / c2) + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2_lambda: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub measure: MeasureConfig,
    pub noise: NoiseConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 0.002,
            epochs: 40,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2_lambda: 1e-4,
            test_fraction: 0.2,
            seed: 0,
            measure: MeasureConfig::default(),
            noise: NoiseConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !(self.l2_lambda >= 0.0) {
            return Err(Error::Config(
                "learning rate and l2 must be non-negative".into(),
            ));
        }
        self.measure.validate()?;
        self.noise.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[u64; CLASSES]; CLASSES],
}

impl Evaluation {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ModelState,
    pub metrics: Vec<EpochMetrics>,
    pub evaluation: Evaluation,
}

/// Loss on one batch and its gradient in [`ModelState::parameters`] order.
pub fn loss_and_gradient(
    model: &ModelState,
    grids: &[f64],
    labels: &[u8],
    pipeline: &Pipeline,
    l2_lambda: f64,
    rng: &mut Rng,
) -> Result<(f64, Vec<f64>, Output)> {
    let patches = grid_patches(grids)?;
    let (features, cache) = forward_cached(&patches, model, pipeline, rng)?;
    let out = Output::from_logits(model.head(&features));
    let loss = super::loss(&out.log_probs, labels, model, l2_lambda)?;

    let b = labels.len();
    let nt = model.theta.len();
    let mut grad = vec![0.0; model.parameter_count()];
    let mut d_features = vec![0.0; b * FEATURES];
    {
        let (g_theta, rest) = grad.split_at_mut(nt);
        let (g_w, g_b) = rest.split_at_mut(FEATURES * CLASSES);
        for (s, &y) in labels.iter().enumerate() {
            let x = &features[s * FEATURES..(s + 1) * FEATURES];
            let dx = &mut d_features[s * FEATURES..(s + 1) * FEATURES];
            for j in 0..CLASSES {
                let target = if j == y as usize { 1.0 } else { 0.0 };
                let dz = (libm::exp(out.log_probs[s * CLASSES + j]) - target) / b as f64;
                g_b[j] += dz;
                let w = &model.head_weights[j * FEATURES..(j + 1) * FEATURES];
                let gw = &mut g_w[j * FEATURES..(j + 1) * FEATURES];
                for f in 0..FEATURES {
                    gw[f] += dz * x[f];
                    dx[f] += dz * w[f];
                }
            }
        }
        backward(&patches, cache, &d_features, g_theta)?;
    }
    if l2_lambda != 0.0 {
        for (g, p) in grad.iter_mut().zip(model.parameters()) {
            *g += 2.0 * l2_lambda * p;
        }
    }
    Ok((loss, grad, out))
}

const EVAL_CHUNK: usize = 256;

/// Accuracy and confusion matrix; argmax ties go to the lowest class.
pub fn evaluate(
    model: &ModelState,
    set: &GridSet,
    pipeline: &Pipeline,
    rng: &mut Rng,
) -> Result<Evaluation> {
    let mut confusion = [[0u64; CLASSES]; CLASSES];
    let mut correct = 0u64;
    for (k, labels) in set.labels.chunks(EVAL_CHUNK).enumerate() {
        let grids =
            &set.grids[k * EVAL_CHUNK * GRID_CELLS..(k * EVAL_CHUNK + labels.len()) * GRID_CELLS];
        let out = super::forward_grids(grids, model, pipeline, rng)?;
        for (&y, p) in labels.iter().zip(out.predictions()) {
            let y = y as usize;
            if y >= CLASSES {
                return Err(Error::Label {
                    label: y,
                    classes: CLASSES,
                });
            }
            confusion[y][p] += 1;
            correct += (y == p) as u64;
        }
    }
    let accuracy = if set.is_empty() {
        0.0
    } else {
        correct as f64 / set.len() as f64
    };
    Ok(Evaluation {
        accuracy,
        confusion,
    })
}

/// Splits `dataset` by class under `cfg.seed` and turns each side into
/// grids after data noise.
pub fn split_grids(dataset: &Dataset, cfg: &TrainConfig) -> Result<(GridSet, GridSet)> {
    cfg.validate()?;
    let labels: Vec<u8> = dataset.samples.iter().map(|s| s.label).collect();
    let (train_idx, test_idx) = stratified_split(&labels, cfg.test_fraction, cfg.seed)?;
    let side = |idx: &[usize], which: u64| -> Result<GridSet> {
        let states: Vec<Statevector> = idx
            .iter()
            .map(|&i| dataset.samples[i].state.clone())
            .collect();
        let mut rng = rng::indexed(cfg.seed, stream::DATA_NOISE, which);
        let grids = grids_from_states(&states, &cfg.noise, &mut rng)?;
        Ok(GridSet {
            grids,
            labels: idx.iter().map(|&i| labels[i]).collect(),
        })
    };
    Ok((side(&train_idx, 0)?, side(&test_idx, 1)?))
}

/// Trains a freshly initialized standard model on the `split_grids` sides.
pub fn train(
    dataset: &Dataset,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    let (train_set, test_set) = split_grids(dataset, cfg)?;
    train_grids(
        ModelState::standard(cfg.seed),
        &train_set,
        &test_set,
        cfg,
        on_epoch,
    )
}

/// Trains `model` on `train_set`, evaluating on `test_set` after every epoch.
pub fn train_grids(
    mut model: ModelState,
    train_set: &GridSet,
    test_set: &GridSet,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() && cfg.epochs > 0 {
        return Err(Error::Config("empty training set".into()));
    }
    let mut adam = Adam::new(
        model.parameter_count(),
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );
    let mut shuffle = rng::substream(cfg.seed, stream::SHUFFLE);
    let mut noise_rng = rng::substream(cfg.seed, stream::MEASURE);
    let mut schedule = MubSchedule::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grids = Vec::with_capacity(cfg.batch_size * GRID_CELLS);
    let mut labels = Vec::with_capacity(cfg.batch_size);
    let mut params = model.parameters();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let inference = Pipeline::inference(cfg.measure, cfg.noise);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            grids.clear();
            labels.clear();
            for &i in batch {
                grids.extend_from_slice(train_set.grid(i));
                labels.push(train_set.labels[i]);
            }
            let pipeline = Pipeline {
                measure: cfg.measure,
                noise: cfg.noise,
                phase: Phase::Training(schedule),
            };
            let (loss, grad, _) = loss_and_gradient(
                &model,
                &grids,
                &labels,
                &pipeline,
                cfg.l2_lambda,
                &mut noise_rng,
            )?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            total += loss * batch.len() as f64;
            adam.step(&mut params, &grad);
            model.set_parameters(&params)?;
            schedule.advance();
        }
        let mut eval_rng = rng::indexed(cfg.seed, stream::EVAL, epoch as u64);
        let eval = evaluate(&model, test_set, &inference, &mut eval_rng)?;
        let m = EpochMetrics {
            epoch,
            train_loss: total / train_set.len() as f64,
            test_accuracy: eval.accuracy,
        };
        on_epoch(&m);
        metrics.push(m);
    }
    let mut eval_rng = rng::indexed(cfg.seed, stream::EVAL, 0);
    let evaluation = evaluate(&model, test_set, &inference, &mut eval_rng)?;
    Ok(TrainOutcome {
        model,
        metrics,
        evaluation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, GeneratorFamily};
    use crate::measure::{Shots, Strategy};
    use crate::model::forward_grids;

    fn analytic() -> MeasureConfig {
        MeasureConfig {
            strategy: Strategy::AMub,
            shots: Shots::Analytic,
            p_measure: 0.0,
            rng_seed: 0,
        }
    }

    fn tiny_set(per_class: usize) -> GridSet {
        let ds = generate_dataset(&GeneratorFamily::standard(), per_class, 5).unwrap();
        let states: Vec<Statevector> = ds.samples.iter().map(|s| s.state.clone()).collect();
        let grids =
            grids_from_states(&states, &NoiseConfig::default(), &mut rng::substream(0, 0)).unwrap();
        GridSet {
            grids,
            labels: ds.samples.iter().map(|s| s.label).collect(),
        }
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(2, 0.1, 0.9, 0.999, 1e-8);
        let mut p = [1.0, -1.0];
        adam.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let set = tiny_set(2);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 2,
            batch_size: 4,
            measure: analytic(),
            ..Default::default()
        };
        let start = ModelState::standard(0);
        let out = train_grids(start.clone(), &set, &set, &cfg, &mut |_| {}).unwrap();
        assert_eq!(out.model, start);
        assert_eq!(out.metrics.len(), 2);
    }

    #[test]
    fn zero_epochs_return_initialization() {
        let set = tiny_set(1);
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let out = train_grids(ModelState::standard(3), &set, &set, &cfg, &mut |_| {}).unwrap();
        assert_eq!(out.model, ModelState::standard(3));
    }

    #[test]
    fn single_sample_overfits() {
        let set = tiny_set(1).subset(&[5]);
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 1,
            learning_rate: 0.01,
            l2_lambda: 0.0,
            measure: analytic(),
            ..Default::default()
        };
        let out = train_grids(ModelState::standard(0), &set, &set, &cfg, &mut |_| {}).unwrap();
        assert!(
            out.metrics.last().unwrap().train_loss < 0.01,
            "{:?}",
            out.metrics.last()
        );
    }

    #[test]
    fn uniform_model_scores_chance_and_confusion_adds_up() {
        let set = tiny_set(4);
        let mut model = ModelState::standard(0);
        model.head_weights.fill(0.0);
        let pipe = Pipeline::inference(analytic(), NoiseConfig::default());
        let out = forward_grids(set.grid(0), &model, &pipe, &mut rng::substream(0, 0)).unwrap();
        for lp in &out.log_probs {
            assert!((lp + libm::log(8.0)).abs() < 1e-12);
        }
        let e = evaluate(&model, &set, &pipe, &mut rng::substream(0, 0)).unwrap();
        assert_eq!(e.total(), set.len() as u64);
        assert!((e.accuracy - 0.125).abs() < 1e-12);
        let trace: u64 = (0..CLASSES).map(|i| e.confusion[i][i]).sum();
        assert!((trace as f64 / e.total() as f64 - e.accuracy).abs() < 1e-15);
    }
}
