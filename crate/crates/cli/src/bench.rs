//! Throughput of the batched kernel pass against the per-patch baseline.

use std::time::{Duration, Instant};

use paraquannet_core::model::{
    forward_grids, sequential_baseline_forward, unshared_parameter_count, GridSet, ModelState,
    Pipeline, GRID_CELLS,
};
use paraquannet_core::rng::{stream, substream};
use serde::Serialize;

use crate::metrics::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Batched,
    Sequential,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "batched" => Some(Mode::Batched),
            "sequential" => Some(Mode::Sequential),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub batch_size: usize,
    pub repeats: usize,
    /// Wall time of each repetition.
    pub duration: Duration,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            batch_size: 32,
            repeats: 5,
            duration: Duration::from_millis(1000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Throughput {
    pub mode: Mode,
    pub batch_size: usize,
    pub samples_per_second: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub parameter_count: usize,
    pub unshared_parameter_count: usize,
    pub batch_size: usize,
    pub repeats: usize,
    pub duration_seconds: f64,
    pub batched: Option<Throughput>,
    pub sequential: Option<Throughput>,
    pub ratio: Option<f64>,
}

/// Forward passes over consecutive batches of `data`, cycling, for
/// `settings.duration` per repetition after one warm-up batch.
pub fn bench_throughput(
    model: &ModelState,
    data: &GridSet,
    pipeline: &Pipeline,
    mode: Mode,
    settings: &BenchSettings,
) -> paraquannet_core::Result<Throughput> {
    let b = settings.batch_size.max(1);
    let batches: Vec<&[f64]> = data
        .grids
        .chunks(b * GRID_CELLS)
        .filter(|c| c.len() == b * GRID_CELLS)
        .collect();
    if batches.is_empty() {
        return Err(paraquannet_core::Error::Config(format!(
            "need at least {b} samples to benchmark"
        )));
    }
    let mut rng = substream(0, stream::EVAL);
    let run = |grids: &[f64], rng: &mut _| -> paraquannet_core::Result<()> {
        match mode {
            Mode::Batched => forward_grids(grids, model, pipeline, rng).map(|_| ()),
            Mode::Sequential => {
                sequential_baseline_forward(grids, model, pipeline, rng).map(|_| ())
            }
        }
    };
    run(batches[0], &mut rng)?;
    let mut samples_per_second = Vec::with_capacity(settings.repeats);
    for _ in 0..settings.repeats {
        let start = Instant::now();
        let mut samples = 0usize;
        let mut k = 0;
        while start.elapsed() < settings.duration {
            run(batches[k % batches.len()], &mut rng)?;
            samples += b;
            k += 1;
        }
        samples_per_second.push(samples as f64 / start.elapsed().as_secs_f64());
    }
    let (mean, std) = mean_std(&samples_per_second);
    Ok(Throughput {
        mode,
        batch_size: b,
        samples_per_second,
        mean,
        std,
    })
}

pub fn report(
    model: &ModelState,
    data: &GridSet,
    pipeline: &Pipeline,
    modes: &[Mode],
    settings: &BenchSettings,
) -> paraquannet_core::Result<BenchReport> {
    let mut batched = None;
    let mut sequential = None;
    for &mode in modes {
        let t = bench_throughput(model, data, pipeline, mode, settings)?;
        match mode {
            Mode::Batched => batched = Some(t),
            Mode::Sequential => sequential = Some(t),
        }
    }
    let ratio = match (&batched, &sequential) {
        (Some(b), Some(s)) => Some(b.mean / s.mean),
        _ => None,
    };
    Ok(BenchReport {
        parameter_count: model.parameter_count(),
        unshared_parameter_count: unshared_parameter_count(model.kernel.param_count()),
        batch_size: settings.batch_size,
        repeats: settings.repeats,
        duration_seconds: settings.duration.as_secs_f64(),
        batched,
        sequential,
        ratio,
    })
}
