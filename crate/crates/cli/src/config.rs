//! Experiment settings: defaults, `key = value` files and flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use paraquannet_core::model::TrainConfig;
use paraquannet_core::{Shots, Strategy};

pub const DATA_DIR_ENV: &str = "PQ_DATA_DIR";
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_PER_CLASS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `train.seed` is overwritten per run from `seeds`. Gate noise defaults
    /// to the exact channel (`trajectories = 0`), so training under gate
    /// noise needs an explicit trajectory count.
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub per_class: usize,
    pub data: Option<PathBuf>,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut train = TrainConfig::default();
        train.noise.trajectories = 0;
        ExperimentConfig {
            train,
            seeds: DEFAULT_SEEDS.to_vec(),
            per_class: DEFAULT_PER_CLASS,
            data: None,
            data_dir: default_data_dir(),
            out_dir: PathBuf::from("."),
        }
    }
}

/// `$PQ_DATA_DIR`, else `data/mnist` under the workspace root.
pub fn default_data_dir() -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"),
    }
}

pub fn parse_seeds(value: &str) -> anyhow::Result<Vec<u64>> {
    let seeds = value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .with_context(|| format!("bad seed {s:?}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if seeds.is_empty() {
        bail!("empty seed list");
    }
    Ok(seeds)
}

pub fn parse_shots(value: &str) -> anyhow::Result<Shots> {
    if value.eq_ignore_ascii_case("analytic") {
        return Ok(Shots::Analytic);
    }
    match value.parse::<u32>() {
        Ok(0) => bail!("shot count must be positive"),
        Ok(n) => Ok(Shots::Finite(n)),
        Err(_) => bail!("bad shot count {value:?}"),
    }
}

pub fn parse_strategy(value: &str) -> anyhow::Result<Strategy> {
    Strategy::parse(value)
        .ok_or_else(|| anyhow!("unknown strategy {value:?} (pauli-z, s-mub, a-mub)"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("bad value {value:?} for {key}"))
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 19] = [
        "batch_size",
        "learning_rate",
        "epochs",
        "beta1",
        "beta2",
        "epsilon",
        "l2_lambda",
        "test_fraction",
        "strategy",
        "shots",
        "p_measure",
        "data_rx_theta",
        "data_depol_p",
        "gate_1q_theta",
        "gate_2q_p",
        "trajectories",
        "seeds",
        "per_class",
        "data",
    ];

    /// Sets one field from its text form. Also accepts `data_dir` and `out_dir`.
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let t = &mut self.train;
        match key {
            "batch_size" => t.batch_size = num(key, value)?,
            "learning_rate" => t.learning_rate = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "beta1" => t.beta1 = num(key, value)?,
            "beta2" => t.beta2 = num(key, value)?,
            "epsilon" => t.epsilon = num(key, value)?,
            "l2_lambda" => t.l2_lambda = num(key, value)?,
            "test_fraction" => t.test_fraction = num(key, value)?,
            "strategy" => t.measure.strategy = parse_strategy(value)?,
            "shots" => t.measure.shots = parse_shots(value)?,
            "p_measure" => t.measure.p_measure = num(key, value)?,
            "data_rx_theta" => t.noise.data_rx_theta = num(key, value)?,
            "data_depol_p" => t.noise.data_depol_p = num(key, value)?,
            "gate_1q_theta" => t.noise.gate_1q_theta = num(key, value)?,
            "gate_2q_p" => t.noise.gate_2q_p = num(key, value)?,
            "trajectories" => t.noise.trajectories = num(key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "per_class" => self.per_class = num(key, value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> anyhow::Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in {}", path.display()))
    }

    /// Defaults, then `file`, then `overrides` in order.
    pub fn resolve(
        file: Option<&Path>,
        overrides: &[(&str, String)],
    ) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.train.validate()?;
        if self.seeds.is_empty() {
            bail!("empty seed list");
        }
        Ok(())
    }

    /// Training settings for one seed. The seed also drives the measurement
    /// and noise streams.
    pub fn for_seed(&self, seed: u64) -> TrainConfig {
        let mut t = self.train.clone();
        t.seed = seed;
        t.measure.rng_seed = seed;
        t.noise.rng_seed = seed;
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_training_table() {
        let c = ExperimentConfig::default();
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(c.train.learning_rate, 0.002);
        assert_eq!(c.train.epochs, 40);
        assert_eq!(c.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(c.train.measure.strategy, Strategy::AMub);
        assert_eq!(c.train.noise.trajectories, 0);
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        fs::write(
            &path,
            "# run\nepochs = 7\nstrategy = s-mub\nshots = 64\nseeds = 3, 4\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::resolve(Some(&path), &[("epochs", "2".into())]).unwrap();
        assert_eq!(cfg.train.epochs, 2);
        assert_eq!(cfg.train.measure.strategy, Strategy::SMub);
        assert_eq!(cfg.train.measure.shots, Shots::Finite(64));
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.train.batch_size, 32);
    }

    #[test]
    fn bad_input_is_reported() {
        let mut c = ExperimentConfig::default();
        assert!(c.apply_text("epochs 3").is_err());
        assert!(c.apply_text("colour = red").is_err());
        assert!(c.apply_text("shots = 0").is_err());
        assert!(ExperimentConfig::resolve(None, &[("data_depol_p", "1.5".into())]).is_err());
    }

    #[test]
    fn every_listed_key_is_settable() {
        let mut c = ExperimentConfig::default();
        for key in ExperimentConfig::KEYS {
            let value = match key {
                "strategy" => "pauli-z",
                "shots" => "analytic",
                "seeds" => "1,2",
                "data" => "x.pqwd",
                _ => "1",
            };
            c.set(key, value).unwrap();
        }
    }
}
