use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use paraquannet::bench::{self, BenchSettings, Mode};
use paraquannet::config::{parse_strategy, ExperimentConfig};
use paraquannet::experiment::{self, MnistSubset, SweepAxis};
use paraquannet::formats;
use paraquannet::metrics::{write_csv, MetricsRow};
use paraquannet_core::datagen::{generate_dataset, GeneratorFamily};
use paraquannet_core::model::{grids_from_states, GridSet, ModelState, Pipeline};
use paraquannet_core::rng::{indexed, stream};
use paraquannet_core::{Statevector, Strategy};

#[derive(Parser)]
#[command(
    name = "paraquannet",
    version,
    about = "Shared-kernel quanvolutional classifier for W-like states"
)]
struct Cli {
    /// `key = value` settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, alias = "seed", global = true)]
    seeds: Option<String>,
    /// Directory for written artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct TrainFlags {
    /// Dataset file; a standard dataset is generated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Samples per class of the generated dataset.
    #[arg(long)]
    per_class: Option<usize>,
    /// pauli-z, s-mub or a-mub.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2_lambda: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Positive integer or `analytic`.
    #[arg(long)]
    shots: Option<String>,
    #[arg(long)]
    p_measure: Option<f64>,
    #[arg(long)]
    data_rx_theta: Option<f64>,
    #[arg(long)]
    data_depol_p: Option<f64>,
    #[arg(long)]
    gate_1q_theta: Option<f64>,
    #[arg(long)]
    gate_2q_p: Option<f64>,
    /// Kernel trajectories per patch under two-qubit gate noise; 0 (default)
    /// evaluates the exact channel, which cannot be used for training.
    #[arg(long)]
    trajectories: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a W-like state dataset file.
    GenData {
        #[arg(long, default_value_t = 2000)]
        per_class: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per seed; writes checkpoints and metrics.csv.
    Train(TrainFlags),
    /// Evaluate a checkpoint on the test split of the first seed.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Accuracy across a noise grid for every strategy and seed.
    Sweep {
        /// rx-theta, depol, gate-2q, gate-both, shots or readout.
        #[arg(long)]
        axis: String,
        /// Comma-separated levels; `0.1pi` and `analytic` are accepted.
        #[arg(long)]
        levels: Option<String>,
        /// Comma-separated strategies (default: all three).
        #[arg(long)]
        strategies: Option<String>,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Batched against sequential kernel throughput, as JSON.
    Bench {
        /// batched, sequential or both.
        #[arg(long, default_value = "both")]
        mode: String,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// Wall time per repetition.
        #[arg(long, default_value_t = 1000)]
        duration_ms: u64,
        /// Checkpoint to benchmark (default: a fresh model).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train and evaluate on a balanced MNIST digit subset.
    IngestMnist {
        /// Directory with the IDX files (default: $PQ_DATA_DIR).
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value = "0,1,2,3")]
        digits: String,
        #[arg(long, default_value_t = 1000)]
        train_per_class: usize,
        #[arg(long, default_value_t = 250)]
        test_per_class: usize,
        #[command(flatten)]
        flags: TrainFlags,
    },
}

impl TrainFlags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut o = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k, v));
            }
        };
        put("data", self.data.as_ref().map(|p| p.display().to_string()));
        put("per_class", self.per_class.map(|v| v.to_string()));
        put("strategy", self.strategy.clone());
        put("epochs", self.epochs.map(|v| v.to_string()));
        put("batch_size", self.batch_size.map(|v| v.to_string()));
        put("learning_rate", self.learning_rate.map(|v| v.to_string()));
        put("l2_lambda", self.l2_lambda.map(|v| v.to_string()));
        put("test_fraction", self.test_fraction.map(|v| v.to_string()));
        put("shots", self.shots.clone());
        put("p_measure", self.p_measure.map(|v| v.to_string()));
        put("data_rx_theta", self.data_rx_theta.map(|v| v.to_string()));
        put("data_depol_p", self.data_depol_p.map(|v| v.to_string()));
        put("gate_1q_theta", self.gate_1q_theta.map(|v| v.to_string()));
        put("gate_2q_p", self.gate_2q_p.map(|v| v.to_string()));
        put("trajectories", self.trajectories.map(|v| v.to_string()));
        o
    }
}

fn resolve(
    cli: &Cli,
    flags: &TrainFlags,
    extra: Vec<(&'static str, String)>,
) -> anyhow::Result<ExperimentConfig> {
    let mut o = flags.overrides();
    o.extend(extra);
    if let Some(s) = &cli.seeds {
        o.push(("seeds", s.clone()));
    }
    if let Some(d) = &cli.out_dir {
        o.push(("out_dir", d.display().to_string()));
    }
    ExperimentConfig::resolve(cli.config.as_deref(), &o)
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.join(name))
}

fn print_confusion(confusion: &[[u64; 8]; 8], classes: usize) {
    println!("confusion (rows: true, cols: predicted)");
    for row in confusion.iter().take(classes) {
        let cells: Vec<String> = row.iter().take(classes).map(|c| format!("{c:5}")).collect();
        println!("{}", cells.join(" "));
    }
}

fn gen_data(cli: &Cli, per_class: usize, out: &Path) -> anyhow::Result<()> {
    let cfg = resolve(cli, &TrainFlags::default(), vec![])?;
    let seed = cfg.seeds[0];
    let ds = generate_dataset(&GeneratorFamily::standard(), per_class, seed)?;
    let crc = formats::save_dataset(out, &ds)?;
    println!(
        "wrote {} samples to {} (seed {seed}, crc32 {crc:08x})",
        ds.len(),
        out.display()
    );
    for (c, p) in ds.min_success_by_class().iter().enumerate() {
        if let Some(p) = p {
            println!("class {c}: min success probability {p:.6}");
        }
    }
    Ok(())
}

fn train(cli: &Cli, flags: &TrainFlags) -> anyhow::Result<()> {
    let cfg = resolve(cli, flags, vec![])?;
    let dataset = experiment::dataset_for(&cfg)?;
    let strategy = cfg.train.measure.strategy;
    let runs = experiment::train_seeds(&dataset, &cfg, &mut |seed, m| {
        println!(
            "seed {seed} epoch {:3} loss {:.5} test accuracy {:.4}",
            m.epoch, m.train_loss, m.test_accuracy
        );
    })?;
    for r in &runs {
        let path = out_path(
            &cfg,
            &format!("model-{}-seed{}.pqmd", strategy.name(), r.seed),
        )?;
        formats::save_checkpoint(&path, &r.outcome.model)?;
    }
    let rows: Vec<MetricsRow> = experiment::metrics_rows(&runs, strategy);
    write_csv(&out_path(&cfg, "metrics.csv")?, &rows)?;
    let s = experiment::summarize(&runs);
    println!(
        "{} accuracy over {} seed(s): {:.4} ± {:.4}",
        strategy.name(),
        runs.len(),
        s.mean,
        s.std
    );
    Ok(())
}

fn eval(cli: &Cli, model: &Path, flags: &TrainFlags) -> anyhow::Result<()> {
    let cfg = resolve(cli, flags, vec![])?;
    let model =
        formats::load_checkpoint(model).with_context(|| format!("loading {}", model.display()))?;
    let dataset = experiment::dataset_for(&cfg)?;
    let tc = cfg.for_seed(cfg.seeds[0]);
    let e = experiment::evaluate_on_split(&model, &dataset, &tc)?;
    println!(
        "accuracy {:.4} on {} test samples (seed {})",
        e.accuracy,
        e.total(),
        tc.seed
    );
    print_confusion(&e.confusion, 8);
    Ok(())
}

fn sweep(
    cli: &Cli,
    axis: &str,
    levels: Option<&str>,
    strategies: Option<&str>,
    flags: &TrainFlags,
) -> anyhow::Result<()> {
    let axis = SweepAxis::parse(axis)?;
    let cfg = resolve(cli, flags, vec![])?;
    let levels = match levels {
        Some(text) => experiment::parse_levels(text)?,
        None => axis.default_levels(),
    };
    let strategies: Vec<Strategy> = match strategies {
        Some(text) => text
            .split(',')
            .map(|s| parse_strategy(s.trim()))
            .collect::<anyhow::Result<_>>()?,
        None => Strategy::ALL.to_vec(),
    };
    let dataset = experiment::dataset_for(&cfg)?;
    let rows = experiment::sweep(&dataset, &cfg, axis, &levels, &strategies, &mut |r| {
        println!(
            "{} {:.6} seed {} {} accuracy {:.4}",
            r.axis, r.level, r.seed, r.strategy, r.accuracy
        );
    })?;
    let path = out_path(&cfg, &format!("sweep-{}.csv", axis.name()))?;
    write_csv(&path, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn bench_cmd(
    cli: &Cli,
    mode: &str,
    repeat: usize,
    batch_size: usize,
    duration_ms: u64,
    model: Option<&Path>,
) -> anyhow::Result<()> {
    let modes = match mode {
        "both" => vec![Mode::Batched, Mode::Sequential],
        m => vec![Mode::parse(m)
            .with_context(|| format!("unknown mode {m:?} (batched, sequential, both)"))?],
    };
    if repeat == 0 {
        bail!("--repeat must be positive");
    }
    let cfg = resolve(cli, &TrainFlags::default(), vec![])?;
    let seed = cfg.seeds[0];
    let model = match model {
        Some(p) => formats::load_checkpoint(p)?,
        None => ModelState::standard(seed),
    };
    let per_class = batch_size.div_ceil(8).max(1);
    let ds = generate_dataset(&GeneratorFamily::standard(), per_class, seed)?;
    let states: Vec<Statevector> = ds.samples.iter().map(|s| s.state.clone()).collect();
    let grids = grids_from_states(
        &states,
        &cfg.train.noise,
        &mut indexed(seed, stream::DATA_NOISE, 0),
    )?;
    let data = GridSet {
        grids,
        labels: ds.samples.iter().map(|s| s.label).collect(),
    };
    let pipeline = Pipeline::inference(cfg.for_seed(seed).measure, cfg.for_seed(seed).noise);
    let settings = BenchSettings {
        batch_size,
        repeats: repeat,
        duration: Duration::from_millis(duration_ms),
    };
    let report = bench::report(&model, &data, &pipeline, &modes, &settings)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    fs::write(out_path(&cfg, "bench.json")?, json + "\n")?;
    Ok(())
}

fn ingest_mnist(
    cli: &Cli,
    data_dir: Option<&Path>,
    digits: &str,
    train_per_class: usize,
    test_per_class: usize,
    flags: &TrainFlags,
) -> anyhow::Result<()> {
    let mut extra = vec![];
    if let Some(d) = data_dir {
        extra.push(("data_dir", d.display().to_string()));
    }
    let cfg = resolve(cli, flags, extra)?;
    let classes = digits
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<u8>()
                .with_context(|| format!("bad digit {d:?}"))
        })
        .collect::<anyhow::Result<Vec<u8>>>()?;
    if classes.is_empty() || classes.len() > 8 {
        bail!("between 1 and 8 digits are supported");
    }
    let subset = MnistSubset {
        classes,
        train_per_class,
        test_per_class,
    };
    let (train_set, test_set) = experiment::load_mnist(&cfg.data_dir, &subset)
        .with_context(|| format!("reading MNIST from {}", cfg.data_dir.display()))?;
    println!(
        "{} training and {} test grids",
        train_set.len(),
        test_set.len()
    );
    let strategy = cfg.train.measure.strategy;
    let runs = experiment::train_grid_seeds(&train_set, &test_set, &cfg, &mut |seed, m| {
        println!(
            "seed {seed} epoch {:3} loss {:.5} test accuracy {:.4}",
            m.epoch, m.train_loss, m.test_accuracy
        );
    })?;
    write_csv(
        &out_path(&cfg, "mnist-metrics.csv")?,
        &experiment::metrics_rows(&runs, strategy),
    )?;
    if let Some(last) = runs.last() {
        print_confusion(&last.outcome.evaluation.confusion, subset.classes.len());
    }
    let s = experiment::summarize(&runs);
    println!(
        "{} MNIST accuracy over {} seed(s): {:.4} ± {:.4}",
        strategy.name(),
        runs.len(),
        s.mean,
        s.std
    );
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::GenData { per_class, out } => gen_data(cli, *per_class, out),
        Command::Train(flags) => train(cli, flags),
        Command::Eval { model, flags } => eval(cli, model, flags),
        Command::Sweep {
            axis,
            levels,
            strategies,
            flags,
        } => sweep(cli, axis, levels.as_deref(), strategies.as_deref(), flags),
        Command::Bench {
            mode,
            repeat,
            batch_size,
            duration_ms,
            model,
        } => bench_cmd(
            cli,
            mode,
            *repeat,
            *batch_size,
            *duration_ms,
            model.as_deref(),
        ),
        Command::IngestMnist {
            data_dir,
            digits,
            train_per_class,
            test_per_class,
            flags,
        } => ingest_mnist(
            cli,
            data_dir.as_deref(),
            digits,
            *train_per_class,
            *test_per_class,
            flags,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
