//! Command-line pipeline runner: synthesize graphs, split them for the
//! three prediction tasks, fit the embedding model, score it, and export
//! latent-position snapshots.
//!
//! Every command writes a JSON run manifest next to its primary output
//! (`<out>.manifest.json`, or `manifest.json` inside an output directory)
//! capturing the argv, settings snapshot, seed, inputs/outputs, and wall
//! time.  Re-running the recorded command at a fixed thread count
//! reproduces all data outputs byte for byte.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use serde_json::json;

use seqsurv::eval::{run_task, validation_samples, Task, TaskMetrics};
use seqsurv::graph::{
    all_dyads, load_graph, load_graph_rescaled, split_dataset, DatasetSplit, SplitManifest,
    TemporalGraph,
};
use seqsurv::model::{load_checkpoint, save_checkpoint, write_snapshots, ModelConfig};
use seqsurv::synth::{generate_alpha, generate_beta, AlphaSpec, BetaSpec};
use seqsurv::train::{
    select_prior_scale, train_with_dyads, write_trace_csv, TrainSchedule,
};

#[derive(Parser)]
#[command(
    name = "seqsurv",
    version,
    about = "Continuous-time network embedding via a sequential survival process"
)]
struct Cli {
    /// Cap the worker-thread pool (default: one thread per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic interval graph.
    #[command(subcommand)]
    Synth(SynthKind),
    /// Cut a graph into training/held-out/future pieces for evaluation.
    Split(SplitArgs),
    /// Fit the latent-trajectory model on a training split.
    Train(TrainArgs),
    /// Score link-prediction tasks from a trained checkpoint.
    Eval(EvalArgs),
    /// Export latent positions at chosen times as CSV snapshots.
    Embed(EmbedArgs),
}

#[derive(Subcommand)]
enum SynthKind {
    /// Hazard-driven generator: clustered ground-truth trajectories.
    Alpha(AlphaArgs),
    /// Block-membership generator: per-window random clusters.
    Beta(BetaArgs),
}

#[derive(Args)]
struct AlphaArgs {
    /// Output interval CSV path.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of nodes.
    #[arg(long = "n", default_value_t = 100)]
    num_nodes: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 3.0)]
    bias_gap: f64,
    #[arg(long, default_value_t = -0.25)]
    bias_link: f64,
    #[arg(long, default_value_t = 30.0)]
    prior_scale: f64,
    #[arg(long, default_value_t = 1e-2)]
    velocity_spread: f64,
    #[arg(long, default_value_t = 1e-6)]
    position_spread: f64,
    #[arg(long, default_value_t = 10)]
    anchors: usize,
    #[arg(long, default_value_t = 8.0)]
    anchor_radius: f64,
    #[arg(long, default_value_t = 8.0)]
    horizon: f64,
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long, default_value_t = 100_000)]
    max_events: usize,
    /// Also write the generating model as a checkpoint (diagnostics).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct BetaArgs {
    /// Output interval CSV path.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of nodes.
    #[arg(long = "n", default_value_t = 100)]
    num_nodes: usize,
    #[arg(long, default_value_t = 8)]
    windows: usize,
    #[arg(long, default_value_t = 100.0)]
    window_len: f64,
    #[arg(long, default_value_t = 10)]
    blocks: usize,
    #[arg(long, default_value_t = 0.8)]
    p_intra: f64,
    #[arg(long, default_value_t = 0.01)]
    p_inter: f64,
}

#[derive(Args)]
struct SplitArgs {
    /// Input interval CSV.
    #[arg(long)]
    graph: PathBuf,
    /// Number of nodes in the input graph.
    #[arg(long = "n")]
    num_nodes: usize,
    /// Observation horizon of the input graph.
    #[arg(long)]
    horizon: f64,
    /// Affinely map the file's time range onto [0, --horizon] while
    /// loading.  Off by default: times are never rescaled silently.
    #[arg(long)]
    rescale: bool,
    /// Directory for train.csv, heldout.csv, future.csv, split.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Fraction of the timeline reserved for future prediction.
    #[arg(long, default_value_t = 0.1)]
    future_frac: f64,
    /// Fraction of dyads held out for completion scoring.
    #[arg(long, default_value_t = 0.2)]
    heldout_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Split directory produced by `seqsurv split`.
    #[arg(long, value_name = "DIR", required_unless_present = "graph", conflicts_with = "graph")]
    split_dir: Option<PathBuf>,
    /// Train on a bare interval CSV instead (every dyad participates).
    #[arg(long, requires = "num_nodes", requires = "horizon")]
    graph: Option<PathBuf>,
    /// Number of nodes (bare-graph mode only).
    #[arg(long = "n")]
    num_nodes: Option<usize>,
    /// Observation horizon (bare-graph mode only).
    #[arg(long)]
    horizon: Option<f64>,
    /// Output checkpoint path.
    #[arg(short, long)]
    out: PathBuf,
    /// Loss-trace CSV path (default: `<out>.trace.csv`).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Flat `key = value` settings file; overrides built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Select the prior scale by validation AUC over a candidate grid
    /// (default 10^1..10^10; pass a comma list to override).  Needs
    /// --split-dir.
    #[arg(long, value_name = "LIST", num_args = 0..=1, default_missing_value = "")]
    lambda_grid: Option<String>,
    /// Not supported; training always starts fresh.
    #[arg(long, value_name = "CKPT")]
    resume: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Reconstruction,
    Completion,
    Future,
    All,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Split directory produced by `seqsurv split`.
    #[arg(long, value_name = "DIR")]
    split_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = TaskArg::All)]
    task: TaskArg,
    /// Independent sample resamplings per task.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output metrics JSON.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    /// Trained checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Comma-separated snapshot times.
    #[arg(long, value_name = "T,T,...", conflicts_with = "grid", required_unless_present = "grid")]
    times: Option<String>,
    /// Inclusive time grid `start:end:step`.
    #[arg(long, value_name = "A:B:STEP")]
    grid: Option<String>,
    /// Output snapshot CSV.
    #[arg(short, long)]
    out: PathBuf,
}

/// Everything needed to audit or replay a run.
#[derive(Serialize)]
struct RunManifest {
    command: Vec<String>,
    version: String,
    threads: Option<usize>,
    seed: Option<u64>,
    settings: serde_json::Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    duration_seconds: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error when a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Synth(kind) => cmd_synth(kind, cli.threads, started),
        Command::Split(args) => cmd_split(args, cli.threads, started),
        Command::Train(args) => cmd_train(args, cli.threads, started),
        Command::Eval(args) => cmd_eval(args, cli.threads, started),
        Command::Embed(args) => cmd_embed(args, cli.threads, started),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// `model.json` -> `model.json<suffix>` in the same directory.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn manifest_path_for(out: &Path) -> PathBuf {
    sibling(out, ".manifest.json")
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut w, manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn manifest(
    threads: Option<usize>,
    seed: Option<u64>,
    settings: serde_json::Value,
    inputs: &[&Path],
    outputs: &[&Path],
    started: Instant,
) -> RunManifest {
    RunManifest {
        command: std::env::args().collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        seed,
        settings,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        duration_seconds: started.elapsed().as_secs_f64(),
    }
}

fn cmd_synth(kind: SynthKind, threads: Option<usize>, started: Instant) -> Result<()> {
    match kind {
        SynthKind::Alpha(args) => {
            let spec = AlphaSpec {
                num_nodes: args.num_nodes,
                dim: args.dim,
                bias_gap: args.bias_gap,
                bias_link: args.bias_link,
                prior_scale: args.prior_scale,
                velocity_spread: args.velocity_spread,
                position_spread: args.position_spread,
                num_anchors: args.anchors,
                anchor_radius: args.anchor_radius,
                horizon: args.horizon,
                num_bins: args.bins,
                max_events_per_dyad: args.max_events,
            };
            let (graph, config, params) = generate_alpha(&spec, args.seed)?;
            graph
                .save_csv(&args.out)
                .with_context(|| format!("writing {}", args.out.display()))?;
            let mut outputs = vec![args.out.as_path()];
            if let Some(truth) = &args.truth {
                save_checkpoint(truth, &config, &params)?;
                outputs.push(truth.as_path());
            }
            println!(
                "alpha graph: {} nodes, {} linked dyads, {} intervals, horizon {} -> {}",
                graph.num_nodes(),
                graph.num_linked_dyads(),
                graph.num_intervals(),
                graph.horizon(),
                args.out.display()
            );
            write_manifest(
                &manifest_path_for(&args.out),
                &manifest(threads, Some(args.seed), json!(&spec), &[], &outputs, started),
            )
        }
        SynthKind::Beta(args) => {
            let spec = BetaSpec {
                num_nodes: args.num_nodes,
                num_windows: args.windows,
                window_len: args.window_len,
                num_blocks: args.blocks,
                p_intra: args.p_intra,
                p_inter: args.p_inter,
            };
            let graph = generate_beta(&spec, args.seed)?;
            graph
                .save_csv(&args.out)
                .with_context(|| format!("writing {}", args.out.display()))?;
            println!(
                "beta graph: {} nodes, {} linked dyads, {} intervals, horizon {} -> {}",
                graph.num_nodes(),
                graph.num_linked_dyads(),
                graph.num_intervals(),
                graph.horizon(),
                args.out.display()
            );
            write_manifest(
                &manifest_path_for(&args.out),
                &manifest(
                    threads,
                    Some(args.seed),
                    json!(&spec),
                    &[],
                    &[args.out.as_path()],
                    started,
                ),
            )
        }
    }
}

fn cmd_split(args: SplitArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let graph = if args.rescale {
        load_graph_rescaled(&args.graph, args.num_nodes, args.horizon)
    } else {
        load_graph(&args.graph, args.num_nodes, args.horizon)
    }
    .with_context(|| format!("loading {}", args.graph.display()))?;
    let split = split_dataset(&graph, args.future_frac, args.heldout_frac, args.seed)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let train_path = args.out_dir.join("train.csv");
    let heldout_path = args.out_dir.join("heldout.csv");
    let future_path = args.out_dir.join("future.csv");
    let json_path = args.out_dir.join("split.json");
    split.train_graph.save_csv(&train_path)?;
    split.heldout_graph.save_csv(&heldout_path)?;
    split.future_graph.save_csv(&future_path)?;
    let mut w = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut w, &split.manifest())?;
    writeln!(w)?;
    w.flush()?;
    println!(
        "split at t={}: {} training dyads, {} validation, {} test, {} removed -> {}",
        split.t_split(),
        split.training_dyads().len(),
        split.validation_dyads.len(),
        split.test_dyads.len(),
        split.removed_dyads.len(),
        args.out_dir.display()
    );
    write_manifest(
        &args.out_dir.join("manifest.json"),
        &manifest(
            threads,
            Some(args.seed),
            json!({
                "future_frac": args.future_frac,
                "heldout_frac": args.heldout_frac,
                "num_nodes": args.num_nodes,
                "horizon": args.horizon,
                "rescale": args.rescale,
            }),
            &[args.graph.as_path()],
            &[&train_path, &heldout_path, &future_path, &json_path],
            started,
        ),
    )
}

/// Reassemble a `DatasetSplit` from the files `seqsurv split` wrote.
fn load_split(dir: &Path) -> Result<DatasetSplit> {
    let json_path = dir.join("split.json");
    let file = File::open(&json_path)
        .with_context(|| format!("opening {}", json_path.display()))?;
    let m: SplitManifest = serde_json::from_reader(file)
        .with_context(|| format!("parsing {}", json_path.display()))?;
    let load = |name: &str, horizon: f64| -> Result<TemporalGraph> {
        let path = dir.join(name);
        load_graph(&path, m.num_nodes, horizon)
            .with_context(|| format!("loading {}", path.display()))
    };
    Ok(DatasetSplit {
        train_graph: load("train.csv", m.t_split)?,
        heldout_graph: load("heldout.csv", m.t_split)?,
        future_graph: load("future.csv", m.horizon)?,
        validation_dyads: m.validation_dyads,
        test_dyads: m.test_dyads,
        removed_dyads: m.removed_dyads,
        seed: m.seed,
        future_frac: m.future_frac,
        heldout_frac: m.heldout_frac,
    })
}

/// Mutable view of every tunable training setting, targeted by both the
/// config file and command-line flags.
struct Settings {
    dim: usize,
    num_bins: usize,
    prior_scale: f64,
    schedule: TrainSchedule,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            dim: 2,
            num_bins: 100,
            prior_scale: 30.0,
            schedule: TrainSchedule::default(),
        }
    }
}

/// Apply a flat `key = value` file.  `fixed` carries the values dictated by
/// the input data (node count, horizon), which the file may restate but not
/// contradict.
fn apply_config_file(
    settings: &mut Settings,
    path: &Path,
    fixed_nodes: usize,
    fixed_horizon: f64,
) -> Result<()> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| {
            anyhow!("{}:{}: {} `{}` for key `{}`", path.display(), lineno + 1, what, value, key)
        };
        let as_usize =
            |value: &str| value.parse::<usize>().map_err(|_| bad("invalid count"));
        let as_f64 = |value: &str| value.parse::<f64>().map_err(|_| bad("invalid number"));
        match key {
            "dim" => settings.dim = as_usize(value)?,
            "num_bins" => settings.num_bins = as_usize(value)?,
            "prior_scale" => settings.prior_scale = as_f64(value)?,
            "stage1_epochs" => settings.schedule.stage1_epochs = as_usize(value)?,
            "stage2_epochs" => settings.schedule.stage2_epochs = as_usize(value)?,
            "stage3_epochs" => settings.schedule.stage3_epochs = as_usize(value)?,
            "learning_rate" => settings.schedule.learning_rate = as_f64(value)?,
            "adam_beta1" => settings.schedule.adam_beta1 = as_f64(value)?,
            "adam_beta2" => settings.schedule.adam_beta2 = as_f64(value)?,
            "adam_eps" => settings.schedule.adam_eps = as_f64(value)?,
            "batch_size" => settings.schedule.batch_size = as_usize(value)?,
            "num_nodes" => {
                if as_usize(value)? != fixed_nodes {
                    bail!(
                        "{}:{}: num_nodes {} contradicts the input data ({})",
                        path.display(),
                        lineno + 1,
                        value,
                        fixed_nodes
                    );
                }
            }
            "horizon" => {
                if as_f64(value)? != fixed_horizon {
                    bail!(
                        "{}:{}: horizon {} contradicts the input data ({})",
                        path.display(),
                        lineno + 1,
                        value,
                        fixed_horizon
                    );
                }
            }
            _ => bail!(
                "{}:{}: unknown config key `{}` (known: dim, num_bins, prior_scale, \
                 stage1_epochs, stage2_epochs, stage3_epochs, learning_rate, adam_beta1, \
                 adam_beta2, adam_eps, batch_size, num_nodes, horizon)",
                path.display(),
                lineno + 1,
                key
            ),
        }
    }
    Ok(())
}

fn parse_lambda_grid(raw: &str) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Ok((1..=10).map(|k| 10f64.powi(k)).collect());
    }
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| anyhow!("invalid prior scale `{s}` in --lambda-grid"))
        })
        .collect()
}

fn cmd_train(args: TrainArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    if let Some(ckpt) = &args.resume {
        bail!(
            "resuming from a checkpoint ({}) is not supported; training always starts fresh",
            ckpt.display()
        );
    }

    // Load either a full split (the experiment pipeline) or a bare graph.
    let (split, graph, training_dyads) = match (&args.split_dir, &args.graph) {
        (Some(dir), None) => {
            let split = load_split(dir)?;
            let dyads = split.training_dyads();
            (Some(split), None, dyads)
        }
        (None, Some(path)) => {
            let n = args.num_nodes.expect("clap enforces --n with --graph");
            let horizon = args.horizon.expect("clap enforces --horizon with --graph");
            let graph = load_graph(path, n, horizon)
                .with_context(|| format!("loading {}", path.display()))?;
            let dyads = all_dyads(n);
            (None, Some(graph), dyads)
        }
        _ => unreachable!("clap enforces exactly one of --split-dir/--graph"),
    };
    let train_graph = match (&split, &graph) {
        (Some(s), _) => &s.train_graph,
        (None, Some(g)) => g,
        _ => unreachable!(),
    };

    let mut settings = Settings::default();
    if let Some(cfg) = &args.config {
        apply_config_file(&mut settings, cfg, train_graph.num_nodes(), train_graph.horizon())?;
    }
    let config = ModelConfig {
        num_nodes: train_graph.num_nodes(),
        dim: settings.dim,
        num_bins: settings.num_bins,
        horizon: train_graph.horizon(),
        prior_scale: settings.prior_scale,
    };
    let schedule = settings.schedule;
    let trace_path = args
        .trace
        .clone()
        .unwrap_or_else(|| sibling(&args.out, ".trace.csv"));

    let mut extra_outputs: Vec<PathBuf> = Vec::new();
    let (final_config, params, trace, selection_note) = if let Some(grid) = &args.lambda_grid {
        let split = split
            .as_ref()
            .ok_or_else(|| anyhow!("--lambda-grid requires --split-dir (validation labels)"))?;
        let candidates = parse_lambda_grid(grid)?;
        let samples = validation_samples(split, args.seed)
            .context("drawing validation samples for prior-scale selection")?;
        let selection = select_prior_scale(
            &split.train_graph,
            &config,
            &schedule,
            &samples,
            &candidates,
            &training_dyads,
            args.seed,
        )?;
        let table_path = sibling(&args.out, ".lambda.json");
        let mut w = BufWriter::new(File::create(&table_path)?);
        serde_json::to_writer_pretty(
            &mut w,
            &json!({"best_prior_scale": selection.best_scale, "candidates": selection.table}),
        )?;
        writeln!(w)?;
        w.flush()?;
        extra_outputs.push(table_path);
        for row in &selection.table {
            match row.auc_roc {
                Some(auc) => println!("  prior_scale {:>12}: validation AUC-ROC {auc:.4}", row.prior_scale),
                None => println!(
                    "  prior_scale {:>12}: failed ({})",
                    row.prior_scale,
                    row.error.as_deref().unwrap_or("unknown")
                ),
            }
        }
        let chosen = ModelConfig { prior_scale: selection.best_scale, ..config };
        let note = format!("selected prior_scale {}", selection.best_scale);
        (chosen, selection.params, selection.trace, Some(note))
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
        let (params, trace) =
            train_with_dyads(train_graph, &config, &schedule, &training_dyads, &mut rng)?;
        (config, params, trace, None)
    };

    save_checkpoint(&args.out, &final_config, &params)?;
    write_trace_csv(&trace_path, &trace)?;
    if let Some(note) = selection_note {
        println!("{note}");
    }
    match trace.last() {
        Some(last) => println!(
            "trained {} epochs over {} dyads; final objective {:.6} -> {}",
            last.epoch,
            training_dyads.len(),
            last.objective,
            args.out.display()
        ),
        None => println!("zero-epoch schedule; wrote initialization -> {}", args.out.display()),
    }

    let mut inputs: Vec<&Path> = Vec::new();
    if let Some(dir) = &args.split_dir {
        inputs.push(dir.as_path());
    }
    if let Some(path) = &args.graph {
        inputs.push(path.as_path());
    }
    if let Some(cfg) = &args.config {
        inputs.push(cfg.as_path());
    }
    let mut outputs: Vec<&Path> = vec![args.out.as_path(), trace_path.as_path()];
    outputs.extend(extra_outputs.iter().map(|p| p.as_path()));
    write_manifest(
        &manifest_path_for(&args.out),
        &manifest(
            threads,
            Some(args.seed),
            json!({
                "model": final_config,
                "schedule": schedule,
                "lambda_grid": args.lambda_grid,
                "training_dyads": training_dyads.len(),
            }),
            &inputs,
            &outputs,
            started,
        ),
    )
}

fn cmd_eval(args: EvalArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let (config, params) = load_checkpoint(&args.checkpoint)?;
    let split = load_split(&args.split_dir)?;
    if config.num_nodes != split.train_graph.num_nodes() {
        bail!(
            "checkpoint has {} nodes but the split has {}",
            config.num_nodes,
            split.train_graph.num_nodes()
        );
    }
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let tasks: &[Task] = match args.task {
        TaskArg::Reconstruction => &[Task::Reconstruction],
        TaskArg::Completion => &[Task::Completion],
        TaskArg::Future => &[Task::Future],
        TaskArg::All => &[Task::Reconstruction, Task::Completion, Task::Future],
    };
    let mut blocks = serde_json::Map::new();
    for &task in tasks {
        let metrics: TaskMetrics =
            run_task(&split, &params, &config, task, args.repeats, args.seed)?;
        println!(
            "{:>14}: AUC-ROC {:.4} ± {:.4}   AUC-PR {:.4} ± {:.4}   ({} samples/repeat)",
            task.name(),
            metrics.auc_roc_mean,
            metrics.auc_roc_sd,
            metrics.auc_pr_mean,
            metrics.auc_pr_sd,
            metrics.num_samples.first().copied().unwrap_or(0)
        );
        blocks.insert(task.name().to_string(), serde_json::to_value(&metrics)?);
    }
    let mut w = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    serde_json::to_writer_pretty(&mut w, &serde_json::Value::Object(blocks))?;
    writeln!(w)?;
    w.flush()?;
    write_manifest(
        &manifest_path_for(&args.out),
        &manifest(
            threads,
            Some(args.seed),
            json!({"task": tasks.iter().map(|t| t.name()).collect::<Vec<_>>(), "repeats": args.repeats}),
            &[args.checkpoint.as_path(), args.split_dir.as_path()],
            &[args.out.as_path()],
            started,
        ),
    )
}

fn parse_times(args: &EmbedArgs) -> Result<Vec<f64>> {
    if let Some(grid) = &args.grid {
        let parts: Vec<&str> = grid.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            bail!("--grid wants `start:end:step`, got `{grid}`");
        };
        let (a, b, step) = (
            a.trim().parse::<f64>().map_err(|_| anyhow!("bad grid start `{a}`"))?,
            b.trim().parse::<f64>().map_err(|_| anyhow!("bad grid end `{b}`"))?,
            step.trim().parse::<f64>().map_err(|_| anyhow!("bad grid step `{step}`"))?,
        );
        if !(step > 0.0) || b < a {
            bail!("--grid needs end >= start and step > 0");
        }
        // Inclusive endpoints with a half-ulp of slack so 0:800:50 hits 800.
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| a + i as f64 * step).collect());
    }
    let raw = args.times.as_ref().expect("clap enforces --times or --grid");
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().map_err(|_| anyhow!("bad time `{s}` in --times"))
        })
        .collect()
}

fn cmd_embed(args: EmbedArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let (config, params) = load_checkpoint(&args.checkpoint)?;
    let times = parse_times(&args)?;
    if times.is_empty() {
        bail!("no snapshot times given");
    }
    let mut w = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    write_snapshots(&params, &config, &times, &mut w)?;
    w.flush()?;
    println!(
        "wrote {} snapshots x {} nodes -> {}",
        times.len(),
        config.num_nodes,
        args.out.display()
    );
    write_manifest(
        &manifest_path_for(&args.out),
        &manifest(
            threads,
            None,
            json!({"times": times}),
            &[args.checkpoint.as_path()],
            &[args.out.as_path()],
            started,
        ),
    )
}
