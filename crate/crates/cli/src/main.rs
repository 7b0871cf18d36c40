//! Experiment CLI for the competitive-refractory dynamics pipelines.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crdm_core::embed::{EmbedParams, EmbeddingSpace, ItemKind, Metric, PathCorpus};
use crdm_core::engine::{run_once, EngineParams, RunHooks, StimulusMode, StimulusSchedule};
use crdm_core::exp::{
    config::{DATA_DIR_ENV, ExperimentConfig, ExperimentKind, Precision},
    run_experiment, ExperimentReport, RunContext,
};
use crdm_core::knn::{self, KnnConfig, Weighting};
use crdm_core::matio;
use crdm_core::mnist;
use crdm_core::netgen;
use crdm_core::PhysiologyConfig;
use crdm_core::pca::pca;
use crdm_core::plasticity::StdpParams;
use crdm_core::tgraph;
use crdm_core::Scalar;

#[derive(Parser)]
#[command(name = "crdm", version, about = "Event-driven competitive-refractory dynamics: simulation and gradient-free MNIST pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a network and write it as versioned JSON
    Netgen(NetgenArgs),
    /// Simulate one stimulus and write the activation trace
    Simulate(SimulateArgs),
    /// Train graph embeddings over a path corpus
    Embed(EmbedArgs),
    /// Project an embedding CSV onto its principal components
    Pca(PcaArgs),
    /// Evaluate kNN classification over an embedding CSV
    Classify(ClassifyArgs),
    /// One-shot MLP baseline over a grid of hidden sizes
    Ann(AnnArgs),
    /// Run a full experiment from a TOML config (or presets)
    Run(RunArgs),
}

#[derive(Args)]
struct PhysiologyArgs {
    #[arg(long, default_value_t = 0.4)]
    w_lo: f64,
    #[arg(long, default_value_t = 0.8)]
    w_hi: f64,
    #[arg(long, default_value_t = 0.0866)]
    velocity: f64,
    #[arg(long, default_value_t = 5.0)]
    refractory_ms: f64,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long, default_value_t = 0.7)]
    excitatory_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    input_weight_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    recurrent_weight_scale: f64,
    /// Allow self-loops in the recurrent block
    #[arg(long)]
    self_loops: bool,
}

impl PhysiologyArgs {
    fn to_config(&self) -> PhysiologyConfig {
        crdm_core::netgen::PhysiologyConfig {
            w_lo: self.w_lo,
            w_hi: self.w_hi,
            velocity: self.velocity,
            refractory_ms: self.refractory_ms,
            threshold: self.threshold,
            excitatory_fraction: self.excitatory_fraction,
            input_weight_scale: self.input_weight_scale,
            recurrent_weight_scale: self.recurrent_weight_scale,
            self_loops: self.self_loops,
        }
    }
}

#[derive(Args)]
struct NetgenArgs {
    /// sbm | reservoir
    #[arg(long)]
    layout: String,
    #[arg(long, default_value_t = 784)]
    n_input: u32,
    #[arg(long, default_value_t = 200)]
    n_hidden: u32,
    #[arg(long, default_value_t = 0.1)]
    p_between: f64,
    #[arg(long, default_value_t = 0.2)]
    p_in_hidden: f64,
    #[arg(long, default_value_t = 100)]
    n_recurrent: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    physiology: PhysiologyArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Index of the stimulus image
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// single | tonic
    #[arg(long, default_value = "single")]
    mode: String,
    #[arg(long, default_value_t = 10.0)]
    period_ms: f64,
    #[arg(long, default_value_t = 600.0)]
    horizon_ms: f64,
    #[arg(long, default_value_t = 2.0)]
    window_ms: f64,
    /// Cap on event-loop iterations (0 = unlimited)
    #[arg(long, default_value_t = 0)]
    max_steps: u64,
    /// Cap on activation events (0 = unlimited)
    #[arg(long, default_value_t = 0)]
    max_events: u64,
    /// Enable online STDP
    #[arg(long)]
    stdp: bool,
    #[arg(long, default_value_t = 0.01)]
    a_plus: f64,
    #[arg(long, default_value_t = 0.012)]
    a_minus: f64,
    #[arg(long, default_value_t = 20.0)]
    tau_ms: f64,
    #[arg(long, default_value_t = 2.0)]
    w_max: f64,
    /// Record recurrent weights at this interval (0 = off)
    #[arg(long, default_value_t = 0.0)]
    snapshot_every_ms: f64,
    /// Trace binary output
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON debug form of the trace
    #[arg(long)]
    json: Option<PathBuf>,
    /// Optional weight-trajectory binary
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Optional temporal-path corpus (JSONL)
    #[arg(long)]
    paths: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    /// Path cap per graph (0 = unlimited)
    #[arg(long, default_value_t = 0)]
    max_paths: usize,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr0: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(short, long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// cosine | euclidean
    #[arg(long, default_value = "cosine")]
    metric: String,
    /// majority | inverse-distance
    #[arg(long, default_value = "majority")]
    weighting: String,
    #[arg(long)]
    embedding_count: usize,
    #[arg(long)]
    query_count: usize,
    #[arg(long, default_value_t = 10)]
    repeats: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also print a flat CSV row (accuracy_mean,accuracy_std,repeats)
    #[arg(long)]
    csv_row: bool,
}

#[derive(Args)]
struct AnnArgs {
    /// Directory with the IDX files (default: $CRDM_DATA_DIR or ./data)
    #[arg(long)]
    data_dir: Option<String>,
    /// Comma-separated hidden sizes
    #[arg(long, default_value = "5,10,100,200")]
    hidden: String,
    #[arg(long, default_value_t = 10)]
    repeats: u32,
    #[arg(long, default_value_t = 9000)]
    embedding_count: usize,
    #[arg(long, default_value_t = 1000)]
    query_count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 4000)]
    max_epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; omit to use the preset for --experiment
    config: Option<PathBuf>,
    /// paths-embed | stdp-compare | weight-traj | ann-baseline
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    name: Option<String>,
    /// f32 | f64
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    data_dir: Option<String>,
    /// Base directory for run artifacts
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

fn parse_metric(s: &str) -> Result<Metric> {
    match s {
        "cosine" => Ok(Metric::Cosine),
        "euclidean" => Ok(Metric::Euclidean),
        other => bail!("unknown metric '{other}'"),
    }
}

fn parse_weighting(s: &str) -> Result<Weighting> {
    match s {
        "majority" => Ok(Weighting::Majority),
        "inverse-distance" => Ok(Weighting::InverseDistance),
        other => bail!("unknown weighting '{other}'"),
    }
}

fn cmd_netgen(args: NetgenArgs) -> Result<()> {
    let phys = args.physiology.to_config();
    let net = match args.layout.as_str() {
        "sbm" => netgen::build_sbm::<Scalar>(
            args.n_input,
            args.n_hidden,
            args.p_in_hidden,
            args.p_between,
            &phys,
            args.seed,
        )?,
        "reservoir" => netgen::build_reservoir::<Scalar>(args.n_recurrent, &phys, args.seed)?,
        other => bail!("unknown layout '{other}' (use sbm or reservoir)"),
    };
    net.save_json(&args.out)?;
    println!(
        "wrote {} ({} nodes, {} edges, layout {:?}, seed {})",
        args.out.display(),
        net.n_nodes(),
        net.edges.len(),
        net.layout,
        net.seed
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let net = netgen::GeometricNetwork::<Scalar>::load_json(&args.network)?;
    let set = mnist::load_idx(&args.images, &args.labels)?;
    if args.index >= set.len() {
        bail!("index {} out of range ({} items)", args.index, set.len());
    }
    let pixels = mnist::binarize(&set.images[args.index]);
    let mode = match args.mode.as_str() {
        "single" => StimulusMode::SingleVolley,
        "tonic" => StimulusMode::Tonic { period_ms: args.period_ms },
        other => bail!("unknown mode '{other}'"),
    };
    let schedule = StimulusSchedule { pixels, mode };
    let params = EngineParams {
        horizon_ms: args.horizon_ms,
        summation_window_ms: args.window_ms,
        max_steps: (args.max_steps > 0).then_some(args.max_steps),
        max_events: (args.max_events > 0).then_some(args.max_events),
    };
    let mut hooks = RunHooks::<Scalar>::none();
    if args.stdp {
        hooks.stdp = Some(StdpParams {
            a_plus: args.a_plus,
            a_minus: args.a_minus,
            tau_plus_ms: args.tau_ms,
            tau_minus_ms: args.tau_ms,
            w_max: args.w_max,
            cutoff_factor: 5.0,
        });
    }
    if args.snapshot_every_ms > 0.0 {
        hooks.snapshot_every_ms = Some(args.snapshot_every_ms);
    }
    let stimulus_id = format!("{}-{:05}", set.source, args.index);
    let out = run_once(&net, &schedule, &params, &hooks, &stimulus_id)?;
    std::fs::write(&args.out, out.trace.to_binary())
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(json_path) = &args.json {
        std::fs::write(json_path, serde_json::to_string_pretty(&out.trace)?)?;
    }
    if let Some(traj_path) = &args.trajectory {
        match &out.trajectory {
            Some(traj) => matio::write_weight_trajectory(traj_path, traj, Some(set.labels[args.index]))?,
            None => bail!("--trajectory needs --snapshot-every-ms"),
        }
    }
    if let Some(paths_path) = &args.paths {
        let graph = tgraph::extract_temporal_graph(&out.trace, &net);
        let cap = (args.max_paths > 0).then_some(args.max_paths);
        let paths = tgraph::enumerate_paths(&graph, args.max_len, cap)?;
        let corpus = PathCorpus {
            documents: vec![crdm_core::embed::GraphDoc {
                graph_id: stimulus_id.clone(),
                label: set.labels[args.index],
                paths,
            }],
        };
        corpus.write_jsonl(paths_path)?;
    }
    println!(
        "label {}: {} events, {} steps, quiescence {:.1} ms{}",
        set.labels[args.index],
        out.trace.events.len(),
        out.steps,
        out.trace.quiescence_ms(),
        if out.halted { " (halted by cap)" } else { "" }
    );
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let corpus = PathCorpus::read_jsonl(&args.corpus)?;
    let params = EmbedParams {
        dim: args.dim,
        window: args.window,
        negatives: args.negatives,
        epochs: args.epochs,
        lr0: args.lr0,
        lr_min: 1e-4,
        seed: args.seed,
    };
    let trained = crdm_core::embed::train_graph_embeddings::<Scalar>(&corpus, &params)?;
    trained.space.write_csv(&args.out)?;
    println!(
        "embedded {} graphs into {} dims; epoch losses {:?}",
        trained.space.rows(),
        trained.space.dim,
        trained.epoch_losses.iter().map(|l| (l * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    Ok(())
}

fn cmd_pca(args: PcaArgs) -> Result<()> {
    let space = EmbeddingSpace::<Scalar>::read_csv(&args.embeddings, Metric::Cosine, ItemKind::Graph)?;
    let projection = pca(&space, args.k)?;
    projection.write_csv(&args.out)?;
    println!(
        "projected {} items onto {} components; explained variance ratio {:?}",
        space.rows(),
        args.k,
        projection.explained_variance_ratio
    );
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let metric = parse_metric(&args.metric)?;
    let space = EmbeddingSpace::<Scalar>::read_csv(&args.embeddings, metric, ItemKind::Graph)?;
    let cfg = KnnConfig {
        k: args.k,
        metric,
        weighting: parse_weighting(&args.weighting)?,
        epsilon: 1e-12,
    };
    let plan = mnist::SplitPlan::new(args.seed, args.embedding_count, args.query_count, args.repeats);
    let report = knn::evaluate(&space, &plan, &cfg)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    println!("accuracy {:.4} +- {:.4} over {} repeats", report.accuracy_mean, report.accuracy_std, report.repeats);
    if args.csv_row {
        println!("{}", report.csv_row());
    }
    Ok(())
}

fn cmd_ann(args: AnnArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::AnnBaseline);
    cfg.data.data_dir = args.data_dir;
    cfg.master_seed = args.seed;
    cfg.ann.max_epochs = args.max_epochs;
    cfg.ann.hidden_sizes = args
        .hidden
        .split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad hidden size '{s}'")))
        .collect::<Result<Vec<_>>>()?;
    cfg.protocol.embedding_count = args.embedding_count;
    cfg.protocol.query_count = args.query_count;
    cfg.protocol.repeats = args.repeats;
    let report = run_experiment(&cfg, None)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    if let ExperimentReport::AnnBaseline(r) = &report {
        println!("hidden  accuracy          params(table)  params(full)");
        for row in &r.rows {
            println!(
                "{:>6}  {:.4} +- {:.4}  {:>12}  {:>12}",
                row.hidden, row.accuracy_mean, row.accuracy_std, row.params_table, row.params_full
            );
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = match (&args.config, &args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::preset(ExperimentKind::parse(kind)?),
        (None, None) => bail!("give a config file or --experiment"),
    };
    if let Some(kind) = &args.experiment {
        cfg.experiment = ExperimentKind::parse(kind)?;
    }
    if let Some(subset) = args.subset {
        cfg.subset = Some(subset);
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(name) = args.name {
        cfg.name = name;
    }
    if let Some(p) = &args.precision {
        cfg.precision = match p.as_str() {
            "f32" => Precision::F32,
            "f64" => Precision::F64,
            other => bail!("unknown precision '{other}'"),
        };
    }
    if let Some(dir) = args.data_dir {
        cfg.data.data_dir = Some(dir);
    }
    cfg.validate()?;

    let mut ctx = RunContext::create(&args.out_dir, &cfg)?;
    let report = run_experiment(&cfg, Some(&mut ctx))?;
    let dir = ctx.finish()?;
    match &report {
        ExperimentReport::PathsEmbed(r) => {
            println!(
                "paths-embed: {} items, accuracy {:.4} +- {:.4}",
                r.n_items, r.eval.accuracy_mean, r.eval.accuracy_std
            );
        }
        ExperimentReport::StdpCompare(r) => {
            println!(
                "stdp-compare: plain {:.4}, stdp {:.4} (higher {:.2}/lower {:.2}/flipped {:.2}/unchanged {:.2})",
                r.plain.accuracy_mean,
                r.stdp.accuracy_mean,
                r.delta.frac_higher,
                r.delta.frac_lower,
                r.delta.frac_sign_flipped,
                r.delta.frac_unchanged
            );
        }
        ExperimentReport::WeightTraj(r) => {
            for p in &r.points {
                println!("weight-traj n={}: t={:>6.1} ms accuracy {:.4} +- {:.4}", r.n_recurrent, p.time_ms, p.report.accuracy_mean, p.report.accuracy_std);
            }
        }
        ExperimentReport::AnnBaseline(r) => {
            for row in &r.rows {
                println!("ann H={:<5} accuracy {:.4} +- {:.4}", row.hidden, row.accuracy_mean, row.accuracy_std);
            }
        }
    }
    println!("artifacts: {}", dir.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    // data layout hint for subcommands that read IDX files via configs
    let _ = DATA_DIR_ENV;
    match cli.command {
        Command::Netgen(args) => cmd_netgen(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Pca(args) => cmd_pca(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Ann(args) => cmd_ann(args),
        Command::Run(args) => cmd_run(args),
    }
}
