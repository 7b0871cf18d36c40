//! End-to-end experiment runners. Each runner is generic over the scalar,
//! fans independent simulations out over a worker pool, and collects results
//! in stimulus order so scheduling never shows up in the output.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{self, AdamParams, MlpModel, ParamKind};
use crate::embed::{train_graph_embeddings, EmbeddingSpace, GraphDoc, ItemKind, PathCorpus};
use crate::engine::{EngineParams, RunHooks, Simulator, StimulusMode, StimulusSchedule};
use crate::error::{Error, Result};
use crate::knn::{self, CurvePoint, EvalReport};
use crate::mnist::{self, ImageSet, SplitPlan};
use crate::netgen::{build_reservoir, build_sbm, GeometricNetwork, Layout};
use crate::plasticity::{weight_delta_stats, WeightDeltaStats};
use crate::rng::{derive_seed, stream_rng, streams};
use crate::scalar::Real;
use crate::tgraph::{enumerate_paths, extract_temporal_graph};

use super::config::{ExperimentConfig, ExperimentKind, Precision, ScheduleKind, SourceKind};
use super::manifest::RunContext;

/// Stream tag for evaluation-split seeding.
const PROTOCOL_STREAM: u64 = 0x50;
/// Stream tag for stdp-compare stimulus selection.
const CLASS_PICK_STREAM: u64 = 0x60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsEmbedReport {
    pub n_items: usize,
    pub n_paths_total: usize,
    pub embed_epoch_losses: Vec<f64>,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdpCompareReport {
    pub n_accumulation: usize,
    pub n_probes: usize,
    pub delta: WeightDeltaStats,
    pub plain: EvalReport,
    pub stdp: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTrajReport {
    pub n_recurrent: u32,
    pub n_items: usize,
    pub recurrent_edge_count: u64,
    pub param_count_formula: u64,
    pub points: Vec<CurvePoint>,
}

impl WeightTrajReport {
    pub fn report_at(&self, time_ms: f64) -> Option<&EvalReport> {
        self.points.iter().find(|p| (p.time_ms - time_ms).abs() < 1e-9).map(|p| &p.report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnRow {
    pub hidden: u64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub per_repeat: Vec<f64>,
    pub converged_runs: u32,
    pub params_table: u64,
    pub params_full: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnReport {
    pub pool_items: usize,
    pub repeats: u32,
    pub rows: Vec<AnnRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentReport {
    PathsEmbed(PathsEmbedReport),
    StdpCompare(StdpCompareReport),
    WeightTraj(WeightTrajReport),
    AnnBaseline(AnnReport),
}

/// Run the configured experiment at the configured precision.
pub fn run_experiment(cfg: &ExperimentConfig, ctx: Option<&mut RunContext>) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F32 => run_experiment_t::<f32>(cfg, ctx),
        Precision::F64 => run_experiment_t::<f64>(cfg, ctx),
    }
}

pub fn run_experiment_t<T: Real>(cfg: &ExperimentConfig, ctx: Option<&mut RunContext>) -> Result<ExperimentReport> {
    let report = match cfg.experiment {
        ExperimentKind::PathsEmbed => ExperimentReport::PathsEmbed(run_paths_embed::<T>(cfg)?),
        ExperimentKind::StdpCompare => ExperimentReport::StdpCompare(run_stdp_compare::<T>(cfg)?),
        ExperimentKind::WeightTraj => ExperimentReport::WeightTraj(run_weight_traj::<T>(cfg)?),
        ExperimentKind::AnnBaseline => ExperimentReport::AnnBaseline(run_ann_baseline::<T>(cfg)?),
    };
    if let Some(ctx) = ctx {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Malformed { what: "report json", detail: e.to_string() })?;
        ctx.write_artifact("report", "report.json", json.as_bytes())?;
        if let ExperimentReport::WeightTraj(r) = &report {
            let mut csv = String::from("time_ms,accuracy_mean,accuracy_std,repeats\n");
            for p in &r.points {
                csv.push_str(&format!("{},{}\n", p.time_ms, p.report.csv_row()));
            }
            ctx.write_artifact("curve", "accuracy_vs_time.csv", csv.as_bytes())?;
        }
        ctx.end_stage("experiment");
    }
    Ok(report)
}

fn load_set(cfg: &ExperimentConfig, source: SourceKind) -> Result<ImageSet> {
    let dir = cfg.resolve_data_dir();
    let (img, lbl) = match source {
        SourceKind::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        SourceKind::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    };
    let pick = |stem: &str| {
        let plain = dir.join(stem);
        if plain.exists() {
            plain
        } else {
            dir.join(format!("{stem}.gz"))
        }
    };
    mnist::load_idx(&pick(img), &pick(lbl))
}

fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn engine_params(cfg: &ExperimentConfig) -> EngineParams {
    EngineParams {
        horizon_ms: cfg.engine.horizon_ms,
        summation_window_ms: cfg.engine.window_ms,
        max_steps: cfg.max_steps_opt(),
        max_events: cfg.max_events_opt(),
    }
}

fn schedule_for(cfg: &ExperimentConfig, pixels: mnist::ActivePixelSet) -> StimulusSchedule {
    let mode = match cfg.engine.mode {
        ScheduleKind::Single => StimulusMode::SingleVolley,
        ScheduleKind::Tonic => StimulusMode::Tonic { period_ms: cfg.engine.period_ms },
    };
    StimulusSchedule { pixels, mode }
}

fn build_network<T: Real>(cfg: &ExperimentConfig) -> Result<GeometricNetwork<T>> {
    let phys = cfg.physiology.to_config::<T>();
    match cfg.network.layout {
        Layout::Sbm => build_sbm(
            mnist::IMAGE_PIXELS as u32,
            cfg.network.n_hidden,
            cfg.network.p_in_hidden,
            cfg.network.p_between,
            &phys,
            cfg.master_seed,
        ),
        Layout::Reservoir => build_reservoir(cfg.network.n_recurrent, &phys, cfg.master_seed),
    }
}

/// Stimulus selection: seeded subset (optionally class-balanced), returning
/// original dataset indices.
fn select_stimuli(cfg: &ExperimentConfig, set: &ImageSet) -> Result<Vec<u32>> {
    let seed = derive_seed(cfg.master_seed, streams::DATA_SUBSET);
    if cfg.data.balanced_per_class > 0 {
        let classes: Vec<u8> = (0..10).collect();
        return mnist::balanced_subset(set, seed, cfg.data.balanced_per_class, &classes);
    }
    let count = cfg.subset.unwrap_or(set.len());
    Ok(mnist::subset_indices(set.len(), seed, count))
}

fn split_plan(cfg: &ExperimentConfig) -> SplitPlan {
    SplitPlan {
        seed: derive_seed(cfg.master_seed, PROTOCOL_STREAM),
        embedding_count: cfg.protocol.embedding_count,
        query_count: cfg.protocol.query_count,
        repeats: cfg.protocol.repeats,
    }
}

/// Simulate one stimulus and turn the trace into an embedding document.
fn stimulus_doc<T: Real>(
    sim: &Simulator<T>,
    weights: Option<&[T]>,
    cfg: &ExperimentConfig,
    set: &ImageSet,
    idx: u32,
    tag: &str,
) -> Result<GraphDoc> {
    let pixels = mnist::binarize(&set.images[idx as usize]);
    let schedule = schedule_for(cfg, pixels);
    let params = engine_params(cfg);
    let hooks = if cfg.plasticity.enabled && cfg.experiment == ExperimentKind::PathsEmbed {
        let mut h = RunHooks::with_stdp(cfg.plasticity.to_params::<T>());
        h.stdp_scope = cfg.plasticity.scope;
        h
    } else {
        RunHooks::none()
    };
    let id = format!("{tag}{idx:06}");
    let out = sim
        .run_with_weights(weights.unwrap_or(&sim.network().weights()), &schedule, &params, &hooks, &id)
        .map_err(|e| e.with_context(format!("stimulus {idx}")))?;
    let graph = extract_temporal_graph(&out.trace, sim.network());
    let paths = enumerate_paths(&graph, cfg.embedding.max_len, cfg.embedding.max_paths_opt())?;
    Ok(GraphDoc { graph_id: id, label: set.labels[idx as usize], paths })
}

/// Temporal-path embedding pipeline: simulate every stimulus on the SBM
/// network, pool the paths into one corpus, train graph embeddings jointly,
/// and evaluate with kNN.
pub fn run_paths_embed<T: Real>(cfg: &ExperimentConfig) -> Result<PathsEmbedReport> {
    let set = load_set(cfg, cfg.data.stimulus_source)?;
    let indices = select_stimuli(cfg, &set)?;
    let net = build_network::<T>(cfg)?;
    let sim = Simulator::new(&net)?;
    let base = net.weights();
    let documents: Vec<GraphDoc> = with_pool(cfg.workers, || {
        indices
            .par_iter()
            .map(|&idx| stimulus_doc(&sim, Some(&base), cfg, &set, idx, "g"))
            .collect::<Result<Vec<_>>>()
    })??;
    let n_paths_total = documents.iter().map(|d| d.paths.len()).sum();
    let corpus = PathCorpus { documents };
    let trained = train_graph_embeddings::<T>(
        &corpus,
        &cfg.embedding.to_params(derive_seed(cfg.master_seed, streams::EMBED_INIT)),
    )?;
    let eval = knn::evaluate(&trained.space, &split_plan(cfg), &cfg.knn.to_config::<T>())?;
    Ok(PathsEmbedReport {
        n_items: indices.len(),
        n_paths_total,
        embed_epoch_losses: trained.epoch_losses,
        eval,
    })
}

/// STDP comparison: accumulate plasticity over a two-class stimulus stream
/// into G_stdp, then embed probe paths on the plain and adapted graphs and
/// evaluate both.
pub fn run_stdp_compare<T: Real>(cfg: &ExperimentConfig) -> Result<StdpCompareReport> {
    let sc = &cfg.stdp_compare;
    let set = load_set(cfg, cfg.data.stimulus_source)?;
    let pick_seed = derive_seed(cfg.master_seed, CLASS_PICK_STREAM);
    let per_class_total = sc.per_class + sc.probe_per_class;
    let picked = mnist::balanced_subset(&set, pick_seed, per_class_total, &[sc.class_a, sc.class_b])?;
    let (class_a, class_b) = picked.split_at(per_class_total);
    let mut accumulation: Vec<u32> = class_a[..sc.per_class].iter().chain(&class_b[..sc.per_class]).copied().collect();
    let mut probes: Vec<u32> = class_a[sc.per_class..].iter().chain(&class_b[sc.per_class..]).copied().collect();
    let mut order_rng = stream_rng(pick_seed, 1);
    accumulation.shuffle(&mut order_rng);
    probes.sort_unstable();

    let net = build_network::<T>(cfg)?;
    let sim = Simulator::new(&net)?;
    let params = engine_params(cfg);
    let mut stdp_hooks = RunHooks::with_stdp(cfg.plasticity.to_params::<T>());
    stdp_hooks.stdp_scope = cfg.plasticity.scope;

    // sequential accumulation: each stimulus sees the weights the previous
    // one left behind
    let mut weights = net.weights();
    for (i, &idx) in accumulation.iter().enumerate() {
        let pixels = mnist::binarize(&set.images[idx as usize]);
        let schedule = schedule_for(cfg, pixels);
        let out = sim
            .run_with_weights(&weights, &schedule, &params, &stdp_hooks, &format!("acc{i:05}"))
            .map_err(|e| e.with_context(format!("accumulation stimulus {idx}")))?;
        weights = out.final_weights;
    }
    let mut net_stdp = net.clone();
    net_stdp.set_weights(&weights);
    let delta = weight_delta_stats(&net, &net_stdp, T::from_f64_c(cfg.plasticity.tol_unchanged))?;

    // probe readout runs carry no plasticity; the two graphs differ only in
    // their weights
    let sim_stdp = Simulator::new(&net_stdp)?;
    let base = net.weights();
    let docs_plain: Vec<GraphDoc> = with_pool(cfg.workers, || {
        probes
            .par_iter()
            .map(|&idx| stimulus_doc(&sim, Some(&base), cfg, &set, idx, "p"))
            .collect::<Result<Vec<_>>>()
    })??;
    let docs_stdp: Vec<GraphDoc> = with_pool(cfg.workers, || {
        probes
            .par_iter()
            .map(|&idx| stimulus_doc(&sim_stdp, Some(&weights), cfg, &set, idx, "p"))
            .collect::<Result<Vec<_>>>()
    })??;

    let embed_params = cfg.embedding.to_params(derive_seed(cfg.master_seed, streams::EMBED_INIT));
    let plan = split_plan(cfg);
    let knn_cfg = cfg.knn.to_config::<T>();
    let plain_space = train_graph_embeddings::<T>(&PathCorpus { documents: docs_plain }, &embed_params)?.space;
    let stdp_space = train_graph_embeddings::<T>(&PathCorpus { documents: docs_stdp }, &embed_params)?.space;
    let plain = knn::evaluate(&plain_space, &plan, &knn_cfg)?;
    let stdp = knn::evaluate(&stdp_space, &plan, &knn_cfg)?;
    Ok(StdpCompareReport {
        n_accumulation: accumulation.len(),
        n_probes: probes.len(),
        delta,
        plain,
        stdp,
    })
}

/// Weight state-space trajectories: per stimulus, a fresh weight copy
/// evolves under STDP and tonic drive; recurrent-layer snapshots at the
/// configured times become the vectors classified by w-kNN.
pub fn run_weight_traj<T: Real>(cfg: &ExperimentConfig) -> Result<WeightTrajReport> {
    let set = load_set(cfg, cfg.data.stimulus_source)?;
    let indices = select_stimuli(cfg, &set)?;
    let net = build_network::<T>(cfg)?;
    let sim = Simulator::new(&net)?;
    let params = engine_params(cfg);
    let eval_times: Vec<f64> = if cfg.snapshots.eval_times_ms.is_empty() {
        let n = (cfg.engine.horizon_ms / cfg.snapshots.every_ms).round() as usize;
        (1..=n).map(|k| cfg.snapshots.every_ms * k as f64).collect()
    } else {
        cfg.snapshots.eval_times_ms.clone()
    };
    let eval_ticks: Vec<u64> = eval_times
        .iter()
        .map(|&ms| crate::time::ms_to_ticks("eval time", ms))
        .collect::<Result<Vec<_>>>()?;

    struct PerStimulus<T> {
        label: u8,
        slices: Vec<Vec<T>>,
    }
    let mut results: Vec<PerStimulus<T>> = with_pool(cfg.workers, || {
        indices
            .par_iter()
            .map(|&idx| {
                let pixels = mnist::binarize(&set.images[idx as usize]);
                let schedule = schedule_for(cfg, pixels);
                let mut hooks = if cfg.plasticity.enabled {
                    RunHooks::with_stdp(cfg.plasticity.to_params::<T>())
                } else {
                    RunHooks::none()
                };
                hooks.stdp_scope = cfg.plasticity.scope;
                hooks.snapshot_every_ms = Some(cfg.snapshots.every_ms);
                hooks.skip_trace = true;
                let out = sim
                    .run(&schedule, &params, &hooks, &format!("img-{idx:05}"))
                    .map_err(|e| e.with_context(format!("stimulus {idx}")))?;
                let traj = out.trajectory.expect("snapshot hook set");
                let slices = eval_ticks
                    .iter()
                    .map(|t| {
                        let pos = traj.sample_ticks.iter().position(|s| s == t).expect("eval tick on grid");
                        traj.vectors[pos].clone()
                    })
                    .collect();
                Ok(PerStimulus { label: set.labels[idx as usize], slices })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let labels: Vec<u8> = results.iter().map(|r| r.label).collect();
    let plan = split_plan(cfg);
    let knn_cfg = cfg.knn.to_config::<T>();
    let mut points = Vec::with_capacity(eval_times.len());
    for (s, &time_ms) in eval_times.iter().enumerate() {
        let rows: Vec<Vec<T>> = results.iter_mut().map(|r| std::mem::take(&mut r.slices[s])).collect();
        let space = EmbeddingSpace::from_rows(rows, labels.clone(), cfg.knn.metric, ItemKind::WeightVector);
        let report = knn::evaluate(&space, &plan, &knn_cfg)?;
        points.push(CurvePoint { time_ms, report });
    }
    let n = cfg.network.n_recurrent as u64;
    Ok(WeightTrajReport {
        n_recurrent: cfg.network.n_recurrent,
        n_items: indices.len(),
        recurrent_edge_count: n * n.saturating_sub(1),
        param_count_formula: ann::count_params(ParamKind::Bnn, n),
        points,
    })
}

/// One-shot MLP baseline over a grid of hidden sizes: per repeat, train on
/// fresh one-per-class picks, embed the evaluation pool's hidden
/// activations, and classify a held-out split with cosine w-kNN.
pub fn run_ann_baseline<T: Real>(cfg: &ExperimentConfig) -> Result<AnnReport> {
    let train = load_set(cfg, SourceKind::Train)?;
    let pool_set = load_set(cfg, SourceKind::Test)?;
    let pool_indices = select_stimuli(cfg, &pool_set)?;
    let pool_images: Vec<Vec<T>> = pool_indices
        .iter()
        .map(|&i| ann::normalize_image(&pool_set.images[i as usize]))
        .collect();
    let pool_labels: Vec<u8> = pool_indices.iter().map(|&i| pool_set.labels[i as usize]).collect();

    let per_class_train: Vec<Vec<u32>> = (0..10u8).map(|c| {
        train.indices_of_class(c).into_iter().map(|i| i as u32).collect()
    }).collect();

    let plan = split_plan(cfg);
    let knn_cfg = cfg.knn.to_config::<T>();
    let adam = AdamParams { lr: T::from_f64_c(cfg.ann.adam_lr), ..AdamParams::default() };
    let picks_seed = derive_seed(cfg.master_seed, streams::ANN_PICKS);
    let init_seed = derive_seed(cfg.master_seed, streams::ANN_INIT);

    let mut rows = Vec::with_capacity(cfg.ann.hidden_sizes.len());
    for (h_idx, &hidden) in cfg.ann.hidden_sizes.iter().enumerate() {
        let mut per_repeat = Vec::with_capacity(plan.repeats as usize);
        let mut converged_runs = 0u32;
        for r in 0..plan.repeats {
            let run_tag = (h_idx as u64) * 1009 + r as u64;
            let mut pick_rng = stream_rng(picks_seed, run_tag);
            let examples: Vec<(Vec<T>, u8)> = (0..10u8)
                .map(|c| {
                    let pool = &per_class_train[c as usize];
                    let pick = pool[rand::Rng::gen_range(&mut pick_rng, 0..pool.len())];
                    (ann::normalize_image(&train.images[pick as usize]), c)
                })
                .collect();
            let mut model = MlpModel::<T>::init(hidden as usize, derive_seed(init_seed, run_tag));
            let outcome = ann::train_one_shot(&mut model, &examples, cfg.ann.max_epochs, &adam)?;
            if outcome.converged {
                converged_runs += 1;
            }
            let space = ann::embed_hidden(&model, &pool_images, pool_labels.clone());
            let (emb, query) = mnist::split_indices(space.rows(), &plan, r)?;
            let correct: usize = with_pool(cfg.workers, || {
                query
                    .par_iter()
                    .map(|&q| {
                        let pred = knn::knn_predict_subset(&space, &emb, space.row(q as usize), &knn_cfg);
                        (pred == space.labels[q as usize]) as usize
                    })
                    .sum()
            })?;
            per_repeat.push(correct as f64 / query.len().max(1) as f64);
        }
        let mean = per_repeat.iter().sum::<f64>() / per_repeat.len().max(1) as f64;
        let std = if per_repeat.len() > 1 {
            (per_repeat.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (per_repeat.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        rows.push(AnnRow {
            hidden,
            accuracy_mean: mean,
            accuracy_std: std,
            per_repeat,
            converged_runs,
            params_table: ann::count_params(ParamKind::Ann, hidden),
            params_full: ann::ann_full_param_count(hidden),
        });
    }
    Ok(AnnReport { pool_items: pool_indices.len(), repeats: plan.repeats, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp::config::{ExperimentKind, Precision};

    fn workspace_data_dir() -> String {
        format!("{}/../../data", env!("CARGO_MANIFEST_DIR"))
    }

    fn data_available() -> bool {
        let dir = std::path::PathBuf::from(workspace_data_dir());
        dir.join("train-labels-idx1-ubyte.gz").exists() || dir.join("train-labels-idx1-ubyte").exists()
    }

    fn smoke_weight_traj_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::WeightTraj);
        cfg.data.data_dir = Some(workspace_data_dir());
        cfg.master_seed = 5;
        cfg.subset = Some(24);
        cfg.network.n_recurrent = 6;
        cfg.engine.horizon_ms = 200.0;
        cfg.snapshots.every_ms = 100.0;
        cfg.protocol = crate::exp::config::ProtocolSection { embedding_count: 20, query_count: 4, repeats: 2 };
        cfg
    }

    #[test]
    fn weight_traj_smoke_is_deterministic() {
        if !data_available() {
            panic!("dataset files missing; place the IDX files under data/");
        }
        let cfg = smoke_weight_traj_cfg();
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        if let ExperimentReport::WeightTraj(r) = a {
            assert_eq!(r.points.len(), 2);
            assert_eq!(r.n_items, 24);
        } else {
            panic!("wrong report kind");
        }
    }

    #[test]
    fn parallel_and_serial_agree() {
        if !data_available() {
            panic!("dataset files missing; place the IDX files under data/");
        }
        let mut serial = smoke_weight_traj_cfg();
        serial.workers = 1;
        let mut parallel = smoke_weight_traj_cfg();
        parallel.workers = 4;
        let a = run_experiment(&serial, None).unwrap();
        let b = run_experiment(&parallel, None).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn subset_growth_keeps_prefix_results() {
        if !data_available() {
            panic!("dataset files missing; place the IDX files under data/");
        }
        // the per-item slices depend only on the item, so a bigger subset
        // reproduces the smaller one's items; check via matching stimulus set
        let mut small = smoke_weight_traj_cfg();
        small.subset = Some(8);
        let mut large = smoke_weight_traj_cfg();
        large.subset = Some(16);
        let set = load_set(&small, small.data.stimulus_source).unwrap();
        let a = select_stimuli(&small, &set).unwrap();
        let b = select_stimuli(&large, &set).unwrap();
        assert_eq!(&b[..8], &a[..]);
    }

    #[test]
    fn f32_precision_runs() {
        if !data_available() {
            panic!("dataset files missing; place the IDX files under data/");
        }
        let mut cfg = smoke_weight_traj_cfg();
        cfg.precision = Precision::F32;
        cfg.subset = Some(12);
        cfg.protocol = crate::exp::config::ProtocolSection { embedding_count: 10, query_count: 2, repeats: 1 };
        let report = run_experiment(&cfg, None).unwrap();
        assert!(matches!(report, ExperimentReport::WeightTraj(_)));
    }

    #[test]
    fn paths_embed_smoke() {
        if !data_available() {
            panic!("dataset files missing; place the IDX files under data/");
        }
        let mut cfg = ExperimentConfig::preset(ExperimentKind::PathsEmbed);
        cfg.data.data_dir = Some(workspace_data_dir());
        cfg.master_seed = 3;
        cfg.subset = Some(10);
        cfg.network.n_hidden = 30;
        cfg.engine.horizon_ms = 50.0;
        cfg.embedding.epochs = 2;
        cfg.protocol = crate::exp::config::ProtocolSection { embedding_count: 8, query_count: 2, repeats: 2 };
        let report = run_experiment(&cfg, None).unwrap();
        if let ExperimentReport::PathsEmbed(r) = report {
            assert_eq!(r.n_items, 10);
            assert_eq!(r.eval.total_queries(), 4);
        } else {
            panic!("wrong report kind");
        }
    }
}
