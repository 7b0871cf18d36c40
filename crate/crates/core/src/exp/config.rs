//! Declarative experiment configs. TOML on disk, mirrored 1:1 by CLI flags;
//! presets carry the per-experiment defaults so a config file only has to
//! state what it changes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbedParams, Metric};
use crate::error::{Error, Result};
use crate::knn::{KnnConfig, Weighting};
use crate::netgen::{Layout, PhysiologyConfig};
use crate::plasticity::StdpParams;
use crate::scalar::Real;

pub const DATA_DIR_ENV: &str = "CRDM_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PathsEmbed,
    StdpCompare,
    WeightTraj,
    AnnBaseline,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paths-embed" => Ok(Self::PathsEmbed),
            "stdp-compare" => Ok(Self::StdpCompare),
            "weight-traj" => Ok(Self::WeightTraj),
            "ann-baseline" => Ok(Self::AnnBaseline),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PathsEmbed => "paths-embed",
            Self::StdpCompare => "stdp-compare",
            Self::WeightTraj => "weight-traj",
            Self::AnnBaseline => "ann-baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSection {
    /// Directory holding the IDX files; falls back to $CRDM_DATA_DIR, then "data".
    pub data_dir: Option<String>,
    pub stimulus_source: SourceKind,
    /// When nonzero, take exactly this many items of each digit class.
    pub balanced_per_class: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { data_dir: None, stimulus_source: SourceKind::Train, balanced_per_class: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSection {
    pub layout: Layout,
    pub n_hidden: u32,
    pub p_between: f64,
    pub p_in_hidden: f64,
    pub n_recurrent: u32,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { layout: Layout::Sbm, n_hidden: 200, p_between: 0.1, p_in_hidden: 0.2, n_recurrent: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysiologySection {
    pub w_lo: f64,
    pub w_hi: f64,
    pub velocity: f64,
    pub refractory_ms: f64,
    pub threshold: f64,
    pub excitatory_fraction: f64,
    pub input_weight_scale: f64,
    pub recurrent_weight_scale: f64,
    pub self_loops: bool,
}

impl Default for PhysiologySection {
    fn default() -> Self {
        let d = PhysiologyConfig::<f64>::default();
        Self {
            w_lo: d.w_lo,
            w_hi: d.w_hi,
            velocity: d.velocity,
            refractory_ms: d.refractory_ms,
            threshold: d.threshold,
            excitatory_fraction: d.excitatory_fraction,
            input_weight_scale: d.input_weight_scale,
            recurrent_weight_scale: d.recurrent_weight_scale,
            self_loops: d.self_loops,
        }
    }
}

impl PhysiologySection {
    pub fn to_config<T: Real>(&self) -> PhysiologyConfig<T> {
        let c = T::from_f64_c;
        PhysiologyConfig {
            w_lo: c(self.w_lo),
            w_hi: c(self.w_hi),
            velocity: c(self.velocity),
            refractory_ms: c(self.refractory_ms),
            threshold: c(self.threshold),
            excitatory_fraction: self.excitatory_fraction,
            input_weight_scale: c(self.input_weight_scale),
            recurrent_weight_scale: c(self.recurrent_weight_scale),
            self_loops: self.self_loops,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Single,
    Tonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineSection {
    pub horizon_ms: f64,
    pub window_ms: f64,
    pub mode: ScheduleKind,
    pub period_ms: f64,
    /// 0 means unlimited.
    pub max_steps: u64,
    /// 0 means unlimited.
    pub max_events: u64,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self { horizon_ms: 600.0, window_ms: 2.0, mode: ScheduleKind::Tonic, period_ms: 10.0, max_steps: 0, max_events: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlasticitySection {
    pub enabled: bool,
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus_ms: f64,
    pub tau_minus_ms: f64,
    pub w_max: f64,
    pub cutoff_factor: f64,
    pub scope: crate::engine::StdpScope,
    /// |delta| at or below this counts as unchanged in delta statistics.
    pub tol_unchanged: f64,
}

impl Default for PlasticitySection {
    fn default() -> Self {
        let d = StdpParams::<f64>::default();
        Self {
            enabled: true,
            a_plus: d.a_plus,
            a_minus: d.a_minus,
            tau_plus_ms: d.tau_plus_ms,
            tau_minus_ms: d.tau_minus_ms,
            w_max: d.w_max,
            cutoff_factor: d.cutoff_factor,
            scope: crate::engine::StdpScope::All,
            tol_unchanged: 1e-9,
        }
    }
}

impl PlasticitySection {
    pub fn to_params<T: Real>(&self) -> StdpParams<T> {
        let c = T::from_f64_c;
        StdpParams {
            a_plus: c(self.a_plus),
            a_minus: c(self.a_minus),
            tau_plus_ms: c(self.tau_plus_ms),
            tau_minus_ms: c(self.tau_minus_ms),
            w_max: c(self.w_max),
            cutoff_factor: self.cutoff_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnapshotSection {
    pub every_ms: f64,
    /// Snapshot times fed to evaluation; empty means the whole grid.
    pub eval_times_ms: Vec<f64>,
}

impl Default for SnapshotSection {
    fn default() -> Self {
        Self { every_ms: 100.0, eval_times_ms: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub max_len: usize,
    /// 0 means unlimited paths per graph.
    pub max_paths: usize,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let d = EmbedParams::default();
        Self {
            dim: d.dim,
            window: d.window,
            negatives: d.negatives,
            epochs: d.epochs,
            lr0: d.lr0,
            lr_min: d.lr_min,
            max_len: 8,
            max_paths: 200,
        }
    }
}

impl EmbeddingSection {
    pub fn to_params(&self, seed: u64) -> EmbedParams {
        EmbedParams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            lr0: self.lr0,
            lr_min: self.lr_min,
            seed,
        }
    }

    pub fn max_paths_opt(&self) -> Option<usize> {
        (self.max_paths > 0).then_some(self.max_paths)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnSection {
    pub k: usize,
    pub metric: Metric,
    pub weighting: Weighting,
    pub epsilon: f64,
}

impl Default for KnnSection {
    fn default() -> Self {
        Self { k: 5, metric: Metric::Cosine, weighting: Weighting::Majority, epsilon: 1e-12 }
    }
}

impl KnnSection {
    pub fn to_config<T: Real>(&self) -> KnnConfig<T> {
        KnnConfig { k: self.k, metric: self.metric, weighting: self.weighting, epsilon: T::from_f64_c(self.epsilon) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSection {
    pub embedding_count: usize,
    pub query_count: usize,
    pub repeats: u32,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self { embedding_count: 9000, query_count: 1000, repeats: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnSection {
    pub hidden_sizes: Vec<u64>,
    pub max_epochs: usize,
    pub adam_lr: f64,
}

impl Default for AnnSection {
    fn default() -> Self {
        Self { hidden_sizes: vec![5, 10, 100, 200], max_epochs: 4000, adam_lr: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StdpCompareSection {
    pub class_a: u8,
    pub class_b: u8,
    pub per_class: usize,
    pub probe_per_class: usize,
}

impl Default for StdpCompareSection {
    fn default() -> Self {
        Self { class_a: 1, class_b: 5, per_class: 1000, probe_per_class: 250 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactSection {
    pub save_network: bool,
    pub save_traces: bool,
    pub save_trajectories: bool,
    pub save_embeddings: bool,
    pub save_corpus: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub name: String,
    pub master_seed: u64,
    pub precision: Precision,
    /// Simulation fan-out width; 0 uses the rayon default.
    pub workers: usize,
    /// Cap on stimulus count (applied before balancing).
    pub subset: Option<usize>,
    pub data: DataSection,
    pub network: NetworkSection,
    pub physiology: PhysiologySection,
    pub engine: EngineSection,
    pub plasticity: PlasticitySection,
    pub snapshots: SnapshotSection,
    pub embedding: EmbeddingSection,
    pub knn: KnnSection,
    pub protocol: ProtocolSection,
    pub ann: AnnSection,
    pub stdp_compare: StdpCompareSection,
    pub artifacts: ArtifactSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::WeightTraj,
            name: "run".into(),
            master_seed: 7,
            precision: Precision::F64,
            workers: 0,
            subset: None,
            data: DataSection::default(),
            network: NetworkSection::default(),
            physiology: PhysiologySection::default(),
            engine: EngineSection::default(),
            plasticity: PlasticitySection::default(),
            snapshots: SnapshotSection::default(),
            embedding: EmbeddingSection::default(),
            knn: KnnSection::default(),
            protocol: ProtocolSection::default(),
            ann: AnnSection::default(),
            stdp_compare: StdpCompareSection::default(),
            artifacts: ArtifactSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Experiment-appropriate defaults.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut cfg = Self { experiment: kind, name: kind.as_str().to_string(), ..Self::default() };
        match kind {
            ExperimentKind::PathsEmbed => {
                cfg.data.stimulus_source = SourceKind::Train;
                cfg.network.layout = Layout::Sbm;
                cfg.engine = EngineSection {
                    horizon_ms: 120.0,
                    window_ms: 2.0,
                    mode: ScheduleKind::Single,
                    period_ms: 10.0,
                    max_steps: 10_000,
                    max_events: 0,
                };
                cfg.plasticity.enabled = false;
                cfg.knn = KnnSection { k: 5, metric: Metric::Cosine, weighting: Weighting::Majority, epsilon: 1e-12 };
            }
            ExperimentKind::StdpCompare => {
                cfg.data.stimulus_source = SourceKind::Train;
                cfg.network.layout = Layout::Sbm;
                cfg.engine = EngineSection {
                    horizon_ms: 120.0,
                    window_ms: 2.0,
                    mode: ScheduleKind::Single,
                    period_ms: 10.0,
                    max_steps: 10_000,
                    max_events: 0,
                };
                cfg.knn = KnnSection { k: 5, metric: Metric::Cosine, weighting: Weighting::Majority, epsilon: 1e-12 };
                cfg.protocol = ProtocolSection { embedding_count: 450, query_count: 50, repeats: 10 };
            }
            ExperimentKind::WeightTraj => {
                cfg.data.stimulus_source = SourceKind::Test;
                cfg.network.layout = Layout::Reservoir;
                cfg.engine.mode = ScheduleKind::Tonic;
                cfg.knn = KnnSection {
                    k: 5,
                    metric: Metric::Euclidean,
                    weighting: Weighting::InverseDistance,
                    epsilon: 1e-12,
                };
            }
            ExperimentKind::AnnBaseline => {
                cfg.data.stimulus_source = SourceKind::Test;
                cfg.knn = KnnSection {
                    k: 5,
                    metric: Metric::Cosine,
                    weighting: Weighting::InverseDistance,
                    epsilon: 1e-12,
                };
            }
        }
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn resolve_data_dir(&self) -> PathBuf {
        if let Some(dir) = &self.data.data_dir {
            return PathBuf::from(dir);
        }
        if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from("data")
    }

    pub fn max_steps_opt(&self) -> Option<u64> {
        (self.engine.max_steps > 0).then_some(self.engine.max_steps)
    }

    pub fn max_events_opt(&self) -> Option<u64> {
        (self.engine.max_events > 0).then_some(self.engine.max_events)
    }

    pub fn validate(&self) -> Result<()> {
        self.physiology.to_config::<f64>().validate()?;
        if self.plasticity.enabled {
            self.plasticity.to_params::<f64>().validate()?;
        }
        if self.protocol.repeats == 0 {
            return Err(Error::Config("protocol.repeats must be at least 1".into()));
        }
        if self.snapshots.every_ms > 0.0 {
            let grid_ok = self
                .snapshots
                .eval_times_ms
                .iter()
                .all(|&t| t > 0.0 && (t / self.snapshots.every_ms).fract().abs() < 1e-9 && t <= self.engine.horizon_ms);
            if !grid_ok {
                return Err(Error::Config("snapshots.eval_times_ms must sit on the snapshot grid".into()));
            }
        }
        if self.embedding.max_len < 2 {
            return Err(Error::Config("embedding.max_len must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::preset(ExperimentKind::WeightTraj);
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
experiment = "paths-embed"
master_seed = 11

[network]
n_hidden = 40
"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::PathsEmbed);
        assert_eq!(cfg.master_seed, 11);
        assert_eq!(cfg.network.n_hidden, 40);
        assert_eq!(cfg.network.p_between, 0.1);
    }

    #[test]
    fn eval_times_must_sit_on_grid() {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::WeightTraj);
        cfg.snapshots.eval_times_ms = vec![150.0];
        assert!(cfg.validate().is_err());
        cfg.snapshots.eval_times_ms = vec![100.0, 300.0];
        cfg.engine.horizon_ms = 300.0;
        assert!(cfg.validate().is_ok());
    }
}
