//! Network construction: the two-block SBM layout and the input + recurrent
//! reservoir layout, with spatial geometry, signed weights and conduction
//! delays.
//!
//! Nodes live uniformly in the unit cube; an edge's delay is its Euclidean
//! length divided by the conduction velocity, quantized up to the engine tick
//! with a 1-tick floor. Sign is a property of the edge, drawn per edge so the
//! requested excitatory fraction holds in expectation.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mnist::IMAGE_PIXELS;
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;
use crate::time::TICKS_PER_MS;

pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Sbm,
    Reservoir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct NodeSpec<T: Real> {
    pub id: u32,
    pub position: [T; 3],
    pub refractory_ms: T,
    pub threshold: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct EdgeSpec<T: Real> {
    pub src: u32,
    pub dst: u32,
    pub weight: T,
    pub delay_ticks: u32,
}

/// Physiological parameter ranges applied by [`assign_physiology`].
///
/// Weight magnitudes are uniform in `(w_lo, w_hi)`; a draw is negated with
/// probability `1 - excitatory_fraction`. The per-layer scales multiply the
/// magnitude of edges leaving the input block / within the recurrent block,
/// which sets how many coincident arrivals a target needs to fire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "", deserialize = ""))]
pub struct PhysiologyConfig<T: Real> {
    pub w_lo: T,
    pub w_hi: T,
    pub velocity: T,
    pub refractory_ms: T,
    pub threshold: T,
    pub excitatory_fraction: f64,
    pub input_weight_scale: T,
    pub recurrent_weight_scale: T,
    pub self_loops: bool,
}

impl<T: Real> Default for PhysiologyConfig<T> {
    fn default() -> Self {
        let c = T::from_f64_c;
        Self {
            w_lo: c(0.4),
            w_hi: c(0.8),
            // sqrt(3)/20 units per ms: delays span roughly 1..20 ms in the unit cube
            velocity: c(0.0866),
            refractory_ms: c(5.0),
            threshold: c(1.0),
            excitatory_fraction: 0.7,
            input_weight_scale: c(1.0),
            recurrent_weight_scale: c(1.0),
            self_loops: false,
        }
    }
}

impl<T: Real> PhysiologyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidPhysiology(msg.to_string()));
        if !(self.w_lo > T::zero() && self.w_lo < self.w_hi) {
            return bad("weight range requires 0 < w_lo < w_hi");
        }
        if self.velocity <= T::zero() {
            return bad("velocity must be positive");
        }
        if self.refractory_ms <= T::zero() || self.threshold <= T::zero() {
            return bad("refractory period and threshold must be positive");
        }
        if !(0.0..=1.0).contains(&self.excitatory_fraction) {
            return bad("excitatory_fraction must lie in [0, 1]");
        }
        if self.input_weight_scale <= T::zero() || self.recurrent_weight_scale <= T::zero() {
            return bad("weight scales must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct GeometricNetwork<T: Real> {
    pub version: u32,
    pub layout: Layout,
    pub seed: u64,
    /// Input nodes are ids `0..n_input`; the rest are hidden/recurrent.
    pub n_input: u32,
    pub physiology: PhysiologyConfig<T>,
    pub nodes: Vec<NodeSpec<T>>,
    /// Canonical order: sorted by (src, dst).
    pub edges: Vec<EdgeSpec<T>>,
}

impl<T: Real> GeometricNetwork<T> {
    pub fn n_nodes(&self) -> u32 {
        self.nodes.len() as u32
    }

    pub fn n_hidden(&self) -> u32 {
        self.n_nodes() - self.n_input
    }

    pub fn is_input(&self, node: u32) -> bool {
        node < self.n_input
    }

    pub fn input_ids(&self) -> std::ops::Range<u32> {
        0..self.n_input
    }

    pub fn hidden_ids(&self) -> std::ops::Range<u32> {
        self.n_input..self.n_nodes()
    }

    /// Edge ids (canonical indices) of edges within the hidden/recurrent block.
    pub fn recurrent_edge_ids(&self) -> Vec<u32> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.src >= self.n_input && e.dst >= self.n_input)
            .map(|(i, _)| i as u32)
            .collect()
    }

    pub fn weights(&self) -> Vec<T> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn set_weights(&mut self, weights: &[T]) {
        assert_eq!(weights.len(), self.edges.len());
        for (e, &w) in self.edges.iter_mut().zip(weights) {
            e.weight = w;
        }
    }

    fn check_canonical(&self) -> Result<()> {
        let ok = self.edges.windows(2).all(|w| (w[0].src, w[0].dst) <= (w[1].src, w[1].dst));
        let endpoints_ok = self
            .edges
            .iter()
            .all(|e| e.src < self.n_nodes() && e.dst < self.n_nodes() && e.delay_ticks >= 1);
        if !ok {
            return Err(Error::Malformed { what: "network", detail: "edges not in canonical (src, dst) order".into() });
        }
        if !endpoints_ok {
            return Err(Error::Malformed { what: "network", detail: "edge endpoint or delay out of range".into() });
        }
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Malformed { what: "network json", detail: e.to_string() })?;
        fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let net: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Malformed { what: "network json", detail: e.to_string() })?;
        if net.version != NETWORK_FORMAT_VERSION {
            return Err(Error::NetworkVersion { path: path.display().to_string(), version: net.version });
        }
        net.check_canonical()?;
        Ok(net)
    }

    /// Recompute all delays from current positions and the given velocity.
    pub fn recompute_delays(&mut self, velocity: T) {
        let v = velocity.to_f64_c();
        for e in &mut self.edges {
            let d = distance(&self.nodes[e.src as usize].position, &self.nodes[e.dst as usize].position);
            e.delay_ticks = delay_ticks_for(d, v);
        }
    }
}

pub fn distance<T: Real>(a: &[T; 3], b: &[T; 3]) -> f64 {
    let mut acc = 0.0;
    for k in 0..3 {
        let d = a[k].to_f64_c() - b[k].to_f64_c();
        acc += d * d;
    }
    acc.sqrt()
}

/// distance/velocity, quantized up to the tick grid, with a 1-tick floor.
pub fn delay_ticks_for(dist: f64, velocity: f64) -> u32 {
    let ticks = (dist / velocity * TICKS_PER_MS).ceil() as u32;
    ticks.max(1)
}

/// Two-block stochastic block model: directed input->hidden edges with
/// probability `p_between`, hidden->hidden with `p_in_hidden`, no edges into
/// the input block.
pub fn build_sbm<T: Real>(
    n_input: u32,
    n_hidden: u32,
    p_in_hidden: f64,
    p_between: f64,
    physiology: &PhysiologyConfig<T>,
    seed: u64,
) -> Result<GeometricNetwork<T>> {
    physiology.validate()?;
    let n = n_input + n_hidden;
    let mut rng = stream_rng(seed, streams::NET_TOPOLOGY);
    let mut edges = Vec::new();
    for src in 0..n_input {
        for dst in n_input..n {
            if rng.gen::<f64>() < p_between {
                edges.push((src, dst));
            }
        }
    }
    for src in n_input..n {
        for dst in n_input..n {
            if src == dst && !physiology.self_loops {
                continue;
            }
            if rng.gen::<f64>() < p_in_hidden {
                edges.push((src, dst));
            }
        }
    }
    Ok(finish_network(Layout::Sbm, n_input, n, edges, physiology, seed))
}

/// Input + recurrent reservoir: all 784 input nodes project to every
/// recurrent node; the recurrent block is all-to-all directed (self-loops
/// only if enabled).
pub fn build_reservoir<T: Real>(
    n_recurrent: u32,
    physiology: &PhysiologyConfig<T>,
    seed: u64,
) -> Result<GeometricNetwork<T>> {
    physiology.validate()?;
    let n_input = IMAGE_PIXELS as u32;
    let n = n_input + n_recurrent;
    let mut edges = Vec::with_capacity((n_input * n_recurrent) as usize);
    for src in 0..n_input {
        for dst in n_input..n {
            edges.push((src, dst));
        }
    }
    for src in n_input..n {
        for dst in n_input..n {
            if src == dst && !physiology.self_loops {
                continue;
            }
            edges.push((src, dst));
        }
    }
    Ok(finish_network(Layout::Reservoir, n_input, n, edges, physiology, seed))
}

fn finish_network<T: Real>(
    layout: Layout,
    n_input: u32,
    n: u32,
    edge_list: Vec<(u32, u32)>,
    physiology: &PhysiologyConfig<T>,
    seed: u64,
) -> GeometricNetwork<T> {
    let nodes = (0..n)
        .map(|id| NodeSpec {
            id,
            position: [T::zero(); 3],
            refractory_ms: physiology.refractory_ms,
            threshold: physiology.threshold,
        })
        .collect();
    let edges = edge_list
        .into_iter()
        .map(|(src, dst)| EdgeSpec { src, dst, weight: T::zero(), delay_ticks: 1 })
        .collect();
    let mut net = GeometricNetwork {
        version: NETWORK_FORMAT_VERSION,
        layout,
        seed,
        n_input,
        physiology: physiology.clone(),
        nodes,
        edges,
    };
    apply_physiology(&mut net, physiology, seed);
    net
}

/// Re-roll positions, weights and delays on an existing topology.
pub fn assign_physiology<T: Real>(
    net: &mut GeometricNetwork<T>,
    params: &PhysiologyConfig<T>,
    seed: u64,
) -> Result<()> {
    params.validate()?;
    apply_physiology(net, params, seed);
    net.physiology = params.clone();
    Ok(())
}

fn apply_physiology<T: Real>(net: &mut GeometricNetwork<T>, params: &PhysiologyConfig<T>, seed: u64) {
    let mut rng = stream_rng(seed, streams::NET_PHYSIOLOGY);
    for node in &mut net.nodes {
        let p = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        node.position = [T::from_f64_c(p[0]), T::from_f64_c(p[1]), T::from_f64_c(p[2])];
        node.refractory_ms = params.refractory_ms;
        node.threshold = params.threshold;
    }
    let w_lo = params.w_lo.to_f64_c();
    let w_hi = params.w_hi.to_f64_c();
    let velocity = params.velocity.to_f64_c();
    let n_input = net.n_input;
    for e in &mut net.edges {
        let excitatory = rng.gen::<f64>() < params.excitatory_fraction;
        let magnitude = rng.gen_range(w_lo..w_hi);
        let scale = if e.src < n_input { params.input_weight_scale } else { params.recurrent_weight_scale };
        let signed = if excitatory { magnitude } else { -magnitude };
        e.weight = T::from_f64_c(signed) * scale;
        let d = distance(&net.nodes[e.src as usize].position, &net.nodes[e.dst as usize].position);
        e.delay_ticks = delay_ticks_for(d, velocity);
    }
}
