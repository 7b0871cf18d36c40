//! Deterministic event-driven simulation of competitive-refractory dynamics.
//!
//! Impulses travel along edges with integer-tick delays and land in a
//! per-node sliding summation window. A node fires the instant an arriving
//! impulse lifts its in-window signed sum to threshold while the node is not
//! refractory; firing clears the window, starts the refractory period, and
//! emits impulses on every outgoing edge with the weight at emission time.
//! Impulses arriving during refractoriness are the losers of the timing
//! competition: they are recorded as arrivals (STDP still sees them) but
//! never buffered.
//!
//! The queue is a bucket per tick, drained in (dst, src, edge) order, which
//! fixes the tie-break and makes runs bit-reproducible.

use crate::error::{Error, Result};
use crate::mnist::ActivePixelSet;
use crate::netgen::GeometricNetwork;
use crate::plasticity::{clamp_weight, stdp_delta, StdpParams, WeightTrajectory};
use crate::scalar::Real;
use crate::time::{ms_to_ticks, ticks_to_ms};
use crate::trace::{ActivationEvent, ActivationTrace};

#[derive(Debug, Clone, PartialEq)]
pub enum StimulusMode {
    /// One synchronous volley at t = 0.
    SingleVolley,
    /// A volley at t = 0 and every `period_ms` thereafter, up to the horizon.
    Tonic { period_ms: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSchedule {
    pub pixels: ActivePixelSet,
    pub mode: StimulusMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineParams {
    pub horizon_ms: f64,
    pub summation_window_ms: f64,
    /// Cap on event-loop iterations (impulse deliveries).
    pub max_steps: Option<u64>,
    /// Cap on activation events.
    pub max_events: Option<u64>,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self { horizon_ms: 600.0, summation_window_ms: 2.0, max_steps: None, max_events: None }
    }
}

/// Which edges plasticity may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdpScope {
    #[default]
    All,
    /// Only edges within the hidden/recurrent block adapt; input projections
    /// stay fixed, keeping the drive pattern stationary across volleys.
    RecurrentOnly,
}

/// Optional per-run attachments: online STDP and the weight snapshot clock.
#[derive(Debug, Clone)]
pub struct RunHooks<T: Real> {
    pub stdp: Option<StdpParams<T>>,
    pub stdp_scope: StdpScope,
    /// Record recurrent-layer weights at this interval (must divide the horizon).
    pub snapshot_every_ms: Option<f64>,
    /// Skip trace event recording (weights-only runs).
    pub skip_trace: bool,
}

impl<T: Real> Default for RunHooks<T> {
    fn default() -> Self {
        Self { stdp: None, stdp_scope: StdpScope::All, snapshot_every_ms: None, skip_trace: false }
    }
}

impl<T: Real> RunHooks<T> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_stdp(params: StdpParams<T>) -> Self {
        Self { stdp: Some(params), ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T: Real> {
    pub trace: ActivationTrace,
    pub trajectory: Option<WeightTrajectory<T>>,
    /// Weights of all edges after the run, canonical order.
    pub final_weights: Vec<T>,
    /// Event-loop iterations consumed (impulse deliveries).
    pub steps: u64,
    /// True when a step or event cap ended the run before the horizon.
    pub halted: bool,
}

struct QueuedImpulse<T> {
    dst: u32,
    src: u32,
    edge: u32,
    magnitude: T,
}

/// Reusable simulator over one immutable network: topology indexes are built
/// once, each `run` gets a private weight copy.
pub struct Simulator<'n, T: Real> {
    net: &'n GeometricNetwork<T>,
    edge_dst: Vec<u32>,
    edge_delay: Vec<u32>,
    out_offsets: Vec<u32>,
    out_edges: Vec<u32>,
    in_offsets: Vec<u32>,
    in_edges: Vec<u32>,
    recurrent_edges: Vec<u32>,
    thresholds: Vec<T>,
    refractory_ticks: Vec<u64>,
    base_weights: Vec<T>,
}

impl<'n, T: Real> Simulator<'n, T> {
    pub fn new(net: &'n GeometricNetwork<T>) -> Result<Self> {
        let n = net.n_nodes() as usize;
        let m = net.edges.len();
        let mut out_counts = vec![0u32; n];
        let mut in_counts = vec![0u32; n];
        for e in &net.edges {
            out_counts[e.src as usize] += 1;
            in_counts[e.dst as usize] += 1;
        }
        let mut out_offsets = vec![0u32; n + 1];
        let mut in_offsets = vec![0u32; n + 1];
        for i in 0..n {
            out_offsets[i + 1] = out_offsets[i] + out_counts[i];
            in_offsets[i + 1] = in_offsets[i] + in_counts[i];
        }
        let mut out_edges = vec![0u32; m];
        let mut in_edges = vec![0u32; m];
        let mut out_fill = out_offsets.clone();
        let mut in_fill = in_offsets.clone();
        for (id, e) in net.edges.iter().enumerate() {
            out_edges[out_fill[e.src as usize] as usize] = id as u32;
            out_fill[e.src as usize] += 1;
            in_edges[in_fill[e.dst as usize] as usize] = id as u32;
            in_fill[e.dst as usize] += 1;
        }
        let thresholds = net.nodes.iter().map(|s| s.threshold).collect();
        let refractory_ticks = net
            .nodes
            .iter()
            .map(|s| ms_to_ticks("refractory period", s.refractory_ms.to_f64_c()))
            .collect::<Result<Vec<u64>>>()?;
        Ok(Self {
            net,
            edge_dst: net.edges.iter().map(|e| e.dst).collect(),
            edge_delay: net.edges.iter().map(|e| e.delay_ticks).collect(),
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
            recurrent_edges: net.recurrent_edge_ids(),
            thresholds,
            refractory_ticks,
            base_weights: net.weights(),
        })
    }

    pub fn network(&self) -> &GeometricNetwork<T> {
        self.net
    }

    fn out_of(&self, node: u32) -> &[u32] {
        &self.out_edges[self.out_offsets[node as usize] as usize..self.out_offsets[node as usize + 1] as usize]
    }

    fn in_of(&self, node: u32) -> &[u32] {
        &self.in_edges[self.in_offsets[node as usize] as usize..self.in_offsets[node as usize + 1] as usize]
    }

    /// Run one stimulation. Deterministic: identical inputs give a
    /// byte-identical trace and weights.
    pub fn run(
        &self,
        schedule: &StimulusSchedule,
        params: &EngineParams,
        hooks: &RunHooks<T>,
        stimulus_id: &str,
    ) -> Result<RunOutcome<T>> {
        self.run_with_weights(&self.base_weights, schedule, params, hooks, stimulus_id)
    }

    /// Like [`Self::run`] but starting from the given weights instead of the
    /// network's (for sequential plasticity accumulation across stimuli).
    pub fn run_with_weights(
        &self,
        initial_weights: &[T],
        schedule: &StimulusSchedule,
        params: &EngineParams,
        hooks: &RunHooks<T>,
        stimulus_id: &str,
    ) -> Result<RunOutcome<T>> {
        let horizon = ms_to_ticks("horizon", params.horizon_ms)?;
        let window = ms_to_ticks("summation window", params.summation_window_ms)?;
        if let Some(&bad) = schedule.pixels.indices().iter().find(|&&p| p as u32 >= self.net.n_input) {
            return Err(Error::PixelOutOfRange { pixel: bad, n_input: self.net.n_input });
        }
        let volley_period = match schedule.mode {
            StimulusMode::SingleVolley => None,
            StimulusMode::Tonic { period_ms } => Some(ms_to_ticks("tonic period", period_ms)?),
        };
        let snapshot_every = match hooks.snapshot_every_ms {
            None => None,
            Some(ms) => {
                let every = ms_to_ticks("snapshot interval", ms)?;
                if horizon % every != 0 {
                    return Err(Error::SnapshotInterval { every_ms: ms, horizon_ms: params.horizon_ms });
                }
                Some(every)
            }
        };
        if let Some(stdp) = &hooks.stdp {
            stdp.validate()?;
        }
        assert_eq!(initial_weights.len(), self.net.edges.len());

        let mut state = RunState::new(self, initial_weights, horizon, hooks);
        let mut steps: u64 = 0;
        let mut halted = false;

        'ticks: for tick in 0..=horizon {
            let volley_now = match volley_period {
                None => tick == 0,
                Some(p) => tick % p == 0,
            };
            if volley_now {
                for &pixel in schedule.pixels.indices() {
                    state.force_fire(self, pixel as u32, tick);
                    if state.hit_event_cap(params) {
                        halted = true;
                        break 'ticks;
                    }
                }
            }
            let mut bucket = std::mem::take(&mut state.queue[tick as usize]);
            bucket.sort_unstable_by_key(|q| (q.dst, q.src, q.edge));
            for imp in &bucket {
                if let Some(cap) = params.max_steps {
                    if steps >= cap {
                        halted = true;
                        break 'ticks;
                    }
                }
                steps += 1;
                state.deliver(self, imp, tick, window);
                if state.hit_event_cap(params) {
                    halted = true;
                    break 'ticks;
                }
            }
            if let Some(every) = snapshot_every {
                if tick > 0 && tick % every == 0 {
                    state.record_snapshot(self, tick);
                }
            }
        }
        let trace = ActivationTrace {
            stimulus_id: stimulus_id.to_string(),
            horizon_ticks: horizon,
            events: state.events,
        };
        let trajectory = snapshot_every.map(|_| WeightTrajectory {
            stimulus_id: stimulus_id.to_string(),
            sample_ticks: state.snapshot_ticks,
            vectors: state.snapshots,
        });
        Ok(RunOutcome { trace, trajectory, final_weights: state.weights, steps, halted })
    }
}

/// Convenience one-off run; builds the topology index on the fly.
pub fn run_once<T: Real>(
    net: &GeometricNetwork<T>,
    schedule: &StimulusSchedule,
    params: &EngineParams,
    hooks: &RunHooks<T>,
    stimulus_id: &str,
) -> Result<RunOutcome<T>> {
    Simulator::new(net)?.run(schedule, params, hooks, stimulus_id)
}

const NEVER: u64 = u64::MAX;

struct StdpRun<T> {
    a_plus_by_dt: Vec<T>,
    a_minus_by_dt: Vec<T>,
    w_max: T,
    /// Edge ids below this are exempt (canonical order puts input-block
    /// edges first).
    first_adaptable_edge: u32,
    last_arrival: Vec<u64>,
    last_post: Vec<u64>,
}

struct RunState<'h, T: Real> {
    weights: Vec<T>,
    queue: Vec<Vec<QueuedImpulse<T>>>,
    refractory_until: Vec<u64>,
    buffers: Vec<Vec<(u64, u32, T)>>,
    events: Vec<ActivationEvent>,
    event_count: u64,
    stdp: Option<StdpRun<T>>,
    snapshots: Vec<Vec<T>>,
    snapshot_ticks: Vec<u64>,
    horizon: u64,
    hooks: &'h RunHooks<T>,
}

impl<'h, T: Real> RunState<'h, T> {
    fn new(sim: &Simulator<T>, initial_weights: &[T], horizon: u64, hooks: &'h RunHooks<T>) -> Self {
        let n = sim.net.n_nodes() as usize;
        let stdp = hooks.stdp.as_ref().map(|p| {
            // dt-indexed lookup tables over the pairing cutoff; entry 0 is
            // the dt = 0 tie (no change)
            let cut_plus = (p.tau_plus_ms.to_f64_c() * p.cutoff_factor / crate::time::TICK_MS).ceil() as u64;
            let cut_minus = (p.tau_minus_ms.to_f64_c() * p.cutoff_factor / crate::time::TICK_MS).ceil() as u64;
            let a_plus_by_dt: Vec<T> = (0..=cut_plus)
                .map(|d| stdp_delta(T::from_f64_c(ticks_to_ms(d)), p))
                .collect();
            let a_minus_by_dt: Vec<T> = (0..=cut_minus)
                .map(|d| stdp_delta(-T::from_f64_c(ticks_to_ms(d)), p))
                .collect();
            let first_adaptable_edge = match hooks.stdp_scope {
                StdpScope::All => 0,
                StdpScope::RecurrentOnly => {
                    sim.net.edges.partition_point(|e| e.src < sim.net.n_input) as u32
                }
            };
            StdpRun {
                a_plus_by_dt,
                a_minus_by_dt,
                w_max: p.w_max,
                first_adaptable_edge,
                last_arrival: vec![NEVER; sim.net.edges.len()],
                last_post: vec![NEVER; n],
            }
        });
        Self {
            weights: initial_weights.to_vec(),
            queue: (0..=horizon).map(|_| Vec::new()).collect(),
            refractory_until: vec![0; n],
            buffers: vec![Vec::new(); n],
            events: Vec::new(),
            event_count: 0,
            stdp,
            snapshots: Vec::new(),
            snapshot_ticks: Vec::new(),
            horizon,
            hooks,
        }
    }

    fn hit_event_cap(&self, params: &EngineParams) -> bool {
        params.max_events.is_some_and(|cap| self.event_count >= cap)
    }

    fn emit(&mut self, sim: &Simulator<T>, node: u32, tick: u64) {
        for &e in sim.out_of(node) {
            let arrival = tick + sim.edge_delay[e as usize] as u64;
            if arrival <= self.horizon {
                self.queue[arrival as usize].push(QueuedImpulse {
                    dst: sim.edge_dst[e as usize],
                    src: node,
                    edge: e,
                    magnitude: self.weights[e as usize],
                });
            }
        }
    }

    fn record_event(&mut self, node: u32, tick: u64, contributors: Vec<u32>) {
        self.event_count += 1;
        if !self.hooks.skip_trace {
            self.events.push(ActivationEvent { node, tick, contributors });
        }
    }

    /// Stimulus-driven firing of an input node; respects refractoriness.
    fn force_fire(&mut self, sim: &Simulator<T>, node: u32, tick: u64) {
        if tick < self.refractory_until[node as usize] {
            return;
        }
        self.refractory_until[node as usize] = tick + sim.refractory_ticks[node as usize];
        self.buffers[node as usize].clear();
        self.potentiate_and_mark_post(sim, node, tick);
        self.record_event(node, tick, Vec::new());
        self.emit(sim, node, tick);
    }

    fn deliver(&mut self, sim: &Simulator<T>, imp: &QueuedImpulse<T>, tick: u64, window: u64) {
        let dst = imp.dst as usize;
        if let Some(stdp) = &mut self.stdp {
            stdp.last_arrival[imp.edge as usize] = tick;
            // post-before-pre pairing: depress against the target's last firing
            let lp = stdp.last_post[dst];
            if lp != NEVER && imp.edge >= stdp.first_adaptable_edge {
                let dt = tick - lp;
                if dt >= 1 && (dt as usize) < stdp.a_minus_by_dt.len() {
                    let w = &mut self.weights[imp.edge as usize];
                    *w = clamp_weight(*w + stdp.a_minus_by_dt[dt as usize], stdp.w_max);
                }
            }
        }
        if tick < self.refractory_until[dst] {
            return; // losing signal: discarded, not queued
        }
        let buf = &mut self.buffers[dst];
        if tick >= window {
            let cutoff = tick - window;
            buf.retain(|&(t, _, _)| t > cutoff);
        }
        let mut prefix = T::zero();
        for &(_, _, m) in buf.iter() {
            prefix += m;
        }
        buf.push((tick, imp.edge, imp.magnitude));
        let total = prefix + imp.magnitude;
        let threshold = sim.thresholds[dst];
        // first crossing only: the sum without the newest arrival must still
        // be below threshold, so expiry-revealed sums never fire
        if total >= threshold && prefix < threshold {
            let contributors: Vec<u32> = buf.iter().map(|&(_, e, _)| e).collect();
            buf.clear();
            self.refractory_until[dst] = tick + sim.refractory_ticks[dst];
            self.potentiate_and_mark_post(sim, imp.dst, tick);
            self.record_event(imp.dst, tick, contributors);
            self.emit(sim, imp.dst, tick);
        }
    }

    /// pre-before-post pairing on firing: potentiate every in-edge against
    /// its most recent presynaptic arrival (nearest neighbor), then mark the
    /// firing time.
    fn potentiate_and_mark_post(&mut self, sim: &Simulator<T>, node: u32, tick: u64) {
        if let Some(stdp) = &mut self.stdp {
            for &e in sim.in_of(node) {
                if e < stdp.first_adaptable_edge {
                    continue;
                }
                let la = stdp.last_arrival[e as usize];
                if la == NEVER {
                    continue;
                }
                let dt = tick - la;
                if dt >= 1 && (dt as usize) < stdp.a_plus_by_dt.len() {
                    let w = &mut self.weights[e as usize];
                    *w = clamp_weight(*w + stdp.a_plus_by_dt[dt as usize], stdp.w_max);
                }
            }
            stdp.last_post[node as usize] = tick;
        }
    }

    fn record_snapshot(&mut self, sim: &Simulator<T>, tick: u64) {
        let v: Vec<T> = sim.recurrent_edges.iter().map(|&e| self.weights[e as usize]).collect();
        self.snapshots.push(v);
        self.snapshot_ticks.push(tick);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{EdgeSpec, GeometricNetwork, Layout, NodeSpec, PhysiologyConfig};
    use approx::assert_relative_eq;

    /// Hand-built network: explicit nodes and (src, dst, weight, delay_ms) edges.
    fn manual_net(n_input: u32, n_total: u32, edges: &[(u32, u32, f64, f64)]) -> GeometricNetwork<f64> {
        let phys = PhysiologyConfig::<f64>::default();
        let nodes = (0..n_total)
            .map(|id| NodeSpec { id, position: [0.5; 3], refractory_ms: 5.0, threshold: 1.0 })
            .collect();
        let mut es: Vec<EdgeSpec<f64>> = edges
            .iter()
            .map(|&(src, dst, weight, delay_ms)| EdgeSpec {
                src,
                dst,
                weight,
                delay_ticks: (delay_ms * 10.0).round() as u32,
            })
            .collect();
        es.sort_by_key(|e| (e.src, e.dst));
        GeometricNetwork {
            version: 1,
            layout: Layout::Sbm,
            seed: 0,
            n_input,
            physiology: phys,
            nodes,
            edges: es,
        }
    }

    fn volley(pixels: &[u16]) -> StimulusSchedule {
        StimulusSchedule {
            pixels: ActivePixelSet::new(pixels.to_vec()).unwrap(),
            mode: StimulusMode::SingleVolley,
        }
    }

    fn params(horizon_ms: f64) -> EngineParams {
        EngineParams { horizon_ms, summation_window_ms: 2.0, max_steps: None, max_events: None }
    }

    #[test]
    fn single_edge_causality() {
        // one edge, 3 ms delay, weight over threshold: target fires at exactly 3 ms
        let net = manual_net(1, 2, &[(0, 1, 1.5, 3.0)]);
        let out = run_once(&net, &volley(&[0]), &params(20.0), &RunHooks::none(), "t").unwrap();
        let hidden: Vec<_> = out.trace.events_of(1).collect();
        assert_eq!(hidden.len(), 1);
        assert_eq!(hidden[0].tick, 30);
        assert_eq!(hidden[0].contributors, vec![0]);
    }

    #[test]
    fn refractory_exclusion_single_activation() {
        // volleys at 0 and 1 ms drive two arrivals; the target (refractory 5 ms)
        // fires once
        let net = manual_net(1, 2, &[(0, 1, 1.5, 3.0)]);
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(vec![0]).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 1.0 },
        };
        let mut p = params(6.0);
        p.horizon_ms = 6.0;
        let out = run_once(&net, &schedule, &p, &RunHooks::none(), "t").unwrap();
        // source fires at 0 and 5 ms (refractory 5 ms suppresses volleys 1..4);
        // arrivals at 3 and 8 ms; 8 ms exceeds horizon 6 ms
        let hidden: Vec<_> = out.trace.events_of(1).collect();
        assert_eq!(hidden.len(), 1);
        assert_eq!(hidden[0].tick, 30);
    }

    #[test]
    fn summation_window_hand_trace() {
        // three inputs at 0.5 * threshold; arrivals at 3.0, 3.1, 9.0 ms;
        // activation at 3.1 with the first two contributing, none at 9.0
        let net = manual_net(3, 4, &[(0, 3, 0.5, 3.0), (1, 3, 0.5, 3.1), (2, 3, 0.5, 9.0)]);
        let out = run_once(&net, &volley(&[0, 1, 2]), &params(20.0), &RunHooks::none(), "t").unwrap();
        let hidden: Vec<_> = out.trace.events_of(3).collect();
        assert_eq!(hidden.len(), 1);
        assert_eq!(hidden[0].tick, 31);
        assert_eq!(hidden[0].contributors.len(), 2);
        assert_eq!(hidden[0].contributors, vec![0, 1]);
    }

    #[test]
    fn window_expiry_drops_stale_impulses() {
        // arrivals at 3.0 and 5.5 ms with a 2 ms window never sum
        let net = manual_net(2, 3, &[(0, 2, 0.6, 3.0), (1, 2, 0.6, 5.5)]);
        let out = run_once(&net, &volley(&[0, 1]), &params(20.0), &RunHooks::none(), "t").unwrap();
        assert_eq!(out.trace.events_of(2).count(), 0);
    }

    #[test]
    fn inhibition_subtracts_within_window() {
        // +0.7 at 3.0, -0.5 at 3.1, +0.7 at 3.2: sum stays below 1.0 until the
        // third arrival (0.9 + 0.7 = 1.6 >= 1.0? no: 0.7 - 0.5 + 0.7 = 0.9);
        // a fourth at 3.3 crosses
        let net = manual_net(
            4,
            5,
            &[(0, 4, 0.7, 3.0), (1, 4, -0.5, 3.1), (2, 4, 0.7, 3.2), (3, 4, 0.7, 3.3)],
        );
        let out = run_once(&net, &volley(&[0, 1, 2, 3]), &params(20.0), &RunHooks::none(), "t").unwrap();
        let hidden: Vec<_> = out.trace.events_of(4).collect();
        assert_eq!(hidden.len(), 1);
        assert_eq!(hidden[0].tick, 33);
        assert_eq!(hidden[0].contributors.len(), 4);
    }

    #[test]
    fn tie_break_is_src_order_and_first_crossing() {
        // two impulses arrive the same tick; delivery order is by src id, the
        // second one crosses
        let net = manual_net(2, 3, &[(0, 2, 0.6, 3.0), (1, 2, 0.6, 3.0)]);
        let out = run_once(&net, &volley(&[0, 1]), &params(10.0), &RunHooks::none(), "t").unwrap();
        let hidden: Vec<_> = out.trace.events_of(2).collect();
        assert_eq!(hidden.len(), 1);
        assert_eq!(hidden[0].contributors, vec![0, 1]);
    }

    #[test]
    fn horizon_not_tick_aligned_rejected() {
        let net = manual_net(1, 2, &[(0, 1, 1.5, 3.0)]);
        let mut p = params(10.0);
        p.horizon_ms = 10.05;
        assert!(matches!(
            run_once(&net, &volley(&[0]), &p, &RunHooks::none(), "t"),
            Err(Error::NotTickAligned { .. })
        ));
    }

    #[test]
    fn pixel_outside_input_block_rejected() {
        let net = manual_net(2, 3, &[(0, 2, 1.5, 3.0)]);
        assert!(matches!(
            run_once(&net, &volley(&[2]), &params(10.0), &RunHooks::none(), "t"),
            Err(Error::PixelOutOfRange { .. })
        ));
    }

    #[test]
    fn max_steps_caps_deliveries() {
        let net = manual_net(1, 2, &[(0, 1, 1.5, 3.0)]);
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(vec![0]).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 5.0 },
        };
        let mut p = params(100.0);
        p.max_steps = Some(3);
        let out = run_once(&net, &schedule, &p, &RunHooks::none(), "t").unwrap();
        assert_eq!(out.steps, 3);
    }

    #[test]
    fn determinism_byte_identical_traces() {
        let phys = PhysiologyConfig::<f64>::default();
        let net = crate::netgen::build_sbm(30, 20, 0.4, 0.3, &phys, 5).unwrap();
        let pixels: Vec<u16> = (0..30).step_by(2).collect();
        let schedule = volley(&pixels);
        let a = run_once(&net, &schedule, &params(50.0), &RunHooks::none(), "t").unwrap();
        let b = run_once(&net, &schedule, &params(50.0), &RunHooks::none(), "t").unwrap();
        assert_eq!(a.trace.to_binary(), b.trace.to_binary());
        assert_eq!(a.final_weights, b.final_weights);
    }

    #[test]
    fn refractory_invariant_on_dense_run() {
        let phys = PhysiologyConfig::<f64>::default();
        let net = crate::netgen::build_sbm(40, 30, 0.5, 0.4, &phys, 9).unwrap();
        let pixels: Vec<u16> = (0..40).collect();
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(pixels).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 10.0 },
        };
        let out = run_once(&net, &schedule, &params(100.0), &RunHooks::none(), "t").unwrap();
        assert!(!out.trace.events.is_empty());
        let mut last: std::collections::HashMap<u32, u64> = Default::default();
        for e in &out.trace.events {
            if let Some(&prev) = last.get(&e.node) {
                assert!(e.tick - prev >= 50, "node {} refired after {} ticks", e.node, e.tick - prev);
            }
            last.insert(e.node, e.tick);
        }
    }

    #[test]
    fn stdp_potentiation_hand_trace() {
        // pre arrives at 3 ms (volley at 0, delay 3); a strong second input
        // forces the target to fire at 5 ms; the weak edge is potentiated by
        // stdp_delta(+2 ms)
        let net = manual_net(2, 3, &[(0, 2, 0.5, 3.0), (1, 2, 1.5, 5.0)]);
        let stdp = StdpParams::<f64>::default();
        let hooks = RunHooks::with_stdp(stdp.clone());
        let out = run_once(&net, &volley(&[0, 1]), &params(20.0), &hooks, "t").unwrap();
        let fire: Vec<_> = out.trace.events_of(2).collect();
        assert_eq!(fire.len(), 1);
        assert_eq!(fire[0].tick, 50);
        let expected = 0.5 + stdp_delta(2.0, &stdp);
        assert_relative_eq!(out.final_weights[0], expected, max_relative = 1e-12);
    }

    #[test]
    fn stdp_depression_hand_trace() {
        // target fires at 3 ms; a late arrival at 5 ms on the other edge is
        // depressed by stdp_delta(-2 ms)
        let net = manual_net(2, 3, &[(0, 2, 1.5, 3.0), (1, 2, 0.5, 5.0)]);
        let stdp = StdpParams::<f64>::default();
        let hooks = RunHooks::with_stdp(stdp.clone());
        let out = run_once(&net, &volley(&[0, 1]), &params(20.0), &hooks, "t").unwrap();
        let expected = 0.5 + stdp_delta(-2.0, &stdp);
        let edge1 = net.edges.iter().position(|e| e.src == 1).unwrap();
        assert_relative_eq!(out.final_weights[edge1], expected, max_relative = 1e-12);
    }

    #[test]
    fn stdp_no_activity_no_change() {
        let net = manual_net(2, 3, &[(0, 2, 0.5, 3.0), (1, 2, 0.5, 5.0)]);
        let hooks = RunHooks::with_stdp(StdpParams::default());
        // no pixels stimulated at all
        let out = run_once(
            &net,
            &StimulusSchedule {
                pixels: ActivePixelSet::new(vec![]).unwrap(),
                mode: StimulusMode::SingleVolley,
            },
            &params(20.0),
            &hooks,
            "t",
        )
        .unwrap();
        assert_eq!(out.final_weights, net.weights());
        assert!(out.trace.events.is_empty());
    }

    #[test]
    fn stdp_repeated_depression_crosses_zero_and_clamps() {
        // tonic drive: target fires off edge 0 at t, then edge 1's impulse
        // lands 2 ms later and is depressed every cycle; weight walks through
        // zero and is floored at -w_max
        let net = manual_net(2, 3, &[(0, 2, 1.5, 3.0), (1, 2, 0.05, 5.0)]);
        let mut stdp = StdpParams::<f64>::default();
        stdp.a_minus = 0.2;
        stdp.w_max = 0.5;
        let hooks = RunHooks::with_stdp(stdp);
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(vec![0, 1]).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 10.0 },
        };
        let out = run_once(&net, &schedule, &params(600.0), &hooks, "t").unwrap();
        let edge1 = net.edges.iter().position(|e| e.src == 1).unwrap();
        assert!(out.final_weights[edge1] < 0.0);
        assert!(out.final_weights[edge1] >= -0.5);
    }

    #[test]
    fn snapshot_clock_counts_and_final_equality() {
        let net = manual_net(1, 3, &[(0, 1, 1.5, 3.0), (0, 2, 1.5, 4.0), (1, 2, 0.5, 2.0), (2, 1, 0.5, 2.0)]);
        let mut hooks = RunHooks::with_stdp(StdpParams::default());
        hooks.snapshot_every_ms = Some(100.0);
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(vec![0]).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 10.0 },
        };
        let out = run_once(&net, &schedule, &params(600.0), &hooks, "t").unwrap();
        let traj = out.trajectory.unwrap();
        assert_eq!(traj.vectors.len(), 6);
        assert_eq!(traj.sample_ticks, vec![1000, 2000, 3000, 4000, 5000, 6000]);
        // final snapshot equals final recurrent weights exactly
        let rec = net.recurrent_edge_ids();
        let final_rec: Vec<f64> = rec.iter().map(|&e| out.final_weights[e as usize]).collect();
        assert_eq!(traj.vectors[5], final_rec);
    }

    #[test]
    fn snapshots_without_stdp_stay_at_initial_weights() {
        let net = manual_net(1, 3, &[(0, 1, 1.5, 3.0), (1, 2, 0.9, 2.0), (2, 1, 0.9, 2.0)]);
        let mut hooks = RunHooks::<f64>::none();
        hooks.snapshot_every_ms = Some(100.0);
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(vec![0]).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 10.0 },
        };
        let out = run_once(&net, &schedule, &params(600.0), &hooks, "t").unwrap();
        let traj = out.trajectory.unwrap();
        let rec = net.recurrent_edge_ids();
        let initial: Vec<f64> = rec.iter().map(|&e| net.edges[e as usize].weight).collect();
        for v in &traj.vectors {
            assert_eq!(v, &initial);
        }
    }

    #[test]
    fn snapshot_interval_must_divide_horizon() {
        let net = manual_net(1, 2, &[(0, 1, 1.5, 3.0)]);
        let mut hooks = RunHooks::<f64>::none();
        hooks.snapshot_every_ms = Some(70.0);
        assert!(matches!(
            run_once(&net, &volley(&[0]), &params(100.0), &hooks, "t"),
            Err(Error::SnapshotInterval { .. })
        ));
    }

    #[test]
    fn quiescence_reaches_late_volleys_under_tonic_drive() {
        let net = manual_net(1, 2, &[(0, 1, 1.5, 3.0)]);
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new(vec![0]).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 10.0 },
        };
        let out = run_once(&net, &schedule, &params(600.0), &RunHooks::none(), "t").unwrap();
        assert!(out.trace.quiescence_ms() >= 590.0);
    }

    #[test]
    fn event_count_bounded_by_refractory() {
        let phys = PhysiologyConfig::<f64>::default();
        let net = crate::netgen::build_sbm(20, 15, 0.6, 0.5, &phys, 3).unwrap();
        let schedule = StimulusSchedule {
            pixels: ActivePixelSet::new((0..20).collect()).unwrap(),
            mode: StimulusMode::Tonic { period_ms: 10.0 },
        };
        let horizon = 200.0;
        let out = run_once(&net, &schedule, &params(horizon), &RunHooks::none(), "t").unwrap();
        let bound = (horizon / 5.0).floor() as usize + 1;
        for node in 0..net.n_nodes() {
            let count = out.trace.events_of(node).count();
            assert!(count <= bound, "node {node} fired {count} > {bound}");
        }
    }
}
