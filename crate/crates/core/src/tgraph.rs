//! Temporal graphs: the causal structure of one activation trace, and the
//! time-respecting walks through it that become embedding documents.
//!
//! An arc connects the activation event that emitted an impulse to the event
//! that lists the impulse's edge as a contributor; time strictly increases
//! along every arc because delays are at least one tick.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::netgen::GeometricNetwork;
use crate::scalar::Real;
use crate::trace::ActivationTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    pub node_of_event: Vec<u32>,
    pub tick_of_event: Vec<u64>,
    /// Out-arcs per event: (edge id, target event), sorted by (target, edge).
    pub arcs: Vec<Vec<(u32, u32)>>,
    /// Event indices of stimulus-driven input-block events.
    pub sources: Vec<u32>,
}

impl TemporalGraph {
    pub fn n_events(&self) -> usize {
        self.node_of_event.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn in_degree(&self, event: u32) -> usize {
        self.arcs.iter().flatten().filter(|&&(_, dst)| dst == event).count()
    }
}

/// Build the causal multigraph of a trace. A contributor edge of an event at
/// time T was buffered from an impulse that arrived at some tick in the
/// summation window ending at T, so its source is the latest activation of
/// the edge's source node whose emission arrives no later than T.
pub fn extract_temporal_graph<T: Real>(trace: &ActivationTrace, net: &GeometricNetwork<T>) -> TemporalGraph {
    let n = trace.events.len();
    let mut events_of_node: HashMap<u32, Vec<(u64, u32)>> = HashMap::new();
    for (i, e) in trace.events.iter().enumerate() {
        events_of_node.entry(e.node).or_default().push((e.tick, i as u32));
    }
    let mut arcs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for (i, e) in trace.events.iter().enumerate() {
        for &edge in &e.contributors {
            let spec = &net.edges[edge as usize];
            let Some(latest_src_tick) = e.tick.checked_sub(spec.delay_ticks as u64) else {
                debug_assert!(false, "contributor precedes t = 0");
                continue;
            };
            let src_events = events_of_node.get(&spec.src);
            let found = src_events.and_then(|evs| {
                // evs is tick-sorted; latest firing with tick <= latest_src_tick
                let pos = evs.partition_point(|&(t, _)| t <= latest_src_tick);
                (pos > 0).then(|| evs[pos - 1].1)
            });
            match found {
                Some(j) => arcs[j as usize].push((edge, i as u32)),
                None => debug_assert!(false, "no source activation for contributor edge {edge}"),
            }
        }
    }
    for a in &mut arcs {
        a.sort_unstable_by_key(|&(edge, dst)| (dst, edge));
    }
    let sources = trace
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.contributors.is_empty() && e.node < net.n_input)
        .map(|(i, _)| i as u32)
        .collect();
    TemporalGraph {
        node_of_event: trace.events.iter().map(|e| e.node).collect(),
        tick_of_event: trace.events.iter().map(|e| e.tick).collect(),
        arcs,
        sources,
    }
}

/// All maximal time-respecting walks from stimulus events, as node-id
/// sequences, truncated at `max_len` nodes. `max_paths` bounds the output
/// (enumeration order is deterministic, so the prefix kept is too).
/// Walks that never leave their source are dropped.
pub fn enumerate_paths(g: &TemporalGraph, max_len: usize, max_paths: Option<usize>) -> Result<Vec<Vec<u32>>> {
    if max_len < 2 {
        return Err(Error::Config(format!("max_len must be at least 2, got {max_len}")));
    }
    let cap = max_paths.unwrap_or(usize::MAX);
    let mut paths = Vec::new();
    let mut stack: Vec<u32> = Vec::with_capacity(max_len);
    for &s in &g.sources {
        if paths.len() >= cap {
            break;
        }
        stack.push(s);
        dfs(g, max_len, cap, &mut stack, &mut paths);
        stack.pop();
    }
    Ok(paths)
}

fn dfs(g: &TemporalGraph, max_len: usize, cap: usize, stack: &mut Vec<u32>, paths: &mut Vec<Vec<u32>>) {
    if paths.len() >= cap {
        return;
    }
    let here = *stack.last().unwrap();
    let out = &g.arcs[here as usize];
    if stack.len() == max_len || out.is_empty() {
        if stack.len() >= 2 {
            paths.push(stack.iter().map(|&ev| g.node_of_event[ev as usize]).collect());
        }
        return;
    }
    for &(_, next) in out {
        stack.push(next);
        dfs(g, max_len, cap, stack, paths);
        stack.pop();
        if paths.len() >= cap {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{EdgeSpec, GeometricNetwork, Layout, NodeSpec, PhysiologyConfig};
    use crate::trace::ActivationEvent;

    fn net_with_edges(n_input: u32, n_total: u32, edges: &[(u32, u32, u32)]) -> GeometricNetwork<f64> {
        let nodes = (0..n_total)
            .map(|id| NodeSpec { id, position: [0.0; 3], refractory_ms: 5.0, threshold: 1.0 })
            .collect();
        let mut es: Vec<EdgeSpec<f64>> = edges
            .iter()
            .map(|&(src, dst, delay_ticks)| EdgeSpec { src, dst, weight: 1.0, delay_ticks })
            .collect();
        es.sort_by_key(|e| (e.src, e.dst));
        GeometricNetwork {
            version: 1,
            layout: Layout::Sbm,
            seed: 0,
            n_input,
            physiology: PhysiologyConfig::default(),
            nodes,
            edges: es,
        }
    }

    fn trace(events: Vec<(u32, u64, Vec<u32>)>) -> ActivationTrace {
        ActivationTrace {
            stimulus_id: "t".into(),
            horizon_ticks: 1000,
            events: events
                .into_iter()
                .map(|(node, tick, contributors)| ActivationEvent { node, tick, contributors })
                .collect(),
        }
    }

    #[test]
    fn empty_trace_empty_graph() {
        let net = net_with_edges(1, 2, &[(0, 1, 10)]);
        let g = extract_temporal_graph(&trace(vec![]), &net);
        assert_eq!(g.n_events(), 0);
        assert_eq!(g.n_arcs(), 0);
        assert!(enumerate_paths(&g, 10, None).unwrap().is_empty());
    }

    #[test]
    fn chain_gives_one_path() {
        // a(0) -> b(30) -> c(70); edges a-b delay 30, b-c delay 40
        let net = net_with_edges(1, 3, &[(0, 1, 30), (1, 2, 40)]);
        let t = trace(vec![(0, 0, vec![]), (1, 30, vec![0]), (2, 70, vec![1])]);
        let g = extract_temporal_graph(&t, &net);
        assert_eq!(g.n_arcs(), 2);
        assert_eq!(g.sources, vec![0]);
        let paths = enumerate_paths(&g, 10, None).unwrap();
        assert_eq!(paths, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn diamond_has_in_degree_two_and_two_paths() {
        // a -> {b, c} -> d; d lists both incoming edges
        // edges: (0,1,30), (0,2,30), (1,3,20), (2,3,20)
        let net = net_with_edges(1, 4, &[(0, 1, 30), (0, 2, 30), (1, 3, 20), (2, 3, 20)]);
        let t = trace(vec![
            (0, 0, vec![]),
            (1, 30, vec![0]),
            (2, 30, vec![1]),
            (3, 50, vec![2, 3]),
        ]);
        let g = extract_temporal_graph(&t, &net);
        assert_eq!(g.in_degree(3), 2);
        let paths = enumerate_paths(&g, 10, None).unwrap();
        assert_eq!(paths, vec![vec![0, 1, 3], vec![0, 2, 3]]);
    }

    #[test]
    fn time_strictly_increases_along_arcs() {
        let net = net_with_edges(1, 4, &[(0, 1, 30), (0, 2, 30), (1, 3, 20), (2, 3, 20)]);
        let t = trace(vec![
            (0, 0, vec![]),
            (1, 30, vec![0]),
            (2, 30, vec![1]),
            (3, 50, vec![2, 3]),
        ]);
        let g = extract_temporal_graph(&t, &net);
        for (src, out) in g.arcs.iter().enumerate() {
            for &(_, dst) in out {
                assert!(g.tick_of_event[dst as usize] > g.tick_of_event[src]);
            }
        }
    }

    #[test]
    fn max_len_truncates() {
        let net = net_with_edges(1, 5, &[(0, 1, 10), (1, 2, 10), (2, 3, 10), (3, 4, 10)]);
        let t = trace(vec![
            (0, 0, vec![]),
            (1, 10, vec![0]),
            (2, 20, vec![1]),
            (3, 30, vec![2]),
            (4, 40, vec![3]),
        ]);
        let g = extract_temporal_graph(&t, &net);
        let paths = enumerate_paths(&g, 3, None).unwrap();
        assert_eq!(paths, vec![vec![0, 1, 2]]);
        assert!(enumerate_paths(&g, 1, None).is_err());
    }

    #[test]
    fn max_paths_caps_deterministic_prefix() {
        let net = net_with_edges(1, 4, &[(0, 1, 30), (0, 2, 30), (1, 3, 20), (2, 3, 20)]);
        let t = trace(vec![
            (0, 0, vec![]),
            (1, 30, vec![0]),
            (2, 30, vec![1]),
            (3, 50, vec![2, 3]),
        ]);
        let g = extract_temporal_graph(&t, &net);
        let all = enumerate_paths(&g, 10, None).unwrap();
        let capped = enumerate_paths(&g, 10, Some(1)).unwrap();
        assert_eq!(capped.as_slice(), &all[..1]);
    }
}
