//! The tripartite flow network (source -> jobs -> intervals -> sink) and
//! four interchangeable maximum-flow algorithms over one shared graph
//! representation: adjacency lists with paired forward/backward edge slots.
//!
//! Capacities are real-valued kWh. A network is mutated during a solve and
//! must stay on one thread; distinct networks solve concurrently.

mod algorithms;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FocsError;
use crate::instance::{Job, Timeline};
use crate::Result;

/// Relative tolerance under which a sink edge counts as saturated.
pub const SATURATION_REL_TOL: f64 = 1e-9;

/// The four maximum-flow subroutines the scheduler can run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaxFlowMethod {
    ShortestAugmentingPath,
    EdmondsKarp,
    PreflowPush,
    Dinitz,
}

impl MaxFlowMethod {
    pub const ALL: [MaxFlowMethod; 4] = [
        MaxFlowMethod::ShortestAugmentingPath,
        MaxFlowMethod::EdmondsKarp,
        MaxFlowMethod::PreflowPush,
        MaxFlowMethod::Dinitz,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            MaxFlowMethod::ShortestAugmentingPath => "sap",
            MaxFlowMethod::EdmondsKarp => "ek",
            MaxFlowMethod::PreflowPush => "pp",
            MaxFlowMethod::Dinitz => "dinitz",
        }
    }
}

impl FromStr for MaxFlowMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sap" => Ok(MaxFlowMethod::ShortestAugmentingPath),
            "ek" => Ok(MaxFlowMethod::EdmondsKarp),
            "pp" => Ok(MaxFlowMethod::PreflowPush),
            "dinitz" => Ok(MaxFlowMethod::Dinitz),
            other => Err(format!("unknown max-flow method `{other}` (expected sap|ek|pp|dinitz)")),
        }
    }
}

impl std::fmt::Display for MaxFlowMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone)]
struct EdgeSlot {
    to: u32,
}

/// A directed flow network. Edge slot `2k` is the forward direction of arc
/// `k`, slot `2k ^ 1` its residual twin with zero base capacity.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    slots: Vec<EdgeSlot>,
    caps: Vec<f64>,
    adj: Vec<Vec<u32>>,
    pub source: usize,
    pub sink: usize,
    /// Positive-residual threshold, scaled to the largest capacity.
    eps: f64,
    // Role maps, populated by `build_network` only.
    source_edges: BTreeMap<usize, u32>,
    pair_edges: BTreeMap<(usize, usize), u32>,
    sink_edges: BTreeMap<usize, u32>,
}

impl FlowNetwork {
    /// An edgeless network over `num_nodes` nodes.
    pub fn empty(num_nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            slots: Vec::new(),
            caps: Vec::new(),
            adj: vec![Vec::new(); num_nodes],
            source,
            sink,
            eps: 1e-12,
            source_edges: BTreeMap::new(),
            pair_edges: BTreeMap::new(),
            sink_edges: BTreeMap::new(),
        }
    }

    /// Adds a forward arc `u -> v` and its zero-capacity residual twin.
    /// Returns the forward slot id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: f64) -> Result<u32> {
        // the negated comparison deliberately rejects NaN capacities
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(cap >= 0.0) || !cap.is_finite() {
            return Err(FocsError::NegativeCapacity {
                what: format!("arc {u} -> {v}"),
                cap,
            });
        }
        let fwd = self.slots.len() as u32;
        self.slots.push(EdgeSlot { to: v as u32 });
        self.slots.push(EdgeSlot { to: u as u32 });
        self.caps.push(cap);
        self.caps.push(0.0);
        self.adj[u].push(fwd);
        self.adj[v].push(fwd ^ 1);
        self.eps = self.eps.max(1e-12 * cap);
        Ok(fwd)
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Number of forward arcs.
    pub fn num_arcs(&self) -> usize {
        self.slots.len() / 2
    }

    pub fn capacity(&self, slot: u32) -> f64 {
        self.caps[slot as usize]
    }

    /// Total capacity leaving the source, i.e. the remaining demand.
    pub fn total_demand(&self) -> f64 {
        self.adj[self.source]
            .iter()
            .filter(|&&e| e % 2 == 0)
            .map(|&e| self.caps[e as usize])
            .sum()
    }

    /// Forward slot of the source edge feeding `job`, if present.
    pub fn source_edge(&self, job: usize) -> Option<u32> {
        self.source_edges.get(&job).copied()
    }

    /// Forward slot of the `job -> interval` edge, if present.
    pub fn pair_edge(&self, job: usize, interval: usize) -> Option<u32> {
        self.pair_edges.get(&(job, interval)).copied()
    }

    /// Forward slot of the `interval -> sink` edge, if present.
    pub fn sink_edge(&self, interval: usize) -> Option<u32> {
        self.sink_edges.get(&interval).copied()
    }

    pub fn sink_intervals(&self) -> impl Iterator<Item = usize> + '_ {
        self.sink_edges.keys().copied()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// All forward arcs as `(from, to, capacity)` in insertion order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_arcs()).map(|k| {
            let fwd = 2 * k;
            (
                self.slots[fwd ^ 1].to as usize,
                self.slots[fwd].to as usize,
                self.caps[fwd],
            )
        })
    }
}

/// A computed flow: total value plus the residual capacity of every slot,
/// which makes per-edge flows and residual reachability queryable.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub value: f64,
    residual: Vec<f64>,
}

impl FlowResult {
    /// Flow on a forward slot (capacity minus residual).
    pub fn flow(&self, net: &FlowNetwork, slot: u32) -> f64 {
        net.caps[slot as usize] - self.residual[slot as usize]
    }

    pub fn residual(&self, slot: u32) -> f64 {
        self.residual[slot as usize]
    }

    /// Flow arriving at the sink edge of `interval` (0 when the edge is absent).
    pub fn sink_flow(&self, net: &FlowNetwork, interval: usize) -> f64 {
        net.sink_edge(interval).map_or(0.0, |e| self.flow(net, e))
    }

    /// Nodes reachable from the source in the residual graph.
    pub fn reachable_from_source(&self, net: &FlowNetwork) -> Vec<bool> {
        let mut seen = vec![false; net.num_nodes()];
        let mut queue = std::collections::VecDeque::new();
        seen[net.source] = true;
        queue.push_back(net.source);
        while let Some(v) = queue.pop_front() {
            for &slot in &net.adj[v] {
                let to = net.slots[slot as usize].to as usize;
                if !seen[to] && self.residual[slot as usize] > net.eps {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Nodes from which the sink is reachable in the residual graph.
    pub fn reaches_sink(&self, net: &FlowNetwork) -> Vec<bool> {
        let mut seen = vec![false; net.num_nodes()];
        let mut queue = std::collections::VecDeque::new();
        seen[net.sink] = true;
        queue.push_back(net.sink);
        while let Some(v) = queue.pop_front() {
            for &slot in &net.adj[v] {
                // the twin slot runs from `slots[slot].to` into `v`
                let u = net.slots[slot as usize].to as usize;
                if !seen[u] && self.residual[(slot ^ 1) as usize] > net.eps {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }
}

/// Builds the tripartite network for the remaining subproblem: one node per
/// job in `remaining_demands` (zero-demand jobs keep a zero-capacity source
/// edge), one node per interval in `sink_caps`, plus source and sink.
pub fn build_network(
    jobs: &[Job],
    timeline: &Timeline,
    remaining_demands: &BTreeMap<usize, f64>,
    sink_caps: &BTreeMap<usize, f64>,
) -> Result<FlowNetwork> {
    for (&j, &d) in remaining_demands {
        if d < 0.0 {
            return Err(FocsError::NegativeCapacity {
                what: format!("demand of job {j}"),
                cap: d,
            });
        }
    }
    for (&i, &c) in sink_caps {
        if c < 0.0 {
            return Err(FocsError::NegativeCapacity {
                what: format!("sink capacity of interval {i}"),
                cap: c,
            });
        }
    }

    let num_nodes = 2 + remaining_demands.len() + sink_caps.len();
    let source = 0;
    let sink = num_nodes - 1;
    let mut net = FlowNetwork::empty(num_nodes, source, sink);

    let job_node: BTreeMap<usize, usize> = remaining_demands
        .keys()
        .enumerate()
        .map(|(pos, &j)| (j, 1 + pos))
        .collect();
    let interval_node: BTreeMap<usize, usize> = sink_caps
        .keys()
        .enumerate()
        .map(|(pos, &i)| (i, 1 + remaining_demands.len() + pos))
        .collect();

    for (&j, &demand) in remaining_demands {
        let e = net.add_arc(source, job_node[&j], demand)?;
        net.source_edges.insert(j, e);
    }
    for &j in remaining_demands.keys() {
        for &i in &timeline.avail_by_job[j] {
            if let Some(&iv_node) = interval_node.get(&i) {
                let cap = timeline.energy_cap(i, &jobs[j]);
                let e = net.add_arc(job_node[&j], iv_node, cap)?;
                net.pair_edges.insert((j, i), e);
            }
        }
    }
    for (&i, &cap) in sink_caps {
        let e = net.add_arc(interval_node[&i], sink, cap)?;
        net.sink_edges.insert(i, e);
    }
    Ok(net)
}

/// Computes a maximum `source -> sink` flow with the chosen method.
/// Deterministic for a fixed method and input ordering: neighbor scans
/// follow edge insertion order, which `build_network` keeps ascending.
pub fn max_flow(net: &FlowNetwork, method: MaxFlowMethod) -> FlowResult {
    let mut residual = net.caps.clone();
    let value = match method {
        MaxFlowMethod::EdmondsKarp => algorithms::edmonds_karp(net, &mut residual),
        MaxFlowMethod::Dinitz => algorithms::dinitz(net, &mut residual),
        MaxFlowMethod::ShortestAugmentingPath => algorithms::shortest_augmenting_path(net, &mut residual),
        MaxFlowMethod::PreflowPush => algorithms::preflow_push(net, &mut residual),
    };
    FlowResult { value, residual }
}

fn sink_edge_saturated(net: &FlowNetwork, flow: &FlowResult, slot: u32) -> bool {
    let cap = net.capacity(slot);
    cap - flow.flow(net, slot) <= SATURATION_REL_TOL * cap.max(1.0)
}

/// Intervals whose sink edge carries its full capacity (within the
/// saturation tolerance).
pub fn saturated_sink_intervals(net: &FlowNetwork, flow: &FlowResult) -> BTreeSet<usize> {
    net.sink_edges
        .iter()
        .filter(|(_, &slot)| sink_edge_saturated(net, flow, slot))
        .map(|(&i, _)| i)
        .collect()
}

/// Intervals whose sink edge sits in the minimum cut of a maximum flow:
/// saturated and with the interval node still reachable from the source in
/// the residual graph. Raising capacity exactly on these edges increases
/// the maximum flow at unit rate per unit of added capacity.
pub fn min_cut_sink_intervals(net: &FlowNetwork, flow: &FlowResult) -> BTreeSet<usize> {
    let reachable = flow.reachable_from_source(net);
    net.sink_edges
        .iter()
        .filter(|(_, &slot)| sink_edge_saturated(net, flow, slot))
        .filter(|(_, &slot)| {
            let iv_node = net.slots[(slot ^ 1) as usize].to as usize;
            reachable[iv_node]
        })
        .map(|(&i, _)| i)
        .collect()
}

/// The critical set: saturated sink intervals from which the sink is
/// unreachable in the residual graph, so no alternative maximum flow can
/// reduce their load. Requires a demand-saturating flow.
pub fn immovable_intervals(net: &FlowNetwork, flow: &FlowResult) -> Result<BTreeSet<usize>> {
    let demand = net.total_demand();
    if demand - flow.value > SATURATION_REL_TOL * demand.max(1.0) {
        return Err(FocsError::FlowNotSaturating {
            value: flow.value,
            demand,
        });
    }
    let reaches = flow.reaches_sink(net);
    Ok(net
        .sink_edges
        .iter()
        .filter(|(_, &slot)| sink_edge_saturated(net, flow, slot))
        .filter(|(_, &slot)| {
            // the sink edge's twin points back at the interval node
            let iv_node = net.slots[(slot ^ 1) as usize].to as usize;
            !reaches[iv_node]
        })
        .map(|(&i, _)| i)
        .collect())
}
