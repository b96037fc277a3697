//! The capacitated allocation network and an exact integral min-cost flow
//! solver (successive shortest paths with potentials).
//!
//! For every agent/item pair the network carries a chain
//! `v_i -> v_{i,a,1} -> ... -> v_{i,a,L}` whose arc costs telescope, plus a
//! unit exit arc from every chain node to the item node. A unit leaving the
//! chain at level `l` therefore costs exactly `-V_{i,a,l}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::Allocation;

/// Cost comparisons in the solver tolerate this much rounding.
const COST_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Sink,
    Agent(usize),
    Item(usize),
    /// `v_{i,a,level}` with 1-based `level`.
    Chain {
        agent: usize,
        item: usize,
        level: usize,
    },
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Source => write!(f, "s"),
            NodeKind::Sink => write!(f, "t"),
            NodeKind::Agent(i) => write!(f, "v{i}"),
            NodeKind::Item(a) => write!(f, "z{a}"),
            NodeKind::Chain { agent, item, level } => write!(f, "v{agent}_{item}_{level}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    nodes: Vec<NodeKind>,
    arcs: Vec<FlowArc>,
    supply: i64,
    n: usize,
    m: usize,
    /// Arc index of `v_i -> v_{i,a,1}`, when the component exists.
    entry: Vec<Vec<Option<usize>>>,
    increasing: Vec<(usize, usize, usize)>,
}

pub const SOURCE: usize = 0;
pub const SINK: usize = 1;

impl FlowNetwork {
    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    /// `F = min(sum C, sum M)`: units leaving the source.
    pub fn supply(&self) -> i64 {
        self.supply
    }

    /// Index of the arc `v_i -> v_{i,a,1}`.
    pub fn entry_arc(&self, agent: usize, item: usize) -> Option<usize> {
        self.entry[agent][item]
    }

    /// `(i, a, j)` where `V_{i,a,j} > V_{i,a,j-1}`. Allocation extraction is
    /// only exact when this is empty.
    pub fn increasing_marginals(&self) -> &[(usize, usize, usize)] {
        &self.increasing
    }

    fn add_node(&mut self, kind: NodeKind) -> usize {
        self.nodes.push(kind);
        self.nodes.len() - 1
    }

    fn add_arc(&mut self, from: usize, to: usize, capacity: i64, cost: f64) -> usize {
        self.arcs.push(FlowArc {
            from,
            to,
            capacity,
            cost,
        });
        self.arcs.len() - 1
    }

    /// Plain-text arc list, one `from to capacity cost` line per arc, after a
    /// `#` header naming the nodes.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "# nodes {} arcs {} source {SOURCE} sink {SINK} supply {}\n",
            self.nodes.len(),
            self.arcs.len(),
            self.supply
        );
        for (id, kind) in self.nodes.iter().enumerate() {
            out.push_str(&format!("# node {id} {kind}\n"));
        }
        for a in &self.arcs {
            out.push_str(&format!("{} {} {} {}\n", a.from, a.to, a.capacity, a.cost));
        }
        out
    }
}

/// Builds `G(C, M, V)`.
///
/// `values[i][a]` lists `V_{i,a,1..}`; the chain for `(i, a)` has one node
/// per finite leading entry, capped at `M_a`. A `-inf` entry (or running out
/// of entries) forbids that copy and every later one, so the corresponding
/// arcs are left out.
pub fn build_network(
    capacities: &[usize],
    supplies: &[usize],
    values: &[Vec<Vec<f64>>],
) -> Result<FlowNetwork> {
    let n = capacities.len();
    let m = supplies.len();
    if values.len() != n || values.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension(format!(
            "value matrix must be {n} x {m} x levels"
        )));
    }
    if capacities.contains(&0) || supplies.contains(&0) {
        return Err(Error::Dimension(
            "capacities and supplies must be at least 1".into(),
        ));
    }
    for (i, row) in values.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            if let Some(j) = v.iter().position(|x| x.is_nan() || *x == f64::INFINITY) {
                return Err(Error::Precondition(format!(
                    "V[{i}][{a}][{}] = {} is not a finite value or -inf",
                    j + 1,
                    v[j]
                )));
            }
        }
    }
    let total_c: usize = capacities.iter().sum();
    let total_m: usize = supplies.iter().sum();
    let mut net = FlowNetwork {
        nodes: Vec::new(),
        arcs: Vec::new(),
        supply: total_c.min(total_m) as i64,
        n,
        m,
        entry: vec![vec![None; m]; n],
        increasing: Vec::new(),
    };
    net.add_node(NodeKind::Source);
    net.add_node(NodeKind::Sink);
    let agent_nodes: Vec<usize> = (0..n).map(|i| net.add_node(NodeKind::Agent(i))).collect();
    let item_nodes: Vec<usize> = (0..m).map(|a| net.add_node(NodeKind::Item(a))).collect();
    for (i, &c) in capacities.iter().enumerate() {
        net.add_arc(SOURCE, agent_nodes[i], c as i64, 0.0);
    }
    for i in 0..n {
        for a in 0..m {
            let supply = supplies[a] as i64;
            let v = &values[i][a];
            let levels = v
                .iter()
                .take_while(|x| x.is_finite())
                .count()
                .min(supplies[a]);
            if levels == 0 {
                continue;
            }
            for j in 1..levels {
                if v[j] > v[j - 1] {
                    net.increasing.push((i, a, j + 1));
                }
            }
            let chain: Vec<usize> = (1..=levels)
                .map(|level| {
                    net.add_node(NodeKind::Chain {
                        agent: i,
                        item: a,
                        level,
                    })
                })
                .collect();
            let e = net.add_arc(agent_nodes[i], chain[0], supply, -v[0]);
            net.entry[i][a] = Some(e);
            for j in 1..levels {
                // arc into level j+1 carries M_a - j and cost V_j - V_{j+1}
                net.add_arc(chain[j - 1], chain[j], supply - j as i64, v[j - 1] - v[j]);
            }
            for &node in &chain {
                net.add_arc(node, item_nodes[a], 1, 0.0);
            }
        }
    }
    for (a, &s) in supplies.iter().enumerate() {
        net.add_arc(item_nodes[a], SINK, s as i64, 0.0);
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub arc_flows: Vec<i64>,
    pub total_cost: f64,
    /// Units routed from source to sink.
    pub value: i64,
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let mut r = Residual {
            head: Vec::with_capacity(2 * net.arcs.len()),
            cap: Vec::with_capacity(2 * net.arcs.len()),
            cost: Vec::with_capacity(2 * net.arcs.len()),
            adj: vec![Vec::new(); net.nodes.len()],
        };
        // residual edge 2k is arc k, 2k+1 its reverse
        for a in &net.arcs {
            r.adj[a.from].push(r.head.len());
            r.head.push(a.to);
            r.cap.push(a.capacity);
            r.cost.push(a.cost);
            r.adj[a.to].push(r.head.len());
            r.head.push(a.from);
            r.cap.push(0);
            r.cost.push(-a.cost);
        }
        r
    }
}

/// Shortest-path distances from the source over arcs with positive capacity
/// (label-correcting; the initial network has no cycles).
fn initial_potentials(net: &FlowNetwork) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.nodes.len()];
    dist[SOURCE] = 0.0;
    for _ in 0..net.nodes.len() {
        let mut changed = false;
        for a in net.arcs.iter().filter(|a| a.capacity > 0) {
            if dist[a.from].is_finite() && dist[a.from] + a.cost < dist[a.to] - COST_EPS {
                dist[a.to] = dist[a.from] + a.cost;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist.iter()
        .map(|d| if d.is_finite() { *d } else { 0.0 })
        .collect()
}

/// Pushes up to `target` units at minimum cost. Deterministic.
fn successive_shortest_paths(net: &FlowNetwork, target: i64) -> FlowSolution {
    let nn = net.nodes.len();
    let mut res = Residual::new(net);
    let mut pot = initial_potentials(net);
    let mut value = 0;
    while value < target {
        // dense Dijkstra on reduced costs; ties resolve to the smallest node id
        let mut dist = vec![f64::INFINITY; nn];
        let mut prev_edge = vec![usize::MAX; nn];
        let mut done = vec![false; nn];
        dist[SOURCE] = 0.0;
        loop {
            let mut u = usize::MAX;
            for v in 0..nn {
                if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for &e in &res.adj[u] {
                if res.cap[e] <= 0 {
                    continue;
                }
                let v = res.head[e];
                let reduced = (res.cost[e] + pot[u] - pot[v]).max(0.0);
                let cand = dist[u] + reduced;
                if cand < dist[v] - COST_EPS {
                    dist[v] = cand;
                    prev_edge[v] = e;
                }
            }
        }
        if !dist[SINK].is_finite() {
            break;
        }
        for v in 0..nn {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }
        let mut push = target - value;
        let mut v = SINK;
        while v != SOURCE {
            let e = prev_edge[v];
            push = push.min(res.cap[e]);
            v = res.head[e ^ 1];
        }
        let mut v = SINK;
        while v != SOURCE {
            let e = prev_edge[v];
            res.cap[e] -= push;
            res.cap[e ^ 1] += push;
            v = res.head[e ^ 1];
        }
        value += push;
    }
    let arc_flows: Vec<i64> = (0..net.arcs.len()).map(|k| res.cap[2 * k + 1]).collect();
    let total_cost = arc_flows
        .iter()
        .zip(&net.arcs)
        .map(|(&f, a)| f as f64 * a.cost)
        .sum();
    FlowSolution {
        arc_flows,
        total_cost,
        value,
    }
}

/// Exact integral min-cost flow of value `F`.
pub fn solve_min_cost(net: &FlowNetwork) -> Result<FlowSolution> {
    let sol = successive_shortest_paths(net, net.supply);
    if sol.value < net.supply {
        return Err(Error::InfeasibleFlow {
            required: net.supply,
            routed: sol.value,
        });
    }
    Ok(sol)
}

/// Min-cost flow among maximum flows; used when copy limits make `F`
/// unreachable.
pub fn solve_min_cost_max_flow(net: &FlowNetwork) -> FlowSolution {
    successive_shortest_paths(net, net.supply)
}

/// `x[i][a]` = flow on `v_i -> v_{i,a,1}`.
pub fn extract_allocation(net: &FlowNetwork, sol: &FlowSolution) -> Allocation {
    let mut alloc = Allocation::zeros(net.n, net.m);
    for i in 0..net.n {
        for a in 0..net.m {
            if let Some(e) = net.entry[i][a] {
                alloc.set(i, a, sol.arc_flows[e] as usize);
            }
        }
    }
    alloc
}
