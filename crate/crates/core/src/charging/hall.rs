//! Fractional Hall coverings on bipartite graphs, decided by exact max-flow.
//!
//! A `c`-covering assigns each left vertex one unit of charge, split over its
//! edges, with every right vertex loaded at most `c`. It exists iff every
//! left subset `S` satisfies `|N(S)| >= |S| / c`, which is equivalent to a
//! max flow of value `|X|` on the unit-supply network (source → left at
//! capacity 1, right → sink at capacity `c`). All capacities and flows are
//! exact rationals.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::rational::{rat, Rat};

/// Plain bipartite graph over indexed vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub left: usize,
    pub right: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort();
        edges.dedup();
        for &(u, v) in &edges {
            assert!(u < left && v < right, "edge ({u}, {v}) out of range");
        }
        BipartiteGraph { left, right, edges }
    }

    pub fn neighbor_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.left];
        for &(u, _) in &self.edges {
            counts[u] += 1;
        }
        counts
    }
}

/// Fractional covering: weight per edge, unit total per left vertex, load at
/// most `c` per right vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covering {
    pub weights: BTreeMap<(usize, usize), Rat>,
    pub c: Rat,
}

impl Covering {
    /// Re-validate the two summation constraints directly.
    pub fn validate(&self, graph: &BipartiteGraph) -> bool {
        let edge_set: std::collections::BTreeSet<_> = graph.edges.iter().copied().collect();
        let mut left_sum = vec![Rat::zero(); graph.left];
        let mut right_sum = vec![Rat::zero(); graph.right];
        for ((u, v), w) in &self.weights {
            if !edge_set.contains(&(*u, *v)) || *w < Rat::zero() || *w > rat(1) {
                return false;
            }
            left_sum[*u] += w;
            right_sum[*v] += w;
        }
        left_sum.iter().all(|s| *s == rat(1)) && right_sum.iter().all(|s| *s <= self.c)
    }
}

/// Decision with certificate: either the covering condition holds, or a left
/// subset violating `|N(S)| >= |S| / c` is returned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HallOutcome {
    Holds,
    Violated { subset: Vec<usize> },
}

impl HallOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, HallOutcome::Holds)
    }
}

struct Arc {
    to: usize,
    rev: usize,
    cap: Rat,
}

/// Exact-arithmetic max flow (shortest augmenting paths).
struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        FlowNetwork {
            adj: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: Rat) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let rev = self.adj[to].len();
        self.adj[from].push(Arc { to, rev, cap });
        self.adj[to].push(Arc {
            to: from,
            rev: fwd,
            cap: Rat::zero(),
        });
        (from, fwd)
    }

    fn bfs_path(&self, s: usize, t: usize) -> Option<Vec<(usize, usize)>> {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for (i, arc) in self.adj[u].iter().enumerate() {
                if !seen[arc.to] && arc.cap > Rat::zero() {
                    seen[arc.to] = true;
                    prev[arc.to] = Some((u, i));
                    queue.push_back(arc.to);
                }
            }
        }
        if !seen[t] {
            return None;
        }
        let mut path = Vec::new();
        let mut node = t;
        while node != s {
            let (u, i) = prev[node].unwrap();
            path.push((u, i));
            node = u;
        }
        path.reverse();
        Some(path)
    }

    fn max_flow(&mut self, s: usize, t: usize) -> Rat {
        let mut total = Rat::zero();
        while let Some(path) = self.bfs_path(s, t) {
            let mut bottleneck: Option<Rat> = None;
            for &(u, i) in &path {
                let cap = self.adj[u][i].cap.clone();
                bottleneck = Some(match bottleneck {
                    Some(b) if b <= cap => b,
                    _ => cap,
                });
            }
            let push = bottleneck.unwrap();
            debug_assert!(push > Rat::zero());
            for &(u, i) in &path {
                let (to, rev) = (self.adj[u][i].to, self.adj[u][i].rev);
                self.adj[u][i].cap -= &push;
                self.adj[to][rev].cap += &push;
            }
            total += push;
        }
        total
    }

    /// Vertices reachable from `s` in the residual graph.
    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for arc in &self.adj[u] {
                if !seen[arc.to] && arc.cap > Rat::zero() {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }
}

fn build_network(graph: &BipartiteGraph, c: &Rat) -> (FlowNetwork, Vec<(usize, usize)>) {
    let source = 0;
    let sink = 1 + graph.left + graph.right;
    let mut net = FlowNetwork::new(sink + 1);
    for u in 0..graph.left {
        net.add_edge(source, 1 + u, rat(1));
    }
    // Middle edges carry unbounded capacity so the min cut crosses only
    // source and sink edges, which yields the violating-subset certificate.
    let unbounded = rat(graph.left as i64 + 1);
    let mut edge_handles = Vec::with_capacity(graph.edges.len());
    for &(u, v) in &graph.edges {
        edge_handles.push(net.add_edge(1 + u, 1 + graph.left + v, unbounded.clone()));
    }
    for v in 0..graph.right {
        net.add_edge(1 + graph.left + v, sink, c.clone());
    }
    (net, edge_handles)
}

/// Decide whether every left subset `S` satisfies `|N(S)| >= |S| / c`.
/// On failure the returned subset is a witness extracted from the min cut.
pub fn hall_condition_holds(graph: &BipartiteGraph, c: &Rat) -> HallOutcome {
    assert!(*c > Rat::zero(), "covering bound must be positive");
    if graph.left == 0 {
        return HallOutcome::Holds;
    }
    let (mut net, _) = build_network(graph, c);
    let sink = 1 + graph.left + graph.right;
    let flow = net.max_flow(0, sink);
    if flow == rat(graph.left as i64) {
        return HallOutcome::Holds;
    }
    let reachable = net.residual_reachable(0);
    let subset: Vec<usize> = (0..graph.left).filter(|u| reachable[1 + u]).collect();
    debug_assert!(!subset.is_empty());
    HallOutcome::Violated { subset }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no {c}-covering exists; violating left subset {subset:?}")]
pub struct CoveringError {
    pub c: String,
    pub subset: Vec<usize>,
}

/// Extract an exact `c`-covering from a saturating max flow. Precondition:
/// the covering condition holds; otherwise the violating subset is returned.
pub fn find_covering(graph: &BipartiteGraph, c: &Rat) -> Result<Covering, CoveringError> {
    assert!(*c > Rat::zero(), "covering bound must be positive");
    let (mut net, handles) = build_network(graph, c);
    let sink = 1 + graph.left + graph.right;
    let flow = net.max_flow(0, sink);
    if flow != rat(graph.left as i64) {
        let reachable = net.residual_reachable(0);
        let subset: Vec<usize> = (0..graph.left).filter(|u| reachable[1 + u]).collect();
        return Err(CoveringError {
            c: c.to_string(),
            subset,
        });
    }
    let unbounded = rat(graph.left as i64 + 1);
    let mut weights = BTreeMap::new();
    for (&(u, v), &(node, slot)) in graph.edges.iter().zip(handles.iter()) {
        let shipped = &unbounded - &net.adj[node][slot].cap;
        if shipped > Rat::zero() {
            weights.insert((u, v), shipped);
        }
    }
    let covering = Covering {
        weights,
        c: c.clone(),
    };
    debug_assert!(covering.validate(graph));
    Ok(covering)
}

/// Reference decision by explicit subset enumeration; exponential in the
/// left side and only intended for cross-checking small graphs.
pub fn hall_condition_brute_force(graph: &BipartiteGraph, c: &Rat) -> HallOutcome {
    assert!(graph.left <= 20, "brute force limited to 20 left vertices");
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); graph.left];
    for &(u, v) in &graph.edges {
        adj[u].push(v);
    }
    for mask in 1u32..(1u32 << graph.left) {
        let mut neighbors = std::collections::BTreeSet::new();
        let mut size = 0i64;
        for u in 0..graph.left {
            if mask & (1 << u) != 0 {
                size += 1;
                neighbors.extend(adj[u].iter().copied());
            }
        }
        // |N(S)| >= |S| / c  <=>  c * |N(S)| >= |S|
        if c * rat(neighbors.len() as i64) < rat(size) {
            let subset = (0..graph.left).filter(|u| mask & (1 << u) != 0).collect();
            return HallOutcome::Violated { subset };
        }
    }
    HallOutcome::Holds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn single_left_vertex_with_two_neighbors() {
        let g = BipartiteGraph::new(1, 2, vec![(0, 0), (0, 1)]);
        let c = ratio(1, 2);
        assert!(hall_condition_holds(&g, &c).holds());
        let cov = find_covering(&g, &c).unwrap();
        assert_eq!(cov.weights[&(0, 0)], ratio(1, 2));
        assert_eq!(cov.weights[&(0, 1)], ratio(1, 2));
        assert!(cov.validate(&g));
    }

    #[test]
    fn pigeonhole_violation_is_certified() {
        let g = BipartiteGraph::new(2, 1, vec![(0, 0), (1, 0)]);
        match hall_condition_holds(&g, &ratio(1, 2)) {
            HallOutcome::Violated { subset } => assert_eq!(subset, vec![0, 1]),
            HallOutcome::Holds => panic!("condition should fail"),
        }
        assert!(find_covering(&g, &ratio(1, 2)).is_err());
    }

    #[test]
    fn forced_single_edge_covering() {
        let g = BipartiteGraph::new(1, 1, vec![(0, 0)]);
        let cov = find_covering(&g, &rat(1)).unwrap();
        assert_eq!(cov.weights[&(0, 0)], rat(1));
    }

    #[test]
    fn empty_left_side_is_vacuous() {
        let g = BipartiteGraph::new(0, 3, vec![]);
        assert!(hall_condition_holds(&g, &ratio(1, 3)).holds());
        let cov = find_covering(&g, &ratio(1, 3)).unwrap();
        assert!(cov.weights.is_empty());
        assert!(cov.validate(&g));
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        let mut rng = crate::harness::rng::SplitMix64::new(0xBEEF);
        for _ in 0..60 {
            let left = (rng.below(5) + 1) as usize;
            let right = (rng.below(5) + 1) as usize;
            let mut edges = Vec::new();
            for u in 0..left {
                for v in 0..right {
                    if rng.below(2) == 0 {
                        edges.push((u, v));
                    }
                }
            }
            let g = BipartiteGraph::new(left, right, edges);
            let c = ratio(rng.below(3) as i64 + 1, rng.below(3) as i64 + 1);
            let fast = hall_condition_holds(&g, &c).holds();
            let slow = hall_condition_brute_force(&g, &c).holds();
            assert_eq!(fast, slow, "graph {g:?} c {c}");
            if fast {
                assert!(find_covering(&g, &c).unwrap().validate(&g));
            }
        }
    }
}
