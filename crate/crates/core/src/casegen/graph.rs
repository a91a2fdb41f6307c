//! Directed routing graph with time costs, and Yen's k-shortest loopless paths.
//!
//! Ties between equal-cost paths are broken by the lexicographic order of
//! their node sequences, which makes the output fully deterministic and
//! comparable against exhaustive enumeration.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::PathError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Mod,
    Transit,
    Walk,
    Wait,
    Transfer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub label: String,
    /// Planar position in miles.
    pub at: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Traversal time in minutes.
    pub cost: f64,
    /// Distance in miles (zero for waits and transfers).
    pub distance: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoutingGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Outgoing edge ids per node, sorted by head node.
    out: Vec<Vec<usize>>,
    into: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub cost: f64,
}

impl Path {
    fn key_cmp(&self, other: &Path) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

#[derive(PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Restrictions applied to one shortest-path query.
struct Bans<'a> {
    nodes: &'a [bool],
    arcs: &'a HashSet<(usize, usize)>,
}

impl RoutingGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>, at: (f64, f64)) -> usize {
        self.nodes.push(Node { label: label.into(), at });
        self.out.push(Vec::new());
        self.into.push(Vec::new());
        self.nodes.len() - 1
    }

    /// Adds a directed edge. Panics on a negative or non-finite cost.
    pub fn add_edge(&mut self, from: usize, to: usize, cost: f64, distance: f64, kind: EdgeKind) -> usize {
        assert!(cost >= 0.0 && cost.is_finite(), "edge cost must be finite and nonnegative, got {cost}");
        let id = self.edges.len();
        self.edges.push(Edge { from, to, cost, distance, kind });
        let at = self.out[from].partition_point(|&e| self.edges[e].to <= to);
        self.out[from].insert(at, id);
        self.into[to].push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.out[node].iter().map(|&e| &self.edges[e])
    }

    /// Cheapest allowed edge id from `u` to `v`.
    fn arc(&self, u: usize, v: usize, allow: &dyn Fn(&Edge) -> bool) -> Option<usize> {
        self.out[u]
            .iter()
            .copied()
            .filter(|&e| self.edges[e].to == v && allow(&self.edges[e]))
            .min_by(|&a, &b| self.edges[a].cost.total_cmp(&self.edges[b].cost))
    }

    /// Path cost and edges along a node sequence, summed front to back.
    pub fn path_from_nodes(&self, nodes: Vec<usize>, allow: &dyn Fn(&Edge) -> bool) -> Option<Path> {
        let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
        let mut cost = 0.0;
        for w in nodes.windows(2) {
            let e = self.arc(w[0], w[1], allow)?;
            cost += self.edges[e].cost;
            edges.push(e);
        }
        Some(Path { nodes, edges, cost })
    }

    fn check(&self, node: usize) -> Result<(), PathError> {
        if node < self.len() {
            Ok(())
        } else {
            Err(PathError::UnknownNode(node))
        }
    }

    /// Shortest path from `s` to `t`, lexicographically smallest among ties.
    fn shortest(&self, s: usize, t: usize, bans: &Bans, allow: &dyn Fn(&Edge) -> bool) -> Option<Path> {
        let usable = |e: &Edge| allow(e) && !bans.nodes[e.from] && !bans.nodes[e.to] && !bans.arcs.contains(&(e.from, e.to));
        // distances to t over reversed edges
        let mut dist = vec![f64::INFINITY; self.len()];
        dist[t] = 0.0;
        let mut heap = BinaryHeap::from([Queued(0.0, t)]);
        while let Some(Queued(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &e in &self.into[v] {
                let edge = &self.edges[e];
                if !usable(edge) {
                    continue;
                }
                let nd = d + edge.cost;
                if nd < dist[edge.from] {
                    dist[edge.from] = nd;
                    heap.push(Queued(nd, edge.from));
                }
            }
        }
        if !dist[s].is_finite() || bans.nodes[s] {
            return None;
        }
        let tol = |d: f64| 1e-9 * d.abs().max(1.0);
        let tight = |e: &Edge| usable(e) && (e.cost + dist[e.to] - dist[e.from]).abs() <= tol(dist[e.from]);
        // Zero-cost edges can close tight cycles, so a step is only taken
        // towards a node that still reaches `t` without revisiting the path.
        let reaches = |from: usize, seen: &[bool]| {
            let mut mark = seen.to_vec();
            mark[from] = true;
            let mut stack = vec![from];
            while let Some(v) = stack.pop() {
                if v == t {
                    return true;
                }
                for e in self.out_edges(v) {
                    if !mark[e.to] && tight(e) {
                        mark[e.to] = true;
                        stack.push(e.to);
                    }
                }
            }
            false
        };
        let mut nodes = vec![s];
        let mut seen = vec![false; self.len()];
        seen[s] = true;
        let mut u = s;
        while u != t {
            let next = self.out_edges(u).find(|e| !seen[e.to] && tight(e) && reaches(e.to, &seen))?;
            u = next.to;
            seen[u] = true;
            nodes.push(u);
        }
        self.path_from_nodes(nodes, &usable)
    }

    /// Up to `k` loopless paths from `origin` to `dest`, by cost then node
    /// sequence.
    pub fn yen_k_shortest(&self, origin: usize, dest: usize, k: usize) -> Result<Vec<Path>, PathError> {
        self.yen_filtered(origin, dest, k, &|_| true)
    }

    /// [`Self::yen_k_shortest`] over the edges accepted by `allow`.
    pub fn yen_filtered(
        &self,
        origin: usize,
        dest: usize,
        k: usize,
        allow: &dyn Fn(&Edge) -> bool,
    ) -> Result<Vec<Path>, PathError> {
        self.check(origin)?;
        self.check(dest)?;
        let no_nodes = vec![false; self.len()];
        let no_arcs = HashSet::new();
        let first = self
            .shortest(origin, dest, &Bans { nodes: &no_nodes, arcs: &no_arcs }, allow)
            .ok_or(PathError::NoPath { from: origin, to: dest })?;
        let mut found = vec![first];
        let mut candidates: Vec<Path> = Vec::new();
        while found.len() < k {
            let prev = found.last().expect("at least one path").clone();
            for i in 0..prev.nodes.len() - 1 {
                let root = &prev.nodes[..=i];
                let mut arcs = HashSet::new();
                for p in &found {
                    if p.nodes.len() > i + 1 && &p.nodes[..=i] == root {
                        arcs.insert((p.nodes[i], p.nodes[i + 1]));
                    }
                }
                let mut banned = vec![false; self.len()];
                for &n in &root[..i] {
                    banned[n] = true;
                }
                let Some(spur) = self.shortest(prev.nodes[i], dest, &Bans { nodes: &banned, arcs: &arcs }, allow) else {
                    continue;
                };
                let nodes: Vec<usize> = root.iter().chain(&spur.nodes[1..]).copied().collect();
                if found.iter().chain(&candidates).any(|p| p.nodes == nodes) {
                    continue;
                }
                if let Some(path) = self.path_from_nodes(nodes, allow) {
                    candidates.push(path);
                }
            }
            let Some(best) = (0..candidates.len()).min_by(|&a, &b| candidates[a].key_cmp(&candidates[b])) else {
                break;
            };
            found.push(candidates.swap_remove(best));
        }
        Ok(found)
    }

    /// Every loopless path from `origin` to `dest` by depth-first search,
    /// sorted like [`Self::yen_k_shortest`]. Exponential; for small graphs.
    pub fn all_simple_paths(&self, origin: usize, dest: usize) -> Vec<Path> {
        fn dfs(g: &RoutingGraph, u: usize, dest: usize, stack: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if u == dest {
                out.push(stack.clone());
                return;
            }
            let mut heads: Vec<usize> = g.out[u].iter().map(|&e| g.edges[e].to).collect();
            heads.dedup();
            for v in heads {
                if !on[v] {
                    on[v] = true;
                    stack.push(v);
                    dfs(g, v, dest, stack, on, out);
                    stack.pop();
                    on[v] = false;
                }
            }
        }
        let mut on = vec![false; self.len()];
        on[origin] = true;
        let mut seqs = Vec::new();
        dfs(self, origin, dest, &mut vec![origin], &mut on, &mut seqs);
        let mut paths: Vec<Path> =
            seqs.into_iter().filter_map(|n| self.path_from_nodes(n, &|_| true)).collect();
        paths.sort_by(|a, b| a.key_cmp(b));
        paths
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> RoutingGraph {
        let mut g = RoutingGraph::new();
        for i in 0..4 {
            g.add_node(format!("n{i}"), (0.0, 0.0));
        }
        g.add_edge(0, 2, 1.0, 1.0, EdgeKind::Mod);
        g.add_edge(0, 1, 1.0, 1.0, EdgeKind::Mod);
        g.add_edge(1, 3, 1.0, 1.0, EdgeKind::Transit);
        g.add_edge(2, 3, 1.0, 1.0, EdgeKind::Transit);
        g
    }

    #[test]
    fn diamond_ties_in_node_order() {
        let paths = diamond().yen_k_shortest(0, 3, 2).unwrap();
        assert_eq!(paths[0].nodes, vec![0, 1, 3]);
        assert_eq!(paths[1].nodes, vec![0, 2, 3]);
        assert_eq!(paths[0].cost, 2.0);
    }

    #[test]
    fn k_one_is_shortest() {
        let mut g = diamond();
        g.add_edge(0, 3, 1.5, 1.0, EdgeKind::Walk);
        let p = g.yen_k_shortest(0, 3, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].nodes, vec![0, 3]);
    }

    #[test]
    fn unreachable_and_unknown() {
        let g = diamond();
        assert_eq!(g.yen_k_shortest(3, 0, 2), Err(PathError::NoPath { from: 3, to: 0 }));
        assert_eq!(g.yen_k_shortest(0, 9, 2), Err(PathError::UnknownNode(9)));
    }

    #[test]
    fn matches_exhaustive_on_diamond() {
        let g = diamond();
        assert_eq!(g.yen_k_shortest(0, 3, 10).unwrap(), g.all_simple_paths(0, 3));
    }

    #[test]
    fn filter_restricts_edges() {
        let mut g = diamond();
        g.add_edge(0, 3, 0.5, 1.0, EdgeKind::Walk);
        let p = g.yen_filtered(0, 3, 5, &|e| e.kind != EdgeKind::Walk).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|p| p.nodes.len() == 3));
    }
}
