//! Graph containers shared by every stage after projection.
//!
//! A [`HeteroGraph`] and the [`SimpleGraph`] collapsed from it use the same
//! node ids, so one [`NodeMap`] serves both.

use std::collections::HashMap;

use serde::Serialize;

/// Bijection between dense node ids and node names (IRIs, or `_:label` for
/// blank nodes in raw mode).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeMap {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl NodeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = NodeMap::new();
        for name in names {
            map.intern(name);
        }
        map
    }

    pub fn intern(&mut self, name: impl Into<String>) -> u32 {
        let name = name.into();
        if let Some(&id) = self.index.get(&name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_blank(&self, id: u32) -> bool {
        self.name(id).starts_with("_:")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LabeledEdge {
    pub s: u32,
    pub p: u32,
    pub o: u32,
}

/// Directed labeled multigraph.
#[derive(Debug, Clone, Default)]
pub struct HeteroGraph {
    pub nodes: NodeMap,
    pub predicates: NodeMap,
    pub edges: Vec<LabeledEdge>,
}

impl HeteroGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> u32 {
        self.nodes.intern(name)
    }

    pub fn add_edge(&mut self, s: &str, p: &str, o: &str) {
        let s = self.nodes.intern(s);
        let p = self.predicates.intern(p);
        let o = self.nodes.intern(o);
        self.edges.push(LabeledEdge { s, p, o });
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Undirected simple collapse: `{u,v}` is an edge iff some labeled edge
    /// joins them in either direction; self-loops are dropped.
    pub fn collapse(&self) -> SimpleGraph {
        SimpleGraph::from_edges(self.nodes.len(), self.edges.iter().map(|e| (e.s, e.o)))
    }

    /// Copy without the labeled edges whose endpoints form a pair rejected by
    /// `keep`.
    pub fn filter_pairs(&self, mut keep: impl FnMut(u32, u32) -> bool) -> HeteroGraph {
        HeteroGraph {
            nodes: self.nodes.clone(),
            predicates: self.predicates.clone(),
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|e| keep(e.s, e.o))
                .collect(),
        }
    }

    /// Single-relation view of a simple graph, one labeled edge per
    /// undirected edge.
    pub fn from_simple(g: &SimpleGraph, nodes: NodeMap, relation: &str) -> HeteroGraph {
        let mut predicates = NodeMap::new();
        let p = predicates.intern(relation);
        HeteroGraph {
            nodes,
            predicates,
            edges: g.edges().map(|(s, o)| LabeledEdge { s, p, o }).collect(),
        }
    }
}

/// Undirected simple graph over nodes `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: Vec<Vec<u32>>,
    edge_count: usize,
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Self {
        SimpleGraph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds from arbitrary endpoint pairs; duplicates, reversed duplicates
    /// and self-loops are discarded.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(
                (u as usize) < n && (v as usize) < n,
                "edge ({u},{v}) outside 0..{n}"
            );
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        let mut edge_count = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        SimpleGraph {
            adj,
            edge_count: edge_count / 2,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a as usize].binary_search(&b).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic
    /// order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&v| v > u as u32)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Number of unordered node pairs that are not edges.
    pub fn non_edge_count(&self) -> usize {
        let n = self.node_count();
        n * n.saturating_sub(1) / 2 - self.edge_count
    }

    /// Copy with every edge accepted by `keep` retained.
    pub fn filter_edges(&self, mut keep: impl FnMut(u32, u32) -> bool) -> SimpleGraph {
        SimpleGraph::from_edges(self.node_count(), self.edges().filter(|&(u, v)| keep(u, v)))
    }

    pub fn connected_components(&self) -> usize {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start as u32);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}
