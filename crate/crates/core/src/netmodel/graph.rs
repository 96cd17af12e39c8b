use std::collections::BTreeSet;

use super::{AdmittanceMatrix, NodePartition};

/// Undirected simple graph over `0..n`; edges stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl NetworkGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: BTreeSet::new() }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Ignores self-loops.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a < self.n && b < self.n, "edge endpoint out of range");
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        self.edges.remove(&(a.min(b), a.max(b)))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().len() == 1
    }

    /// True when some component contains a cycle.
    pub fn has_cycle(&self) -> bool {
        self.edges.len() + self.components().len() > self.n
    }
}

/// Graph of an admittance matrix: edge `(i, j)` iff `|Y[i,j]| > zero_threshold`.
pub fn graph_of(y: &AdmittanceMatrix, zero_threshold: f64) -> NetworkGraph {
    let mut g = NetworkGraph::new(y.n());
    for (i, j, v) in y.entries() {
        if i != j && v.norm() > zero_threshold {
            g.add_edge(i, j);
        }
    }
    g
}

/// Default zero threshold: `1e-6 * max|entry|`.
pub fn default_zero_threshold(y: &AdmittanceMatrix) -> f64 {
    1e-6 * y.max_abs()
}

/// Connected with exactly `n - 1` edges.
pub fn is_radial(g: &NetworkGraph) -> bool {
    g.n() > 0 && g.is_connected() && g.edge_count() == g.n() - 1
}

/// Which hidden nodes can in principle be identified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifiabilityReport {
    /// Hidden nodes of degree below 3 with their degree.
    pub unidentifiable: Vec<(usize, usize)>,
    /// Every hidden node has degree at least 3.
    pub min_degree_holds: bool,
}

pub fn identifiability_report(g: &NetworkGraph, part: &NodePartition) -> IdentifiabilityReport {
    let unidentifiable: Vec<_> =
        part.hidden().iter().map(|&h| (h, g.degree(h))).filter(|&(_, d)| d < 3).collect();
    IdentifiabilityReport { min_degree_holds: unidentifiable.is_empty(), unidentifiable }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn star() -> AdmittanceMatrix {
        let (t1, t2) = (C64::new(1.0, -2.0), C64::new(2.0, -1.0));
        let mut y = AdmittanceMatrix::zeros_indexed(3);
        y.set(0, 0, t1 + t2);
        y.set(0, 1, -t1);
        y.set(0, 2, -t2);
        y.set(1, 1, t1);
        y.set(2, 2, t2);
        y
    }

    #[test]
    fn star_graph_edges() {
        let g = graph_of(&star(), 0.0);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn diagonal_only_has_no_edges() {
        let mut y = AdmittanceMatrix::zeros_indexed(3);
        for i in 0..3 {
            y.set(i, i, C64::new(1.0, 0.0));
        }
        assert_eq!(graph_of(&y, 0.0).edge_count(), 0);
    }

    #[test]
    fn radial_predicate() {
        let path = NetworkGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let triangle = NetworkGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let split = NetworkGraph::from_edges(4, [(0, 1), (2, 3)]);
        assert!(is_radial(&path));
        assert!(!is_radial(&triangle));
        assert!(!is_radial(&split));
        assert!(triangle.has_cycle());
        assert!(!split.has_cycle());
    }

    #[test]
    fn identifiability_of_star_center() {
        let g = graph_of(&star(), 0.0);
        let rep = identifiability_report(&g, &NodePartition::from_hidden(3, &[0]).unwrap());
        assert_eq!(rep.unidentifiable, vec![(0, 2)]);
        assert!(!rep.min_degree_holds);

        let g3 = NetworkGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]);
        let rep = identifiability_report(&g3, &NodePartition::from_hidden(4, &[0]).unwrap());
        assert!(rep.unidentifiable.is_empty() && rep.min_degree_holds);

        let rep = identifiability_report(&g3, &NodePartition::from_hidden(4, &[]).unwrap());
        assert!(rep.unidentifiable.is_empty() && rep.min_degree_holds);
    }
}
