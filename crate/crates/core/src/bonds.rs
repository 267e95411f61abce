//! Directed-bond indexing of a metric graph.
//!
//! Edge `e` yields bond `2e` running `u -> v` and bond `2e + 1` running
//! `v -> u`, so reversal is `b ^ 1`.

use crate::graph::MetricGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub edge: usize,
    pub origin: usize,
    pub terminal: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondSystem {
    bonds: Vec<Bond>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    leads: Vec<Vec<usize>>,
    degree: Vec<usize>,
}

impl BondSystem {
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    #[inline]
    pub fn reverse(&self, bond: usize) -> usize {
        bond ^ 1
    }

    /// Bonds leaving `vertex`.
    pub fn outgoing(&self, vertex: usize) -> &[usize] {
        &self.outgoing[vertex]
    }

    /// Bonds arriving at `vertex`.
    pub fn incoming(&self, vertex: usize) -> &[usize] {
        &self.incoming[vertex]
    }

    /// Indices (into the graph's lead list) of leads attached at `vertex`.
    pub fn leads_at(&self, vertex: usize) -> &[usize] {
        &self.leads[vertex]
    }

    /// Degree of `vertex` counting bond channels and leads.
    pub fn degree(&self, vertex: usize) -> usize {
        self.degree[vertex]
    }

    pub fn vertex_count(&self) -> usize {
        self.degree.len()
    }

    /// Sum of all bond lengths, i.e. twice the total edge length.
    pub fn total_bond_length(&self) -> f64 {
        self.bonds.iter().map(|b| b.length).sum()
    }
}

/// Indexes the directed bonds of `graph`, ordered by edge index and then
/// orientation.
pub fn directed_bonds(graph: &MetricGraph) -> BondSystem {
    let n = graph.vertex_count();
    let mut bonds = Vec::with_capacity(2 * graph.edge_count());
    let mut outgoing = vec![Vec::new(); n];
    let mut incoming = vec![Vec::new(); n];
    for (i, e) in graph.edges().iter().enumerate() {
        for (origin, terminal) in [(e.u, e.v), (e.v, e.u)] {
            let b = bonds.len();
            bonds.push(Bond {
                edge: i,
                origin,
                terminal,
                length: e.length,
            });
            outgoing[origin].push(b);
            incoming[terminal].push(b);
        }
    }
    let mut leads = vec![Vec::new(); n];
    for (i, l) in graph.leads().iter().enumerate() {
        leads[l.vertex].push(i);
    }
    let degree = (0..n).map(|v| outgoing[v].len() + leads[v].len()).collect();
    BondSystem {
        bonds,
        outgoing,
        incoming,
        leads,
        degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_chain;

    #[test]
    fn two_bonds_per_edge() {
        let g = uniform_chain(&[3, 4, 3], 0.25, 0.25).unwrap();
        let bs = directed_bonds(&g);
        assert_eq!(bs.len(), 24);
        for b in 0..bs.len() {
            assert_eq!(bs.reverse(bs.reverse(b)), b);
            let (x, y) = (bs.bonds()[b], bs.bonds()[bs.reverse(b)]);
            assert_eq!((x.origin, x.terminal), (y.terminal, y.origin));
            assert_eq!(x.edge, y.edge);
        }
        for v in 0..g.vertex_count() {
            assert_eq!(bs.degree(v), g.degree(v));
        }
    }

    #[test]
    fn self_loop_bonds() {
        let g = MetricGraph::from_named(["a"], [("loop".into(), "a".into(), "a".into(), 1.0)], []).unwrap();
        let bs = directed_bonds(&g);
        assert_eq!(bs.len(), 2);
        assert!(bs.bonds().iter().all(|b| b.origin == 0 && b.terminal == 0));
        assert_eq!(bs.degree(0), 2);
    }

    #[test]
    fn deterministic_ordering() {
        let g = uniform_chain(&[4, 3, 4], 0.25, 0.1).unwrap();
        assert_eq!(directed_bonds(&g), directed_bonds(&g));
    }
}
