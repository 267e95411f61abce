//! Metric multigraphs with attached semi-infinite leads.
//!
//! Vertices, edges and leads are addressed by dense indices; the string ids
//! are kept for file round trips and for printing paths.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{kind} `{id}` references unknown vertex `{vertex}`")]
    UnknownVertex {
        kind: &'static str,
        id: String,
        vertex: String,
    },
    #[error("edge `{id}` has invalid length {length} (must be finite and > 0)")]
    InvalidLength { id: String, length: f64 },
    #[error("graph is not connected: vertex `{0}` is unreachable")]
    Disconnected(String),
    #[error("polygon size {0} is too small (need at least 3)")]
    PolygonTooSmall(usize),
    #[error("chain spec is invalid: {0}")]
    InvalidChain(String),
    #[error("no edge with index {0}")]
    NoSuchEdge(usize),
    #[error("split position {position} is outside (0, {length})")]
    SplitOutOfRange { position: f64, length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub u: usize,
    pub v: usize,
    /// Optical length in meters.
    pub length: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    /// The endpoint opposite to `vertex`. For a loop this is `vertex` itself.
    pub fn other(&self, vertex: usize) -> usize {
        if self.u == vertex {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lead {
    pub id: String,
    pub vertex: usize,
}

/// A connected metric multigraph. Parallel edges and self-loops are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    leads: Vec<Lead>,
}

impl MetricGraph {
    /// Builds a graph from vertex names, `(id, u, v, length)` edges and
    /// `(id, vertex)` leads, all referencing vertices by name.
    pub fn from_named<V, E, L>(vertices: V, edges: E, leads: L) -> Result<Self, GraphError>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String, String, f64)>,
        L: IntoIterator<Item = (String, String)>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let index = |kind: &'static str, id: &str, name: &str| {
            vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| GraphError::UnknownVertex {
                    kind,
                    id: id.to_string(),
                    vertex: name.to_string(),
                })
        };
        let mut resolved_edges = Vec::new();
        for (id, u, v, length) in edges {
            let u = index("edge", &id, &u)?;
            let v = index("edge", &id, &v)?;
            resolved_edges.push(Edge { id, u, v, length });
        }
        let mut resolved_leads = Vec::new();
        for (id, vertex) in leads {
            let vertex = index("lead", &id, &vertex)?;
            resolved_leads.push(Lead { id, vertex });
        }
        Self::new(vertices, resolved_edges, resolved_leads)
    }

    /// Validates and assembles a graph from index-based parts.
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>, leads: Vec<Lead>) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        check_unique("vertex", vertices.iter())?;
        check_unique("edge", edges.iter().map(|e| &e.id))?;
        check_unique("lead", leads.iter().map(|l| &l.id))?;
        let n = vertices.len();
        let bad_vertex = |kind, id: &str, idx: usize| GraphError::UnknownVertex {
            kind,
            id: id.to_string(),
            vertex: format!("#{idx}"),
        };
        for e in &edges {
            if e.u >= n {
                return Err(bad_vertex("edge", &e.id, e.u));
            }
            if e.v >= n {
                return Err(bad_vertex("edge", &e.id, e.v));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(GraphError::InvalidLength {
                    id: e.id.clone(),
                    length: e.length,
                });
            }
        }
        for l in &leads {
            if l.vertex >= n {
                return Err(bad_vertex("lead", &l.id, l.vertex));
            }
        }
        let graph = Self {
            vertices,
            edges,
            leads,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let n = self.vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        for e in &self.edges {
            adjacency[e.u].push(e.v);
            adjacency[e.v].push(e.u);
        }
        let start = self.leads.first().map_or(0, |l| l.vertex);
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(GraphError::Disconnected(self.vertices[v].clone())),
            None => Ok(()),
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// Number of edge ends incident to `vertex` (a loop counts twice).
    pub fn edge_degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.u == vertex) + usize::from(e.v == vertex))
            .sum()
    }

    /// Degree including attached leads; this is `d_v` in the vertex
    /// scattering matrix of the open graph.
    pub fn degree(&self, vertex: usize) -> usize {
        self.edge_degree(vertex) + self.leads.iter().filter(|l| l.vertex == vertex).count()
    }

    /// Sum of edge lengths, leads excluded.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_edge_length(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.length).reduce(f64::min)
    }

    /// The same graph with every lead detached.
    pub fn closed(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            leads: Vec::new(),
        }
    }

    /// Multiplies every edge length by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, GraphError> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                length: e.length * factor,
                ..e.clone()
            })
            .collect();
        Self::new(self.vertices.clone(), edges, self.leads.clone())
    }

    /// Replaces edge `edge` by two edges meeting at a new degree-2 vertex
    /// placed `position` meters from the edge's `u` end.
    pub fn split_edge(&self, edge: usize, position: f64) -> Result<Self, GraphError> {
        let target = self.edges.get(edge).ok_or(GraphError::NoSuchEdge(edge))?;
        if !(position > 0.0 && position < target.length) {
            return Err(GraphError::SplitOutOfRange {
                position,
                length: target.length,
            });
        }
        let mut vertices = self.vertices.clone();
        let mut name = format!("{}@{}", target.id, position);
        while vertices.contains(&name) {
            name.push('\'');
        }
        let mid = vertices.len();
        vertices.push(name);

        let mut edges = Vec::with_capacity(self.edges.len() + 1);
        for (i, e) in self.edges.iter().enumerate() {
            if i == edge {
                edges.push(Edge {
                    id: format!("{}.0", e.id),
                    u: e.u,
                    v: mid,
                    length: position,
                });
                edges.push(Edge {
                    id: format!("{}.1", e.id),
                    u: mid,
                    v: e.v,
                    length: e.length - position,
                });
            } else {
                edges.push(e.clone());
            }
        }
        Self::new(vertices, edges, self.leads.clone())
    }
}

fn check_unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a String>) -> Result<(), GraphError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(GraphError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

/// A chain of regular polygons joined by connector edges, with one lead on
/// each end polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonChainSpec {
    pub polygon_sizes: Vec<usize>,
    /// Edge length of each polygon, meters.
    pub polygon_edge_lengths: Vec<f64>,
    /// Length `l'` of the edges joining consecutive polygons, meters.
    pub connector_length: f64,
}

impl PolygonChainSpec {
    /// Polygons of the given sizes, all with edge length `edge` and
    /// connectors of length `connector`.
    pub fn uniform(sizes: &[usize], edge: f64, connector: f64) -> Self {
        Self {
            polygon_sizes: sizes.to_vec(),
            polygon_edge_lengths: vec![edge; sizes.len()],
            connector_length: connector,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.polygon_sizes.is_empty() {
            return Err(GraphError::InvalidChain("no polygons".into()));
        }
        if self.polygon_sizes.len() != self.polygon_edge_lengths.len() {
            return Err(GraphError::InvalidChain(format!(
                "{} polygon sizes but {} edge lengths",
                self.polygon_sizes.len(),
                self.polygon_edge_lengths.len()
            )));
        }
        if let Some(&n) = self.polygon_sizes.iter().find(|&&n| n < 3) {
            return Err(GraphError::PolygonTooSmall(n));
        }
        let lengths_ok = self
            .polygon_edge_lengths
            .iter()
            .all(|l| l.is_finite() && *l > 0.0);
        let connector_ok = self.connector_length.is_finite() && self.connector_length > 0.0;
        if !lengths_ok || (self.polygon_sizes.len() > 1 && !connector_ok) {
            return Err(GraphError::InvalidChain("lengths must be finite and > 0".into()));
        }
        Ok(())
    }
}

/// Vertex labels `a`, `b`, ... `z`, then `v26`, `v27`, ...
fn vertex_label(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("v{i}")
    }
}

/// Builds the polygon chain described by `spec`.
///
/// Each polygon's vertices are labelled consecutively around its cycle
/// (`a, b, c` for the first triangle, and so on). Polygon `i` enters at its
/// first vertex and leaves at its last one, so the two ports of every inner
/// polygon are adjacent. The input lead sits on the first vertex of the first
/// polygon and the output lead on the last vertex of the last polygon, each
/// adjacent to the connector port of its polygon. A single polygon gets its
/// two leads on two adjacent vertices.
pub fn build_polygon_chain(spec: &PolygonChainSpec) -> Result<MetricGraph, GraphError> {
    spec.validate()?;
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut ports = Vec::new();
    for (&n, &len) in spec.polygon_sizes.iter().zip(&spec.polygon_edge_lengths) {
        let first = vertices.len();
        for j in 0..n {
            vertices.push(vertex_label(first + j));
        }
        for j in 0..n {
            let u = first + j;
            let v = first + (j + 1) % n;
            edges.push(Edge {
                id: format!("{}{}", vertices[u], vertices[v]),
                u,
                v,
                length: len,
            });
        }
        ports.push((first, first + n - 1));
    }
    for pair in ports.windows(2) {
        let (u, v) = (pair[0].1, pair[1].0);
        edges.push(Edge {
            id: format!("{}{}", vertices[u], vertices[v]),
            u,
            v,
            length: spec.connector_length,
        });
    }
    let leads = vec![
        Lead {
            id: "in".into(),
            vertex: ports[0].0,
        },
        Lead {
            id: "out".into(),
            vertex: ports[ports.len() - 1].1,
        },
    ];
    MetricGraph::new(vertices, edges, leads)
}

/// `C3 C4 C3` or similar chains with every polygon edge `l` and connectors `l'`.
pub fn uniform_chain(sizes: &[usize], l: f64, connector: f64) -> Result<MetricGraph, GraphError> {
    build_polygon_chain(&PolygonChainSpec::uniform(sizes, l, connector))
}

/// The triangle-square-triangle chain with irrational edge lengths
/// `l/e`, `l/sqrt(3)`, `l/sqrt(5)` and connectors `l/pi`.
pub fn irrational_c3c4c3(l: f64) -> MetricGraph {
    let spec = PolygonChainSpec {
        polygon_sizes: vec![3, 4, 3],
        polygon_edge_lengths: vec![l / std::f64::consts::E, l / 3f64.sqrt(), l / 5f64.sqrt()],
        connector_length: l / std::f64::consts::PI,
    };
    build_polygon_chain(&spec).expect("fixed valid chain")
}
