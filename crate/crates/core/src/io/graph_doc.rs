//! JSON graph descriptions.
//!
//! ```json
//! {"vertices": ["a", "b"],
//!  "edges": [{"id": "ab", "u": "a", "v": "b", "length_m": 0.25}],
//!  "leads": [{"id": "in", "vertex": "a"}, {"id": "out", "vertex": "b"}]}
//! ```
//!
//! or the polygon-chain shorthand
//!
//! ```json
//! {"chain": {"polygon_sizes": [3, 4, 3],
//!            "polygon_edge_lengths_m": [0.25, 0.25, 0.25],
//!            "connector_length_m": 0.25}}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_polygon_chain, Edge, GraphError, Lead, MetricGraph, PolygonChainSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphDocError {
    #[error("graph file is not UTF-8: {0}")]
    Utf8(String),
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("`chain` cannot be combined with `vertices`, `edges` or `leads`")]
    Conflict,
    #[error("document needs either `chain` or `vertices` and `edges`")]
    Empty,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub u: String,
    pub v: String,
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadDoc {
    pub id: String,
    pub vertex: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDoc {
    pub polygon_sizes: Vec<usize>,
    pub polygon_edge_lengths_m: Vec<f64>,
    pub connector_length_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<EdgeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leads: Option<Vec<LeadDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainDoc>,
}

fn positive(path: String, x: f64) -> Result<(), GraphDocError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(GraphDocError::Field {
            path,
            message: format!("length must be finite and > 0, got {x}"),
        })
    }
}

impl GraphDocument {
    pub fn parse(bytes: &[u8]) -> Result<Self, GraphDocError> {
        let text = std::str::from_utf8(bytes).map_err(|e| GraphDocError::Utf8(e.to_string()))?;
        serde_json::from_str(text).map_err(|e| GraphDocError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Explicit-list document for `graph`.
    pub fn from_graph(graph: &MetricGraph) -> Self {
        let names = graph.vertices();
        Self {
            vertices: Some(names.to_vec()),
            edges: Some(
                graph
                    .edges()
                    .iter()
                    .map(|e| EdgeDoc {
                        id: e.id.clone(),
                        u: names[e.u].clone(),
                        v: names[e.v].clone(),
                        length_m: e.length,
                    })
                    .collect(),
            ),
            leads: Some(
                graph
                    .leads()
                    .iter()
                    .map(|l| LeadDoc {
                        id: l.id.clone(),
                        vertex: names[l.vertex].clone(),
                    })
                    .collect(),
            ),
            chain: None,
        }
    }

    pub fn to_graph(&self) -> Result<MetricGraph, GraphDocError> {
        if let Some(chain) = &self.chain {
            if self.vertices.is_some() || self.edges.is_some() || self.leads.is_some() {
                return Err(GraphDocError::Conflict);
            }
            for (i, &x) in chain.polygon_edge_lengths_m.iter().enumerate() {
                positive(format!("chain.polygon_edge_lengths_m[{i}]"), x)?;
            }
            if chain.polygon_sizes.len() > 1 {
                positive("chain.connector_length_m".into(), chain.connector_length_m)?;
            }
            if let Some(i) = chain.polygon_sizes.iter().position(|&n| n < 3) {
                return Err(GraphDocError::Field {
                    path: format!("chain.polygon_sizes[{i}]"),
                    message: format!("polygon needs at least 3 vertices, got {}", chain.polygon_sizes[i]),
                });
            }
            let spec = PolygonChainSpec {
                polygon_sizes: chain.polygon_sizes.clone(),
                polygon_edge_lengths: chain.polygon_edge_lengths_m.clone(),
                connector_length: chain.connector_length_m,
            };
            return Ok(build_polygon_chain(&spec)?);
        }
        let (Some(vertices), Some(edges)) = (&self.vertices, &self.edges) else {
            return Err(GraphDocError::Empty);
        };
        let lookup = |path: String, name: &str| {
            vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| GraphDocError::Field {
                    path,
                    message: format!("unknown vertex `{name}`"),
                })
        };
        let mut resolved = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            positive(format!("edges[{i}].length_m"), e.length_m)?;
            resolved.push(Edge {
                id: e.id.clone(),
                u: lookup(format!("edges[{i}].u"), &e.u)?,
                v: lookup(format!("edges[{i}].v"), &e.v)?,
                length: e.length_m,
            });
        }
        let mut leads = Vec::new();
        for (i, l) in self.leads.iter().flatten().enumerate() {
            leads.push(Lead {
                id: l.id.clone(),
                vertex: lookup(format!("leads[{i}].vertex"), &l.vertex)?,
            });
        }
        Ok(MetricGraph::new(vertices.clone(), resolved, leads)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents serialize")
    }
}

/// Parses and validates a JSON graph description.
pub fn parse_graph_file(bytes: &[u8]) -> Result<MetricGraph, GraphDocError> {
    GraphDocument::parse(bytes)?.to_graph()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_chain;

    #[test]
    fn chain_shorthand() {
        let doc = br#"{"chain": {"polygon_sizes": [3, 4, 3],
            "polygon_edge_lengths_m": [0.25, 0.25, 0.25], "connector_length_m": 0.25}}"#;
        let g = parse_graph_file(doc).unwrap();
        assert_eq!(g, uniform_chain(&[3, 4, 3], 0.25, 0.25).unwrap());
    }

    #[test]
    fn explicit_single_edge() {
        let doc = br#"{"vertices": ["a", "b"],
            "edges": [{"id": "ab", "u": "a", "v": "b", "length_m": 1.0}],
            "leads": [{"id": "in", "vertex": "a"}, {"id": "out", "vertex": "b"}]}"#;
        let g = parse_graph_file(doc).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.total_length(), 1.0);
    }

    #[test]
    fn field_paths_in_errors() {
        let doc = br#"{"vertices": ["a", "b"], "edges": [
            {"id": "ab", "u": "a", "v": "b", "length_m": 1.0},
            {"id": "ba", "u": "b", "v": "a", "length_m": -0.5}]}"#;
        match parse_graph_file(doc) {
            Err(GraphDocError::Field { path, .. }) => assert_eq!(path, "edges[1].length_m"),
            other => panic!("{other:?}"),
        }
        let doc = br#"{"vertices": ["a"], "edges": [], "leads": [{"id": "in", "vertex": "q"}]}"#;
        assert!(matches!(parse_graph_file(doc), Err(GraphDocError::Field { path, .. }) if path == "leads[0].vertex"));
    }

    #[test]
    fn conflicts_and_syntax() {
        let doc = br#"{"vertices": ["a"], "chain": {"polygon_sizes": [3],
            "polygon_edge_lengths_m": [1.0], "connector_length_m": 1.0}}"#;
        assert_eq!(parse_graph_file(doc), Err(GraphDocError::Conflict));
        assert!(matches!(
            parse_graph_file(b"{\n  \"vertices\": [\"a\",]\n}"),
            Err(GraphDocError::Syntax { line: 2, .. })
        ));
        assert!(matches!(parse_graph_file(br#"{"nodes": []}"#), Err(GraphDocError::Syntax { .. })));
        assert_eq!(parse_graph_file(b"{}"), Err(GraphDocError::Empty));
        assert!(matches!(parse_graph_file(&[0xff, 0xfe]), Err(GraphDocError::Utf8(_))));
    }

    #[test]
    fn round_trip() {
        let g = uniform_chain(&[4, 3, 4], 0.25, 0.25 / 3.0).unwrap();
        let back = parse_graph_file(GraphDocument::from_graph(&g).to_json().as_bytes()).unwrap();
        assert_eq!(back, g);
    }
}
