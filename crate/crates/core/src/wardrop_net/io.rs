//! Text dumps of a directed network: a TOML description and a DOT graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DirectedCost, DirectedKind, DirectedNet, FlowState, PairRole};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedVertexRecord {
    pub id: String,
    pub edge: String,
    pub vertex: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DirectedCostRecord {
    Constant {
        value: f64,
    },
    Lifted {
        edge: String,
        model: String,
        direction: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        partner: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedEdgeRecord {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub kind: String,
    pub cost: DirectedCostRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub candidate_edges: usize,
    pub candidate_vertices: usize,
    pub pruned_boundary: usize,
    pub omitted_infinite: usize,
    pub kept_edges: usize,
}

/// Serializable form of a [`DirectedNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedNetFile {
    pub vertices: Vec<DirectedVertexRecord>,
    pub edges: Vec<DirectedEdgeRecord>,
    pub demand: BTreeMap<String, f64>,
    pub stats: StatsRecord,
}

fn role_name(r: PairRole) -> &'static str {
    match r {
        PairRole::Interior => "interior",
        PairRole::Entrance => "entrance",
        PairRole::Exit => "exit",
    }
}

fn kind_name(k: DirectedKind) -> &'static str {
    match k {
        DirectedKind::Forward => "forward",
        DirectedKind::Backward => "backward",
        DirectedKind::Transition => "transition",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DotOptions {
    /// Label vertices `w1, w2, …` instead of `(edge,vertex)`.
    pub relabel: bool,
}

impl DirectedNet {
    fn vertex_name(&self, i: usize) -> String {
        format!("w{}", i + 1)
    }

    pub fn to_file(&self) -> DirectedNetFile {
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| DirectedVertexRecord {
                id: self.vertex_name(i),
                edge: self.mfg_edges[v.edge].0.clone(),
                vertex: v.vertex.0.clone(),
                role: role_name(v.role).to_string(),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| DirectedEdgeRecord {
                id: e.id.clone(),
                tail: self.vertex_name(e.tail),
                head: self.vertex_name(e.head),
                kind: kind_name(e.kind).to_string(),
                cost: match e.cost {
                    DirectedCost::Constant(value) => DirectedCostRecord::Constant { value },
                    DirectedCost::Lifted { edge, forward, partner } => DirectedCostRecord::Lifted {
                        edge: self.mfg_edges[edge].0.clone(),
                        model: model_label(self, edge),
                        direction: if forward { "c01" } else { "c10" }.to_string(),
                        partner: partner.map(|p| self.edges[p].id.clone()),
                    },
                },
            })
            .collect();
        let demand = self
            .rows
            .iter()
            .zip(&self.demand)
            .filter(|(_, &b)| b != 0.0)
            .map(|(&i, &b)| (self.vertex_name(i), b))
            .collect();
        let s = self.stats;
        DirectedNetFile {
            vertices,
            edges,
            demand,
            stats: StatsRecord {
                candidate_edges: s.candidate_edges,
                candidate_vertices: s.candidate_vertices,
                pruned_boundary: s.pruned_boundary,
                omitted_infinite: s.omitted_infinite,
                kept_edges: s.kept_edges,
            },
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&self.to_file()).map_err(|e| Error::Parse(e.to_string()))
    }

    /// DOT graph; lifted edges are blue, transitions red. When `flow` is
    /// given, edge labels include the current.
    pub fn to_dot(&self, opts: DotOptions, flow: Option<&FlowState>) -> String {
        let mut s = String::from("digraph wardrop {\n  rankdir=LR;\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let label = if opts.relabel {
                self.vertex_name(i)
            } else {
                v.label.clone()
            };
            let shape = match v.role {
                PairRole::Interior => "ellipse",
                PairRole::Entrance => "invhouse",
                PairRole::Exit => "house",
            };
            let _ = writeln!(s, "  n{i} [label=\"{label}\", shape={shape}];");
        }
        for (c, e) in self.edges.iter().enumerate() {
            let color = match e.kind {
                DirectedKind::Transition => "red",
                _ => "blue",
            };
            let mut label = match e.cost {
                DirectedCost::Constant(v) => format!("{} [{v}]", e.id),
                DirectedCost::Lifted { .. } => e.id.clone(),
            };
            if let Some(f) = flow {
                let _ = write!(label, " j={:.6}", f.j[c]);
            }
            let _ = writeln!(s, "  n{} -> n{} [label=\"{label}\", color={color}];", e.tail, e.head);
        }
        s.push_str("}\n");
        s
    }
}

fn model_label(d: &DirectedNet, edge: usize) -> String {
    match d.models[edge].spec() {
        crate::edgecost::ModelSpec::ClosedForm { .. } => "closed_form",
        crate::edgecost::ModelSpec::Congestion { .. } => "congestion",
        crate::edgecost::ModelSpec::Separable { .. } => "separable",
        crate::edgecost::ModelSpec::Calibrated(_) => "calibrated",
    }
    .to_string()
}
