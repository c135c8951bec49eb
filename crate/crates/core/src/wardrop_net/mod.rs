//! The directed Wardrop network built from a normalized MFG network.
//!
//! Every edge/vertex pair `(e_k, v_i)` becomes a vertex. Each undirected edge
//! `e_k = (v_r, v_i)` gives a forward edge `(e_k,v_r) → (e_k,v_i)` and a
//! backward edge `(e_k,v_i) → (e_k,v_r)`; each turn `e_k → e_l` at `v_i` with
//! finite switching cost gives a transition edge `(e_k,v_i) → (e_l,v_i)`.
//! Edges entering an entrance pair or leaving an exit pair are dropped.

mod io;
mod loops;

use std::collections::HashMap;

use crate::edgecost::EdgeModel;
use crate::error::{Error, Result};
use crate::netmodel::{EdgeId, Network, SwitchCost, VertexId, VertexKind};

pub use io::{DirectedNetFile, DotOptions};
pub use loops::find_loops;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRole {
    Interior,
    Entrance,
    Exit,
}

/// A directed-network vertex: MFG edge `edge` seen from its endpoint `vertex`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairVertex {
    pub edge: usize,
    pub vertex: VertexId,
    pub role: PairRole,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectedCost {
    /// A switching cost.
    Constant(f64),
    /// `c01(j_self − j_partner)` when `forward`, else `c10(j_partner − j_self)`.
    Lifted {
        edge: usize,
        forward: bool,
        partner: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectedKind {
    Forward,
    Backward,
    Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedEdge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub kind: DirectedKind,
    /// For transitions, the edges turned from and into.
    pub turn: Option<(usize, usize)>,
    pub cost: DirectedCost,
}

/// Counts from the construction, before and after pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformStats {
    pub candidate_edges: usize,
    pub candidate_vertices: usize,
    pub pruned_boundary: usize,
    pub omitted_infinite: usize,
    pub kept_edges: usize,
}

/// Nonnegative currents indexed by directed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub j: Vec<f64>,
}

impl FlowState {
    pub fn zeros(n: usize) -> Self {
        FlowState { j: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.j.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostEvaluation {
    pub costs: Vec<f64>,
    /// `⟨c̄(j̄), j̄⟩`.
    pub social_cost: f64,
}

#[derive(Debug, Clone)]
pub struct DirectedNet {
    pub vertices: Vec<PairVertex>,
    pub edges: Vec<DirectedEdge>,
    /// Ids of the MFG edges, indexed like `models`.
    pub mfg_edges: Vec<EdgeId>,
    pub models: Vec<EdgeModel>,
    /// Directed-vertex index of each Kirchhoff row (all non-exit pairs).
    pub rows: Vec<usize>,
    /// Dense Kirchhoff matrix: `+1` where the row is the tail, `−1` the head.
    pub kirchhoff: Vec<Vec<i8>>,
    /// Entry currents at entrance rows, zero elsewhere.
    pub demand: Vec<f64>,
    pub stats: TransformStats,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

/// Builds the directed Wardrop network. The input must be normalized.
pub fn transform(net: &Network) -> Result<DirectedNet> {
    if !net.is_normalized() {
        return Err(Error::NotNormalized(
            "every entrance and exit needs incidence 1 and exits need zero exit cost".into(),
        ));
    }
    let models = net.build_models()?;
    let kinds: HashMap<&VertexId, VertexKind> = net.vertices.iter().map(|v| (&v.id, v.kind)).collect();
    let kind_of = |v: &VertexId| {
        kinds
            .get(v)
            .copied()
            .ok_or_else(|| Error::InvalidNetwork(format!("edge endpoint `{v}` is not a vertex")))
    };

    let mut vertices = Vec::with_capacity(2 * net.edges.len());
    let mut pair_index: HashMap<(usize, &VertexId), usize> = HashMap::new();
    for (k, e) in net.edges.iter().enumerate() {
        for end in [&e.tail, &e.head] {
            let role = match kind_of(end)? {
                VertexKind::Interior => PairRole::Interior,
                VertexKind::Entrance => PairRole::Entrance,
                VertexKind::Exit => PairRole::Exit,
            };
            pair_index.insert((k, end), vertices.len());
            vertices.push(PairVertex {
                edge: k,
                vertex: end.clone(),
                role,
                label: format!("({},{})", e.id, end),
            });
        }
    }

    let mut stats = TransformStats {
        candidate_vertices: vertices.len(),
        ..Default::default()
    };
    let mut edges: Vec<DirectedEdge> = Vec::new();
    let keep =
        |tail: usize, head: usize| vertices[head].role != PairRole::Entrance && vertices[tail].role != PairRole::Exit;

    let mut lifted: Vec<[Option<usize>; 2]> = vec![[None, None]; net.edges.len()];
    for (k, e) in net.edges.iter().enumerate() {
        let a = pair_index[&(k, &e.tail)];
        let b = pair_index[&(k, &e.head)];
        for (forward, tail, head) in [(true, a, b), (false, b, a)] {
            stats.candidate_edges += 1;
            if !keep(tail, head) {
                stats.pruned_boundary += 1;
                continue;
            }
            lifted[k][usize::from(!forward)] = Some(edges.len());
            edges.push(DirectedEdge {
                id: format!("{}{}", e.id, if forward { "+" } else { "-" }),
                tail,
                head,
                kind: if forward {
                    DirectedKind::Forward
                } else {
                    DirectedKind::Backward
                },
                turn: None,
                cost: DirectedCost::Lifted {
                    edge: k,
                    forward,
                    partner: None,
                },
            });
        }
    }
    for pair in &lifted {
        if let [Some(f), Some(b)] = *pair {
            for (me, other) in [(f, b), (b, f)] {
                if let DirectedCost::Lifted { partner, .. } = &mut edges[me].cost {
                    *partner = Some(other);
                }
            }
        }
    }

    for v in &net.vertices {
        let inc = net.incident_edges(&v.id);
        for &k in &inc {
            for &l in &inc {
                if k == l {
                    continue;
                }
                stats.candidate_edges += 1;
                let tail = pair_index[&(k, &v.id)];
                let head = pair_index[&(l, &v.id)];
                if !keep(tail, head) {
                    stats.pruned_boundary += 1;
                    continue;
                }
                let psi = match net.switching.get(&v.id, &net.edges[k].id, &net.edges[l].id) {
                    SwitchCost::Infinite => {
                        stats.omitted_infinite += 1;
                        continue;
                    }
                    SwitchCost::Finite(c) => c,
                };
                edges.push(DirectedEdge {
                    id: format!("{}>{}@{}", net.edges[k].id, net.edges[l].id, v.id),
                    tail,
                    head,
                    kind: DirectedKind::Transition,
                    turn: Some((k, l)),
                    cost: DirectedCost::Constant(psi),
                });
            }
        }
    }
    stats.kept_edges = edges.len();

    let rows: Vec<usize> = (0..vertices.len())
        .filter(|&i| vertices[i].role != PairRole::Exit)
        .collect();
    let mut row_of = vec![usize::MAX; vertices.len()];
    for (r, &i) in rows.iter().enumerate() {
        row_of[i] = r;
    }
    let mut kirchhoff = vec![vec![0i8; edges.len()]; rows.len()];
    for (c, e) in edges.iter().enumerate() {
        if row_of[e.tail] != usize::MAX {
            kirchhoff[row_of[e.tail]][c] += 1;
        }
        if row_of[e.head] != usize::MAX {
            kirchhoff[row_of[e.head]][c] -= 1;
        }
    }
    let demand = rows
        .iter()
        .map(|&i| match vertices[i].role {
            PairRole::Entrance => net.entry_current(&vertices[i].vertex),
            _ => 0.0,
        })
        .collect();

    let mut out_edges = vec![Vec::new(); vertices.len()];
    let mut in_edges = vec![Vec::new(); vertices.len()];
    for (c, e) in edges.iter().enumerate() {
        out_edges[e.tail].push(c);
        in_edges[e.head].push(c);
    }
    log::debug!(
        "transform: {} candidate edges, {} kept, {} vertices",
        stats.candidate_edges,
        stats.kept_edges,
        vertices.len()
    );

    Ok(DirectedNet {
        vertices,
        edges,
        mfg_edges: net.edges.iter().map(|e| e.id.clone()).collect(),
        models,
        rows,
        kirchhoff,
        demand,
        stats,
        out_edges,
        in_edges,
    })
}

impl DirectedNet {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn entrances(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&i| self.vertices[i].role == PairRole::Entrance)
    }

    pub fn exits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&i| self.vertices[i].role == PairRole::Exit)
    }

    /// Entry current at a directed vertex (zero unless it is an entrance pair).
    pub fn entry_current(&self, v: usize) -> f64 {
        self.rows
            .iter()
            .position(|&i| i == v)
            .map(|r| self.demand[r])
            .unwrap_or(0.0)
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }

    /// Pairs of (forward, backward) directed edges for MFG edges where both
    /// survived pruning.
    pub fn doubled_pairs(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match e.cost {
                DirectedCost::Lifted {
                    forward: true,
                    partner: Some(p),
                    ..
                } => Some((i, p)),
                _ => None,
            })
            .collect()
    }

    pub fn check_flow(&self, flow: &FlowState) -> Result<()> {
        if flow.len() != self.edges.len() {
            return Err(Error::Dimension {
                expected: self.edges.len(),
                got: flow.len(),
            });
        }
        Ok(())
    }

    /// Signed MFG current `j_k = j_k^i − j_k^r` on directed edge `c`'s edge.
    fn signed_current(&self, c: usize, flow: &[f64]) -> f64 {
        match self.edges[c].cost {
            DirectedCost::Lifted { forward, partner, .. } => {
                let other = partner.map(|p| flow[p]).unwrap_or(0.0);
                if forward {
                    flow[c] - other
                } else {
                    other - flow[c]
                }
            }
            DirectedCost::Constant(_) => 0.0,
        }
    }

    /// Cost of a single directed edge at `flow`.
    pub fn edge_cost(&self, c: usize, flow: &[f64]) -> Result<f64> {
        match self.edges[c].cost {
            DirectedCost::Constant(psi) => Ok(psi),
            DirectedCost::Lifted { edge, forward, .. } => {
                let j = self.signed_current(c, flow);
                let model = &self.models[edge];
                let r = if forward { model.c01(j) } else { model.c10(j) };
                r.map_err(|e| e.on_edge(&self.edges[c].id))
            }
        }
    }

    pub fn evaluate_costs(&self, flow: &FlowState) -> Result<CostEvaluation> {
        self.check_flow(flow)?;
        let costs = (0..self.edges.len())
            .map(|c| self.edge_cost(c, &flow.j))
            .collect::<Result<Vec<_>>>()?;
        let social_cost = costs.iter().zip(&flow.j).map(|(c, j)| c * j).sum();
        Ok(CostEvaluation { costs, social_cost })
    }

    /// `K·j̄ − B`.
    pub fn kirchhoff_residual(&self, flow: &FlowState) -> Vec<f64> {
        self.kirchhoff
            .iter()
            .zip(&self.demand)
            .map(|(row, b)| row.iter().zip(&flow.j).map(|(&k, &j)| f64::from(k) * j).sum::<f64>() - b)
            .collect()
    }

    pub fn max_kirchhoff_residual(&self, flow: &FlowState) -> f64 {
        self.kirchhoff_residual(flow)
            .into_iter()
            .fold(0.0, |a: f64, r| a.max(r.abs()))
    }

    /// `max_k j_k^i·j_k^r` over doubled pairs.
    pub fn complementarity(&self, flow: &FlowState) -> f64 {
        self.doubled_pairs()
            .into_iter()
            .map(|(f, b)| flow.j[f] * flow.j[b])
            .fold(0.0, f64::max)
    }

    /// Net MFG currents `j_k^i − j_k^r`, one per MFG edge.
    pub fn mfg_currents(&self, flow: &FlowState) -> Vec<f64> {
        let mut out = vec![0.0; self.models.len()];
        for (c, e) in self.edges.iter().enumerate() {
            if let DirectedCost::Lifted { edge, forward, .. } = e.cost {
                out[edge] += if forward { flow.j[c] } else { -flow.j[c] };
            }
        }
        out
    }

    /// Smallest loop cost `c̄_fwd + c̄_bwd` over doubled pairs at `flow`;
    /// infinite when there are none.
    pub fn min_pair_cost(&self, flow: &FlowState) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (f, b) in self.doubled_pairs() {
            best = best.min(self.edge_cost(f, &flow.j)? + self.edge_cost(b, &flow.j)?);
        }
        Ok(best)
    }

    pub fn relabeling(&self) -> Vec<(String, String)> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("w{}", i + 1), v.label.clone()))
            .collect()
    }
}
