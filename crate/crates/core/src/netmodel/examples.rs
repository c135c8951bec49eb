//! Small reference networks used in tests, the CLI demo and the benches.

use std::collections::BTreeMap;

use super::{BoundaryData, Edge, EdgeId, EdgeKind, Network, SwitchCost, SwitchingCosts, Vertex, VertexId, VertexKind};
use crate::edgecost::{CostForm, ModelSpec};

fn vertex(id: &str, kind: VertexKind) -> Vertex {
    Vertex {
        id: VertexId::from(id),
        kind,
    }
}

fn edge(id: &str, tail: &str, head: &str, model: &str, kind: EdgeKind) -> Edge {
    Edge {
        id: EdgeId::from(id),
        tail: VertexId::from(tail),
        head: VertexId::from(head),
        model: model.to_string(),
        kind,
    }
}

/// Sets the turn costs at `v` between an auxiliary edge and its neighbours:
/// free in the allowed direction, forbidden in the other.
fn protect(sw: &mut SwitchingCosts, v: &str, aux: &str, basic: &[&str], entering: bool) {
    let (v, aux) = (VertexId::from(v), EdgeId::from(aux));
    for b in basic {
        let b = EdgeId::from(*b);
        let (free, banned) = if entering {
            ((&aux, &b), (&b, &aux))
        } else {
            ((&b, &aux), (&aux, &b))
        };
        sw.set(&v, free.0, free.1, SwitchCost::Finite(0.0));
        sw.set(&v, banned.0, banned.1, SwitchCost::Infinite);
    }
}

/// The Braess network with demand 4000 from `v1` to `v4`.
///
/// `e1`, `e4` cost `45 + ε|j|`, `e2`, `e3` cost `|j|/100` and the optional
/// bridge `e5 = (v2, v3)` costs `ε|j|`. Auxiliary edges `a1 = (w1, v1)` and
/// `a4 = (v4, w4)` carry zero cost.
pub fn braess(with_bridge: bool, epsilon: f64) -> Network {
    let vertices = vec![
        vertex("w1", VertexKind::Entrance),
        vertex("v1", VertexKind::Interior),
        vertex("v2", VertexKind::Interior),
        vertex("v3", VertexKind::Interior),
        vertex("v4", VertexKind::Interior),
        vertex("w4", VertexKind::Exit),
    ];
    let mut edges = vec![
        edge("e1", "v1", "v2", "slow", EdgeKind::Basic),
        edge("e2", "v1", "v3", "linear", EdgeKind::Basic),
        edge("e3", "v2", "v4", "linear", EdgeKind::Basic),
        edge("e4", "v3", "v4", "slow", EdgeKind::Basic),
    ];
    if with_bridge {
        edges.push(edge("e5", "v2", "v3", "bridge", EdgeKind::Basic));
    }
    edges.push(edge("a1", "w1", "v1", "zero", EdgeKind::EntranceAux));
    edges.push(edge("a4", "v4", "w4", "zero", EdgeKind::ExitAux));

    let mut models = BTreeMap::new();
    models.insert(
        "slow".to_string(),
        ModelSpec::symmetric(CostForm::affine(45.0, epsilon)),
    );
    models.insert("linear".to_string(), ModelSpec::symmetric(CostForm::affine(0.0, 0.01)));
    models.insert("zero".to_string(), ModelSpec::constant(0.0));
    if with_bridge {
        models.insert(
            "bridge".to_string(),
            ModelSpec::symmetric(CostForm::affine(0.0, epsilon)),
        );
    }

    let mut switching = SwitchingCosts::default();
    protect(&mut switching, "v1", "a1", &["e1", "e2"], true);
    protect(&mut switching, "v4", "a4", &["e3", "e4"], false);

    Network {
        vertices,
        edges,
        models,
        boundary: BoundaryData {
            entry_current: BTreeMap::from([(VertexId::from("w1"), 4000.0)]),
            exit_cost: BTreeMap::new(),
        },
        switching,
    }
}

/// A single basic edge `e = (v0, v1)` with auxiliary entrance and exit edges.
pub fn one_edge(model: ModelSpec, demand: f64) -> Network {
    let mut models = BTreeMap::new();
    models.insert("edge".to_string(), model);
    models.insert("zero".to_string(), ModelSpec::constant(0.0));
    let mut switching = SwitchingCosts::default();
    protect(&mut switching, "v0", "a0", &["e"], true);
    protect(&mut switching, "v1", "a1", &["e"], false);
    Network {
        vertices: vec![
            vertex("w0", VertexKind::Entrance),
            vertex("v0", VertexKind::Interior),
            vertex("v1", VertexKind::Interior),
            vertex("w1", VertexKind::Exit),
        ],
        edges: vec![
            edge("e", "v0", "v1", "edge", EdgeKind::Basic),
            edge("a0", "w0", "v0", "zero", EdgeKind::EntranceAux),
            edge("a1", "v1", "w1", "zero", EdgeKind::ExitAux),
        ],
        models,
        boundary: BoundaryData {
            entry_current: BTreeMap::from([(VertexId::from("w0"), demand)]),
            exit_cost: BTreeMap::new(),
        },
        switching,
    }
}

/// Path `v1 - v2 - v3 - v4` with entrances `v1`, `v3` and exits `v2`, `v4`,
/// before normalization. All switching costs are zero.
pub fn two_in_two_out(model: ModelSpec) -> Network {
    let mut models = BTreeMap::new();
    models.insert("edge".to_string(), model);
    Network {
        vertices: vec![
            vertex("v1", VertexKind::Entrance),
            vertex("v2", VertexKind::Exit),
            vertex("v3", VertexKind::Entrance),
            vertex("v4", VertexKind::Exit),
        ],
        edges: vec![
            edge("e1", "v1", "v2", "edge", EdgeKind::Basic),
            edge("e2", "v2", "v3", "edge", EdgeKind::Basic),
            edge("e3", "v3", "v4", "edge", EdgeKind::Basic),
        ],
        models,
        boundary: BoundaryData {
            entry_current: BTreeMap::from([(VertexId::from("v1"), 1.0), (VertexId::from("v3"), 1.0)]),
            exit_cost: BTreeMap::new(),
        },
        switching: SwitchingCosts::default(),
    }
}
