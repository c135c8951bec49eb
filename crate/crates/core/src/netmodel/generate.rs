//! Seeded random networks for property tests and benchmarks.
//!
//! Generated networks are connected, already normalized and satisfy the strict
//! triangle inequality on switching costs. Basic edges carry affine costs
//! `a + b|j|` or, with probability `congestion_share`, a congestion
//! Hamiltonian with a negative constant potential (which keeps `c(0) > 0`).

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundaryData, Edge, EdgeId, EdgeKind, Network, SwitchCost, SwitchingCosts, Vertex, VertexId, VertexKind};
use crate::edgecost::{CostForm, ModelSpec, Polynomial, PowerCoupling};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetOptions {
    pub vertices: (usize, usize),
    pub basic_edges: (usize, usize),
    pub entrances: (usize, usize),
    pub exits: (usize, usize),
    pub congestion_share: f64,
    /// Scale of per-vertex switching costs; zero disables them.
    pub switching_scale: (f64, f64),
}

impl Default for RandomNetOptions {
    fn default() -> Self {
        RandomNetOptions {
            vertices: (3, 6),
            basic_edges: (3, 8),
            entrances: (1, 2),
            exits: (1, 2),
            congestion_share: 0.25,
            switching_scale: (0.05, 0.3),
        }
    }
}

pub fn random_network(seed: u64, opts: &RandomNetOptions) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(opts.vertices.0..=opts.vertices.1).max(2);
    let names: Vec<VertexId> = (0..n).map(|i| VertexId(format!("v{i}"))).collect();

    // Spanning tree first, then extra simple edges up to the target count.
    let max_simple = n * (n - 1) / 2;
    let target = rng
        .gen_range(opts.basic_edges.0..=opts.basic_edges.1)
        .clamp(n - 1, max_simple);
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut list = Vec::new();
    for i in 1..n {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        pairs.insert((a.min(b), a.max(b)));
        list.push((a, b));
    }
    while list.len() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && pairs.insert((a.min(b), a.max(b))) {
            list.push((a, b));
        }
    }

    let mut models = BTreeMap::new();
    let mut edges = Vec::new();
    for (k, &(a, b)) in list.iter().enumerate() {
        let name = format!("m{k}");
        let spec = if rng.gen_bool(opts.congestion_share.clamp(0.0, 1.0)) {
            ModelSpec::Congestion {
                alpha: 0.0,
                potential: Polynomial {
                    coeffs: vec![-rng.gen_range(0.5..2.0)],
                },
                coupling: PowerCoupling::new(0.0, rng.gen_range(0.5..2.0), 1.0),
            }
        } else {
            ModelSpec::symmetric(CostForm::affine(rng.gen_range(0.5..2.0), rng.gen_range(0.5..3.0)))
        };
        models.insert(name.clone(), spec);
        edges.push(Edge {
            id: EdgeId(format!("e{k}")),
            tail: names[a].clone(),
            head: names[b].clone(),
            model: name,
            kind: EdgeKind::Basic,
        });
    }

    let mut shuffled: Vec<usize> = (0..n).collect();
    shuffled.shuffle(&mut rng);
    let n_in = rng.gen_range(opts.entrances.0..=opts.entrances.1).clamp(1, n - 1);
    let n_out = rng.gen_range(opts.exits.0..=opts.exits.1).clamp(1, n - n_in);
    let ins = &shuffled[..n_in];
    let outs = &shuffled[n_in..n_in + n_out];

    let mut vertices: Vec<Vertex> = names
        .iter()
        .map(|id| Vertex {
            id: id.clone(),
            kind: VertexKind::Interior,
        })
        .collect();
    let mut entry_current = BTreeMap::new();
    models.insert("zero".to_string(), ModelSpec::constant(0.0));
    for &i in ins {
        let w = VertexId(format!("in{i}"));
        vertices.push(Vertex {
            id: w.clone(),
            kind: VertexKind::Entrance,
        });
        edges.push(Edge {
            id: EdgeId(format!("a_in{i}")),
            tail: w.clone(),
            head: names[i].clone(),
            model: "zero".to_string(),
            kind: EdgeKind::EntranceAux,
        });
        entry_current.insert(w, rng.gen_range(0.5..3.0));
    }
    for &i in outs {
        let w = VertexId(format!("out{i}"));
        vertices.push(Vertex {
            id: w.clone(),
            kind: VertexKind::Exit,
        });
        let model = if rng.gen_bool(0.5) {
            "zero".to_string()
        } else {
            let name = format!("exit{i}");
            models.insert(name.clone(), ModelSpec::constant(rng.gen_range(0.0..1.0)));
            name
        };
        edges.push(Edge {
            id: EdgeId(format!("a_out{i}")),
            tail: names[i].clone(),
            head: w,
            model,
            kind: EdgeKind::ExitAux,
        });
    }

    let mut switching = SwitchingCosts::default();
    for v in &names {
        let inc: Vec<&Edge> = edges.iter().filter(|e| &e.tail == v || &e.head == v).collect();
        let s = if opts.switching_scale.1 > 0.0 {
            rng.gen_range(opts.switching_scale.0..=opts.switching_scale.1)
        } else {
            0.0
        };
        for k in &inc {
            for l in &inc {
                if k.id == l.id {
                    continue;
                }
                let cost = match (k.kind, l.kind) {
                    (_, EdgeKind::EntranceAux) | (EdgeKind::ExitAux, _) => SwitchCost::Infinite,
                    (EdgeKind::EntranceAux, _) | (_, EdgeKind::ExitAux) => SwitchCost::Finite(0.0),
                    _ => SwitchCost::Finite(s * (1.0 + 0.2 * rng.gen::<f64>())),
                };
                switching.set(v, &k.id, &l.id, cost);
            }
        }
    }

    Network {
        vertices,
        edges,
        models,
        boundary: BoundaryData {
            entry_current,
            exit_cost: BTreeMap::new(),
        },
        switching,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{validate_with, ValidateOptions};

    #[test]
    fn random_networks_validate_strictly() {
        for seed in 0..40 {
            let net = random_network(seed, &RandomNetOptions::default());
            let report = validate_with(&net, ValidateOptions { strict_triangle: true });
            assert!(report.is_empty(), "seed {seed}:\n{report}");
            assert!(net.is_normalized());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_network(7, &RandomNetOptions::default());
        let b = random_network(7, &RandomNetOptions::default());
        assert_eq!(a, b);
    }
}
