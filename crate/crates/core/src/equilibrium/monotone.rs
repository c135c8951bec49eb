//! Sampling test of `⟨c̄(j̄₁) − c̄(j̄₂), j̄₁ − j̄₂⟩ ≥ 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::paths::{edge_flows, initial_paths};
use crate::error::Result;
use crate::wardrop_net::{DirectedNet, FlowState};

/// Contributions of one doubled pair, split by which direction is active in
/// each sample: forward/forward, forward/backward, backward/forward,
/// backward/backward.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCases {
    pub edge: String,
    pub min: [f64; 4],
    pub count: [usize; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub min_product: f64,
    pub pairs: Vec<PairCases>,
    /// The sample pair attaining `min_product`.
    pub worst: Option<(FlowState, FlowState)>,
}

impl MonotonicityReport {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.min_product >= -tol
    }
}

/// Random admissible flow: a random walk split per entrance, then opposing
/// currents on each doubled pair cancelled so that at most one direction is
/// active. Cancellation removes a two-edge loop and keeps `K·j̄ = B`.
fn random_flow(dnet: &DirectedNet, seed: u64) -> Result<FlowState> {
    let allowed = vec![true; dnet.n_edges()];
    let ents = initial_paths(dnet, &allowed, Some(seed))?;
    let mut j = edge_flows(dnet, &ents);
    for (f, b) in dnet.doubled_pairs() {
        let m = j[f].min(j[b]);
        j[f] -= m;
        j[b] -= m;
    }
    Ok(FlowState { j })
}

/// Draws `samples` pairs of admissible flows and reports the smallest
/// product, with its per-pair decomposition.
pub fn check_monotone(dnet: &DirectedNet, samples: usize, seed: u64) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = dnet.doubled_pairs();
    let mut cases: Vec<PairCases> = pairs
        .iter()
        .map(|&(f, _)| PairCases {
            edge: dnet.mfg_edges[match dnet.edges[f].cost {
                crate::wardrop_net::DirectedCost::Lifted { edge, .. } => edge,
                _ => unreachable!(),
            }]
            .0
            .clone(),
            min: [f64::INFINITY; 4],
            count: [0; 4],
        })
        .collect();
    let mut min_product = f64::INFINITY;
    let mut worst = None;
    for _ in 0..samples {
        let a = random_flow(dnet, rng.gen())?;
        let b = random_flow(dnet, rng.gen())?;
        let ca = dnet.evaluate_costs(&a)?.costs;
        let cb = dnet.evaluate_costs(&b)?.costs;
        let product: f64 = (0..dnet.n_edges()).map(|e| (ca[e] - cb[e]) * (a.j[e] - b.j[e])).sum();
        for (k, &(f, bk)) in pairs.iter().enumerate() {
            let dir = |x: &FlowState| usize::from(x.j[f] < x.j[bk]);
            let case = 2 * dir(&a) + dir(&b);
            let term = (ca[f] - cb[f]) * (a.j[f] - b.j[f]) + (ca[bk] - cb[bk]) * (a.j[bk] - b.j[bk]);
            cases[k].min[case] = cases[k].min[case].min(term);
            cases[k].count[case] += 1;
        }
        if product < min_product {
            min_product = product;
            worst = Some((a, b));
        }
    }
    Ok(MonotonicityReport {
        samples,
        min_product: if samples == 0 { 0.0 } else { min_product },
        pairs: cases,
        worst,
    })
}
