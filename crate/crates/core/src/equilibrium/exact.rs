//! Orientation enumeration.
//!
//! At an equilibrium with positive loop costs every doubled pair carries
//! current in at most one direction. Fixing one direction per pair makes the
//! costs separable, so each orientation is a convex Beckmann program. The
//! orientations are tried in index order and the first whose solution has a
//! small gap on the full network wins.

use rayon::prelude::*;

use super::paths::{finish, initial_paths, run, EngineOutput};
use super::{SolveOptions, SolveResult, SolverKind};
use crate::error::{Error, Result};
use crate::wardrop_net::{DirectedNet, FlowState};

const CHUNK: u128 = 256;

fn allowed_for(dnet: &DirectedNet, pairs: &[(usize, usize)], mask: u128) -> Vec<bool> {
    let mut allowed = vec![true; dnet.n_edges()];
    for (i, &(f, b)) in pairs.iter().enumerate() {
        if mask >> i & 1 == 1 {
            allowed[f] = false;
        } else {
            allowed[b] = false;
        }
    }
    allowed
}

/// Solves every orientation and returns the first certified one.
///
/// Requires `c01(0) + c10(0) ≥ 0` on every doubled pair. Zero-sum pairs are
/// admitted; the certificate is still checked on the full network.
pub fn solve_exact(dnet: &DirectedNet, opts: &SolveOptions) -> Result<SolveResult> {
    let pairs = dnet.doubled_pairs();
    let count: u128 = 1u128.checked_shl(pairs.len() as u32).unwrap_or(u128::MAX);
    if count > opts.orientation_limit {
        return Err(Error::TooManyOrientations {
            count,
            limit: opts.orientation_limit,
        });
    }
    let zero = FlowState::zeros(dnet.n_edges());
    let loop_cost = dnet.min_pair_cost(&zero)?;
    if loop_cost < 0.0 {
        return Err(Error::Precondition(format!(
            "a doubled pair has negative loop cost {loop_cost} at zero current"
        )));
    }

    let attempt = |mask: u128| -> Option<Result<(EngineOutput, f64)>> {
        let allowed = allowed_for(dnet, &pairs, mask);
        let ents = match initial_paths(dnet, &allowed, opts.seed) {
            Ok(e) => e,
            // some entrance cannot reach an exit in this orientation
            Err(Error::Precondition(_)) => return None,
            Err(e) => return Some(Err(e)),
        };
        let out = match run(dnet, &allowed, ents, opts) {
            Ok(o) => o,
            Err(e) => return Some(Err(e)),
        };
        let full = match super::vi_gap(dnet, &out.flow) {
            Ok(g) => g,
            Err(e) => return Some(Err(e)),
        };
        Some(Ok((out, full.gap)))
    };

    let mut best_gap = f64::INFINITY;
    let mut start = 0u128;
    while start < count {
        let end = (start + CHUNK).min(count);
        let results: Vec<(u128, Result<(EngineOutput, f64)>)> = (start..end)
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter_map(|mask| attempt(mask).map(|r| (mask, r)))
            .collect();
        for (mask, r) in results {
            let (out, gap) = r?;
            let costs = dnet.evaluate_costs(&out.flow)?.costs;
            let tol = opts.tol.unwrap_or_else(|| super::default_tolerance(dnet, &costs));
            if gap <= tol {
                let orientation = (0..pairs.len()).map(|i| mask >> i & 1 == 0).collect();
                log::debug!("exact solver: orientation {mask} of {count} certified");
                return finish(dnet, out, opts, SolverKind::Exact, Some(orientation));
            }
            best_gap = best_gap.min(gap);
        }
        start = end;
    }
    Err(Error::NoEquilibrium { best_gap })
}
