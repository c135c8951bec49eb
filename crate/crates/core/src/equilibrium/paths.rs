//! Path-based equilibration.
//!
//! Each entrance keeps a set of walks with positive flow. A sweep visits the
//! entrances in order, adds the current cheapest walk and moves flow from
//! every costlier walk onto it until their costs agree or the costlier walk is
//! empty. The step length is the root of the cost difference, which is the
//! exact line search along that direction when costs are separable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{default_tolerance, gap_with_costs, objective, shortest_to_exits, SolveOptions, SolveResult, SolverKind};
use crate::error::{Error, Result};
use crate::numerics::brent_with;
use crate::wardrop_net::{DirectedNet, FlowState, PairRole};

#[derive(Debug, Clone)]
pub(crate) struct PathFlow {
    pub edges: Vec<usize>,
    pub flow: f64,
}

pub(crate) struct Entrance {
    pub vertex: usize,
    pub paths: Vec<PathFlow>,
}

pub(crate) struct EngineOutput {
    pub flow: FlowState,
    pub iterations: usize,
    pub gap_trace: Vec<f64>,
    pub best_gap_trace: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

fn all_costs(dnet: &DirectedNet, flow: &[f64]) -> Result<Vec<f64>> {
    (0..dnet.n_edges()).map(|c| dnet.edge_cost(c, flow)).collect()
}

fn path_cost(dnet: &DirectedNet, path: &[usize], flow: &[f64]) -> Result<f64> {
    path.iter().map(|&e| dnet.edge_cost(e, flow)).sum()
}

/// Entrances with positive demand, so that each has a starting walk.
pub(crate) fn entrances(dnet: &DirectedNet) -> Vec<(usize, f64)> {
    dnet.rows
        .iter()
        .zip(&dnet.demand)
        .filter(|(&v, &b)| dnet.vertices[v].role == PairRole::Entrance && b > 0.0)
        .map(|(&v, &b)| (v, b))
        .collect()
}

/// Starting walks: all-or-nothing at zero flow, or with `seed` a random split
/// over up to three walks that are cheapest under randomly perturbed costs.
pub(crate) fn initial_paths(dnet: &DirectedNet, allowed: &[bool], seed: Option<u64>) -> Result<Vec<Entrance>> {
    let zero = vec![0.0; dnet.n_edges()];
    let base = all_costs(dnet, &zero)?;
    let mean = base.iter().sum::<f64>() / base.len().max(1) as f64;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut out = Vec::new();
    for (vertex, demand) in entrances(dnet) {
        let mut paths: Vec<PathFlow> = Vec::new();
        let draws = if rng.is_some() { 3 } else { 1 };
        for _ in 0..draws {
            let costs: Vec<f64> = match rng.as_mut() {
                Some(r) => base
                    .iter()
                    .map(|&c| c.max(0.0) * r.gen_range(0.2..5.0) + r.gen_range(0.0..=mean.max(1e-3)))
                    .collect(),
                None => base.clone(),
            };
            let tree = shortest_to_exits(dnet, &costs, Some(allowed))?;
            let edges = tree.path(dnet, vertex).ok_or_else(|| {
                Error::Precondition(format!("entrance {} cannot reach an exit", dnet.vertices[vertex].label))
            })?;
            let w = match rng.as_mut() {
                Some(r) => r.gen_range(0.05..1.0),
                None => 1.0,
            };
            match paths.iter_mut().find(|p| p.edges == edges) {
                Some(p) => p.flow += w,
                None => paths.push(PathFlow { edges, flow: w }),
            }
        }
        let total: f64 = paths.iter().map(|p| p.flow).sum();
        let mut assigned = 0.0;
        let last = paths.len() - 1;
        for (i, p) in paths.iter_mut().enumerate() {
            p.flow = if i == last {
                demand - assigned
            } else {
                demand * p.flow / total
            };
            assigned += p.flow;
        }
        out.push(Entrance { vertex, paths });
    }
    Ok(out)
}

pub(crate) fn edge_flows(dnet: &DirectedNet, ents: &[Entrance]) -> Vec<f64> {
    let mut flow = vec![0.0; dnet.n_edges()];
    for ent in ents {
        for p in &ent.paths {
            for &e in &p.edges {
                flow[e] += p.flow;
            }
        }
    }
    flow
}

/// Moves flow from `from` to `to` until their costs agree; returns the amount.
fn equalize(dnet: &DirectedNet, flow: &mut [f64], from: &[usize], to: &[usize], available: f64) -> Result<f64> {
    let mut touched: Vec<usize> = from.iter().chain(to).copied().collect();
    touched.sort_unstable();
    touched.dedup();
    let saved: Vec<f64> = touched.iter().map(|&e| flow[e]).collect();
    let mut err: Option<Error> = None;
    let mut phi = |delta: f64, flow: &mut [f64]| -> f64 {
        for (&e, &s) in touched.iter().zip(&saved) {
            flow[e] = s;
        }
        for &e in from {
            flow[e] -= delta;
        }
        for &e in to {
            flow[e] += delta;
        }
        match (path_cost(dnet, from, flow), path_cost(dnet, to, flow)) {
            (Ok(a), Ok(b)) => a - b,
            (Err(e), _) | (_, Err(e)) => {
                err.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let f0 = phi(0.0, flow);
    let f1 = phi(available, flow);
    let delta = if !(f0 > 0.0) {
        0.0
    } else if f1 >= 0.0 {
        available
    } else {
        let xtol = 1e-15 * available;
        let mut scratch = flow.to_vec();
        brent_with(|d| phi(d, &mut scratch), 0.0, available, f0, f1, xtol)?
    };
    if let Some(e) = err {
        return Err(e);
    }
    for (&e, &s) in touched.iter().zip(&saved) {
        flow[e] = s;
    }
    for &e in from {
        flow[e] -= delta;
    }
    for &e in to {
        flow[e] += delta;
    }
    Ok(delta)
}

/// One pass over all entrances.
fn sweep(dnet: &DirectedNet, allowed: &[bool], ents: &mut [Entrance], flow: &mut Vec<f64>) -> Result<()> {
    for ent in ents.iter_mut() {
        let costs = all_costs(dnet, flow)?;
        let tree = shortest_to_exits(dnet, &costs, Some(allowed))?;
        let Some(best) = tree.path(dnet, ent.vertex) else {
            continue;
        };
        let si = match ent.paths.iter().position(|p| p.edges == best) {
            Some(i) => i,
            None => {
                ent.paths.push(PathFlow { edges: best, flow: 0.0 });
                ent.paths.len() - 1
            }
        };
        for pi in 0..ent.paths.len() {
            if pi == si || ent.paths[pi].flow <= 0.0 {
                continue;
            }
            let (from, to) = (ent.paths[pi].edges.clone(), ent.paths[si].edges.clone());
            let available = ent.paths[pi].flow;
            let moved = equalize(dnet, flow, &from, &to, available)?;
            if moved >= available {
                ent.paths[pi].flow = 0.0;
                ent.paths[si].flow += available;
            } else {
                ent.paths[pi].flow -= moved;
                ent.paths[si].flow += moved;
            }
        }
        ent.paths.retain(|p| p.flow > 0.0);
    }
    // resynchronize edge flows with the path decomposition
    *flow = edge_flows(dnet, ents);
    Ok(())
}

/// Continues along the net change of one sweep.
///
/// Sweeps shift one entrance at a time, so entrances whose walks share edges
/// while paying slightly different switching costs undo each other's moves
/// and progress by a fixed small amount per sweep. The change over a sweep
/// points along that valley; stepping further along it, up to the nearest
/// empty walk, with the step set by the root of the directional derivative
/// `Σ_e d_e·c_e`, skips the zig-zag. The step is kept only if the gap drops.
fn extrapolate(
    dnet: &DirectedNet,
    allowed: &[bool],
    before: &[Vec<PathFlow>],
    ents: &mut [Entrance],
    flow: &mut Vec<f64>,
) -> Result<()> {
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(ents.len());
    let mut tmax = f64::INFINITY;
    let mut any = false;
    for (ent, old) in ents.iter().zip(before) {
        // an entrance that emptied a walk sits on a bound; leave it alone
        let dropped = old
            .iter()
            .any(|p| p.flow > 0.0 && !ent.paths.iter().any(|q| q.edges == p.edges));
        let d: Vec<f64> = ent
            .paths
            .iter()
            .map(|p| {
                if dropped {
                    return 0.0;
                }
                let prev = old.iter().find(|q| q.edges == p.edges).map_or(0.0, |q| q.flow);
                p.flow - prev
            })
            .collect();
        for (p, &dp) in ent.paths.iter().zip(&d) {
            if dp < 0.0 {
                tmax = tmax.min(p.flow / -dp);
            }
            any |= dp != 0.0;
        }
        dirs.push(d);
    }
    if !any || !(tmax > 0.0) || !tmax.is_finite() {
        return Ok(());
    }
    let mut de = vec![0.0; dnet.n_edges()];
    for (ent, d) in ents.iter().zip(&dirs) {
        for (p, &dp) in ent.paths.iter().zip(d) {
            for &e in &p.edges {
                de[e] += dp;
            }
        }
    }
    let touched: Vec<usize> = (0..de.len()).filter(|&e| de[e] != 0.0).collect();
    if touched.is_empty() {
        return Ok(());
    }
    let mut scratch = flow.clone();
    let mut err: Option<Error> = None;
    let mut slope = |t: f64| -> f64 {
        for &e in &touched {
            scratch[e] = (flow[e] + t * de[e]).max(0.0);
        }
        let mut s = 0.0;
        for &e in &touched {
            match dnet.edge_cost(e, &scratch) {
                Ok(c) => s += de[e] * c,
                Err(x) => {
                    err.get_or_insert(x);
                    return f64::NAN;
                }
            }
        }
        s
    };
    let s0 = slope(0.0);
    if !(s0 < 0.0) {
        return Ok(());
    }
    let s1 = slope(tmax);
    let t = if s1 <= 0.0 {
        tmax
    } else {
        match brent_with(&mut slope, 0.0, tmax, s0, s1, 1e-14 * tmax) {
            Ok(t) => t,
            Err(_) => return Ok(()),
        }
    };
    if let Some(e) = err {
        return Err(e);
    }

    let gap_at = |j: &[f64]| -> Result<f64> {
        let costs = all_costs(dnet, j)?;
        Ok(gap_with_costs(dnet, &FlowState { j: j.to_vec() }, costs, Some(allowed))?.gap)
    };
    let current = gap_at(flow)?;
    let mut trial: Vec<Entrance> = ents
        .iter()
        .zip(&dirs)
        .map(|(ent, d)| Entrance {
            vertex: ent.vertex,
            paths: ent
                .paths
                .iter()
                .zip(d)
                .map(|(p, &dp)| PathFlow {
                    edges: p.edges.clone(),
                    flow: (p.flow + t * dp).max(0.0),
                })
                .collect(),
        })
        .collect();
    // keep each entrance's total exact
    for (ent, old) in trial.iter_mut().zip(ents.iter()) {
        let want: f64 = old.paths.iter().map(|p| p.flow).sum();
        let have: f64 = ent.paths.iter().map(|p| p.flow).sum();
        if let Some(p) = ent.paths.iter_mut().max_by(|a, b| a.flow.total_cmp(&b.flow)) {
            p.flow += want - have;
        }
        ent.paths.retain(|p| p.flow > 0.0);
    }
    let next = edge_flows(dnet, &trial);
    if gap_at(&next)? < current {
        for (ent, t) in ents.iter_mut().zip(trial) {
            ent.paths = t.paths;
        }
        *flow = next;
    }
    Ok(())
}

/// Runs sweeps on the subnetwork `allowed` until its gap is below tolerance.
pub(crate) fn run(
    dnet: &DirectedNet,
    allowed: &[bool],
    mut ents: Vec<Entrance>,
    opts: &SolveOptions,
) -> Result<EngineOutput> {
    let mut flow = edge_flows(dnet, &ents);
    let mut gap_trace = Vec::new();
    let mut best_gap_trace = Vec::new();
    let mut objective_trace = Vec::new();
    let mut best_flow = flow.clone();
    let mut best_gap = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let state = FlowState { j: flow.clone() };
        let costs = all_costs(dnet, &flow)?;
        let tol = opts.tol.unwrap_or_else(|| default_tolerance(dnet, &costs));
        let gap = gap_with_costs(dnet, &state, costs, Some(allowed))?.gap;
        if opts.track_objective {
            objective_trace.push(objective(dnet, &state)?);
        }
        gap_trace.push(gap);
        if gap < best_gap {
            best_gap = gap;
            best_flow.clone_from(&flow);
        }
        best_gap_trace.push(best_gap);
        if gap <= tol || iterations >= opts.max_iter {
            break;
        }
        let before: Vec<Vec<PathFlow>> = ents.iter().map(|e| e.paths.clone()).collect();
        sweep(dnet, allowed, &mut ents, &mut flow)?;
        extrapolate(dnet, allowed, &before, &mut ents, &mut flow)?;
        iterations += 1;
    }
    log::debug!("path equilibration: {iterations} sweeps, gap {best_gap:e}");
    Ok(EngineOutput {
        flow: FlowState { j: best_flow },
        iterations,
        gap_trace,
        best_gap_trace,
        objective_trace,
    })
}

pub(crate) fn finish(
    dnet: &DirectedNet,
    out: EngineOutput,
    opts: &SolveOptions,
    solver: SolverKind,
    orientation: Option<Vec<bool>>,
) -> Result<SolveResult> {
    let costs = dnet.evaluate_costs(&out.flow)?.costs;
    let tol = opts.tol.unwrap_or_else(|| default_tolerance(dnet, &costs));
    let report = gap_with_costs(dnet, &out.flow, costs, None)?;
    Ok(SolveResult {
        certified: report.gap <= tol,
        complementarity: dnet.complementarity(&out.flow),
        flow: out.flow,
        gap_report: report,
        iterations: out.iterations,
        solver,
        tol,
        gap_trace: out.gap_trace,
        best_gap_trace: out.best_gap_trace,
        objective_trace: out.objective_trace,
        orientation,
    })
}

/// Path equilibration on the whole directed network. The returned flow is the
/// best iterate; check `certified` before trusting it.
pub fn solve_iterative(dnet: &DirectedNet, opts: &SolveOptions) -> Result<SolveResult> {
    let allowed = vec![true; dnet.n_edges()];
    let ents = initial_paths(dnet, &allowed, opts.seed)?;
    let out = run(dnet, &allowed, ents, opts)?;
    finish(dnet, out, opts, SolverKind::Iterative, None)
}
