//! Wardrop equilibria on a [`DirectedNet`]: the variational-inequality gap,
//! monotonicity sampling and two solvers.
//!
//! The gap freezes costs at the given flow and routes every entry current
//! along a cheapest walk to an exit; this is the exact minimum of the linear
//! program over admissible flows, so `gap ≤ tol` certifies an equilibrium.

mod exact;
mod monotone;
mod paths;

use crate::error::{Error, Result};
use crate::wardrop_net::{DirectedNet, FlowState, PairRole};

pub use exact::solve_exact;
pub use monotone::{check_monotone, MonotonicityReport, PairCases};
pub use paths::solve_iterative;

/// Cheapest walks to an exit under frozen costs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestTree {
    /// Distance from each directed vertex to the nearest exit (∞ if none).
    pub dist: Vec<f64>,
    pub hops: Vec<usize>,
    /// First edge of the chosen cheapest walk.
    pub next: Vec<Option<usize>>,
}

impl ShortestTree {
    /// Edge sequence of the cheapest walk from `v`, if an exit is reachable.
    pub fn path(&self, dnet: &DirectedNet, mut v: usize) -> Option<Vec<usize>> {
        if !self.dist[v].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        while let Some(e) = self.next[v] {
            out.push(e);
            v = dnet.edges[e].head;
            if out.len() > dnet.edges.len() {
                return None;
            }
        }
        Some(out)
    }
}

/// Bellman–Ford towards the exits over the edges with `allowed[e]` (all when
/// `None`). Ties are broken by fewer hops, then by the smaller edge index.
pub fn shortest_to_exits(dnet: &DirectedNet, costs: &[f64], allowed: Option<&[bool]>) -> Result<ShortestTree> {
    let n = dnet.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut next: Vec<Option<usize>> = vec![None; n];
    for v in dnet.exits() {
        dist[v] = 0.0;
        hops[v] = 0;
    }
    let ok = |e: usize| allowed.map(|a| a[e]).unwrap_or(true);
    let better = |cand: (f64, usize, usize), cur: (f64, usize, usize)| {
        cand.0 < cur.0 || (cand.0 == cur.0 && (cand.1, cand.2) < (cur.1, cur.2))
    };
    let mut changed_at = None;
    for round in 0..=n {
        let mut changed = None;
        for (e, edge) in dnet.edges.iter().enumerate() {
            if !ok(e) || !dist[edge.head].is_finite() {
                continue;
            }
            let t = edge.tail;
            let cand = (costs[e] + dist[edge.head], hops[edge.head] + 1, e);
            let cur = (dist[t], hops[t], next[t].unwrap_or(usize::MAX));
            if dnet.vertices[t].role != PairRole::Exit && better(cand, cur) {
                dist[t] = cand.0;
                hops[t] = cand.1;
                next[t] = Some(e);
                changed = Some(t);
            }
        }
        match changed {
            None => break,
            Some(t) if round == n => changed_at = Some(t),
            _ => {}
        }
    }
    if let Some(mut v) = changed_at {
        // n successor steps from a vertex still relaxing land on the cycle
        for _ in 0..n {
            match next[v] {
                Some(e) => v = dnet.edges[e].head,
                None => return Err(Error::NegativeCycle(Vec::new())),
            }
        }
        let start = v;
        let mut cycle = Vec::new();
        while let Some(e) = next[v] {
            cycle.push(e);
            v = dnet.edges[e].head;
            if v == start || cycle.len() > n {
                break;
            }
        }
        return Err(Error::NegativeCycle(cycle));
    }
    Ok(ShortestTree { dist, hops, next })
}

/// Cheapest route for one entrance.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub entrance: usize,
    pub demand: f64,
    pub cost: f64,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// `⟨c̄(j̄*), j̄*⟩ − min_j ⟨c̄(j̄*), j̄⟩`.
    pub gap: f64,
    pub social_cost: f64,
    pub best_response_cost: f64,
    /// The all-or-nothing minimizer.
    pub minimizer: FlowState,
    pub routes: Vec<Route>,
    /// Frozen edge costs at the evaluated flow.
    pub costs: Vec<f64>,
    /// Frozen-cost distance from each directed vertex to an exit.
    pub distances: Vec<f64>,
}

impl GapReport {
    pub fn max_cost(&self) -> f64 {
        max_finite(&self.costs)
    }
}

fn max_finite(v: &[f64]) -> f64 {
    v.iter().filter(|c| c.is_finite()).fold(0.0_f64, |a, &c| a.max(c.abs()))
}

/// `1e-6 · (total entry current) · (max edge cost)`, floored at `1e-12`.
pub fn default_tolerance(dnet: &DirectedNet, costs: &[f64]) -> f64 {
    (1e-6 * dnet.total_demand() * max_finite(costs)).max(1e-12)
}

pub fn vi_gap(dnet: &DirectedNet, flow: &FlowState) -> Result<GapReport> {
    let ev = dnet.evaluate_costs(flow)?;
    gap_with_costs(dnet, flow, ev.costs, None)
}

pub(crate) fn gap_with_costs(
    dnet: &DirectedNet,
    flow: &FlowState,
    costs: Vec<f64>,
    allowed: Option<&[bool]>,
) -> Result<GapReport> {
    let tree = shortest_to_exits(dnet, &costs, allowed)?;
    let social_cost: f64 = costs.iter().zip(&flow.j).map(|(c, j)| c * j).sum();
    let mut minimizer = FlowState::zeros(dnet.n_edges());
    let mut routes = Vec::new();
    let mut best = 0.0;
    for (r, &v) in dnet.rows.iter().enumerate() {
        if dnet.vertices[v].role != PairRole::Entrance {
            continue;
        }
        let demand = dnet.demand[r];
        let path = tree
            .path(dnet, v)
            .ok_or_else(|| Error::Precondition(format!("entrance {} cannot reach an exit", dnet.vertices[v].label)))?;
        for &e in &path {
            minimizer.j[e] += demand;
        }
        best += demand * tree.dist[v];
        routes.push(Route {
            entrance: v,
            demand,
            cost: tree.dist[v],
            path,
        });
    }
    Ok(GapReport {
        gap: social_cost - best,
        social_cost,
        best_response_cost: best,
        minimizer,
        routes,
        costs,
        distances: tree.dist,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Exact,
    Iterative,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Exact => "exact",
            SolverKind::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Absolute gap tolerance; [`default_tolerance`] when `None`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Randomizes the starting flow when set.
    pub seed: Option<u64>,
    pub orientation_limit: u128,
    /// Record the potential `Σ ∫ c` after every sweep.
    pub track_objective: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: None,
            max_iter: 2000,
            seed: None,
            orientation_limit: 1 << 20,
            track_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub flow: FlowState,
    pub gap_report: GapReport,
    pub iterations: usize,
    pub solver: SolverKind,
    pub tol: f64,
    pub certified: bool,
    /// `max_k j_k^i·j_k^r`.
    pub complementarity: f64,
    pub gap_trace: Vec<f64>,
    /// Running minimum of `gap_trace`.
    pub best_gap_trace: Vec<f64>,
    pub objective_trace: Vec<f64>,
    /// Active direction per doubled pair (`true` = forward), exact solver only.
    pub orientation: Option<Vec<bool>>,
}

impl SolveResult {
    /// Cost per agent, `⟨c̄, j̄⟩ / Σι`.
    pub fn cost_per_agent(&self, dnet: &DirectedNet) -> f64 {
        let d = dnet.total_demand();
        if d > 0.0 {
            self.gap_report.social_cost / d
        } else {
            0.0
        }
    }
}

/// Potential `Σ_κ ∫₀^{j̄_κ} c̄_κ`, with lifted costs integrated in their own
/// current and the partner held at zero. It is the Beckmann function when the
/// flow is complementary on every doubled pair.
pub fn objective(dnet: &DirectedNet, flow: &FlowState) -> Result<f64> {
    use crate::wardrop_net::DirectedCost;
    let mut total = 0.0;
    for (c, e) in dnet.edges.iter().enumerate() {
        let j = flow.j[c];
        if j == 0.0 {
            continue;
        }
        total += match e.cost {
            DirectedCost::Constant(psi) => psi * j,
            DirectedCost::Lifted { edge, forward, .. } => {
                let model = &dnet.models[edge];
                let mut err = None;
                let val = crate::numerics::adaptive_simpson(
                    |s| {
                        let r = if forward { model.c01(s) } else { model.c10(-s) };
                        r.unwrap_or_else(|e| {
                            err.get_or_insert(e);
                            0.0
                        })
                    },
                    0.0,
                    j,
                    1e-11 * (1.0 + j),
                );
                if let Some(e) = err {
                    return Err(e.on_edge(&dnet.edges[c].id));
                }
                val
            }
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::examples::braess;
    use crate::wardrop_net::transform;

    fn edge(d: &DirectedNet, id: &str) -> usize {
        d.edges.iter().position(|e| e.id == id).unwrap()
    }

    fn route(d: &DirectedNet, ids: &[&str], amount: f64, flow: &mut FlowState) {
        for id in ids {
            flow.j[edge(d, id)] += amount;
        }
    }

    #[test]
    fn braess_split_has_zero_gap() {
        let d = transform(&braess(false, 0.0)).unwrap();
        let mut f = FlowState::zeros(d.n_edges());
        route(
            &d,
            &["a1+", "a1>e1@v1", "e1+", "e1>e3@v2", "e3+", "e3>a4@v4", "a4+"],
            2000.0,
            &mut f,
        );
        route(
            &d,
            &["a1+", "a1>e2@v1", "e2+", "e2>e4@v3", "e4+", "e4>a4@v4", "a4+"],
            2000.0,
            &mut f,
        );
        assert!(d.max_kirchhoff_residual(&f) == 0.0);
        let g = vi_gap(&d, &f).unwrap();
        assert!(g.gap.abs() < 1e-9, "{}", g.gap);
        assert!((g.social_cost / 4000.0 - 65.0).abs() < 1e-12);
    }

    #[test]
    fn braess_middle_path_has_zero_gap_and_costs_eighty() {
        let d = transform(&braess(true, 0.0)).unwrap();
        let mut f = FlowState::zeros(d.n_edges());
        route(
            &d,
            &[
                "a1+", "a1>e2@v1", "e2+", "e2>e5@v3", "e5-", "e5>e3@v2", "e3+", "e3>a4@v4", "a4+",
            ],
            4000.0,
            &mut f,
        );
        let g = vi_gap(&d, &f).unwrap();
        assert!(g.gap.abs() < 1e-9);
        assert!((g.routes[0].cost - 80.0).abs() < 1e-12);
    }

    #[test]
    fn cheaper_unused_path_gives_positive_gap() {
        let d = transform(&braess(false, 0.0)).unwrap();
        let mut f = FlowState::zeros(d.n_edges());
        route(
            &d,
            &["a1+", "a1>e1@v1", "e1+", "e1>e3@v2", "e3+", "e3>a4@v4", "a4+"],
            4000.0,
            &mut f,
        );
        let g = vi_gap(&d, &f).unwrap();
        // everyone pays 85, the other route costs 45
        assert!((g.gap - 4000.0 * 40.0).abs() < 1e-6);
    }

    #[test]
    fn negative_cycle_is_reported() {
        let d = transform(&braess(true, 0.0)).unwrap();
        let mut costs = vec![1.0; d.n_edges()];
        costs[edge(&d, "e5+")] = -5.0;
        let err = shortest_to_exits(&d, &costs, None).unwrap_err();
        assert!(matches!(err, Error::NegativeCycle(c) if !c.is_empty()));
    }

    fn mfg_current(d: &DirectedNet, flow: &FlowState, id: &str) -> f64 {
        let k = d.mfg_edges.iter().position(|e| e.0 == id).unwrap();
        d.mfg_currents(flow)[k]
    }

    #[test]
    fn both_solvers_reproduce_braess() {
        for solve in [solve_exact, solve_iterative] {
            let d = transform(&braess(false, 0.0)).unwrap();
            let r = solve(&d, &SolveOptions::default()).unwrap();
            assert!(r.certified, "{:?} gap {}", r.solver, r.gap_report.gap);
            assert!((mfg_current(&d, &r.flow, "e1") - 2000.0).abs() < 1e-6);
            assert!((mfg_current(&d, &r.flow, "e2") - 2000.0).abs() < 1e-6);
            assert!((r.cost_per_agent(&d) - 65.0).abs() < 1e-6);

            let d = transform(&braess(true, 0.0)).unwrap();
            let r = solve(&d, &SolveOptions::default()).unwrap();
            assert!(r.certified);
            assert!((mfg_current(&d, &r.flow, "e5") + 4000.0).abs() < 1e-6);
            assert!((r.cost_per_agent(&d) - 80.0).abs() < 1e-6);
            assert!(d.max_kirchhoff_residual(&r.flow) < 1e-9);
        }
    }

    #[test]
    fn one_edge_routes_everything_forward() {
        use crate::edgecost::ModelSpec;
        use crate::netmodel::examples::one_edge;
        let d = transform(&one_edge(ModelSpec::quadratic(), 1.0)).unwrap();
        let r = solve_exact(&d, &SolveOptions::default()).unwrap();
        let f = d.edges.iter().position(|e| e.id == "e+").unwrap();
        let b = d.edges.iter().position(|e| e.id == "e-").unwrap();
        assert!((r.flow.j[f] - 1.0).abs() < 1e-12);
        assert_eq!(r.flow.j[b], 0.0);
        assert!(r.gap_report.gap.abs() < 1e-12);
    }

    #[test]
    fn zero_demand_gives_zero_flow() {
        use crate::edgecost::ModelSpec;
        use crate::netmodel::examples::one_edge;
        let d = transform(&one_edge(ModelSpec::quadratic(), 0.0)).unwrap();
        let r = solve_iterative(&d, &SolveOptions::default()).unwrap();
        assert!(r.flow.j.iter().all(|&x| x == 0.0));
        assert_eq!(r.gap_report.gap, 0.0);
        assert!(r.certified);
    }

    #[test]
    fn orientation_limit_is_enforced() {
        let d = transform(&braess(true, 0.0)).unwrap();
        let opts = SolveOptions {
            orientation_limit: 8,
            ..Default::default()
        };
        assert!(matches!(
            solve_exact(&d, &opts),
            Err(Error::TooManyOrientations { count: 32, limit: 8 })
        ));
    }

    #[test]
    fn monotonicity_sampling() {
        use crate::edgecost::{CostForm, ModelSpec};
        use crate::netmodel::examples::{braess, one_edge};
        let d = transform(&one_edge(ModelSpec::quadratic(), 1.0)).unwrap();
        assert!(check_monotone(&d, 50, 1).unwrap().is_monotone(1e-12));

        let mut net = braess(false, 0.0);
        for spec in net.models.values_mut() {
            *spec = ModelSpec::constant(3.0);
        }
        let d = transform(&net).unwrap();
        let rep = check_monotone(&d, 50, 2).unwrap();
        assert!(rep.min_product.abs() < 1e-9);

        let mut net = braess(false, 0.0);
        net.models
            .insert("linear".into(), ModelSpec::symmetric(CostForm::affine(100.0, -0.01)));
        let d = transform(&net).unwrap();
        let rep = check_monotone(&d, 50, 3).unwrap();
        assert!(rep.min_product < 0.0);
        assert!(rep.worst.is_some());
    }
}
