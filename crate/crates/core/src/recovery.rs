//! Recovering MFG value functions from a Wardrop equilibrium and checking
//! the network MFG equations.
//!
//! A directed vertex `(e_k, v_i)` is regular when some incident directed edge
//! carries current. At a regular vertex the value is the cost of any
//! current-carrying walk to an exit; elsewhere it is the frozen-cost distance
//! to an exit and is flagged as extended.

use std::collections::BTreeMap;

use crate::equilibrium::shortest_to_exits;
use crate::error::{Error, Result};
use crate::wardrop_net::{DirectedCost, DirectedKind, DirectedNet, FlowState, PairRole};

/// `1e-8·(1 + total demand)`.
pub fn flow_threshold(dnet: &DirectedNet) -> f64 {
    1e-8 * (1.0 + dnet.total_demand())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub regular: Vec<bool>,
    pub tol_flow: f64,
}

impl Classification {
    pub fn all_regular(&self) -> bool {
        self.regular.iter().all(|&r| r)
    }

    pub fn irregular(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.regular.len()).filter(|&i| !self.regular[i])
    }
}

fn carrying(flow: &FlowState, tol: f64) -> impl Fn(usize) -> bool + '_ {
    move |e| flow.j[e] > tol
}

/// Marks regular vertices and rejects flows whose carrying edges contain a
/// directed cycle.
pub fn classify_vertices(dnet: &DirectedNet, flow: &FlowState) -> Result<Classification> {
    dnet.check_flow(flow)?;
    let tol_flow = flow_threshold(dnet);
    let carries = carrying(flow, tol_flow);
    let mut regular = vec![false; dnet.vertices.len()];
    for (e, edge) in dnet.edges.iter().enumerate() {
        if carries(e) {
            regular[edge.tail] = true;
            regular[edge.head] = true;
        }
    }
    if let Some(cycle) = carrying_cycle(dnet, &carries) {
        return Err(Error::CarryingLoop(cycle));
    }
    Ok(Classification { regular, tol_flow })
}

fn carrying_cycle(dnet: &DirectedNet, carries: &dyn Fn(usize) -> bool) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let n = dnet.vertices.len();
    let mut state = vec![0u8; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        if state[s] != 0 {
            continue;
        }
        let mut stack = vec![(s, 0usize)];
        state[s] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            let outs = dnet.out_edges(v);
            if *i < outs.len() {
                let e = outs[*i];
                *i += 1;
                if !carries(e) {
                    continue;
                }
                let w = dnet.edges[e].head;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        via[w] = Some(e);
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![e];
                        let mut x = v;
                        while x != w {
                            let pe = via[x].unwrap();
                            cycle.push(pe);
                            x = dnet.edges[pe].tail;
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueAssignment {
    /// `u` at every directed vertex, i.e. `u_k^i` at `(e_k, v_i)`.
    pub u: Vec<f64>,
    pub regular: Vec<bool>,
    /// Value taken from the frozen-cost distance rather than a carrying walk.
    pub extended: Vec<bool>,
    /// Largest minus smallest carrying-walk cost at regular vertices.
    pub walk_spread: Vec<f64>,
    /// Frozen-cost distance to an exit.
    pub distances: Vec<f64>,
    pub tol_flow: f64,
}

impl ValueAssignment {
    pub fn max_walk_spread(&self) -> f64 {
        self.walk_spread.iter().fold(0.0, |a: f64, &s| a.max(s))
    }

    /// `max |u − dist|` over regular vertices.
    pub fn optimality_defect(&self) -> f64 {
        (0..self.u.len())
            .filter(|&i| self.regular[i])
            .map(|i| (self.u[i] - self.distances[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Values keyed by the `(edge,vertex)` label.
    pub fn by_label(&self, dnet: &DirectedNet) -> BTreeMap<String, f64> {
        dnet.vertices
            .iter()
            .zip(&self.u)
            .map(|(v, &u)| (v.label.clone(), u))
            .collect()
    }
}

pub fn recover_values(dnet: &DirectedNet, flow: &FlowState) -> Result<ValueAssignment> {
    let class = classify_vertices(dnet, flow)?;
    let costs = dnet.evaluate_costs(flow)?.costs;
    let tree = shortest_to_exits(dnet, &costs, None)?;
    let carries = carrying(flow, class.tol_flow);
    let n = dnet.vertices.len();

    // carrying edges form a DAG; min/max walk cost by memoized DFS
    let mut lo = vec![f64::NAN; n];
    let mut hi = vec![f64::NAN; n];
    let mut order = Vec::new();
    let mut seen = vec![false; n];
    for s in 0..n {
        if class.regular[s] && !seen[s] {
            post_order(dnet, s, &carries, &mut seen, &mut order);
        }
    }
    for &v in &order {
        if dnet.vertices[v].role == PairRole::Exit {
            lo[v] = 0.0;
            hi[v] = 0.0;
            continue;
        }
        let mut any = false;
        let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
        for &e in dnet.out_edges(v) {
            if carries(e) {
                let h = dnet.edges[e].head;
                any = true;
                a = a.min(costs[e] + lo[h]);
                b = b.max(costs[e] + hi[h]);
            }
        }
        if !any {
            return Err(Error::NoCarryingWalk(v));
        }
        lo[v] = a;
        hi[v] = b;
    }

    let mut u = vec![0.0; n];
    let mut extended = vec![false; n];
    let mut walk_spread = vec![0.0; n];
    for v in 0..n {
        if class.regular[v] {
            u[v] = lo[v];
            walk_spread[v] = hi[v] - lo[v];
        } else {
            u[v] = tree.dist[v];
            extended[v] = true;
        }
    }
    Ok(ValueAssignment {
        u,
        regular: class.regular,
        extended,
        walk_spread,
        distances: tree.dist,
        tol_flow: class.tol_flow,
    })
}

fn post_order(
    dnet: &DirectedNet,
    s: usize,
    carries: &dyn Fn(usize) -> bool,
    seen: &mut [bool],
    order: &mut Vec<usize>,
) {
    let mut stack = vec![(s, 0usize)];
    seen[s] = true;
    while let Some(&mut (v, ref mut i)) = stack.last_mut() {
        let outs = dnet.out_edges(v);
        if *i < outs.len() {
            let e = outs[*i];
            *i += 1;
            let w = dnet.edges[e].head;
            if carries(e) && !seen[w] {
                seen[w] = true;
                stack.push((w, 0));
            }
        } else {
            order.push(v);
            stack.pop();
        }
    }
}

/// Largest residual of each network MFG condition.
///
/// Inequalities report their violation `max(0, ·)`. Complementarity rows
/// report the slack `|u_tail − u_head − cost|` on edges carrying more than the
/// flow threshold, which vanishes exactly when the product does.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    /// Turns: `u_k ≤ u_l + ψ_kl`.
    pub optcond: f64,
    /// Used turns: `u_k = u_l + ψ_kl`.
    pub ujcomp: f64,
    /// Edges: `u_tail ≤ c + u_head`.
    pub optcond2: f64,
    /// Used edges: `u_tail = c + u_head`.
    pub compedge: f64,
    /// Current arriving along an edge equals the turns leaving the pair.
    pub balance1: f64,
    /// Turns into a pair equal the current leaving along its edge.
    pub balance2: f64,
    /// Entrance edges carry exactly the entry current.
    pub incondj: f64,
    /// No current flows from an exit back into the network.
    pub outcondj: f64,
    /// `u ≤ 0` at exits.
    pub outcondu: f64,
    /// Strict triangle inequality among the finite switching costs.
    pub strict_triangle: bool,
    pub irregular: Vec<String>,
}

impl ResidualReport {
    pub fn rows(&self) -> [(&'static str, f64); 9] {
        [
            ("optcond", self.optcond),
            ("ujcomp", self.ujcomp),
            ("optcond2", self.optcond2),
            ("compedge", self.compedge),
            ("balance1", self.balance1),
            ("balance2", self.balance2),
            ("incondj", self.incondj),
            ("outcondj", self.outcondj),
            ("outcondu", self.outcondu),
        ]
    }

    pub fn max(&self) -> f64 {
        self.rows().iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.rows().iter().all(|r| r.1.is_finite() && r.1 <= tol)
    }
}

/// Strict triangle inequality on the kept transition edges at each vertex.
pub fn strict_triangle(dnet: &DirectedNet) -> bool {
    let mut psi: BTreeMap<(&str, usize, usize), f64> = BTreeMap::new();
    for e in &dnet.edges {
        if let (Some((k, l)), DirectedCost::Constant(c)) = (e.turn, e.cost) {
            psi.insert((dnet.vertices[e.tail].vertex.0.as_str(), k, l), c);
        }
    }
    for (&(v, k, l), &kl) in &psi {
        for (&(w, a, p), &kp) in psi.range((v, k, 0)..=(v, k, usize::MAX)) {
            debug_assert!(w == v && a == k);
            if p == l {
                continue;
            }
            if let Some(&pl) = psi.get(&(v, p, l)) {
                if kl >= kp + pl {
                    return false;
                }
            }
        }
    }
    true
}

pub fn verify_mfg(dnet: &DirectedNet, flow: &FlowState, values: &ValueAssignment) -> Result<ResidualReport> {
    dnet.check_flow(flow)?;
    if values.u.len() != dnet.vertices.len() {
        return Err(Error::Dimension {
            expected: dnet.vertices.len(),
            got: values.u.len(),
        });
    }
    let costs = dnet.evaluate_costs(flow)?.costs;
    let tol_flow = values.tol_flow;
    let u = &values.u;
    let mut r = ResidualReport {
        strict_triangle: strict_triangle(dnet),
        ..Default::default()
    };

    for (c, e) in dnet.edges.iter().enumerate() {
        let (ut, uh) = (u[e.tail], u[e.head]);
        if !uh.is_finite() {
            continue;
        }
        let slack = ut - costs[c] - uh;
        let violation = if ut.is_finite() { slack.max(0.0) } else { f64::INFINITY };
        let comp = if flow.j[c] > tol_flow { slack.abs() } else { 0.0 };
        match e.kind {
            DirectedKind::Transition => {
                r.optcond = r.optcond.max(violation);
                r.ujcomp = r.ujcomp.max(comp);
            }
            _ => {
                r.optcond2 = r.optcond2.max(violation);
                r.compedge = r.compedge.max(comp);
            }
        }
    }

    for (p, v) in dnet.vertices.iter().enumerate() {
        let lifted_in: f64 = dnet
            .in_edges(p)
            .iter()
            .filter(|&&e| dnet.edges[e].kind != DirectedKind::Transition)
            .map(|&e| flow.j[e])
            .sum();
        let lifted_out: f64 = dnet
            .out_edges(p)
            .iter()
            .filter(|&&e| dnet.edges[e].kind != DirectedKind::Transition)
            .map(|&e| flow.j[e])
            .sum();
        match v.role {
            PairRole::Interior => {
                let turns_out: f64 = dnet
                    .out_edges(p)
                    .iter()
                    .filter(|&&e| dnet.edges[e].kind == DirectedKind::Transition)
                    .map(|&e| flow.j[e])
                    .sum();
                let turns_in: f64 = dnet
                    .in_edges(p)
                    .iter()
                    .filter(|&&e| dnet.edges[e].kind == DirectedKind::Transition)
                    .map(|&e| flow.j[e])
                    .sum();
                r.balance1 = r.balance1.max((turns_out - lifted_in).abs());
                r.balance2 = r.balance2.max((turns_in - lifted_out).abs());
            }
            PairRole::Entrance => {
                let iota = dnet.entry_current(p);
                r.incondj = r.incondj.max((lifted_out - iota).abs() + lifted_in);
            }
            PairRole::Exit => {
                r.outcondj = r.outcondj.max(lifted_out.abs());
                r.outcondu = r.outcondu.max(u[p].max(0.0));
            }
        }
    }

    r.irregular = (0..dnet.vertices.len())
        .filter(|&i| !values.regular[i])
        .map(|i| dnet.vertices[i].label.clone())
        .collect();
    Ok(r)
}
