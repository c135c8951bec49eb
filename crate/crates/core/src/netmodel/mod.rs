//! Undirected MFG networks: vertices, edges with their models, boundary data
//! and switching costs, plus validation and boundary normalization.
//!
//! Network files are TOML; see `docs/network-format.md` in the repository.

pub mod examples;
pub mod generate;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::edgecost::{EdgeModel, ModelSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub String);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_string())
    }
}

impl From<&str> for EdgeId {
    fn from(s: &str) -> Self {
        EdgeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    #[default]
    Interior,
    Entrance,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    #[serde(default)]
    pub kind: VertexKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    #[default]
    Basic,
    EntranceAux,
    ExitAux,
}

/// An undirected edge; `tail` is the `x = 0` end and `head` the `x = 1` end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
    pub model: String,
    #[serde(default)]
    pub kind: EdgeKind,
}

impl Edge {
    pub fn other_end(&self, v: &VertexId) -> &VertexId {
        if &self.tail == v {
            &self.head
        } else {
            &self.tail
        }
    }
}

/// A switching cost; `Infinite` forbids the turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchCost {
    Finite(f64),
    Infinite,
}

impl SwitchCost {
    pub fn is_finite(&self) -> bool {
        matches!(self, SwitchCost::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            SwitchCost::Finite(c) => Some(*c),
            SwitchCost::Infinite => None,
        }
    }
}

impl Default for SwitchCost {
    fn default() -> Self {
        SwitchCost::Finite(0.0)
    }
}

impl fmt::Display for SwitchCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwitchCost::Finite(c) => write!(f, "{c}"),
            SwitchCost::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for SwitchCost {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SwitchCost::Finite(c) => s.serialize_f64(*c),
            SwitchCost::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SwitchCost {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(c) if c == f64::INFINITY => Ok(SwitchCost::Infinite),
            Raw::Num(c) => Ok(SwitchCost::Finite(c)),
            Raw::Int(c) => Ok(SwitchCost::Finite(c as f64)),
            Raw::Text(t) if t == "inf" => Ok(SwitchCost::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "switching cost must be a number or \"inf\", got \"{t}\""
            ))),
        }
    }
}

/// `ψ` for turning from `from` to `to` at `vertex`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchEntry {
    pub vertex: VertexId,
    pub from: EdgeId,
    pub to: EdgeId,
    pub cost: SwitchCost,
}

/// Switching costs with precedence: explicit entry, then per-vertex default,
/// then the global default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchingCosts {
    #[serde(default)]
    pub default: SwitchCost,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vertex_default: BTreeMap<VertexId, SwitchCost>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<SwitchEntry>,
}

impl SwitchingCosts {
    pub fn get(&self, vertex: &VertexId, from: &EdgeId, to: &EdgeId) -> SwitchCost {
        self.entries
            .iter()
            .rev()
            .find(|e| &e.vertex == vertex && &e.from == from && &e.to == to)
            .map(|e| e.cost)
            .or_else(|| self.vertex_default.get(vertex).copied())
            .unwrap_or(self.default)
    }

    pub fn set(&mut self, vertex: &VertexId, from: &EdgeId, to: &EdgeId, cost: SwitchCost) {
        self.entries
            .retain(|e| !(&e.vertex == vertex && &e.from == from && &e.to == to));
        self.entries.push(SwitchEntry {
            vertex: vertex.clone(),
            from: from.clone(),
            to: to.clone(),
            cost,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryData {
    /// Agents per unit time entering at each entrance.
    #[serde(default)]
    pub entry_current: BTreeMap<VertexId, f64>,
    /// Exit costs; missing entries are zero.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exit_cost: BTreeMap<VertexId, f64>,
}

/// An undirected MFG network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub models: BTreeMap<String, ModelSpec>,
    #[serde(default)]
    pub boundary: BoundaryData,
    #[serde(default)]
    pub switching: SwitchingCosts,
}

impl Network {
    pub fn from_toml_str(text: &str) -> Result<Network> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Network> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Network::from_toml_str(&text)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn vertex_index(&self) -> HashMap<&VertexId, usize> {
        self.vertices.iter().enumerate().map(|(i, v)| (&v.id, i)).collect()
    }

    pub fn vertex(&self, id: &VertexId) -> Option<&Vertex> {
        self.vertices.iter().find(|v| &v.id == id)
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.id == id)
    }

    /// Indices of edges with `v` as an endpoint, in edge order.
    pub fn incident_edges(&self, v: &VertexId) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| &e.tail == v || &e.head == v)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn incidence(&self, v: &VertexId) -> usize {
        self.incident_edges(v).len()
    }

    pub fn exit_cost(&self, v: &VertexId) -> f64 {
        self.boundary.exit_cost.get(v).copied().unwrap_or(0.0)
    }

    pub fn entry_current(&self, v: &VertexId) -> f64 {
        self.boundary.entry_current.get(v).copied().unwrap_or(0.0)
    }

    pub fn total_demand(&self) -> f64 {
        self.boundary.entry_current.values().sum()
    }

    /// Builds every referenced edge model, in edge order.
    pub fn build_models(&self) -> Result<Vec<EdgeModel>> {
        let mut cache: HashMap<&str, EdgeModel> = HashMap::new();
        let mut out = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if let Some(m) = cache.get(e.model.as_str()) {
                out.push(m.clone());
                continue;
            }
            let spec = self
                .models
                .get(&e.model)
                .ok_or_else(|| Error::UnknownModel(e.model.clone()))?;
            let m = EdgeModel::from_spec(spec).map_err(|err| err.on_edge(&e.id.0))?;
            cache.insert(&e.model, m.clone());
            out.push(m);
        }
        Ok(out)
    }

    pub fn is_normalized(&self) -> bool {
        self.vertices.iter().all(|v| match v.kind {
            VertexKind::Interior => true,
            VertexKind::Entrance => self.incidence(&v.id) == 1,
            VertexKind::Exit => self.incidence(&v.id) == 1 && self.exit_cost(&v.id) == 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidateOptions {
    /// Require `ψ_kl < ψ_kp + ψ_pl` instead of `≤`.
    pub strict_triangle: bool,
}

/// One violated network invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    DuplicateVertex(VertexId),
    DuplicateEdge(EdgeId),
    UnknownVertex {
        edge: EdgeId,
        vertex: VertexId,
    },
    SelfLoop(EdgeId),
    UnknownModel {
        edge: EdgeId,
        model: String,
    },
    InvalidModel {
        model: String,
        reason: String,
    },
    MissingEntryCurrent(VertexId),
    StrayEntryCurrent(VertexId),
    NonPositiveEntryCurrent(VertexId, f64),
    StrayExitCost(VertexId),
    NegativeExitCost(VertexId, f64),
    NegativeSwitchingCost {
        vertex: VertexId,
        from: EdgeId,
        to: EdgeId,
        cost: f64,
    },
    SwitchingNotIncident {
        vertex: VertexId,
        from: EdgeId,
        to: EdgeId,
    },
    TriangleViolation {
        vertex: VertexId,
        k: EdgeId,
        p: EdgeId,
        l: EdgeId,
        direct: f64,
        via: f64,
    },
    Unreachable(VertexId),
    NoEntrance,
    NoExit,
    Incidence {
        vertex: VertexId,
        kind: VertexKind,
        incidence: usize,
    },
    NonzeroExitCost(VertexId, f64),
}

impl Issue {
    /// Issues resolved by [`normalize_boundaries`].
    pub fn is_boundary(&self) -> bool {
        match self {
            Issue::Incidence { incidence, .. } => *incidence > 1,
            Issue::NonzeroExitCost(..) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateVertex(v) => write!(f, "duplicate vertex id `{v}`"),
            Issue::DuplicateEdge(e) => write!(f, "duplicate edge id `{e}`"),
            Issue::UnknownVertex { edge, vertex } => {
                write!(f, "edge `{edge}` references unknown vertex `{vertex}`")
            }
            Issue::SelfLoop(e) => write!(f, "edge `{e}` has identical endpoints"),
            Issue::UnknownModel { edge, model } => {
                write!(f, "edge `{edge}` references unknown model `{model}`")
            }
            Issue::InvalidModel { model, reason } => write!(f, "model `{model}`: {reason}"),
            Issue::MissingEntryCurrent(v) => write!(f, "entrance `{v}` has no entry current"),
            Issue::StrayEntryCurrent(v) => {
                write!(f, "entry current given for non-entrance vertex `{v}`")
            }
            Issue::NonPositiveEntryCurrent(v, c) => {
                write!(f, "entry current at `{v}` must be positive, got {c}")
            }
            Issue::StrayExitCost(v) => write!(f, "exit cost given for non-exit vertex `{v}`"),
            Issue::NegativeExitCost(v, c) => write!(f, "exit cost at `{v}` is negative: {c}"),
            Issue::NegativeSwitchingCost { vertex, from, to, cost } => {
                write!(f, "switching cost {from}->{to} at `{vertex}` is negative: {cost}")
            }
            Issue::SwitchingNotIncident { vertex, from, to } => write!(
                f,
                "switching entry {from}->{to} at `{vertex}` uses an edge not incident to it"
            ),
            Issue::TriangleViolation {
                vertex,
                k,
                p,
                l,
                direct,
                via,
            } => write!(
                f,
                "triangle inequality fails at `{vertex}` for ({k}, {p}, {l}): \
                 psi[{k},{l}] = {direct} vs psi[{k},{p}] + psi[{p},{l}] = {via}"
            ),
            Issue::Unreachable(v) => write!(f, "no exit reachable from entrance `{v}`"),
            Issue::NoEntrance => write!(f, "network has no entrance"),
            Issue::NoExit => write!(f, "network has no exit"),
            Issue::Incidence {
                vertex,
                kind,
                incidence,
            } => write!(f, "{kind:?} vertex `{vertex}` has incidence {incidence}, expected 1"),
            Issue::NonzeroExitCost(v, c) => {
                write!(f, "exit `{v}` has exit cost {c}; needs an auxiliary exit edge")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// Every issue is fixable by normalization.
    pub fn only_boundary(&self) -> bool {
        self.issues.iter().all(Issue::is_boundary)
    }

    pub fn triangle_violations(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| matches!(i, Issue::TriangleViolation { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "ok");
        }
        for i in &self.issues {
            writeln!(f, "- {i}")?;
        }
        Ok(())
    }
}

pub fn validate(net: &Network) -> ValidationReport {
    validate_with(net, ValidateOptions::default())
}

pub fn validate_with(net: &Network, opts: ValidateOptions) -> ValidationReport {
    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    for v in &net.vertices {
        if !seen.insert(&v.id) {
            issues.push(Issue::DuplicateVertex(v.id.clone()));
        }
    }
    let mut seen_e = BTreeSet::new();
    for e in &net.edges {
        if !seen_e.insert(&e.id) {
            issues.push(Issue::DuplicateEdge(e.id.clone()));
        }
        for end in [&e.tail, &e.head] {
            if !seen.contains(end) {
                issues.push(Issue::UnknownVertex {
                    edge: e.id.clone(),
                    vertex: end.clone(),
                });
            }
        }
        if e.tail == e.head {
            issues.push(Issue::SelfLoop(e.id.clone()));
        }
        if !net.models.contains_key(&e.model) {
            issues.push(Issue::UnknownModel {
                edge: e.id.clone(),
                model: e.model.clone(),
            });
        }
    }
    for (name, spec) in &net.models {
        if let Err(err) = EdgeModel::from_spec(spec) {
            issues.push(Issue::InvalidModel {
                model: name.clone(),
                reason: err.to_string(),
            });
        }
    }

    let kind_of: HashMap<&VertexId, VertexKind> = net.vertices.iter().map(|v| (&v.id, v.kind)).collect();
    for v in &net.vertices {
        match v.kind {
            VertexKind::Entrance => match net.boundary.entry_current.get(&v.id) {
                None => issues.push(Issue::MissingEntryCurrent(v.id.clone())),
                Some(&c) if !(c > 0.0 && c.is_finite()) => issues.push(Issue::NonPositiveEntryCurrent(v.id.clone(), c)),
                _ => {}
            },
            VertexKind::Exit => {
                let phi = net.exit_cost(&v.id);
                if phi < 0.0 || !phi.is_finite() {
                    issues.push(Issue::NegativeExitCost(v.id.clone(), phi));
                }
            }
            VertexKind::Interior => {}
        }
    }
    for v in net.boundary.entry_current.keys() {
        if kind_of.get(v) != Some(&VertexKind::Entrance) {
            issues.push(Issue::StrayEntryCurrent(v.clone()));
        }
    }
    for v in net.boundary.exit_cost.keys() {
        if kind_of.get(v) != Some(&VertexKind::Exit) {
            issues.push(Issue::StrayExitCost(v.clone()));
        }
    }

    for s in &net.switching.entries {
        let inc = |e: &EdgeId| {
            net.edge(e)
                .map(|ed| ed.tail == s.vertex || ed.head == s.vertex)
                .unwrap_or(false)
        };
        if !inc(&s.from) || !inc(&s.to) {
            issues.push(Issue::SwitchingNotIncident {
                vertex: s.vertex.clone(),
                from: s.from.clone(),
                to: s.to.clone(),
            });
        }
    }
    for v in &net.vertices {
        let inc = net.incident_edges(&v.id);
        for &k in &inc {
            for &l in &inc {
                if k == l {
                    continue;
                }
                let (ek, el) = (&net.edges[k].id, &net.edges[l].id);
                if let SwitchCost::Finite(c) = net.switching.get(&v.id, ek, el) {
                    if c < 0.0 || c.is_nan() {
                        issues.push(Issue::NegativeSwitchingCost {
                            vertex: v.id.clone(),
                            from: ek.clone(),
                            to: el.clone(),
                            cost: c,
                        });
                    }
                }
            }
        }
        if inc.len() > 2 {
            check_triangle(net, &v.id, &inc, opts.strict_triangle, &mut issues);
        }
    }

    let entrances: Vec<_> = net.vertices.iter().filter(|v| v.kind == VertexKind::Entrance).collect();
    if entrances.is_empty() {
        issues.push(Issue::NoEntrance);
    }
    if !net.vertices.iter().any(|v| v.kind == VertexKind::Exit) {
        issues.push(Issue::NoExit);
    }
    for v in &entrances {
        if !reaches_exit(net, &v.id) {
            issues.push(Issue::Unreachable(v.id.clone()));
        }
    }
    for v in &net.vertices {
        if v.kind != VertexKind::Interior {
            let incidence = net.incidence(&v.id);
            if incidence != 1 {
                issues.push(Issue::Incidence {
                    vertex: v.id.clone(),
                    kind: v.kind,
                    incidence,
                });
            }
        }
        if v.kind == VertexKind::Exit {
            let phi = net.exit_cost(&v.id);
            if phi != 0.0 && phi.is_finite() && phi > 0.0 {
                issues.push(Issue::NonzeroExitCost(v.id.clone(), phi));
            }
        }
    }
    ValidationReport { issues }
}

fn check_triangle(net: &Network, v: &VertexId, inc: &[usize], strict: bool, out: &mut Vec<Issue>) {
    let psi = |a: usize, b: usize| net.switching.get(v, &net.edges[a].id, &net.edges[b].id);
    for &k in inc {
        for &p in inc {
            for &l in inc {
                if k == p || p == l || k == l {
                    continue;
                }
                let (Some(kl), Some(kp), Some(pl)) = (psi(k, l).finite(), psi(k, p).finite(), psi(p, l).finite())
                else {
                    continue;
                };
                let via = kp + pl;
                let bad = if strict { kl >= via } else { kl > via };
                if bad {
                    out.push(Issue::TriangleViolation {
                        vertex: v.clone(),
                        k: net.edges[k].id.clone(),
                        p: net.edges[p].id.clone(),
                        l: net.edges[l].id.clone(),
                        direct: kl,
                        via,
                    });
                }
            }
        }
    }
}

fn reaches_exit(net: &Network, start: &VertexId) -> bool {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(v) = queue.pop_front() {
        if net.vertex(&v).map(|x| x.kind) == Some(VertexKind::Exit) {
            return true;
        }
        for i in net.incident_edges(&v) {
            let w = net.edges[i].other_end(&v).clone();
            if seen.insert(w.clone()) {
                queue.push_back(w);
            }
        }
    }
    false
}

fn fresh<F: Fn(&str) -> bool>(base: String, taken: F) -> String {
    let mut name = base;
    while taken(&name) {
        name.push('\'');
    }
    name
}

/// Attaches auxiliary entrance edges to entrances of incidence > 1 and
/// auxiliary exit edges to exits of incidence > 1 or with nonzero exit cost.
///
/// The auxiliary exit edge carries a constant cost equal to the former exit
/// cost. Switching costs into an entrance edge and out of an exit edge are set
/// to infinity; the opposite turns cost zero.
pub fn normalize_boundaries(net: &Network) -> Result<Network> {
    for v in &net.vertices {
        if v.kind == VertexKind::Exit && net.boundary.entry_current.contains_key(&v.id) {
            return Err(Error::InvalidNetwork(format!(
                "exit vertex `{}` also carries an entry current",
                v.id
            )));
        }
        if v.kind == VertexKind::Entrance && net.boundary.exit_cost.contains_key(&v.id) {
            return Err(Error::InvalidNetwork(format!(
                "entrance vertex `{}` also carries an exit cost",
                v.id
            )));
        }
    }
    let mut out = net.clone();
    let zero_model = "~zero".to_string();
    for v in &net.vertices {
        let incidence = net.incidence(&v.id);
        let basic: Vec<EdgeId> = net
            .incident_edges(&v.id)
            .into_iter()
            .map(|i| net.edges[i].id.clone())
            .collect();
        match v.kind {
            VertexKind::Entrance if incidence > 1 => {
                let nv = VertexId(fresh(format!("{}~in", v.id), |s| {
                    out.vertex(&VertexId(s.to_string())).is_some()
                }));
                let ne = EdgeId(fresh(format!("{}~in", v.id), |s| {
                    out.edge(&EdgeId(s.to_string())).is_some()
                }));
                out.models
                    .entry(zero_model.clone())
                    .or_insert_with(|| ModelSpec::constant(0.0));
                out.vertices.push(Vertex {
                    id: nv.clone(),
                    kind: VertexKind::Entrance,
                });
                out.edges.push(Edge {
                    id: ne.clone(),
                    tail: nv.clone(),
                    head: v.id.clone(),
                    model: zero_model.clone(),
                    kind: EdgeKind::EntranceAux,
                });
                let slot = out.vertices.iter_mut().find(|x| x.id == v.id).unwrap();
                slot.kind = VertexKind::Interior;
                let iota = out.boundary.entry_current.remove(&v.id).unwrap_or(0.0);
                out.boundary.entry_current.insert(nv, iota);
                for b in &basic {
                    out.switching.set(&v.id, &ne, b, SwitchCost::Finite(0.0));
                    out.switching.set(&v.id, b, &ne, SwitchCost::Infinite);
                }
            }
            VertexKind::Exit if incidence > 1 || net.exit_cost(&v.id) != 0.0 => {
                let phi = net.exit_cost(&v.id);
                let nv = VertexId(fresh(format!("{}~out", v.id), |s| {
                    out.vertex(&VertexId(s.to_string())).is_some()
                }));
                let ne = EdgeId(fresh(format!("{}~out", v.id), |s| {
                    out.edge(&EdgeId(s.to_string())).is_some()
                }));
                let model = if phi == 0.0 {
                    out.models
                        .entry(zero_model.clone())
                        .or_insert_with(|| ModelSpec::constant(0.0));
                    zero_model.clone()
                } else {
                    let name = fresh(format!("~exit:{}", v.id), |s| out.models.contains_key(s));
                    out.models.insert(name.clone(), ModelSpec::constant(phi));
                    name
                };
                out.vertices.push(Vertex {
                    id: nv.clone(),
                    kind: VertexKind::Exit,
                });
                out.edges.push(Edge {
                    id: ne.clone(),
                    tail: v.id.clone(),
                    head: nv,
                    model,
                    kind: EdgeKind::ExitAux,
                });
                let slot = out.vertices.iter_mut().find(|x| x.id == v.id).unwrap();
                slot.kind = VertexKind::Interior;
                out.boundary.exit_cost.remove(&v.id);
                for b in &basic {
                    out.switching.set(&v.id, b, &ne, SwitchCost::Finite(0.0));
                    out.switching.set(&v.id, &ne, b, SwitchCost::Infinite);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}
