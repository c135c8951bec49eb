//! Subcommand implementations for the `mfgnet` binary.
//!
//! Each `cmd_*` function writes its human-readable report to `out`, writes
//! CSV/TOML artifacts into the configured output directory and returns the
//! process exit code. CSV files always start with a header row and use the
//! column order documented on the writer.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mfgnet::calibrate::{braess_calibration, roundtrip_check, CalibrationMode, CalibrationSpec};
use mfgnet::edgecost::{CostForm, EdgeModel, ModelSpec, Polynomial, PowerCoupling};
use mfgnet::equilibrium::{solve_exact, solve_iterative, SolveOptions, SolveResult};
use mfgnet::netmodel::examples::braess;
use mfgnet::netmodel::{normalize_boundaries, validate, validate_with, Network, ValidateOptions};
use mfgnet::recovery::{recover_values, verify_mfg, ResidualReport, ValueAssignment};
use mfgnet::wardrop_net::{transform, DirectedNet, DotOptions, FlowState};
use mfgnet::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Ok = 0,
    Io = 1,
    Validation = 2,
    Uncertified = 3,
    Numerical = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

impl CliError {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn io(e: impl fmt::Display) -> Self {
        CliError::new(Code::Io, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Io(_) => Code::Io,
            Error::InvalidNetwork(_)
            | Error::NotNormalized(_)
            | Error::UnknownModel(_)
            | Error::InvalidModel(_)
            | Error::OutOfRange(_)
            | Error::Precondition(_)
            | Error::TooManyOrientations { .. } => Code::Validation,
            Error::NoEquilibrium { .. } => Code::Uncertified,
            _ => Code::Numerical,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e)
    }
}

pub type CliResult = Result<Code, CliError>;

/// Options shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub solver: SolverChoice,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SolverChoice {
    /// Exact when the orientation count allows it, iterative otherwise.
    #[default]
    Auto,
    Exact,
    Iterative,
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(SolverChoice::Auto),
            "exact" => Ok(SolverChoice::Exact),
            "iterative" => Ok(SolverChoice::Iterative),
            _ => Err(format!("unknown solver `{s}`; expected auto, exact or iterative")),
        }
    }
}

impl RunConfig {
    fn solve_options(&self) -> SolveOptions {
        let mut o = SolveOptions {
            tol: self.tol,
            seed: self.seed,
            ..SolveOptions::default()
        };
        if let Some(n) = self.max_iter {
            o.max_iter = n;
        }
        o
    }

    fn out_dir(&self) -> Result<Option<&Path>, CliError> {
        match &self.out {
            Some(p) => {
                fs::create_dir_all(p)?;
                Ok(Some(p.as_path()))
            }
            None => Ok(None),
        }
    }
}

/// A comma-separated list (`0.5,1,2`) or `start:stop:count` (inclusive).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|e| format!("bad count `{n}`: {e}"))?;
            if n < 2 {
                return Err("a range grid needs at least two points".into());
            }
            Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        [list] => list.split(',').filter(|t| !t.trim().is_empty()).map(num).collect(),
        _ => Err(format!("cannot read grid `{s}`")),
    }
}

fn load_network(path: &Path) -> Result<Network, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Network::from_toml_str(&text).map_err(|e| CliError::new(Code::Io, format!("{}: {e}", path.display())))
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(dir.join(name)).map_err(CliError::io)
}

/// Validates a network file and reports how normalization would change it.
pub fn cmd_check(path: &Path, strict_triangle: bool, out: &mut dyn Write) -> CliResult {
    let net = load_network(path)?;
    let report = validate_with(&net, ValidateOptions { strict_triangle });
    if report.is_empty() {
        writeln!(out, "ok: {} vertices, {} edges", net.vertices.len(), net.edges.len())?;
        return Ok(Code::Ok);
    }
    write!(out, "{report}")?;
    if report.only_boundary() {
        let normalized = normalize_boundaries(&net)?;
        let again = validate_with(&normalized, ValidateOptions { strict_triangle });
        if again.is_empty() {
            writeln!(
                out,
                "ok after boundary normalization: {} vertices, {} edges",
                normalized.vertices.len(),
                normalized.edges.len()
            )?;
            return Ok(Code::Ok);
        }
        write!(out, "{again}")?;
    }
    Ok(Code::Validation)
}

/// Built-in models for `edge-cost --builtin`: `quadratic`, `constant:V`,
/// `affine:A,B` and `separable:GAMMA`.
pub fn builtin_model(name: &str) -> Result<ModelSpec, CliError> {
    let bad = |m: &str| CliError::new(Code::Validation, format!("builtin `{name}`: {m}"));
    let (kind, args) = name.split_once(':').unwrap_or((name, ""));
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
            .collect::<Result<_, _>>()?
    };
    match (kind, nums.as_slice()) {
        ("quadratic", []) => Ok(ModelSpec::quadratic()),
        ("constant", [v]) => Ok(ModelSpec::constant(*v)),
        ("affine", [a, b]) => Ok(ModelSpec::symmetric(CostForm::affine(*a, *b))),
        ("separable", [g]) => Ok(ModelSpec::Separable {
            gamma: *g,
            potential: Polynomial::zero(),
            coupling: PowerCoupling::linear(),
        }),
        _ => Err(bad("expected quadratic, constant:V, affine:A,B or separable:GAMMA")),
    }
}

/// Where `edge-cost` takes its model from.
#[derive(Debug, Clone)]
pub enum ModelSource {
    Builtin(String),
    /// A TOML file holding one model table.
    File(PathBuf),
    /// A named model of a network file.
    Network {
        path: PathBuf,
        model: String,
    },
}

fn resolve_model(src: &ModelSource) -> Result<ModelSpec, CliError> {
    match src {
        ModelSource::Builtin(name) => builtin_model(name),
        ModelSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::new(Code::Io, format!("{}: {e}", path.display())))
        }
        ModelSource::Network { path, model } => {
            let net = load_network(path)?;
            net.models
                .get(model)
                .cloned()
                .ok_or_else(|| CliError::new(Code::Validation, format!("no model `{model}` in {}", path.display())))
        }
    }
}

/// Tabulates `c01`, `c10`, `∂c01/∂j`, the midpoint density and the travel
/// time. Columns: `j,c01,c10,dc01_dj,m_mid,travel_time`.
pub fn cmd_edge_cost(src: &ModelSource, grid: &[f64], cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let spec = resolve_model(src)?;
    let model = EdgeModel::from_spec(&spec)?;
    let curve = model.cost_curve(grid)?;
    match cfg.out_dir()? {
        Some(dir) => {
            let f = fs::File::create(dir.join("cost_curve.csv"))?;
            curve.write_csv(f)?;
            writeln!(out, "wrote {}", dir.join("cost_curve.csv").display())?;
        }
        None => curve.write_csv(&mut *out)?,
    }
    if !curve.loop_positive() {
        writeln!(out, "warning: c01 + c10 is not positive on the whole grid")?;
    }
    Ok(Code::Ok)
}

fn prepare(net: &Network) -> Result<DirectedNet, CliError> {
    let net = if net.is_normalized() {
        net.clone()
    } else {
        normalize_boundaries(net)?
    };
    let report = validate(&net);
    if !report.is_empty() {
        return Err(CliError::new(Code::Validation, report.to_string()));
    }
    Ok(transform(&net)?)
}

/// Writes `directed.toml` and `directed.dot` and prints the counts.
pub fn cmd_transform(path: &Path, relabel: bool, cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let dnet = prepare(&load_network(path)?)?;
    let s = &dnet.stats;
    writeln!(
        out,
        "directed network: {} vertices, {} edges ({} candidates, {} pruned at the boundary, {} infinite turns omitted)",
        dnet.vertices.len(),
        s.kept_edges,
        s.candidate_edges,
        s.pruned_boundary,
        s.omitted_infinite
    )?;
    if let Some(dir) = cfg.out_dir()? {
        fs::write(dir.join("directed.toml"), dnet.to_toml_string()?)?;
        fs::write(dir.join("directed.dot"), dnet.to_dot(DotOptions { relabel }, None))?;
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(Code::Ok)
}

fn run_solver(dnet: &DirectedNet, cfg: &RunConfig) -> Result<SolveResult, CliError> {
    let opts = cfg.solve_options();
    let r = match cfg.solver {
        SolverChoice::Exact => solve_exact(dnet, &opts),
        SolverChoice::Iterative => solve_iterative(dnet, &opts),
        SolverChoice::Auto => match solve_exact(dnet, &opts) {
            Err(Error::TooManyOrientations { .. }) | Err(Error::Precondition(_)) => solve_iterative(dnet, &opts),
            r => r,
        },
    };
    Ok(r?)
}

/// `edge,tail,head,kind,current,cost`
fn write_flow(dir: &Path, dnet: &DirectedNet, r: &SolveResult) -> Result<(), CliError> {
    let mut w = csv_writer(dir, "flow.csv")?;
    w.write_record(["edge", "tail", "head", "kind", "current", "cost"])
        .map_err(CliError::io)?;
    for (i, e) in dnet.edges.iter().enumerate() {
        w.write_record([
            e.id.clone(),
            dnet.vertices[e.tail].label.clone(),
            dnet.vertices[e.head].label.clone(),
            format!("{:?}", e.kind).to_lowercase(),
            r.flow.j[i].to_string(),
            r.gap_report.costs[i].to_string(),
        ])
        .map_err(CliError::io)?;
    }
    w.flush()?;
    Ok(())
}

/// `edge,current`, signed along the edge orientation.
fn write_currents(dir: &Path, dnet: &DirectedNet, flow: &FlowState) -> Result<(), CliError> {
    let mut w = csv_writer(dir, "currents.csv")?;
    w.write_record(["edge", "current"]).map_err(CliError::io)?;
    for (id, j) in dnet.mfg_edges.iter().zip(dnet.mfg_currents(flow)) {
        w.write_record([id.0.clone(), j.to_string()]).map_err(CliError::io)?;
    }
    w.flush()?;
    Ok(())
}

/// `vertex,edge,mfg_vertex,role,u,regular,extended`
fn write_values(dir: &Path, dnet: &DirectedNet, v: &ValueAssignment) -> Result<(), CliError> {
    let mut w = csv_writer(dir, "values.csv")?;
    w.write_record(["vertex", "edge", "mfg_vertex", "role", "u", "regular", "extended"])
        .map_err(CliError::io)?;
    for (i, p) in dnet.vertices.iter().enumerate() {
        w.write_record([
            p.label.clone(),
            dnet.mfg_edges[p.edge].0.clone(),
            p.vertex.0.clone(),
            format!("{:?}", p.role).to_lowercase(),
            v.u[i].to_string(),
            v.regular[i].to_string(),
            v.extended[i].to_string(),
        ])
        .map_err(CliError::io)?;
    }
    w.flush()?;
    Ok(())
}

/// `condition,residual`
fn write_residuals(dir: &Path, rep: &ResidualReport) -> Result<(), CliError> {
    let mut w = csv_writer(dir, "residuals.csv")?;
    w.write_record(["condition", "residual"]).map_err(CliError::io)?;
    for (name, x) in rep.rows() {
        w.write_record([name.to_string(), x.to_string()])
            .map_err(CliError::io)?;
    }
    w.flush()?;
    Ok(())
}

/// `iteration,gap,best_gap`
fn write_trace(dir: &Path, r: &SolveResult) -> Result<(), CliError> {
    let mut w = csv_writer(dir, "trace.csv")?;
    w.write_record(["iteration", "gap", "best_gap"]).map_err(CliError::io)?;
    for (i, (g, b)) in r.gap_trace.iter().zip(&r.best_gap_trace).enumerate() {
        w.write_record([i.to_string(), g.to_string(), b.to_string()])
            .map_err(CliError::io)?;
    }
    w.flush()?;
    Ok(())
}

fn solve_network(net: &Network, cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let dnet = prepare(net)?;
    let r = run_solver(&dnet, cfg)?;
    writeln!(
        out,
        "solver {} after {} sweeps: gap {:.3e} (tol {:.3e}), {}",
        r.solver,
        r.iterations,
        r.gap_report.gap,
        r.tol,
        if r.certified { "certified" } else { "NOT certified" }
    )?;
    writeln!(
        out,
        "demand {}, social cost {:.9}, cost per agent {:.9}",
        dnet.total_demand(),
        r.gap_report.social_cost,
        r.cost_per_agent(&dnet)
    )?;
    for (id, j) in dnet.mfg_edges.iter().zip(dnet.mfg_currents(&r.flow)) {
        writeln!(out, "  current {id:<12} {j:.9}")?;
    }
    let dir = cfg.out_dir()?;
    if let Some(dir) = dir {
        write_flow(dir, &dnet, &r)?;
        write_currents(dir, &dnet, &r.flow)?;
        write_trace(dir, &r)?;
    }
    match recover_values(&dnet, &r.flow) {
        Ok(values) => {
            let rep = verify_mfg(&dnet, &r.flow, &values)?;
            writeln!(out, "MFG residuals: max {:.3e}", rep.max())?;
            for (name, x) in rep.rows() {
                writeln!(out, "  {name:<9} {x:.3e}")?;
            }
            if !rep.irregular.is_empty() {
                writeln!(
                    out,
                    "  {} irregular directed vertices keep extended values",
                    rep.irregular.len()
                )?;
            }
            if !rep.strict_triangle {
                writeln!(
                    out,
                    "  switching costs are not strictly triangular; values may not be unique"
                )?;
            }
            if let Some(dir) = dir {
                write_values(dir, &dnet, &values)?;
                write_residuals(dir, &rep)?;
            }
        }
        Err(e) => writeln!(out, "value recovery skipped: {e}")?,
    }
    if r.certified {
        Ok(Code::Ok)
    } else {
        Ok(Code::Uncertified)
    }
}

/// Solves a network file, recovers values and checks the MFG equations.
pub fn cmd_solve(path: &Path, cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let net = load_network(path)?;
    solve_network(&net, cfg, out)
}

/// Inputs for `calibrate` when no recipe file is given.
#[derive(Debug, Clone)]
pub struct CalibrateArgs {
    pub spec: Option<PathBuf>,
    pub alpha: f64,
    pub cost: String,
    pub travel_time: bool,
    pub kinetic_scale: f64,
    pub kinetic_exponent: f64,
}

/// `affine:A,B`, `power:A,B,P` or `constant:V`.
pub fn parse_cost(s: &str) -> Result<CostForm, CliError> {
    let bad = |m: &str| CliError::new(Code::Validation, format!("cost `{s}`: {m}"));
    let (kind, args) = s.split_once(':').ok_or_else(|| bad("expected KIND:ARGS"))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
        .collect::<Result<_, _>>()?;
    let form = match (kind, nums.as_slice()) {
        ("affine", [a, b]) => CostForm::affine(*a, *b),
        ("power", [a, b, p]) => CostForm::Power { a: *a, b: *b, p: *p },
        ("constant", [v]) => CostForm::constant(*v),
        _ => return Err(bad("expected affine:A,B, power:A,B,P or constant:V")),
    };
    form.check()?;
    Ok(form)
}

/// Calibrates an MFG edge model; writes `calibrated.toml`, loadable as an
/// edge model, and `diagnostics.csv` with columns `j,m,g,v,lagrangian_slope`.
pub fn cmd_calibrate(args: &CalibrateArgs, grid: &[f64], cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            toml::from_str::<CalibrationSpec>(&text)
                .map_err(|e| CliError::new(Code::Io, format!("{}: {e}", path.display())))?
        }
        None => {
            let cost = parse_cost(&args.cost)?;
            if args.travel_time {
                CalibrationSpec::travel_time(args.alpha, cost)
            } else {
                CalibrationSpec::fixed(args.alpha, cost, args.kinetic_scale, args.kinetic_exponent)
            }
        }
    };
    let cal = spec.build()?;
    let rt = roundtrip_check(&cal, grid)?;
    writeln!(
        out,
        "calibrated alpha = {} ({})",
        spec.alpha,
        match spec.mode {
            CalibrationMode::TravelTime => "travel-time",
            CalibrationMode::FixedLagrangian { .. } => "fixed Lagrangian",
        }
    )?;
    writeln!(
        out,
        "round trip on {} currents: cost {:.3e}, inverse {:.3e}",
        grid.len(),
        rt.cost,
        rt.inverse
    )?;
    if spec.mode == CalibrationMode::TravelTime {
        writeln!(out, "travel time {:.3e}, velocity {:.3e}", rt.travel_time, rt.velocity)?;
    }
    if let Some(b) = cal.singular_density {
        writeln!(out, "density bound {:.9} ({:?})", b.value, b.side)?;
    }
    if let Some(dir) = cfg.out_dir()? {
        let model = ModelSpec::Calibrated(spec.clone());
        let text = toml::to_string(&model).map_err(|e| CliError::io(e.to_string()))?;
        fs::write(dir.join("calibrated.toml"), text)?;
        cal.write_diagnostics(grid, fs::File::create(dir.join("diagnostics.csv"))?)?;
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(Code::Ok)
}

/// Solves the Braess network with and without the bridge and prints the
/// calibrated MFG constants.
pub fn cmd_demo_braess(alpha: f64, epsilon: f64, cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let mut costs = Vec::new();
    let mut code = Code::Ok;
    for (bridge, ideal) in [(false, 65.0), (true, 80.0)] {
        let net = braess(bridge, epsilon);
        let dnet = prepare(&net)?;
        let r = run_solver(&dnet, cfg)?;
        let per = r.cost_per_agent(&dnet);
        writeln!(
            out,
            "{}: cost per agent {per:.9} ({}; gap {:.3e})",
            if bridge { "with bridge e5" } else { "without bridge" },
            if r.certified { "certified" } else { "NOT certified" },
            r.gap_report.gap
        )?;
        for (id, j) in dnet.mfg_edges.iter().zip(dnet.mfg_currents(&r.flow)) {
            writeln!(out, "  current {id:<4} {j:.6}")?;
        }
        if epsilon > 0.0 {
            writeln!(out, "  deviation from the ε = 0 cost {ideal}: {:.6e}", per - ideal)?;
        }
        if !r.certified {
            code = Code::Uncertified;
        }
        if let Some(dir) = cfg.out_dir()? {
            let sub = dir.join(if bridge { "with_bridge" } else { "without_bridge" });
            fs::create_dir_all(&sub)?;
            write_flow(&sub, &dnet, &r)?;
            write_currents(&sub, &dnet, &r.flow)?;
        }
        costs.push(per);
    }
    writeln!(
        out,
        "adding the bridge raises the cost per agent from {:.6} to {:.6}",
        costs[0], costs[1]
    )?;
    let cal = braess_calibration(alpha, epsilon)?;
    writeln!(
        out,
        "calibration at alpha = {alpha}: kappa = {}, C_alpha = {}, H(p) = {}·|p|^kappa/kappa",
        cal.kappa,
        cal.c_alpha,
        100f64.powf(alpha / (2.0 * alpha - 1.0))
    )?;
    Ok(code)
}
