//! Inverse problems: build an edge Lagrangian `m^α·𝓛(v) + g(m)` whose travel
//! cost reproduces a prescribed curve `c(j)`.
//!
//! Two modes are supported:
//!
//! * `FixedLagrangian`: `𝓛` is given, the density map `m = Ψ_c(j)` solves
//!   `m^α·𝓛'(j/m) = c(j)` and `g(m) = m^α·𝓗(−𝓛'(Ψ_c⁻¹(m)/m))`.
//! * `TravelTime`: additionally the travel time `m/j` equals `c(j)`, which
//!   fixes `m = j·c(j)` and `𝓛'(v) = v^{α−1}/(c⁻¹(1/v))^α`.
//!
//! `𝓛` is normalized by `𝓛(0) = 0`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::edgecost::{CostForm, Coupling, EdgeModel, Kinetic, LagrangianModel, ModelSpec, Polynomial, PowerKinetic};
use crate::error::{Error, Result};
use crate::numerics;

/// `𝓛(v) = scale·|v|^exponent / exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerKineticSpec {
    pub scale: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationMode {
    FixedLagrangian { kinetic: PowerKineticSpec },
    TravelTime,
}

/// Prescribed cost, congestion exponent and calibration mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub alpha: f64,
    pub cost: CostForm,
    pub mode: CalibrationMode,
    /// Current range on which the construction is checked.
    #[serde(default = "default_range")]
    pub range: (f64, f64),
}

fn default_range() -> (f64, f64) {
    (1e-3, 1e4)
}

impl CalibrationSpec {
    pub fn fixed(alpha: f64, cost: CostForm, scale: f64, exponent: f64) -> Self {
        CalibrationSpec {
            alpha,
            cost,
            mode: CalibrationMode::FixedLagrangian {
                kinetic: PowerKineticSpec { scale, exponent },
            },
            range: default_range(),
        }
    }

    pub fn travel_time(alpha: f64, cost: CostForm) -> Self {
        CalibrationSpec {
            alpha,
            cost,
            mode: CalibrationMode::TravelTime,
            range: default_range(),
        }
    }

    pub fn build(&self) -> Result<CalibratedMfg> {
        match self.mode {
            CalibrationMode::FixedLagrangian { .. } => calibrate_cost(self),
            CalibrationMode::TravelTime => calibrate_travel_time(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    /// The density map stays below the bound.
    Max,
    /// The density map stays above the bound.
    Min,
}

/// Finite limit of `Ψ_c(j)` as `j → ∞`, where `g` blows up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBound {
    pub value: f64,
    pub side: BoundSide,
}

/// Result of a calibration.
#[derive(Debug, Clone)]
pub struct CalibratedMfg {
    pub spec: CalibrationSpec,
    kinetic: Arc<dyn Kinetic>,
    coupling: Arc<CalibratedCoupling>,
    /// Admissible speeds `[inf, sup]`.
    pub velocity_domain: (f64, f64),
    pub singular_density: Option<DensityBound>,
}

impl CalibratedMfg {
    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    /// `m = Ψ_c(j)`.
    pub fn density_of_current(&self, j: f64) -> f64 {
        self.coupling.density_of_current(j)
    }

    /// `j = Ψ_c⁻¹(m)`, if `m` lies in the range of `Ψ_c`.
    pub fn current_of_density(&self, m: f64) -> Option<f64> {
        self.coupling.current_of_density(m)
    }

    pub fn coupling(&self, m: f64) -> f64 {
        self.coupling.value(m)
    }

    pub fn coupling_slope(&self, m: f64) -> f64 {
        self.coupling.slope(m)
    }

    pub fn lagrangian_value(&self, v: f64) -> f64 {
        self.kinetic.value(v)
    }

    pub fn lagrangian_slope(&self, v: f64) -> f64 {
        self.kinetic.slope(v)
    }

    pub fn lagrangian_curvature(&self, v: f64) -> f64 {
        self.kinetic.curvature(v)
    }

    /// `𝓗(p)`, the Legendre transform of `𝓛`.
    pub fn hamiltonian(&self, p: f64) -> f64 {
        self.kinetic.conjugate(p)
    }

    pub fn kinetic(&self) -> Arc<dyn Kinetic> {
        self.kinetic.clone()
    }

    pub fn lagrangian(&self) -> LagrangianModel {
        LagrangianModel::new(
            self.spec.alpha,
            self.kinetic.clone(),
            self.coupling.clone(),
            Polynomial::zero(),
        )
    }

    pub fn edge_model(&self) -> EdgeModel {
        EdgeModel::from_lagrangian(ModelSpec::Calibrated(self.spec.clone()), self.lagrangian())
    }

    /// Diagnostic table with columns `j,m,g,v,lagrangian_slope`.
    pub fn write_diagnostics<W: Write>(&self, grid: &[f64], out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            j: f64,
            m: f64,
            g: f64,
            v: f64,
            lagrangian_slope: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for &j in grid {
            let m = self.density_of_current(j);
            let v = j / m;
            w.serialize(Row {
                j,
                m,
                g: self.coupling(m),
                v,
                lagrangian_slope: self.lagrangian_slope(v),
            })
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug)]
struct CalibratedCoupling {
    alpha: f64,
    cost: CostForm,
    kinetic: Arc<dyn Kinetic>,
    travel_time: bool,
}

impl CalibratedCoupling {
    fn m_alpha(&self, m: f64) -> f64 {
        if self.alpha == 0.0 {
            1.0
        } else {
            m.powf(self.alpha)
        }
    }

    /// `m^α·𝓛'(j/m)`.
    fn phi(&self, j: f64, m: f64) -> f64 {
        self.m_alpha(m) * self.kinetic.slope(j / m)
    }

    fn density_of_current(&self, j: f64) -> f64 {
        if self.travel_time {
            return j * self.cost.eval(j);
        }
        let c = self.cost.eval(j);
        let f = |m: f64| self.phi(j, m) - c;
        expand_and_solve(f, j.max(1e-300)).unwrap_or(f64::NAN)
    }

    fn current_of_density(&self, m: f64) -> Option<f64> {
        if !(m > 0.0) {
            return None;
        }
        if self.travel_time {
            if let CostForm::Affine { a, b } = self.cost {
                if b > 0.0 {
                    return Some(2.0 * m / (a + (a * a + 4.0 * b * m).sqrt()));
                }
            }
            return expand_and_solve(|j| j * self.cost.eval(j) - m, m.sqrt());
        }
        expand_and_solve(|j| self.phi(j, m) - self.cost.eval(j), m)
    }

    /// `dj/dm` along `Ψ_c⁻¹`.
    fn current_slope(&self, j: f64, m: f64) -> f64 {
        if self.travel_time {
            return 1.0 / (self.cost.eval(j) + j * self.cost.slope(j));
        }
        let v = j / m;
        let k = &self.kinetic;
        let ma1 = self.m_alpha(m) / m;
        let g_m = ma1 * (self.alpha * k.slope(v) - v * k.curvature(v));
        let g_j = ma1 * k.curvature(v) - self.cost.slope(j);
        -g_m / g_j
    }
}

impl Coupling for CalibratedCoupling {
    /// `m^α·𝓗(−𝓛'(v))` with `v = Ψ_c⁻¹(m)/m`; the maximizer of the Legendre
    /// transform at `−𝓛'(v)` is `v` itself, so `𝓗 = v·𝓛'(v) − 𝓛(v)`.
    fn value(&self, m: f64) -> f64 {
        let Some(j) = self.current_of_density(m) else {
            return f64::NAN;
        };
        let v = j / m;
        let k = &self.kinetic;
        self.m_alpha(m) * (v * k.slope(v) - k.value(v))
    }

    fn slope(&self, m: f64) -> f64 {
        let Some(j) = self.current_of_density(m) else {
            return f64::NAN;
        };
        let v = j / m;
        let k = &self.kinetic;
        let h = v * k.slope(v) - k.value(v);
        let dv_dm = (self.current_slope(j, m) - v) / m;
        let ma = self.m_alpha(m);
        self.alpha * ma / m * h + ma * v * k.curvature(v) * dv_dm
    }
}

/// Finds the smallest sign change of `f` on `start·[1e-60, 1e60]` via a
/// decade scan, refined by Brent.
fn expand_and_solve<F: Fn(f64) -> f64>(f: F, start: f64) -> Option<f64> {
    let mut x0 = start * 1e-60;
    let mut f0 = f(x0);
    for _ in 0..120 {
        let x1 = x0 * 10.0;
        let f1 = f(x1);
        if f0 == 0.0 {
            return Some(x0);
        }
        if f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum() {
            return numerics::brent_with(&f, x0, x1, f0, f1, 1e-16 * x0).ok();
        }
        x0 = x1;
        f0 = f1;
    }
    None
}

/// `𝓛'(v) = v^{α−1}/(c⁻¹(1/v))^α`, with `𝓛` tabulated by cumulative
/// quadrature from `𝓛(0) = 0`.
#[derive(Debug)]
pub struct TravelTimeKinetic {
    alpha: f64,
    cost: CostForm,
    vmax: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    /// Local power of `𝓛` below the first node.
    head_power: f64,
}

impl TravelTimeKinetic {
    pub fn new(alpha: f64, cost: CostForm, top: f64) -> Self {
        let c0 = cost.eval(0.0);
        let vmax = if c0 > 0.0 { 1.0 / c0 } else { f64::INFINITY };
        let mut k = TravelTimeKinetic {
            alpha,
            cost,
            vmax,
            nodes: Vec::new(),
            cumulative: Vec::new(),
            head_power: 1.0,
        };
        k.build_table(top);
        k
    }

    fn build_table(&mut self, top: f64) {
        let mut nodes = Vec::new();
        if self.vmax.is_finite() {
            let half = 0.5 * self.vmax;
            let mut v = half * 1e-10;
            while v < half {
                nodes.push(v);
                v *= 1.05;
            }
            let mut d = half;
            while d > self.vmax * 1e-10 {
                nodes.push(self.vmax - d);
                d /= 1.05;
            }
        } else {
            let mut v = top * 1e-12;
            while v < top {
                nodes.push(v);
                v *= 1.05;
            }
            nodes.push(top);
        }
        let mut cumulative = Vec::with_capacity(nodes.len());
        let v1 = nodes[0];
        let s1 = self.raw_slope(v1);
        let s2 = self.raw_slope(0.5 * v1);
        let r = if s1 > 0.0 && s2 > 0.0 { (s1 / s2).log2() } else { 1.0 };
        let mut acc = if r > -1.0 { v1 * s1 / (r + 1.0) } else { 0.0 };
        self.head_power = (r + 1.0).max(f64::MIN_POSITIVE);
        cumulative.push(acc);
        for w in nodes.windows(2) {
            acc += self.segment(w[0], w[1]);
            cumulative.push(acc);
        }
        self.nodes = nodes;
        self.cumulative = cumulative;
    }

    /// `∫_a^b 𝓛'(s) ds`, integrated in the current `w = c⁻¹(1/s)` where the
    /// integrand `c(w)^{−1−α}·w^{−α}·c'(w)` has no cancellation near `vmax`.
    fn segment(&self, a: f64, b: f64) -> f64 {
        let (Some(wa), Some(wb)) = (self.cost.inverse(1.0 / a), self.cost.inverse(1.0 / b)) else {
            let rough = (b - a) * self.raw_slope(0.5 * (a + b));
            let tol = (1e-11 * rough.abs()).max(1e-300);
            return numerics::adaptive_simpson(|s| self.raw_slope(s), a, b, tol);
        };
        let alpha = self.alpha;
        let cost = &self.cost;
        let f = |w: f64| {
            let c = cost.eval(w);
            c.powf(-1.0 - alpha) * w.powf(-alpha) * cost.slope(w)
        };
        let rough = (wa - wb) * f(0.5 * (wa + wb));
        let tol = (1e-12 * rough.abs()).max(1e-300);
        numerics::adaptive_simpson(f, wb, wa, tol)
    }

    fn raw_slope(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.vmax {
            return f64::INFINITY;
        }
        match self.cost.inverse(1.0 / s) {
            Some(w) if w > 0.0 => s.powf(self.alpha - 1.0) * w.powf(-self.alpha),
            _ => f64::INFINITY,
        }
    }

    pub fn max_velocity(&self) -> f64 {
        self.vmax
    }
}

impl Kinetic for TravelTimeKinetic {
    fn value(&self, v: f64) -> f64 {
        let s = v.abs();
        if s == 0.0 {
            return 0.0;
        }
        if s >= self.vmax {
            return f64::INFINITY;
        }
        let k = self.nodes.partition_point(|&n| n <= s);
        if k == 0 {
            return self.cumulative[0] * (s / self.nodes[0]).powf(self.head_power);
        }
        self.cumulative[k - 1] + self.segment(self.nodes[k - 1], s)
    }

    fn slope(&self, v: f64) -> f64 {
        let s = self.raw_slope(v.abs());
        if v < 0.0 {
            -s
        } else {
            s
        }
    }

    fn curvature(&self, v: f64) -> f64 {
        let s = v.abs();
        if s == 0.0 || s >= self.vmax {
            return f64::INFINITY;
        }
        let Some(w) = self.cost.inverse(1.0 / s) else {
            return f64::INFINITY;
        };
        let l1 = self.raw_slope(s);
        l1 * ((self.alpha - 1.0) / s + self.alpha / (s * s * w * self.cost.slope(w)))
    }

    fn speed_limit(&self) -> f64 {
        self.vmax
    }

    fn conjugate_velocity(&self, p: f64) -> f64 {
        numeric_legendre(self, p).0
    }

    fn conjugate(&self, p: f64) -> f64 {
        numeric_legendre(self, p).1
    }
}

/// Maximizer and value of `−p·v − 𝓛(v)`: golden-section search on a bracket
/// found from the monotonicity of `𝓛'`, then Newton polishing on
/// `𝓛'(v) = −p`.
pub fn numeric_legendre(k: &dyn Kinetic, p: f64) -> (f64, f64) {
    if p == 0.0 {
        return (0.0, -k.value(0.0));
    }
    let target = p.abs();
    let vmax = k.speed_limit();
    let mut hi = if vmax.is_finite() { 0.5 * vmax } else { 1.0 };
    let mut guard = 0;
    while k.slope(hi) < target && guard < 4000 {
        hi = if vmax.is_finite() {
            vmax - 0.5 * (vmax - hi)
        } else {
            2.0 * hi
        };
        guard += 1;
    }
    let mut lo = 0.5 * hi;
    while lo > 1e-300 && k.slope(lo) > target {
        lo *= 0.5;
    }
    if k.slope(lo) > target {
        lo = 0.0;
    }
    let mut s = numerics::golden_max(|s| target * s - k.value(s), lo, hi, 1e-9 * hi);
    for _ in 0..8 {
        let r = k.slope(s) - target;
        let d = k.curvature(s);
        if !(d.is_finite() && d > 0.0) {
            break;
        }
        let next = (s - r / d).clamp(lo, hi);
        if (next - s).abs() <= 1e-16 * s {
            s = next;
            break;
        }
        s = next;
    }
    let v = -p.signum() * s;
    (v, -p * v - k.value(v))
}

fn working_grid(range: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = range;
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}

fn check_common(spec: &CalibrationSpec) -> Result<()> {
    spec.cost.check()?;
    if !spec.alpha.is_finite() || spec.alpha < 0.0 {
        return Err(Error::OutOfRange(format!("alpha must be ≥ 0, got {}", spec.alpha)));
    }
    let (lo, hi) = spec.range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::OutOfRange(format!("bad working range ({lo}, {hi})")));
    }
    for j in working_grid(spec.range, 64) {
        let c = spec.cost.eval(j);
        if !(c > 0.0) {
            return Err(Error::Calibration(format!("cost must be positive, c({j}) = {c}")));
        }
    }
    Ok(())
}

fn check_invertible(coupling: &CalibratedCoupling, range: (f64, f64)) -> Result<f64> {
    let grid = working_grid(range, 200);
    let psi: Vec<f64> = grid.iter().map(|&j| coupling.density_of_current(j)).collect();
    if let Some(i) = psi.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::Calibration(format!("density map undefined at j = {}", grid[i])));
    }
    let dir = (psi[1] - psi[0]).signum();
    for i in 1..psi.len() {
        let step = psi[i] - psi[i - 1];
        if step.signum() != dir || step == 0.0 {
            return Err(Error::NotInvertible { fold: grid[i - 1] });
        }
    }
    Ok(dir)
}

/// Finite limit of `Ψ_c(j)` at large `j`, by Richardson extrapolation of the
/// `1/j` tail.
fn singular_density(coupling: &CalibratedCoupling, dir: f64) -> Option<DensityBound> {
    let a = coupling.density_of_current(1e6);
    let b = coupling.density_of_current(1e7);
    let c = coupling.density_of_current(1e8);
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return None;
    }
    let r1 = (10.0 * b - a) / 9.0;
    let r2 = (10.0 * c - b) / 9.0;
    let value = r2;
    if !(value > 0.0) || (r1 - r2).abs() > 1e-6 * value.abs() {
        return None;
    }
    Some(DensityBound {
        value,
        side: if dir > 0.0 { BoundSide::Max } else { BoundSide::Min },
    })
}

/// Calibration with a fixed power kinetic term.
pub fn calibrate_cost(spec: &CalibrationSpec) -> Result<CalibratedMfg> {
    let CalibrationMode::FixedLagrangian { kinetic } = spec.mode else {
        return Err(Error::Precondition("calibrate_cost needs a fixed Lagrangian".into()));
    };
    check_common(spec)?;
    let k = PowerKinetic::new(kinetic.scale, kinetic.exponent)?;
    // ∂Φ/∂m has the sign of α·𝓛'(v) − v·𝓛''(v) = s·v^{q−1}·(α − q + 1).
    let lean = spec.alpha - (k.exponent - 1.0);
    if lean.abs() < 1e-12 {
        return Err(Error::AmbiguousCalibration(format!(
            "m^α·𝓛'(j/m) does not depend on m for alpha = {} and exponent {}",
            spec.alpha, k.exponent
        )));
    }
    let kinetic: Arc<dyn Kinetic> = Arc::new(k);
    let coupling = Arc::new(CalibratedCoupling {
        alpha: spec.alpha,
        cost: spec.cost.clone(),
        kinetic: kinetic.clone(),
        travel_time: false,
    });
    let dir = check_invertible(&coupling, spec.range)?;
    let singular = singular_density(&coupling, dir);
    Ok(CalibratedMfg {
        spec: spec.clone(),
        kinetic,
        coupling,
        velocity_domain: (0.0, f64::INFINITY),
        singular_density: singular,
    })
}

/// Calibration in which the travel time `m/j` also equals `c(j)`.
pub fn calibrate_travel_time(spec: &CalibrationSpec) -> Result<CalibratedMfg> {
    if spec.mode != CalibrationMode::TravelTime {
        return Err(Error::Precondition(
            "calibrate_travel_time needs travel-time mode".into(),
        ));
    }
    check_common(spec)?;
    if !(spec.alpha > 0.0) {
        return Err(Error::OutOfRange("travel-time calibration needs alpha > 0".into()));
    }
    if !spec.cost.is_increasing() {
        let fold = working_grid(spec.range, 200)
            .windows(2)
            .find(|w| spec.cost.eval(w[1]) <= spec.cost.eval(w[0]))
            .map(|w| w[0])
            .unwrap_or(0.0);
        return Err(Error::NotInvertible { fold });
    }
    let top = 4.0 / spec.cost.eval(spec.range.0);
    let tk = TravelTimeKinetic::new(spec.alpha, spec.cost.clone(), top);
    let vmax = tk.max_velocity();
    let kinetic: Arc<dyn Kinetic> = Arc::new(tk);
    let coupling = Arc::new(CalibratedCoupling {
        alpha: spec.alpha,
        cost: spec.cost.clone(),
        kinetic: kinetic.clone(),
        travel_time: true,
    });
    check_invertible(&coupling, spec.range)?;
    Ok(CalibratedMfg {
        spec: spec.clone(),
        kinetic,
        coupling,
        velocity_domain: (0.0, vmax),
        singular_density: None,
    })
}

/// Calibrations for the three edge types of the Braess network.
#[derive(Debug, Clone)]
pub struct BraessCalibration {
    pub alpha: f64,
    pub epsilon: f64,
    /// `2α/(2α−1)`.
    pub kappa: f64,
    /// Constant coupling of the `|j|/100` edges.
    pub c_alpha: f64,
    /// `c(j) = |j|/100`, travel-time mode.
    pub linear: CalibratedMfg,
    /// `c(j) = 45 + ε|j|`, fixed `𝓛 = v²/2`, `α = 0`.
    pub constant: CalibratedMfg,
    /// `c(j) = ε|j|`, fixed `𝓛 = |v|³/3`, `α = 0`; absent for `ε = 0`.
    pub bridge: Option<CalibratedMfg>,
}

impl BraessCalibration {
    /// `𝓛(v) = |v|^{2α}/(2α·100^α)`.
    pub fn linear_lagrangian(&self, v: f64) -> f64 {
        let a = self.alpha;
        v.abs().powf(2.0 * a) / (2.0 * a * 100f64.powf(a))
    }

    /// `𝓗(p) = 100^{α/(2α−1)}·|p|^κ/κ`.
    pub fn linear_hamiltonian(&self, p: f64) -> f64 {
        let a = self.alpha;
        100f64.powf(a / (2.0 * a - 1.0)) * p.abs().powf(self.kappa) / self.kappa
    }
}

pub fn braess_calibration(alpha: f64, epsilon: f64) -> Result<BraessCalibration> {
    if !(alpha > 0.5 && alpha.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "Braess calibration needs alpha > 1/2, got {alpha}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange(format!("epsilon must be ≥ 0, got {epsilon}")));
    }
    let kappa = 2.0 * alpha / (2.0 * alpha - 1.0);
    let linear = calibrate_travel_time(&CalibrationSpec::travel_time(alpha, CostForm::affine(0.0, 0.01)))?;
    let constant = calibrate_cost(&CalibrationSpec::fixed(0.0, CostForm::affine(45.0, epsilon), 1.0, 2.0))?;
    let bridge = if epsilon > 0.0 {
        Some(calibrate_cost(&CalibrationSpec::fixed(
            0.0,
            CostForm::affine(0.0, epsilon),
            1.0,
            3.0,
        ))?)
    } else {
        None
    };
    Ok(BraessCalibration {
        alpha,
        epsilon,
        kappa,
        c_alpha: 1.0 / kappa,
        linear,
        constant,
        bridge,
    })
}

/// Sup-norm discrepancies of a calibration over a current grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    /// `max |c_forward(j) − c(j)|`.
    pub cost: f64,
    /// `max |m(j)/j − c(j)|` for the forward density.
    pub travel_time: f64,
    /// `max |j/m(j) − 1/c(j)|`.
    pub velocity: f64,
    /// `max |Ψ_c⁻¹(Ψ_c(j)) − j| / j`.
    pub inverse: f64,
}

pub fn roundtrip_check(cal: &CalibratedMfg, grid: &[f64]) -> Result<RoundTrip> {
    let model = cal.edge_model();
    let mut out = RoundTrip {
        cost: 0.0,
        travel_time: 0.0,
        velocity: 0.0,
        inverse: 0.0,
    };
    for &j in grid {
        let c = cal.spec.cost.eval(j);
        let forward = model.c01(j)?;
        out.cost = out.cost.max((forward - c).abs());
        let d = model.solve_density(j, 0.5)?;
        if cal.spec.mode == CalibrationMode::TravelTime {
            out.travel_time = out.travel_time.max((d.m / j - c).abs());
            out.velocity = out.velocity.max((d.v - 1.0 / c).abs());
        }
        let m = cal.density_of_current(j);
        let back = cal.current_of_density(m).unwrap_or(f64::NAN);
        out.inverse = out.inverse.max((back - j).abs() / j);
    }
    Ok(out)
}
