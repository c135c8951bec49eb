//! Single-edge mean-field game machinery: edge models, densities from the
//! current method, travel costs `c01`/`c10` and their analytical diagnostics.
//!
//! Lagrangian models are of the form `L(x, v, m) = m^α·𝓛(v) + g(m) − V(x)`;
//! the congestion and separable Hamiltonians are both members.

pub mod curve;
pub mod forms;
pub mod lagrangian;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use curve::{CostCurve, CostPoint, DensityProfile, DensitySample};
pub use forms::{CostForm, Polynomial, PowerCoupling};
pub use lagrangian::{legendre_defect, Coupling, DensityPolicy, HDerivatives, Kinetic, LagrangianModel, PowerKinetic};

use crate::calibrate::CalibrationSpec;
use crate::error::{Error, Result};
use crate::numerics;

/// Declarative description of an edge model, as stored in network files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Explicit costs in both travel directions.
    ClosedForm { c01: CostForm, c10: CostForm },
    /// `H = |p|²/(2m^α) + V(x) − g(m)`.
    Congestion {
        alpha: f64,
        #[serde(default)]
        potential: Polynomial,
        #[serde(default)]
        coupling: PowerCoupling,
    },
    /// `H = |p|^γ/γ + V(x) − g(m)`.
    Separable {
        gamma: f64,
        #[serde(default)]
        potential: Polynomial,
        #[serde(default)]
        coupling: PowerCoupling,
    },
    /// A model rebuilt from a calibration recipe.
    Calibrated(CalibrationSpec),
}

impl ModelSpec {
    /// Both directions cost `value` regardless of current.
    pub fn constant(value: f64) -> Self {
        ModelSpec::ClosedForm {
            c01: CostForm::constant(value),
            c10: CostForm::constant(value),
        }
    }

    /// The same explicit cost in both directions.
    pub fn symmetric(form: CostForm) -> Self {
        ModelSpec::ClosedForm {
            c01: form.clone(),
            c10: form,
        }
    }

    /// `H = p²/2 − m`.
    pub fn quadratic() -> Self {
        ModelSpec::Congestion {
            alpha: 0.0,
            potential: Polynomial::zero(),
            coupling: PowerCoupling::linear(),
        }
    }
}

/// Numerical settings for cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCostOptions {
    pub policy: DensityPolicy,
    pub panels: usize,
    pub quad_tol: f64,
    pub max_panels: usize,
}

impl Default for EdgeCostOptions {
    fn default() -> Self {
        EdgeCostOptions {
            policy: DensityPolicy::Smallest,
            panels: 64,
            quad_tol: 1e-9,
            max_panels: 4096,
        }
    }
}

#[derive(Debug, Clone)]
enum Body {
    Closed { c01: CostForm, c10: CostForm },
    Lagrangian(LagrangianModel),
}

/// A ready-to-evaluate edge model.
#[derive(Debug, Clone)]
pub struct EdgeModel {
    spec: ModelSpec,
    body: Body,
    pub options: EdgeCostOptions,
}

/// `(m, u_x, v)` at one point of an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint {
    pub m: f64,
    pub u_x: f64,
    pub v: f64,
}

/// Positive semidefiniteness of the monotonicity matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LionsReport {
    pub holds: bool,
    /// Smallest eigenvalue.
    pub margin: f64,
    pub matrix: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityDiagnostics {
    pub v: f64,
    pub dv_dj: f64,
    pub dm_dv: f64,
}

impl EdgeModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<EdgeModel> {
        let body = match spec {
            ModelSpec::ClosedForm { c01, c10 } => {
                c01.check()?;
                c10.check()?;
                Body::Closed {
                    c01: c01.clone(),
                    c10: c10.clone(),
                }
            }
            ModelSpec::Congestion {
                alpha,
                potential,
                coupling,
            } => {
                if !(0.0..=2.0).contains(alpha) {
                    return Err(Error::InvalidModel(format!(
                        "congestion alpha must lie in [0, 2], got {alpha}"
                    )));
                }
                check_coupling(coupling)?;
                Body::Lagrangian(LagrangianModel::new(
                    *alpha,
                    Arc::new(PowerKinetic::quadratic()),
                    Arc::new(coupling.clone()),
                    potential.clone(),
                ))
            }
            ModelSpec::Separable {
                gamma,
                potential,
                coupling,
            } => {
                if !(*gamma > 1.0 && gamma.is_finite()) {
                    return Err(Error::InvalidModel(format!("gamma must exceed 1, got {gamma}")));
                }
                check_coupling(coupling)?;
                let q = gamma / (gamma - 1.0);
                Body::Lagrangian(LagrangianModel::new(
                    0.0,
                    Arc::new(PowerKinetic::new(1.0, q)?),
                    Arc::new(coupling.clone()),
                    potential.clone(),
                ))
            }
            ModelSpec::Calibrated(recipe) => Body::Lagrangian(recipe.build()?.lagrangian()),
        };
        Ok(EdgeModel {
            spec: spec.clone(),
            body,
            options: EdgeCostOptions::default(),
        })
    }

    /// Wraps an already assembled Lagrangian; `spec` is what gets serialized.
    pub fn from_lagrangian(spec: ModelSpec, model: LagrangianModel) -> EdgeModel {
        EdgeModel {
            spec,
            body: Body::Lagrangian(model),
            options: EdgeCostOptions::default(),
        }
    }

    pub fn with_options(mut self, options: EdgeCostOptions) -> Self {
        self.options = options;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn lagrangian(&self) -> Option<&LagrangianModel> {
        match &self.body {
            Body::Lagrangian(l) => Some(l),
            Body::Closed { .. } => None,
        }
    }

    fn require_lagrangian(&self) -> Result<&LagrangianModel> {
        self.lagrangian()
            .ok_or_else(|| Error::InvalidModel("operation needs a Hamiltonian edge model".into()))
    }

    /// `H(x, −p, m) = H(x, p, m)`; closed forms qualify when both directions
    /// share one even curve.
    pub fn is_even(&self) -> bool {
        match &self.body {
            Body::Closed { c01, c10 } => c01 == c10 && c01.is_even(),
            Body::Lagrangian(_) => true,
        }
    }

    pub fn is_x_independent(&self) -> bool {
        match &self.body {
            Body::Closed { .. } => true,
            Body::Lagrangian(l) => l.is_x_independent(),
        }
    }

    fn integrate<F: Fn(f64) -> Result<f64>>(&self, f: F) -> Result<f64> {
        if self.is_x_independent() {
            return f(0.5);
        }
        let o = &self.options;
        numerics::simpson_doubling(f, 0.0, 1.0, o.panels, o.quad_tol, o.max_panels)
    }

    /// Cost of crossing the edge from its 0-end to its 1-end at current `j`.
    pub fn c01(&self, j: f64) -> Result<f64> {
        match &self.body {
            Body::Closed { c01, .. } => Ok(c01.eval(j)),
            Body::Lagrangian(l) => {
                let policy = self.options.policy;
                self.integrate(|x| l.point_c01(x, j, policy))
            }
        }
    }

    /// Cost of crossing the edge from its 1-end to its 0-end at current `j`.
    pub fn c10(&self, j: f64) -> Result<f64> {
        match &self.body {
            Body::Closed { c10, .. } => Ok(c10.eval(j)),
            Body::Lagrangian(l) => {
                let policy = self.options.policy;
                self.integrate(|x| l.point_c10(x, j, policy))
            }
        }
    }

    pub fn solve_density(&self, j: f64, x: f64) -> Result<DensityPoint> {
        let l = self.require_lagrangian()?;
        let m = l.density(x, j, self.options.policy)?;
        let v = j / m;
        Ok(DensityPoint {
            m,
            u_x: -l.d_v_lagrangian(v, m),
            v,
        })
    }

    pub fn density_roots(&self, j: f64, x: f64) -> Result<Vec<f64>> {
        self.require_lagrangian()?.density_roots(x, j)
    }

    /// Pointwise `(∂c01/∂j, ∂m/∂j)` at `x` for `j > 0`.
    pub fn cost_derivative(&self, j: f64, x: f64) -> Result<(f64, f64)> {
        if !(j > 0.0) {
            return Err(Error::Precondition(format!("cost derivative needs j > 0, got {j}")));
        }
        let d = self.require_lagrangian()?.h_derivatives(x, j, self.options.policy)?;
        Ok((d.dc_dj(), d.dm_dj()))
    }

    /// `∂c01/∂j` of the integrated cost.
    pub fn cost_slope(&self, j: f64) -> Result<f64> {
        match &self.body {
            Body::Closed { c01, .. } => Ok(c01.slope(j)),
            Body::Lagrangian(_) => {
                if j > 0.0 {
                    self.integrate(|x| self.cost_derivative(j, x).map(|d| d.0))
                } else if j < 0.0 {
                    self.negative_current_monotonicity(j)
                } else {
                    Err(Error::Precondition("cost slope at j = 0".into()))
                }
            }
        }
    }

    pub fn lions_condition(&self, j: f64, x: f64) -> Result<LionsReport> {
        let d = self.require_lagrangian()?.h_derivatives(x, j, self.options.policy)?;
        let a = -2.0 / d.m * d.d_m;
        let b = d.d_pm;
        let c = 2.0 * d.d_pp;
        let margin = numerics::sym2_min_eigen(a, b, c);
        let scale = a.abs().max(b.abs()).max(c.abs());
        Ok(LionsReport {
            holds: margin >= -1e-12 * scale,
            margin,
            matrix: [[a, b], [b, c]],
        })
    }

    /// `v = j/m`, `∂v/∂j` and `∂m/∂v` along the density branch, `j > 0`.
    pub fn velocity_diagnostics(&self, j: f64, x: f64) -> Result<VelocityDiagnostics> {
        if !(j > 0.0) {
            return Err(Error::Precondition(format!("velocity diagnostics need j > 0, got {j}")));
        }
        let d = self.require_lagrangian()?.h_derivatives(x, j, self.options.policy)?;
        let dv_dj = d.dv_dj();
        Ok(VelocityDiagnostics {
            v: d.v,
            dv_dj,
            dm_dv: d.dm_dj() / dv_dj,
        })
    }

    /// `∂c01/∂j` for `j < 0` as `∫ D_mL(x, v*₊, m)·(∂m/∂j) / v*₊ dx`.
    pub fn negative_current_monotonicity(&self, j: f64) -> Result<f64> {
        if !(j < 0.0) {
            return Err(Error::Precondition(format!("needs j < 0, got {j}")));
        }
        let l = self.require_lagrangian()?;
        let policy = self.options.policy;
        self.integrate(|x| {
            let d = l.h_derivatives(x, j, policy)?;
            let vp = l.optimal_velocity(x, d.m, 1.0)?;
            Ok(l.d_m_lagrangian(vp, d.m) * d.dm_dj() / vp)
        })
    }

    /// Samples on `n + 1` equally spaced points of `[0, 1]`.
    pub fn density_profile(&self, j: f64, n: usize) -> Result<DensityProfile> {
        let n = n.max(1);
        let samples = (0..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                self.solve_density(j, x).map(|p| DensitySample {
                    x,
                    m: p.m,
                    u_x: p.u_x,
                    v: p.v,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DensityProfile { j, samples })
    }

    pub fn cost_curve(&self, grid: &[f64]) -> Result<CostCurve> {
        let points = grid
            .par_iter()
            .map(|&j| {
                let c01 = self.c01(j)?;
                let c10 = self.c10(j)?;
                let dc01_dj = self.cost_slope(j).unwrap_or(f64::NAN);
                let m_mid = match self.lagrangian() {
                    Some(_) => self.solve_density(j, 0.5).map(|p| p.m).unwrap_or(f64::NAN),
                    None => f64::NAN,
                };
                Ok(CostPoint {
                    j,
                    c01,
                    c10,
                    dc01_dj,
                    m_mid,
                    travel_time: m_mid / j.abs(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CostCurve { points })
    }
}

fn check_coupling(c: &PowerCoupling) -> Result<()> {
    if c.offset.is_finite() && c.scale.is_finite() && c.exponent.is_finite() && c.scale != 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("bad coupling {c:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> EdgeModel {
        EdgeModel::from_spec(&ModelSpec::quadratic()).unwrap()
    }

    fn law(j: f64) -> f64 {
        2f64.cbrt() * j.abs().cbrt()
    }

    #[test]
    fn velocity_diagnostics_match_finite_differences() {
        let sep = |exponent: f64| {
            EdgeModel::from_spec(&ModelSpec::Separable {
                gamma: 4.0,
                potential: Polynomial::zero(),
                coupling: PowerCoupling {
                    offset: 0.0,
                    scale: 1.0,
                    exponent,
                },
            })
            .unwrap()
        };
        for (model, jj) in [
            (quadratic(), 0.7),
            (quadratic(), 2.0),
            (sep(1.0), 1.3),
            (sep(-3.0), 0.4),
        ] {
            let d = model.velocity_diagnostics(jj, 0.5).unwrap();
            let h = 1e-5 * jj;
            let hi = model.solve_density(jj + h, 0.5).unwrap();
            let lo = model.solve_density(jj - h, 0.5).unwrap();
            let fd_v = (hi.v - lo.v) / (2.0 * h);
            let fd_mv = (hi.m - lo.m) / (hi.v - lo.v);
            assert!((d.dv_dj - fd_v).abs() < 1e-6 * fd_v.abs().max(1e-3), "{d:?} vs {fd_v}");
            assert!(
                (d.dm_dv - fd_mv).abs() < 1e-6 * fd_mv.abs().max(1e-3),
                "{d:?} vs {fd_mv}"
            );
        }
        // H = p²/2 − m: v = (2j)^(1/3) and m = v²/2, so both grow with j
        let d = quadratic().velocity_diagnostics(2.0, 0.0).unwrap();
        assert!((d.dv_dj - 2f64.powf(-1.0 / 3.0) / 3.0).abs() < 1e-10);
        assert!((d.dm_dv - d.v).abs() < 1e-10);
        // separable: ∂m/∂v = v/(D²_pp H·g′(m)) has the sign of g′
        let up = sep(1.0).velocity_diagnostics(1.3, 0.5).unwrap();
        assert!(up.dv_dj > 0.0 && up.dm_dv > 0.0, "{up:?}");
        let down = sep(-3.0).velocity_diagnostics(0.4, 0.5).unwrap();
        assert!(down.dv_dj > 0.0 && down.dm_dv < 0.0, "{down:?}");
    }

    #[test]
    fn quadratic_costs_follow_cube_root_law() {
        let e = quadratic();
        for j in [0.25, 1.0, 3.0, -1.0, -3.0] {
            assert!((e.c01(j).unwrap() - law(j)).abs() < 1e-12 * law(j));
            assert!((e.c10(j).unwrap() - law(j)).abs() < 1e-12 * law(j));
        }
        assert!((e.c10(-3.0).unwrap() - 6f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn quadratic_zero_current_cost_vanishes() {
        let e = quadratic();
        assert!(e.c01(0.0).unwrap().abs() < 1e-12);
        assert!(e.c10(0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn congestion_alpha_two_density() {
        let e = EdgeModel::from_spec(&ModelSpec::Congestion {
            alpha: 2.0,
            potential: Polynomial::zero(),
            coupling: PowerCoupling::linear(),
        })
        .unwrap();
        for j in [0.5, 1.0, 3.0] {
            let m = e.solve_density(j, 0.2).unwrap().m;
            assert!((m - j * j / 2.0).abs() < 1e-12 * m);
            let c = e.c01(j).unwrap();
            assert!((c - j.powi(3) / 2.0).abs() < 1e-10 * c);
            let (dc, _) = e.cost_derivative(j, 0.3).unwrap();
            assert!((dc - 1.5 * j * j).abs() < 1e-10 * dc);
        }
    }

    #[test]
    fn closed_form_constant() {
        let e = EdgeModel::from_spec(&ModelSpec::constant(45.0)).unwrap();
        assert_eq!(e.c10(-7.0).unwrap(), 45.0);
        assert!(e.solve_density(1.0, 0.0).is_err());
        assert!(e.is_even());
    }

    #[test]
    fn density_profile_invariants() {
        let e = EdgeModel::from_spec(&ModelSpec::Congestion {
            alpha: 1.0,
            potential: Polynomial { coeffs: vec![0.2, 0.5] },
            coupling: PowerCoupling::new(1.0, 1.0, 1.0),
        })
        .unwrap();
        let prof = e.density_profile(0.7, 8).unwrap();
        let l = e.lagrangian().unwrap();
        for s in prof.samples {
            assert!(s.m > 0.0);
            assert!((s.v - 0.7 / s.m).abs() < 1e-14);
            assert!((s.u_x + l.d_v_lagrangian(0.7 / s.m, s.m)).abs() < 1e-14);
        }
    }

    #[test]
    fn lions_quadratic_is_diagonal_psd() {
        let r = quadratic().lions_condition(1.0, 0.0).unwrap();
        assert!(r.holds);
        assert_eq!(r.matrix[0][1], 0.0);
    }

    #[test]
    fn lions_fails_for_decreasing_coupling() {
        let e = EdgeModel::from_spec(&ModelSpec::Separable {
            gamma: 2.0,
            potential: Polynomial::zero(),
            coupling: PowerCoupling::new(0.0, 1.0, -3.0),
        })
        .unwrap();
        let r = e.lions_condition(1.0, 0.0).unwrap();
        assert!(!r.holds);
        assert!(r.matrix[0][0] < 0.0);
    }

    #[test]
    fn negative_current_slope_matches_closed_form() {
        let e = quadratic();
        for j in [-0.5f64, -2.0] {
            let expect = -(2f64.cbrt()) / 3.0 * j.abs().powf(-2.0 / 3.0);
            let got = e.negative_current_monotonicity(j).unwrap();
            assert!((got - expect).abs() < 1e-10 * expect.abs());
        }
    }

    #[test]
    fn cost_curve_rows() {
        let curve = quadratic().cost_curve(&[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(curve.points.len(), 3);
        assert!(curve.loop_positive());
        for p in &curve.points {
            assert!((p.c01 - law(p.j)).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Wrap {
            m: ModelSpec,
        }
        let w = Wrap {
            m: ModelSpec::Separable {
                gamma: 4.0,
                potential: Polynomial::zero(),
                coupling: PowerCoupling::new(0.5, 2.0, 1.5),
            },
        };
        let s = toml::to_string(&w).unwrap();
        assert_eq!(toml::from_str::<Wrap>(&s).unwrap(), w);
    }
}
