//! Edge Lagrangians `L(x, v, m) = m^α·𝓛(v) + g(m) − V(x)` and the pointwise
//! machinery of the current method.

use std::fmt::Debug;
use std::sync::Arc;

use crate::edgecost::forms::{Polynomial, PowerCoupling};
use crate::error::{Error, Result};
use crate::numerics;

/// Even, convex velocity cost `𝓛(v)` with `𝓛(0) = 0`.
pub trait Kinetic: Send + Sync + Debug {
    fn value(&self, v: f64) -> f64;
    fn slope(&self, v: f64) -> f64;
    fn curvature(&self, v: f64) -> f64;

    /// Supremum of admissible speeds; `𝓛` is infinite beyond it.
    fn speed_limit(&self) -> f64 {
        f64::INFINITY
    }

    /// Velocity `v` with `𝓛'(v) = −p`, i.e. `−𝓗'(p)`.
    fn conjugate_velocity(&self, p: f64) -> f64;

    /// `𝓗(p) = sup_v (−p·v − 𝓛(v))`.
    fn conjugate(&self, p: f64) -> f64 {
        let v = self.conjugate_velocity(p);
        -p * v - self.value(v)
    }
}

/// `|−𝓛'(−𝓗'(p)) − p|`, zero for an exact Legendre pair.
pub fn legendre_defect(kinetic: &dyn Kinetic, p: f64) -> f64 {
    (-kinetic.slope(kinetic.conjugate_velocity(p)) - p).abs()
}

/// Density coupling `g(m)` with its derivative.
pub trait Coupling: Send + Sync + Debug {
    fn value(&self, m: f64) -> f64;
    fn slope(&self, m: f64) -> f64;
}

impl Coupling for PowerCoupling {
    fn value(&self, m: f64) -> f64 {
        self.offset + self.scale * m.powf(self.exponent)
    }

    fn slope(&self, m: f64) -> f64 {
        if self.exponent == 0.0 {
            0.0
        } else {
            self.scale * self.exponent * m.powf(self.exponent - 1.0)
        }
    }
}

/// `𝓛(v) = s·|v|^q / q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerKinetic {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerKinetic {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "power kinetic needs scale > 0 and exponent > 1 (got {scale}, {exponent})"
            )));
        }
        Ok(PowerKinetic { scale, exponent })
    }

    pub fn quadratic() -> Self {
        PowerKinetic {
            scale: 1.0,
            exponent: 2.0,
        }
    }

    /// Conjugate exponent `q' = q/(q−1)`.
    pub fn dual_exponent(&self) -> f64 {
        self.exponent / (self.exponent - 1.0)
    }
}

impl Kinetic for PowerKinetic {
    fn value(&self, v: f64) -> f64 {
        self.scale * v.abs().powf(self.exponent) / self.exponent
    }

    fn slope(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        self.scale * v.abs().powf(self.exponent - 1.0) * v.signum()
    }

    fn curvature(&self, v: f64) -> f64 {
        if self.exponent == 2.0 {
            return self.scale;
        }
        self.scale * (self.exponent - 1.0) * v.abs().powf(self.exponent - 2.0)
    }

    fn conjugate_velocity(&self, p: f64) -> f64 {
        -p.signum() * (p.abs() / self.scale).powf(1.0 / (self.exponent - 1.0))
    }

    fn conjugate(&self, p: f64) -> f64 {
        let qd = self.dual_exponent();
        self.scale.powf(-1.0 / (self.exponent - 1.0)) * p.abs().powf(qd) / qd
    }
}

/// How to pick among several positive density roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityPolicy {
    #[default]
    Smallest,
    Largest,
    RequireUnique,
}

/// Derivatives of `H` at `(x, p, m)` with `p = −D_vL(x, v, m)` and `v = j/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HDerivatives {
    pub m: f64,
    pub v: f64,
    pub d_p: f64,
    pub d_pp: f64,
    pub d_m: f64,
    pub d_pm: f64,
    /// `(D_pH)² + m·D_pH·D_pmH − m·D_mH·D_ppH`.
    pub denominator: f64,
}

impl HDerivatives {
    pub fn dm_dj(&self) -> f64 {
        self.v / self.denominator
    }

    pub fn dc_dj(&self) -> f64 {
        -self.d_m / self.denominator
    }

    pub fn dv_dj(&self) -> f64 {
        -(self.v * self.d_pm + self.d_pp * self.d_m) / self.denominator
    }
}

/// The unified Lagrangian edge family.
#[derive(Debug, Clone)]
pub struct LagrangianModel {
    pub alpha: f64,
    pub kinetic: Arc<dyn Kinetic>,
    pub coupling: Arc<dyn Coupling>,
    pub potential: Polynomial,
}

const ZERO_LIMIT_STEPS: [f64; 3] = [1e-3, 1e-6, 1e-9];

impl LagrangianModel {
    pub fn new(alpha: f64, kinetic: Arc<dyn Kinetic>, coupling: Arc<dyn Coupling>, potential: Polynomial) -> Self {
        LagrangianModel {
            alpha,
            kinetic,
            coupling,
            potential,
        }
    }

    pub fn is_x_independent(&self) -> bool {
        self.potential.is_constant()
    }

    fn m_alpha(&self, m: f64) -> f64 {
        if self.alpha == 0.0 {
            1.0
        } else {
            m.powf(self.alpha)
        }
    }

    pub fn lagrangian(&self, x: f64, v: f64, m: f64) -> f64 {
        self.m_alpha(m) * self.kinetic.value(v) + self.coupling.value(m) - self.potential.eval(x)
    }

    pub fn d_v_lagrangian(&self, v: f64, m: f64) -> f64 {
        self.m_alpha(m) * self.kinetic.slope(v)
    }

    pub fn d_m_lagrangian(&self, v: f64, m: f64) -> f64 {
        let ka = if self.alpha == 0.0 {
            0.0
        } else {
            self.alpha * m.powf(self.alpha - 1.0) * self.kinetic.value(v)
        };
        ka + self.coupling.slope(m)
    }

    pub fn hamiltonian(&self, x: f64, p: f64, m: f64) -> f64 {
        let ma = self.m_alpha(m);
        ma * self.kinetic.conjugate(p / ma) - self.coupling.value(m) + self.potential.eval(x)
    }

    pub fn d_p_hamiltonian(&self, p: f64, m: f64) -> f64 {
        -self.kinetic.conjugate_velocity(p / self.m_alpha(m))
    }

    /// `H(x, −D_vL(x, v, m), m)`, which the density solves as zero with `v = |j|/m`.
    pub fn energy(&self, x: f64, v: f64, m: f64) -> f64 {
        let k = &self.kinetic;
        self.m_alpha(m) * (v * k.slope(v) - k.value(v)) - self.coupling.value(m) + self.potential.eval(x)
    }

    /// `L(x, 0, m)`.
    pub fn rest_value(&self, x: f64, m: f64) -> f64 {
        self.lagrangian(x, 0.0, m)
    }

    fn density_residual(&self, x: f64, j: f64, m: f64) -> f64 {
        let v = j.abs() / m;
        if v >= self.kinetic.speed_limit() {
            return f64::NAN;
        }
        self.energy(x, v, m)
    }

    /// All positive roots of the density equation at `(x, j)`.
    pub fn density_roots(&self, x: f64, j: f64) -> Result<Vec<f64>> {
        let m0 = j.abs().max(1e-6);
        let vmax = self.kinetic.speed_limit();
        let floor = if vmax.is_finite() {
            j.abs() / vmax * (1.0 + 1e-12)
        } else {
            0.0
        };
        let f = |m: f64| self.density_residual(x, j, m);
        let lo = (m0 * 1e-10).max(floor);
        let hi = m0 * 1e10;
        let mut roots = numerics::positive_roots(f, lo, hi, 1.6, 1e-15)?;
        if roots.is_empty() {
            let lo2 = (m0 * 1e-100).max(floor);
            if lo2 < lo {
                roots.extend(numerics::positive_roots(f, lo2, lo, 4.0, 1e-15)?);
            }
            roots.extend(numerics::positive_roots(f, hi, m0 * 1e100, 4.0, 1e-15)?);
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        Ok(roots)
    }

    pub fn density(&self, x: f64, j: f64, policy: DensityPolicy) -> Result<f64> {
        let roots = self.density_roots(x, j)?;
        match (roots.len(), policy) {
            (0, _) => Err(Error::NoPositiveDensity { j, x }),
            (1, _) => Ok(roots[0]),
            (_, DensityPolicy::RequireUnique) => Err(Error::AmbiguousDensity { j, x, roots }),
            (_, DensityPolicy::Smallest) => {
                log::debug!("density roots at j={j}, x={x}: {roots:?}; taking the smallest");
                Ok(roots[0])
            }
            (_, DensityPolicy::Largest) => Ok(roots[roots.len() - 1]),
        }
    }

    /// Optimal velocity with the given sign from the Euler-Lagrange condition
    /// `v·D_vL = L`, for a density with `L(x, 0, m) > 0`.
    pub fn optimal_velocity(&self, x: f64, m: f64, sign: f64) -> Result<f64> {
        let rest = self.rest_value(x, m);
        if !(rest > 0.0) {
            return Err(Error::CostUndefined { x, rest_value: rest });
        }
        let vmax = self.kinetic.speed_limit();
        let e = |s: f64| self.energy(x, s, m);
        let mut hi = if vmax.is_finite() { 0.5 * vmax } else { 1.0 };
        let mut k = 0;
        while !(e(hi) > 0.0) {
            k += 1;
            if k > 2000 {
                return Err(Error::RootFinding(format!(
                    "no Euler-Lagrange velocity at x={x}, m={m}"
                )));
            }
            hi = if vmax.is_finite() {
                vmax - 0.5 * (vmax - hi)
            } else {
                hi * 2.0
            };
        }
        let s = numerics::brent_with(e, 0.0, hi, -rest, e(hi), 1e-16 * hi)?;
        Ok(sign.signum() * s)
    }

    fn zero_limit<F: Fn(f64) -> Result<f64>>(f: F) -> Result<f64> {
        let s: Vec<f64> = ZERO_LIMIT_STEPS.iter().map(|&h| f(h)).collect::<Result<_>>()?;
        Ok(numerics::aitken(s[0], s[1], s[2]).max(0.0))
    }

    /// Integrand of `c01` at `x`.
    pub fn point_c01(&self, x: f64, j: f64, policy: DensityPolicy) -> Result<f64> {
        if j > 0.0 {
            let m = self.density(x, j, policy)?;
            return Ok(self.d_v_lagrangian(j / m, m));
        }
        if j < 0.0 {
            let m = self.density(x, j, policy)?;
            let v = self.optimal_velocity(x, m, 1.0)?;
            return Ok(self.d_v_lagrangian(v, m));
        }
        match self.density(x, 0.0, policy) {
            Ok(m) => self.rest_cost(x, m, 1.0),
            Err(Error::NoPositiveDensity { .. }) => Self::zero_limit(|h| self.point_c01(x, h, policy)),
            Err(e) => Err(e),
        }
    }

    /// Integrand of `c10` at `x`.
    pub fn point_c10(&self, x: f64, j: f64, policy: DensityPolicy) -> Result<f64> {
        if j < 0.0 {
            let m = self.density(x, j, policy)?;
            return Ok(-self.d_v_lagrangian(j / m, m));
        }
        if j > 0.0 {
            let m = self.density(x, j, policy)?;
            let v = self.optimal_velocity(x, m, -1.0)?;
            return Ok(-self.d_v_lagrangian(v, m));
        }
        match self.density(x, 0.0, policy) {
            Ok(m) => self.rest_cost(x, m, -1.0),
            Err(Error::NoPositiveDensity { .. }) => Self::zero_limit(|h| self.point_c10(x, -h, policy)),
            Err(e) => Err(e),
        }
    }

    /// Cost at zero current when the density equation has a positive root.
    fn rest_cost(&self, x: f64, m: f64, sign: f64) -> Result<f64> {
        let rest = self.rest_value(x, m);
        let scale = self.coupling.value(m).abs() + self.potential.eval(x).abs();
        if rest > 1e-12 * scale {
            let v = self.optimal_velocity(x, m, sign)?;
            return Ok(sign * self.d_v_lagrangian(v, m));
        }
        if rest < -1e-12 * scale {
            return Err(Error::CostUndefined { x, rest_value: rest });
        }
        Ok(sign * self.d_v_lagrangian(0.0, m))
    }

    /// Derivatives of `H` along the density branch at `(x, j)`, `j ≠ 0`.
    pub fn h_derivatives(&self, x: f64, j: f64, policy: DensityPolicy) -> Result<HDerivatives> {
        if j == 0.0 {
            return Err(Error::Precondition("derivatives need j ≠ 0".into()));
        }
        let m = self.density(x, j, policy)?;
        let v = j / m;
        let k = &self.kinetic;
        let ma = self.m_alpha(m);
        let kpp = k.curvature(v);
        let d_p = -v;
        let d_pp = 1.0 / (ma * kpp);
        let d_m = -self.d_m_lagrangian(v, m);
        let d_pm = self.alpha * k.slope(v) / (m * kpp);
        let denominator = d_p * d_p + m * d_p * d_pm - m * d_m * d_pp;
        let scale = v * v + (m * d_m * d_pp).abs();
        if !denominator.is_finite() || denominator.abs() <= 1e-12 * scale {
            return Err(Error::SingularSensitivity { j, x, denominator });
        }
        Ok(HDerivatives {
            m,
            v,
            d_p,
            d_pp,
            d_m,
            d_pm,
            denominator,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> LagrangianModel {
        LagrangianModel::new(
            0.0,
            Arc::new(PowerKinetic::quadratic()),
            Arc::new(PowerCoupling::linear()),
            Polynomial::zero(),
        )
    }

    #[test]
    fn power_kinetic_conjugate_is_legendre() {
        let k = PowerKinetic::new(2.0, 3.0).unwrap();
        for p in [-2.0, -0.3, 0.7, 4.0] {
            let v = k.conjugate_velocity(p);
            assert!((k.slope(v) + p).abs() < 1e-12);
            let h = -p * v - k.value(v);
            assert!((h - k.conjugate(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_density_matches_closed_form() {
        let m = quadratic().density(0.3, 2.0, DensityPolicy::Smallest).unwrap();
        assert!((m - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn euler_lagrange_velocity_matches_forward_branch() {
        let q = quadratic();
        let m = q.density(0.0, 1.5, DensityPolicy::Smallest).unwrap();
        let v = q.optimal_velocity(0.0, m, 1.0).unwrap();
        assert!((v - 1.5 / m).abs() < 1e-12);
        let vm = q.optimal_velocity(0.0, m, -1.0).unwrap();
        assert!((vm + v).abs() < 1e-15);
    }

    #[test]
    fn quadratic_denominator_is_three_m() {
        let d = quadratic().h_derivatives(0.0, 1.0, DensityPolicy::Smallest).unwrap();
        assert!((d.denominator - 3.0 * d.m).abs() < 1e-12);
        assert!((d.dc_dj() - 1.0 / (3.0 * d.m)).abs() < 1e-12);
    }

    #[test]
    fn rest_value_negative_is_cost_undefined() {
        let model = LagrangianModel::new(
            0.0,
            Arc::new(PowerKinetic::quadratic()),
            Arc::new(PowerCoupling::new(-5.0, 1.0, 1.0)),
            Polynomial::zero(),
        );
        let err = model.optimal_velocity(0.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::CostUndefined { .. }));
    }
}
