//! Closed-form cost curves, power couplings and polynomial potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An explicit cost curve `j ↦ c(j)`.
///
/// `Affine` and `Power` act on `|j|`. A `Tabulated` curve is interpolated
/// linearly and extrapolated with its end slopes; when every abscissa is
/// nonnegative it is read as a function of `|j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CostForm {
    Constant { value: f64 },
    Affine { a: f64, b: f64 },
    Power { a: f64, b: f64, p: f64 },
    Tabulated { points: Vec<(f64, f64)> },
}

impl CostForm {
    pub fn constant(value: f64) -> Self {
        CostForm::Constant { value }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        CostForm::Affine { a, b }
    }

    pub fn check(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{what} must be finite")))
            }
        };
        match self {
            CostForm::Constant { value } => finite(*value, "constant cost"),
            CostForm::Affine { a, b } => finite(*a, "a").and(finite(*b, "b")),
            CostForm::Power { a, b, p } => {
                finite(*a, "a")?;
                finite(*b, "b")?;
                if !(p.is_finite() && *p > 0.0) {
                    return Err(Error::InvalidModel("power exponent must be positive".into()));
                }
                Ok(())
            }
            CostForm::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidModel("tabulated cost needs two points".into()));
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidModel("tabulated abscissae must increase strictly".into()));
                    }
                }
                for (j, c) in points {
                    finite(*j, "tabulated current")?;
                    finite(*c, "tabulated cost")?;
                }
                Ok(())
            }
        }
    }

    fn folded(&self) -> bool {
        matches!(self, CostForm::Tabulated { points } if points[0].0 >= 0.0)
    }

    pub fn eval(&self, j: f64) -> f64 {
        match self {
            CostForm::Constant { value } => *value,
            CostForm::Affine { a, b } => a + b * j.abs(),
            CostForm::Power { a, b, p } => a + b * j.abs().powf(*p),
            CostForm::Tabulated { points } => {
                let s = if self.folded() { j.abs() } else { j };
                let (i, k) = segment(points, s);
                let (j0, c0) = points[i];
                let (j1, c1) = points[k];
                c0 + (c1 - c0) * (s - j0) / (j1 - j0)
            }
        }
    }

    /// Derivative in `j`; one-sided (from the right) at kinks.
    pub fn slope(&self, j: f64) -> f64 {
        let sign = if j < 0.0 { -1.0 } else { 1.0 };
        match self {
            CostForm::Constant { .. } => 0.0,
            CostForm::Affine { b, .. } => b * sign,
            CostForm::Power { b, p, .. } => {
                if j == 0.0 {
                    if *p > 1.0 {
                        0.0
                    } else if *p == 1.0 {
                        *b
                    } else {
                        f64::INFINITY * b.signum()
                    }
                } else {
                    sign * b * p * j.abs().powf(p - 1.0)
                }
            }
            CostForm::Tabulated { points } => {
                let folded = self.folded();
                let s = if folded { j.abs() } else { j };
                let (i, k) = segment(points, s);
                let d = (points[k].1 - points[i].1) / (points[k].0 - points[i].0);
                if folded {
                    d * sign
                } else {
                    d
                }
            }
        }
    }

    /// True if the curve does not depend on the sign of `j`.
    pub fn is_even(&self) -> bool {
        match self {
            CostForm::Tabulated { points } => {
                if self.folded() {
                    return true;
                }
                points
                    .iter()
                    .all(|&(j, c)| (self.eval(-j) - c).abs() <= 1e-12 * (1.0 + c.abs()))
            }
            _ => true,
        }
    }

    /// Strictly increasing on `j > 0`.
    pub fn is_increasing(&self) -> bool {
        match self {
            CostForm::Constant { .. } => false,
            CostForm::Affine { b, .. } => *b > 0.0,
            CostForm::Power { b, p, .. } => *b > 0.0 && *p > 0.0,
            CostForm::Tabulated { points } => {
                let pos: Vec<_> = points.iter().filter(|p| p.0 >= 0.0).collect();
                let last = points[points.len() - 1].0;
                pos.windows(2).all(|w| w[1].1 > w[0].1) && self.slope(last + 1.0) > 0.0
            }
        }
    }

    /// True if `c(j) → ∞` as `j → ∞`.
    pub fn is_unbounded(&self) -> bool {
        self.is_increasing()
    }

    /// Smallest `j ≥ 0` with `c(j) = y`, for increasing curves.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let c0 = self.eval(0.0);
        if y < c0 {
            return None;
        }
        match self {
            CostForm::Constant { .. } => None,
            CostForm::Affine { a, b } => (*b > 0.0).then(|| (y - a) / b),
            CostForm::Power { a, b, p } => (*b > 0.0).then(|| ((y - a) / b).powf(1.0 / p)),
            CostForm::Tabulated { .. } => {
                if !self.is_increasing() {
                    return None;
                }
                let mut hi = 1.0;
                while self.eval(hi) < y {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return None;
                    }
                }
                Some(crate::numerics::bisect(|s| self.eval(s) - y, 0.0, hi, 200))
            }
        }
    }
}

fn segment(points: &[(f64, f64)], s: f64) -> (usize, usize) {
    let n = points.len();
    let k = points.partition_point(|p| p.0 <= s).clamp(1, n - 1);
    (k - 1, k)
}

/// Coupling `g(m) = offset + scale·m^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCoupling {
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "one")]
    pub exponent: f64,
}

fn one() -> f64 {
    1.0
}

impl PowerCoupling {
    pub fn new(offset: f64, scale: f64, exponent: f64) -> Self {
        PowerCoupling {
            offset,
            scale,
            exponent,
        }
    }

    /// `g(m) = m`.
    pub fn linear() -> Self {
        PowerCoupling::new(0.0, 1.0, 1.0)
    }
}

impl Default for PowerCoupling {
    fn default() -> Self {
        PowerCoupling::linear()
    }
}

/// Potential `V(x) = Σ coeffs[i]·x^i` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    #[serde(default)]
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| *c == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_is_even_and_invertible() {
        let c = CostForm::affine(1.0, 2.0);
        assert_eq!(c.eval(-3.0), 7.0);
        assert_eq!(c.inverse(7.0), Some(3.0));
        assert_eq!(c.slope(-1.0), -2.0);
        assert!(c.is_even() && c.is_increasing());
    }

    #[test]
    fn tabulated_interpolates_and_folds() {
        let c = CostForm::Tabulated {
            points: vec![(0.0, 1.0), (1.0, 2.0), (3.0, 6.0)],
        };
        c.check().unwrap();
        assert_eq!(c.eval(0.5), 1.5);
        assert_eq!(c.eval(-2.0), 4.0);
        assert_eq!(c.eval(4.0), 8.0);
        assert!(c.is_increasing());
        assert!((c.inverse(4.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_unsorted() {
        let c = CostForm::Tabulated {
            points: vec![(1.0, 1.0), (0.0, 2.0)],
        };
        assert!(c.check().is_err());
    }

    #[test]
    fn polynomial_horner() {
        let p = Polynomial {
            coeffs: vec![1.0, 0.0, 2.0],
        };
        assert_eq!(p.eval(0.5), 1.5);
        assert!(!p.is_constant());
        assert!(Polynomial::zero().is_constant());
    }
}
