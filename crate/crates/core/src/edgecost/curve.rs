use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// One sample of a density profile along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensitySample {
    pub x: f64,
    pub m: f64,
    pub u_x: f64,
    pub v: f64,
}

/// Density, value gradient and velocity along an edge at a fixed current.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub j: f64,
    pub samples: Vec<DensitySample>,
}

/// One row of a tabulated cost curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostPoint {
    pub j: f64,
    pub c01: f64,
    pub c10: f64,
    pub dc01_dj: f64,
    pub m_mid: f64,
    /// `m_mid/|j|`, the time to cross the edge.
    pub travel_time: f64,
}

/// Edge costs on a current grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostCurve {
    pub points: Vec<CostPoint>,
}

impl CostCurve {
    /// `c01 + c10 > 0` wherever both are finite.
    pub fn loop_positive(&self) -> bool {
        self.points
            .iter()
            .filter(|p| p.c01.is_finite() && p.c10.is_finite())
            .all(|p| p.c01 + p.c10 > 0.0)
    }

    /// CSV with columns `j,c01,c10,dc01_dj,m_mid,travel_time`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_fixed_columns() {
        let curve = CostCurve {
            points: vec![CostPoint {
                j: 1.0,
                c01: 2.0,
                c10: 2.0,
                dc01_dj: 0.5,
                m_mid: f64::NAN,
                travel_time: f64::NAN,
            }],
        };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("j,c01,c10,dc01_dj,m_mid,travel_time"));
        assert_eq!(text.lines().nth(1), Some("1.0,2.0,2.0,0.5,NaN,NaN"));
    }
}
