//! Convex cells of a CPWL network: enumeration by recursive polyhedral
//! subdivision, piece statistics and SVG rendering.

mod enumerate;
mod report;
mod svg;

use serde::{Deserialize, Serialize};

use crate::error::{CpwlError, Result};
use crate::lp::max_margin;
use crate::network::AffineMap;
use crate::scalar::Scalar;

pub use enumerate::enumerate_regions;
pub use report::{count_report, pieces_match, CountReport};
pub use svg::{clip_polygon, cell_polygon, render_svg, SvgStyle};

/// `{x : normal·x + offset ≥ 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        HalfSpace { normal, offset }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }

    /// Signed distance to the boundary.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let n = self.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.eval(x) / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// All of `R^d`, searched inside the box `|x_j| ≤ r_max`.
    Unbounded { r_max: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Default for Domain {
    fn default() -> Self {
        Domain::Unbounded { r_max: 1e6 }
    }
}

impl Domain {
    pub fn square(lo: f64, hi: f64, dim: usize) -> Self {
        Domain::Box {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn bounds(&self, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Domain::Unbounded { r_max } => {
                if !(*r_max > 0.0 && r_max.is_finite()) {
                    return Err(CpwlError::InvalidParameter("r_max must be positive".into()));
                }
                Ok((vec![-r_max; dim], vec![*r_max; dim]))
            }
            Domain::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(CpwlError::InvalidParameter(format!(
                        "box must have {dim} coordinates"
                    )));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(CpwlError::InvalidParameter("box has empty interior".into()));
                }
                Ok((lo.clone(), hi.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Float,
    /// Big-rational arithmetic; inputs are read as exact binary fractions.
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnumerationConfig {
    /// Minimum inscribed-ball radius for a cell to count as full-dimensional.
    pub interior_eps: f64,
    /// Relative tolerance for identifying affine pieces.
    pub piece_tol: f64,
    pub cell_budget: usize,
    pub max_input_dim: usize,
    pub arithmetic: Arithmetic,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig {
            interior_eps: 1e-7,
            piece_tol: 1e-9,
            cell_budget: 1_000_000,
            max_input_dim: 8,
            arithmetic: Arithmetic::Float,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub constraints: Vec<HalfSpace>,
    pub piece: AffineMap,
    pub witness: Vec<f64>,
    /// Radius of the largest inscribed ball found for the witness.
    pub margin: f64,
}

impl Region {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|h| h.distance(x) >= -tol)
    }

    pub fn eval_piece(&self, x: &[f64]) -> Vec<f64> {
        self.piece.apply(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub input_dim: usize,
    pub domain: Domain,
    pub regions: Vec<Region>,
}

impl RegionSet {
    pub fn cell_count(&self) -> usize {
        self.regions.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessStatus {
    Interior,
    Degenerate,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub status: WitnessStatus,
    pub margin: f64,
    pub point: Option<Vec<f64>>,
}

/// Interior point of the polyhedron cut out by `constraints` inside the
/// domain, found as the center of the largest inscribed ball.
pub fn interior_witness(
    dim: usize,
    constraints: &[HalfSpace],
    domain: &Domain,
    cfg: &EnumerationConfig,
) -> Result<Witness> {
    if let Some(h) = constraints.iter().find(|h| h.normal.len() != dim) {
        return Err(CpwlError::InvalidParameter(format!(
            "constraint of dimension {} in dimension {dim}",
            h.normal.len()
        )));
    }
    let (lo, hi) = domain.bounds(dim)?;
    let cons: Vec<(Vec<f64>, f64)> = constraints
        .iter()
        .map(|h| (h.normal.clone(), h.offset))
        .collect();
    let sol = max_margin(&cons, &lo, &hi)?;
    let status = if sol.margin > cfg.interior_eps {
        WitnessStatus::Interior
    } else if sol.margin >= 0.0 {
        WitnessStatus::Degenerate
    } else {
        WitnessStatus::Empty
    };
    Ok(Witness {
        status,
        margin: sol.margin,
        point: (status == WitnessStatus::Interior).then_some(sol.point),
    })
}

/// Largest-ball witness in an arbitrary scalar type; `None` unless the
/// margin exceeds `eps`.
pub(crate) fn witness_in<S: Scalar>(
    constraints: &[(Vec<S>, S)],
    lo: &[S],
    hi: &[S],
    eps: &S,
) -> Result<Option<(Vec<S>, S)>> {
    let sol = max_margin(constraints, lo, hi)?;
    Ok((sol.margin > *eps).then_some((sol.point, sol.margin)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_center() {
        let cons = [HalfSpace::new(vec![1.0], 0.0), HalfSpace::new(vec![-1.0], 1.0)];
        let w = interior_witness(1, &cons, &Domain::default(), &Default::default()).unwrap();
        assert_eq!(w.status, WitnessStatus::Interior);
        assert!((w.margin - 0.5).abs() < 1e-9);
        assert!((w.point.unwrap()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn point_set_has_no_interior() {
        let cons = [HalfSpace::new(vec![1.0], 0.0), HalfSpace::new(vec![-1.0], 0.0)];
        let w = interior_witness(1, &cons, &Domain::default(), &Default::default()).unwrap();
        assert_eq!(w.status, WitnessStatus::Degenerate);
        assert!(w.point.is_none());
    }

    #[test]
    fn empty_list_is_capped_by_the_box() {
        let w = interior_witness(2, &[], &Domain::default(), &Default::default()).unwrap();
        assert_eq!(w.status, WitnessStatus::Interior);
        assert!((w.margin - 1e6).abs() < 1e-3);
    }
}
