use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EnumerationConfig, HalfSpace, Region, RegionSet};
use crate::bounds::{decimal, NetworkComplexity};
use crate::error::Result;
use crate::lp::max_margin;
use crate::network::{AffineMap, NetworkSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub cell_count: usize,
    pub distinct_piece_count: usize,
    pub connected_piece_count: usize,
    #[serde(with = "decimal")]
    pub compositional_upper: BigUint,
    /// Piece label of every cell, in region order.
    pub piece_labels: Vec<usize>,
}

impl CountReport {
    pub fn csv_header() -> &'static str {
        "cell_count,distinct_piece_count,connected_piece_count,compositional_upper"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.cell_count, self.distinct_piece_count, self.connected_piece_count, self.compositional_upper
        )
    }
}

/// Whether two affine maps agree up to a relative tolerance.
pub fn pieces_match(a: &AffineMap, b: &AffineMap, tol: f64) -> bool {
    let flat = |m: &AffineMap| -> Vec<f64> {
        m.matrix.iter().flatten().chain(&m.offset).copied().collect()
    };
    let (fa, fb) = (flat(a), flat(b));
    if fa.len() != fb.len() {
        return false;
    }
    let scale = fa.iter().chain(&fb).fold(1.0f64, |acc, v| acc.max(v.abs()));
    fa.iter().zip(&fb).all(|(x, y)| (x - y).abs() <= tol * scale)
}

/// Labels every region with the index of the first matching piece.
fn label_pieces(regions: &[Region], tol: f64) -> (Vec<usize>, usize) {
    let mut reps: Vec<&AffineMap> = Vec::new();
    let labels = regions
        .iter()
        .map(|r| match reps.iter().position(|p| pieces_match(p, &r.piece, tol)) {
            Some(i) => i,
            None => {
                reps.push(&r.piece);
                reps.len() - 1
            }
        })
        .collect();
    (labels, reps.len())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn normalized(h: &HalfSpace) -> (Vec<f64>, f64) {
    let n = h.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    (h.normal.iter().map(|v| v / n).collect(), h.offset / n)
}

fn same_plane(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64), sign: f64, tol: f64) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| (x - sign * y).abs() <= tol)
        && (a.1 - sign * b.1).abs() <= tol * a.1.abs().max(1.0)
}

/// Whether two cells share a facet: some constraint of one is the reverse of
/// a constraint of the other and the remaining constraints of both leave a
/// relatively open piece of that hyperplane.
fn share_facet(a: &Region, b: &Region, domain_lo: &[f64], domain_hi: &[f64], cfg: &EnumerationConfig) -> bool {
    let tol = 1e-9;
    let na: Vec<_> = a.constraints.iter().map(normalized).collect();
    let nb: Vec<_> = b.constraints.iter().map(normalized).collect();
    for ca in &na {
        if !nb.iter().any(|cb| same_plane(ca, cb, -1.0, tol)) {
            continue;
        }
        let rest: Vec<&(Vec<f64>, f64)> = na
            .iter()
            .chain(&nb)
            .filter(|c| !same_plane(ca, c, 1.0, tol) && !same_plane(ca, c, -1.0, tol))
            .collect();
        if facet_interior(ca, &rest, domain_lo, domain_hi, cfg) {
            return true;
        }
    }
    false
}

/// Relative-interior test on the hyperplane `plane`, done by eliminating its
/// dominant coordinate.
fn facet_interior(
    plane: &(Vec<f64>, f64),
    rest: &[&(Vec<f64>, f64)],
    lo: &[f64],
    hi: &[f64],
    cfg: &EnumerationConfig,
) -> bool {
    let d = plane.0.len();
    let k = (0..d)
        .max_by(|&i, &j| plane.0[i].abs().total_cmp(&plane.0[j].abs()))
        .unwrap();
    let pk = plane.0[k];
    // x_k = -(offset + Σ_{j≠k} n_j x_j) / n_k
    let sub = |normal: &[f64], offset: f64| -> (Vec<f64>, f64) {
        let f = normal[k] / pk;
        let reduced = (0..d)
            .filter(|&j| j != k)
            .map(|j| normal[j] - f * plane.0[j])
            .collect();
        (reduced, offset - f * plane.1)
    };
    let mut cons: Vec<(Vec<f64>, f64)> = rest.iter().map(|c| sub(&c.0, c.1)).collect();
    let mut e_k = vec![0.0; d];
    e_k[k] = 1.0;
    cons.push(sub(&e_k, -lo[k]));
    e_k[k] = -1.0;
    cons.push(sub(&e_k, hi[k]));
    let lo_r: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| lo[j]).collect();
    let hi_r: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| hi[j]).collect();
    if d == 1 {
        return cons.iter().all(|(_, o)| *o > cfg.interior_eps);
    }
    match max_margin(&cons, &lo_r, &hi_r) {
        Ok(sol) => sol.margin > cfg.interior_eps,
        Err(_) => false,
    }
}

/// Cell, distinct-piece and connected-piece counts of an enumerated region
/// set, with the compositional upper bound of the network attached.
pub fn count_report(rs: &RegionSet, net: &NetworkSpec, cfg: &EnumerationConfig) -> Result<CountReport> {
    let (labels, distinct) = label_pieces(&rs.regions, cfg.piece_tol);
    let (lo, hi) = rs.domain.bounds(rs.input_dim)?;
    let n = rs.regions.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| labels[i] == labels[j])
        .collect();
    let adjacent: Vec<(usize, usize)> = pairs
        .par_iter()
        .copied()
        .filter(|&(i, j)| share_facet(&rs.regions[i], &rs.regions[j], &lo, &hi, cfg))
        .collect();
    let mut uf = UnionFind((0..n).collect());
    for (i, j) in adjacent {
        uf.union(i, j);
    }
    let connected = (0..n).filter(|&i| uf.find(i) == i).count();
    let upper = NetworkComplexity::of(net)?.upper_bound().value;
    Ok(CountReport {
        cell_count: n,
        distinct_piece_count: distinct,
        connected_piece_count: connected,
        compositional_upper: upper,
        piece_labels: labels,
    })
}
