//! Brute-force cross-checks: pieces fingerprinted on a sample grid.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CpwlError, Result};
use crate::geometry::{interior_witness, Domain, EnumerationConfig, RegionSet, WitnessStatus};
use crate::network::{CompiledNetwork, NetworkSpec};
use crate::paths::PolygonalPath;

const ROUNDING: f64 = 1e-6;

/// Hash of the local piece rounded at `1e-6` relative to its largest entry.
pub fn fingerprint(net: &CompiledNetwork<f64>, x: &[f64]) -> u64 {
    let zero = vec![0.0; x.len()];
    let piece = net.local_piece(x, &zero);
    let values: Vec<f64> = piece.matrix.iter().flatten().chain(&piece.offset).copied().collect();
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut hasher = DefaultHasher::new();
    for v in values {
        ((v / scale / ROUNDING).round() as i64).hash(&mut hasher);
    }
    hasher.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCount {
    pub distinct: usize,
    pub components: usize,
}

/// Fingerprints at the centers of a `resolution`-cell grid over the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFingerprint {
    pub resolution: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Row-major; one row for a 1D box.
    pub cells: Vec<u64>,
}

impl GridFingerprint {
    pub fn compute(net: &NetworkSpec, lo: &[f64], hi: &[f64], resolution: usize) -> Result<Self> {
        if resolution < 8 {
            return Err(CpwlError::InvalidParameter("grid resolution must be at least 8".into()));
        }
        let d = net.input_dim;
        if !(d == 1 || d == 2) || lo.len() != d || hi.len() != d {
            return Err(CpwlError::Unsupported("grid oracle needs a 1D or 2D input and a matching box".into()));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(CpwlError::InvalidParameter("box has empty interior".into()));
        }
        let compiled = net.compile::<f64>()?;
        let center = |k: usize, j: usize| lo[k] + (j as f64 + 0.5) * (hi[k] - lo[k]) / resolution as f64;
        let cells = if d == 1 {
            (0..resolution)
                .into_par_iter()
                .map(|i| fingerprint(&compiled, &[center(0, i)]))
                .collect()
        } else {
            let rows: Vec<Vec<u64>> = (0..resolution)
                .into_par_iter()
                .map(|r| {
                    (0..resolution)
                        .map(|c| fingerprint(&compiled, &[center(0, c), center(1, r)]))
                        .collect()
                })
                .collect();
            rows.concat()
        };
        Ok(GridFingerprint {
            resolution,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            cells,
        })
    }

    pub fn count(&self) -> GridCount {
        let distinct = self.cells.iter().collect::<HashSet<_>>().len();
        let n = self.resolution;
        let components = if self.lo.len() == 1 {
            1 + self.cells.windows(2).filter(|w| w[0] != w[1]).count()
        } else {
            let mut seen = vec![false; self.cells.len()];
            let mut count = 0;
            let mut stack = Vec::new();
            for start in 0..self.cells.len() {
                if seen[start] {
                    continue;
                }
                count += 1;
                seen[start] = true;
                stack.push(start);
                while let Some(i) = stack.pop() {
                    let (r, c) = (i / n, i % n);
                    let mut nbrs = Vec::with_capacity(4);
                    if r > 0 {
                        nbrs.push(i - n);
                    }
                    if r + 1 < n {
                        nbrs.push(i + n);
                    }
                    if c > 0 {
                        nbrs.push(i - 1);
                    }
                    if c + 1 < n {
                        nbrs.push(i + 1);
                    }
                    for j in nbrs {
                        if !seen[j] && self.cells[j] == self.cells[i] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            count
        };
        GridCount { distinct, components }
    }
}

/// Distinct fingerprints and 4-connected equal-fingerprint components. The
/// distinct count never exceeds the exact one; components can overcount,
/// since narrow wedge tips sample as staircase islands.
pub fn grid_region_count(net: &NetworkSpec, lo: &[f64], hi: &[f64], resolution: usize) -> Result<GridCount> {
    Ok(GridFingerprint::compute(net, lo, hi, resolution)?.count())
}

/// Fingerprint changes between consecutive samples along a segment.
pub fn grid_knot_count(net: &NetworkSpec, segment: &PolygonalPath, resolution: usize) -> Result<usize> {
    if resolution < 8 {
        return Err(CpwlError::InvalidParameter("grid resolution must be at least 8".into()));
    }
    if segment.dim() != net.input_dim {
        return Err(CpwlError::DimensionMismatch {
            layer: 0,
            expected: net.input_dim,
            got: segment.dim(),
        });
    }
    let compiled = net.compile::<f64>()?;
    let len = segment.length();
    let prints: Vec<u64> = (0..resolution)
        .into_par_iter()
        .map(|i| fingerprint(&compiled, &segment.point_at((i as f64 + 0.5) * len / resolution as f64)))
        .collect();
    Ok(prints.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Whether every piece owns a cell whose inscribed ball inside the box has
/// radius above `cells` grid spacings, so that the grid must sample it.
pub fn pieces_well_separated(rs: &RegionSet, labels: &[usize], resolution: usize, cells: f64) -> Result<bool> {
    let (lo, hi) = rs.domain.bounds(rs.input_dim)?;
    let spacing = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) / resolution as f64)
        .fold(0.0f64, f64::max);
    let domain = Domain::Box { lo, hi };
    let cfg = EnumerationConfig::default();
    let radii: Vec<f64> = rs
        .regions
        .par_iter()
        .map(|r| {
            let w = interior_witness(rs.input_dim, &r.constraints, &domain, &cfg)?;
            Ok(match w.status {
                WitnessStatus::Interior => w.margin,
                _ => 0.0,
            })
        })
        .collect::<Result<_>>()?;
    let pieces = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut best = vec![0.0f64; pieces];
    for (&l, r) in labels.iter().zip(radii) {
        best[l] = best[l].max(r);
    }
    Ok(best.iter().all(|&r| r > cells * spacing))
}
