use std::sync::atomic::{AtomicUsize, Ordering};

use num_rational::BigRational;
use rayon::prelude::*;

use super::{witness_in, Arithmetic, Domain, EnumerationConfig, HalfSpace, Region, RegionSet};
use crate::cpwl::piece_index_in;
use crate::error::{CpwlError, Result};
use crate::network::{mat_mul, AffineMap, CompiledLayer, CompiledNetwork, NetworkSpec};
use crate::scalar::{dot, Scalar};

const EXACT_DIM_LIMIT: usize = 2;

type Constraint<S> = (Vec<S>, S);

#[derive(Clone)]
struct Cell<S> {
    constraints: Vec<Constraint<S>>,
    matrix: Vec<Vec<S>>,
    offset: Vec<S>,
    witness: Vec<S>,
    margin: S,
}

/// Part of a cell while a layer is being split; the composed map is shared
/// with the parent.
#[derive(Clone)]
struct Sub<S> {
    constraints: Vec<Constraint<S>>,
    witness: Vec<S>,
    margin: S,
}

struct Ctx<'a, S> {
    net: &'a CompiledNetwork<S>,
    lo: Vec<S>,
    hi: Vec<S>,
    eps: S,
    produced: &'a AtomicUsize,
    budget: usize,
}

/// Enumerates the full-dimensional convex cells on which the network is
/// affine, refining layer by layer.
pub fn enumerate_regions(
    net: &NetworkSpec,
    domain: &Domain,
    cfg: &EnumerationConfig,
) -> Result<RegionSet> {
    let d = net.input_dim;
    if d > cfg.max_input_dim {
        return Err(CpwlError::DimensionTooLarge {
            dim: d,
            limit: cfg.max_input_dim,
        });
    }
    let (lo, hi) = domain.bounds(d)?;
    let mut regions = match cfg.arithmetic {
        Arithmetic::Float => run::<f64>(net, &lo, &hi, cfg)?,
        Arithmetic::Exact => {
            if d > EXACT_DIM_LIMIT {
                return Err(CpwlError::DimensionTooLarge {
                    dim: d,
                    limit: EXACT_DIM_LIMIT,
                });
            }
            run::<BigRational>(net, &lo, &hi, cfg)?
        }
    };
    regions.sort_by(|a, b| {
        a.witness
            .iter()
            .zip(&b.witness)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(RegionSet {
        input_dim: d,
        domain: domain.clone(),
        regions,
    })
}

fn run<S: Scalar>(net: &NetworkSpec, lo: &[f64], hi: &[f64], cfg: &EnumerationConfig) -> Result<Vec<Region>> {
    let compiled = net.compile::<S>()?;
    let d = net.input_dim;
    let produced = AtomicUsize::new(1);
    let ctx = Ctx {
        net: &compiled,
        lo: lo.iter().map(|&v| S::from_f64(v)).collect(),
        hi: hi.iter().map(|&v| S::from_f64(v)).collect(),
        eps: if S::EXACT { S::zero() } else { S::from_f64(cfg.interior_eps) },
        produced: &produced,
        budget: cfg.cell_budget,
    };
    let (witness, margin) = witness_in(&[], &ctx.lo, &ctx.hi, &ctx.eps)?
        .ok_or_else(|| CpwlError::Lp("domain has empty interior".into()))?;
    let root = Cell {
        constraints: Vec::new(),
        matrix: identity(d),
        offset: vec![S::zero(); d],
        witness,
        margin,
    };
    let mut cells = vec![root];
    for layer in 0..compiled.layers.len() {
        ctx.produced.store(0, Ordering::Relaxed);
        let next: Result<Vec<Vec<Cell<S>>>> = cells
            .par_iter()
            .map(|cell| refine(&ctx, layer, cell))
            .collect();
        cells = next?.into_iter().flatten().collect();
        if cells.len() > cfg.cell_budget {
            return Err(CpwlError::BudgetExceeded {
                limit: cfg.cell_budget,
            });
        }
    }
    Ok(cells.into_iter().map(to_region).collect())
}

fn identity<S: Scalar>(d: usize) -> Vec<Vec<S>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { S::one() } else { S::zero() }).collect())
        .collect()
}

fn to_f64<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(Scalar::to_f64).collect()
}

fn to_region<S: Scalar>(cell: Cell<S>) -> Region {
    Region {
        constraints: cell
            .constraints
            .iter()
            .map(|(n, o)| HalfSpace::new(to_f64(n), o.to_f64()))
            .collect(),
        piece: AffineMap {
            matrix: cell.matrix.iter().map(|r| to_f64(r)).collect(),
            offset: to_f64(&cell.offset),
        },
        witness: to_f64(&cell.witness),
        margin: cell.margin.to_f64(),
    }
}

/// Input-space form of the functional `row·y + constant` of the current
/// layer input.
fn pull_back<S: Scalar>(cell: &Cell<S>, row: &[S], constant: S) -> Constraint<S> {
    let d = cell.witness.len();
    let normal = (0..d)
        .map(|j| {
            row.iter()
                .zip(&cell.matrix)
                .fold(S::zero(), |acc, (r, m)| acc + r.clone() * m[j].clone())
        })
        .collect();
    (normal, dot(row, &cell.offset) + constant)
}

fn unit_row<S: Scalar>(width: usize, k: usize) -> Vec<S> {
    (0..width).map(|j| if j == k { S::one() } else { S::zero() }).collect()
}

fn diff_row<S: Scalar>(width: usize, a: usize, b: usize) -> Vec<S> {
    (0..width)
        .map(|j| {
            if j == a {
                S::one()
            } else if j == b {
                -S::one()
            } else {
                S::zero()
            }
        })
        .collect()
}

fn is_null<S: Scalar>(normal: &[S]) -> bool {
    S::norm_weight(normal).is_zero_at(&S::one())
}

impl<'a, S: Scalar> Ctx<'a, S> {
    fn test(&self, constraints: Vec<Constraint<S>>) -> Result<Option<Sub<S>>> {
        Ok(witness_in(&constraints, &self.lo, &self.hi, &self.eps)?.map(|(witness, margin)| Sub {
            constraints,
            witness,
            margin,
        }))
    }

    fn count(&self, n: usize) -> Result<()> {
        if self.produced.fetch_add(n, Ordering::Relaxed) + n > self.budget {
            return Err(CpwlError::BudgetExceeded { limit: self.budget });
        }
        Ok(())
    }

    /// Splits `sub` into the slabs `breakpoints[i-1] ≤ normal·x + offset ≤
    /// breakpoints[i]` with nonempty interior.
    fn split_slabs(&self, sub: Sub<S>, func: &Constraint<S>, breakpoints: &[S]) -> Result<Vec<Sub<S>>> {
        let (normal, offset) = func;
        if breakpoints.is_empty() || is_null(normal) {
            return Ok(vec![sub]);
        }
        let weight = S::norm_weight(normal);
        let m = breakpoints.len();
        let at_witness = dot(normal, &sub.witness) + offset.clone();
        let start = piece_index_in(breakpoints, at_witness, S::zero());
        let slab = |i: usize| -> Vec<Constraint<S>> {
            let mut cons = sub.constraints.clone();
            if i > 0 {
                cons.push((normal.clone(), offset.clone() - breakpoints[i - 1].clone()));
            }
            if i < m {
                cons.push((
                    normal.iter().map(|v| -v.clone()).collect(),
                    breakpoints[i].clone() - offset.clone(),
                ));
            }
            cons
        };
        // a slab thinner than the interior threshold can be empty while the
        // cell still reaches past it
        let thin = |i: usize| -> bool {
            if S::EXACT || i == 0 || i == m {
                return false;
            }
            let width = breakpoints[i].clone() - breakpoints[i - 1].clone();
            width < S::from_f64(4.0) * self.eps.clone() * weight.clone()
        };
        let mut out = Vec::new();
        if let Some(s) = self.test(slab(start))? {
            out.push(s);
        }
        for i in start + 1..=m {
            match self.test(slab(i))? {
                Some(s) => out.push(s),
                None if thin(i) => continue,
                None => break,
            }
        }
        for i in (0..start).rev() {
            match self.test(slab(i))? {
                Some(s) => out.push(s),
                None if thin(i) => continue,
                None => break,
            }
        }
        Ok(out)
    }

    fn split_all(&self, subs: Vec<Sub<S>>, func: &Constraint<S>, breakpoints: &[S]) -> Result<Vec<Sub<S>>> {
        let mut out = Vec::with_capacity(subs.len());
        for sub in subs {
            out.extend(self.split_slabs(sub, func, breakpoints)?);
        }
        Ok(out)
    }

    /// Upper-envelope cells of a family of affine functions.
    fn split_envelope(&self, subs: Vec<Sub<S>>, funcs: &[Constraint<S>]) -> Result<Vec<Sub<S>>> {
        let mut out = Vec::new();
        for sub in subs {
            for k in 0..funcs.len() {
                let mut cons = sub.constraints.clone();
                let mut dominated = false;
                for j in 0..funcs.len() {
                    if j == k {
                        continue;
                    }
                    let normal: Vec<S> = funcs[k]
                        .0
                        .iter()
                        .zip(&funcs[j].0)
                        .map(|(a, b)| a.clone() - b.clone())
                        .collect();
                    let offset = funcs[k].1.clone() - funcs[j].1.clone();
                    if is_null(&normal) {
                        let scale = S::max_abs(&[funcs[k].1.clone(), funcs[j].1.clone()]);
                        if offset.is_zero_at(&scale) {
                            dominated |= j < k;
                        } else {
                            dominated |= offset < S::zero();
                        }
                        continue;
                    }
                    cons.push((normal, offset));
                }
                if dominated {
                    continue;
                }
                if let Some(s) = self.test(cons)? {
                    out.push(s);
                }
            }
        }
        Ok(out)
    }
}

fn refine<S: Scalar>(ctx: &Ctx<'_, S>, layer: usize, cell: &Cell<S>) -> Result<Vec<Cell<S>>> {
    let width = cell.offset.len();
    let base = Sub {
        constraints: cell.constraints.clone(),
        witness: cell.witness.clone(),
        margin: cell.margin.clone(),
    };
    let subs = match &ctx.net.layers[layer] {
        CompiledLayer::Affine { matrix, offset } => {
            ctx.count(1)?;
            return Ok(vec![Cell {
                constraints: cell.constraints.clone(),
                matrix: mat_mul(matrix, &cell.matrix),
                offset: matrix
                    .iter()
                    .zip(offset)
                    .map(|(r, o)| dot(r, &cell.offset) + o.clone())
                    .collect(),
                witness: cell.witness.clone(),
                margin: cell.margin.clone(),
            }]);
        }
        CompiledLayer::Pointwise { units } => {
            let mut subs = vec![base];
            for (k, unit) in units.iter().enumerate() {
                let func = pull_back(cell, &unit_row(width, k), S::zero());
                subs = ctx.split_all(subs, &func, &unit.breakpoints)?;
            }
            subs
        }
        CompiledLayer::Maxout { weights, offsets } => {
            let mut subs = vec![base];
            for (w, o) in weights.iter().zip(offsets) {
                let funcs: Vec<Constraint<S>> = w
                    .iter()
                    .zip(o)
                    .map(|(row, b)| pull_back(cell, row, b.clone()))
                    .collect();
                subs = ctx.split_envelope(subs, &funcs)?;
            }
            subs
        }
        CompiledLayer::Groupsort { group_size } => {
            let mut subs = vec![base];
            let zero = [S::zero()];
            for start in (0..width).step_by(*group_size) {
                for a in start..start + group_size {
                    for b in a + 1..start + group_size {
                        let func = pull_back(cell, &diff_row(width, a, b), S::zero());
                        subs = ctx.split_all(subs, &func, &zero)?;
                    }
                }
            }
            subs
        }
        CompiledLayer::Pwlu2d {
            lines,
            matrix,
            offset,
            ..
        } => {
            let mut subs = vec![base];
            let zero = [S::zero()];
            for u in 0..matrix.len() / 2 {
                let p = pull_back(cell, &matrix[2 * u], offset[2 * u].clone());
                let q = pull_back(cell, &matrix[2 * u + 1], offset[2 * u + 1].clone());
                subs = ctx.split_all(subs, &p, lines)?;
                subs = ctx.split_all(subs, &q, lines)?;
                let mut out = Vec::with_capacity(2 * subs.len());
                for sub in subs {
                    let at = |f: &Constraint<S>| dot(&f.0, &sub.witness) + f.1.clone();
                    let i = piece_index_in(lines, at(&p), S::zero());
                    let j = piece_index_in(lines, at(&q), S::zero());
                    // the diagonal of cell (i, j) is q - p = (j - i) h
                    let shift = grid_offset::<S>(lines, i) - grid_offset::<S>(lines, j);
                    let normal: Vec<S> = q.0.iter().zip(&p.0).map(|(a, b)| a.clone() - b.clone()).collect();
                    let diag = (normal, q.1.clone() - p.1.clone() + shift);
                    out.extend(ctx.split_slabs(sub, &diag, &zero)?);
                }
                subs = out;
            }
            subs
        }
    };
    ctx.count(subs.len())?;
    let zeros = vec![S::zero(); width];
    Ok(subs
        .into_iter()
        .map(|sub| {
            let v: Vec<S> = cell
                .matrix
                .iter()
                .zip(&cell.offset)
                .map(|(r, o)| dot(r, &sub.witness) + o.clone())
                .collect();
            let (jac, c) = ctx.net.layer_local_map(layer, &v, &zeros);
            Cell {
                constraints: sub.constraints,
                matrix: mat_mul(&jac, &cell.matrix),
                offset: jac
                    .iter()
                    .zip(&c)
                    .map(|(r, ci)| dot(r, &cell.offset) + ci.clone())
                    .collect(),
                witness: sub.witness,
                margin: sub.margin,
            }
        })
        .collect())
}

/// Grid coordinate of the lower edge of cell `i`; `lines` holds the interior
/// grid lines of a uniform grid on `[-1, 1]`.
fn grid_offset<S: Scalar>(lines: &[S], i: usize) -> S {
    let m = lines.len() + 2;
    S::from_f64(-1.0) + S::from_f64(2.0) * S::from_f64(i as f64) / S::from_f64((m - 1) as f64)
}
