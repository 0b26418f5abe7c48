//! Dense tableau simplex with Bland's rule and the maximum-margin
//! (Chebyshev-style) feasibility program built on it.

use crate::error::{CpwlError, Result};
use crate::scalar::{dot, Scalar};

const MAX_PIVOTS: usize = 200_000;

/// Maximizes `c·y` subject to `A y ≤ b`, `y ≥ 0`, for `b ≥ 0`.
/// Returns the optimal `y` and objective value.
pub(crate) fn simplex<S: Scalar>(a: &[Vec<S>], b: &[S], c: &[S]) -> Result<(Vec<S>, S)> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let rhs = n + m;
    let mut tab: Vec<Vec<S>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        if b[i] < S::zero() {
            return Err(CpwlError::Lp("negative right-hand side".into()));
        }
        let mut t = Vec::with_capacity(width);
        t.extend(row.iter().cloned());
        t.extend((0..m).map(|j| if i == j { S::one() } else { S::zero() }));
        t.push(b[i].clone());
        tab.push(t);
    }
    let mut cost: Vec<S> = c.iter().cloned().chain((0..m + 1).map(|_| S::zero())).collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let cost_tol = S::tol(&S::from_f64(100.0));
    let piv_tol = S::tol(&S::from_f64(10.0));

    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..n + m).find(|&j| cost[j] > cost_tol) else {
            let mut y = vec![S::zero(); n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    y[bv] = tab[i][rhs].clone();
                }
            }
            let obj = dot(c, &y);
            return Ok((y, obj));
        };
        let mut leave: Option<(usize, S)> = None;
        for i in 0..m {
            if tab[i][enter] <= piv_tol {
                continue;
            }
            let ratio = tab[i][rhs].clone() / tab[i][enter].clone();
            leave = match leave {
                None => Some((i, ratio)),
                Some((r, best)) => {
                    let gap = ratio.clone() - best.clone();
                    if gap.is_zero_at(&best) {
                        if basis[i] < basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    } else if gap < S::zero() {
                        Some((i, ratio))
                    } else {
                        Some((r, best))
                    }
                }
            };
        }
        let Some((row, _)) = leave else {
            return Err(CpwlError::Lp("unbounded objective".into()));
        };
        pivot(&mut tab, &mut cost, row, enter);
        basis[row] = enter;
    }
    Err(CpwlError::Lp("pivot limit reached".into()))
}

fn pivot<S: Scalar>(tab: &mut [Vec<S>], cost: &mut [S], row: usize, col: usize) {
    let p = tab[row][col].clone();
    for v in tab[row].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = tab[row].clone();
    for (i, t) in tab.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = t[col].clone();
        if f == S::zero() {
            continue;
        }
        for (v, pv) in t.iter_mut().zip(&pivot_row) {
            *v = v.clone() - f.clone() * pv.clone();
        }
    }
    let f = cost[col].clone();
    if f != S::zero() {
        for (v, pv) in cost.iter_mut().zip(&pivot_row) {
            *v = v.clone() - f.clone() * pv.clone();
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MarginSolution<S> {
    pub point: Vec<S>,
    pub margin: S,
}

/// Maximizes `e` subject to `normal·x + offset ≥ e·weight(normal)` for every
/// constraint and `lo_j + e ≤ x_j ≤ hi_j − e` on the box.
pub(crate) fn max_margin<S: Scalar>(
    constraints: &[(Vec<S>, S)],
    lo: &[S],
    hi: &[S],
) -> Result<MarginSolution<S>> {
    let d = lo.len();
    let mut rows: Vec<(Vec<S>, S, S)> = Vec::with_capacity(constraints.len());
    for (normal, offset) in constraints {
        let w = S::norm_weight(normal);
        if w.is_zero_at(&S::one()) {
            if *offset < -S::tol(offset) {
                return Ok(MarginSolution {
                    point: lo.to_vec(),
                    margin: offset.clone(),
                });
            }
            continue;
        }
        // value at the lower box corner
        let at_lo = dot(normal, lo) + offset.clone();
        rows.push((normal.clone(), at_lo, w));
    }

    // shift e = eps - big so that the origin of (z, eps) is feasible
    let mut big = S::zero();
    for (_, at_lo, w) in &rows {
        let need = -(at_lo.clone() / w.clone());
        if need > big {
            big = need;
        }
    }
    big = big + S::one();

    let n = d + 1;
    let mut a = Vec::with_capacity(rows.len() + 2 * d);
    let mut b = Vec::with_capacity(rows.len() + 2 * d);
    for (normal, at_lo, w) in &rows {
        let mut r: Vec<S> = normal.iter().map(|v| -v.clone()).collect();
        r.push(w.clone());
        a.push(r);
        b.push(at_lo.clone() + big.clone() * w.clone());
    }
    for j in 0..d {
        let mut r = vec![S::zero(); n];
        r[j] = -S::one();
        r[d] = S::one();
        a.push(r);
        b.push(big.clone());
        let mut r = vec![S::zero(); n];
        r[j] = S::one();
        r[d] = S::one();
        a.push(r);
        b.push(hi[j].clone() - lo[j].clone() + big.clone());
    }
    let mut c = vec![S::zero(); n];
    c[d] = S::one();
    let (y, eps) = simplex(&a, &b, &c)?;
    let point = (0..d).map(|j| y[j].clone() + lo[j].clone()).collect();
    Ok(MarginSolution {
        point,
        margin: eps - big,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn small_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let a = vec![vec![1.0, 2.0], vec![3.0, 1.0]];
        let (y, obj) = simplex(&a, &[4.0, 6.0], &[1.0, 1.0]).unwrap();
        assert!((obj - 2.8).abs() < 1e-12);
        assert!((y[0] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let a = vec![vec![1.0, -1.0]];
        assert!(simplex(&a, &[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn chebyshev_center_of_unit_interval() {
        let cons = vec![(vec![1.0], 0.0), (vec![-1.0], 1.0)];
        let sol = max_margin(&cons, &[-1e6], &[1e6]).unwrap();
        assert!((sol.margin - 0.5).abs() < 1e-9);
        assert!((sol.point[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exact_center() {
        let q = |v: f64| <BigRational as Scalar>::from_f64(v);
        let cons = vec![(vec![q(1.0)], q(0.0)), (vec![q(-1.0)], q(1.0))];
        let sol = max_margin(&cons, &[q(-10.0)], &[q(10.0)]).unwrap();
        assert_eq!(sol.margin, q(0.5));
        assert_eq!(sol.point, vec![q(0.5)]);
    }

    #[test]
    fn flat_region_has_zero_margin() {
        let cons = vec![(vec![1.0, 0.0], 0.0), (vec![-1.0, 0.0], 0.0)];
        let sol = max_margin(&cons, &[-5.0, -5.0], &[5.0, 5.0]).unwrap();
        assert!(sol.margin.abs() < 1e-9);
    }

    #[test]
    fn infeasible_region_has_negative_margin() {
        let cons = vec![(vec![1.0], -2.0), (vec![-1.0], 1.0)];
        let sol = max_margin(&cons, &[-5.0], &[5.0]).unwrap();
        assert!(sol.margin < -0.4);
    }
}
