//! Extremal networks: sawtooth functions and compositions, arrangements of
//! parallel-class partitions in general position and sums with distinct
//! pieces on every cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::{alpha_lower_constructive, ArchitectureDescriptor};
use crate::cpwl::ScalarCpwl;
use crate::error::{CpwlError, Result};
use crate::network::{AffineMap, LayerSpec, NetworkSpec};

const MAX_REDRAWS: usize = 200;

/// The sawtooth of order `p`: `p - 1` knots at `k/p`, values alternating
/// between 0 and 1 on the grid and affine outside `[0, 1]`.
pub fn sawtooth(p: usize) -> Result<ScalarCpwl> {
    if p == 0 {
        return Err(CpwlError::InvalidParameter("sawtooth order must be at least 1".into()));
    }
    if p == 1 {
        return Ok(ScalarCpwl::identity());
    }
    let pf = p as f64;
    let knots = (1..p).map(|k| k as f64 / pf).collect();
    let slopes = (0..p).map(|i| if i % 2 == 0 { pf } else { -pf }).collect();
    ScalarCpwl::new(knots, slopes, 1.0)
}

/// `sawtooth(p)` written as `slope·t + intercept + Σ coefficient·|t - knot|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SawtoothDecomposition {
    pub order: usize,
    /// `(coefficient, knot)` of every one-knot term.
    pub terms: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
}

impl SawtoothDecomposition {
    pub fn term(&self, i: usize) -> ScalarCpwl {
        let (c, knot) = self.terms[i];
        ScalarCpwl::new(vec![knot], vec![-c, c], 0.0).expect("one-knot term")
    }

    pub fn remainder(&self) -> ScalarCpwl {
        ScalarCpwl::affine(self.slope, self.intercept)
    }

    /// Sum of all terms and the remainder.
    pub fn resum(&self) -> ScalarCpwl {
        let terms: Vec<ScalarCpwl> = (0..self.terms.len()).map(|i| self.term(i)).collect();
        let mut parts: Vec<(f64, &ScalarCpwl)> = terms.iter().map(|t| (1.0, t)).collect();
        let rem = self.remainder();
        parts.push((1.0, &rem));
        ScalarCpwl::linear_combination(&parts, 0.0)
    }
}

pub fn sawtooth_decompose(p: usize) -> Result<SawtoothDecomposition> {
    if p == 0 {
        return Err(CpwlError::InvalidParameter("sawtooth order must be at least 1".into()));
    }
    let pf = p as f64;
    let terms: Vec<(f64, f64)> = (1..p)
        .map(|k| (if k % 2 == 0 { pf } else { -pf }, k as f64 / pf))
        .collect();
    let slope = pf + terms.iter().map(|t| t.0).sum::<f64>();
    let intercept = -terms.iter().map(|(c, k)| c * k).sum::<f64>();
    Ok(SawtoothDecomposition {
        order: p,
        terms,
        slope,
        intercept,
    })
}

/// Per-layer unit groups: `tau[l][k]` is the coordinate carried by unit `k`
/// of layer `l`.
pub type TauAssignment = Vec<Vec<usize>>;

/// Network whose cells realize the constructive lower bound: each of the
/// `d*` coordinates carries a sawtooth whose order is `1 + Σ (κ - 1)` over
/// the units assigned to it, and consecutive layers compose them.
pub fn sawtooth_network(arch: &ArchitectureDescriptor, tau: Option<&TauAssignment>) -> Result<NetworkSpec> {
    arch.validate()?;
    if !matches!(
        arch.family,
        crate::bounds::Family::Relu | crate::bounds::Family::Deepspline | crate::bounds::Family::Generic
    ) {
        return Err(CpwlError::Unsupported(format!(
            "sawtooth construction needs pointwise units, got {:?}",
            arch.family
        )));
    }
    let groups = arch.d_star();
    let owned;
    let tau = match tau {
        Some(t) => t,
        None => {
            owned = alpha_lower_constructive(arch).assignments;
            &owned
        }
    };
    if tau.len() != arch.depth() {
        return Err(CpwlError::InvalidParameter("one assignment per layer required".into()));
    }
    for (l, t) in tau.iter().enumerate() {
        if t.len() != arch.kappas[l].len() {
            return Err(CpwlError::InvalidParameter(format!("layer {l}: assignment length mismatch")));
        }
        if let Some(&r) = t.iter().find(|&&r| r >= groups) {
            return Err(CpwlError::InvalidParameter(format!("layer {l}: group {r} out of range")));
        }
        if (0..groups).any(|r| !t.contains(&r)) {
            return Err(CpwlError::Construction(format!(
                "layer {l}: every coordinate needs at least one unit"
            )));
        }
    }

    let mut layers = Vec::with_capacity(2 * arch.depth());
    let mut prev_width = arch.d_in();
    let mut prev_tau: Option<&Vec<usize>> = None;
    for (l, ks) in arch.kappas.iter().enumerate() {
        let t = &tau[l];
        let width = ks.len();
        // read-in: unit k sees the coordinate of its group
        let matrix: Vec<Vec<f64>> = (0..width)
            .map(|k| {
                (0..prev_width)
                    .map(|j| {
                        let hit = match prev_tau {
                            None => j == t[k],
                            Some(pt) => pt[j] == t[k],
                        };
                        if hit {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        layers.push(LayerSpec::Affine(AffineMap::linear(matrix)));

        let mut units = vec![ScalarCpwl::affine(0.0, 0.0); width];
        for r in 0..groups {
            let members: Vec<usize> = (0..width).filter(|&k| t[k] == r).collect();
            let order = 1 + members.iter().map(|&k| ks[k] as usize - 1).sum::<usize>();
            let dec = sawtooth_decompose(order)?;
            let mut next_term = 0;
            for (pos, &k) in members.iter().enumerate() {
                let n_terms = ks[k] as usize - 1;
                let terms: Vec<ScalarCpwl> = (next_term..next_term + n_terms).map(|i| dec.term(i)).collect();
                next_term += n_terms;
                let mut parts: Vec<(f64, &ScalarCpwl)> = terms.iter().map(|f| (1.0, f)).collect();
                let rem = dec.remainder();
                if pos == 0 {
                    parts.push((1.0, &rem));
                }
                units[k] = ScalarCpwl::linear_combination(&parts, 0.0);
            }
        }
        layers.push(LayerSpec::Pointwise { units });
        prev_width = width;
        prev_tau = Some(t);
    }
    Ok(NetworkSpec::new(arch.d_in(), layers)?.with_metadata("sawtooth network"))
}

/// One-input network `t ↦ sw_outer(sw_inner(t))`.
pub fn sawtooth_composition(inner: usize, outer: usize) -> Result<NetworkSpec> {
    Ok(NetworkSpec::new(
        1,
        vec![
            LayerSpec::Pointwise {
                units: vec![sawtooth(inner)?],
            },
            LayerSpec::Pointwise {
                units: vec![sawtooth(outer)?],
            },
        ],
    )?
    .with_metadata(format!("sawtooth {outer} after sawtooth {inner}")))
}

/// Network evaluating a single sawtooth.
pub fn sawtooth_scalar_network(p: usize) -> Result<NetworkSpec> {
    Ok(NetworkSpec::new(1, vec![LayerSpec::Pointwise { units: vec![sawtooth(p)?] }])?
        .with_metadata(format!("sawtooth {p}")))
}

/// Random directions and knots forming parallel-class partitions in general
/// position.
#[derive(Debug, Clone)]
struct Placement {
    directions: Vec<Vec<f64>>,
    knots: Vec<Vec<f64>>,
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut a = rows.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    det
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

impl Placement {
    fn draw(d: usize, ns: &[u64], rng: &mut ChaCha8Rng) -> Self {
        let directions = ns
            .iter()
            .map(|_| {
                if d == 1 {
                    return vec![1.0];
                }
                let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        let knots = ns
            .iter()
            .map(|&n| {
                let mut k: Vec<f64> = (1..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                k.sort_by(f64::total_cmp);
                k
            })
            .collect();
        Placement { directions, knots }
    }

    fn is_generic(&self, d: usize) -> bool {
        const GAP: f64 = 1e-2;
        const DET: f64 = 5e-2;
        let planes: Vec<(usize, f64)> = self
            .knots
            .iter()
            .enumerate()
            .flat_map(|(u, ks)| ks.iter().map(move |&t| (u, t)))
            .collect();
        // parallel planes of one unit must be separated
        for ks in &self.knots {
            if ks.windows(2).any(|w| w[1] - w[0] < GAP) {
                return false;
            }
        }
        let units = self.directions.len();
        let k = d.min(units);
        for s in subsets(units, k) {
            let rows: Vec<Vec<f64>> = s.iter().map(|&u| self.directions[u].clone()).collect();
            // Gram determinant covers fewer directions than dimensions
            let gram: Vec<Vec<f64>> = rows
                .iter()
                .map(|a| rows.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
                .collect();
            if d > 1 && determinant(&gram).abs() < DET * DET {
                return false;
            }
        }
        if d == 1 {
            let mut all: Vec<f64> = planes.iter().map(|p| p.1).collect();
            all.sort_by(f64::total_cmp);
            return all.windows(2).all(|w| w[1] - w[0] >= GAP);
        }
        if units <= d {
            return true;
        }
        for s in subsets(planes.len(), d) {
            let us: Vec<usize> = s.iter().map(|&i| planes[i].0).collect();
            if (1..us.len()).any(|i| us[..i].contains(&us[i])) {
                continue;
            }
            let a: Vec<Vec<f64>> = us.iter().map(|&u| self.directions[u].clone()).collect();
            let b: Vec<f64> = s.iter().map(|&i| planes[i].1).collect();
            let Some(x) = solve(a, b) else { return false };
            for &(u, t) in &planes {
                if us.contains(&u) {
                    continue;
                }
                let w = &self.directions[u];
                let v: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
                if (v - t).abs() < GAP {
                    return false;
                }
            }
        }
        true
    }

    fn generate(d: usize, ns: &[u64], seed: u64) -> Result<Self> {
        if d == 0 || ns.is_empty() || ns.contains(&0) {
            return Err(CpwlError::InvalidParameter(
                "need a positive dimension and partition sizes of at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_REDRAWS {
            let p = Self::draw(d, ns, &mut rng);
            if p.is_generic(d) {
                return Ok(p);
            }
        }
        Err(CpwlError::Construction(format!(
            "no generic placement found after {MAX_REDRAWS} draws"
        )))
    }

    fn readin(&self) -> LayerSpec {
        LayerSpec::Affine(AffineMap::linear(self.directions.clone()))
    }
}

/// One hidden layer whose unit `k` partitions `R^d` into `ns[k]` parallel
/// slabs; its cells form an arrangement of maximal size.
pub fn general_position_partitions(d: usize, ns: &[u64], seed: u64) -> Result<NetworkSpec> {
    let placement = Placement::generate(d, ns, seed)?;
    let units = placement
        .knots
        .iter()
        .map(|ks| {
            let slopes = (0..=ks.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            ScalarCpwl::new(ks.clone(), slopes, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkSpec::new(d, vec![placement.readin(), LayerSpec::Pointwise { units }])?
        .with_metadata("general position partitions"))
}

/// Scalar sum of units in general position whose slopes `p · m^(k-1)` give
/// every cell a distinct affine piece, with `m = max(ns)`.
pub fn extremal_sum_network(d: usize, ns: &[u64], seed: u64) -> Result<NetworkSpec> {
    let placement = Placement::generate(d, ns, seed)?;
    let m = *ns.iter().max().unwrap() as f64;
    let units = placement
        .knots
        .iter()
        .enumerate()
        .map(|(k, ks)| {
            let base = m.powi(k as i32);
            let slopes = (0..=ks.len()).map(|p| p as f64 * base).collect();
            ScalarCpwl::new(ks.clone(), slopes, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = units.len();
    Ok(NetworkSpec::new(
        d,
        vec![
            placement.readin(),
            LayerSpec::Pointwise { units },
            LayerSpec::Affine(AffineMap::linear(vec![vec![1.0; n]])),
        ],
    )?
    .with_metadata("extremal sum"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sawtooth_values_on_grid() {
        for p in 1..=9 {
            let f = sawtooth(p).unwrap();
            assert_eq!(f.num_regions(), p);
            for k in 0..=p {
                let v = f.eval(k as f64 / p as f64);
                let expected = if k % 2 == 0 { 0.0 } else { 1.0 };
                assert!((v - expected).abs() < 1e-12, "p={p} k={k}");
            }
        }
        assert_eq!(sawtooth(4).unwrap().eval(0.25), 1.0);
        assert!(sawtooth(2).unwrap().breakpoints() == [0.5]);
    }

    #[test]
    fn decomposition_resums_exactly() {
        for p in 1..=12 {
            let dec = sawtooth_decompose(p).unwrap();
            assert_eq!(dec.terms.len(), p - 1);
            let back = dec.resum();
            let sw = sawtooth(p).unwrap();
            assert_eq!(back.breakpoints().len(), sw.breakpoints().len());
            for i in -20..=40 {
                let t = i as f64 / 17.0;
                assert!((back.eval(t) - sw.eval(t)).abs() < 1e-9, "p={p} t={t}");
            }
        }
    }

    #[test]
    fn composition_law() {
        for p in 2..=6 {
            for q in 2..=6 {
                let c = ScalarCpwl::compose(&sawtooth(p).unwrap(), &sawtooth(q).unwrap());
                assert_eq!(c.num_regions(), p * q);
            }
        }
        let c = ScalarCpwl::compose(&sawtooth(3).unwrap(), &sawtooth(4).unwrap());
        let s = sawtooth(12).unwrap();
        for i in 0..50 {
            let t = -0.5 + i as f64 * 0.04;
            assert!((c.eval(t) - s.eval(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn sawtooth_network_evaluates_compositions() {
        let arch = ArchitectureDescriptor::uniform(vec![1, 2, 1], 2, crate::bounds::Family::Deepspline).unwrap();
        let net = sawtooth_network(&arch, None).unwrap();
        let sw6 = sawtooth(6).unwrap();
        for i in 0..30 {
            let t = -0.2 + i as f64 * 0.05;
            assert!((net.eval(&[t]).unwrap()[0] - sw6.eval(t)).abs() < 1e-9);
        }
        let net = sawtooth_scalar_network(4).unwrap();
        assert_eq!(net.eval(&[0.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn sawtooth_network_rejects_non_pointwise() {
        let arch = ArchitectureDescriptor::uniform(vec![1, 2, 1], 2, crate::bounds::Family::Maxout).unwrap();
        assert!(sawtooth_network(&arch, None).is_err());
    }

    #[test]
    fn placements_are_deterministic() {
        let a = general_position_partitions(2, &[3, 3], 7).unwrap();
        let b = general_position_partitions(2, &[3, 3], 7).unwrap();
        assert_eq!(a, b);
    }
}
