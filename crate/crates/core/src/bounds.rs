//! Closed-form region-count bounds in exact integer arithmetic.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CpwlError, Result};
use crate::network::{LayerSpec, NetworkSpec};

/// Layers with at most this many units get an exhaustive group search.
pub const EXACT_ASSIGNMENT_LIMIT: usize = 12;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Maximum number of cells in an arrangement of convex partitions of `R^d`
/// with the given numbers of regions.
pub fn beta(d: usize, ns: &[u64]) -> BigUint {
    let top = d.min(ns.len());
    // elementary symmetric polynomials of (n_k - 1), truncated at degree `top`
    let mut e = vec![BigUint::zero(); top + 1];
    e[0] = BigUint::one();
    for (i, &n) in ns.iter().enumerate() {
        let x = BigUint::from(n.saturating_sub(1));
        for k in (1..=top.min(i + 1)).rev() {
            let add = &e[k - 1] * &x;
            e[k] += add;
        }
    }
    e.into_iter().sum()
}

/// The two closed-form caps `(n^N, (1 + N (n - 1))^d)` on `beta(d, [n; N])`.
pub fn beta_simplified(d: usize, count: usize, n: u64) -> (BigUint, BigUint) {
    let naive = BigUint::from(n).pow(count as u32);
    let linear = (BigUint::one() + BigUint::from(count as u64) * BigUint::from(n.saturating_sub(1)))
        .pow(d as u32);
    (naive, linear)
}

/// Cap on the convex linear regions of a function with `rho` projection
/// regions in `R^d`.
pub fn projection_to_convex_cap(rho: u64, d: usize) -> BigUint {
    let planes = rho * rho.saturating_sub(1) / 2;
    if planes <= d as u64 {
        BigUint::one() << planes as usize
    } else {
        (0..=d as u64).map(|k| binomial(planes, k)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Relu,
    Deepspline,
    Maxout,
    Groupsort,
    Pwlu,
    Generic,
}

impl Family {
    pub fn is_pointwise(self) -> bool {
        matches!(self, Family::Relu | Family::Deepspline)
    }
}

impl std::str::FromStr for Family {
    type Err = CpwlError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "relu" => Family::Relu,
            "deepspline" => Family::Deepspline,
            "maxout" => Family::Maxout,
            "groupsort" => Family::Groupsort,
            "pwlu" => Family::Pwlu,
            "generic" => Family::Generic,
            other => return Err(CpwlError::InvalidParameter(format!("unknown family {other}"))),
        })
    }
}

/// Layer widths `dims[0..=L]` and, per layer, the region count of every
/// unit. GroupSort layers list one entry per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureDescriptor {
    pub dims: Vec<usize>,
    pub kappas: Vec<Vec<u64>>,
    pub family: Family,
}

impl ArchitectureDescriptor {
    pub fn new(dims: Vec<usize>, kappas: Vec<Vec<u64>>, family: Family) -> Result<Self> {
        let arch = ArchitectureDescriptor {
            dims,
            kappas,
            family,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Every unit of every layer has `kappa` regions.
    pub fn uniform(dims: Vec<usize>, kappa: u64, family: Family) -> Result<Self> {
        let kappas = dims[1..].iter().map(|&w| vec![kappa; w]).collect();
        Self::new(dims, kappas, family)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CpwlError::InvalidParameter(m));
        if self.dims.len() < 2 {
            return bad("need at least an input and an output dimension".into());
        }
        if self.dims.contains(&0) {
            return bad("dimensions must be positive".into());
        }
        if self.kappas.len() != self.dims.len() - 1 {
            return bad(format!(
                "{} layers need {} complexity lists",
                self.dims.len() - 1,
                self.dims.len() - 1
            ));
        }
        for (l, ks) in self.kappas.iter().enumerate() {
            let width = self.dims[l + 1];
            let ok = match self.family {
                Family::Groupsort => !ks.is_empty() && width % ks.len() == 0,
                _ => ks.len() == width,
            };
            if !ok {
                return bad(format!("layer {l}: {} complexities for width {width}", ks.len()));
            }
            if ks.contains(&0) {
                return bad(format!("layer {l}: complexities must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn d_in(&self) -> usize {
        self.dims[0]
    }

    pub fn d_out(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Smallest width anywhere in the network.
    pub fn d_star(&self) -> usize {
        *self.dims.iter().min().unwrap()
    }

    /// Widest hidden layer.
    pub fn width(&self) -> usize {
        self.dims[1..self.dims.len() - 1]
            .iter()
            .copied()
            .max()
            .unwrap_or(self.d_out())
    }

    /// Running minimum `min(d_1, ..., d_l)` seen by layer `l`.
    fn reach(&self) -> Vec<usize> {
        let mut acc = usize::MAX;
        self.dims[..self.dims.len() - 1]
            .iter()
            .map(|&d| {
                acc = acc.min(d);
                acc
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBound {
    #[serde(with = "decimal")]
    pub value: BigUint,
    #[serde(with = "decimal_vec")]
    pub factors: Vec<BigUint>,
}

fn product(factors: &[BigUint]) -> BigUint {
    factors.iter().fold(BigUint::one(), |acc, f| acc * f)
}

/// Product over layers of the arrangement bound in the dimension each layer
/// can reach.
pub fn compositional_upper(arch: &ArchitectureDescriptor) -> LayerBound {
    compositional_from(&arch.reach(), &arch.kappas)
}

fn compositional_from(reach: &[usize], kappas: &[Vec<u64>]) -> LayerBound {
    let factors: Vec<BigUint> = reach
        .iter()
        .zip(kappas)
        .map(|(&d, ks)| beta(d, ks))
        .collect();
    LayerBound {
        value: product(&factors),
        factors,
    }
}

/// Region-count structure of a concrete network: the reach and the unit
/// complexities of every non-affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkComplexity {
    pub reach: Vec<usize>,
    pub kappas: Vec<Vec<u64>>,
}

impl NetworkComplexity {
    pub fn of(net: &NetworkSpec) -> Result<Self> {
        let widths = net.widths()?;
        let mut reach = Vec::new();
        let mut kappas = Vec::new();
        let mut running = widths[0];
        for (l, layer) in net.layers.iter().enumerate() {
            let ks: Vec<u64> = match layer {
                LayerSpec::Affine(_) => {
                    running = running.min(widths[l + 1]);
                    continue;
                }
                LayerSpec::Pointwise { units } => units.iter().map(|f| f.num_regions() as u64).collect(),
                LayerSpec::Maxout { rank, weights, .. } => vec![*rank as u64; weights.len()],
                LayerSpec::Groupsort { group_size } => {
                    let gs = factorial(*group_size as u64).to_u64().unwrap_or(u64::MAX);
                    vec![gs; widths[l] / group_size]
                }
                LayerSpec::Pwlu2d { grid_m, values, .. } => {
                    vec![2 * ((*grid_m as u64) - 1).pow(2); values.len()]
                }
            };
            reach.push(running);
            kappas.push(ks);
            running = running.min(widths[l + 1]);
        }
        Ok(NetworkComplexity { reach, kappas })
    }

    pub fn upper_bound(&self) -> LayerBound {
        compositional_from(&self.reach, &self.kappas)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaVariant {
    /// Group value `Σ κ`.
    Paper,
    /// Group value `1 + Σ (κ - 1)`, realized by sawtooth networks.
    Constructive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBound {
    pub variant: AlphaVariant,
    #[serde(with = "decimal")]
    pub value: BigUint,
    #[serde(with = "decimal_vec")]
    pub factors: Vec<BigUint>,
    /// Per layer, the group of every unit.
    pub assignments: Vec<Vec<usize>>,
    /// Set when some layer was too wide for the exhaustive search; the
    /// value is still a valid lower bound.
    pub heuristic: bool,
}

pub fn alpha_lower_paper(arch: &ArchitectureDescriptor) -> AlphaBound {
    alpha_lower(arch, AlphaVariant::Paper)
}

pub fn alpha_lower_constructive(arch: &ArchitectureDescriptor) -> AlphaBound {
    alpha_lower(arch, AlphaVariant::Constructive)
}

fn alpha_lower(arch: &ArchitectureDescriptor, variant: AlphaVariant) -> AlphaBound {
    let groups = arch.d_star();
    let mut factors = Vec::new();
    let mut assignments = Vec::new();
    let mut heuristic = false;
    for ks in &arch.kappas {
        let weights: Vec<u64> = match variant {
            AlphaVariant::Paper => ks.clone(),
            AlphaVariant::Constructive => ks.iter().map(|k| k - 1).collect(),
        };
        let (value, tau) = if ks.len() <= EXACT_ASSIGNMENT_LIMIT {
            best_assignment(&weights, groups, variant)
        } else {
            heuristic = true;
            balanced_assignment(&weights, groups, variant)
        };
        factors.push(value);
        assignments.push(tau);
    }
    AlphaBound {
        variant,
        value: product(&factors),
        factors,
        assignments,
        heuristic,
    }
}

fn group_value(sum: u64, size: usize, variant: AlphaVariant) -> BigUint {
    match variant {
        // an empty group contributes nothing to the product
        AlphaVariant::Paper if size == 0 => BigUint::one(),
        AlphaVariant::Paper => BigUint::from(sum),
        AlphaVariant::Constructive => BigUint::from(sum + 1),
    }
}

fn score(groups: &[(u64, Vec<usize>)], variant: AlphaVariant) -> BigUint {
    groups
        .iter()
        .fold(BigUint::one(), |acc, (s, m)| acc * group_value(*s, m.len(), variant))
}

fn to_tau(groups: &[(u64, Vec<usize>)], units: usize) -> Vec<usize> {
    let mut tau = vec![0; units];
    for (r, (_, members)) in groups.iter().enumerate() {
        for &k in members {
            tau[k] = r;
        }
    }
    tau
}

/// Exhaustive search over assignments of units to groups, merging states
/// with equal multisets of group sums.
fn best_assignment(weights: &[u64], groups: usize, variant: AlphaVariant) -> (BigUint, Vec<usize>) {
    type State = Vec<(u64, Vec<usize>)>;
    let key = |s: &State| -> Vec<(u64, usize)> { s.iter().map(|(v, m)| (*v, m.len().min(1))).collect() };
    let mut states: BTreeMap<Vec<(u64, usize)>, State> = BTreeMap::new();
    let empty: State = vec![(0, Vec::new()); groups];
    states.insert(key(&empty), empty);
    for (k, &w) in weights.iter().enumerate() {
        let mut next: BTreeMap<Vec<(u64, usize)>, State> = BTreeMap::new();
        for state in states.values() {
            let mut tried = Vec::new();
            for r in 0..groups {
                let sig = (state[r].0, state[r].1.is_empty());
                if tried.contains(&sig) {
                    continue;
                }
                tried.push(sig);
                let mut s = state.clone();
                s[r].0 += w;
                s[r].1.push(k);
                s.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.len().min(1).cmp(&b.1.len().min(1))).then(a.1.cmp(&b.1)));
                next.entry(key(&s)).or_insert(s);
            }
        }
        states = next;
    }
    // among optimal assignments prefer ones that use every group
    let used = |s: &State| s.iter().filter(|(_, m)| !m.is_empty()).count();
    let best = states
        .values()
        .max_by(|a, b| {
            score(a, variant)
                .cmp(&score(b, variant))
                .then(used(a).cmp(&used(b)))
        })
        .expect("at least one state");
    (score(best, variant), to_tau(best, weights.len()))
}

/// Largest weight first into the currently lightest group.
fn balanced_assignment(weights: &[u64], groups: usize, variant: AlphaVariant) -> (BigUint, Vec<usize>) {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
    let mut state: Vec<(u64, Vec<usize>)> = vec![(0, Vec::new()); groups];
    for k in order {
        let r = (0..groups)
            .min_by_key(|&r| (state[r].0, state[r].1.len()))
            .unwrap();
        state[r].0 += weights[k];
        state[r].1.push(k);
    }
    (score(&state, variant), to_tau(&state, weights.len()))
}

/// The uniform architecture `(d_in, W, ..., W, d_out)` with `depth` hidden
/// layers of complexity `kappa` followed by an affine read-out.
pub fn uniform_descriptor(
    d_in: usize,
    width: usize,
    d_out: usize,
    depth: usize,
    kappa: u64,
) -> Result<ArchitectureDescriptor> {
    let mut dims = vec![d_in];
    dims.extend(std::iter::repeat(width).take(depth));
    dims.push(d_out);
    let mut kappas: Vec<Vec<u64>> = (0..depth).map(|_| vec![kappa; width]).collect();
    kappas.push(vec![1; d_out]);
    ArchitectureDescriptor::new(dims, kappas, Family::Generic)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(with = "decimal")]
    pub lower_paper: BigUint,
    #[serde(with = "decimal")]
    pub upper: BigUint,
    pub warnings: Vec<String>,
}

/// `((κ ⌊W/d*⌋)^{L d*}, (κ W)^{L d_in})` for the uniform architecture.
pub fn corollary_envelope(d_in: usize, width: usize, d_out: usize, depth: usize, kappa: u64) -> Result<Envelope> {
    if d_in == 0 || width == 0 || d_out == 0 || kappa == 0 {
        return Err(CpwlError::InvalidParameter("dimensions and kappa must be positive".into()));
    }
    if width < d_in {
        return Err(CpwlError::InvalidParameter(format!(
            "width {width} is smaller than the input dimension {d_in}"
        )));
    }
    let mut warnings = Vec::new();
    if d_out > width {
        warnings.push(format!("output dimension {d_out} exceeds width {width}"));
    }
    let d_star = d_in.min(d_out);
    let lower = BigUint::from(kappa * (width / d_star) as u64).pow((depth * d_star) as u32);
    let upper = BigUint::from(kappa * width as u64).pow((depth * d_in) as u32);
    Ok(Envelope {
        lower_paper: lower,
        upper,
        warnings,
    })
}

/// Parameters of the worked single-layer and deep-network formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BoundQuery {
    /// `n` ridge functions of a `d`-dimensional input.
    Ridge { d: usize, n: usize },
    /// Max-pooling with `outputs` pools of size `n` over a `d`-dimensional input.
    MaxPooling { d: usize, outputs: usize, n: u64 },
    /// Generalized hinging hyperplanes: max of `d + 1` affine functions, `n` terms.
    Ghh { d: usize, n: usize },
    GroupsortActivation { d: usize, group_size: usize },
    Sort { d: usize },
    /// `units` two-input PWLU units on a `grid_m` grid, `d`-dimensional input.
    Pwlu { d: usize, units: usize, grid_m: usize },
    Relu { dims: Vec<usize> },
    Deepspline { dims: Vec<usize>, kappa: u64 },
    Maxout { dims: Vec<usize>, kappa: u64 },
    Groupsort { dims: Vec<usize>, group_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    #[serde(with = "decimal")]
    pub value: BigUint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: String,
    pub query: BoundQuery,
    pub values: Vec<NamedValue>,
}

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<&BigUint> {
        self.values.iter().find(|v| v.name == name).map(|v| &v.value)
    }

    /// The headline value (the first entry).
    pub fn value(&self) -> &BigUint {
        &self.values[0].value
    }
}

fn deep_product(dims: &[usize], units: impl Fn(usize) -> (u64, u64)) -> BigUint {
    let mut reach = usize::MAX;
    let mut acc = BigUint::one();
    for l in 0..dims.len() - 1 {
        reach = reach.min(dims[l]);
        let (count, regions) = units(dims[l + 1]);
        acc *= beta(reach, &vec![regions; count as usize]);
    }
    acc
}

pub fn architecture_bound(query: &BoundQuery) -> Result<BoundReport> {
    let bad = |m: &str| Err(CpwlError::InvalidParameter(m.into()));
    let check_dims = |dims: &[usize]| -> Result<()> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(CpwlError::InvalidParameter("dims need at least two positive entries".into()));
        }
        Ok(())
    };
    let named = |pairs: Vec<(&str, BigUint)>| -> Vec<NamedValue> {
        pairs
            .into_iter()
            .map(|(n, v)| NamedValue {
                name: n.to_string(),
                value: v,
            })
            .collect()
    };
    let (formula, values) = match query {
        BoundQuery::Ridge { d, n } => {
            if *d == 0 {
                return bad("d must be positive");
            }
            let (naive, linear) = beta_simplified(*d, *n, 2);
            (
                "sum_{k<=min(d,N)} C(N,k)",
                named(vec![("regions", beta(*d, &vec![2; *n])), ("cap_naive", naive), ("cap_linear", linear)]),
            )
        }
        BoundQuery::MaxPooling { d, outputs, n } => {
            if *d == 0 || *n == 0 {
                return bad("d and pool size must be positive");
            }
            ("sum_{k<=min(d,d')} C(d',k)(N-1)^k", named(vec![("regions", beta(*d, &vec![*n; *outputs]))]))
        }
        BoundQuery::Ghh { d, n } => {
            if *d == 0 {
                return bad("d must be positive");
            }
            let (naive, linear) = beta_simplified(*d, *n, *d as u64 + 1);
            (
                "sum_{k<=min(d,N)} C(N,k) d^k",
                named(vec![
                    ("regions", beta(*d, &vec![*d as u64 + 1; *n])),
                    ("cap_naive", naive),
                    ("cap_linear", linear),
                ]),
            )
        }
        BoundQuery::GroupsortActivation { d, group_size } => {
            if *group_size == 0 || *d == 0 || d % group_size != 0 {
                return bad("d must be a positive multiple of the group size");
            }
            let g = *group_size as u64;
            let groups = (d / group_size) as u32;
            let exact = factorial(g).pow(groups);
            let g_d = BigUint::from(g).pow(*d as u32);
            let lower = (&g_d >> *d).sqrt();
            (
                "(g!)^(d/g) with (g/2)^(d/2) <= . <= g^d",
                named(vec![("regions", exact), ("envelope_lower", lower), ("envelope_upper", g_d)]),
            )
        }
        BoundQuery::Sort { d } => {
            if *d == 0 {
                return bad("d must be positive");
            }
            ("d!", named(vec![("regions", factorial(*d as u64))]))
        }
        BoundQuery::Pwlu { d, units, grid_m } => {
            if *grid_m < 2 || *d == 0 {
                return bad("grid size must be at least 2 and d positive");
            }
            let per_unit = 2 * ((*grid_m as u64) - 1).pow(2);
            (
                "beta^d_N(2(M-1)^2)",
                named(vec![
                    ("regions", beta(*d, &vec![per_unit; *units])),
                    ("per_unit", BigUint::from(per_unit)),
                ]),
            )
        }
        BoundQuery::Relu { dims } => {
            check_dims(dims)?;
            ("prod_l sum_{k<=min(d_1..d_l)} C(d_{l+1},k)", named(vec![("regions", deep_product(dims, |w| (w as u64, 2)))]))
        }
        BoundQuery::Deepspline { dims, kappa } | BoundQuery::Maxout { dims, kappa } => {
            check_dims(dims)?;
            if *kappa == 0 {
                return bad("kappa must be positive");
            }
            (
                "prod_l sum_{k<=min(d_1..d_l)} C(d_{l+1},k)(kappa-1)^k",
                named(vec![("regions", deep_product(dims, |w| (w as u64, *kappa)))]),
            )
        }
        BoundQuery::Groupsort { dims, group_size } => {
            check_dims(dims)?;
            if *group_size == 0 || dims[1..].iter().any(|w| w % group_size != 0) {
                return bad("every layer width must be a multiple of the group size");
            }
            let gs = factorial(*group_size as u64)
                .to_u64()
                .ok_or_else(|| CpwlError::InvalidParameter("group size too large".into()))?;
            (
                "prod_l sum_{k<=min(d_1..d_l)} C(d_{l+1}/g,k)(g!-1)^k",
                named(vec![("regions", deep_product(dims, |w| ((w / group_size) as u64, gs)))]),
            )
        }
    };
    Ok(BoundReport {
        formula: formula.to_string(),
        query: query.clone(),
        values,
    })
}

pub(crate) mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) mod decimal_vec {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_str_radix(10)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(2, &[3, 3]), n(9));
        assert_eq!(beta(1, &[3, 3]), n(5));
        assert_eq!(beta(2, &[2, 2, 2]), n(7));
        assert_eq!(beta(3, &[4, 5]), n(20));
    }

    #[test]
    fn simplified_caps() {
        assert_eq!(beta_simplified(2, 3, 2), (n(8), n(16)));
        assert_eq!(beta_simplified(3, 2, 1), (n(1), n(1)));
        let (naive, _) = beta_simplified(4, 3, 5);
        assert_eq!(beta(4, &[5, 5, 5]), naive);
    }

    #[test]
    fn projection_cap() {
        assert_eq!(projection_to_convex_cap(2, 1), n(2));
        assert_eq!(projection_to_convex_cap(3, 2), n(7));
        assert_eq!(projection_to_convex_cap(1, 5), n(1));
    }

    #[test]
    fn compositional_examples() {
        let arch = ArchitectureDescriptor::uniform(vec![1, 2, 1], 2, Family::Generic).unwrap();
        let b = compositional_upper(&arch);
        assert_eq!(b.value, n(6));
        assert_eq!(b.factors, vec![n(3), n(2)]);
    }

    #[test]
    fn relu_formula_matches_compositional() {
        let dims = vec![2, 8, 8, 1];
        let arch = ArchitectureDescriptor::uniform(dims.clone(), 2, Family::Relu).unwrap();
        let rep = architecture_bound(&BoundQuery::Relu { dims }).unwrap();
        assert_eq!(rep.value(), &compositional_upper(&arch).value);
        // (1 + 8 + 28)^2 * 2
        assert_eq!(rep.value(), &n(37 * 37 * 2));
    }

    #[test]
    fn alpha_audit_instance() {
        let arch = uniform_descriptor(1, 4, 1, 3, 2).unwrap();
        assert_eq!(alpha_lower_paper(&arch).value, n(512));
        assert_eq!(alpha_lower_constructive(&arch).value, n(125));
        assert_eq!(compositional_upper(&arch).value, n(125));
        let env = corollary_envelope(1, 4, 1, 3, 2).unwrap();
        assert_eq!(env.lower_paper, n(512));
        assert_eq!(env.upper, n(512));
    }

    #[test]
    fn single_unit_layers() {
        let arch = ArchitectureDescriptor::new(vec![2, 1, 1], vec![vec![3], vec![5]], Family::Deepspline).unwrap();
        assert_eq!(alpha_lower_paper(&arch).value, n(15));
        assert_eq!(alpha_lower_constructive(&arch).value, n(15));
    }

    #[test]
    fn envelope_cases() {
        let env = corollary_envelope(2, 2, 2, 1, 3).unwrap();
        assert_eq!(env.lower_paper, n(9));
        assert_eq!(env.upper, n(36));
        // an affine network has one region; the closed-form lower value is not 1 here
        let env = corollary_envelope(2, 5, 3, 2, 1).unwrap();
        assert_eq!(env.lower_paper, n(16));
        assert_eq!(env.upper, n(5u64.pow(4)));
        assert!(corollary_envelope(3, 2, 1, 1, 2).is_err());
        assert!(!corollary_envelope(1, 2, 3, 1, 2).unwrap().warnings.is_empty());
    }

    #[test]
    fn worked_formulas() {
        let gs = architecture_bound(&BoundQuery::GroupsortActivation { d: 4, group_size: 2 }).unwrap();
        assert_eq!(gs.value(), &n(4));
        assert_eq!(gs.get("envelope_lower"), Some(&n(1)));
        assert_eq!(gs.get("envelope_upper"), Some(&n(16)));
        assert_eq!(architecture_bound(&BoundQuery::Sort { d: 3 }).unwrap().value(), &n(6));
        let p = architecture_bound(&BoundQuery::Pwlu { d: 2, units: 1, grid_m: 4 }).unwrap();
        assert_eq!(p.value(), &n(18));
        assert_eq!(architecture_bound(&BoundQuery::Ridge { d: 2, n: 3 }).unwrap().value(), &n(7));
        assert!(architecture_bound(&BoundQuery::GroupsortActivation { d: 5, group_size: 2 }).is_err());
    }

    #[test]
    fn wide_layers_fall_back_to_heuristic() {
        let arch = ArchitectureDescriptor::uniform(vec![2, 14, 2], 3, Family::Deepspline).unwrap();
        let a = alpha_lower_constructive(&arch);
        assert!(a.heuristic);
        assert!(a.value <= compositional_upper(&arch).value);
    }

    #[test]
    fn report_serializes_decimals() {
        let rep = architecture_bound(&BoundQuery::Relu { dims: vec![4, 40, 40, 40, 40, 1] }).unwrap();
        let text = serde_json::to_string(&rep).unwrap();
        let back: BoundReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }

    proptest! {
        #[test]
        fn beta_symmetric_and_monotone(ns in proptest::collection::vec(1u64..6, 0..6), d in 1usize..5, i in 0usize..6) {
            let mut rev = ns.clone();
            rev.reverse();
            prop_assert_eq!(beta(d, &ns), beta(d, &rev));
            prop_assert!(beta(d, &ns) <= beta(d + 1, &ns));
            if !ns.is_empty() {
                let mut bigger = ns.clone();
                bigger[i % ns.len()] += 1;
                prop_assert!(beta(d, &ns) <= beta(d, &bigger));
            }
            if ns.len() <= d {
                prop_assert_eq!(beta(d, &ns), ns.iter().map(|&v| BigUint::from(v)).product::<BigUint>());
            }
        }

        #[test]
        fn hyperplane_specialization(d in 1usize..9, count in 0usize..9) {
            let expected: BigUint = (0..=d.min(count) as u64).map(|k| binomial(count as u64, k)).sum();
            prop_assert_eq!(beta(d, &vec![2; count]), expected);
        }

        #[test]
        fn constructive_alpha_below_upper(
            dims in proptest::collection::vec(1usize..6, 2..5),
            seed in proptest::collection::vec(1u64..5, 40),
        ) {
            let mut it = seed.iter().cycle();
            let kappas: Vec<Vec<u64>> = dims[1..].iter().map(|&w| (0..w).map(|_| *it.next().unwrap()).collect()).collect();
            let arch = ArchitectureDescriptor::new(dims, kappas, Family::Deepspline).unwrap();
            prop_assert!(alpha_lower_constructive(&arch).value <= compositional_upper(&arch).value);
        }

        #[test]
        fn envelope_dominates_uniform_upper(d_in in 1usize..3, extra in 0usize..3, d_out in 1usize..4, depth in 1usize..4, kappa in 1u64..4) {
            let width = d_in + extra;
            let arch = uniform_descriptor(d_in, width, d_out, depth, kappa).unwrap();
            let env = corollary_envelope(d_in, width, d_out, depth, kappa).unwrap();
            prop_assert!(env.upper >= compositional_upper(&arch).value);
        }
    }
}
