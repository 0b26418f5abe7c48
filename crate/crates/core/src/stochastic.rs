//! Random networks at initialization: sampling, Monte Carlo knot densities
//! and length expansion, and the closed-form density bounds they are
//! compared against.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpwl::ScalarCpwl;
use crate::error::{CpwlError, Result};
use crate::network::{AffineMap, LayerSpec, NetworkSpec};
use crate::paths::{count_knots_compiled, image_length_compiled, image_path, PolygonalPath};
use crate::rng::{stream, trial_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dist {
    Normal,
    /// Centered uniform with the given standard deviation.
    Uniform,
}

impl Dist {
    fn sample(self, sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Dist::Normal => sigma * rng.sample::<f64, _>(StandardNormal),
            Dist::Uniform => {
                let half = 3f64.sqrt() * sigma;
                Uniform::new_inclusive(-half, half).sample(rng)
            }
        }
    }

    /// `sup_t ρ(t)` of the centered distribution with deviation `sigma`.
    pub fn sup_density(self, sigma: f64) -> f64 {
        match self {
            Dist::Normal => 1.0 / (sigma * (2.0 * PI).sqrt()),
            Dist::Uniform => 1.0 / (2.0 * 3f64.sqrt() * sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FanIn {
    None,
    /// Weight variance `2 σ_w² / fan_in`.
    He,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub weight: Dist,
    pub sigma_w: f64,
    pub bias: Dist,
    pub sigma_b: f64,
    pub fan_in: FanIn,
    pub seed: u64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            weight: Dist::Normal,
            sigma_w: 1.0,
            bias: Dist::Normal,
            sigma_b: 1.0,
            fan_in: FanIn::None,
            seed: 0,
        }
    }
}

impl InitSpec {
    pub fn normal(sigma_w: f64, sigma_b: f64, seed: u64) -> Self {
        InitSpec {
            sigma_w,
            sigma_b,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_w > 0.0 && self.sigma_b > 0.0 && self.sigma_w.is_finite() && self.sigma_b.is_finite()) {
            return Err(CpwlError::InvalidParameter("σ_w and σ_b must be positive".into()));
        }
        Ok(())
    }

    /// Weight deviation of a layer with `fan_in` inputs.
    pub fn weight_sigma(&self, fan_in: usize) -> f64 {
        match self.fan_in {
            FanIn::None => self.sigma_w,
            FanIn::He => self.sigma_w * (2.0 / fan_in as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Leaky { negative_slope: f64 },
    Abs,
    /// Random pointwise spline with `kappa - 1` knots.
    Deepspline { kappa: usize },
    Maxout { rank: usize },
    Groupsort { group_size: usize },
}

impl Activation {
    pub fn label(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Leaky { .. } => "leaky",
            Activation::Abs => "abs",
            Activation::Deepspline { .. } => "deepspline",
            Activation::Maxout { .. } => "maxout",
            Activation::Groupsort { .. } => "groupsort",
        }
    }

    /// Region count of one unit (per group for GroupSort).
    pub fn kappa(&self) -> usize {
        match self {
            Activation::Relu | Activation::Leaky { .. } | Activation::Abs => 2,
            Activation::Deepspline { kappa } => *kappa,
            Activation::Maxout { rank } => *rank,
            Activation::Groupsort { group_size } => (1..=*group_size).product(),
        }
    }
}

/// Layer widths `dims[0..=L]` with every layer activated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomArchitecture {
    pub dims: Vec<usize>,
    pub activation: Activation,
}

impl RandomArchitecture {
    pub fn new(dims: Vec<usize>, activation: Activation) -> Result<Self> {
        let arch = RandomArchitecture { dims, activation };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(CpwlError::InvalidParameter("need positive input and layer widths".into()));
        }
        match self.activation {
            Activation::Deepspline { kappa: 0 } | Activation::Maxout { rank: 0 } => {
                Err(CpwlError::InvalidParameter("activation complexity must be at least 1".into()))
            }
            Activation::Groupsort { group_size } => {
                if group_size == 0 || self.dims[1..].iter().any(|w| w % group_size != 0) {
                    Err(CpwlError::InvalidParameter("group size must divide every width".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// The first `depth` layers.
    pub fn truncated(&self, depth: usize) -> Self {
        RandomArchitecture {
            dims: self.dims[..=depth].to_vec(),
            activation: self.activation.clone(),
        }
    }

    /// Index in the sampled layer list just past each hidden layer.
    pub fn block_ends(&self) -> Vec<usize> {
        let per_block = match self.activation {
            Activation::Maxout { .. } => 1,
            Activation::Deepspline { kappa: 1 } => 1,
            _ => 2,
        };
        (1..=self.depth()).map(|l| l * per_block).collect()
    }
}

fn random_spline(kappa: usize, init: &InitSpec, rng: &mut ChaCha8Rng) -> Result<ScalarCpwl> {
    let mut knots: Vec<f64> = (1..kappa).map(|_| init.bias.sample(init.sigma_b, rng)).collect();
    knots.sort_by(f64::total_cmp);
    let slopes = (0..kappa).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    ScalarCpwl::new(knots, slopes, 0.0)
}

/// Deterministic in `seed`; layer `l` draws from its own stream so a network
/// of depth `L` is a prefix of the one of depth `L + 1`.
pub fn sample_network(arch: &RandomArchitecture, init: &InitSpec, seed: u64) -> Result<NetworkSpec> {
    arch.validate()?;
    init.validate()?;
    let mut layers = Vec::new();
    for l in 1..=arch.depth() {
        let (fan_in, width) = (arch.dims[l - 1], arch.dims[l]);
        let sigma = init.weight_sigma(fan_in);
        let mut rng = stream(seed, l as u64);
        let affine = |rng: &mut ChaCha8Rng| -> AffineMap {
            let matrix = (0..width)
                .map(|_| (0..fan_in).map(|_| init.weight.sample(sigma, rng)).collect())
                .collect();
            let offset = (0..width).map(|_| init.bias.sample(init.sigma_b, rng)).collect();
            AffineMap { matrix, offset }
        };
        match &arch.activation {
            Activation::Maxout { rank } => {
                let maps: Vec<AffineMap> = (0..*rank).map(|_| affine(&mut rng)).collect();
                let weights = (0..width).map(|u| maps.iter().map(|m| m.matrix[u].clone()).collect()).collect();
                let offsets = (0..width).map(|u| maps.iter().map(|m| m.offset[u]).collect()).collect();
                layers.push(LayerSpec::Maxout {
                    rank: *rank,
                    weights,
                    offsets,
                });
            }
            act => {
                layers.push(LayerSpec::Affine(affine(&mut rng)));
                let units = match act {
                    Activation::Relu => vec![ScalarCpwl::relu(); width],
                    Activation::Leaky { negative_slope } => vec![ScalarCpwl::leaky_relu(*negative_slope); width],
                    Activation::Abs => vec![ScalarCpwl::abs(); width],
                    Activation::Deepspline { kappa: 1 } => continue,
                    Activation::Deepspline { kappa } => (0..width)
                        .map(|_| random_spline(*kappa, init, &mut rng))
                        .collect::<Result<_>>()?,
                    Activation::Groupsort { group_size } => {
                        layers.push(LayerSpec::Groupsort {
                            group_size: *group_size,
                        });
                        continue;
                    }
                    Activation::Maxout { .. } => unreachable!(),
                };
                layers.push(LayerSpec::Pointwise { units });
            }
        }
    }
    Ok(NetworkSpec::new(arch.input_dim(), layers)?.with_metadata(format!("random {}", arch.activation.label())))
}

/// Knot-density bound of a single random unit (or GroupSort layer of
/// `width` inputs) whose weights have deviation `sigma_w`.
pub fn unit_density_bound(activation: &Activation, width: usize, sigma_w: f64, init: &InitSpec) -> Result<f64> {
    // E|w·u| for a unit direction u
    let mean_abs = match init.weight {
        Dist::Normal => sigma_w * (2.0 / PI).sqrt(),
        Dist::Uniform => sigma_w,
    };
    let rho = init.bias.sup_density(init.sigma_b);
    let base = mean_abs * rho;
    Ok(match activation {
        Activation::Relu | Activation::Leaky { .. } | Activation::Abs => base,
        Activation::Maxout { rank } => {
            let pairs = (rank * rank.saturating_sub(1) / 2) as f64;
            SQRT_2 * pairs * base
        }
        Activation::Groupsort { group_size } => SQRT_2 / 2.0 * width as f64 * (*group_size as f64 - 1.0) * base,
        Activation::Deepspline { .. } => {
            return Err(CpwlError::Unsupported("no closed-form density bound for random splines".into()))
        }
    })
}

/// Both forms of the deep density bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBound {
    /// `λ0 W (1 - D0^L) / (1 - D0)`, or `λ0 W L` when `D0 = 1`.
    pub geometric: f64,
    /// `max(D0, 1) λ0 W L`.
    pub linear: f64,
}

pub fn compositional_density_bound(lambda0: f64, d0: f64, width: usize, depth: usize) -> Result<DensityBound> {
    if !(lambda0 >= 0.0 && d0 >= 0.0) {
        return Err(CpwlError::InvalidParameter("λ0 and D0 must be non-negative".into()));
    }
    let (w, l) = (width as f64, depth as f64);
    let series = if (d0 - 1.0).abs() < 1e-12 {
        l
    } else {
        (1.0 - d0.powi(depth as i32)) / (1.0 - d0)
    };
    Ok(DensityBound {
        geometric: lambda0 * w * series,
        linear: d0.max(1.0) * lambda0 * w * l,
    })
}

/// Sum of `values` by recursive halving; the grouping depends only on the
/// length, so the result is independent of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub trials: usize,
    pub values: Vec<f64>,
    pub bound: Option<f64>,
}

impl McEstimate {
    pub fn from_values(values: Vec<f64>, bound: Option<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(CpwlError::InvalidParameter("need at least two trials".into()));
        }
        let mean = pairwise_sum(&values) / n as f64;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Ok(McEstimate {
            mean,
            se: (var / n as f64).sqrt(),
            trials: n,
            values,
            bound,
        })
    }

    /// `mean ≤ bound + 3 SE`, when a bound is attached.
    pub fn passes(&self) -> Option<bool> {
        self.bound.map(|b| self.mean <= b + 3.0 * self.se)
    }
}

/// One row of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub family: String,
    pub width: usize,
    pub depth: usize,
    pub kappa: usize,
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub trials: usize,
    pub mean: f64,
    pub se: f64,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

impl ExperimentRow {
    pub fn new(arch: &RandomArchitecture, init: &InitSpec, est: &McEstimate) -> Self {
        ExperimentRow {
            family: arch.activation.label().into(),
            width: arch.dims[1..].iter().copied().max().unwrap_or(0),
            depth: arch.depth(),
            kappa: arch.activation.kappa(),
            sigma_w: init.sigma_w,
            sigma_b: init.sigma_b,
            trials: est.trials,
            mean: est.mean,
            se: est.se,
            bound: est.bound,
            pass: est.passes(),
        }
    }

    pub fn csv_header() -> &'static str {
        "family,W,L,kappa,sigma_w,sigma_b,trials,mean,SE,bound,pass"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.width,
            self.depth,
            self.kappa,
            self.sigma_w,
            self.sigma_b,
            self.trials,
            self.mean,
            self.se,
            opt(self.bound.map(|b| b.to_string())),
            opt(self.pass.map(|p| if p { "PASS".into() } else { "FAIL".into() })),
        )
    }
}

/// Paths the densities are measured along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProbePath {
    Fixed { path: PolygonalPath },
    /// Segment of the given length centered at the origin with a uniformly
    /// random direction.
    Random { length: f64 },
}

impl ProbePath {
    /// Segment of length `10 σ_b / σ_w`.
    pub fn default_for(init: &InitSpec) -> Self {
        ProbePath::Random {
            length: 10.0 * init.sigma_b / init.sigma_w,
        }
    }

    pub fn sample(&self, dim: usize, rng: &mut ChaCha8Rng) -> Result<PolygonalPath> {
        match self {
            ProbePath::Fixed { path } => {
                if path.dim() != dim {
                    return Err(CpwlError::DimensionMismatch {
                        layer: 0,
                        expected: dim,
                        got: path.dim(),
                    });
                }
                Ok(path.clone())
            }
            ProbePath::Random { length } => {
                let u = random_direction(dim, rng);
                let h = length / 2.0;
                PolygonalPath::segment(u.iter().map(|x| -h * x).collect(), u.iter().map(|x| h * x).collect())
            }
        }
    }
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

const PATH_STREAM: u64 = 1 << 32;
const POINT_STREAM: u64 = (1 << 32) + 1;

fn run_trials<F>(trials: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<Option<f64>> + Sync + Send,
{
    let out: Vec<Option<f64>> = (0..trials).into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 100 {
        return Err(CpwlError::InvalidParameter("at least 100 trials required".into()));
    }
    Ok(())
}

/// Bound attached to a single-layer density estimate.
fn single_layer_bound(arch: &RandomArchitecture, init: &InitSpec) -> Option<f64> {
    if arch.depth() != 1 {
        return None;
    }
    let sigma = init.weight_sigma(arch.dims[0]);
    let width = arch.dims[1];
    let unit = unit_density_bound(&arch.activation, width, sigma, init).ok()?;
    Some(match arch.activation {
        Activation::Groupsort { .. } => unit,
        _ => unit * width as f64,
    })
}

/// Mean knot density of random networks along probe paths.
pub fn mc_knot_density(arch: &RandomArchitecture, init: &InitSpec, probe: &ProbePath, trials: usize) -> Result<McEstimate> {
    check_trials(trials)?;
    let values = run_trials(trials, |i| {
        let seed = trial_seed(init.seed, i as u64);
        let net = sample_network(arch, init, seed)?.compile::<f64>()?;
        let path = probe.sample(arch.input_dim(), &mut stream(seed, PATH_STREAM))?;
        Ok(Some(count_knots_compiled(&net, &path)?.density))
    })?;
    McEstimate::from_values(values, single_layer_bound(arch, init))
}

/// Norm of `D F_ℓ(x) u` for every hidden-layer prefix `F_ℓ`.
pub fn directional_expansions(net: &NetworkSpec, block_ends: &[usize], x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let piece = net.eval_jacobian(x, u)?;
    Ok(block_ends
        .iter()
        .map(|&e| {
            let m = &piece.prefixes[e - 1].0;
            m.iter()
                .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// `D̂0`: mean directional-derivative norm over random points on the probe
/// path, random unit directions and all hidden-layer prefixes.
pub fn estimate_directional_expansion(arch: &RandomArchitecture, init: &InitSpec, probe: &ProbePath, trials: usize) -> Result<McEstimate> {
    check_trials(trials)?;
    let ends = arch.block_ends();
    let values = run_trials(trials, |i| {
        let seed = trial_seed(init.seed, i as u64);
        let net = sample_network(arch, init, seed)?;
        let mut rng = stream(seed, POINT_STREAM);
        let path = probe.sample(arch.input_dim(), &mut stream(seed, PATH_STREAM))?;
        let x = path.point_at(rng.gen_range(0.0..path.length()));
        let u = random_direction(arch.input_dim(), &mut rng);
        let norms = directional_expansions(&net, &ends, &x, &u)?;
        Ok(Some(pairwise_sum(&norms) / norms.len() as f64))
    })?;
    McEstimate::from_values(values, None)
}

/// `λ̂0`: mean per-unit knot density of each hidden layer along the image of
/// the probe path under the preceding layers.
pub fn estimate_unit_density(arch: &RandomArchitecture, init: &InitSpec, probe: &ProbePath, trials: usize) -> Result<McEstimate> {
    check_trials(trials)?;
    let ends = arch.block_ends();
    let values = run_trials(trials, |i| {
        let seed = trial_seed(init.seed, i as u64);
        let net = sample_network(arch, init, seed)?;
        let path = probe.sample(arch.input_dim(), &mut stream(seed, PATH_STREAM))?;
        let mut densities = Vec::with_capacity(ends.len());
        let mut start = 0;
        let mut image = Some(path);
        for (l, &end) in ends.iter().enumerate() {
            let Some(current) = image.take() else { break };
            let block = NetworkSpec::new(arch.dims[l], net.layers[start..end].to_vec())?;
            let report = count_knots_compiled(&block.compile::<f64>()?, &current)?;
            densities.push(report.density / arch.dims[l + 1] as f64);
            image = image_path(&block, &current)?;
            start = end;
        }
        Ok((!densities.is_empty()).then(|| pairwise_sum(&densities) / densities.len() as f64))
    })?;
    McEstimate::from_values(values, None)
}

/// Mean length of `f ∘ γ`.
pub fn mc_image_length(arch: &RandomArchitecture, init: &InitSpec, probe: &ProbePath, trials: usize) -> Result<McEstimate> {
    check_trials(trials)?;
    let values = run_trials(trials, |i| {
        let seed = trial_seed(init.seed, i as u64);
        let net = sample_network(arch, init, seed)?.compile::<f64>()?;
        let path = probe.sample(arch.input_dim(), &mut stream(seed, PATH_STREAM))?;
        Ok(Some(image_length_compiled(&net, &path)?))
    })?;
    McEstimate::from_values(values, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu_unit(d: usize) -> RandomArchitecture {
        RandomArchitecture::new(vec![d, 1], Activation::Relu).unwrap()
    }

    #[test]
    fn sampling_is_repeatable() {
        let arch = RandomArchitecture::new(vec![3, 4, 4], Activation::Abs).unwrap();
        let init = InitSpec::normal(1.0, 1.0, 9);
        assert_eq!(sample_network(&arch, &init, 5).unwrap(), sample_network(&arch, &init, 5).unwrap());
        assert_ne!(sample_network(&arch, &init, 5).unwrap(), sample_network(&arch, &init, 6).unwrap());
    }

    #[test]
    fn deeper_networks_extend_shallower_ones() {
        let arch = RandomArchitecture::new(vec![2, 3, 3, 3], Activation::Abs).unwrap();
        let init = InitSpec::normal(1.0, 1.0, 0);
        let deep = sample_network(&arch, &init, 11).unwrap();
        let shallow = sample_network(&arch.truncated(2), &init, 11).unwrap();
        assert_eq!(&deep.layers[..4], &shallow.layers[..]);
    }

    #[test]
    fn affine_splines_give_affine_layers() {
        let arch = RandomArchitecture::new(vec![2, 3], Activation::Deepspline { kappa: 1 }).unwrap();
        let net = sample_network(&arch, &InitSpec::default(), 1).unwrap();
        assert!(net.layers.iter().all(LayerSpec::is_affine));
        let est = mc_knot_density(&arch, &InitSpec::default(), &ProbePath::Random { length: 10.0 }, 100).unwrap();
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn weight_variance() {
        let arch = RandomArchitecture::new(vec![100, 100], Activation::Relu).unwrap();
        let init = InitSpec::normal(1.5, 1.0, 3);
        let net = sample_network(&arch, &init, 0).unwrap();
        let LayerSpec::Affine(map) = &net.layers[0] else { panic!() };
        let w: Vec<f64> = map.matrix.iter().flatten().copied().collect();
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        assert!((var / 2.25 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn closed_form_unit_bounds() {
        let init = InitSpec::default();
        let relu = unit_density_bound(&Activation::Relu, 1, 1.0, &init).unwrap();
        assert!((relu - 1.0 / PI).abs() < 1e-15);
        let maxout = unit_density_bound(&Activation::Maxout { rank: 3 }, 1, 1.0, &init).unwrap();
        assert!((maxout - 3.0 * SQRT_2 / PI).abs() < 1e-14);
        let gs = unit_density_bound(&Activation::Groupsort { group_size: 2 }, 4, 1.0, &init).unwrap();
        assert!((gs - 2.0 * SQRT_2 / PI).abs() < 1e-14);
        assert!((Dist::Uniform.sup_density(2.0) - 1.0 / (4.0 * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn deep_bound_forms() {
        let b = compositional_density_bound(0.5, 1.0, 4, 3).unwrap();
        assert!((b.geometric - 6.0).abs() < 1e-12 && (b.linear - 6.0).abs() < 1e-12);
        let b = compositional_density_bound(0.5, 0.5, 4, 200).unwrap();
        assert!((b.geometric - 4.0).abs() < 1e-12);
        assert!((b.linear - 400.0).abs() < 1e-9);
        let b = compositional_density_bound(0.3, 2.0, 5, 1).unwrap();
        assert!((b.geometric - 1.5).abs() < 1e-12);
    }

    #[test]
    fn expansion_of_simple_maps() {
        let ident = NetworkSpec::new(2, vec![LayerSpec::Affine(AffineMap::identity(2))]).unwrap();
        let n = directional_expansions(&ident, &[1], &[0.3, 0.1], &[0.6, 0.8]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15);
        let double = NetworkSpec::new(2, vec![LayerSpec::Affine(AffineMap::linear(vec![vec![2.0, 0.0], vec![0.0, 2.0]]))]).unwrap();
        let n = directional_expansions(&double, &[1], &[0.3, 0.1], &[0.6, 0.8]).unwrap();
        assert!((n[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn estimates_are_deterministic_and_bounded() {
        let init = InitSpec::normal(1.0, 1.0, 42);
        let probe = ProbePath::Random { length: 10.0 };
        let a = mc_knot_density(&relu_unit(4), &init, &probe, 400).unwrap();
        let b = mc_knot_density(&relu_unit(4), &init, &probe, 400).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.passes(), Some(true));
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
    }
}
