//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::{PI, SQRT_2};
use std::process::Command;
use std::time::Instant;

use cpwl_core::bounds::{
    alpha_lower_constructive, alpha_lower_paper, architecture_bound, beta, compositional_upper, uniform_descriptor,
    ArchitectureDescriptor, BoundQuery, Family,
};
use cpwl_core::constructions::{general_position_partitions, sawtooth, sawtooth_composition, sawtooth_network};
use cpwl_core::geometry::{count_report, enumerate_regions, Arithmetic, Domain, EnumerationConfig};
use cpwl_core::network::{AffineMap, LayerSpec, NetworkSpec};
use cpwl_core::oracle::{grid_region_count, pieces_well_separated};
use cpwl_core::paths::{check_composition_bound, check_subadditivity, PolygonalPath};
use cpwl_core::rng::stream;
use cpwl_core::stochastic::{
    estimate_directional_expansion, estimate_unit_density, mc_knot_density, sample_network, Activation,
    ExperimentRow, FanIn, InitSpec, McEstimate, ProbePath, RandomArchitecture,
};
use num_bigint::BigUint;
use rand::Rng;
use statrs::function::erf::erf;

type Outcome = Result<String, String>;

fn cells(net: &NetworkSpec, domain: &Domain, arithmetic: Arithmetic) -> Result<usize, String> {
    let cfg = EnumerationConfig {
        arithmetic,
        ..EnumerationConfig::default()
    };
    enumerate_regions(net, domain, &cfg).map(|rs| rs.cell_count()).map_err(|e| e.to_string())
}

fn float_cells(net: &NetworkSpec) -> Result<usize, String> {
    cells(net, &Domain::default(), Arithmetic::Float)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// C(n, k) by Pascal's rule.
fn pascal(n: usize, k: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row.get(k).copied().unwrap_or(0)
}

fn beta_sharpness() -> Outcome {
    let b2 = beta(2, &[3, 3]);
    let b1 = beta(1, &[3, 3]);
    ensure(b2 == BigUint::from(9u32) && b1 == BigUint::from(5u32), || format!("beta gave {b2} and {b1}"))?;
    let c2 = float_cells(&general_position_partitions(2, &[3, 3], 1).map_err(|e| e.to_string())?)?;
    let c1 = float_cells(&general_position_partitions(1, &[3, 3], 1).map_err(|e| e.to_string())?)?;
    ensure(c2 == 9 && c1 == 5, || format!("enumerated {c2} and {c1} cells"))?;
    Ok(format!("beta = 9, 5; cells = {c2}, {c1}"))
}

fn hyperplane_specialization() -> Outcome {
    let mut checked = 0;
    for d in 1..=8 {
        for n in 0..=8 {
            let expected: u128 = (0..=d.min(n)).map(|k| pascal(n, k)).sum();
            let got = beta(d, &vec![2; n]);
            ensure(got == BigUint::from(expected), || format!("beta({d}, [2]x{n}) = {got}, expected {expected}"))?;
            checked += 1;
        }
    }
    let lines = float_cells(&general_position_partitions(2, &[2, 2, 2], 3).map_err(|e| e.to_string())?)?;
    ensure(lines == 7, || format!("3 lines gave {lines} cells"))?;
    Ok(format!("{checked} (d, N) pairs; 3 lines -> {lines} cells"))
}

fn sawtooth_laws() -> Outcome {
    for p in 1..=16 {
        let r = sawtooth(p).map_err(|e| e.to_string())?.num_regions();
        ensure(r == p, || format!("sawtooth({p}) has {r} regions"))?;
    }
    let mut pairs = 0;
    for p in 2..=6 {
        for q in 2..=6 {
            let net = sawtooth_composition(q, p).map_err(|e| e.to_string())?;
            let c = cells(&net, &Domain::default(), Arithmetic::Exact)?;
            ensure(c == p * q, || format!("sw_{p} after sw_{q}: {c} cells"))?;
            pairs += 1;
        }
    }
    Ok(format!("regions(sw_p) = p for p <= 16; {pairs} exact compositions = p*q"))
}

fn constructive_descriptors() -> Vec<ArchitectureDescriptor> {
    let mut out = Vec::new();
    for (d_in, d_out) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        for w in 2..=6 {
            for depth in 1..=4 {
                for kappa in 2..=3 {
                    let mut dims = vec![d_in];
                    dims.extend(std::iter::repeat(w).take(depth - 1));
                    dims.push(d_out);
                    let arch = ArchitectureDescriptor::uniform(dims, kappa, Family::Deepspline).unwrap();
                    // keep the 2D enumerations small
                    let limit = if arch.d_star() == 1 { 20_000u32 } else { 3_000 };
                    if alpha_lower_constructive(&arch).value <= BigUint::from(limit) {
                        out.push(arch);
                    }
                }
            }
        }
    }
    out
}

fn constructive_bound() -> Outcome {
    let archs = constructive_descriptors();
    ensure(archs.len() >= 30, || format!("only {} descriptors", archs.len()))?;
    for arch in &archs {
        let alpha = alpha_lower_constructive(arch);
        let upper = compositional_upper(arch).value;
        let net = sawtooth_network(arch, None).map_err(|e| e.to_string())?;
        let c = float_cells(&net)?;
        ensure(BigUint::from(c) == alpha.value, || {
            format!("dims {:?} kappa {:?}: {c} cells, alpha {}", arch.dims, arch.kappas[0][0], alpha.value)
        })?;
        ensure(alpha.value <= upper, || format!("dims {:?}: alpha {} > upper {upper}", arch.dims, alpha.value))?;
    }
    let two_d = archs.iter().filter(|a| a.d_star() == 2).count();
    Ok(format!("{} descriptors ({two_d} with d* = 2): cells = alpha <= upper", archs.len()))
}

fn bound_audit() -> Outcome {
    let arch = uniform_descriptor(1, 4, 1, 3, 2).map_err(|e| e.to_string())?;
    let published = alpha_lower_paper(&arch).value;
    let upper = compositional_upper(&arch).value;
    let constructive = alpha_lower_constructive(&arch).value;
    ensure(
        published == BigUint::from(512u32) && upper == BigUint::from(125u32) && constructive == BigUint::from(125u32),
        || format!("published {published}, upper {upper}, constructive {constructive}"),
    )?;
    let out = Command::new(env!("CARGO_BIN_EXE_cpwl"))
        .arg("audit")
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.success(), || format!("audit exited with {}", out.status))?;
    let line = text
        .lines()
        .find(|l| l.starts_with("AUDIT: alpha_lower_paper 512 > compositional_upper 125"))
        .ok_or_else(|| format!("audit output lacks the finding:\n{text}"))?;
    Ok(format!("512 > 125 = constructive; cli: \"{}\"", line.split(';').next().unwrap()))
}

fn dominance_family(name: &str, trials: u64) -> Result<usize, String> {
    let init = InitSpec::normal(1.0, 1.0, 0);
    let mut worst = 0usize;
    for i in 0..trials {
        let mut rng = stream(600 + i, 0);
        let (w1, w2) = (rng.gen_range(1..=5usize), rng.gen_range(1..=5usize));
        let (net, query) = match name {
            "relu" => {
                let arch = RandomArchitecture::new(vec![2, w1, w2, 1], Activation::Relu).unwrap();
                (sample_network(&arch, &init, i), BoundQuery::Relu { dims: arch.dims.clone() })
            }
            "deepspline" => {
                let kappa = rng.gen_range(2..=4usize);
                let arch = RandomArchitecture::new(vec![2, w1, w2, 1], Activation::Deepspline { kappa }).unwrap();
                let q = BoundQuery::Deepspline {
                    dims: arch.dims.clone(),
                    kappa: kappa as u64,
                };
                (sample_network(&arch, &init, i), q)
            }
            "maxout" => {
                let rank = rng.gen_range(2..=3usize);
                let arch = RandomArchitecture::new(vec![2, w1, w2, 1], Activation::Maxout { rank }).unwrap();
                let q = BoundQuery::Maxout {
                    dims: arch.dims.clone(),
                    kappa: rank as u64,
                };
                (sample_network(&arch, &init, i), q)
            }
            _ => {
                let (w1, w2) = (2 * rng.gen_range(1..=2usize), 2 * rng.gen_range(1..=2usize));
                let arch = RandomArchitecture::new(vec![2, w1, w2], Activation::Groupsort { group_size: 2 }).unwrap();
                let net = sample_network(&arch, &init, i).map(|mut n| {
                    let readout: Vec<f64> = (0..w2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    n.layers.push(LayerSpec::Affine(AffineMap::linear(vec![readout])));
                    NetworkSpec::new(2, n.layers).unwrap()
                });
                let q = BoundQuery::Groupsort {
                    dims: arch.dims.clone(),
                    group_size: 2,
                };
                (net, q)
            }
        };
        let net = net.map_err(|e| e.to_string())?;
        let bound = architecture_bound(&query).map_err(|e| e.to_string())?.value().clone();
        let c = float_cells(&net)?;
        ensure(BigUint::from(c) <= bound, || format!("{name} trial {i}: {c} cells > bound {bound}"))?;
        worst = worst.max(c);
    }
    Ok(worst)
}

fn upper_dominance() -> Outcome {
    let mut detail = Vec::new();
    for name in ["relu", "deepspline", "maxout", "groupsort"] {
        let worst = dominance_family(name, 100)?;
        detail.push(format!("{name} max {worst}"));
    }
    Ok(format!("400 networks within their formulas ({})", detail.join(", ")))
}

fn pwlu_unit(m: usize) -> NetworkSpec {
    let mut rng = stream(77, 0);
    let values = vec![(0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect()];
    NetworkSpec::new(
        2,
        vec![LayerSpec::Pwlu2d {
            grid_m: m,
            values,
            readin: AffineMap::identity(2),
        }],
    )
    .unwrap()
}

fn special_counts() -> Outcome {
    let sort = NetworkSpec::new(3, vec![LayerSpec::Groupsort { group_size: 3 }]).unwrap();
    let sort_cells = float_cells(&sort)?;
    ensure(sort_cells == 6, || format!("sort d=3: {sort_cells} cells"))?;

    let gs = NetworkSpec::new(4, vec![LayerSpec::Groupsort { group_size: 2 }]).unwrap();
    let cfg = EnumerationConfig::default();
    let rs = enumerate_regions(&gs, &Domain::default(), &cfg).map_err(|e| e.to_string())?;
    let report = count_report(&rs, &gs, &cfg).map_err(|e| e.to_string())?;
    let formula = architecture_bound(&BoundQuery::GroupsortActivation { d: 4, group_size: 2 }).map_err(|e| e.to_string())?;
    let (lo, hi) = (formula.get("envelope_lower").unwrap(), formula.get("envelope_upper").unwrap());
    let pieces = BigUint::from(report.distinct_piece_count);
    ensure(
        report.distinct_piece_count == 4 && *lo == BigUint::from(1u32) && *hi == BigUint::from(16u32) && *lo <= pieces && pieces <= *hi,
        || format!("groupsort: {} pieces, envelope {lo}..{hi}", report.distinct_piece_count),
    )?;

    let pwlu = pwlu_unit(4);
    let pwlu_cells = cells(&pwlu, &Domain::square(-1.0, 1.0, 2), Arithmetic::Float)?;
    ensure(pwlu_cells == 18, || format!("PWLU M=4: {pwlu_cells} cells"))?;
    Ok(format!(
        "sort {sort_cells} cells; groupsort {} pieces in [{lo}, {hi}]; PWLU {pwlu_cells} cells",
        report.distinct_piece_count
    ))
}

fn oracle_agreement() -> Outcome {
    let init = InitSpec::normal(1.0, 0.5, 0);
    let domain = Domain::square(-1.0, 1.0, 2);
    let cfg = EnumerationConfig::default();
    let (mut equal, mut bounded) = (0, 0);
    for i in 0..20u64 {
        let w = 3 + (i % 3) as usize;
        let activation = if i % 2 == 0 { Activation::Relu } else { Activation::Abs };
        let arch = RandomArchitecture::new(vec![2, w, w, 1], activation).unwrap();
        let net = sample_network(&arch, &init, 800 + i).map_err(|e| e.to_string())?;
        let rs = enumerate_regions(&net, &domain, &cfg).map_err(|e| e.to_string())?;
        let report = count_report(&rs, &net, &cfg).map_err(|e| e.to_string())?;
        let grid = grid_region_count(&net, &[-1.0, -1.0], &[1.0, 1.0], 512).map_err(|e| e.to_string())?;
        let separated = pieces_well_separated(&rs, &report.piece_labels, 512, 2.0).map_err(|e| e.to_string())?;
        if separated {
            ensure(grid.distinct == report.distinct_piece_count, || {
                format!("network {i}: oracle {} != exact {}", grid.distinct, report.distinct_piece_count)
            })?;
            equal += 1;
        } else {
            ensure(grid.distinct <= report.distinct_piece_count, || {
                format!("network {i}: oracle {} > exact {}", grid.distinct, report.distinct_piece_count)
            })?;
            bounded += 1;
        }
    }
    Ok(format!("{equal} networks equal, {bounded} with thin pieces bounded"))
}

fn random_path(rng: &mut rand_chacha::ChaCha8Rng) -> PolygonalPath {
    let n = rng.gen_range(2..=4);
    let vertices = (0..n)
        .map(|_| (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    PolygonalPath::new(vertices).unwrap()
}

fn density_inequalities() -> Outcome {
    let activations = [
        Activation::Relu,
        Activation::Abs,
        Activation::Maxout { rank: 3 },
        Activation::Groupsort { group_size: 2 },
        Activation::Deepspline { kappa: 3 },
    ];
    let init = InitSpec::normal(1.0, 1.0, 0);
    let mut checks = 0;
    for i in 0..200u64 {
        let mut rng = stream(900 + i, 0);
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| activations[rng.gen_range(0..activations.len())].clone();
        let a1 = RandomArchitecture::new(vec![2, 2 * rng.gen_range(1..=2), 2], pick(&mut rng)).unwrap();
        let a2 = RandomArchitecture::new(vec![2, 2 * rng.gen_range(1..=2), 2], pick(&mut rng)).unwrap();
        let f1 = sample_network(&a1, &init, 2 * i).map_err(|e| e.to_string())?;
        let f2 = sample_network(&a2, &init, 2 * i + 1).map_err(|e| e.to_string())?;
        let path = random_path(&mut rng);
        let mut all = check_subadditivity(&f1, &f2, &path).map_err(|e| e.to_string())?;
        all.push(check_composition_bound(&f1, &f2, &path).map_err(|e| e.to_string())?);
        for c in all {
            ensure(c.pass, || format!("instance {i}: {} {} > {}", c.name, c.lhs, c.rhs))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} inequalities on 200 instances"))
}

/// Expected knot density of `relu(w·x + b)` along `t e_1`, `|t| ≤ h`, with
/// standard normal `w, b`: `P(|b| ≤ h |z|) / (2h)` by quadrature over `z`.
fn relu_crossing_density(h: f64) -> f64 {
    let n = 200_000;
    let (lo, hi) = (-12.0, 12.0);
    let dz = (hi - lo) / n as f64;
    let f = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt() * erf(h * z.abs() / SQRT_2);
    // Simpson's rule
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let z = lo + k as f64 * dz;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    s * dz / 3.0 / (2.0 * h)
}

struct McRun {
    rows: Vec<(RandomArchitecture, InitSpec, McEstimate)>,
}

impl McRun {
    fn csv(&self) -> String {
        let mut out = String::from(ExperimentRow::csv_header());
        out.push('\n');
        for (arch, init, est) in &self.rows {
            out.push_str(&ExperimentRow::new(arch, init, est).csv_row());
            out.push('\n');
        }
        out
    }
}

fn stochastic_runs(trials: usize) -> Result<McRun, String> {
    let init = InitSpec::normal(1.0, 1.0, 2024);
    let mut rows = Vec::new();
    let segment = PolygonalPath::segment(vec![-5.0, 0.0, 0.0, 0.0], vec![5.0, 0.0, 0.0, 0.0]).unwrap();
    let relu = RandomArchitecture::new(vec![4, 1], Activation::Relu).unwrap();
    let est = mc_knot_density(&relu, &init, &ProbePath::Fixed { path: segment }, trials).map_err(|e| e.to_string())?;
    rows.push((relu, init.clone(), est));
    let probe = ProbePath::default_for(&init);
    for (dims, act) in [
        (vec![4, 1], Activation::Maxout { rank: 3 }),
        (vec![4, 4], Activation::Groupsort { group_size: 2 }),
    ] {
        let arch = RandomArchitecture::new(dims, act).unwrap();
        let est = mc_knot_density(&arch, &init, &probe, trials).map_err(|e| e.to_string())?;
        rows.push((arch, init.clone(), est));
    }
    Ok(McRun { rows })
}

fn stochastic_bounds() -> Result<(String, McRun), String> {
    let run = stochastic_runs(100_000)?;
    let targets = [1.0 / PI, 3.0 * SQRT_2 / PI, 2.0 * SQRT_2 / PI];
    let mut detail = Vec::new();
    for ((arch, _, est), target) in run.rows.iter().zip(targets) {
        let bound = est.bound.ok_or("missing bound")?;
        ensure((bound - target).abs() < 1e-12, || format!("{}: bound {bound} != {target}", arch.activation.label()))?;
        ensure(est.passes() == Some(true), || {
            format!("{}: mean {} > {bound} + 3 SE ({})", arch.activation.label(), est.mean, est.se)
        })?;
        detail.push(format!("{} {:.5}±{:.5} <= {:.5}", arch.activation.label(), est.mean, est.se, bound));
    }
    let relu = &run.rows[0].2;
    let expected = relu_crossing_density(5.0);
    ensure((relu.mean - expected).abs() <= 3.0 * relu.se, || {
        format!("relu mean {} vs integrated {expected} (SE {})", relu.mean, relu.se)
    })?;
    detail.push(format!("relu integral {expected:.5}"));
    Ok((detail.join("; "), run))
}

struct DepthPoint {
    width: usize,
    depth: usize,
    density: McEstimate,
    bound: f64,
}

fn depth_runs(trials: usize) -> Result<Vec<DepthPoint>, String> {
    let init = InitSpec {
        fan_in: FanIn::He,
        seed: 7,
        ..InitSpec::default()
    };
    let probe = ProbePath::Random { length: 10.0 };
    let mut points = Vec::new();
    for width in [2, 4, 8] {
        for depth in 1..=8 {
            let arch = RandomArchitecture::new(vec![width; depth + 1], Activation::Abs).unwrap();
            let density = mc_knot_density(&arch, &init, &probe, trials).map_err(|e| e.to_string())?;
            let d0 = estimate_directional_expansion(&arch, &init, &probe, trials).map_err(|e| e.to_string())?;
            let lambda0 = estimate_unit_density(&arch, &init, &probe, trials).map_err(|e| e.to_string())?;
            let bound = d0.mean.max(1.0) * lambda0.mean * width as f64 * depth as f64;
            points.push(DepthPoint {
                width,
                depth,
                density,
                bound,
            });
        }
    }
    Ok(points)
}

fn depth_csv(points: &[DepthPoint]) -> String {
    let mut out = String::from("W,L,trials,mean,SE,bound\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.width, p.depth, p.density.trials, p.density.mean, p.density.se, p.bound
        ));
    }
    out
}

fn depth_saturation() -> Result<(String, Vec<DepthPoint>), String> {
    let points = depth_runs(2000)?;
    let mut failures = Vec::new();
    for p in &points {
        if p.density.mean > p.bound + 3.0 * p.density.se {
            failures.push(format!(
                "W={} L={}: mean {:.4} > bound {:.4} + 3 SE",
                p.width, p.depth, p.density.mean, p.bound
            ));
        }
    }
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.width != b.width || a.depth < 2 {
            continue;
        }
        let (ra, rb) = (a.density.mean / a.depth as f64, b.density.mean / b.depth as f64);
        let slack = 3.0 * ((a.density.se / a.depth as f64).powi(2) + (b.density.se / b.depth as f64).powi(2)).sqrt();
        if rb > ra + slack {
            failures.push(format!(
                "W={}: density/L rises from {ra:.4} (L={}) to {rb:.4} (L={})",
                a.width, a.depth, b.depth
            ));
        }
    }
    let summary: Vec<String> = [2, 4, 8]
        .iter()
        .map(|&w| {
            let ratios: Vec<String> = points
                .iter()
                .filter(|p| p.width == w)
                .map(|p| format!("{:.3}", p.density.mean / p.depth as f64))
                .collect();
            format!("W={w} density/L [{}]", ratios.join(" "))
        })
        .collect();
    if failures.is_empty() {
        Ok((summary.join("; "), points))
    } else {
        Err(format!("{}; {}", failures.join("; "), summary.join("; ")))
    }
}

fn reproducibility(first_mc: &McRun, first_depth: &[DepthPoint]) -> Outcome {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let (mc, depth) = single.install(|| -> Result<_, String> { Ok((stochastic_runs(100_000)?, depth_runs(2000)?)) })?;
    ensure(mc.csv() == first_mc.csv(), || "stochastic bound CSV differs between runs".into())?;
    ensure(depth_csv(&depth) == depth_csv(first_depth), || "depth CSV differs between runs".into())?;
    let values_equal = mc.rows.iter().zip(&first_mc.rows).all(|(a, b)| a.2.values == b.2.values);
    ensure(values_equal, || "per-trial values differ".into())?;
    Ok(format!(
        "{} + {} CSV bytes identical on rerun with one thread",
        mc.csv().len(),
        depth_csv(&depth).len()
    ))
}

fn report(id: usize, name: &str, started: Instant, outcome: &Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]");
            true
        }
        Err(detail) => {
            println!("FAIL {id:>2} {name}: {detail} [{secs:.1}s]");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    let simple: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "arrangement sharpness", beta_sharpness),
        (2, "hyperplane specialization", hyperplane_specialization),
        (3, "sawtooth laws", sawtooth_laws),
        (4, "constructive lower bound", constructive_bound),
        (5, "bound audit", bound_audit),
        (6, "upper-bound dominance", upper_dominance),
        (7, "special counts", special_counts),
        (8, "oracle agreement", oracle_agreement),
        (9, "deterministic density inequalities", density_inequalities),
    ];
    for (id, name, f) in simple {
        let t = Instant::now();
        ok &= report(id, name, t, &f());
    }

    let t = Instant::now();
    let stochastic = stochastic_bounds();
    ok &= report(10, "stochastic density bounds", t, &stochastic.as_ref().map(|s| s.0.clone()).map_err(Clone::clone));

    let t = Instant::now();
    let depth = depth_saturation();
    let depth_outcome = depth.as_ref().map(|s| s.0.clone()).map_err(Clone::clone);
    ok &= report(11, "depth saturation", t, &depth_outcome);

    let t = Instant::now();
    let repro = match (&stochastic, &depth) {
        (Ok((_, mc)), Ok((_, points))) => reproducibility(mc, points),
        (Ok((_, mc)), Err(_)) => {
            // the saturation property failed; determinism is checked on recomputed points
            depth_runs(2000).and_then(|points| reproducibility(mc, &points))
        }
        _ => Err("stochastic runs did not complete".into()),
    };
    ok &= report(12, "reproducibility", t, &repro);

    if !ok {
        std::process::exit(1);
    }
}
