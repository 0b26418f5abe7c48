//! Command-line front end. Every run that writes files also writes the
//! resolved configuration as `config.json` next to them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{
    alpha_lower_constructive, alpha_lower_paper, architecture_bound, beta, compositional_upper, corollary_envelope,
    factorial, uniform_descriptor, ArchitectureDescriptor, BoundQuery, Family,
};
use crate::constructions::{
    extremal_sum_network, general_position_partitions, sawtooth_composition, sawtooth_network,
    sawtooth_scalar_network,
};
use crate::error::{CpwlError, Result};
use crate::geometry::{count_report, enumerate_regions, render_svg, Arithmetic, Domain, EnumerationConfig, SvgStyle};
use crate::network::NetworkSpec;
use crate::paths::{count_knots, image_length, KnotReport, PolygonalPath};
use crate::stochastic::{
    compositional_density_bound, estimate_directional_expansion, estimate_unit_density, mc_knot_density,
    sample_network, Activation, Dist, ExperimentRow, FanIn, InitSpec, ProbePath, RandomArchitecture,
};

#[derive(Debug, Parser, Serialize)]
#[command(name = "cpwl", version, about = "Linear regions and knot densities of piecewise-linear networks")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Closed-form region-count bounds.
    Bound(BoundArgs),
    /// Exact cell, piece and connected-piece counts of a network.
    Count(CountArgs),
    /// SVG map of the cells of a 2D-input network.
    Render(RenderArgs),
    /// Knots of a network along a polygonal path.
    Knots(KnotsArgs),
    /// Monte Carlo knot densities of random networks.
    Mc(McArgs),
    /// Write an extremal or random network as JSON.
    Construct(ConstructArgs),
    /// Compare the published lower bound with the compositional upper bound.
    Audit(AuditArgs),
}

fn u64_list(s: &str) -> std::result::Result<Vec<u64>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("cannot parse '{p}'")))
        .collect()
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub family: Option<String>,
    /// Layer widths, e.g. 2,8,8,1.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub kappa: Option<u64>,
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Arrangement bound: dimension followed by partition sizes, e.g. `2 3,3`.
    #[arg(long, num_args = 2, value_names = ["D", "SIZES"])]
    pub beta: Option<Vec<String>>,
    /// Uniform-architecture envelope for d_in,W,d_out (with --depth, --kappa).
    #[arg(long, value_delimiter = ',')]
    pub cor36: Option<Vec<usize>>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// `lo,hi` for a cube or `lo1,hi1,lo2,hi2,...`; unbounded when absent.
    #[arg(long = "box", allow_hyphen_values = true, value_delimiter = ',')]
    pub bbox: Option<Vec<f64>>,
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long = "box", allow_hyphen_values = true, value_delimiter = ',')]
    pub bbox: Vec<f64>,
    #[arg(long, default_value_t = 600.0)]
    pub size: f64,
    /// Output SVG file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KnotsArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationName {
    Relu,
    Leaky,
    Abs,
    Deepspline,
    Maxout,
    Groupsort,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long, value_enum, default_value_t = ActivationName::Relu)]
    pub family: ActivationName,
    /// Layer widths including the input, e.g. 4,1 for one unit on R^4.
    #[arg(long, value_delimiter = ',', default_value = "4,1")]
    pub dims: Vec<usize>,
    /// Maxout rank, spline complexity or group size.
    #[arg(long, default_value_t = 2)]
    pub kappa: usize,
    #[arg(long, default_value_t = 0.01)]
    pub negative_slope: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_w: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_b: f64,
    #[arg(long)]
    pub uniform: bool,
    /// Weight variance 2 σ_w² / fan-in.
    #[arg(long)]
    pub he: bool,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probe segment length; 10 σ_b / σ_w when absent.
    #[arg(long)]
    pub path_length: Option<f64>,
    /// Also estimate D0 and λ0 and report the deep bound.
    #[arg(long)]
    pub deep: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructKind {
    Sawtooth,
    Composition,
    Network,
    Partitions,
    Extremal,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    #[arg(long, value_enum)]
    pub kind: ConstructKind,
    /// Sawtooth order (inner order for compositions).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub kappa: Option<u64>,
    /// Partition sizes for `partitions` and `extremal`.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<u64>>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Activation of `random` networks.
    #[arg(long, value_enum, default_value_t = ActivationName::Abs)]
    pub family: ActivationName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    /// d_in,W,d_out,L,kappa
    #[arg(long, value_delimiter = ',', default_value = "1,4,1,3,2")]
    pub instance: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses and runs; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns what it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Bound(a) => bound(a, cli),
        Command::Count(a) => count(a, cli),
        Command::Render(a) => render(a, cli),
        Command::Knots(a) => knots(a, cli),
        Command::Mc(a) => mc(a, cli),
        Command::Construct(a) => construct(a, cli),
        Command::Audit(a) => audit(a, cli),
    }
}

fn write_outputs(dir: &Path, cli: &Cli, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    let config = serde_json::to_string_pretty(cli)? + "\n";
    fs::write(dir.join("config.json"), config)?;
    Ok(())
}

fn write_file_with_config(file: &Path, cli: &Cli, body: &str) -> Result<()> {
    if let Some(parent) = file.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(file, body)?;
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let config = serde_json::to_string_pretty(cli)? + "\n";
    fs::write(file.with_file_name(format!("{stem}.config.json")), config)?;
    Ok(())
}

fn read_net(path: &Path) -> Result<NetworkSpec> {
    NetworkSpec::from_json(&fs::read_to_string(path)?)
}

fn invalid(msg: impl Into<String>) -> CpwlError {
    CpwlError::InvalidParameter(msg.into())
}

fn descriptor(family: Family, dims: &[usize], kappa: u64, group_size: usize) -> Result<ArchitectureDescriptor> {
    if dims.len() < 2 {
        return Err(invalid("--dims needs at least two entries"));
    }
    match family {
        Family::Groupsort => {
            if group_size == 0 || dims[1..].iter().any(|w| w % group_size != 0) {
                return Err(invalid("group size must divide every width"));
            }
            let gs = factorial(group_size as u64)
                .to_string()
                .parse::<u64>()
                .map_err(|_| invalid("group size too large"))?;
            let kappas = dims[1..].iter().map(|w| vec![gs; w / group_size]).collect();
            ArchitectureDescriptor::new(dims.to_vec(), kappas, family)
        }
        _ => ArchitectureDescriptor::uniform(dims.to_vec(), kappa, family),
    }
}

fn bound(a: &BoundArgs, cli: &Cli) -> Result<String> {
    let mut out = String::new();
    let mut records = Vec::new();
    let mut audits = 0;
    if let Some(parts) = &a.beta {
        let d: usize = parts[0].parse().map_err(|_| invalid("--beta dimension must be an integer"))?;
        let ns = u64_list(&parts[1]).map_err(invalid)?;
        let v = beta(d, &ns);
        let _ = writeln!(out, "beta({d}; {}) = {v}", parts[1]);
        records.push(serde_json::json!({"bound": "beta", "d": d, "sizes": ns, "value": v.to_string()}));
    }
    if let Some(cfg) = &a.cor36 {
        let [d_in, w, d_out] = cfg[..] else {
            return Err(invalid("--cor36 takes d_in,W,d_out"));
        };
        let depth = a.depth.ok_or_else(|| invalid("--cor36 needs --depth"))?;
        let kappa = a.kappa.ok_or_else(|| invalid("--cor36 needs --kappa"))?;
        let (text, n, record) = audit_instance(d_in, w, d_out, depth, kappa)?;
        out.push_str(&text);
        audits += n;
        records.push(record);
    }
    if let Some(name) = &a.family {
        let family: Family = name.parse()?;
        let dims = a.dims.clone().ok_or_else(|| invalid("--family needs --dims"))?;
        let kappa = a.kappa.unwrap_or(2);
        let group_size = a.group_size.unwrap_or(2);
        let query = match family {
            Family::Relu => BoundQuery::Relu { dims: dims.clone() },
            Family::Deepspline => BoundQuery::Deepspline {
                dims: dims.clone(),
                kappa,
            },
            Family::Maxout => BoundQuery::Maxout {
                dims: dims.clone(),
                kappa,
            },
            Family::Groupsort => BoundQuery::Groupsort {
                dims: dims.clone(),
                group_size,
            },
            Family::Pwlu | Family::Generic => {
                return Err(invalid("family formulas exist for relu, deepspline, maxout and groupsort"))
            }
        };
        let report = architecture_bound(&query)?;
        let arch = descriptor(family, &dims, if family == Family::Relu { 2 } else { kappa }, group_size)?;
        let upper = compositional_upper(&arch).value;
        let published = alpha_lower_paper(&arch);
        let constructive = alpha_lower_constructive(&arch);
        let _ = writeln!(out, "family formula [{}] = {}", report.formula, report.value());
        let _ = writeln!(out, "compositional_upper = {upper}");
        let _ = writeln!(
            out,
            "alpha_lower_paper = {}{}",
            published.value,
            if published.heuristic { " (heuristic assignment)" } else { "" }
        );
        let _ = writeln!(
            out,
            "alpha_lower_constructive = {}{}",
            constructive.value,
            if constructive.heuristic { " (heuristic assignment)" } else { "" }
        );
        if published.value > upper {
            audits += 1;
            let _ = writeln!(out, "AUDIT: alpha_lower_paper {} > compositional_upper {upper}", published.value);
        }
        records.push(serde_json::json!({
            "bound": "family",
            "report": report,
            "compositional_upper": upper.to_string(),
            "alpha_lower_paper": published,
            "alpha_lower_constructive": constructive,
        }));
    }
    if records.is_empty() {
        return Err(invalid("nothing to compute: pass --beta, --cor36 or --family"));
    }
    let _ = writeln!(out, "audit findings: {audits}");
    if let Some(dir) = &a.out {
        write_outputs(dir, cli, &[("bound.json", serde_json::to_string_pretty(&records)? + "\n")])?;
    }
    Ok(out)
}

/// Evaluates every bound of the uniform architecture and reports lower
/// bounds exceeding the upper bound.
fn audit_instance(d_in: usize, w: usize, d_out: usize, depth: usize, kappa: u64) -> Result<(String, usize, serde_json::Value)> {
    let arch = uniform_descriptor(d_in, w, d_out, depth, kappa)?;
    let env = corollary_envelope(d_in, w, d_out, depth, kappa)?;
    let upper = compositional_upper(&arch).value;
    let published = alpha_lower_paper(&arch);
    let constructive = alpha_lower_constructive(&arch);
    let mut out = String::new();
    let _ = writeln!(out, "instance (d_in,W,d_out,L,kappa) = ({d_in},{w},{d_out},{depth},{kappa})");
    let _ = writeln!(out, "alpha_lower_paper = {}", published.value);
    let _ = writeln!(out, "compositional_upper = {upper}");
    let _ = writeln!(out, "alpha_lower_constructive = {}", constructive.value);
    let _ = writeln!(out, "envelope = ({}, {})", env.lower_paper, env.upper);
    for warning in &env.warnings {
        let _ = writeln!(out, "warning: {warning}");
    }
    let mut findings = 0;
    if published.value > upper {
        findings += 1;
        let _ = writeln!(
            out,
            "AUDIT: alpha_lower_paper {} > compositional_upper {upper}; the group value sum(kappa) overcounts, \
             1 + sum(kappa - 1) gives {}",
            published.value, constructive.value
        );
    }
    if env.lower_paper > upper {
        findings += 1;
        let _ = writeln!(out, "AUDIT: envelope lower {} > compositional_upper {upper}", env.lower_paper);
    }
    if constructive.value > upper {
        findings += 1;
        let _ = writeln!(out, "AUDIT: alpha_lower_constructive {} > compositional_upper {upper}", constructive.value);
    }
    let record = serde_json::json!({
        "instance": [d_in, w, d_out, depth, kappa],
        "alpha_lower_paper": published.value.to_string(),
        "compositional_upper": upper.to_string(),
        "alpha_lower_constructive": constructive.value.to_string(),
        "envelope": env,
        "findings": findings,
    });
    Ok((out, findings, record))
}

fn audit(a: &AuditArgs, cli: &Cli) -> Result<String> {
    let [d_in, w, d_out, depth, kappa] = a.instance[..] else {
        return Err(invalid("--instance takes d_in,W,d_out,L,kappa"));
    };
    let (text, _, record) = audit_instance(d_in as usize, w as usize, d_out as usize, depth as usize, kappa)?;
    if let Some(dir) = &a.out {
        write_outputs(dir, cli, &[("audit.json", serde_json::to_string_pretty(&record)? + "\n")])?;
    }
    Ok(text)
}

fn parse_box(values: &[f64], dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match values.len() {
        2 => Ok((vec![values[0]; dim], vec![values[1]; dim])),
        n if n == 2 * dim => Ok((
            values.iter().step_by(2).copied().collect(),
            values.iter().skip(1).step_by(2).copied().collect(),
        )),
        _ => Err(invalid(format!("--box needs 2 or {} values", 2 * dim))),
    }
}

fn count(a: &CountArgs, cli: &Cli) -> Result<String> {
    let net = read_net(&a.net)?;
    let domain = match &a.bbox {
        Some(b) => {
            let (lo, hi) = parse_box(b, net.input_dim)?;
            Domain::Box { lo, hi }
        }
        None => Domain::default(),
    };
    let cfg = EnumerationConfig {
        cell_budget: a.budget,
        arithmetic: if a.exact { Arithmetic::Exact } else { Arithmetic::Float },
        ..EnumerationConfig::default()
    };
    let rs = enumerate_regions(&net, &domain, &cfg)?;
    let report = count_report(&rs, &net, &cfg)?;
    let csv = format!("{}\n{}\n", crate::geometry::CountReport::csv_header(), report.csv_row());
    if let Some(dir) = &a.out {
        write_outputs(
            dir,
            cli,
            &[("count.csv", csv.clone()), ("count.json", serde_json::to_string_pretty(&report)? + "\n")],
        )?;
    }
    Ok(csv)
}

fn render(a: &RenderArgs, cli: &Cli) -> Result<String> {
    let net = read_net(&a.net)?;
    if net.input_dim != 2 {
        return Err(CpwlError::Unsupported("rendering needs a 2D input".into()));
    }
    let (lo, hi) = parse_box(&a.bbox, 2)?;
    let domain = Domain::Box {
        lo: lo.clone(),
        hi: hi.clone(),
    };
    let rs = enumerate_regions(&net, &domain, &EnumerationConfig::default())?;
    let style = SvgStyle {
        size_px: a.size,
        ..SvgStyle::default()
    };
    let svg = render_svg(&rs, [lo[0], lo[1]], [hi[0], hi[1]], &style)?;
    match &a.out {
        Some(file) => {
            write_file_with_config(file, cli, &svg)?;
            Ok(format!("cells {}\n", rs.cell_count()))
        }
        None => Ok(svg),
    }
}

fn knots(a: &KnotsArgs, cli: &Cli) -> Result<String> {
    let net = read_net(&a.net)?;
    let path = PolygonalPath::from_json(&fs::read_to_string(&a.path)?)?;
    let report = count_knots(&net, &path)?;
    let len = image_length(&net, &path)?;
    let text = format!(
        "knots {}\nlength {}\ndensity {}\nimage_length {len}\n",
        report.count, report.length, report.density
    );
    if let Some(dir) = &a.out {
        let csv = format!("{}\n{}", KnotReport::csv_header(), report.csv_rows());
        write_outputs(
            dir,
            cli,
            &[("knots.csv", csv), ("knots.json", serde_json::to_string_pretty(&report)? + "\n")],
        )?;
    }
    Ok(text)
}

fn activation(name: ActivationName, kappa: usize, negative_slope: f64) -> Activation {
    match name {
        ActivationName::Relu => Activation::Relu,
        ActivationName::Leaky => Activation::Leaky { negative_slope },
        ActivationName::Abs => Activation::Abs,
        ActivationName::Deepspline => Activation::Deepspline { kappa },
        ActivationName::Maxout => Activation::Maxout { rank: kappa },
        ActivationName::Groupsort => Activation::Groupsort { group_size: kappa },
    }
}

fn mc(a: &McArgs, cli: &Cli) -> Result<String> {
    let arch = RandomArchitecture::new(a.dims.clone(), activation(a.family, a.kappa, a.negative_slope))?;
    let dist = if a.uniform { Dist::Uniform } else { Dist::Normal };
    let init = InitSpec {
        weight: dist,
        sigma_w: a.sigma_w,
        bias: dist,
        sigma_b: a.sigma_b,
        fan_in: if a.he { FanIn::He } else { FanIn::None },
        seed: a.seed,
    };
    init.validate()?;
    let probe = match a.path_length {
        Some(length) => ProbePath::Random { length },
        None => ProbePath::default_for(&init),
    };
    let mut est = mc_knot_density(&arch, &init, &probe, a.trials)?;
    let mut extra = String::new();
    if a.deep {
        let d0 = estimate_directional_expansion(&arch, &init, &probe, a.trials)?;
        let lambda0 = estimate_unit_density(&arch, &init, &probe, a.trials)?;
        let width = arch.dims[1..].iter().copied().max().unwrap_or(1);
        let b = compositional_density_bound(lambda0.mean, d0.mean, width, arch.depth())?;
        est.bound = Some(b.linear);
        let _ = writeln!(extra, "D0 {} (SE {})", d0.mean, d0.se);
        let _ = writeln!(extra, "lambda0 {} (SE {})", lambda0.mean, lambda0.se);
        let _ = writeln!(extra, "bound_geometric {}", b.geometric);
    }
    let row = ExperimentRow::new(&arch, &init, &est);
    let csv = format!("{}\n{}\n", ExperimentRow::csv_header(), row.csv_row());
    if let Some(dir) = &a.out {
        let values: String = est.values.iter().map(|v| format!("{v}\n")).collect();
        write_outputs(dir, cli, &[("mc.csv", csv.clone()), ("trials.csv", format!("density\n{values}"))])?;
    }
    Ok(csv + &extra)
}

fn construct(a: &ConstructArgs, cli: &Cli) -> Result<String> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| invalid(format!("--{flag} is required")));
    let net = match a.kind {
        ConstructKind::Sawtooth => sawtooth_scalar_network(need(a.p, "p")?)?,
        ConstructKind::Composition => sawtooth_composition(need(a.p, "p")?, need(a.q, "q")?)?,
        ConstructKind::Network => {
            let dims = a.dims.clone().ok_or_else(|| invalid("--dims is required"))?;
            let arch = ArchitectureDescriptor::uniform(dims, a.kappa.unwrap_or(2), Family::Deepspline)?;
            sawtooth_network(&arch, None)?
        }
        ConstructKind::Partitions | ConstructKind::Extremal => {
            let ns = a.ns.clone().ok_or_else(|| invalid("--ns is required"))?;
            let d = need(a.d, "d")?;
            if matches!(a.kind, ConstructKind::Partitions) {
                general_position_partitions(d, &ns, a.seed)?
            } else {
                extremal_sum_network(d, &ns, a.seed)?
            }
        }
        ConstructKind::Random => {
            let dims = a.dims.clone().ok_or_else(|| invalid("--dims is required"))?;
            let kappa = a.kappa.unwrap_or(2) as usize;
            let arch = RandomArchitecture::new(dims, activation(a.family, kappa, 0.01))?;
            sample_network(&arch, &InitSpec::default(), a.seed)?
        }
    };
    let json = net.to_json() + "\n";
    match &a.out {
        Some(file) => {
            write_file_with_config(file, cli, &json)?;
            Ok(format!("wrote {}\n", file.display()))
        }
        None => Ok(json),
    }
}
