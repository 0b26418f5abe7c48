//! Knots of a network along polygonal paths, computed exactly by pushing the
//! affine-in-`t` restriction of each segment through the layers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CpwlError, Result};
use crate::geometry::pieces_match;
use crate::network::{AffineMap, CompiledLayer, CompiledNetwork, NetworkSpec, Piece};
use crate::scalar::dot;

/// Relative tolerance of the side-difference knot test.
pub const KNOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct PolygonalPath {
    vertices: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<RawPath> for PolygonalPath {
    type Error = CpwlError;
    fn try_from(raw: RawPath) -> Result<Self> {
        PolygonalPath::new(raw.vertices)
    }
}

impl From<PolygonalPath> for RawPath {
    fn from(p: PolygonalPath) -> Self {
        RawPath { vertices: p.vertices }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl PolygonalPath {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(CpwlError::InvalidParameter("a path needs at least two vertices".into()));
        }
        let d = vertices[0].len();
        if d == 0 || vertices.iter().any(|v| v.len() != d) {
            return Err(CpwlError::InvalidParameter("path vertices must share a positive dimension".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CpwlError::InvalidParameter("non-finite path vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(CpwlError::InvalidParameter("consecutive path vertices coincide".into()));
        }
        Ok(PolygonalPath { vertices })
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path serializes")
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.vertices.windows(2).map(|w| distance(&w[0], &w[1])).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Arc-length parameter of every vertex.
    pub fn vertex_params(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for l in self.segment_lengths() {
            acc += l;
            out.push(acc);
        }
        out
    }

    /// Point at arc length `t`, clamped to the path.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let params = self.vertex_params();
        let i = params[1..params.len() - 1].partition_point(|&p| p <= t);
        let (a, b) = (&self.vertices[i], &self.vertices[i + 1]);
        let s = ((t - params[i]) / (params[i + 1] - params[i])).clamp(0.0, 1.0);
        a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        PolygonalPath { vertices: v }
    }

    /// Inserts a vertex at arc length `t` unless one is already there.
    pub fn split_at(&self, t: f64) -> Self {
        let params = self.vertex_params();
        if params.iter().any(|&p| (p - t).abs() <= 1e-12 * params.last().unwrap().max(1.0)) {
            return self.clone();
        }
        let i = params.partition_point(|&p| p < t);
        let mut v = self.vertices.clone();
        v.insert(i, self.point_at(t));
        PolygonalPath { vertices: v }
    }
}

/// A stretch of the path on which every layer acts affinely.
#[derive(Debug, Clone)]
struct Span {
    segment: usize,
    t0: f64,
    t1: f64,
    /// Network output at `t0` and its derivative in `t`.
    value: Vec<f64>,
    velocity: Vec<f64>,
    /// Composed piece of every layer prefix, in the input variable.
    prefixes: Vec<Piece<f64>>,
    /// Number of layer boundaries that fall on `t0`.
    coincident: usize,
}

impl Span {
    fn full_piece(&self, d: usize) -> AffineMap {
        match self.prefixes.last() {
            Some((m, o)) => AffineMap {
                matrix: m.clone(),
                offset: o.clone(),
            },
            None => AffineMap::identity(d),
        }
    }
}

fn prefix_match(a: &Piece<f64>, b: &Piece<f64>) -> bool {
    let ma = AffineMap {
        matrix: a.0.clone(),
        offset: a.1.clone(),
    };
    let mb = AffineMap {
        matrix: b.0.clone(),
        offset: b.1.clone(),
    };
    pieces_match(&ma, &mb, KNOT_TOL)
}

/// Parameters `s` in `(s0, s1)` where the layer may switch pieces along
/// `v(s) = a + s·b`. A superset is harmless.
fn layer_switches(layer: &CompiledLayer<f64>, a: &[f64], b: &[f64], s0: f64, s1: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut push = |g: f64, h: f64| {
        // g + s·h = 0
        if h != 0.0 {
            let s = -g / h;
            if s > s0 && s < s1 {
                roots.push(s);
            }
        }
    };
    match layer {
        CompiledLayer::Affine { .. } => {}
        CompiledLayer::Pointwise { units } => {
            for (k, unit) in units.iter().enumerate() {
                for bp in &unit.breakpoints {
                    push(a[k] - bp, b[k]);
                }
            }
        }
        CompiledLayer::Maxout { weights, offsets } => {
            for (w, o) in weights.iter().zip(offsets) {
                for i in 0..w.len() {
                    for j in i + 1..w.len() {
                        let diff: Vec<f64> = w[i].iter().zip(&w[j]).map(|(x, y)| x - y).collect();
                        push(dot(&diff, a) + o[i] - o[j], dot(&diff, b));
                    }
                }
            }
        }
        CompiledLayer::Groupsort { group_size } => {
            for start in (0..a.len()).step_by(*group_size) {
                for i in start..start + group_size {
                    for j in i + 1..start + group_size {
                        push(a[i] - a[j], b[i] - b[j]);
                    }
                }
            }
        }
        CompiledLayer::Pwlu2d {
            grid_m,
            lines,
            matrix,
            offset,
            ..
        } => {
            let h = 2.0 / (*grid_m as f64 - 1.0);
            for u in 0..matrix.len() / 2 {
                let (rp, rq) = (&matrix[2 * u], &matrix[2 * u + 1]);
                let (p0, dp) = (dot(rp, a) + offset[2 * u], dot(rp, b));
                let (q0, dq) = (dot(rq, a) + offset[2 * u + 1], dot(rq, b));
                for line in lines {
                    push(p0 - line, dp);
                    push(q0 - line, dq);
                }
                let m = *grid_m as i64;
                for k in -(m - 2)..=(m - 2) {
                    push(q0 - p0 - k as f64 * h, dq - dp);
                }
            }
        }
    }
    roots
}

fn affine_apply(jac: &[Vec<f64>], c: &[f64], v: &[f64]) -> Vec<f64> {
    jac.iter().zip(c).map(|(row, ci)| dot(row, v) + ci).collect()
}

fn linear_apply(jac: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    jac.iter().map(|row| dot(row, v)).collect()
}

fn compose_piece(jac: &[Vec<f64>], c: &[f64], inner: &Piece<f64>) -> Piece<f64> {
    let m = crate::network::mat_mul(jac, &inner.0);
    let o = affine_apply(jac, c, &inner.1);
    (m, o)
}

/// Spans of one segment after all layers.
fn restrict_segment(net: &CompiledNetwork<f64>, segment: usize, start: &[f64], end: &[f64], t_start: f64) -> Vec<Span> {
    let len = distance(start, end);
    let dir: Vec<f64> = start.iter().zip(end).map(|(a, b)| (b - a) / len).collect();
    let d = start.len();
    let identity: Piece<f64> = (AffineMap::identity(d).matrix, vec![0.0; d]);
    // local parameter s ∈ [0, len]; value a + s·b
    let mut spans = vec![(0.0, len, start.to_vec(), dir.clone(), Vec::<Piece<f64>>::new(), 0usize)];
    for (l, layer) in net.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(spans.len());
        for (s0, s1, a, b, prefixes, coincident) in spans {
            let mut roots = layer_switches(layer, &a, &b, s0, s1);
            roots.sort_by(f64::total_cmp);
            let scale = len.max(1.0) * 1e-13;
            let mut cuts: Vec<(f64, usize)> = Vec::with_capacity(roots.len());
            for r in roots {
                match cuts.last_mut() {
                    Some((last, n)) if r - *last <= scale => *n += 1,
                    _ => cuts.push((r, 1)),
                }
            }
            let mut bounds = vec![(s0, coincident)];
            bounds.extend(cuts.iter().filter(|(r, _)| *r - s0 > scale && s1 - *r > scale).copied());
            bounds.push((s1, 0));
            for w in bounds.windows(2) {
                let ((lo, n), (hi, _)) = (w[0], w[1]);
                let mid = 0.5 * (lo + hi);
                let v_mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + mid * y).collect();
                let (jac, c) = net.layer_local_map(l, &v_mid, &b);
                let inner = prefixes.last().cloned().unwrap_or_else(|| identity.clone());
                let mut p = prefixes.clone();
                p.push(compose_piece(&jac, &c, &inner));
                next.push((lo, hi, affine_apply(&jac, &c, &a), linear_apply(&jac, &b), p, n));
            }
        }
        spans = next;
    }
    spans
        .into_iter()
        .map(|(s0, s1, a, b, prefixes, coincident)| Span {
            segment,
            t0: t_start + s0,
            t1: t_start + s1,
            value: a.iter().zip(&b).map(|(x, y)| x + s0 * y).collect(),
            velocity: b,
            prefixes,
            coincident,
        })
        .collect()
}

fn restrict(net: &CompiledNetwork<f64>, path: &PolygonalPath) -> Result<Vec<Span>> {
    if path.dim() != net.input_dim {
        return Err(CpwlError::DimensionMismatch {
            layer: 0,
            expected: net.input_dim,
            got: path.dim(),
        });
    }
    let params = path.vertex_params();
    let per_segment: Vec<Vec<Span>> = (0..path.num_segments())
        .into_par_iter()
        .map(|i| restrict_segment(net, i, &path.vertices[i], &path.vertices[i + 1], params[i]))
        .collect();
    Ok(per_segment.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    /// Arc-length parameter.
    pub t: f64,
    /// Segment the knot belongs to; knots on a vertex go to the earlier one.
    pub segment: usize,
    /// First layer whose prefix changes piece at this knot.
    pub layer: usize,
    pub at_vertex: bool,
    /// Several layer boundaries meet here, or the knot sits on a vertex.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotReport {
    pub knots: Vec<Knot>,
    pub count: usize,
    pub length: f64,
    pub density: f64,
}

impl KnotReport {
    fn new(knots: Vec<Knot>, length: f64) -> Self {
        let count = knots.len();
        KnotReport {
            knots,
            count,
            length,
            density: count as f64 / length,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.t).collect()
    }

    /// Number of knots introduced by each layer.
    pub fn per_layer(&self, layers: usize) -> Vec<usize> {
        let mut out = vec![0; layers];
        for k in &self.knots {
            out[k.layer] += 1;
        }
        out
    }

    pub fn csv_header() -> &'static str {
        "t,segment,layer,at_vertex,degenerate"
    }

    pub fn csv_rows(&self) -> String {
        self.knots
            .iter()
            .map(|k| format!("{},{},{},{},{}\n", k.t, k.segment, k.layer, k.at_vertex, k.degenerate))
            .collect()
    }
}

fn knots_of(spans: &[Span], d: usize) -> Vec<Knot> {
    let mut knots = Vec::new();
    for w in spans.windows(2) {
        let (left, right) = (&w[0], &w[1]);
        if pieces_match(&left.full_piece(d), &right.full_piece(d), KNOT_TOL) {
            continue;
        }
        let layer = left
            .prefixes
            .iter()
            .zip(&right.prefixes)
            .position(|(a, b)| !prefix_match(a, b))
            .unwrap_or(left.prefixes.len().saturating_sub(1));
        let at_vertex = left.segment != right.segment;
        knots.push(Knot {
            t: right.t0,
            segment: left.segment,
            layer,
            at_vertex,
            degenerate: at_vertex || right.coincident > 1,
        });
    }
    knots
}

/// Knots of `net` along `path`: parameters where the affine piece of the
/// network differs on the two sides.
pub fn count_knots(net: &NetworkSpec, path: &PolygonalPath) -> Result<KnotReport> {
    let compiled = net.compile::<f64>()?;
    count_knots_compiled(&compiled, path)
}

pub fn count_knots_compiled(net: &CompiledNetwork<f64>, path: &PolygonalPath) -> Result<KnotReport> {
    let spans = restrict(net, path)?;
    Ok(KnotReport::new(knots_of(&spans, net.input_dim), path.length()))
}

/// Vertices of `f ∘ γ`, one per span boundary with repeated points dropped.
fn image_vertices(spans: &[Span]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(spans.len() + 1);
    let mut push = |v: Vec<f64>| {
        if out.last() != Some(&v) {
            out.push(v);
        }
    };
    for s in spans {
        push(s.value.clone());
    }
    if let Some(s) = spans.last() {
        let dt = s.t1 - s.t0;
        push(s.value.iter().zip(&s.velocity).map(|(v, u)| v + dt * u).collect());
    }
    out
}

/// The image `f ∘ γ`; `None` when the image is a single point.
pub fn image_path(net: &NetworkSpec, path: &PolygonalPath) -> Result<Option<PolygonalPath>> {
    let spans = restrict(&net.compile::<f64>()?, path)?;
    let v = image_vertices(&spans);
    Ok((v.len() >= 2).then_some(PolygonalPath { vertices: v }))
}

pub fn image_length(net: &NetworkSpec, path: &PolygonalPath) -> Result<f64> {
    image_length_compiled(&net.compile::<f64>()?, path)
}

pub fn image_length_compiled(net: &CompiledNetwork<f64>, path: &PolygonalPath) -> Result<f64> {
    let spans = restrict(net, path)?;
    Ok(spans
        .iter()
        .map(|s| (s.t1 - s.t0) * s.velocity.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum())
}

/// Pieces of two maps on the common refinement of their spans.
fn merged_knots(a: &[Span], b: &[Span], d: usize, combine: impl Fn(&AffineMap, &AffineMap) -> AffineMap) -> usize {
    let mut cuts: Vec<f64> = a.iter().chain(b).map(|s| s.t0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let end = a.last().map_or(0.0, |s| s.t1);
    let piece_on = |spans: &[Span], lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        let i = spans.partition_point(|s| s.t1 <= mid).min(spans.len() - 1);
        spans[i].full_piece(d)
    };
    let pieces: Vec<AffineMap> = cuts
        .iter()
        .enumerate()
        .map(|(i, &lo)| {
            let hi = cuts.get(i + 1).copied().unwrap_or(end);
            combine(&piece_on(a, lo, hi), &piece_on(b, lo, hi))
        })
        .collect();
    pieces.windows(2).filter(|w| !pieces_match(&w[0], &w[1], KNOT_TOL)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            pass: lhs <= rhs * (1.0 + 1e-12) + 1e-12,
        }
    }
}

/// Densities of `f1 + f2` and of `(f1, f2)` against `λ(f1) + λ(f2)`.
pub fn check_subadditivity(f1: &NetworkSpec, f2: &NetworkSpec, path: &PolygonalPath) -> Result<Vec<InequalityCheck>> {
    if f1.output_dim() != f2.output_dim() || f1.input_dim != f2.input_dim {
        return Err(CpwlError::InvalidParameter("maps must share input and output dimensions".into()));
    }
    let d = path.dim();
    let (c1, c2) = (f1.compile::<f64>()?, f2.compile::<f64>()?);
    let (s1, s2) = (restrict(&c1, path)?, restrict(&c2, path)?);
    let len = path.length();
    let rhs = (knots_of(&s1, d).len() + knots_of(&s2, d).len()) as f64 / len;
    let sum = merged_knots(&s1, &s2, d, |a, b| AffineMap {
        matrix: a
            .matrix
            .iter()
            .zip(&b.matrix)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
            .collect(),
        offset: a.offset.iter().zip(&b.offset).map(|(x, y)| x + y).collect(),
    });
    let pair = merged_knots(&s1, &s2, d, |a, b| AffineMap {
        matrix: a.matrix.iter().chain(&b.matrix).cloned().collect(),
        offset: a.offset.iter().chain(&b.offset).copied().collect(),
    });
    Ok(vec![
        InequalityCheck::new("sum", sum as f64 / len, rhs),
        InequalityCheck::new("concatenation", pair as f64 / len, rhs),
    ])
}

/// `λ(f2 ∘ f1) ≤ λ(f1) + len(f1 ∘ γ)/len(γ) · λ(f2 along f1 ∘ γ)`.
pub fn check_composition_bound(f1: &NetworkSpec, f2: &NetworkSpec, path: &PolygonalPath) -> Result<InequalityCheck> {
    if f1.output_dim() != f2.input_dim {
        return Err(CpwlError::InvalidParameter("output of the inner map must feed the outer map".into()));
    }
    let mut layers = f1.layers.clone();
    layers.extend(f2.layers.iter().cloned());
    let composed = NetworkSpec::new(f1.input_dim, layers)?;
    let len = path.length();
    let lhs = count_knots(&composed, path)?.count as f64 / len;
    let inner = count_knots(f1, path)?;
    let outer = match image_path(f1, path)? {
        Some(image) => count_knots(f2, &image)?.count as f64,
        None => 0.0,
    };
    // len(f1∘γ)/len(γ) · kt/len(f1∘γ) reduces to kt/len(γ)
    let rhs = inner.density + outer / len;
    Ok(InequalityCheck::new("composition", lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::sawtooth_scalar_network;
    use crate::cpwl::ScalarCpwl;
    use crate::network::LayerSpec;

    fn pointwise(f: ScalarCpwl) -> NetworkSpec {
        NetworkSpec::new(1, vec![LayerSpec::Pointwise { units: vec![f] }]).unwrap()
    }

    fn seg(a: f64, b: f64) -> PolygonalPath {
        PolygonalPath::segment(vec![a], vec![b]).unwrap()
    }

    #[test]
    fn relu_has_one_knot() {
        let r = count_knots(&pointwise(ScalarCpwl::relu()), &seg(-1.0, 1.0)).unwrap();
        assert_eq!(r.count, 1);
        assert!((r.density - 0.5).abs() < 1e-15);
        assert!((r.knots[0].t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sawtooth_knots() {
        let r = count_knots(&sawtooth_scalar_network(4).unwrap(), &seg(0.0, 1.0)).unwrap();
        assert_eq!(r.count, 3);
        for (k, t) in r.params().iter().enumerate() {
            assert!((t - (k + 1) as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn image_lengths() {
        let double = NetworkSpec::new(1, vec![LayerSpec::Affine(AffineMap::linear(vec![vec![2.0]]))]).unwrap();
        assert!((image_length(&double, &seg(0.0, 3.0)).unwrap() - 6.0).abs() < 1e-12);
        let relu = pointwise(ScalarCpwl::relu());
        assert!((image_length(&relu, &seg(-1.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        let img = image_path(&relu, &seg(-1.0, 1.0)).unwrap().unwrap();
        assert_eq!(img.vertices(), &[vec![0.0], vec![1.0]]);
    }

    #[test]
    fn knot_on_a_vertex_goes_to_the_earlier_segment() {
        let path = PolygonalPath::new(vec![vec![-1.0], vec![0.0], vec![2.0]]).unwrap();
        let r = count_knots(&pointwise(ScalarCpwl::relu()), &path).unwrap();
        assert_eq!(r.count, 1);
        assert_eq!(r.knots[0].segment, 0);
        assert!(r.knots[0].at_vertex && r.knots[0].degenerate);
    }

    #[test]
    fn relu_and_abs_inequalities() {
        let (f1, f2) = (pointwise(ScalarCpwl::relu()), pointwise(ScalarCpwl::abs()));
        let path = seg(-1.0, 1.0);
        for c in check_subadditivity(&f1, &f2, &path).unwrap() {
            assert!(c.pass, "{c:?}");
        }
        let c = check_composition_bound(&f1, &f2, &path).unwrap();
        assert!(c.pass);
        assert_eq!((c.lhs, c.rhs), (0.5, 0.5));
    }

    #[test]
    fn path_json_roundtrip() {
        let p = PolygonalPath::new(vec![vec![0.0, 1.0], vec![2.5, -1.0]]).unwrap();
        assert_eq!(PolygonalPath::from_json(&p.to_json()).unwrap(), p);
        assert!(PolygonalPath::from_json(r#"{"vertices":[[0.0],[0.0]]}"#).is_err());
    }
}
