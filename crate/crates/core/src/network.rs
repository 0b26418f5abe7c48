//! Layered CPWL networks: specification, forward evaluation and one-sided
//! local affine pieces.

use serde::{Deserialize, Serialize};

use crate::cpwl::{piece_index_in, ScalarCpwl};
use crate::error::{CpwlError, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let map = AffineMap { matrix, offset };
        map.validate()?;
        Ok(map)
    }

    pub fn identity(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        AffineMap {
            matrix,
            offset: vec![0.0; n],
        }
    }

    pub fn linear(matrix: Vec<Vec<f64>>) -> Self {
        let rows = matrix.len();
        AffineMap {
            matrix,
            offset: vec![0.0; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    /// Column count; zero-row maps report zero.
    pub fn cols(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<()> {
        if self.offset.len() != self.matrix.len() {
            return Err(CpwlError::InvalidNetwork(format!(
                "affine offset has {} entries for {} rows",
                self.offset.len(),
                self.matrix.len()
            )));
        }
        let cols = self.cols();
        if self.matrix.iter().any(|r| r.len() != cols) {
            return Err(CpwlError::InvalidNetwork("ragged affine matrix".into()));
        }
        if self
            .matrix
            .iter()
            .flatten()
            .chain(&self.offset)
            .any(|v| !v.is_finite())
        {
            return Err(CpwlError::InvalidNetwork("non-finite affine entry".into()));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, o)| dot(row, x) + o)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    Affine(AffineMap),
    /// Unit `k` is applied to coordinate `k`.
    Pointwise { units: Vec<ScalarCpwl> },
    /// `weights[unit][k]` and `offsets[unit][k]` define the `k`-th affine
    /// function of each unit.
    Maxout {
        rank: usize,
        weights: Vec<Vec<Vec<f64>>>,
        offsets: Vec<Vec<f64>>,
    },
    /// Sorts consecutive groups ascending.
    Groupsort { group_size: usize },
    /// Two-input piecewise-linear units on a triangulated `grid_m × grid_m`
    /// grid over `[-1, 1]²`. Rows `2u` and `2u + 1` of the read-in give the
    /// inputs of unit `u`; `values[u][i * grid_m + j]` is its value at grid
    /// node `(-1 + i h, -1 + j h)`.
    Pwlu2d {
        grid_m: usize,
        values: Vec<Vec<f64>>,
        readin: AffineMap,
    },
}

impl LayerSpec {
    pub fn is_affine(&self) -> bool {
        matches!(self, LayerSpec::Affine(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Affine(_) => "affine",
            LayerSpec::Pointwise { .. } => "pointwise",
            LayerSpec::Maxout { .. } => "maxout",
            LayerSpec::Groupsort { .. } => "groupsort",
            LayerSpec::Pwlu2d { .. } => "pwlu2d",
        }
    }

    /// Output width for the given input width.
    fn output_width(&self, layer: usize, input: usize) -> Result<usize> {
        let invalid = |msg: String| Err(CpwlError::InvalidNetwork(format!("layer {layer}: {msg}")));
        match self {
            LayerSpec::Affine(map) => {
                map.validate()
                    .map_err(|e| CpwlError::InvalidNetwork(format!("layer {layer}: {e}")))?;
                if map.rows() > 0 && map.cols() != input {
                    return Err(CpwlError::DimensionMismatch {
                        layer,
                        expected: map.cols(),
                        got: input,
                    });
                }
                if map.rows() == 0 {
                    return invalid("affine map with no rows".into());
                }
                Ok(map.rows())
            }
            LayerSpec::Pointwise { units } => {
                if units.len() != input {
                    return Err(CpwlError::DimensionMismatch {
                        layer,
                        expected: units.len(),
                        got: input,
                    });
                }
                Ok(input)
            }
            LayerSpec::Maxout {
                rank,
                weights,
                offsets,
            } => {
                if *rank == 0 {
                    return invalid("maxout rank must be at least 1".into());
                }
                if weights.is_empty() || weights.len() != offsets.len() {
                    return invalid("maxout weights and offsets must list the same units".into());
                }
                for (u, (w, o)) in weights.iter().zip(offsets).enumerate() {
                    if w.len() != *rank || o.len() != *rank {
                        return invalid(format!("maxout unit {u} needs {rank} affine functions"));
                    }
                    if let Some(row) = w.iter().find(|row| row.len() != input) {
                        return Err(CpwlError::DimensionMismatch {
                            layer,
                            expected: row.len(),
                            got: input,
                        });
                    }
                    if w.iter().flatten().chain(o).any(|v| !v.is_finite()) {
                        return invalid("non-finite maxout parameter".into());
                    }
                }
                Ok(weights.len())
            }
            LayerSpec::Groupsort { group_size } => {
                if *group_size == 0 || input % group_size != 0 {
                    return invalid(format!(
                        "width {input} is not divisible by group size {group_size}"
                    ));
                }
                Ok(input)
            }
            LayerSpec::Pwlu2d {
                grid_m,
                values,
                readin,
            } => {
                if *grid_m < 2 {
                    return invalid("pwlu grid size must be at least 2".into());
                }
                readin
                    .validate()
                    .map_err(|e| CpwlError::InvalidNetwork(format!("layer {layer}: {e}")))?;
                if values.is_empty() || readin.rows() != 2 * values.len() {
                    return invalid(format!(
                        "pwlu read-in needs 2 rows per unit ({} units, {} rows)",
                        values.len(),
                        readin.rows()
                    ));
                }
                if readin.cols() != input {
                    return Err(CpwlError::DimensionMismatch {
                        layer,
                        expected: readin.cols(),
                        got: input,
                    });
                }
                if values
                    .iter()
                    .any(|v| v.len() != grid_m * grid_m || v.iter().any(|x| !x.is_finite()))
                {
                    return invalid(format!("pwlu units need {} finite values", grid_m * grid_m));
                }
                Ok(values.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub metadata: String,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let net = NetworkSpec {
            input_dim,
            layers,
            metadata: String::new(),
        };
        net.widths()?;
        Ok(net)
    }

    pub fn with_metadata(mut self, label: impl Into<String>) -> Self {
        self.metadata = label.into();
        self
    }

    /// Widths of the input and of every layer output.
    pub fn widths(&self) -> Result<Vec<usize>> {
        if self.input_dim == 0 {
            return Err(CpwlError::InvalidNetwork("input_dim must be positive".into()));
        }
        let mut widths = vec![self.input_dim];
        for (i, layer) in self.layers.iter().enumerate() {
            let w = layer.output_width(i, *widths.last().unwrap())?;
            widths.push(w);
        }
        Ok(widths)
    }

    pub fn validate(&self) -> Result<()> {
        self.widths().map(|_| ())
    }

    pub fn output_dim(&self) -> usize {
        self.widths()
            .map(|w| *w.last().unwrap())
            .unwrap_or(self.input_dim)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: NetworkSpec = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    /// Canonical JSON: sorted keys and shortest round-trip floats.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("network serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    pub fn compile<S: Scalar>(&self) -> Result<CompiledNetwork<S>> {
        CompiledNetwork::new(self)
    }

    /// Forward evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(CpwlError::DimensionMismatch {
                layer: 0,
                expected: self.input_dim,
                got: x.len(),
            });
        }
        self.validate()?;
        let mut v = x.to_vec();
        for layer in &self.layers {
            v = eval_layer(layer, &v);
        }
        Ok(v)
    }

    /// Affine piece active on the side of `x` pointed to by `side`.
    pub fn eval_jacobian(&self, x: &[f64], side: &[f64]) -> Result<LocalPiece> {
        let compiled = self.compile::<f64>()?;
        compiled.check_point(x, side)?;
        Ok(compiled.local_piece(x, side))
    }
}

fn eval_layer(layer: &LayerSpec, v: &[f64]) -> Vec<f64> {
    match layer {
        LayerSpec::Affine(map) => map.apply(v),
        LayerSpec::Pointwise { units } => units.iter().zip(v).map(|(f, &t)| f.eval(t)).collect(),
        LayerSpec::Maxout {
            weights, offsets, ..
        } => weights
            .iter()
            .zip(offsets)
            .map(|(w, o)| {
                w.iter()
                    .zip(o)
                    .map(|(row, b)| dot(row, v) + b)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
        LayerSpec::Groupsort { group_size } => {
            let mut out = v.to_vec();
            for chunk in out.chunks_mut(*group_size) {
                chunk.sort_by(f64::total_cmp);
            }
            out
        }
        LayerSpec::Pwlu2d {
            grid_m,
            values,
            readin,
        } => {
            let z = readin.apply(v);
            values
                .iter()
                .enumerate()
                .map(|(u, vals)| {
                    let (grad, c) = pwlu_piece_f64(*grid_m, vals, z[2 * u], z[2 * u + 1]);
                    grad[0] * z[2 * u] + grad[1] * z[2 * u + 1] + c
                })
                .collect()
        }
    }
}

fn pwlu_piece_f64(m: usize, values: &[f64], p: f64, q: f64) -> ([f64; 2], f64) {
    let lines: Vec<f64> = (1..m - 1).map(|k| grid_line(m, k)).collect();
    let ([gp, gq], c) = pwlu_piece::<f64>(m, values, &lines, p, q, 0.0, 0.0);
    ([gp, gq], c)
}

fn grid_line<S: Scalar>(m: usize, k: usize) -> S {
    S::from_f64(-1.0) + S::from_f64(2.0) * S::from_f64(k as f64) / S::from_f64((m - 1) as f64)
}

/// Gradient and intercept of the PWLU triangle active at `(p, q)` on the side
/// of `(dp, dq)`.
fn pwlu_piece<S: Scalar>(
    m: usize,
    values: &[S],
    lines: &[S],
    p: S,
    q: S,
    dp: S,
    dq: S,
) -> ([S; 2], S) {
    let i = piece_index_in(lines, p.clone(), dp.clone());
    let j = piece_index_in(lines, q.clone(), dq.clone());
    let h = S::from_f64(2.0) / S::from_f64((m - 1) as f64);
    let si = grid_line::<S>(m, i);
    let sj = grid_line::<S>(m, j);
    let a = (p - si.clone()) / h.clone();
    let b = (q - sj.clone()) / h.clone();
    let gap = b - a;
    let dgap = dq - dp;
    let upper = gap > S::tol(&S::one()) || (gap.is_zero_at(&S::one()) && dgap > S::zero());
    let v = |r: usize, s: usize| values[r * m + s].clone();
    let v00 = v(i, j);
    let v10 = v(i + 1, j);
    let v01 = v(i, j + 1);
    let v11 = v(i + 1, j + 1);
    let (ga, gb) = if upper {
        (v11 - v01.clone(), v01 - v00.clone())
    } else {
        (v10.clone() - v00.clone(), v11 - v10)
    };
    let gp = ga / h.clone();
    let gq = gb / h;
    let c = v00 - gp.clone() * si - gq.clone() * sj;
    ([gp, gq], c)
}

/// A network's local affine map at one point: the output value, the
/// composed piece of the full network and the piece of every layer prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPiece {
    pub value: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub prefixes: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
}

/// Layer parameters converted to a scalar type once, for repeated local
/// evaluation.
#[derive(Debug, Clone)]
pub enum CompiledLayer<S> {
    Affine {
        matrix: Vec<Vec<S>>,
        offset: Vec<S>,
    },
    Pointwise {
        units: Vec<CompiledUnit<S>>,
    },
    Maxout {
        weights: Vec<Vec<Vec<S>>>,
        offsets: Vec<Vec<S>>,
    },
    Groupsort {
        group_size: usize,
    },
    Pwlu2d {
        grid_m: usize,
        lines: Vec<S>,
        values: Vec<Vec<S>>,
        matrix: Vec<Vec<S>>,
        offset: Vec<S>,
    },
}

#[derive(Debug, Clone)]
pub struct CompiledUnit<S> {
    pub breakpoints: Vec<S>,
    pub pieces: Vec<(S, S)>,
}

impl<S: Scalar> CompiledUnit<S> {
    pub fn piece(&self, t: S, direction: S) -> usize {
        piece_index_in(&self.breakpoints, t, direction)
    }
}

#[derive(Debug, Clone)]
pub struct CompiledNetwork<S> {
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub layers: Vec<CompiledLayer<S>>,
}

fn conv<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::from_f64(x)).collect()
}

fn conv_matrix<S: Scalar>(m: &[Vec<f64>]) -> Vec<Vec<S>> {
    m.iter().map(|r| conv(r)).collect()
}

pub type Piece<S> = (Vec<Vec<S>>, Vec<S>);

impl<S: Scalar> CompiledNetwork<S> {
    fn new(net: &NetworkSpec) -> Result<Self> {
        let widths = net.widths()?;
        let layers = net
            .layers
            .iter()
            .map(|layer| match layer {
                LayerSpec::Affine(map) => CompiledLayer::Affine {
                    matrix: conv_matrix(&map.matrix),
                    offset: conv(&map.offset),
                },
                LayerSpec::Pointwise { units } => CompiledLayer::Pointwise {
                    units: units
                        .iter()
                        .map(|f| CompiledUnit {
                            breakpoints: conv(f.breakpoints()),
                            pieces: f.pieces_in::<S>(),
                        })
                        .collect(),
                },
                LayerSpec::Maxout {
                    weights, offsets, ..
                } => CompiledLayer::Maxout {
                    weights: weights.iter().map(|w| conv_matrix(w)).collect(),
                    offsets: offsets.iter().map(|o| conv(o)).collect(),
                },
                LayerSpec::Groupsort { group_size } => CompiledLayer::Groupsort {
                    group_size: *group_size,
                },
                LayerSpec::Pwlu2d {
                    grid_m,
                    values,
                    readin,
                } => CompiledLayer::Pwlu2d {
                    grid_m: *grid_m,
                    lines: (1..grid_m - 1).map(|k| grid_line::<S>(*grid_m, k)).collect(),
                    values: values.iter().map(|v| conv(v)).collect(),
                    matrix: conv_matrix(&readin.matrix),
                    offset: conv(&readin.offset),
                },
            })
            .collect();
        Ok(CompiledNetwork {
            input_dim: net.input_dim,
            widths,
            layers,
        })
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn check_point(&self, x: &[f64], side: &[f64]) -> Result<()> {
        for v in [x, side] {
            if v.len() != self.input_dim {
                return Err(CpwlError::DimensionMismatch {
                    layer: 0,
                    expected: self.input_dim,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

impl<S: Scalar> CompiledNetwork<S> {
    /// Local affine map `y ↦ J y + c` of one layer at input `v`, resolved on
    /// the side of `dv`.
    pub fn layer_local_map(&self, layer: usize, v: &[S], dv: &[S]) -> Piece<S> {
        let n_in = v.len();
        let zero_row = || vec![S::zero(); n_in];
        match &self.layers[layer] {
            CompiledLayer::Affine { matrix, offset } => (matrix.clone(), offset.clone()),
            CompiledLayer::Pointwise { units } => {
                let mut jac = Vec::with_capacity(n_in);
                let mut c = Vec::with_capacity(n_in);
                for (k, unit) in units.iter().enumerate() {
                    let idx = unit.piece(v[k].clone(), dv[k].clone());
                    let (s, b) = unit.pieces[idx].clone();
                    let mut row = zero_row();
                    row[k] = s;
                    jac.push(row);
                    c.push(b);
                }
                (jac, c)
            }
            CompiledLayer::Maxout { weights, offsets } => {
                let mut jac = Vec::with_capacity(weights.len());
                let mut c = Vec::with_capacity(weights.len());
                for (w, o) in weights.iter().zip(offsets) {
                    let k = maxout_argmax(w, o, v, dv);
                    jac.push(w[k].clone());
                    c.push(o[k].clone());
                }
                (jac, c)
            }
            CompiledLayer::Groupsort { group_size } => {
                let mut jac = vec![zero_row(); n_in];
                for start in (0..n_in).step_by(*group_size) {
                    let order = sorted_order(&v[start..start + group_size], &dv[start..start + group_size]);
                    for (r, &src) in order.iter().enumerate() {
                        jac[start + r][start + src] = S::one();
                    }
                }
                (jac, vec![S::zero(); n_in])
            }
            CompiledLayer::Pwlu2d {
                grid_m,
                lines,
                values,
                matrix,
                offset,
            } => {
                let mut jac = Vec::with_capacity(values.len());
                let mut c = Vec::with_capacity(values.len());
                for (u, vals) in values.iter().enumerate() {
                    let (rp, rq) = (&matrix[2 * u], &matrix[2 * u + 1]);
                    let p = dot(rp, v) + offset[2 * u].clone();
                    let q = dot(rq, v) + offset[2 * u + 1].clone();
                    let ([gp, gq], b) =
                        pwlu_piece::<S>(*grid_m, vals, lines, p, q, dot(rp, dv), dot(rq, dv));
                    let row: Vec<S> = rp
                        .iter()
                        .zip(rq)
                        .map(|(a, bq)| gp.clone() * a.clone() + gq.clone() * bq.clone())
                        .collect();
                    jac.push(row);
                    c.push(
                        b + gp * offset[2 * u].clone() + gq * offset[2 * u + 1].clone(),
                    );
                }
                (jac, c)
            }
        }
    }

    /// Composed piece of every layer prefix at `x` on the side of `u`.
    pub fn prefix_pieces(&self, x: &[S], u: &[S]) -> Vec<Piece<S>> {
        let d = self.input_dim;
        let mut a: Vec<Vec<S>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { S::one() } else { S::zero() }).collect())
            .collect();
        let mut b = vec![S::zero(); d];
        let mut v = x.to_vec();
        let mut dv = u.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for l in 0..self.layers.len() {
            let (jac, c) = self.layer_local_map(l, &v, &dv);
            a = mat_mul(&jac, &a);
            b = jac
                .iter()
                .zip(&c)
                .map(|(row, ci)| dot(row, &b) + ci.clone())
                .collect();
            v = jac
                .iter()
                .zip(&c)
                .map(|(row, ci)| dot(row, &v) + ci.clone())
                .collect();
            dv = jac.iter().map(|row| dot(row, &dv)).collect();
            out.push((a.clone(), b.clone()));
        }
        out
    }
}

impl CompiledNetwork<f64> {
    /// Local affine piece of the whole network (and of its prefixes) at `x`,
    /// active on the side of `u`.
    pub fn local_piece(&self, x: &[f64], u: &[f64]) -> LocalPiece {
        let prefixes = self.prefix_pieces(x, u);
        let (matrix, offset) = prefixes.last().cloned().unwrap_or_else(|| {
            let d = self.input_dim;
            (
                (0..d)
                    .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
                vec![0.0; d],
            )
        });
        let value = matrix
            .iter()
            .zip(&offset)
            .map(|(row, o)| dot(row, x) + o)
            .collect();
        LocalPiece {
            value,
            matrix,
            offset,
            prefixes,
        }
    }
}

pub(crate) fn mat_mul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(S::zero(), |acc, (x, brow)| acc + x.clone() * brow[j].clone())
                })
                .collect()
        })
        .collect()
}

fn maxout_argmax<S: Scalar>(w: &[Vec<S>], o: &[S], v: &[S], dv: &[S]) -> usize {
    let vals: Vec<S> = w.iter().zip(o).map(|(r, b)| dot(r, v) + b.clone()).collect();
    let ders: Vec<S> = w.iter().map(|r| dot(r, dv)).collect();
    let mut best = 0;
    for k in 1..vals.len() {
        let diff = vals[k].clone() - vals[best].clone();
        let scale = S::max_abs(&[vals[k].clone(), vals[best].clone()]);
        if diff.is_zero_at(&scale) {
            if ders[k] > ders[best] {
                best = k;
            }
        } else if diff > S::zero() {
            best = k;
        }
    }
    best
}

/// Ascending order of a group, ties resolved by direction then index.
fn sorted_order<S: Scalar>(v: &[S], dv: &[S]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    // insertion sort keeps the tolerant comparison well behaved on tiny groups
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && before(v, dv, idx[j], idx[j - 1]) {
            idx.swap(j, j - 1);
            j -= 1;
        }
    }
    idx
}

fn before<S: Scalar>(v: &[S], dv: &[S], a: usize, b: usize) -> bool {
    let diff = v[a].clone() - v[b].clone();
    let scale = S::max_abs(&[v[a].clone(), v[b].clone()]);
    if !diff.is_zero_at(&scale) {
        return diff < S::zero();
    }
    if dv[a] != dv[b] {
        return dv[a] < dv[b];
    }
    a < b
}
