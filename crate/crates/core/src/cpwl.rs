//! One-dimensional continuous piecewise-linear functions.
//!
//! A [`ScalarCpwl`] is stored as its sorted breakpoints, the slope of every
//! piece (one more than the breakpoints) and its value at the first
//! breakpoint. Continuity is therefore structural. Every constructor returns
//! the canonical form: breakpoints closer than the dedup tolerance are merged
//! and breakpoints whose neighbouring slopes agree are dropped.

use serde::{Deserialize, Serialize};

use crate::error::{CpwlError, Result};
use crate::scalar::Scalar;

pub(crate) fn breakpoint_tol(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

pub(crate) fn slope_tol(s: f64) -> f64 {
    1e-12 * s.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScalarCpwl", into = "RawScalarCpwl")]
pub struct ScalarCpwl {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    anchor_value: f64,
    knot_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawScalarCpwl {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    anchor_value: f64,
}

impl TryFrom<RawScalarCpwl> for ScalarCpwl {
    type Error = CpwlError;

    fn try_from(raw: RawScalarCpwl) -> Result<Self> {
        ScalarCpwl::new(raw.breakpoints, raw.slopes, raw.anchor_value)
    }
}

impl From<ScalarCpwl> for RawScalarCpwl {
    fn from(f: ScalarCpwl) -> Self {
        RawScalarCpwl {
            breakpoints: f.breakpoints,
            slopes: f.slopes,
            anchor_value: f.anchor_value,
        }
    }
}

fn accumulate_values(breakpoints: &[f64], slopes: &[f64], anchor: f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(breakpoints.len());
    if let Some(&first) = breakpoints.first() {
        let _ = first;
        values.push(anchor);
        for j in 1..breakpoints.len() {
            let prev = values[j - 1];
            values.push(prev + slopes[j] * (breakpoints[j] - breakpoints[j - 1]));
        }
    }
    values
}

fn sort_dedup(points: &mut Vec<f64>) {
    points.retain(|t| t.is_finite());
    points.sort_by(f64::total_cmp);
    points.dedup_by(|b, a| *b - *a < breakpoint_tol(*b));
}

impl ScalarCpwl {
    /// Builds the canonical function with the given breakpoints, piece slopes
    /// and value at the first breakpoint (value at 0 when there are none).
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, anchor_value: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(CpwlError::InvalidParameter(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints
            .iter()
            .chain(&slopes)
            .chain(std::iter::once(&anchor_value))
            .any(|v| !v.is_finite())
        {
            return Err(CpwlError::InvalidParameter(
                "non-finite breakpoint, slope or anchor".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CpwlError::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self::canonical(&breakpoints, &slopes, anchor_value))
    }

    fn canonical(breakpoints: &[f64], slopes: &[f64], anchor: f64) -> Self {
        let values = accumulate_values(breakpoints, slopes, anchor);

        // merge breakpoints that are closer than the dedup tolerance
        let mut kept_b: Vec<f64> = Vec::with_capacity(breakpoints.len());
        let mut kept_v: Vec<f64> = Vec::with_capacity(breakpoints.len());
        let mut kept_s: Vec<f64> = vec![slopes[0]];
        for j in 0..breakpoints.len() {
            if let Some(&last) = kept_b.last() {
                if breakpoints[j] - last < breakpoint_tol(breakpoints[j]) {
                    *kept_s.last_mut().unwrap() = slopes[j + 1];
                    continue;
                }
            }
            kept_b.push(breakpoints[j]);
            kept_v.push(values[j]);
            kept_s.push(slopes[j + 1]);
        }

        // drop removable breakpoints
        let mut out_b = Vec::with_capacity(kept_b.len());
        let mut out_v = Vec::with_capacity(kept_b.len());
        let mut out_s = vec![kept_s[0]];
        for j in 0..kept_b.len() {
            let left = *out_s.last().unwrap();
            let right = kept_s[j + 1];
            if (left - right).abs() < slope_tol(left.abs().max(right.abs())) {
                continue;
            }
            out_b.push(kept_b[j]);
            out_v.push(kept_v[j]);
            out_s.push(right);
        }

        let anchor_value = match out_v.first() {
            Some(&v) => v,
            None => Self::eval_raw(breakpoints, slopes, &values, anchor, 0.0),
        };
        let knot_values = accumulate_values(&out_b, &out_s, anchor_value);
        ScalarCpwl {
            breakpoints: out_b,
            slopes: out_s,
            anchor_value,
            knot_values,
        }
    }

    fn eval_raw(breakpoints: &[f64], slopes: &[f64], values: &[f64], anchor: f64, t: f64) -> f64 {
        if breakpoints.is_empty() {
            return anchor + slopes[0] * t;
        }
        let i = breakpoints.partition_point(|&b| b <= t);
        if i == 0 {
            values[0] + slopes[0] * (t - breakpoints[0])
        } else {
            values[i - 1] + slopes[i] * (t - breakpoints[i - 1])
        }
    }

    /// Returns the canonical form of this function (a no-op for values built
    /// through the public constructors).
    pub fn canonicalize(&self) -> Self {
        Self::canonical(&self.breakpoints, &self.slopes, self.anchor_value)
    }

    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self::canonical(&[], &[slope], intercept)
    }

    pub fn identity() -> Self {
        Self::affine(1.0, 0.0)
    }

    pub fn relu() -> Self {
        Self::canonical(&[0.0], &[0.0, 1.0], 0.0)
    }

    pub fn leaky_relu(negative_slope: f64) -> Self {
        Self::canonical(&[0.0], &[negative_slope, 1.0], 0.0)
    }

    pub fn abs() -> Self {
        Self::canonical(&[0.0], &[-1.0, 1.0], 0.0)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn anchor_value(&self) -> f64 {
        self.anchor_value
    }

    /// Number of affine pieces (`breakpoints + 1`).
    pub fn num_regions(&self) -> usize {
        self.breakpoints.len() + 1
    }

    pub fn is_affine(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        Self::eval_raw(
            &self.breakpoints,
            &self.slopes,
            &self.knot_values,
            self.anchor_value,
            t,
        )
    }

    /// Index of the piece active at `t` on the side given by the sign of
    /// `direction`; a zero direction resolves to the right-hand piece.
    pub fn piece_index(&self, t: f64, direction: f64) -> usize {
        piece_index_in(&self.breakpoints, t, direction)
    }

    /// `(slope, intercept)` of piece `i`.
    pub fn piece(&self, i: usize) -> (f64, f64) {
        let s = self.slopes[i];
        if self.breakpoints.is_empty() {
            return (s, self.anchor_value);
        }
        let j = i.saturating_sub(1);
        (s, self.knot_values[j] - s * self.breakpoints[j])
    }

    pub fn slope_at(&self, t: f64) -> f64 {
        self.slopes[self.piece_index(t, 1.0)]
    }

    /// Pieces as `(slope, intercept)` in the requested number type, computed
    /// from the stored representation in that arithmetic.
    pub(crate) fn pieces_in<S: Scalar>(&self) -> Vec<(S, S)> {
        let slopes: Vec<S> = self.slopes.iter().map(|&s| S::from_f64(s)).collect();
        if self.breakpoints.is_empty() {
            return vec![(slopes[0].clone(), S::from_f64(self.anchor_value))];
        }
        let bps: Vec<S> = self.breakpoints.iter().map(|&b| S::from_f64(b)).collect();
        let mut values = vec![S::from_f64(self.anchor_value)];
        for j in 1..bps.len() {
            let v = values[j - 1].clone() + slopes[j].clone() * (bps[j].clone() - bps[j - 1].clone());
            values.push(v);
        }
        (0..slopes.len())
            .map(|i| {
                let j = i.saturating_sub(1);
                let s = slopes[i].clone();
                let c = values[j].clone() - s.clone() * bps[j].clone();
                (s, c)
            })
            .collect()
    }

    /// Assembles a canonical function from a sorted, deduplicated superset of
    /// its breakpoints, an exact slope oracle valid strictly inside each
    /// interval and its value at the first candidate.
    pub(crate) fn assemble(
        candidates: &[f64],
        slope_at: impl Fn(f64) -> f64,
        value_at: impl Fn(f64) -> f64,
    ) -> Self {
        if candidates.is_empty() {
            return Self::canonical(&[], &[slope_at(0.0)], value_at(0.0));
        }
        let k = candidates.len();
        let mut slopes = Vec::with_capacity(k + 1);
        slopes.push(slope_at(candidates[0] - 1.0));
        for j in 1..k {
            slopes.push(slope_at(0.5 * (candidates[j - 1] + candidates[j])));
        }
        slopes.push(slope_at(candidates[k - 1] + 1.0));
        Self::canonical(candidates, &slopes, value_at(candidates[0]))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &ScalarCpwl, inner: &ScalarCpwl) -> Self {
        let mut cands: Vec<f64> = inner.breakpoints.clone();
        if !outer.breakpoints.is_empty() {
            for i in 0..inner.num_regions() {
                let (s, c) = inner.piece(i);
                if s.abs() <= slope_tol(s) {
                    continue;
                }
                let lo = if i == 0 { f64::NEG_INFINITY } else { inner.breakpoints[i - 1] };
                let hi = if i == inner.breakpoints.len() { f64::INFINITY } else { inner.breakpoints[i] };
                for &beta in &outer.breakpoints {
                    let t = (beta - c) / s;
                    if t > lo && t < hi {
                        cands.push(t);
                    }
                }
            }
        }
        sort_dedup(&mut cands);
        Self::assemble(
            &cands,
            |t| {
                let ds = inner.slope_at(t);
                outer.slopes[outer.piece_index(inner.eval(t), ds)] * ds
            },
            |t| outer.eval(inner.eval(t)),
        )
    }

    pub fn sum(f: &ScalarCpwl, g: &ScalarCpwl) -> Self {
        Self::linear_combination(&[(1.0, f), (1.0, g)], 0.0)
    }

    /// `offset + Σ weight · f`.
    pub fn linear_combination(terms: &[(f64, &ScalarCpwl)], offset: f64) -> Self {
        let mut cands: Vec<f64> = terms
            .iter()
            .filter(|(w, _)| *w != 0.0)
            .flat_map(|(_, f)| f.breakpoints.iter().copied())
            .collect();
        sort_dedup(&mut cands);
        Self::assemble(
            &cands,
            |t| terms.iter().map(|(w, f)| w * f.slope_at(t)).sum(),
            |t| offset + terms.iter().map(|(w, f)| w * f.eval(t)).sum::<f64>(),
        )
    }

    /// Pointwise `rank`-th smallest value (0-based) of the given functions.
    pub fn order_statistic(fs: &[ScalarCpwl], rank: usize) -> Self {
        assert!(rank < fs.len(), "rank out of range");
        if fs.len() == 1 {
            return fs[0].clone();
        }
        let mut union: Vec<f64> = fs.iter().flat_map(|f| f.breakpoints.iter().copied()).collect();
        sort_dedup(&mut union);
        let mut cands = union.clone();
        let n_int = union.len() + 1;
        for k in 0..n_int {
            let lo = if k == 0 { f64::NEG_INFINITY } else { union[k - 1] };
            let hi = if k == union.len() { f64::INFINITY } else { union[k] };
            let sample = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (false, true) => hi - 1.0,
                (true, false) => lo + 1.0,
                (false, false) => 0.0,
            };
            let pieces: Vec<(f64, f64)> = fs
                .iter()
                .map(|f| f.piece(f.piece_index(sample, 1.0)))
                .collect();
            for a in 0..pieces.len() {
                for b in a + 1..pieces.len() {
                    let ds = pieces[a].0 - pieces[b].0;
                    if ds.abs() <= slope_tol(pieces[a].0.abs().max(pieces[b].0.abs())) {
                        continue;
                    }
                    let t = -(pieces[a].1 - pieces[b].1) / ds;
                    if t > lo && t < hi {
                        cands.push(t);
                    }
                }
            }
        }
        sort_dedup(&mut cands);
        let ranked = |t: f64| -> usize {
            let mut idx: Vec<usize> = (0..fs.len()).collect();
            idx.sort_by(|&a, &b| {
                fs[a]
                    .eval(t)
                    .total_cmp(&fs[b].eval(t))
                    .then(fs[a].slope_at(t).total_cmp(&fs[b].slope_at(t)))
                    .then(a.cmp(&b))
            });
            idx[rank]
        };
        Self::assemble(
            &cands,
            |t| fs[ranked(t)].slope_at(t),
            |t| fs[ranked(t)].eval(t),
        )
    }

    pub fn max_of(fs: &[ScalarCpwl]) -> Self {
        Self::order_statistic(fs, fs.len() - 1)
    }
}

/// Piece index over sorted breakpoints with one-sided tie resolution.
pub(crate) fn piece_index_in<S: Scalar>(breakpoints: &[S], t: S, direction: S) -> usize {
    let lo = breakpoints.partition_point(|b| b.clone() < t.clone() - S::tol(b));
    let hi = breakpoints.partition_point(|b| b.clone() <= t.clone() + S::tol(b));
    if lo == hi || direction < S::zero() {
        lo
    } else {
        hi
    }
}
