//! Truncated signatures of piecewise-linear paths.
//!
//! A signature truncated at depth `N` over `d` channels is stored as `N`
//! dense levels; level `k` holds `d^k` coefficients indexed by multi-index
//! `(i_1, .., i_k)` in row-major order, so `i_1` varies slowest. Level 0 is
//! always the scalar 1 and is left implicit.
//!
//! The forward pass multiplies segment exponentials left to right using
//! Chen's identity. The backward pass retains the prefix products and walks
//! the segments in reverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;

pub const MAX_DEPTH: usize = 6;

/// Default cap on the total number of signature coefficients.
pub const DEFAULT_COEFFICIENT_BUDGET: usize = 1 << 22;

pub const DEFAULT_ORACLE_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSignature {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

/// Number of coefficients `d + d^2 + .. + d^depth`.
pub fn coefficient_count(dim: usize, depth: usize) -> usize {
    (1..=depth as u32).map(|k| dim.pow(k)).sum()
}

pub fn check_shape(dim: usize, depth: usize, budget: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::invalid("depth", format!("must lie in 1..={MAX_DEPTH}")));
    }
    let requested = (1..=depth as u32)
        .try_fold(0usize, |acc, k| dim.checked_pow(k).and_then(|p| acc.checked_add(p)))
        .unwrap_or(usize::MAX);
    if requested > budget {
        return Err(Error::CoefficientBudget { requested, budget });
    }
    Ok(())
}

impl TruncatedSignature {
    /// The signature of a constant path: every level zero.
    pub fn zeros(dim: usize, depth: usize) -> Self {
        let levels = (1..=depth as u32).map(|k| vec![0.0; dim.pow(k)]).collect();
        Self { dim, depth, levels }
    }

    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        for (k, level) in levels.iter().enumerate() {
            let expected = dim.pow(k as u32 + 1);
            if level.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: level.len(),
                });
            }
        }
        Ok(Self {
            dim,
            depth: levels.len(),
            levels,
        })
    }

    /// Inverse of [`TruncatedSignature::to_flat`].
    pub fn from_flat(dim: usize, depth: usize, flat: &[f64]) -> Result<Self> {
        let expected = coefficient_count(dim, depth);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: flat.len(),
            });
        }
        let mut levels = Vec::with_capacity(depth);
        let mut offset = 0;
        for k in 1..=depth as u32 {
            let n = dim.pow(k);
            levels.push(flat[offset..offset + n].to_vec());
            offset += n;
        }
        Ok(Self { dim, depth, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Level `k` for `k` in `1..=depth`.
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Coefficient for a multi-index of zero-based channels.
    pub fn get(&self, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let idx = word.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.levels[word.len() - 1][idx]
    }

    /// Levels concatenated in order, `d + d^2 + ..` entries.
    pub fn to_flat(&self) -> Vec<f64> {
        self.levels.concat()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        if self.depth != other.depth {
            return Err(Error::DimensionMismatch {
                expected: self.depth,
                actual: other.depth,
            });
        }
        Ok(())
    }
}

/// `out[i * b.len() + j] += a[i] * b[j]`
fn outer_acc(out: &mut [f64], a: &[f64], b: &[f64]) {
    let nb = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (o, &bj) in out[i * nb..(i + 1) * nb].iter_mut().zip(b) {
            *o += ai * bj;
        }
    }
}

/// `out[u] += sum_v t[u * v.len() + v] * y[v]`
fn contract_right(out: &mut [f64], t: &[f64], y: &[f64]) {
    let nv = y.len();
    for (o, row) in out.iter_mut().zip(t.chunks_exact(nv)) {
        *o += row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out[v] += sum_u t[u * out.len() + v] * x[u]`
fn contract_left(out: &mut [f64], t: &[f64], x: &[f64]) {
    let nv = out.len();
    for (&xu, row) in x.iter().zip(t.chunks_exact(nv)) {
        if xu == 0.0 {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(row) {
            *o += xu * a;
        }
    }
}

/// Signature of a single linear segment: the truncated tensor exponential of
/// its increment.
pub fn sig_segment(delta: &[f64], depth: usize) -> Result<TruncatedSignature> {
    check_shape(delta.len(), depth, usize::MAX)?;
    Ok(segment_exp(delta, depth))
}

fn segment_exp(delta: &[f64], depth: usize) -> TruncatedSignature {
    let dim = delta.len();
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(depth);
    levels.push(delta.to_vec());
    for k in 2..=depth {
        let mut next = vec![0.0; dim.pow(k as u32)];
        outer_acc(&mut next, &levels[k - 2], delta);
        let inv_k = 1.0 / k as f64;
        next.iter_mut().for_each(|x| *x *= inv_k);
        levels.push(next);
    }
    TruncatedSignature { dim, depth, levels }
}

/// Product in the truncated tensor algebra: the signature of the
/// concatenation of a path with signature `a` and one with signature `b`.
pub fn chen_mul(a: &TruncatedSignature, b: &TruncatedSignature) -> Result<TruncatedSignature> {
    a.same_shape(b)?;
    Ok(chen_mul_unchecked(a, b))
}

fn chen_mul_unchecked(a: &TruncatedSignature, b: &TruncatedSignature) -> TruncatedSignature {
    let depth = a.depth;
    let mut levels = Vec::with_capacity(depth);
    for k in 1..=depth {
        let mut out: Vec<f64> = a.levels[k - 1]
            .iter()
            .zip(&b.levels[k - 1])
            .map(|(x, y)| x + y)
            .collect();
        for i in 1..k {
            outer_acc(&mut out, &a.levels[i - 1], &b.levels[k - i - 1]);
        }
        levels.push(out);
    }
    TruncatedSignature {
        dim: a.dim,
        depth,
        levels,
    }
}

fn increments(path: &PiecewiseLinearPath) -> impl Iterator<Item = Vec<f64>> + '_ {
    (1..path.len()).map(move |i| {
        path.point(i)
            .iter()
            .zip(path.point(i - 1))
            .map(|(a, b)| a - b)
            .collect()
    })
}

/// Truncated signature of a piecewise-linear path.
///
/// A single knot gives the zero signature of a constant path.
pub fn signature(path: &PiecewiseLinearPath, depth: usize) -> Result<TruncatedSignature> {
    signature_with_budget(path, depth, DEFAULT_COEFFICIENT_BUDGET)
}

pub fn signature_with_budget(
    path: &PiecewiseLinearPath,
    depth: usize,
    budget: usize,
) -> Result<TruncatedSignature> {
    if path.is_empty() {
        return Err(Error::invalid("path", "needs at least one knot"));
    }
    check_shape(path.dim(), depth, budget)?;
    let mut acc = TruncatedSignature::zeros(path.dim(), depth);
    for delta in increments(path) {
        acc = chen_mul_unchecked(&acc, &segment_exp(&delta, depth));
    }
    Ok(acc)
}

/// Reverse-mode derivative of `<upstream, signature(path, depth)>` with
/// respect to every knot coordinate. The result has the layout of
/// `path.points()`.
pub fn signature_backward(
    path: &PiecewiseLinearPath,
    depth: usize,
    upstream: &TruncatedSignature,
) -> Result<Vec<f64>> {
    if path.is_empty() {
        return Err(Error::invalid("path", "needs at least one knot"));
    }
    check_shape(path.dim(), depth, DEFAULT_COEFFICIENT_BUDGET)?;
    if upstream.dim != path.dim() || upstream.depth != depth {
        return Err(Error::DimensionMismatch {
            expected: coefficient_count(path.dim(), depth),
            actual: coefficient_count(upstream.dim, upstream.depth),
        });
    }
    let dim = path.dim();
    let deltas: Vec<Vec<f64>> = increments(path).collect();
    let exps: Vec<TruncatedSignature> = deltas.iter().map(|d| segment_exp(d, depth)).collect();
    let mut prefixes = Vec::with_capacity(exps.len());
    let mut acc = TruncatedSignature::zeros(dim, depth);
    for e in &exps {
        prefixes.push(acc.clone());
        acc = chen_mul_unchecked(&acc, e);
    }

    let mut grad_points = vec![0.0; path.points().len()];
    let mut grad_acc = upstream.levels.clone();
    for j in (0..exps.len()).rev() {
        let (grad_prefix, grad_exp) = chen_mul_adjoint(&grad_acc, &prefixes[j], &exps[j]);
        let grad_delta = segment_exp_adjoint(&grad_exp, &deltas[j], &exps[j]);
        for (c, g) in grad_delta.iter().enumerate() {
            grad_points[(j + 1) * dim + c] += g;
            grad_points[j * dim + c] -= g;
        }
        grad_acc = grad_prefix;
    }
    Ok(grad_points)
}

/// Adjoint of `c = x * y`: returns `(dL/dx, dL/dy)` given `dL/dc`.
fn chen_mul_adjoint(
    grad: &[Vec<f64>],
    x: &TruncatedSignature,
    y: &TruncatedSignature,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let depth = grad.len();
    let mut gx: Vec<Vec<f64>> = grad.to_vec();
    let mut gy: Vec<Vec<f64>> = grad.to_vec();
    for k in 2..=depth {
        for i in 1..k {
            contract_right(&mut gx[i - 1], &grad[k - 1], &y.levels[k - i - 1]);
            contract_left(&mut gy[k - i - 1], &grad[k - 1], &x.levels[i - 1]);
        }
    }
    (gx, gy)
}

/// Adjoint of the segment exponential, from level gradients to the
/// increment gradient.
fn segment_exp_adjoint(grad: &[Vec<f64>], delta: &[f64], exp: &TruncatedSignature) -> Vec<f64> {
    let depth = grad.len();
    let mut g: Vec<Vec<f64>> = grad.to_vec();
    let mut grad_delta = vec![0.0; delta.len()];
    for k in (2..=depth).rev() {
        let inv_k = 1.0 / k as f64;
        let scaled: Vec<f64> = g[k - 1].iter().map(|x| x * inv_k).collect();
        contract_right(&mut g[k - 2], &scaled, delta);
        contract_left(&mut grad_delta, &scaled, &exp.levels[k - 2]);
    }
    grad_delta.iter_mut().zip(&g[0]).for_each(|(a, b)| *a += b);
    grad_delta
}

/// Direct discretisation of the iterated integrals on a uniform grid.
///
/// The path is run at unit speed per segment over `[0, 1]`; each grid cell
/// integrates level `k - 1` against the increment of the path using the
/// average of its values at the cell ends. This shares no code with the
/// Chen-product route and serves as a test oracle. Error is `O(steps^-2)`.
pub fn oracle_signature(path: &PiecewiseLinearPath, depth: usize, steps: usize) -> Result<TruncatedSignature> {
    if steps == 0 {
        return Err(Error::invalid("steps", "must be positive"));
    }
    if path.is_empty() {
        return Err(Error::invalid("path", "needs at least one knot"));
    }
    check_shape(path.dim(), depth, DEFAULT_COEFFICIENT_BUDGET)?;
    let dim = path.dim();
    let mut levels: Vec<Vec<f64>> = (1..=depth as u32).map(|k| vec![0.0; dim.pow(k)]).collect();
    if path.len() < 2 {
        return TruncatedSignature::from_levels(dim, levels);
    }
    let segments = path.len() - 1;
    let position = |u: f64| -> Vec<f64> {
        let x = u * segments as f64;
        let j = (x.floor() as usize).min(segments - 1);
        let w = x - j as f64;
        path.point(j)
            .iter()
            .zip(path.point(j + 1))
            .map(|(a, b)| a + w * (b - a))
            .collect()
    };
    let mut prev = position(0.0);
    for r in 1..=steps {
        let cur = position(r as f64 / steps as f64);
        let dx: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let mut lower_old = levels[0].clone();
        levels[0].iter_mut().zip(&dx).for_each(|(s, d)| *s += d);
        for k in 2..=depth {
            let old = levels[k - 1].clone();
            let mid: Vec<f64> = lower_old
                .iter()
                .zip(&levels[k - 2])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            outer_acc(&mut levels[k - 1], &mid, &dx);
            lower_old = old;
        }
        prev = cur;
    }
    TruncatedSignature::from_levels(dim, levels)
}

/// Signed area between the `(i, j)` projection of the path and its chord:
/// half the antisymmetric part of the level-2 signature.
pub fn levy_area(path: &PiecewiseLinearPath, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::invalid("channels", "Lévy area needs two distinct channels"));
    }
    let dim = path.dim();
    if i >= dim || j >= dim {
        return Err(Error::invalid("channels", format!("channel out of range for dim {dim}")));
    }
    let sig = signature(&path.project(&[i, j]), 2)?;
    Ok(0.5 * (sig.get(&[0, 1]) - sig.get(&[1, 0])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(rows: &[&[f64]]) -> PiecewiseLinearPath {
        PiecewiseLinearPath::from_points(rows).unwrap()
    }

    #[test]
    fn segment_examples() {
        let s = sig_segment(&[2.0], 3).unwrap();
        assert_eq!(s.level(1), &[2.0]);
        assert_eq!(s.level(2), &[2.0]);
        assert!((s.level(3)[0] - 4.0 / 3.0).abs() < 1e-15);

        let s = sig_segment(&[1.0, 0.0], 2).unwrap();
        assert_eq!(s.level(1), &[1.0, 0.0]);
        assert_eq!(s.level(2), &[0.5, 0.0, 0.0, 0.0]);

        let s = sig_segment(&[0.0, 0.0, 0.0], 4).unwrap();
        assert_eq!(s, TruncatedSignature::zeros(3, 4));
    }

    #[test]
    fn chen_examples() {
        let a = sig_segment(&[1.0], 2).unwrap();
        let b = sig_segment(&[2.0], 2).unwrap();
        let c = chen_mul(&a, &b).unwrap();
        assert_eq!(c.level(1), &[3.0]);
        assert_eq!(c.level(2), &[4.5]);
        assert_eq!(c, sig_segment(&[3.0], 2).unwrap());

        let x = sig_segment(&[0.3, -1.2], 3).unwrap();
        let id = sig_segment(&[0.0, 0.0], 3).unwrap();
        assert_eq!(chen_mul(&x, &id).unwrap(), x);
        assert!(chen_mul(&x, &sig_segment(&[0.0, 0.0], 2).unwrap()).is_err());
        assert!(chen_mul(&x, &sig_segment(&[0.0], 3).unwrap()).is_err());
    }

    #[test]
    fn one_dimensional_depends_on_endpoints() {
        let p = PiecewiseLinearPath::new(1, vec![0.0, 0.3, 1.0], vec![0.0, 7.0, 3.0]).unwrap();
        let s = signature(&p, 2).unwrap();
        assert!((s.level(1)[0] - 3.0).abs() < 1e-12);
        assert!((s.level(2)[0] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn l_path_level_two() {
        let p = path(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]);
        let s = signature(&p, 2).unwrap();
        assert!((s.get(&[0, 1]) - 1.0).abs() < 1e-15);
        assert_eq!(s.get(&[1, 0]), 0.0);
        assert!((levy_area(&p, 0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((levy_area(&p, 1, 0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_knot_and_empty() {
        let p = path(&[&[1.0, 2.0]]);
        assert_eq!(signature(&p, 3).unwrap(), TruncatedSignature::zeros(2, 3));
        let empty = PiecewiseLinearPath::new(2, vec![], vec![]).unwrap();
        assert!(signature(&empty, 2).is_err());
    }

    #[test]
    fn depth_and_budget_limits() {
        let p = path(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert!(signature(&p, 0).is_err());
        assert!(signature(&p, MAX_DEPTH + 1).is_err());
        assert!(matches!(
            signature_with_budget(&p, 3, 10),
            Err(Error::CoefficientBudget { requested: 14, budget: 10 })
        ));
    }

    #[test]
    fn levy_area_errors_and_straight_line() {
        let p = path(&[&[0.0, 0.0], &[1.0, 2.0], &[2.0, 4.0]]);
        assert!(levy_area(&p, 0, 0).is_err());
        assert!(levy_area(&p, 0, 2).is_err());
        assert!(levy_area(&p, 0, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn oracle_exact_on_low_levels_of_straight_segment() {
        let p = path(&[&[0.0], &[2.0]]);
        for steps in [1, 3, 17] {
            let s = oracle_signature(&p, 2, steps).unwrap();
            assert!((s.level(1)[0] - 2.0).abs() < 1e-12);
            assert!((s.level(2)[0] - 2.0).abs() < 1e-12);
        }
        let s = oracle_signature(&p, 4, DEFAULT_ORACLE_STEPS).unwrap();
        let exact = sig_segment(&[2.0], 4).unwrap();
        assert!(s.max_abs_diff(&exact) < 1e-7);
    }

    #[test]
    fn backward_one_dimensional_depth_one() {
        let p = PiecewiseLinearPath::new(1, vec![0.0, 1.0, 2.0, 3.0], vec![0.5, 1.0, -2.0, 4.0]).unwrap();
        let up = TruncatedSignature::from_levels(1, vec![vec![1.0]]).unwrap();
        assert_eq!(signature_backward(&p, 1, &up).unwrap(), vec![-1.0, 0.0, 0.0, 1.0]);
        let zero = TruncatedSignature::zeros(1, 1);
        assert_eq!(signature_backward(&p, 1, &zero).unwrap(), vec![0.0; 4]);
        assert!(signature_backward(&p, 2, &up).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let p = path(&[&[0.0, 1.0], &[1.0, -1.0], &[0.5, 0.25]]);
        let s = signature(&p, 3).unwrap();
        let flat = s.to_flat();
        assert_eq!(flat.len(), coefficient_count(2, 3));
        assert_eq!(TruncatedSignature::from_flat(2, 3, &flat).unwrap(), s);
    }
}
