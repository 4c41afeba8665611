use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous piecewise-linear path given by its knots.
///
/// Each knot carries a parameter value and a point in `R^dim`. Points are
/// stored row-major in one buffer. The signature never reads the
/// parameters; they only matter for constructions that embed them as a
/// channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    dim: usize,
    params: Vec<f64>,
    points: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(dim: usize, params: Vec<f64>, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "paths need at least one channel"));
        }
        if points.len() != params.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: params.len() * dim,
                actual: points.len(),
            });
        }
        if params.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("params", "knot parameters must be nondecreasing"));
        }
        Ok(Self { dim, params, points })
    }

    /// Knots from rows of points, parameterised by knot index.
    pub fn from_points<P: AsRef<[f64]>>(rows: &[P]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut points = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            points.extend_from_slice(r);
        }
        Self::new(dim, (0..rows.len()).map(|i| i as f64).collect(), points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [f64] {
        &mut self.points
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.params.iter().copied().zip(self.points.chunks_exact(self.dim))
    }

    /// Sub-path over knots `range` (inclusive bounds as a slice range).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dim: self.dim,
            params: self.params[range.clone()].to_vec(),
            points: self.points[range.start * self.dim..range.end * self.dim].to_vec(),
        }
    }

    /// Keeps only the listed channels, in the given order.
    pub fn project(&self, channels: &[usize]) -> Self {
        let points = self
            .points
            .chunks_exact(self.dim)
            .flat_map(|p| channels.iter().map(move |&c| p[c]))
            .collect();
        Self {
            dim: channels.len(),
            params: self.params.clone(),
            points,
        }
    }

    /// Replaces the parameters, keeping the points.
    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, params, self.points.clone())
    }

    /// Prepends the knot parameter as channel 0.
    pub fn time_augment(&self) -> Self {
        let dim = self.dim + 1;
        let mut points = Vec::with_capacity(self.len() * dim);
        for (s, p) in self.knots() {
            points.push(s);
            points.extend_from_slice(p);
        }
        Self {
            dim,
            params: self.params.clone(),
            points,
        }
    }

    /// Total variation under the Euclidean norm.
    pub fn length(&self) -> f64 {
        (1..self.len())
            .map(|i| {
                self.point(i)
                    .iter()
                    .zip(self.point(i - 1))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum()
    }
}

/// Free-function form of [`PiecewiseLinearPath::time_augment`].
pub fn time_augment(path: &PiecewiseLinearPath) -> PiecewiseLinearPath {
    path.time_augment()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_augment_prepends_parameter() {
        let p = PiecewiseLinearPath::new(1, vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let q = p.time_augment();
        assert_eq!(q.dim(), 2);
        assert_eq!(q.params(), &[0.0, 1.0]);
        assert_eq!(q.point(0), &[0.0, 1.0]);
        assert_eq!(q.point(1), &[1.0, 2.0]);
        let r = q.time_augment();
        assert_eq!(r.dim(), 3);
        assert_eq!(r.point(1), &[1.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PiecewiseLinearPath::new(2, vec![0.0], vec![1.0]).is_err());
        assert!(PiecewiseLinearPath::new(1, vec![1.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseLinearPath::from_points(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn projection_and_slice() {
        let p = PiecewiseLinearPath::from_points(&[[0.0, 1.0, 2.0], [3.0, 4.0, 5.0], [6.0, 7.0, 8.0]])
            .unwrap();
        let q = p.project(&[2, 0]);
        assert_eq!(q.point(1), &[5.0, 3.0]);
        let s = p.slice(1..3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.point(0), &[3.0, 4.0, 5.0]);
    }
}
