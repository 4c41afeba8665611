//! Path imputation: turning a partially observed series into a
//! piecewise-linear path the signature can consume.
//!
//! Every strategy returns a time-augmented path: channel 0 is time, the
//! remaining channels are the imputed values (plus indicators or posterior
//! variances for the strategies that double the width).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, GpPosterior};
use crate::path::PiecewiseLinearPath;
use crate::timeseries::IrregularTimeSeries;

/// Strategy tag, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputationKind {
    Linear,
    ForwardFill,
    Zero,
    Indicator,
    Causal,
    GpMean,
    GpMc,
    GpPom,
}

impl ImputationKind {
    pub const ALL: [ImputationKind; 8] = [
        ImputationKind::Linear,
        ImputationKind::ForwardFill,
        ImputationKind::Zero,
        ImputationKind::Indicator,
        ImputationKind::Causal,
        ImputationKind::GpMean,
        ImputationKind::GpMc,
        ImputationKind::GpPom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ImputationKind::Linear => "linear",
            ImputationKind::ForwardFill => "forward-fill",
            ImputationKind::Zero => "zero",
            ImputationKind::Indicator => "indicator",
            ImputationKind::Causal => "causal",
            ImputationKind::GpMean => "gp-mean",
            ImputationKind::GpMc => "gp-mc",
            ImputationKind::GpPom => "gp-pom",
        }
    }

    pub fn needs_posterior(self) -> bool {
        matches!(self, ImputationKind::GpMean | ImputationKind::GpMc | ImputationKind::GpPom)
    }

    /// Number of path channels, time included, for `d` data channels.
    pub fn output_dim(self, d: usize) -> usize {
        match self {
            ImputationKind::Indicator | ImputationKind::GpPom => 2 * d + 1,
            _ => d + 1,
        }
    }
}

impl fmt::Display for ImputationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImputationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid("imputation", format!("unknown strategy `{s}`")))
    }
}

/// A strategy ready to run on one instance. GP variants carry that
/// instance's fitted posterior.
#[derive(Debug, Clone, Copy)]
pub enum ImputationStrategy<'a> {
    Linear,
    ForwardFill,
    Zero,
    Indicator,
    Causal,
    GpMean(&'a GpPosterior),
    GpMc(&'a GpPosterior),
    GpPom(&'a GpPosterior),
}

impl<'a> ImputationStrategy<'a> {
    pub fn kind(&self) -> ImputationKind {
        match self {
            ImputationStrategy::Linear => ImputationKind::Linear,
            ImputationStrategy::ForwardFill => ImputationKind::ForwardFill,
            ImputationStrategy::Zero => ImputationKind::Zero,
            ImputationStrategy::Indicator => ImputationKind::Indicator,
            ImputationStrategy::Causal => ImputationKind::Causal,
            ImputationStrategy::GpMean(_) => ImputationKind::GpMean,
            ImputationStrategy::GpMc(_) => ImputationKind::GpMc,
            ImputationStrategy::GpPom(_) => ImputationKind::GpPom,
        }
    }

    /// Builds the strategy for a tag; GP tags require `posterior`.
    pub fn from_kind(kind: ImputationKind, posterior: Option<&'a GpPosterior>) -> Result<Self> {
        let need = || posterior.ok_or_else(|| Error::invalid("strategy", format!("{kind} needs a fitted posterior")));
        Ok(match kind {
            ImputationKind::Linear => ImputationStrategy::Linear,
            ImputationKind::ForwardFill => ImputationStrategy::ForwardFill,
            ImputationKind::Zero => ImputationStrategy::Zero,
            ImputationKind::Indicator => ImputationStrategy::Indicator,
            ImputationKind::Causal => ImputationStrategy::Causal,
            ImputationKind::GpMean => ImputationStrategy::GpMean(need()?),
            ImputationKind::GpMc => ImputationStrategy::GpMc(need()?),
            ImputationKind::GpPom => ImputationStrategy::GpPom(need()?),
        })
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must be nonempty"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("grid", "must be sorted"));
    }
    Ok(())
}

/// Row index whose timestamp equals `t` exactly.
fn row_at(ts: &IrregularTimeSeries, t: f64) -> Option<usize> {
    let times = ts.times();
    let i = times.partition_point(|&s| s < t);
    (i < times.len() && times[i] == t).then_some(i)
}

/// Grid-major rows `[t, columns...]` into a time-augmented path.
fn build(grid: &[f64], width: usize, mut fill: impl FnMut(usize, f64, &mut [f64])) -> PiecewiseLinearPath {
    let dim = width + 1;
    let mut points = vec![0.0; grid.len() * dim];
    for (i, &t) in grid.iter().enumerate() {
        let row = &mut points[i * dim..(i + 1) * dim];
        row[0] = t;
        fill(i, t, &mut row[1..]);
    }
    PiecewiseLinearPath::new(dim, grid.to_vec(), points).expect("grid was validated")
}

/// Linear interpolation between the bracketing observations of each
/// channel; zero outside the observed span.
pub fn impute_linear(ts: &IrregularTimeSeries, grid: &[f64]) -> Result<PiecewiseLinearPath> {
    check_grid(grid)?;
    let obs: Vec<Vec<(f64, f64)>> = (0..ts.dim()).map(|c| ts.channel_observations(c)).collect();
    Ok(build(grid, ts.dim(), |_, t, row| {
        for (c, o) in obs.iter().enumerate() {
            row[c] = interpolate(o, t);
        }
    }))
}

fn interpolate(obs: &[(f64, f64)], t: f64) -> f64 {
    let (Some(first), Some(last)) = (obs.first(), obs.last()) else {
        return 0.0;
    };
    if t < first.0 || t > last.0 {
        return 0.0;
    }
    let k = obs.partition_point(|o| o.0 <= t);
    let (t0, v0) = obs[k - 1];
    if t0 == t || k == obs.len() {
        return v0;
    }
    let (t1, v1) = obs[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Last observation carried forward; zero before the first observation.
pub fn impute_forward_fill(ts: &IrregularTimeSeries, grid: &[f64]) -> Result<PiecewiseLinearPath> {
    check_grid(grid)?;
    let obs: Vec<Vec<(f64, f64)>> = (0..ts.dim()).map(|c| ts.channel_observations(c)).collect();
    Ok(build(grid, ts.dim(), |_, t, row| {
        for (c, o) in obs.iter().enumerate() {
            let k = o.partition_point(|p| p.0 <= t);
            row[c] = if k == 0 { 0.0 } else { o[k - 1].1 };
        }
    }))
}

/// Observed value where the grid point matches an observation time, zero
/// otherwise.
pub fn impute_zero(ts: &IrregularTimeSeries, grid: &[f64]) -> Result<PiecewiseLinearPath> {
    check_grid(grid)?;
    Ok(build(grid, ts.dim(), |_, t, row| {
        if let Some(r) = row_at(ts, t) {
            for (c, v) in ts.rows()[r].iter().enumerate() {
                row[c] = v.unwrap_or(0.0);
            }
        }
    }))
}

/// Zero imputation followed by one missingness flag per channel: the flag is
/// 1 when no observation is available at the grid point, 0 otherwise.
pub fn impute_indicator(ts: &IrregularTimeSeries, grid: &[f64]) -> Result<PiecewiseLinearPath> {
    check_grid(grid)?;
    let d = ts.dim();
    Ok(build(grid, 2 * d, |_, t, row| {
        row[d..].iter_mut().for_each(|x| *x = 1.0);
        if let Some(r) = row_at(ts, t) {
            for (c, v) in ts.rows()[r].iter().enumerate() {
                if let Some(v) = v {
                    row[c] = *v;
                    row[d + c] = 0.0;
                }
            }
        }
    }))
}

/// Forward-fills a series at its own timestamps, zero before the first
/// observation of each channel. The result is fully observed.
pub fn forward_fill_series(ts: &IrregularTimeSeries) -> IrregularTimeSeries {
    let mut last = vec![0.0; ts.dim()];
    let rows = ts
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, v)| {
                    if let Some(v) = v {
                        last[c] = *v;
                    }
                    last[c]
                })
                .collect()
        })
        .collect();
    IrregularTimeSeries::dense(ts.times().to_vec(), rows).expect("same shape as a valid series")
}

/// Forward-fills onto an arbitrary grid, as a fully observed series.
fn forward_fill_on_grid(ts: &IrregularTimeSeries, grid: &[f64]) -> Result<IrregularTimeSeries> {
    let path = impute_forward_fill(ts, grid)?;
    let rows = (0..path.len()).map(|i| path.point(i)[1..].to_vec()).collect();
    IrregularTimeSeries::dense(grid.to_vec(), rows)
}

/// Alternating time-then-value expansion of a fully observed series.
///
/// `(t1, x1), (t2, x2), .., (tn, xn)` becomes
/// `(t1, x1), (t2, x1), (t2, x2), .., (tn, x_{n-1}), (tn, xn)`, with knot
/// parameter `i` and time carried as channel 0. `n` rows give `2n - 1`
/// knots.
pub fn causal_transform(ts: &IrregularTimeSeries) -> Result<PiecewiseLinearPath> {
    if let Some(row) = ts.rows().iter().position(|r| r.iter().any(Option::is_none)) {
        return Err(Error::MissingEntries { row });
    }
    let dim = ts.dim() + 1;
    let n = ts.len();
    let value = |i: usize| ts.rows()[i].iter().map(|v| v.expect("checked above"));
    let mut points = Vec::with_capacity((2 * n - 1) * dim);
    points.push(ts.times()[0]);
    points.extend(value(0));
    for i in 1..n {
        points.push(ts.times()[i]);
        points.extend(value(i - 1));
        points.push(ts.times()[i]);
        points.extend(value(i));
    }
    let params = (0..2 * n - 1).map(|i| i as f64).collect();
    PiecewiseLinearPath::new(dim, params, points)
}

/// Causal imputation on a grid: forward fill at the grid points, then the
/// alternating expansion.
pub fn impute_causal(ts: &IrregularTimeSeries, grid: &[f64]) -> Result<PiecewiseLinearPath> {
    check_grid(grid)?;
    causal_transform(&forward_fill_on_grid(ts, grid)?)
}

/// Dispatches to the strategy. `rng` is only consumed by `GpMc`, which
/// returns a single posterior draw.
pub fn impute<R: Rng + ?Sized>(
    ts: &IrregularTimeSeries,
    strategy: &ImputationStrategy<'_>,
    grid: &[f64],
    rng: &mut R,
) -> Result<PiecewiseLinearPath> {
    let check_post = |post: &GpPosterior| {
        if post.dim() == ts.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: ts.dim(),
                actual: post.dim(),
            })
        }
    };
    match *strategy {
        ImputationStrategy::Linear => impute_linear(ts, grid),
        ImputationStrategy::ForwardFill => impute_forward_fill(ts, grid),
        ImputationStrategy::Zero => impute_zero(ts, grid),
        ImputationStrategy::Indicator => impute_indicator(ts, grid),
        ImputationStrategy::Causal => impute_causal(ts, grid),
        ImputationStrategy::GpMean(post) => {
            check_post(post)?;
            gp::mean_path(post, grid)
        }
        ImputationStrategy::GpMc(post) => {
            check_post(post)?;
            Ok(gp::mc_sample(post, grid, 1, rng)?.remove(0))
        }
        ImputationStrategy::GpPom(post) => {
            check_post(post)?;
            gp::pom_path(post, grid)
        }
    }
}
