//! Per-channel Gaussian-process regression with RBF kernels.
//!
//! Channels are modelled as independent zero-mean GPs over time. Each
//! channel's hyperparameters are fitted by gradient ascent on the exact log
//! marginal likelihood in log-parameter space, then the posterior is queried
//! on a grid to build mean paths, posterior-moment paths (mean and pointwise
//! variance side by side) or Monte-Carlo sample paths.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::path::PiecewiseLinearPath;
use crate::timeseries::IrregularTimeSeries;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfHyperparams {
    pub lengthscale: f64,
    pub output_scale: f64,
    pub noise_variance: f64,
}

impl RbfHyperparams {
    pub fn new(lengthscale: f64, output_scale: f64, noise_variance: f64) -> Result<Self> {
        let h = Self {
            lengthscale,
            output_scale,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            return Err(Error::invalid("lengthscale", "must be positive"));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::invalid("output_scale", "must be positive"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid("noise_variance", "must be non-negative"));
        }
        Ok(())
    }

    fn to_log(self) -> [f64; 3] {
        [
            self.lengthscale.ln(),
            self.output_scale.ln(),
            self.noise_variance.max(NOISE_FLOOR).ln(),
        ]
    }

    fn from_log(theta: [f64; 3]) -> Self {
        Self {
            lengthscale: theta[0].exp(),
            output_scale: theta[1].exp(),
            noise_variance: theta[2].exp(),
        }
    }
}

const NOISE_FLOOR: f64 = 1e-8;
const LOG_BOUNDS: [(f64, f64); 3] = [(-9.21, 9.21), (-9.21, 9.21), (-18.42, 4.61)];

/// `σ² exp(-(t - u)² / (2 ℓ²))`
pub fn rbf_kernel(t: f64, u: f64, h: &RbfHyperparams) -> f64 {
    let r = (t - u) / h.lengthscale;
    h.output_scale * (-0.5 * r * r).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpOptions {
    /// Gradient-ascent iterations for hyperparameter fitting.
    pub iters: usize,
    /// First non-zero jitter, relative to the output scale.
    pub jitter_init: f64,
    /// Largest jitter tried before giving up, relative to the output scale.
    pub jitter_max: f64,
    /// Initial ascent step in log-parameter space; halved on rejection.
    pub step: f64,
    pub max_halvings: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            iters: 100,
            jitter_init: 1e-6,
            jitter_max: 1e-2,
            step: 0.1,
            max_halvings: 30,
        }
    }
}

impl GpOptions {
    /// Jitter ladder: zero first, then `jitter_init * 10^k` up to `jitter_max`.
    fn jitters(&self, output_scale: f64) -> impl Iterator<Item = f64> {
        let init = self.jitter_init;
        let max = self.jitter_max;
        std::iter::once(0.0).chain(
            std::iter::successors(Some(init), |j| Some(j * 10.0))
                .take_while(move |j| *j <= max * (1.0 + 1e-9))
                .map(move |j| j * output_scale),
        )
    }
}

fn kernel_matrix(times: &[f64], h: &RbfHyperparams) -> Vec<f64> {
    let n = times.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = rbf_kernel(times[i], times[j], h);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Factors `K + σ_n² I + jitter I`, escalating jitter on failure.
fn factor(times: &[f64], h: &RbfHyperparams, opts: &GpOptions) -> Result<(Vec<f64>, f64)> {
    let n = times.len();
    let base = kernel_matrix(times, h);
    let mut last = 0.0;
    for jitter in opts.jitters(h.output_scale) {
        last = jitter;
        let mut a = base.clone();
        for i in 0..n {
            a[i * n + i] += h.noise_variance + jitter;
        }
        if let Some(l) = linalg::cholesky(&a, n) {
            return Ok((l, jitter));
        }
    }
    Err(Error::Cholesky { jitter: last })
}

/// Exact log marginal likelihood of a zero-mean GP.
pub fn log_marginal_likelihood(obs: &[(f64, f64)], h: &RbfHyperparams, opts: &GpOptions) -> Result<f64> {
    let (times, values): (Vec<f64>, Vec<f64>) = obs.iter().copied().unzip();
    let (l, _) = factor(&times, h, opts)?;
    Ok(lml_from_factor(&l, &values))
}

fn lml_from_factor(l: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    let alpha = linalg::cholesky_solve(l, n, y);
    let fit: f64 = y.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let logdet: f64 = (0..n).map(|i| l[i * n + i].ln()).sum();
    -0.5 * fit - logdet - 0.5 * n as f64 * LN_2PI
}

/// Log marginal likelihood and its gradient in `(ln ℓ, ln σ², ln σ_n²)`.
fn lml_and_grad(times: &[f64], y: &[f64], h: &RbfHyperparams, opts: &GpOptions) -> Result<(f64, [f64; 3])> {
    let n = times.len();
    let (l, _) = factor(times, h, opts)?;
    let lml = lml_from_factor(&l, y);
    let alpha = linalg::cholesky_solve(&l, n, y);
    let inv = linalg::cholesky_inverse(&l, n);
    let mut grad = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - inv[i * n + j];
            let kf = rbf_kernel(times[i], times[j], h);
            let r2 = ((times[i] - times[j]) / h.lengthscale).powi(2);
            grad[0] += w * kf * r2;
            grad[1] += w * kf;
            if i == j {
                grad[2] += w * h.noise_variance;
            }
        }
    }
    Ok((lml, grad.map(|g| 0.5 * g)))
}

/// Data-driven starting point: median pairwise time gap, sample variance,
/// and a tenth of that as noise. Degenerate inputs fall back to unit scales.
pub fn initial_hyperparams(obs: &[(f64, f64)]) -> RbfHyperparams {
    let mut gaps: Vec<f64> = Vec::new();
    for i in 0..obs.len() {
        for j in i + 1..obs.len() {
            let g = (obs[i].0 - obs[j].0).abs();
            if g > 0.0 {
                gaps.push(g);
            }
        }
    }
    gaps.sort_by(f64::total_cmp);
    let lengthscale = if gaps.is_empty() {
        1.0
    } else {
        let m = gaps.len();
        if m % 2 == 1 {
            gaps[m / 2]
        } else {
            0.5 * (gaps[m / 2 - 1] + gaps[m / 2])
        }
    };
    let n = obs.len() as f64;
    let variance = if obs.len() >= 2 {
        let mean = obs.iter().map(|o| o.1).sum::<f64>() / n;
        obs.iter().map(|o| (o.1 - mean).powi(2)).sum::<f64>() / n
    } else {
        0.0
    };
    let output_scale = if variance > 1e-12 { variance } else { 1.0 };
    RbfHyperparams {
        lengthscale,
        output_scale,
        noise_variance: 0.1 * output_scale,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperFit {
    pub hyperparams: RbfHyperparams,
    /// Log marginal likelihood at the start and after every accepted step.
    pub trace: Vec<f64>,
}

/// Gradient ascent on the log marginal likelihood with backtracking.
///
/// Each iteration tries the configured step along the gradient and halves it
/// until the likelihood does not decrease. The run stops early when no
/// halving helps.
pub fn fit_hyperparams(obs: &[(f64, f64)], init: RbfHyperparams, opts: &GpOptions) -> Result<HyperFit> {
    init.validate()?;
    if obs.len() < 2 {
        return Err(Error::invalid("observations", "need at least two to fit"));
    }
    let (times, y): (Vec<f64>, Vec<f64>) = obs.iter().copied().unzip();
    let mut h = init;
    if opts.iters == 0 {
        let lml = lml_and_grad(&times, &y, &h, opts)?.0;
        return Ok(HyperFit {
            hyperparams: init,
            trace: vec![lml],
        });
    }
    h.noise_variance = h.noise_variance.max(NOISE_FLOOR);
    let (mut lml, mut grad) = lml_and_grad(&times, &y, &h, opts)?;
    if !lml.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("log marginal likelihood"));
    }
    let mut theta = h.to_log();
    let mut trace = vec![lml];
    for _ in 0..opts.iters {
        let mut step = opts.step;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut cand = theta;
            for k in 0..3 {
                cand[k] = (theta[k] + step * grad[k]).clamp(LOG_BOUNDS[k].0, LOG_BOUNDS[k].1);
            }
            let hc = RbfHyperparams::from_log(cand);
            if let Ok((l, g)) = lml_and_grad(&times, &y, &hc, opts) {
                if l.is_finite() && l >= lml && g.iter().all(|x| x.is_finite()) {
                    accepted = Some((cand, l, g));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, l, g)) = accepted else { break };
        let moved = cand != theta;
        theta = cand;
        lml = l;
        grad = g;
        trace.push(lml);
        if !moved {
            break;
        }
    }
    Ok(HyperFit {
        hyperparams: RbfHyperparams::from_log(theta),
        trace,
    })
}

/// Conditioned GP for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPosterior {
    pub hyperparams: RbfHyperparams,
    times: Vec<f64>,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

impl ChannelPosterior {
    pub fn condition(obs: &[(f64, f64)], h: RbfHyperparams, opts: &GpOptions) -> Result<Self> {
        h.validate()?;
        let (times, y): (Vec<f64>, Vec<f64>) = obs.iter().copied().unzip();
        if times.is_empty() {
            return Ok(Self {
                hyperparams: h,
                times,
                chol: Vec::new(),
                alpha: Vec::new(),
                jitter: 0.0,
            });
        }
        let (chol, jitter) = factor(&times, &h, opts)?;
        let alpha = linalg::cholesky_solve(&chol, times.len(), &y);
        Ok(Self {
            hyperparams: h,
            times,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L^{-1} k(X, t)` for each query, column-major by query.
    fn whitened_cross(&self, query: &[f64]) -> Vec<Vec<f64>> {
        let n = self.times.len();
        query
            .iter()
            .map(|&t| {
                let mut k: Vec<f64> = self.times.iter().map(|&s| rbf_kernel(t, s, &self.hyperparams)).collect();
                linalg::forward_substitute(&self.chol, n, &mut k);
                k
            })
            .collect()
    }

    /// Posterior mean and variance at each query time; variance is clamped
    /// at zero.
    pub fn mean_var(&self, query: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let prior = self.hyperparams.output_scale;
        let mut mean = Vec::with_capacity(query.len());
        let mut var = Vec::with_capacity(query.len());
        for &t in query {
            let kstar: Vec<f64> = self.times.iter().map(|&s| rbf_kernel(t, s, &self.hyperparams)).collect();
            mean.push(kstar.iter().zip(&self.alpha).map(|(a, b)| a * b).sum());
            let mut v = kstar;
            linalg::forward_substitute(&self.chol, self.times.len(), &mut v);
            let explained: f64 = v.iter().map(|x| x * x).sum();
            var.push((prior - explained).max(0.0));
        }
        (mean, var)
    }

    /// Joint posterior covariance over the query times.
    pub fn covariance(&self, query: &[f64]) -> Vec<f64> {
        let g = query.len();
        let v = self.whitened_cross(query);
        let mut cov = vec![0.0; g * g];
        for i in 0..g {
            for j in 0..=i {
                let c = rbf_kernel(query[i], query[j], &self.hyperparams)
                    - v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum::<f64>();
                cov[i * g + j] = c;
                cov[j * g + i] = c;
            }
        }
        cov
    }
}

/// Standalone posterior query for one channel.
pub fn posterior(
    obs: &[(f64, f64)],
    h: &RbfHyperparams,
    query: &[f64],
    opts: &GpOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(ChannelPosterior::condition(obs, *h, opts)?.mean_var(query))
}

/// Independent per-channel posteriors for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpPosterior {
    pub channels: Vec<ChannelPosterior>,
    pub options: GpOptions,
}

impl GpPosterior {
    /// Fits hyperparameters per channel and conditions on the observations.
    /// Channels with fewer than two observations, or whose fit fails, keep
    /// the data-driven initial hyperparameters.
    pub fn fit(ts: &IrregularTimeSeries, opts: &GpOptions) -> Result<Self> {
        let channels = (0..ts.dim())
            .map(|c| {
                let obs = ts.channel_observations(c);
                let init = initial_hyperparams(&obs);
                let h = if obs.len() >= 2 {
                    fit_hyperparams(&obs, init, opts).map_or(init, |f| f.hyperparams)
                } else {
                    init
                };
                ChannelPosterior::condition(&obs, h, opts)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels,
            options: *opts,
        })
    }

    /// Conditions with fixed hyperparameters, one per channel.
    pub fn with_hyperparams(ts: &IrregularTimeSeries, hypers: &[RbfHyperparams], opts: &GpOptions) -> Result<Self> {
        if hypers.len() != ts.dim() {
            return Err(Error::DimensionMismatch {
                expected: ts.dim(),
                actual: hypers.len(),
            });
        }
        let channels = hypers
            .iter()
            .enumerate()
            .map(|(c, h)| ChannelPosterior::condition(&ts.channel_observations(c), *h, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels,
            options: *opts,
        })
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    fn moments(&self, query: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        self.channels.iter().map(|c| c.mean_var(query)).unzip()
    }

    /// Precomputes what repeated sampling on a fixed grid needs.
    pub fn on_grid(&self, query: &[f64]) -> Result<GridPosterior> {
        check_query(query)?;
        let g = query.len();
        let mut means = Vec::with_capacity(self.dim());
        let mut factors = Vec::with_capacity(self.dim());
        for ch in &self.channels {
            means.push(ch.mean_var(query).0);
            let cov = ch.covariance(query);
            let scale = ch.hyperparams.output_scale;
            let tol = 1e-10 * scale;
            let mut found = None;
            let mut last = 0.0;
            for jitter in self.options.jitters(scale) {
                last = jitter;
                let mut a = cov.clone();
                for i in 0..g {
                    a[i * g + i] += jitter;
                }
                if let Some(l) = linalg::cholesky_semidefinite(&a, g, tol) {
                    found = Some(l);
                    break;
                }
            }
            factors.push(found.ok_or(Error::Cholesky { jitter: last })?);
        }
        Ok(GridPosterior {
            grid: query.to_vec(),
            means,
            factors,
        })
    }
}

fn check_query(query: &[f64]) -> Result<()> {
    if query.is_empty() {
        return Err(Error::invalid("query_times", "must be nonempty"));
    }
    if query.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("query_times", "must be sorted"));
    }
    Ok(())
}

/// Posterior restricted to a fixed grid: per-channel means and factors of
/// the joint covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    grid: Vec<f64>,
    means: Vec<Vec<f64>>,
    factors: Vec<Vec<f64>>,
}

impl GridPosterior {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Channels of a sampled path, time included.
    pub fn path_dim(&self) -> usize {
        self.means.len() + 1
    }

    /// One joint draw, as a time-augmented path.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PiecewiseLinearPath {
        let g = self.grid.len();
        let draws: Vec<Vec<f64>> = self
            .means
            .iter()
            .zip(&self.factors)
            .map(|(mean, l)| {
                let z: Vec<f64> = (0..g).map(|_| rng.sample(StandardNormal)).collect();
                (0..g)
                    .map(|i| mean[i] + (0..=i).map(|k| l[i * g + k] * z[k]).sum::<f64>())
                    .collect()
            })
            .collect();
        assemble(&self.grid, &draws)
    }
}

/// Rows are grid points; channel 0 carries time, then the given columns.
fn assemble(grid: &[f64], columns: &[Vec<f64>]) -> PiecewiseLinearPath {
    let dim = columns.len() + 1;
    let mut points = Vec::with_capacity(grid.len() * dim);
    for (i, &t) in grid.iter().enumerate() {
        points.push(t);
        points.extend(columns.iter().map(|c| c[i]));
    }
    PiecewiseLinearPath::new(dim, grid.to_vec(), points).expect("grid was validated")
}

/// `samples` independent joint draws from the posterior over the grid.
pub fn mc_sample<R: Rng + ?Sized>(
    post: &GpPosterior,
    query: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<PiecewiseLinearPath>> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let grid = post.on_grid(query)?;
    Ok((0..samples).map(|_| grid.sample(rng)).collect())
}

/// Posterior mean per channel on the grid, time-augmented.
pub fn mean_path(post: &GpPosterior, query: &[f64]) -> Result<PiecewiseLinearPath> {
    check_query(query)?;
    let (means, _) = post.moments(query);
    Ok(assemble(query, &means))
}

/// Posterior means followed by posterior variances on the grid,
/// time-augmented: `2d + 1` channels.
pub fn pom_path(post: &GpPosterior, query: &[f64]) -> Result<PiecewiseLinearPath> {
    check_query(query)?;
    let (mut columns, vars) = post.moments(query);
    columns.extend(vars);
    Ok(assemble(query, &columns))
}
