//! Shallow signature classifier.
//!
//! Architecture: a learned linear map applied to every knot, the truncated
//! signature of the mapped path, two ReLU dense layers of width 30 and a
//! linear softmax head. Gradients flow exactly through every stage,
//! including the signature, and parameters are fitted with Adam.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GridPosterior;
use crate::metrics::SelectionMetric;
use crate::path::PiecewiseLinearPath;
use crate::seed::{rng_from_seed, SeededRng};
use crate::signature::{self, TruncatedSignature};

pub const HIDDEN: usize = 30;
pub const MAX_PARAMS: usize = 1_500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub input_dim: usize,
    pub augment_width: usize,
    pub depth: usize,
    pub num_classes: usize,
}

impl ModelShape {
    /// Signature feature length `a + a^2 + .. + a^N`.
    pub fn feature_len(&self) -> usize {
        signature::coefficient_count(self.augment_width, self.depth)
    }

    pub fn param_count(&self) -> usize {
        let f = self.feature_len();
        self.input_dim * self.augment_width
            + (f + 1) * HIDDEN
            + (HIDDEN + 1) * HIDDEN
            + (HIDDEN + 1) * self.num_classes
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.augment_width == 0 {
            return Err(Error::invalid("shape", "input and augmentation widths must be positive"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("num_classes", "need at least two classes"));
        }
        signature::check_shape(self.augment_width, self.depth, signature::DEFAULT_COEFFICIENT_BUDGET)?;
        let n = self.param_count();
        if n > MAX_PARAMS {
            return Err(Error::invalid("shape", format!("{n} parameters exceed the {MAX_PARAMS} cap")));
        }
        Ok(())
    }

    /// `(name, offset, len)` for each parameter block in storage order.
    fn blocks(&self) -> [(&'static str, usize, usize); 7] {
        let sizes = [
            ("augmentation", self.input_dim * self.augment_width),
            ("dense1.weight", self.feature_len() * HIDDEN),
            ("dense1.bias", HIDDEN),
            ("dense2.weight", HIDDEN * HIDDEN),
            ("dense2.bias", HIDDEN),
            ("output.weight", HIDDEN * self.num_classes),
            ("output.bias", self.num_classes),
        ];
        let mut offset = 0;
        sizes.map(|(name, len)| {
            let b = (name, offset, len);
            offset += len;
            b
        })
    }
}

/// All trainable parameters in one flat buffer.
///
/// Matrices are row-major with the input index first: the augmentation is
/// `input_dim x augment_width`, dense weights are `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigModelParams {
    pub shape: ModelShape,
    data: Vec<f64>,
}

struct View<'a> {
    aug: &'a [f64],
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
    w3: &'a [f64],
    b3: &'a [f64],
}

impl SigModelParams {
    /// Uniform `±1/sqrt(fan_in)` initialisation for every block.
    pub fn init<R: Rng + ?Sized>(shape: ModelShape, rng: &mut R) -> Result<Self> {
        shape.validate()?;
        let fan_in = [
            shape.input_dim,
            shape.feature_len(),
            shape.feature_len(),
            HIDDEN,
            HIDDEN,
            HIDDEN,
            HIDDEN,
        ];
        let mut data = Vec::with_capacity(shape.param_count());
        for ((_, _, len), fan) in shape.blocks().iter().zip(fan_in) {
            let bound = 1.0 / (fan as f64).sqrt();
            data.extend((0..*len).map(|_| rng.random_range(-bound..bound)));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: ModelShape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            shape,
            data: vec![0.0; shape.param_count()],
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Mutable access to one named block.
    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let (_, off, len) = self.shape.blocks().into_iter().find(|b| b.0 == name)?;
        Some(&mut self.data[off..off + len])
    }

    fn view(&self) -> View<'_> {
        let b = self.shape.blocks();
        let s = |i: usize| &self.data[b[i].1..b[i].1 + b[i].2];
        View {
            aug: s(0),
            w1: s(1),
            b1: s(2),
            w2: s(3),
            b2: s(4),
            w3: s(5),
            b3: s(6),
        }
    }

    pub fn to_checkpoint(&self, train: Option<&TrainConfig>) -> Checkpoint {
        let arrays = self
            .shape
            .blocks()
            .iter()
            .map(|(name, off, len)| (name.to_string(), self.data[*off..off + len].to_vec()))
            .collect();
        Checkpoint {
            shape: self.shape,
            train: train.cloned(),
            arrays,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.shape.validate()?;
        let mut data = Vec::with_capacity(ck.shape.param_count());
        for (name, _, len) in ck.shape.blocks() {
            let arr = ck
                .arrays
                .get(name)
                .ok_or_else(|| Error::invalid("checkpoint", format!("missing array `{name}`")))?;
            if arr.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    actual: arr.len(),
                });
            }
            data.extend_from_slice(arr);
        }
        Ok(Self { shape: ck.shape, data })
    }
}

/// Serialised model: named parameter arrays plus the shape and training
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub shape: ModelShape,
    pub train: Option<TrainConfig>,
    pub arrays: BTreeMap<String, Vec<f64>>,
}

/// `out[j] = b[j] + sum_i x[i] w[i * out.len() + j]`
fn affine(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = b.to_vec();
    let m = out.len();
    for (xi, row) in x.iter().zip(w.chunks_exact(m)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
    out
}

/// Backward of [`affine`]: accumulates weight and bias gradients and
/// returns the input gradient.
fn affine_backward(x: &[f64], w: &[f64], dout: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let m = dout.len();
    gb.iter_mut().zip(dout).for_each(|(g, d)| *g += d);
    let mut dx = vec![0.0; x.len()];
    for (i, (xi, row)) in x.iter().zip(w.chunks_exact(m)).enumerate() {
        let grow = &mut gw[i * m..(i + 1) * m];
        let mut acc = 0.0;
        for j in 0..m {
            grow[j] += xi * dout[j];
            acc += row[j] * dout[j];
        }
        dx[i] = acc;
    }
    dx
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

struct Activations {
    mapped: PiecewiseLinearPath,
    features: Vec<f64>,
    pre1: Vec<f64>,
    hidden1: Vec<f64>,
    pre2: Vec<f64>,
    hidden2: Vec<f64>,
    probs: Vec<f64>,
}

fn augment(params: &SigModelParams, path: &PiecewiseLinearPath) -> Result<PiecewiseLinearPath> {
    let shape = params.shape;
    if path.dim() != shape.input_dim {
        return Err(Error::DimensionMismatch {
            expected: shape.input_dim,
            actual: path.dim(),
        });
    }
    let a = shape.augment_width;
    let zero = vec![0.0; a];
    let mut points = Vec::with_capacity(path.len() * a);
    for (_, x) in path.knots() {
        points.extend(affine(x, params.view().aug, &zero));
    }
    PiecewiseLinearPath::new(a, path.params().to_vec(), points)
}

fn run_forward(params: &SigModelParams, path: &PiecewiseLinearPath) -> Result<Activations> {
    let v = params.view();
    let mapped = augment(params, path)?;
    let features = signature::signature(&mapped, params.shape.depth)?.to_flat();
    let pre1 = affine(&features, v.w1, v.b1);
    let hidden1 = relu(&pre1);
    let pre2 = affine(&hidden1, v.w2, v.b2);
    let hidden2 = relu(&pre2);
    let logits = affine(&hidden2, v.w3, v.b3);
    let probs = softmax(&logits);
    Ok(Activations {
        mapped,
        features,
        pre1,
        hidden1,
        pre2,
        hidden2,
        probs,
    })
}

/// Class probabilities for one path.
pub fn forward(params: &SigModelParams, path: &PiecewiseLinearPath) -> Result<Vec<f64>> {
    Ok(run_forward(params, path)?.probs)
}

/// Cross-entropy loss and its gradient with respect to every parameter, in
/// the storage order of [`SigModelParams`].
pub fn backward(params: &SigModelParams, path: &PiecewiseLinearPath, label: usize) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.len()];
    let loss = backward_into(params, path, label, 1.0, &mut grad)?;
    Ok((loss, grad))
}

/// Adds `scale * dLoss/dParams` into `grad` and returns the loss.
fn backward_into(
    params: &SigModelParams,
    path: &PiecewiseLinearPath,
    label: usize,
    scale: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let shape = params.shape;
    if label >= shape.num_classes {
        return Err(Error::invalid("label", format!("{label} >= {} classes", shape.num_classes)));
    }
    let act = run_forward(params, path)?;
    let v = params.view();
    let loss = -act.probs[label].max(f64::MIN_POSITIVE).ln();

    let blocks = shape.blocks();
    let (g_aug, rest) = grad.split_at_mut(blocks[1].1);
    let (g_w1, rest) = rest.split_at_mut(blocks[1].2);
    let (g_b1, rest) = rest.split_at_mut(HIDDEN);
    let (g_w2, rest) = rest.split_at_mut(HIDDEN * HIDDEN);
    let (g_b2, rest) = rest.split_at_mut(HIDDEN);
    let (g_w3, g_b3) = rest.split_at_mut(HIDDEN * shape.num_classes);

    let mut dlogits = act.probs.clone();
    dlogits[label] -= 1.0;
    dlogits.iter_mut().for_each(|d| *d *= scale);

    let mut dh2 = affine_backward(&act.hidden2, v.w3, &dlogits, g_w3, g_b3);
    dh2.iter_mut().zip(&act.pre2).for_each(|(d, z)| {
        if *z <= 0.0 {
            *d = 0.0
        }
    });
    let mut dh1 = affine_backward(&act.hidden1, v.w2, &dh2, g_w2, g_b2);
    dh1.iter_mut().zip(&act.pre1).for_each(|(d, z)| {
        if *z <= 0.0 {
            *d = 0.0
        }
    });
    let dfeat = affine_backward(&act.features, v.w1, &dh1, g_w1, g_b1);

    let upstream = TruncatedSignature::from_flat(shape.augment_width, shape.depth, &dfeat)?;
    let dmapped = signature::signature_backward(&act.mapped, shape.depth, &upstream)?;
    let a = shape.augment_width;
    for (j, (_, x)) in path.knots().enumerate() {
        let gy = &dmapped[j * a..(j + 1) * a];
        for (c, xc) in x.iter().enumerate() {
            for k in 0..a {
                g_aug[c * a + k] += xc * gy[k];
            }
        }
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            config: AdamConfig::default(),
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One Adam update with decoupled weight decay.
pub fn adam_step(
    params: &mut [f64],
    state: &mut AdamState,
    grads: &[f64],
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let AdamConfig { beta1, beta2, eps } = state.config;
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * weight_decay * params[i];
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// What the model sees for one instance: a fixed path, or a GP posterior
/// on a grid from which fresh paths are drawn on every use.
#[derive(Debug, Clone)]
pub enum ModelInput {
    Fixed(PiecewiseLinearPath),
    Sampled { posterior: GridPosterior, samples: usize },
}

impl ModelInput {
    pub fn paths<R: Rng + ?Sized>(&self, rng: &mut R) -> Cow<'_, [PiecewiseLinearPath]> {
        match self {
            ModelInput::Fixed(p) => Cow::Borrowed(std::slice::from_ref(p)),
            ModelInput::Sampled { posterior, samples } => {
                Cow::Owned((0..*samples).map(|_| posterior.sample(rng)).collect())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelInput::Fixed(p) => p.dim(),
            ModelInput::Sampled { posterior, .. } => posterior.path_dim(),
        }
    }
}

/// Averaged class probabilities per instance; sampled inputs average over
/// their draws.
pub fn predict_proba<R: Rng + ?Sized>(
    params: &SigModelParams,
    inputs: &[&ModelInput],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    inputs
        .iter()
        .map(|input| {
            let paths = input.paths(rng);
            let mut avg = vec![0.0; params.shape.num_classes];
            for p in paths.iter() {
                for (a, q) in avg.iter_mut().zip(forward(params, p)?) {
                    *a += q;
                }
            }
            let n = paths.len() as f64;
            avg.iter_mut().for_each(|a| *a /= n);
            Ok(avg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            batch_size: 32,
            max_epochs: 100,
            patience: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the best validation metric.
    pub params: SigModelParams,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub trace: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Borrowed view of a labelled split.
#[derive(Debug, Clone, Copy)]
pub struct Split<'a> {
    pub inputs: &'a [&'a ModelInput],
    pub labels: &'a [usize],
}

/// Mini-batch Adam on cross-entropy with early stopping on the validation
/// metric. Returns the best snapshot.
fn mean_nll(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = probs.iter().zip(labels).map(|(p, &y)| -p[y].max(f64::MIN_POSITIVE).ln()).sum();
    total / labels.len() as f64
}

pub fn train(
    shape: ModelShape,
    train_split: Split<'_>,
    val_split: Split<'_>,
    config: &TrainConfig,
    selection: SelectionMetric,
) -> Result<TrainOutcome> {
    if train_split.inputs.is_empty() || val_split.inputs.is_empty() {
        return Err(Error::invalid("splits", "train and validation splits must be nonempty"));
    }
    for s in [&train_split, &val_split] {
        if s.inputs.len() != s.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: s.inputs.len(),
                actual: s.labels.len(),
            });
        }
        if let Some(&bad) = s.labels.iter().find(|&&y| y >= shape.num_classes) {
            return Err(Error::invalid("labels", format!("label {bad} >= {} classes", shape.num_classes)));
        }
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be positive"));
    }
    let mut rng: SeededRng = rng_from_seed(config.seed);
    let mut params = SigModelParams::init(shape, &mut rng)?;
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_split.inputs.len()).collect();

    // (metric, val loss, epoch, snapshot)
    let mut best = (f64::NEG_INFINITY, f64::INFINITY, 0usize, params.clone());
    let mut since_best = 0;
    let mut trace = Vec::new();
    let mut stopped_early = false;
    let mut grad = vec![0.0; params.len()];
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let paths = train_split.inputs[i].paths(&mut rng);
                let scale = 1.0 / (batch.len() * paths.len()) as f64;
                for p in paths.iter() {
                    let loss = backward_into(&params, p, train_split.labels[i], scale, &mut grad)?;
                    loss_sum += loss;
                    loss_count += 1;
                }
            }
            if !loss_sum.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            adam_step(params.as_mut_slice(), &mut adam, &grad, config.learning_rate, config.weight_decay)?;
        }
        let probs = predict_proba(&params, val_split.inputs, &mut rng)?;
        let metric = selection.score(val_split.labels, &probs)?;
        let val_loss = mean_nll(&probs, val_split.labels);
        trace.push(EpochRecord {
            epoch,
            train_loss: loss_sum / loss_count as f64,
            val_loss,
            val_metric: metric,
        });
        // Ranking metrics saturate early; among equal scores the better
        // calibrated snapshot wins.
        if metric > best.0 || (metric == best.0 && val_loss < best.1) {
            best = (metric, val_loss, epoch, params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stopped_early = epoch + 1 < config.max_epochs;
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best.3,
        best_epoch: best.2,
        best_val_metric: best.0,
        trace,
        stopped_early,
    })
}
