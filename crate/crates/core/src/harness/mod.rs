//! Experiment runner: dataset, subsampling, standardisation, imputation,
//! hyperparameter search, final fits and reporting.

mod report;
mod synth;

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpOptions, GpPosterior};
use crate::imputation::{ImputationKind, ImputationStrategy, impute};
use crate::metrics::{ClassificationMetrics, SelectionMetric};
use crate::model::{self, ModelInput, ModelShape, TrainConfig};
use crate::seed::{child_rng, derive_seed, rng_from_seed};
use crate::timeseries::{
    LabeledDataset, Split, apply_standardizer, fit_standardizer, label_based_subsample, parse_long_csv,
    random_subsample, sample_grid, union_grid,
};

pub use report::{
    ArmRecord, FitRecord, MetricSummary, MetricsReport, ResultRow, StrategyReport, emit_report,
    parse_results_csv, render_barplot, render_markdown, render_results_csv,
};
pub use synth::{SynthSpec, synth_dataset};

// Seed streams. Each consumer gets its own stream so adding a strategy or an
// arm never shifts the randomness seen by another.
const STREAM_TEST_SPLIT: u64 = 1;
const STREAM_SUBSAMPLE: u64 = 2;
const STREAM_VAL_SPLIT: u64 = 3;
const STREAM_STRATEGY: u64 = 4;
const STREAM_ARM_DRAW: u64 = 5;
const STREAM_ARM_TRAIN: u64 = 6;
const STREAM_FINAL: u64 = 7;
const STREAM_EVAL: u64 = 8;
const STREAM_INPUTS: u64 = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSource {
    /// Long-format CSV pair; `name` defaults to the series file stem.
    Csv {
        series: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
    Synthetic(SynthSpec),
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Csv { name: Some(n), .. } => n.clone(),
            DatasetSource::Csv { series, .. } => series
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            DatasetSource::Synthetic(_) => "synthetic".into(),
        }
    }

    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DatasetSource::Csv { series, labels, .. } => {
                let s = std::fs::read_to_string(series).map_err(|e| Error::io(series, e))?;
                let l = std::fs::read_to_string(labels).map_err(|e| Error::io(labels, e))?;
                parse_long_csv(&s, &l)
            }
            DatasetSource::Synthetic(spec) => synth_dataset(spec, &mut rng_from_seed(spec.seed)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Subsampling {
    #[default]
    None,
    Random { drop_fraction: f64 },
    Label { lo: f64, hi: f64 },
}

impl Subsampling {
    pub fn label(&self) -> String {
        match *self {
            Subsampling::None => "none".into(),
            Subsampling::Random { drop_fraction } => format!("random(p={drop_fraction})"),
            Subsampling::Label { lo, hi } => format!("label(lo={lo},hi={hi})"),
        }
    }
}

/// Time grid the imputed paths are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridSpec {
    /// Union of the training instances' timestamps.
    #[default]
    Observed,
    /// Uniform grid with the given step, in the dataset's original time units.
    Fixed { resolution: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub calls: usize,
    pub final_fits: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: (f64, f64),
    pub weight_decay: (f64, f64),
    pub batch_sizes: Vec<usize>,
    pub depths: Vec<usize>,
    pub augment_widths: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            calls: 20,
            final_fits: 5,
            max_epochs: 100,
            patience: 20,
            learning_rate: (1e-4, 1e-2),
            weight_decay: (1e-4, 1e-2),
            batch_sizes: vec![32, 64, 128, 256],
            depths: vec![2, 3, 4],
            augment_widths: (2..=8).collect(),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.calls == 0 {
            return Err(Error::invalid("search.calls", "need at least one search call"));
        }
        if self.final_fits == 0 {
            return Err(Error::invalid("search.final_fits", "need at least one final fit"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("search.max_epochs", "must be positive"));
        }
        for (name, (lo, hi)) in [
            ("search.learning_rate", self.learning_rate),
            ("search.weight_decay", self.weight_decay),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::invalid(name, "need 0 < lo <= hi"));
            }
        }
        let lists = [
            ("search.batch_sizes", &self.batch_sizes),
            ("search.depths", &self.depths),
            ("search.augment_widths", &self.augment_widths),
        ];
        for (name, v) in lists {
            if v.is_empty() || v.contains(&0) {
                return Err(Error::invalid(name, "need a nonempty list of positive values"));
            }
        }
        Ok(())
    }

    /// Draws one arm. Learning rate and weight decay are log-uniform.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmConfig {
        let log_uniform = |rng: &mut R, (lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo.ln()..hi.ln()).exp()
            }
        };
        let learning_rate = log_uniform(rng, self.learning_rate);
        let weight_decay = log_uniform(rng, self.weight_decay);
        let batch_size = self.batch_sizes[rng.random_range(0..self.batch_sizes.len())];
        let depth = self.depths[rng.random_range(0..self.depths.len())];
        let augment_width = self.augment_widths[rng.random_range(0..self.augment_widths.len())];
        ArmConfig {
            learning_rate,
            weight_decay,
            batch_size,
            depth,
            augment_width,
        }
    }
}

/// One point of the hyperparameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub depth: usize,
    pub augment_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub subsampling: Subsampling,
    pub imputations: Vec<ImputationKind>,
    pub search: SearchSpace,
    pub gp: GpOptions,
    pub mc_samples: usize,
    pub grid: GridSpec,
    /// Fraction of instances moved to a test split when the data has none.
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic(SynthSpec::default()),
            subsampling: Subsampling::None,
            imputations: vec![ImputationKind::Linear],
            search: SearchSpace::default(),
            gp: GpOptions::default(),
            mc_samples: 10,
            grid: GridSpec::Observed,
            test_fraction: 0.2,
            val_fraction: 0.2,
            seed: 0,
            out_dir: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        if self.imputations.is_empty() {
            return Err(Error::invalid("imputations", "need at least one strategy"));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples", "must be positive"));
        }
        for (name, f) in [("test_fraction", self.test_fraction), ("val_fraction", self.val_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::invalid(name, "must lie in (0, 1)"));
            }
        }
        match self.subsampling {
            Subsampling::Random { drop_fraction } if !(0.0..1.0).contains(&drop_fraction) => {
                return Err(Error::invalid("drop_fraction", "must lie in [0, 1)"));
            }
            Subsampling::Label { lo, hi } if !(0.0 <= lo && lo <= hi && hi < 1.0) => {
                return Err(Error::invalid("subsampling", "need 0 <= lo <= hi < 1"));
            }
            _ => {}
        }
        if let GridSpec::Fixed { resolution } = self.grid {
            if !(resolution > 0.0 && resolution.is_finite()) {
                return Err(Error::invalid("grid.resolution", "must be positive"));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads", "must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Dataset after subsampling, splitting, time rescaling and standardisation,
/// plus the grid every path is evaluated on.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub name: String,
    pub dataset: LabeledDataset,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub grid: Vec<f64>,
    pub label_rates: Option<Vec<f64>>,
}

/// Moves `fraction` of every class from `from` into a new index list,
/// keeping at least one instance of each class behind.
fn stratified_take<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    from: &[usize],
    fraction: f64,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    let mut keep = Vec::new();
    let mut taken = Vec::new();
    for c in 0..ds.num_classes {
        let mut members: Vec<usize> = from.iter().copied().filter(|&i| ds.labels[i] == c).collect();
        members.shuffle(rng);
        let n_take = ((fraction * members.len() as f64).round() as usize).min(members.len().saturating_sub(1));
        taken.extend_from_slice(&members[..n_take]);
        keep.extend_from_slice(&members[n_take..]);
    }
    keep.sort_unstable();
    taken.sort_unstable();
    (keep, taken)
}

pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    config.validate()?;
    let mut ds = config.dataset.load()?;
    let seed = config.seed;

    if ds.indices_in(Split::Test).is_empty() {
        let all: Vec<usize> = (0..ds.len()).collect();
        let (_, test) = stratified_take(&ds, &all, config.test_fraction, &mut child_rng(seed, &[STREAM_TEST_SPLIT]));
        for i in test {
            ds.splits[i] = Split::Test;
        }
    }

    let mut sub_rng = child_rng(seed, &[STREAM_SUBSAMPLE]);
    let mut label_rates = None;
    ds = match config.subsampling {
        Subsampling::None => ds,
        Subsampling::Random { drop_fraction } => random_subsample(&ds, drop_fraction, &mut sub_rng)?,
        Subsampling::Label { lo, hi } => {
            let out = label_based_subsample(&ds, lo, hi, &mut sub_rng)?;
            label_rates = Some(out.rates);
            out.dataset
        }
    };

    // Validation instances come out of the training split; an explicit `val`
    // split in the data is honoured as is.
    let mut val = ds.indices_in(Split::Val);
    let mut train = ds.indices_in(Split::Train);
    if val.is_empty() {
        let (t, v) = stratified_take(&ds, &train, config.val_fraction, &mut child_rng(seed, &[STREAM_VAL_SPLIT]));
        train = t;
        val = v;
        for &i in &val {
            ds.splits[i] = Split::Val;
        }
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("dataset", "train and validation splits must be nonempty"));
    }
    ds.validate()?;
    let test = ds.indices_in(Split::Test);

    // Time is mapped so the training instances span [0, 1].
    let (tmin, tmax) = train
        .iter()
        .flat_map(|&i| ds.instances[i].times().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    let scale = if tmax > tmin { 1.0 / (tmax - tmin) } else { 1.0 };
    let offset = -tmin * scale;
    ds.instances = ds.instances.iter().map(|s| s.rescale_time(scale, offset)).collect();

    let stats = fit_standardizer(&ds, &train)?;
    let ds = apply_standardizer(&ds, &stats)?;

    let grid = match config.grid {
        GridSpec::Observed => union_grid(train.iter().map(|&i| &ds.instances[i])),
        GridSpec::Fixed { resolution } => sample_grid(tmin, tmax.max(tmin + resolution), resolution)?
            .into_iter()
            .map(|t| scale * t + offset)
            .collect(),
    };

    Ok(PreparedData {
        name: config.dataset.name(),
        dataset: ds,
        train,
        val,
        test,
        grid,
        label_rates,
    })
}

/// Fits one GP posterior per instance. Fits are independent and run on the
/// rayon pool; the result order matches the instance order.
pub fn fit_posteriors(data: &PreparedData, opts: &GpOptions) -> Result<Vec<GpPosterior>> {
    data.dataset
        .instances
        .par_iter()
        .map(|ts| GpPosterior::fit(ts, opts))
        .collect()
}

/// Builds one model input per instance.
pub fn build_inputs(
    data: &PreparedData,
    kind: ImputationKind,
    posteriors: Option<&[GpPosterior]>,
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<ModelInput>> {
    let post = |i: usize| -> Result<&GpPosterior> {
        posteriors
            .and_then(|p| p.get(i))
            .ok_or_else(|| Error::invalid("posteriors", "GP strategies need one posterior per instance"))
    };
    let mut rng = child_rng(seed, &[STREAM_INPUTS]);
    (0..data.dataset.len())
        .map(|i| {
            let ts = &data.dataset.instances[i];
            match kind {
                ImputationKind::GpMc => Ok(ModelInput::Sampled {
                    posterior: post(i)?.on_grid(&data.grid)?,
                    samples: mc_samples,
                }),
                k if k.needs_posterior() => {
                    let strategy = ImputationStrategy::from_kind(k, Some(post(i)?))?;
                    Ok(ModelInput::Fixed(impute(ts, &strategy, &data.grid, &mut rng)?))
                }
                k => {
                    let strategy = ImputationStrategy::from_kind(k, None)?;
                    Ok(ModelInput::Fixed(impute(ts, &strategy, &data.grid, &mut rng)?))
                }
            }
        })
        .collect()
}

/// Inputs and labels for one strategy, split into train, validation and test.
pub struct TrainingTask<'a> {
    pub num_classes: usize,
    pub train: Vec<&'a ModelInput>,
    pub train_labels: Vec<usize>,
    pub val: Vec<&'a ModelInput>,
    pub val_labels: Vec<usize>,
    pub test: Vec<&'a ModelInput>,
    pub test_labels: Vec<usize>,
}

impl<'a> TrainingTask<'a> {
    pub fn new(data: &PreparedData, inputs: &'a [ModelInput]) -> Self {
        let pick = |idx: &[usize]| -> (Vec<&'a ModelInput>, Vec<usize>) {
            (
                idx.iter().map(|&i| &inputs[i]).collect(),
                idx.iter().map(|&i| data.dataset.labels[i]).collect(),
            )
        };
        let (train, train_labels) = pick(&data.train);
        let (val, val_labels) = pick(&data.val);
        let (test, test_labels) = pick(&data.test);
        Self {
            num_classes: data.dataset.num_classes,
            train,
            train_labels,
            val,
            val_labels,
            test,
            test_labels,
        }
    }

    fn input_dim(&self) -> usize {
        self.train.first().map_or(0, |x| x.dim())
    }

    pub fn shape(&self, arm: &ArmConfig) -> ModelShape {
        ModelShape {
            input_dim: self.input_dim(),
            augment_width: arm.augment_width,
            depth: arm.depth,
            num_classes: self.num_classes,
        }
    }

    pub fn fit(&self, arm: &ArmConfig, space: &SearchSpace, seed: u64) -> Result<model::TrainOutcome> {
        let config = TrainConfig {
            learning_rate: arm.learning_rate,
            weight_decay: arm.weight_decay,
            batch_size: arm.batch_size,
            max_epochs: space.max_epochs,
            patience: space.patience,
            seed,
        };
        model::train(
            self.shape(arm),
            model::Split {
                inputs: &self.train,
                labels: &self.train_labels,
            },
            model::Split {
                inputs: &self.val,
                labels: &self.val_labels,
            },
            &config,
            SelectionMetric::for_classes(self.num_classes),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_index: usize,
    pub best: ArmConfig,
    pub arms: Vec<ArmRecord>,
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_))
}

/// Randomised search. Arm `k` draws its configuration and training seed from
/// `(seed, k)` alone, so arms can run in any order; the best validation
/// metric wins and ties go to the earlier arm.
pub fn hyper_search(task: &TrainingTask<'_>, space: &SearchSpace, seed: u64) -> Result<SearchResult> {
    space.validate()?;
    let arms: Vec<ArmRecord> = (0..space.calls)
        .into_par_iter()
        .map(|k| {
            let arm = space.draw(&mut child_rng(seed, &[STREAM_ARM_DRAW, k as u64]));
            let train_seed = derive_seed(seed, &[STREAM_ARM_TRAIN, k as u64]);
            match task.fit(&arm, space, train_seed) {
                Ok(out) if out.best_val_metric.is_finite() => Ok(ArmRecord {
                    index: k,
                    config: arm,
                    val_metric: Some(out.best_val_metric),
                    best_epoch: Some(out.best_epoch),
                    error: None,
                }),
                Ok(_) => Ok(ArmRecord::diverged(k, arm, "non-finite validation metric".into())),
                Err(e) if is_divergence(&e) => Ok(ArmRecord::diverged(k, arm, e.to_string())),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64)> = None;
    for a in &arms {
        if let Some(m) = a.val_metric {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((a.index, m));
            }
        }
    }
    let (best_index, _) = best.ok_or(Error::AllArmsDiverged(space.calls))?;
    Ok(SearchResult {
        best_index,
        best: arms[best_index].config,
        arms,
    })
}

fn evaluate(task: &TrainingTask<'_>, arm: &ArmConfig, space: &SearchSpace, seed: u64, fit: usize) -> Result<FitRecord> {
    let fit_seed = derive_seed(seed, &[STREAM_FINAL, fit as u64]);
    let out = task.fit(arm, space, fit_seed)?;
    let probs = model::predict_proba(&out.params, &task.test, &mut child_rng(seed, &[STREAM_EVAL, fit as u64]))?;
    let metrics = ClassificationMetrics::compute(&task.test_labels, &probs)?;
    Ok(FitRecord {
        seed: fit_seed,
        best_epoch: out.best_epoch,
        metrics,
    })
}

/// Search, final fits and test metrics for one strategy.
pub fn run_strategy(
    data: &PreparedData,
    kind: ImputationKind,
    posteriors: Option<&[GpPosterior]>,
    config: &ExperimentConfig,
) -> Result<StrategyReport> {
    let start = Instant::now();
    let seed = derive_seed(config.seed, &[STREAM_STRATEGY, kind as u64]);
    let inputs = build_inputs(data, kind, posteriors, config.mc_samples, seed)?;
    let task = TrainingTask::new(data, &inputs);
    let search = hyper_search(&task, &config.search, seed)?;
    let fits: Vec<FitRecord> = (0..config.search.final_fits)
        .into_par_iter()
        .map(|f| evaluate(&task, &search.best, &config.search, seed, f))
        .collect::<Result<_>>()?;
    Ok(StrategyReport {
        imputation: kind,
        chosen: search.best,
        param_count: task.shape(&search.best).param_count(),
        summary: MetricSummary::from_fits(&fits),
        search: search.arms,
        fits,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

fn run_all(config: &ExperimentConfig, report: &mut MetricsReport) -> Result<()> {
    let data = prepare_data(config)?;
    report.dataset = data.name.clone();
    report.label_rates = data.label_rates.clone();
    let mut posteriors: Option<Vec<GpPosterior>> = None;
    for &kind in &config.imputations {
        if kind.needs_posterior() && posteriors.is_none() {
            posteriors = Some(fit_posteriors(&data, &config.gp)?);
        }
        let block = run_strategy(&data, kind, posteriors.as_deref(), config)?;
        report.strategies.push(block);
    }
    Ok(())
}

/// Runs every requested strategy. When `out_dir` is set and a strategy
/// fails, the blocks finished so far are written before the error returns.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let mut report = MetricsReport::new(config);
    let outcome = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?
            .install(|| run_all(config, &mut report)),
        None => run_all(config, &mut report),
    };
    if let Err(e) = outcome {
        report.error = Some(e.to_string());
        if let Some(dir) = &config.out_dir {
            emit_report(&report, dir)?;
        }
        return Err(e);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic(SynthSpec {
                train_instances: 40,
                test_instances: 20,
                timestamps: 10,
                ..SynthSpec::default()
            }),
            imputations: vec![ImputationKind::Zero],
            search: SearchSpace {
                calls: 2,
                final_fits: 2,
                max_epochs: 5,
                patience: 3,
                depths: vec![2],
                augment_widths: vec![3],
                batch_sizes: vec![16],
                ..SearchSpace::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_defaults_fill_missing_fields() {
        let cfg = ExperimentConfig::from_json(r#"{"seed": 3, "subsampling": {"kind": "label", "lo": 0.4, "hi": 0.6}}"#)
            .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.search.calls, 20);
        assert_eq!(cfg.search.final_fits, 5);
        assert_eq!(cfg.subsampling, Subsampling::Label { lo: 0.4, hi: 0.6 });
    }

    #[test]
    fn config_rejects_zero_calls() {
        let mut cfg = ExperimentConfig::default();
        cfg.search.calls = 0;
        assert!(cfg.validate().is_err());
        cfg.search.calls = 1;
        cfg.search.final_fits = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn draws_stay_in_range() {
        let space = SearchSpace::default();
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let a = space.draw(&mut rng);
            assert!((1e-4..=1e-2).contains(&a.learning_rate));
            assert!((1e-4..=1e-2).contains(&a.weight_decay));
            assert!(space.batch_sizes.contains(&a.batch_size));
            assert!((2..=4).contains(&a.depth));
            assert!((2..=8).contains(&a.augment_width));
        }
    }

    #[test]
    fn prepared_splits_partition_and_rescale() {
        let data = prepare_data(&small_config()).unwrap();
        let mut all: Vec<usize> = data.train.iter().chain(&data.val).chain(&data.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..data.dataset.len()).collect::<Vec<_>>());
        assert_eq!(data.test.len(), 20);
        assert_eq!(data.val.len(), 8);
        assert_eq!(data.grid.first(), Some(&0.0));
        assert_eq!(data.grid.last(), Some(&1.0));
    }

    #[test]
    fn single_call_returns_that_arm() {
        let mut cfg = small_config();
        cfg.search.calls = 1;
        let data = prepare_data(&cfg).unwrap();
        let inputs = build_inputs(&data, ImputationKind::Zero, None, 1, 0).unwrap();
        let task = TrainingTask::new(&data, &inputs);
        let res = hyper_search(&task, &cfg.search, 9).unwrap();
        assert_eq!(res.best_index, 0);
        assert_eq!(res.arms.len(), 1);
        assert_eq!(res.best, res.arms[0].config);
    }

    #[test]
    fn best_arm_dominates() {
        let mut cfg = small_config();
        cfg.search.calls = 4;
        let data = prepare_data(&cfg).unwrap();
        let inputs = build_inputs(&data, ImputationKind::Zero, None, 1, 0).unwrap();
        let task = TrainingTask::new(&data, &inputs);
        let res = hyper_search(&task, &cfg.search, 5).unwrap();
        let best = res.arms[res.best_index].val_metric.unwrap();
        for a in &res.arms {
            assert!(a.val_metric.unwrap() <= best);
            if a.val_metric == Some(best) {
                assert!(a.index >= res.best_index);
            }
        }
    }

    #[test]
    fn report_has_all_metrics_in_unit_interval() {
        let report = run_experiment(&small_config()).unwrap();
        assert_eq!(report.strategies.len(), 1);
        let block = &report.strategies[0];
        assert_eq!(block.fits.len(), 2);
        for f in &block.fits {
            for v in f.metrics.values() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert_eq!(block.summary.len(), 5);
    }
}
