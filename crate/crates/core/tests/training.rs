mod common;

use common::{random_path, rel_err};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigpath::harness::{synth_dataset, SynthSpec};
use sigpath::imputation::impute_zero;
use sigpath::metrics::{argmax, SelectionMetric};
use sigpath::model::{backward, forward, train, ModelInput, ModelShape, SigModelParams, Split, TrainConfig};

#[test]
fn model_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..6 {
        let shape = ModelShape {
            input_dim: 2 + trial % 2,
            augment_width: 2 + trial % 3,
            depth: 2 + trial % 2,
            num_classes: 2 + trial % 2,
        };
        let params = SigModelParams::init(shape, &mut rng).unwrap();
        let path = random_path(&mut rng, shape.input_dim, 4);
        let label = trial % shape.num_classes;
        let (_, grad) = backward(&params, &path, label).unwrap();
        let loss = |p: &SigModelParams| -forward(p, &path).unwrap()[label].ln();
        let h = 1e-6;
        // Every parameter of small models, a stride through larger ones.
        let stride = (params.len() / 400).max(1);
        for k in (0..params.len()).step_by(stride) {
            let mut plus = params.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = params.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!(
                rel_err(grad[k], fd) < 1e-3,
                "trial {trial} param {k}: {} vs {fd}",
                grad[k]
            );
        }
    }
}

struct Data {
    inputs: Vec<ModelInput>,
    labels: Vec<usize>,
    test_inputs: Vec<ModelInput>,
    test_labels: Vec<usize>,
}

fn synthetic() -> Data {
    let spec = SynthSpec::default();
    let ds = synth_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mut d = Data {
        inputs: vec![],
        labels: vec![],
        test_inputs: vec![],
        test_labels: vec![],
    };
    for (i, ts) in ds.instances.iter().enumerate() {
        let grid: Vec<f64> = ts.times().iter().map(|t| t / 19.0).collect();
        let path = impute_zero(&ts.rescale_time(1.0 / 19.0, 0.0), &grid).unwrap();
        if ds.splits[i] == sigpath::Split::Train {
            d.inputs.push(ModelInput::Fixed(path));
            d.labels.push(ds.labels[i]);
        } else {
            d.test_inputs.push(ModelInput::Fixed(path));
            d.test_labels.push(ds.labels[i]);
        }
    }
    d
}

fn config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 5e-3,
        weight_decay: 1e-4,
        batch_size: 32,
        max_epochs: 40,
        patience: 20,
        seed,
    }
}

fn shape() -> ModelShape {
    ModelShape {
        input_dim: 3,
        augment_width: 4,
        depth: 3,
        num_classes: 2,
    }
}

#[test]
fn fits_separable_training_data() {
    let d = synthetic();
    let inputs: Vec<&ModelInput> = d.inputs.iter().collect();
    let split = Split {
        inputs: &inputs,
        labels: &d.labels,
    };
    let out = train(shape(), split, split, &config(0), SelectionMetric::BalancedAccuracy).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probs = sigpath::model::predict_proba(&out.params, &inputs, &mut rng).unwrap();
    let correct = probs.iter().zip(&d.labels).filter(|(p, &y)| argmax(p) == y).count();
    assert!(correct as f64 >= 0.99 * d.labels.len() as f64, "{correct}/{}", d.labels.len());
}

#[test]
fn stops_after_patience_without_improvement() {
    let d = synthetic();
    let inputs: Vec<&ModelInput> = d.inputs.iter().take(40).collect();
    let labels = &d.labels[..40];
    let split = Split { inputs: &inputs, labels };
    let cfg = TrainConfig {
        learning_rate: 0.0,
        weight_decay: 0.0,
        patience: 5,
        ..config(0)
    };
    let out = train(shape(), split, split, &cfg, SelectionMetric::AveragePrecision).unwrap();
    assert_eq!(out.best_epoch, 0);
    assert_eq!(out.trace.len(), 6);
    assert!(out.stopped_early);
}

#[test]
fn training_is_deterministic_per_seed() {
    let d = synthetic();
    let inputs: Vec<&ModelInput> = d.inputs.iter().take(60).collect();
    let test: Vec<&ModelInput> = d.test_inputs.iter().take(20).collect();
    let train_split = Split {
        inputs: &inputs,
        labels: &d.labels[..60],
    };
    let val_split = Split {
        inputs: &test,
        labels: &d.test_labels[..20],
    };
    let cfg = TrainConfig {
        max_epochs: 5,
        ..config(9)
    };
    let a = train(shape(), train_split, val_split, &cfg, SelectionMetric::AveragePrecision).unwrap();
    let b = train(shape(), train_split, val_split, &cfg, SelectionMetric::AveragePrecision).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.trace, b.trace);
    let c = train(shape(), train_split, val_split, &TrainConfig { seed: 10, ..cfg }, SelectionMetric::AveragePrecision)
        .unwrap();
    assert_ne!(a.params, c.params);
}
