use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{IrregularTimeSeries, LabeledDataset, Split};

/// Class-conditional sinusoid generator.
///
/// Every channel of class `c` is a sinusoid of frequency
/// `base_frequency * (1 + frequency_step * (c / 2))` whose channels rotate
/// clockwise for odd classes and anticlockwise for even ones (a quarter
/// period phase shift between neighbouring channels). Instances draw a
/// random global phase, amplitude jitter and additive Gaussian noise.
///
/// With the default full-period phase jitter the class is carried only by
/// the rotation direction (and frequency), so class-conditional channel
/// means coincide; a smaller `phase_jitter` makes them differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub channels: usize,
    pub timestamps: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    pub base_frequency: f64,
    pub frequency_step: f64,
    pub amplitude_jitter: f64,
    pub phase_jitter: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_classes: 2,
            channels: 2,
            timestamps: 20,
            train_instances: 200,
            test_instances: 100,
            base_frequency: 1.0,
            frequency_step: 0.5,
            amplitude_jitter: 0.2,
            phase_jitter: 2.0 * PI,
            noise: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid("num_classes", "need at least two classes"));
        }
        if self.channels == 0 || self.timestamps < 2 {
            return Err(Error::invalid("shape", "need a channel and at least two timestamps"));
        }
        if self.train_instances < self.num_classes {
            return Err(Error::invalid("train_instances", "need one training instance per class"));
        }
        Ok(())
    }
}

/// Generates a labelled dataset; classes are assigned round-robin so every
/// class appears in both splits.
pub fn synth_dataset<R: Rng + ?Sized>(spec: &SynthSpec, rng: &mut R) -> Result<LabeledDataset> {
    spec.validate()?;
    let total = spec.train_instances + spec.test_instances;
    let n = spec.timestamps;
    let mut ids = Vec::with_capacity(total);
    let mut instances = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut splits = Vec::with_capacity(total);
    for k in 0..total {
        let class = k % spec.num_classes;
        let freq = spec.base_frequency * (1.0 + spec.frequency_step * (class / 2) as f64);
        let direction = if class % 2 == 0 { 1.0 } else { -1.0 };
        let phase = rng.random_range(0.0..1.0) * spec.phase_jitter;
        let amplitude = 1.0 + spec.amplitude_jitter * (2.0 * rng.random_range(0.0..1.0) - 1.0);
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                (0..spec.channels)
                    .map(|j| {
                        let shift = direction * j as f64 * PI / 2.0;
                        let eps: f64 = rng.sample(StandardNormal);
                        amplitude * (2.0 * PI * freq * u + phase + shift).sin() + spec.noise * eps
                    })
                    .collect()
            })
            .collect();
        ids.push(format!("s{k:05}"));
        instances.push(IrregularTimeSeries::dense(times, rows)?);
        labels.push(class);
        splits.push(if k < spec.train_instances { Split::Train } else { Split::Test });
    }
    let channel_names = (0..spec.channels).map(|j| format!("ch{j:02}")).collect();
    Ok(LabeledDataset {
        ids,
        channel_names,
        instances,
        labels,
        splits,
        num_classes: spec.num_classes,
    })
}
