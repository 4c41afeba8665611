//! Irregular multivariate time series with explicit missingness.
//!
//! Series are stored row-wise: one row per distinct timestamp, one optional
//! entry per channel. Datasets travel as a pair of long-format CSV files,
//! `id,time,channel,value` for observations and `id,label[,split]` for labels.
//! Missing entries are simply absent rows.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularTimeSeries {
    times: Vec<f64>,
    values: Vec<Vec<Option<f64>>>,
}

impl IrregularTimeSeries {
    /// Builds a series, validating ordering, shape and row occupancy.
    pub fn new(times: Vec<f64>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("times", "a series needs at least one row"));
        }
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: values.len(),
            });
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::invalid("values", "a series needs at least one channel"));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if row.iter().all(Option::is_none) {
                return Err(Error::invalid("values", format!("row {i} has no observed entry")));
            }
            if row.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("observation value"));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("timestamp"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("times", "timestamps must be nondecreasing"));
        }
        Ok(Self { times, values })
    }

    /// Convenience constructor for fully observed data.
    pub fn dense(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let values = values
            .into_iter()
            .map(|row| row.into_iter().map(Some).collect())
            .collect();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn value(&self, row: usize, channel: usize) -> Option<f64> {
        self.values[row][channel]
    }

    /// Observed `(time, value)` pairs of one channel, in time order.
    pub fn channel_observations(&self, channel: usize) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.values)
            .filter_map(|(&t, row)| row[channel].map(|v| (t, v)))
            .collect()
    }

    pub fn observed_count(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_some()).count()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.values.iter().flatten().all(Option::is_some)
    }

    /// Applies an affine map `t -> scale * t + offset` to every timestamp.
    pub fn rescale_time(&self, scale: f64, offset: f64) -> Self {
        Self {
            times: self.times.iter().map(|t| scale * t + offset).collect(),
            values: self.values.clone(),
        }
    }

    /// Removes the given `(row, channel)` entries and deletes rows left empty.
    fn without_entries(&self, dropped: &BTreeSet<(usize, usize)>) -> Self {
        let mut times = Vec::with_capacity(self.times.len());
        let mut values = Vec::with_capacity(self.values.len());
        for (r, (&t, row)) in self.times.iter().zip(&self.values).enumerate() {
            let row: Vec<Option<f64>> = row
                .iter()
                .enumerate()
                .map(|(c, v)| if dropped.contains(&(r, c)) { None } else { *v })
                .collect();
            if row.iter().any(Option::is_some) {
                times.push(t);
                values.push(row);
            }
        }
        Self { times, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub ids: Vec<String>,
    pub channel_names: Vec<String>,
    pub instances: Vec<IrregularTimeSeries>,
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
    pub num_classes: usize,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.channel_names.len()
    }

    pub fn indices_in(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Checks the cross-field invariants, including that every class appears
    /// in the training split.
    pub fn validate(&self) -> Result<()> {
        let n = self.instances.len();
        for (name, len) in [
            ("ids", self.ids.len()),
            ("labels", self.labels.len()),
            ("splits", self.splits.len()),
        ] {
            if len != n {
                return Err(Error::invalid(name, format!("length {len} != {n} instances")));
            }
        }
        if let Some(inst) = self.instances.iter().find(|s| s.dim() != self.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: inst.dim(),
            });
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= self.num_classes) {
            return Err(Error::invalid("labels", format!("label {bad} >= {}", self.num_classes)));
        }
        let mut seen = vec![false; self.num_classes];
        for i in 0..n {
            if self.splits[i] == Split::Train {
                seen[self.labels[i]] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::invalid("labels", format!("class {c} absent from train split")));
        }
        Ok(())
    }

    fn map_instances(&self, f: impl FnMut(usize, &IrregularTimeSeries) -> IrregularTimeSeries) -> Self {
        let mut f = f;
        Self {
            instances: self.instances.iter().enumerate().map(|(i, s)| f(i, s)).collect(),
            ..self.clone()
        }
    }
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric {what} `{field}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite {what} `{field}`"),
        });
    }
    Ok(v)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&[&str]]) -> Result<usize> {
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let got: Vec<&str> = header.iter().collect();
    expected
        .iter()
        .position(|h| *h == got.as_slice())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("unexpected header `{}`", got.join(",")),
        })
}

/// Parses a long-format series file plus a labels file.
///
/// The channel set is the sorted set of channel names in the series file.
pub fn parse_long_csv(series: &str, labels: &str) -> Result<LabeledDataset> {
    parse_long_csv_impl(series, labels, None)
}

/// Like [`parse_long_csv`] but with a fixed channel list; observations in any
/// other channel are rejected.
pub fn parse_long_csv_with_channels(
    series: &str,
    labels: &str,
    channels: &[String],
) -> Result<LabeledDataset> {
    parse_long_csv_impl(series, labels, Some(channels))
}

type RawSeries = BTreeMap<u64, (f64, BTreeMap<usize, f64>)>;

fn parse_long_csv_impl(
    series: &str,
    labels: &str,
    channels: Option<&[String]>,
) -> Result<LabeledDataset> {
    let mut rdr = reader(series);
    check_header(&mut rdr, &[&["id", "time", "channel", "value"]])?;
    let mut raw: Vec<(String, f64, String, f64, usize)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let t = parse_f64(&rec[1], "time", line)?;
        let v = parse_f64(&rec[3], "value", line)?;
        raw.push((rec[0].to_string(), t, rec[2].to_string(), v, line));
    }

    let channel_names: Vec<String> = match channels {
        Some(c) => c.to_vec(),
        None => raw
            .iter()
            .map(|r| r.2.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if channel_names.is_empty() {
        return Err(Error::invalid("series", "no channels"));
    }
    let channel_index: HashMap<&str, usize> = channel_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    // id -> time bits (ordered by value through the key) -> channel -> value
    let mut by_id: HashMap<String, RawSeries> = HashMap::new();
    for (id, t, ch, v, line) in raw {
        let c = *channel_index.get(ch.as_str()).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown channel `{ch}`"),
        })?;
        let rows = by_id.entry(id.clone()).or_default();
        let (_, row) = rows.entry(order_key(t)).or_insert_with(|| (t, BTreeMap::new()));
        if row.insert(c, v).is_some() {
            return Err(Error::DuplicateObservation {
                id,
                time: t,
                channel: ch,
            });
        }
    }

    let mut rdr = reader(labels);
    let with_split = check_header(&mut rdr, &[&["id", "label"], &["id", "label", "split"]])? == 1;
    let mut ids = Vec::new();
    let mut label_values = Vec::new();
    let mut splits = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let id = rec[0].to_string();
        let label: usize = rec[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("label `{}` is not a class index", &rec[1]),
        })?;
        let split = if with_split {
            Split::parse(&rec[2]).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown split `{}`", &rec[2]),
            })?
        } else {
            Split::Train
        };
        if !by_id.contains_key(&id) {
            return Err(Error::Parse {
                line,
                message: format!("id `{id}` has no observations"),
            });
        }
        if !seen_ids.insert(id.clone()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate label for id `{id}`"),
            });
        }
        ids.push(id);
        label_values.push(label);
        splits.push(split);
    }
    if let Some(orphan) = by_id.keys().find(|id| !seen_ids.contains(*id)) {
        return Err(Error::invalid("labels", format!("id `{orphan}` has no label")));
    }

    let dim = channel_names.len();
    let instances = ids
        .iter()
        .map(|id| {
            let rows = &by_id[id];
            let times = rows.values().map(|(t, _)| *t).collect();
            let values = rows
                .values()
                .map(|(_, obs)| {
                    let mut row = vec![None; dim];
                    for (&c, &v) in obs {
                        row[c] = Some(v);
                    }
                    row
                })
                .collect();
            IrregularTimeSeries::new(times, values)
        })
        .collect::<Result<Vec<_>>>()?;

    let num_classes = label_values.iter().max().map_or(0, |m| m + 1);
    Ok(LabeledDataset {
        ids,
        channel_names,
        instances,
        labels: label_values,
        splits,
        num_classes,
    })
}

/// Total order key for finite floats; `-0.0` and `0.0` collapse.
fn order_key(t: f64) -> u64 {
    let t = if t == 0.0 { 0.0 } else { t };
    let bits = t.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Serialises a dataset into `(series_csv, labels_csv)`.
pub fn to_long_csv(ds: &LabeledDataset) -> (String, String) {
    let mut series = String::from("id,time,channel,value\n");
    let mut labels = String::from("id,label,split\n");
    for (i, inst) in ds.instances.iter().enumerate() {
        let id = &ds.ids[i];
        for (t, row) in inst.times.iter().zip(&inst.values) {
            for (c, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    let _ = writeln!(series, "{id},{t:?},{},{v:?}", ds.channel_names[c]);
                }
            }
        }
        let _ = writeln!(labels, "{id},{},{}", ds.labels[i], ds.splits[i].as_str());
    }
    (series, labels)
}

/// Drops `round(drop_fraction * count)` observed entries uniformly at random,
/// keeping at least one observation in every channel that had one.
///
/// One entry per observed channel is reserved first (uniformly within the
/// channel); the dropped set is then drawn uniformly without replacement from
/// the remaining entries. Instances too small to honour the reservation keep
/// everything.
pub fn subsample_instance<R: Rng + ?Sized>(
    ts: &IrregularTimeSeries,
    drop_fraction: f64,
    rng: &mut R,
) -> IrregularTimeSeries {
    let entries: Vec<(usize, usize)> = ts
        .values
        .iter()
        .enumerate()
        .flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| v.is_some())
                .map(move |(c, _)| (r, c))
        })
        .collect();
    let n_drop = (drop_fraction * entries.len() as f64).round() as usize;
    if n_drop == 0 {
        return ts.clone();
    }
    let mut per_channel: Vec<Vec<usize>> = vec![Vec::new(); ts.dim()];
    for (k, &(_, c)) in entries.iter().enumerate() {
        per_channel[c].push(k);
    }
    let observed_channels = per_channel.iter().filter(|v| !v.is_empty()).count();
    if entries.len() - n_drop < observed_channels {
        return ts.clone();
    }
    let mut reserved = vec![false; entries.len()];
    for members in per_channel.iter().filter(|v| !v.is_empty()) {
        reserved[members[rng.random_range(0..members.len())]] = true;
    }
    let candidates: Vec<usize> = (0..entries.len()).filter(|&k| !reserved[k]).collect();
    let dropped: BTreeSet<(usize, usize)> = index::sample(rng, candidates.len(), n_drop)
        .into_iter()
        .map(|j| entries[candidates[j]])
        .collect();
    ts.without_entries(&dropped)
}

/// Missing-at-random subsampling: every instance loses the same fraction of
/// its observed entries.
pub fn random_subsample<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    drop_fraction: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    if !(0.0..1.0).contains(&drop_fraction) {
        return Err(Error::invalid("drop_fraction", "must lie in [0, 1)"));
    }
    Ok(ds.map_instances(|_, s| subsample_instance(s, drop_fraction, rng)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSubsample {
    pub dataset: LabeledDataset,
    /// Drop rate drawn for each class, indexed by class.
    pub rates: Vec<f64>,
}

/// Missing-not-at-random subsampling: one drop rate per class drawn from
/// `Uniform(lo, hi)`, then applied to every instance of that class.
pub fn label_based_subsample<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<LabelSubsample> {
    if !(0.0 <= lo && lo <= hi && hi < 1.0) {
        return Err(Error::invalid("lo/hi", "need 0 <= lo <= hi < 1"));
    }
    let rates: Vec<f64> = (0..ds.num_classes)
        .map(|_| if lo == hi { lo } else { rng.random_range(lo..hi) })
        .collect();
    let dataset = ds.map_instances(|i, s| subsample_instance(s, rates[ds.labels[i]], rng));
    Ok(LabelSubsample { dataset, rates })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-channel mean and population standard deviation over the observed
/// entries of the given instances. Constant channels get `std = 1`.
pub fn fit_standardizer(ds: &LabeledDataset, indices: &[usize]) -> Result<StandardizationStats> {
    if indices.is_empty() {
        return Err(Error::invalid("train", "empty training split"));
    }
    let d = ds.dim();
    let mut sum = vec![0.0; d];
    let mut count = vec![0usize; d];
    for &i in indices {
        for row in &ds.instances[i].values {
            for (c, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    sum[c] += v;
                    count[c] += 1;
                }
            }
        }
    }
    if let Some(c) = count.iter().position(|&n| n == 0) {
        return Err(Error::EmptyChannel(ds.channel_names[c].clone()));
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &n)| s / n as f64).collect();
    let mut sq = vec![0.0; d];
    for &i in indices {
        for row in &ds.instances[i].values {
            for (c, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    sq[c] += (v - mean[c]).powi(2);
                }
            }
        }
    }
    let std = sq
        .iter()
        .zip(&count)
        .map(|(s, &n)| {
            let sd = (s / n as f64).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(StandardizationStats { mean, std })
}

impl StandardizationStats {
    fn map(&self, ds: &LabeledDataset, f: impl Fn(f64, f64, f64) -> f64) -> Result<LabeledDataset> {
        if ds.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: ds.dim(),
            });
        }
        Ok(ds.map_instances(|_, s| IrregularTimeSeries {
            times: s.times.clone(),
            values: s
                .values
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(c, v)| v.map(|x| f(x, self.mean[c], self.std[c])))
                        .collect()
                })
                .collect(),
        }))
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        self.map(ds, |x, m, s| (x - m) / s)
    }

    pub fn invert(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        self.map(ds, |x, m, s| x * s + m)
    }
}

pub fn apply_standardizer(ds: &LabeledDataset, stats: &StandardizationStats) -> Result<LabeledDataset> {
    stats.apply(ds)
}

/// `start, start + resolution, ...` up to `end`, with `end` always included.
pub fn sample_grid(start: f64, end: f64, resolution: f64) -> Result<Vec<f64>> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::invalid("resolution", "must be positive and finite"));
    }
    if !(end >= start) {
        return Err(Error::invalid("end", "must not precede start"));
    }
    let tol = 1e-9 * resolution;
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let t = start + k as f64 * resolution;
        if t >= end - tol {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid.push(end);
    Ok(grid)
}

/// Sorted union of the timestamps of the given instances.
pub fn union_grid<'a>(series: impl IntoIterator<Item = &'a IrregularTimeSeries>) -> Vec<f64> {
    let keys: BTreeMap<u64, f64> = series
        .into_iter()
        .flat_map(|s| s.times.iter().map(|&t| (order_key(t), t)))
        .collect();
    keys.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn ds_from(series: &str, labels: &str) -> LabeledDataset {
        parse_long_csv(series, labels).unwrap()
    }

    #[test]
    fn minimal_file() {
        let ds = ds_from("id,time,channel,value\na,0,x,1.0\na,1,x,2.0\n", "id,label\na,0\n");
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.instances[0].len(), 2);
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.splits, vec![Split::Train]);
    }

    #[test]
    fn rows_merge_by_time_and_sort() {
        let ds = ds_from(
            "id,time,channel,value\r\na,1,x,5\r\na,0,x,1.0\r\na,0,y,3.0\r\n",
            "id,label\r\na,1\r\n",
        );
        let s = &ds.instances[0];
        assert_eq!(s.times(), &[0.0, 1.0]);
        assert_eq!(s.rows()[0], vec![Some(1.0), Some(3.0)]);
        assert_eq!(s.rows()[1], vec![Some(5.0), None]);
    }

    #[test]
    fn duplicate_triple_rejected() {
        let err = parse_long_csv("id,time,channel,value\na,0,x,1.0\na,0,x,2.0\n", "id,label\na,0\n");
        assert!(matches!(err, Err(Error::DuplicateObservation { .. })));
    }

    #[test]
    fn malformed_and_unknown_rejected() {
        assert!(parse_long_csv("id,time,channel,value\na,zero,x,1\n", "id,label\na,0\n").is_err());
        assert!(parse_long_csv("id,time,channel,value\na,0,x,abc\n", "id,label\na,0\n").is_err());
        assert!(parse_long_csv("id,time,channel,value\na,0,x,1\n", "id,label\nb,0\n").is_err());
        assert!(parse_long_csv("id,time,channel,value\na,0,x,1\nb,0,x,1\n", "id,label\na,0\n").is_err());
        let chans = vec!["x".to_string()];
        assert!(parse_long_csv_with_channels(
            "id,time,channel,value\na,0,z,1\n",
            "id,label\na,0\n",
            &chans
        )
        .is_err());
        assert!(parse_long_csv("time,id,channel,value\n0,a,x,1\n", "id,label\na,0\n").is_err());
    }

    #[test]
    fn subsample_zero_is_identity() {
        let ds = ds_from(
            "id,time,channel,value\na,0,x,1\na,1,y,2\na,2,x,3\n",
            "id,label\na,0\n",
        );
        let out = random_subsample(&ds, 0.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(out, ds);
        let out = label_based_subsample(&ds, 0.0, 0.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(out.dataset, ds);
        assert_eq!(out.rates, vec![0.0]);
    }

    #[test]
    fn subsample_exact_count_keeps_each_channel() {
        let times: Vec<f64> = (0..5).map(f64::from).collect();
        let values = (0..5).map(|i| vec![f64::from(i), -f64::from(i)]).collect();
        let ts = IrregularTimeSeries::dense(times, values).unwrap();
        for seed in 0..1000 {
            let out = subsample_instance(&ts, 0.5, &mut rng_from_seed(seed));
            assert_eq!(out.observed_count(), 5);
            assert!(!out.channel_observations(0).is_empty());
            assert!(!out.channel_observations(1).is_empty());
            assert!(out.times().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn too_small_instance_keeps_everything() {
        let ts = IrregularTimeSeries::dense(vec![0.0], vec![vec![1.0, 2.0]]).unwrap();
        let out = subsample_instance(&ts, 0.9, &mut rng_from_seed(3));
        assert_eq!(out, ts);
    }

    #[test]
    fn bad_drop_fraction() {
        let ds = ds_from("id,time,channel,value\na,0,x,1\n", "id,label\na,0\n");
        assert!(random_subsample(&ds, 1.0, &mut rng_from_seed(0)).is_err());
        assert!(label_based_subsample(&ds, 0.6, 0.4, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn standardizer_cases() {
        let ds = ds_from(
            "id,time,channel,value\na,0,x,1\na,1,x,3\na,0,y,5\na,1,y,5\nb,0,y,5\n",
            "id,label\na,0\nb,1\n",
        );
        let stats = fit_standardizer(&ds, &[0, 1]).unwrap();
        assert_eq!(stats.mean, vec![2.0, 5.0]);
        assert_eq!(stats.std, vec![1.0, 1.0]);
        let out = stats.apply(&ds).unwrap();
        assert_eq!(out.instances[0].value(0, 0), Some(-1.0));
        assert_eq!(out.instances[1].rows()[0], vec![None, Some(0.0)]);

        let err = fit_standardizer(&ds, &[1]);
        assert!(matches!(err, Err(Error::EmptyChannel(c)) if c == "x"));
        assert!(fit_standardizer(&ds, &[]).is_err());

        let wrong = StandardizationStats {
            mean: vec![0.0],
            std: vec![1.0],
        };
        assert!(wrong.apply(&ds).is_err());
    }

    #[test]
    fn grid_examples() {
        assert_eq!(sample_grid(0.0, 1.0, 0.5).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(sample_grid(0.0, 0.0, 1.0).unwrap(), vec![0.0]);
        assert_eq!(sample_grid(0.0, 1.0, 0.4).unwrap(), vec![0.0, 0.4, 0.8, 1.0]);
        assert!(sample_grid(0.0, 1.0, 0.0).is_err());
        assert!(sample_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn series_constructor_rejects_bad_rows() {
        assert!(IrregularTimeSeries::new(vec![0.0], vec![vec![None]]).is_err());
        assert!(IrregularTimeSeries::dense(vec![1.0, 0.0], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(IrregularTimeSeries::dense(vec![], vec![]).is_err());
    }
}
