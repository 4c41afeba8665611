use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArmConfig, ExperimentConfig};
use crate::error::{Error, Result};
use crate::imputation::ImputationKind;
use crate::metrics::ClassificationMetrics;

pub const MODEL_NAME: &str = "Sig";
const CSV_HEADER: [&str; 7] = ["dataset", "subsampling", "imputation", "model", "seed", "metric", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub index: usize,
    pub config: ArmConfig,
    pub val_metric: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
}

impl ArmRecord {
    pub(super) fn diverged(index: usize, config: ArmConfig, error: String) -> Self {
        Self {
            index,
            config,
            val_metric: None,
            best_epoch: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub seed: u64,
    pub best_epoch: usize,
    pub metrics: ClassificationMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two fits.
    pub std: Option<f64>,
}

impl MetricSummary {
    pub fn from_fits(fits: &[FitRecord]) -> Vec<Self> {
        ClassificationMetrics::NAMES
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let xs: Vec<f64> = fits.iter().map(|f| f.metrics.values()[k]).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let std = (xs.len() >= 2)
                    .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
                MetricSummary {
                    metric: name.to_string(),
                    mean,
                    std,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub imputation: ImputationKind,
    pub chosen: ArmConfig,
    pub param_count: usize,
    pub search: Vec<ArmRecord>,
    pub fits: Vec<FitRecord>,
    pub summary: Vec<MetricSummary>,
    pub wall_time_secs: f64,
}

impl StrategyReport {
    pub fn summary_of(&self, metric: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub subsampling: String,
    pub model: String,
    pub master_seed: u64,
    /// Per-class drop rates drawn by label-based subsampling.
    pub label_rates: Option<Vec<f64>>,
    pub strategies: Vec<StrategyReport>,
    /// Set when the run stopped early; the strategies listed finished.
    pub error: Option<String>,
}

impl MetricsReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            dataset: config.dataset.name(),
            subsampling: config.subsampling.label(),
            model: MODEL_NAME.into(),
            master_seed: config.seed,
            label_rates: None,
            strategies: Vec::new(),
            error: None,
        }
    }

    pub fn strategy(&self, kind: ImputationKind) -> Option<&StrategyReport> {
        self.strategies.iter().find(|s| s.imputation == kind)
    }

    /// Copy with wall times zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for s in &mut r.strategies {
            s.wall_time_secs = 0.0;
        }
        r
    }

    /// One row per (strategy, fit, metric), in report order.
    pub fn result_rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for s in &self.strategies {
            for f in &s.fits {
                for (name, value) in ClassificationMetrics::NAMES.iter().zip(f.metrics.values()) {
                    rows.push(ResultRow {
                        dataset: self.dataset.clone(),
                        subsampling: self.subsampling.clone(),
                        imputation: s.imputation.as_str().into(),
                        model: self.model.clone(),
                        seed: f.seed,
                        metric: name.to_string(),
                        value,
                    });
                }
            }
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub subsampling: String,
    pub imputation: String,
    pub model: String,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Long-format results table. Wall times are left out so reruns compare
/// byte for byte.
pub fn render_results_csv(report: &MetricsReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(CSV_HEADER)?;
        for r in report.result_rows() {
            w.write_record([
                r.dataset.as_str(),
                &r.subsampling,
                &r.imputation,
                &r.model,
                &r.seed.to_string(),
                &r.metric,
                &r.value.to_string(),
            ])?;
        }
        Ok(())
    };
    write(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        rows.push(ResultRow {
            dataset: rec[0].to_string(),
            subsampling: rec[1].to_string(),
            imputation: rec[2].to_string(),
            model: rec[3].to_string(),
            seed: rec[4].parse().map_err(|_| bad("seed"))?,
            metric: rec[5].to_string(),
            value: rec[6].parse().map_err(|_| bad("value"))?,
        });
    }
    Ok(rows)
}

fn metric_title(name: &str) -> &'static str {
    match name {
        "accuracy" => "Accuracy",
        "balanced_accuracy" => "BAC",
        "weighted_auroc" => "Weighted AUROC",
        "auroc" => "AUROC",
        "average_precision" => "AP",
        _ => "?",
    }
}

fn pct(s: &MetricSummary) -> String {
    match s.std {
        Some(sd) => format!("{:.2} ± {:.2}", 100.0 * s.mean, 100.0 * sd),
        None => format!("{:.2}", 100.0 * s.mean),
    }
}

/// Mean ± std table in percent, one row per imputation strategy.
pub fn render_markdown(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} results: {}", report.model, report.dataset);
    let _ = writeln!(out);
    let _ = writeln!(out, "Subsampling: {}. Master seed: {}.", report.subsampling, report.master_seed);
    if let Some(rates) = &report.label_rates {
        let rates: Vec<String> = rates.iter().map(|r| format!("{r:.4}")).collect();
        let _ = writeln!(out, "Per-class drop rates: {}.", rates.join(", "));
    }
    if let Some(e) = &report.error {
        let _ = writeln!(out, "\n**Incomplete run:** {e}");
    }
    let _ = writeln!(out);
    let titles: Vec<&str> = ClassificationMetrics::NAMES.iter().map(|n| metric_title(n)).collect();
    let _ = writeln!(out, "| Imputation | {} |", titles.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(titles.len()));
    for s in &report.strategies {
        let cells: Vec<String> = s.summary.iter().map(pct).collect();
        let _ = writeln!(out, "| {} | {} |", s.imputation, cells.join(" | "));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "## Chosen hyperparameters");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "| Imputation | lr | weight decay | batch | depth | width | params | wall time (s) |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for s in &report.strategies {
        let c = &s.chosen;
        let _ = writeln!(
            out,
            "| {} | {:.3e} | {:.3e} | {} | {} | {} | {} | {:.1} |",
            s.imputation, c.learning_rate, c.weight_decay, c.batch_size, c.depth, c.augment_width, s.param_count,
            s.wall_time_secs
        );
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Bar per imputation strategy with a ±1 std error bar, on a [0, 1] axis.
pub fn render_barplot(report: &MetricsReport, metric: &str) -> String {
    const LEFT: f64 = 60.0;
    const TOP: f64 = 40.0;
    const PLOT_H: f64 = 240.0;
    const GROUP_W: f64 = 90.0;
    const BAR_W: f64 = 50.0;
    let width = LEFT + 20.0 + GROUP_W * report.strategies.len().max(1) as f64;
    let height = TOP + PLOT_H + 50.0;
    let y = |v: f64| TOP + PLOT_H * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{} on {} ({})</text>"#,
        width / 2.0,
        metric_title(metric),
        xml_escape(&report.dataset),
        xml_escape(&report.subsampling)
    );
    let _ = writeln!(s, r#"<g class="axis" font-family="sans-serif" font-size="10">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + PLOT_H
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y0}" x2="{LEFT}" y2="{y0}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y(v) + 3.0,
            y0 = y(v)
        );
    }
    let _ = writeln!(s, "</g>");
    for (g, block) in report.strategies.iter().enumerate() {
        let Some(sum) = block.summary_of(metric) else { continue };
        let x = LEFT + 20.0 + GROUP_W * g as f64;
        let cx = x + BAR_W / 2.0;
        let _ = writeln!(s, r#"<g class="bar-group" data-imputation="{}">"#, block.imputation);
        let _ = writeln!(
            s,
            r##"<rect x="{x}" y="{}" width="{BAR_W}" height="{}" fill="#4c72b0"/>"##,
            y(sum.mean),
            TOP + PLOT_H - y(sum.mean)
        );
        if let Some(sd) = sum.std {
            let (lo, hi) = (y(sum.mean - sd), y(sum.mean + sd));
            let _ = writeln!(
                s,
                r#"<path class="error-bar" d="M{} {hi}H{}M{cx} {hi}V{lo}M{} {lo}H{}" stroke="black" fill="none"/>"#,
                cx - 8.0,
                cx + 8.0,
                cx - 8.0,
                cx + 8.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            TOP + PLOT_H + 16.0,
            block.imputation
        );
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv`, `results.md`, `report.json` and one
/// `barplot_<metric>.svg` per metric into `out_dir`, creating it if needed.
pub fn emit_report(report: &MetricsReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_file(&out_dir.join("results.csv"), &render_results_csv(report))?;
    write_file(&out_dir.join("results.md"), &render_markdown(report))?;
    for name in ClassificationMetrics::NAMES {
        write_file(&out_dir.join(format!("barplot_{name}.svg")), &render_barplot(report, name))?;
    }
    write_file(&out_dir.join("report.json"), &serde_json::to_string_pretty(report)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_report() -> MetricsReport {
        let arm = ArmConfig {
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            batch_size: 32,
            depth: 3,
            augment_width: 4,
        };
        let strategies = [ImputationKind::Zero, ImputationKind::Indicator, ImputationKind::GpPom]
            .into_iter()
            .enumerate()
            .map(|(k, kind)| {
                let fits: Vec<FitRecord> = (0..5)
                    .map(|f| FitRecord {
                        seed: 1000 + f,
                        best_epoch: 3,
                        metrics: ClassificationMetrics::from_values([
                            0.7 + 0.01 * f as f64,
                            0.1 * k as f64 + 1.0 / 3.0,
                            0.9,
                            0.123456789012345,
                            1e-7,
                        ]),
                    })
                    .collect();
                StrategyReport {
                    imputation: kind,
                    chosen: arm,
                    param_count: 1234,
                    search: vec![],
                    summary: MetricSummary::from_fits(&fits),
                    fits,
                    wall_time_secs: 1.5,
                }
            })
            .collect();
        MetricsReport {
            dataset: "toy, with comma".into(),
            subsampling: "label(lo=0.4,hi=0.6)".into(),
            model: MODEL_NAME.into(),
            master_seed: 7,
            label_rates: Some(vec![0.45, 0.55]),
            strategies,
            error: None,
        }
    }

    #[test]
    fn csv_row_count_and_round_trip() {
        let r = fake_report();
        let text = render_results_csv(&r);
        assert_eq!(text.lines().count(), 1 + 3 * 5 * 5);
        assert_eq!(parse_results_csv(&text).unwrap(), r.result_rows());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        assert!(parse_results_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn summary_std_needs_two_fits() {
        let r = fake_report();
        let s = MetricSummary::from_fits(&r.strategies[0].fits[..1]);
        assert!(s.iter().all(|m| m.std.is_none()));
        let acc = r.strategies[0].summary_of("accuracy").unwrap();
        assert!((acc.mean - 0.72).abs() < 1e-12);
        assert!((acc.std.unwrap() - 0.0158113883008419).abs() < 1e-12);
    }

    #[test]
    fn markdown_lists_every_strategy() {
        let md = render_markdown(&fake_report());
        for k in ["zero", "indicator", "gp-pom"] {
            assert!(md.contains(&format!("| {k} |")));
        }
        assert!(md.contains("72.00 ± 1.58"));
    }

    #[test]
    fn barplot_has_one_group_per_strategy() {
        let svg = render_barplot(&fake_report(), "balanced_accuracy");
        assert_eq!(svg.matches(r#"class="bar-group""#).count(), 3);
        assert!(svg.contains("toy, with comma"));
    }

    #[test]
    fn emit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&fake_report(), dir.path()).unwrap();
        for f in ["results.csv", "results.md", "report.json", "barplot_auroc.svg"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fake_report());
    }
}
