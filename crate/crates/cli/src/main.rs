use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use sigpath::harness::{DatasetSource, Subsampling};
use sigpath::imputation::impute_linear;
use sigpath::seed::rng_from_seed;
use sigpath::timeseries::{parse_long_csv, to_long_csv};
use sigpath::{
    emit_report, harness, run_experiment, signature, ExperimentConfig, ImputationKind, PiecewiseLinearPath,
    SynthSpec, TruncatedSignature,
};

#[derive(Parser)]
#[command(name = "sigpath", version, about = "Path signatures for irregular time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run(RunArgs),
    /// Write a synthetic dataset as long-format CSV.
    Synth {
        /// JSON generator spec; defaults are used for missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory for series.csv and labels.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print truncated signatures as JSON.
    Sig {
        /// Wide CSV (one knot per row, one column per channel) or a
        /// long-format `id,time,channel,value` file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        depth: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsamplingArg {
    None,
    Random,
    Label,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Long-format series CSV (requires --labels).
    #[arg(long, requires = "labels")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    labels: Option<PathBuf>,
    /// Imputation strategy; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    imputation: Vec<ImputationKind>,
    #[arg(long, value_enum)]
    subsampling: Option<SubsamplingArg>,
    /// Drop fraction for random subsampling.
    #[arg(long)]
    drop_fraction: Option<f64>,
    /// Lower drop-rate bound for label-based subsampling.
    #[arg(long, default_value_t = 0.4)]
    lo: f64,
    /// Upper drop-rate bound for label-based subsampling.
    #[arg(long, default_value_t = 0.6)]
    hi: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Fix the signature depth instead of searching over it.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    gp_iters: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    jitter_init: Option<f64>,
    /// Number of search calls.
    #[arg(long)]
    calls: Option<usize>,
    #[arg(long)]
    final_fits: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let (Some(series), Some(labels)) = (&self.dataset, &self.labels) {
            cfg.dataset = DatasetSource::Csv {
                series: series.clone(),
                labels: labels.clone(),
                name: None,
            };
        }
        if !self.imputation.is_empty() {
            cfg.imputations = self.imputation.clone();
        }
        match self.subsampling {
            Some(SubsamplingArg::None) => cfg.subsampling = Subsampling::None,
            Some(SubsamplingArg::Random) => {
                let Some(p) = self.drop_fraction else {
                    bail!("--subsampling random needs --drop-fraction");
                };
                cfg.subsampling = Subsampling::Random { drop_fraction: p };
            }
            Some(SubsamplingArg::Label) => cfg.subsampling = Subsampling::Label { lo: self.lo, hi: self.hi },
            None => {
                if let Some(p) = self.drop_fraction {
                    cfg.subsampling = Subsampling::Random { drop_fraction: p };
                }
            }
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.depth {
            cfg.search.depths = vec![d];
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        if let Some(n) = self.gp_iters {
            cfg.gp.iters = n;
        }
        if let Some(n) = self.mc_samples {
            cfg.mc_samples = n;
        }
        if let Some(j) = self.jitter_init {
            cfg.gp.jitter_init = j;
        }
        if let Some(n) = self.calls {
            cfg.search.calls = n;
        }
        if let Some(n) = self.final_fits {
            cfg.search.final_fits = n;
        }
        if let Some(n) = self.threads {
            cfg.threads = Some(n);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    let report = run_experiment(&cfg)?;
    if let Some(dir) = &cfg.out_dir {
        emit_report(&report, dir)?;
        eprintln!("wrote report to {}", dir.display());
    }
    print!("{}", harness::render_markdown(&report));
    Ok(())
}

fn synth(spec: Option<&Path>, out: &Path) -> Result<()> {
    let spec: SynthSpec = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthSpec::default(),
    };
    let ds = harness::synth_dataset(&spec, &mut rng_from_seed(spec.seed))?;
    let (series, labels) = to_long_csv(&ds);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, text) in [("series.csv", series), ("labels.csv", labels)] {
        let p = out.join(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!("wrote {} instances to {}", ds.len(), out.display());
    Ok(())
}

fn sig_json(sig: &TruncatedSignature) -> serde_json::Value {
    json!({ "dim": sig.dim(), "depth": sig.depth(), "levels": sig.levels() })
}

fn sig(input: &Path, depth: usize) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let out = if header == ["id", "time", "channel", "value"] {
        // Long format: one signature per id, of the time-augmented linear
        // interpolation through that id's own timestamps.
        let mut ids: Vec<String> = Vec::new();
        for rec in rdr.records() {
            let id = rec?[0].to_string();
            if ids.last() != Some(&id) && !ids.contains(&id) {
                ids.push(id);
            }
        }
        let labels: String = std::iter::once("id,label".to_string())
            .chain(ids.iter().map(|id| format!("{id},0")))
            .collect::<Vec<_>>()
            .join("\n");
        let ds = parse_long_csv(&text, &labels)?;
        let mut items = Vec::new();
        for (id, ts) in ds.ids.iter().zip(&ds.instances) {
            let path = impute_linear(ts, ts.times())?;
            let mut v = sig_json(&signature(&path, depth)?);
            v["id"] = json!(id);
            v["channels"] = json!(std::iter::once("time").chain(ds.channel_names.iter().map(String::as_str)).collect::<Vec<_>>());
            items.push(v);
        }
        serde_json::Value::Array(items)
    } else {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let row = rec?
                .iter()
                .map(|f| f.parse::<f64>().with_context(|| format!("non-numeric value `{f}`")))
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            bail!("{} has no rows", input.display());
        }
        let path = PiecewiseLinearPath::from_points(&rows)?;
        let mut v = sig_json(&signature(&path, depth)?);
        v["channels"] = json!(header);
        v
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Synth { spec, out } => synth(spec.as_deref(), out),
        Command::Sig { input, depth } => sig(input, *depth),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
