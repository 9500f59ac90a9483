use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use engage_core::aggregate::{Alphas, Weights};
use engage_core::eval::CorrelationReport;
use engage_core::pipeline::{self, MetricSelection, PipelineConfig, ResumeFrom, ScorerSelection};
use engage_core::text::StopwordList;
use engage_core::Error;

#[derive(Parser)]
#[command(
    name = "engage",
    version,
    about = "Curate and evaluate engagement-labeled dialogue data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the three-pass curation pipeline.
    Curate(CurateArgs),
    /// Score arbitrary pairs against frozen corpus statistics.
    Score(ScoreArgs),
    /// Correlate metrics with human judgments on golden sets.
    Eval(EvalArgs),
    /// Render a manifest or correlation report as a table.
    Report { path: PathBuf },
}

#[derive(Args)]
struct Common {
    /// TOML or JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated re,ae,ee,be.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    /// Comma-separated re,be,ae.
    #[arg(long, value_parser = parse_alphas)]
    alphas: Option<Alphas>,
    #[arg(long)]
    kappa: Option<f64>,
    /// lexicon or sidecar:PATH
    #[arg(long)]
    emotion: Option<String>,
    /// keywords or sidecar:PATH
    #[arg(long)]
    toxicity: Option<String>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct CurateArgs {
    #[command(flatten)]
    common: Common,
    /// Input dump (plain or gzipped NDJSON); repeatable.
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    synthetic_negatives: Option<usize>,
    /// Memory budget in MiB.
    #[arg(long)]
    memory_budget: Option<usize>,
    /// Resume at a pass boundary: pass2 or pass3.
    #[arg(long, default_value = "start")]
    resume: String,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    common: Common,
    /// stats.json from a previous curate run.
    #[arg(long)]
    stats: PathBuf,
    /// JSONL of {context, response, ups, downs, ..., replies}.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Golden set (.csv or .jsonl); repeatable.
    #[arg(long, required = true)]
    golden: Vec<PathBuf>,
    /// random[:SEED], question, specificity or sidecar:PATH ({dataset} is substituted); repeatable.
    #[arg(long = "metric", required = true)]
    metrics: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    vals.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let [re, ae, ee, be] = parse_floats::<4>(s)?;
    Ok(Weights { re, ae, ee, be })
}

fn parse_alphas(s: &str) -> Result<Alphas, String> {
    let [re, be, ae] = parse_floats::<3>(s)?;
    Ok(Alphas { re, be, ae })
}

fn build_config(common: &Common) -> engage_core::Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.weights {
        cfg.aggregation.weights = w;
    }
    if let Some(a) = common.alphas {
        cfg.aggregation.alphas = a;
    }
    if let Some(k) = common.kappa {
        cfg.aggregation.kappa = k;
    }
    if let Some(e) = &common.emotion {
        cfg.emotion = e.parse::<ScorerSelection>()?;
    }
    if let Some(t) = &common.toxicity {
        cfg.toxicity = t.parse::<ScorerSelection>()?;
    }
    if let Some(p) = &common.stopwords {
        cfg.stopwords = Some(p.clone());
    }
    Ok(cfg)
}

fn curate(args: CurateArgs) -> anyhow::Result<()> {
    let mut cfg = build_config(&args.common)?;
    if !args.inputs.is_empty() {
        cfg.inputs = args.inputs;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(n) = args.synthetic_negatives {
        cfg.synthetic_negatives = n;
    }
    if let Some(mb) = args.memory_budget {
        cfg.memory_budget_bytes = mb << 20;
    }
    let resume: ResumeFrom = args.resume.parse()?;
    let summary = pipeline::curate(&cfg, resume)?;
    let m = &summary.manifest;
    println!(
        "pairs {} | positive {} | negative {} | synthetic {} | discarded {} | train {} | validation {}",
        summary.ingest.pairs,
        m.n_positive,
        m.n_negative,
        m.n_synthetic,
        m.n_discarded,
        m.n_train,
        m.n_validation
    );
    println!("wrote {}", cfg.out_dir.display());
    Ok(())
}

fn score(args: ScoreArgs) -> anyhow::Result<()> {
    let cfg = build_config(&args.common)?;
    let n = pipeline::score_pairs(&cfg, &args.stats, &args.pairs, &args.out)?;
    println!("scored {n} pairs -> {}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let metrics = args
        .metrics
        .iter()
        .map(|m| MetricSelection::parse(m, args.seed))
        .collect::<engage_core::Result<Vec<_>>>()?;
    for g in &args.golden {
        if !g.is_file() {
            log::warn!("golden set {} does not exist", g.display());
        }
    }
    let stopwords = match &args.stopwords {
        Some(p) => StopwordList::load(p)?,
        None => StopwordList::english(),
    };
    let report = pipeline::run_eval(&args.golden, &metrics, &stopwords);
    print!("{}", report.render_table());
    if let Some(p) = &args.json {
        write_json(p, &report)?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &CorrelationReport) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn report(path: &Path) -> anyhow::Result<()> {
    print!("{}", pipeline::render_report_file(path)?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    // Bad flags are configuration errors (exit 1), not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Curate(a) => curate(a),
        Command::Score(a) => score(a),
        Command::Eval(a) => eval(a),
        Command::Report { path } => report(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
