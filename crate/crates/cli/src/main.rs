use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use plaincheck_core::service::{self, RunConfig, ServiceError};

#[derive(Parser)]
#[command(
    name = "plaincheck",
    version,
    about = "QA-based factual consistency scoring for plain-language summaries"
)]
struct Cli {
    /// TOML run configuration; defaults to fully offline backends.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for bootstrap resampling (overrides eval.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides jobs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Include per-sentence traces in score reports.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk and embed corpora into an index directory.
    Index {
        /// Corpus JSONL file; repeatable. Defaults to retrieval.corpora.
        #[arg(long = "corpus")]
        corpora: Vec<PathBuf>,
        /// Index directory. Defaults to retrieval.index_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every summary of a dataset.
    Score {
        #[arg(long)]
        dataset: PathBuf,
        /// Output JSONL, one score report per input line.
        #[arg(long)]
        out: PathBuf,
        /// Index directory. Defaults to retrieval.index_dir.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Compute correlations, AUC with bootstrap CIs and paired tests.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Score files (`id,score` CSV or score JSONL); the first is the
        /// primary metric.
        #[arg(long = "scores", required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        /// Directory receiving report.json and report.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        ci_level: Option<f64>,
    },
    /// Write perturbed non-factual twins of a dataset.
    Perturb {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also copy the original pairs into the output.
        #[arg(long)]
        with_originals: bool,
    },
    /// Serve the mock backend over HTTP until interrupted.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: String,
    },
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(ServiceError::from)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.eval.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if cli.trace {
        cfg.scoring.trace = true;
    }
    if let Command::Evaluate {
        alpha,
        replicates,
        ci_level,
        ..
    } = &cli.command
    {
        cfg.eval.alpha = alpha.unwrap_or(cfg.eval.alpha);
        cfg.eval.replicates = replicates.unwrap_or(cfg.eval.replicates);
        cfg.eval.ci_level = ci_level.unwrap_or(cfg.eval.ci_level);
    }
    cfg.validate().map_err(ServiceError::from)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Index { corpora, out } => {
            let corpora = if corpora.is_empty() {
                cfg.retrieval.corpora.clone()
            } else {
                corpora
            };
            if corpora.is_empty() {
                return Err(UsageError("index: pass --corpus or set retrieval.corpora".into()).into());
            }
            let out = out
                .or_else(|| cfg.retrieval.index_dir.clone())
                .ok_or_else(|| UsageError("index: pass --out or set retrieval.index_dir".into()))?;
            let s = service::cmd_index(&cfg, &corpora, &out)?;
            writeln!(stdout, "documents: {}", s.documents)?;
            writeln!(stdout, "chunks: {}", s.chunks)?;
            writeln!(stdout, "vectors: {}", s.vectors)?;
            writeln!(stdout, "embedded: {}", s.embedded)?;
            writeln!(stdout, "reused: {}", s.reused)?;
        }
        Command::Score { dataset, out, index } => {
            let s = service::cmd_score(&cfg, &dataset, &out, index.as_deref())?;
            writeln!(
                stdout,
                "scored {} of {} summaries ({} unscored, {} failed) -> {}",
                s.scored,
                s.summaries,
                s.unscored,
                s.failed.len(),
                out.display()
            )?;
        }
        Command::Evaluate {
            dataset, scores, out, ..
        } => {
            service::cmd_evaluate(&cfg, &dataset, &scores, &out)?;
            let csv_path = out.join(service::REPORT_CSV);
            let csv = std::fs::read_to_string(&csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
            write!(stdout, "{csv}")?;
        }
        Command::Perturb {
            dataset,
            out,
            with_originals,
        } => {
            let n = service::cmd_perturb(&cfg, &dataset, &out, with_originals)?;
            writeln!(stdout, "wrote {n} perturbed summaries -> {}", out.display())?;
        }
        Command::MockServe { addr } => {
            let server = service::serve_mock(&cfg, &addr)?;
            writeln!(stdout, "listening on {}", server.base_url())?;
            stdout.flush()?;
            drop(stdout);
            server.join();
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<ServiceError>() {
        Some(e) => e.exit_code() as u8,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
