use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use oltr_core::data::{make_synthetic, write_letor};
use oltr_core::harness::output::{plot_dirs, CURVE_FILE, SUMMARY_FILE};
use oltr_core::harness::{emit_outputs, run_experiment, ExperimentConfig, Summary};

/// Overrides the number of worker threads used by `run`.
const WORKERS_ENV: &str = "OLTR_WORKERS";

#[derive(Parser)]
#[command(name = "oltr", version, about = "Online learning to rank simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Worker threads (default: available cores, or $OLTR_WORKERS).
        #[arg(long, short)]
        workers: Option<usize>,
    },
    /// Redraw the learning curve of one or more output directories.
    Plot {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where to write the SVG (default: curve.svg in the first directory).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Welch t-test between the final NDCG@10 values of two experiments.
    Compare { dir_a: PathBuf, dir_b: PathBuf },
    /// Write a synthetic dataset as LETOR train.txt and test.txt.
    ///
    /// SPEC is a comma-separated list such as `queries=300,docs=10,dim=64,seed=1`.
    Synth { spec: String, out: PathBuf },
}

fn workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map(|w| w.max(1))
            .with_context(|| format!("{WORKERS_ENV}={v:?} is not a number")),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run(config: &Path, out: Option<PathBuf>, workers_flag: Option<usize>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)
        .with_context(|| format!("loading config {}", config.display()))?;
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.label()));
    let workers = workers(workers_flag)?;
    eprintln!(
        "running {} ({} repeats x {} impressions, {} workers)",
        cfg.label(),
        cfg.repeats,
        cfg.impressions,
        workers
    );
    let experiment = run_experiment(&cfg, workers)?;
    let files = emit_outputs(&experiment, &out)?;
    let s = &experiment.summary;
    println!("{}: NDCG@10 {:.4} ({:.4})", s.label, s.mean, s.std);
    for c in &s.comparisons {
        println!(
            "  vs {}: diff {:+.4}, t = {:.3}, p = {:.3e}{}",
            c.baseline,
            c.mean_difference,
            c.t,
            c.p,
            if c.significant { " *" } else { "" }
        );
    }
    println!("wrote {}", files.trace.parent().unwrap_or(&out).display());
    Ok(())
}

fn compare(a: &Path, b: &Path) -> Result<()> {
    let load = |d: &Path| {
        Summary::load(&d.join(SUMMARY_FILE)).with_context(|| format!("reading {}", d.display()))
    };
    let (sa, sb) = (load(a)?, load(b)?);
    let c = sa.compare_to(&sb)?;
    println!("{}: {:.4} ({:.4})  n={}", sa.label, sa.mean, sa.std, sa.finals.len());
    println!("{}: {:.4} ({:.4})  n={}", sb.label, sb.mean, sb.std, sb.finals.len());
    println!(
        "welch two-sided: diff {:+.4}, t = {:.4}, df = {:.1}, p = {:.4e}{}",
        c.mean_difference,
        c.t,
        c.df,
        c.p,
        if c.significant { " (p < 0.01)" } else { "" }
    );
    Ok(())
}

struct SynthSpec {
    queries: usize,
    docs: usize,
    dim: usize,
    seed: u64,
}

fn parse_synth_spec(spec: &str) -> Result<SynthSpec> {
    let mut s = SynthSpec {
        queries: 300,
        docs: 10,
        dim: 64,
        seed: 1,
    };
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((key, value)) = part.split_once('=') else {
            bail!("expected key=value, got {part:?}");
        };
        let n: u64 = value
            .trim()
            .parse()
            .with_context(|| format!("{key}: {value:?} is not a number"))?;
        match key.trim() {
            "queries" => s.queries = n as usize,
            "docs" => s.docs = n as usize,
            "dim" => s.dim = n as usize,
            "seed" => s.seed = n,
            other => bail!("unknown synthetic parameter {other:?}"),
        }
    }
    Ok(s)
}

fn synth(spec: &str, out: &Path) -> Result<()> {
    let s = parse_synth_spec(spec)?;
    let synth = make_synthetic(s.queries, s.docs, s.dim, s.seed)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, queries) in [("train.txt", &synth.dataset.train), ("test.txt", &synth.dataset.test)] {
        let path = out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_letor(queries, BufWriter::new(file))?;
    }
    let weights: Vec<String> = synth.weights.weights().iter().map(|w| w.to_string()).collect();
    std::fs::write(out.join("weights.txt"), weights.join("\n") + "\n")?;
    println!(
        "wrote {} train and {} test queries to {}",
        synth.dataset.train.len(),
        synth.dataset.test.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            workers,
        } => run(&config, out, workers),
        Command::Plot { dirs, out } => {
            let out = out.unwrap_or_else(|| dirs[0].join(CURVE_FILE));
            plot_dirs(&dirs, &out).map_err(Into::into)
        }
        Command::Compare { dir_a, dir_b } => compare(&dir_a, &dir_b),
        Command::Synth { spec, out } => synth(&spec, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
