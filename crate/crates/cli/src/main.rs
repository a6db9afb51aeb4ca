//! `bdmatch`: generate bounded-deletion streams, run the matching
//! algorithms on them, verify results, and sweep parameter grids.
//!
//! Exit status is 0 on success, 1 on invalid input, and 2 when a requested
//! verification fails.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bdmatch::drivers::{self, AlgorithmKind, RunResult};
use bdmatch::harness::{self, ExperimentPlan, KeyValues};
use bdmatch::oracle::{self, Verdict};
use bdmatch::stream::{final_graph, generate, validate_stream, GeneratorConfig};
use bdmatch::{Exec, StreamSpec};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bdmatch", version, about = "Maximal matching in bounded-deletion graph streams")]
struct Cli {
    /// Run every loop on the current thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write stream fixtures described by a key-value config file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output file, or directory when the config sets `count` above 1.
        /// Defaults to stdout for a single stream.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one algorithm on a stream file and print the result as JSON.
    Run {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Validate a stream, and optionally re-check a result JSON against it.
    Verify {
        #[arg(long)]
        stream: PathBuf,
        /// Result JSON written by `run`.
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter grid from a plan file and write one CSV row per trial.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan's `out` key; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Rand,
    Det,
    Budget,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    stream: PathBuf,
    #[arg(long, value_enum, default_value = "rand")]
    algo: Algo,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "c-prime")]
    c_prime: Option<f64>,
    /// Per-sampler failure probability; sets the number of rows.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "slot-scale")]
    slot_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check the output against the exact oracle and embed the verdict.
    #[arg(long)]
    verify: bool,
    /// Include the repair trace.
    #[arg(long)]
    trace: bool,
    /// Include wall-clock time, which makes the output vary between runs.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(anyhow::Error),
    Verification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let outcome = match cli.command {
        Command::Generate { config, out } => cmd_generate(&config, out.as_deref()).map_err(Failure::from),
        Command::Run { args } => cmd_run(&args, exec),
        Command::Verify { stream, result, out } => cmd_verify(&stream, result.as_deref(), out.as_deref()),
        Command::Sweep { plan, out } => cmd_sweep(&plan, out, exec).map_err(Failure::from),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_key_values(path: &Path) -> Result<KeyValues> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    KeyValues::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_stream(path: &Path) -> Result<StreamSpec> {
    StreamSpec::load(path).with_context(|| format!("loading stream {}", path.display()))
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn cmd_generate(config: &Path, out: Option<&Path>) -> Result<()> {
    let (cfg, count) = GeneratorConfig::from_key_values(&read_key_values(config)?)?;
    if count == 0 {
        bail!("`count` must be at least 1");
    }
    let streams = (0..count as u64)
        .map(|i| {
            let c = cfg.with_seed(cfg.seed + i);
            generate(&c).map(|s| (c, s))
        })
        .collect::<bdmatch::Result<Vec<_>>>()?;
    match (out, count) {
        (None, 1) => emit(None, &streams[0].1.to_text()),
        (None, _) => bail!("`--out DIR` is required when `count` is above 1"),
        (Some(path), 1) => Ok(streams[0].1.save(path)?),
        (Some(dir), _) => {
            fs::create_dir_all(dir)?;
            for (c, s) in &streams {
                let name = format!("{}_n{}_k{}_s{}.txt", c.name(), c.n, c.k, c.seed);
                s.save(&dir.join(name))?;
            }
            Ok(())
        }
    }
}

fn algorithm(args: &RunArgs) -> Result<AlgorithmKind> {
    Ok(match args.algo {
        Algo::Rand => AlgorithmKind::RandomizedSqrtK,
        Algo::Det => AlgorithmKind::DeterministicK,
        Algo::Budget => {
            if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
                bail!("--epsilon must be positive");
            }
            AlgorithmKind::BudgetedApprox { epsilon: args.epsilon }
        }
    })
}

/// Why a verified result does not meet its algorithm's guarantee.
fn shortfall(kind: AlgorithmKind, v: &Verdict, size: usize) -> Option<String> {
    if !v.is_valid_matching {
        return Some("output is not a matching of the final graph".into());
    }
    match kind {
        AlgorithmKind::BudgetedApprox { epsilon } => {
            let best = v.max_matching_size?;
            let r = drivers::ratio(best, size);
            (r > 2.0 + epsilon).then(|| format!("ratio {r} exceeds {}", 2.0 + epsilon))
        }
        _ => (!v.is_maximal).then(|| format!("not maximal, witness {:?}", v.witness)),
    }
}

fn cmd_run(args: &RunArgs, exec: Exec) -> Result<(), Failure> {
    let kind = algorithm(args)?;
    let spec = load_stream(&args.stream)?;
    let mut cfg = drivers::default_config(&spec, args.seed, exec);
    cfg.c = args.c.unwrap_or(cfg.c);
    cfg.c_prime = args.c_prime.unwrap_or(cfg.c_prime);
    cfg.slot_scale = args.slot_scale.unwrap_or(cfg.slot_scale);
    cfg.delta = args.delta.or(cfg.delta);
    cfg.validate().map_err(anyhow::Error::from)?;
    let graph = if args.verify {
        Some(final_graph(&spec).map_err(anyhow::Error::from)?)
    } else {
        None
    };
    let mut result = drivers::run(kind, spec, &cfg).map_err(anyhow::Error::from)?;
    if !args.trace {
        result.trace.clear();
    }
    if !args.timing {
        result.metrics.wall_time_ms = 0.0;
    }
    if let Some(g) = &graph {
        result.verify_against(g);
    }
    let json = serde_json::to_string_pretty(&result).map_err(anyhow::Error::from)?;
    emit(args.out.as_deref(), &(json + "\n"))?;
    match &result.verdict {
        Some(v) => shortfall(kind, v, result.matching.len()).map_or(Ok(()), |m| Err(Failure::Verification(m))),
        None => Ok(()),
    }
}

fn cmd_verify(stream: &Path, result: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let spec = load_stream(stream)?;
    if let Some((seq, violation)) = validate_stream(&spec).violation {
        return Err(Failure::Input(anyhow::anyhow!("invalid stream at seq {seq}: {violation}")));
    }
    let graph = final_graph(&spec).map_err(anyhow::Error::from)?;
    let Some(path) = result else {
        let summary = serde_json::json!({
            "n": spec.n,
            "k": spec.k,
            "events": spec.events.len(),
            "deletions": spec.deletion_count(),
            "final_edges": graph.edge_count(),
            "valid": true,
        });
        emit(out, &(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n"))?;
        return Ok(());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let run: RunResult = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    if (run.n, run.k) != (spec.n, spec.k) {
        return Err(Failure::Input(anyhow::anyhow!(
            "result is for n = {}, K = {} but the stream has n = {}, K = {}",
            run.n,
            run.k,
            spec.n,
            spec.k
        )));
    }
    let verdict = oracle::verify(&graph, &run.matching);
    emit(out, &(serde_json::to_string_pretty(&verdict).map_err(anyhow::Error::from)? + "\n"))?;
    shortfall(run.algorithm, &verdict, run.matching.len()).map_or(Ok(()), |m| Err(Failure::Verification(m)))
}

fn cmd_sweep(plan_path: &Path, out: Option<PathBuf>, exec: Exec) -> Result<()> {
    let plan = ExperimentPlan::from_key_values(&read_key_values(plan_path)?)?;
    let rows = harness::sweep(&plan, exec);
    match out.or_else(|| plan.out.clone()) {
        Some(p) => {
            let f = fs::File::create(&p).with_context(|| format!("writing {}", p.display()))?;
            harness::write_csv(&rows, io::BufWriter::new(f))?;
        }
        None => harness::write_csv(&rows, io::stdout().lock())?,
    }
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        eprintln!("{failed} of {} trials failed", rows.len());
    }
    Ok(())
}
