//! Command-line front end: expander generation/verification, compaction,
//! distribution, trace recording/comparison, benchmarking.
//!
//! Exit codes: 0 success, 2 precondition violation (bad inputs, densities,
//! malformed files), 1 internal assertion failure.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use oblidist::baseline::{bench_scaling, fit_exponent, Algo};
use oblidist::compaction::{self, MarkKind};
use oblidist::config::RunConfig;
use oblidist::distribution::{distribute, tight_compact};
use oblidist::error::Error;
use oblidist::graph::{self, verify_disc_exhaustive, verify_disc_spectral, SpectralOptions};
use oblidist::io;
use oblidist::mem::{trace_equal, MarkedArray};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "oblidist", about = "Deterministic oblivious distribution and compaction")]
struct Cli {
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a family graph and write it in the binary graph format.
    GenExpander(GenArgs),
    /// Verify the pseudorandomness property of a stored graph.
    VerifyExpander(VerifyArgs),
    /// Two-fold or loose compaction of a stored array.
    Compact(CompactArgs),
    /// Permute so every marked word lands on a marked position.
    Distribute(MoveArgs),
    /// Move the m marked words to the first m positions.
    TightCompact(MoveArgs),
    /// Record or compare access traces.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Access-count scaling benchmarks.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Vertices per side; must be a power of 2.
    #[arg(long)]
    n: usize,
    /// Epsilon the family is certified against at build time.
    #[arg(long)]
    epsilon: f64,
    /// Base construction: complete | complete-multi:<d> | affine |
    /// perm-sum:<d>:<seed>
    #[arg(long)]
    base: String,
    /// Boost exponent applied before padding.
    #[arg(long, default_value_t = 1)]
    boost_k: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Check all subset pairs (needs N at most the cap).
    #[arg(long, conflicts_with = "spectral")]
    exhaustive: bool,
    /// Certify through the eigengap (default).
    #[arg(long)]
    spectral: bool,
    /// Subset-pair cap for the exhaustive check.
    #[arg(long, default_value_t = 10)]
    cap: usize,
}

#[derive(Args)]
struct CompactArgs {
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// small | medium | general | loose
    #[arg(long)]
    mode: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the recorded access trace here.
    #[arg(long)]
    emit_trace: Option<PathBuf>,
    /// Write the copy script here.
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Args)]
struct MoveArgs {
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    emit_trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Run an algorithm on an array and write its access trace.
    Record {
        /// distribute | tight-compact | compact-general | loose-compact | bitonic
        #[arg(long)]
        algo: String,
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write JSON lines instead of the binary format.
        #[arg(long)]
        jsonl: bool,
    },
    /// Compare two trace files; exit 0 iff bit-identical.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated algorithm names.
    #[arg(long, default_value = "distribute,bitonic")]
    algos: String,
    /// Comma-separated sizes (powers of two).
    #[arg(long, default_value = "1024,4096,16384")]
    sizes: String,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<Error>().map(exit_code_for).unwrap_or(2);
            std::process::exit(code);
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Internal(_) | Error::NonConvergence { .. } | Error::ProtocolStall { .. } => 1,
        _ => 2,
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<RunConfig> {
    if let Some(path) = path {
        return Ok(io::read_config(path)?);
    }
    if let Ok(env_path) = std::env::var("OBLIDIST_CONFIG") {
        return Ok(io::read_config(std::path::Path::new(&env_path))?);
    }
    Ok(RunConfig::test(1024))
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::GenExpander(args) => {
            let base = graph::BaseId::from_str(&args.base)?;
            let params = graph::ExpanderParams::new(args.epsilon, base, args.boost_k);
            let g = graph::family(&params, args.n)?;
            let cert = verify_disc_spectral(&g, &SpectralOptions::default())?;
            if !cert.passes(args.epsilon) {
                eprintln!(
                    "family graph fails its configured epsilon: eigengap {:.4} < {:.4}",
                    cert.eigengap,
                    1.0 / args.epsilon
                );
                return Ok(2);
            }
            io::write_graph(&args.out, &g)?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "n": g.n_per_side(), "degree": g.degree(),
                        "epsilon": args.epsilon,
                        "second": cert.second, "eigengap": cert.eigengap,
                        "out": args.out,
                    })
                );
            } else {
                println!(
                    "wrote graph N={} d={} (second {:.4}, eigengap {:.2})",
                    g.n_per_side(),
                    g.degree(),
                    cert.second,
                    cert.eigengap
                );
            }
            Ok(0)
        }
        Command::VerifyExpander(args) => {
            let g = io::read_graph(&args.r#in)?;
            if args.exhaustive {
                let report = verify_disc_exhaustive(&g, args.epsilon, args.cap)?;
                if cli.json {
                    println!("{}", serde_json::to_string(&report)?);
                } else {
                    println!(
                        "exhaustive: holds={} pairs={} worst deviation {:.4}",
                        report.holds,
                        report.pairs_checked,
                        report.worst_pair.map(|w| w.deviation).unwrap_or(0.0)
                    );
                }
                Ok(if report.holds { 0 } else { 2 })
            } else {
                let cert = verify_disc_spectral(&g, &SpectralOptions::default())?;
                let pass = cert.passes(args.epsilon);
                if cli.json {
                    println!("{}", serde_json::json!({ "certificate": cert, "passes": pass }));
                } else {
                    println!(
                        "spectral: dominant {} second {:.6} eigengap {:.3} -> {}",
                        cert.dominant,
                        cert.second,
                        cert.eigengap,
                        if pass { "pass" } else { "fail" }
                    );
                }
                Ok(if pass { 0 } else { 2 })
            }
        }
        Command::Compact(args) => {
            let cfg = load_config(&args.config)?;
            let mut mem = io::read_array(&args.r#in)?;
            let arr = MarkedArray::new(0, mem.len())?;
            if args.emit_trace.is_some() {
                mem.record_full();
            }
            let outcome = match args.mode.as_str() {
                "small" => {
                    compaction::compact_small(&mut mem, arr, &cfg.compaction, MarkKind::WordMark)?
                }
                "medium" => {
                    compaction::compact_medium(&mut mem, arr, &cfg.compaction, MarkKind::WordMark)?
                }
                "general" => {
                    compaction::compact_general(&mut mem, arr, &cfg.compaction, MarkKind::WordMark)?
                }
                "loose" => {
                    compaction::loose_compact(&mut mem, arr, &cfg.compaction, MarkKind::WordMark)?
                }
                other => anyhow::bail!("unknown compaction mode `{other}`"),
            };
            if let Some(path) = &args.emit_trace {
                let trace = mem.take_trace();
                io::write_trace_binary(path, &trace)?;
            }
            if let Some(path) = &args.script {
                io::write_script(path, &outcome.script)?;
            }
            io::write_array(&args.out, &mem)?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "mode": args.mode, "n": mem.len(), "ok": outcome.ok,
                        "records": outcome.script.record_count(),
                        "applied": outcome.script.applied_count(),
                    })
                );
            } else {
                println!("compacted {} words, end-state ok: {}", mem.len(), outcome.ok);
            }
            Ok(if outcome.ok { 0 } else { 2 })
        }
        Command::Distribute(args) => {
            let cfg = load_config(&args.config)?;
            let mut mem = io::read_array(&args.r#in)?;
            let arr = MarkedArray::new(0, mem.len())?;
            if args.emit_trace.is_some() {
                mem.record_full();
            }
            distribute(&mut mem, &arr, &cfg.distribution)?;
            if let Some(path) = &args.emit_trace {
                let trace = mem.take_trace();
                io::write_trace_binary(path, &trace)?;
            }
            io::write_array(&args.out, &mem)?;
            if cli.json {
                println!("{}", serde_json::json!({ "n": mem.len(), "out": args.out }));
            } else {
                println!("distributed {} words", mem.len());
            }
            Ok(0)
        }
        Command::TightCompact(args) => {
            let cfg = load_config(&args.config)?;
            let mut mem = io::read_array(&args.r#in)?;
            let arr = MarkedArray::new(0, mem.len())?;
            if args.emit_trace.is_some() {
                mem.record_full();
            }
            tight_compact(&mut mem, &arr, &cfg.distribution)?;
            if let Some(path) = &args.emit_trace {
                let trace = mem.take_trace();
                io::write_trace_binary(path, &trace)?;
            }
            io::write_array(&args.out, &mem)?;
            if cli.json {
                println!("{}", serde_json::json!({ "n": mem.len(), "out": args.out }));
            } else {
                println!("tight-compacted {} words", mem.len());
            }
            Ok(0)
        }
        Command::Trace(TraceCmd::Record { algo, r#in, config, out, jsonl }) => {
            let cfg = load_config(&config)?;
            let mut mem = io::read_array(&r#in)?;
            let arr = MarkedArray::new(0, mem.len())?;
            mem.record_full();
            match algo.as_str() {
                "distribute" => distribute(&mut mem, &arr, &cfg.distribution)?,
                "tight-compact" => tight_compact(&mut mem, &arr, &cfg.distribution)?,
                "compact-general" => {
                    compaction::compact_general(&mut mem, arr, &cfg.compaction, MarkKind::WordMark)?;
                }
                "loose-compact" => {
                    compaction::loose_compact(&mut mem, arr, &cfg.compaction, MarkKind::WordMark)?;
                }
                "bitonic" => oblidist::baseline::butterfly_tight_compact(&mut mem, &arr),
                other => anyhow::bail!("unknown algorithm `{other}`"),
            }
            let trace = mem.take_trace();
            if jsonl {
                io::write_trace_jsonl(&out, &trace)?;
            } else {
                io::write_trace_binary(&out, &trace)?;
            }
            println!("recorded {} accesses", trace.len());
            Ok(0)
        }
        Command::Trace(TraceCmd::Compare { a, b }) => {
            let ta = io::read_trace(&a)?;
            let tb = io::read_trace(&b)?;
            let equal = trace_equal(&ta, &tb);
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({ "equal": equal, "len_a": ta.len(), "len_b": tb.len() })
                );
            } else {
                println!(
                    "{} ({} vs {} records)",
                    if equal { "identical" } else { "DIFFERENT" },
                    ta.len(),
                    tb.len()
                );
            }
            Ok(if equal { 0 } else { 2 })
        }
        Command::Bench(args) => {
            let cfg = load_config(&args.config)?;
            let sizes: Vec<usize> = args
                .sizes
                .split(',')
                .map(|s| s.trim().parse::<usize>().context("bad size"))
                .collect::<anyhow::Result<_>>()?;
            let mut all = Vec::new();
            for name in args.algos.split(',') {
                let algo = Algo::parse(name.trim())
                    .ok_or_else(|| anyhow::anyhow!("unknown algorithm `{name}`"))?;
                let records = bench_scaling(algo, &sizes, &cfg)?;
                let exponent = fit_exponent(&records);
                if !cli.json {
                    for r in &records {
                        println!(
                            "{:>16} n={:<8} accesses={:<14} {:.3}s",
                            r.algorithm, r.n, r.accesses, r.seconds
                        );
                    }
                    println!("{:>16} fitted exponent: {exponent:.4}", algo.name());
                }
                all.extend(records);
            }
            if cli.json {
                println!("{}", serde_json::to_string(&all)?);
            }
            if let Some(path) = &args.csv {
                let mut out = String::from("algo,n,accesses,seconds,params_hash\n");
                for r in &all {
                    out.push_str(&format!(
                        "{},{},{},{:.6},{:016x}\n",
                        r.algorithm, r.n, r.accesses, r.seconds, r.params_hash
                    ));
                }
                std::fs::write(path, out)?;
            }
            Ok(0)
        }
    }
}
