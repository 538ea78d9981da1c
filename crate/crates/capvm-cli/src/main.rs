//! Report harness CLI.
//!
//! Runs a benchmark under a chosen machine/policy configuration, checks
//! the result against the manifest, and emits metrics (JSON, CSV, or
//! markdown) plus folded stack files. `--compare` runs a second
//! configuration and additionally emits a differential folded file.
//!
//! Exit codes: 0 success, 2 benchmark result mismatch, 3 heap exhaustion,
//! 4 configuration error, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use capvm::bench::{self, Benchmark};
use capvm::config::{parse_bytes, FileConfig};
use capvm::error::Error;
use capvm::profiler::SampleSet;
use capvm::report::{
    fold_label_pair, run_benchmark, to_csv, to_json, to_markdown, write_diff_file,
    write_run_files, RunConfig, RunMetrics,
};
use capvm::vm::VmConfig;
use capvm::{Mode, Scale, TaxSetting};
use clap::Parser;

#[derive(Parser, Debug)]
#[command(
    name = "capvm",
    about = "Deterministic interpreter model for reference-width sizing experiments"
)]
struct Cli {
    /// Benchmark to run (or `all`).
    #[arg(long)]
    bench: String,

    /// Machine mode: hybrid | purecap.
    #[arg(long)]
    mode: Option<Mode>,

    /// Heap block sizing: word | ref.
    #[arg(long, value_name = "SCALE")]
    block_policy: Option<Scale>,

    /// Frame spill threshold sizing: word | ref.
    #[arg(long, value_name = "SCALE")]
    frame_policy: Option<Scale>,

    /// Purecap instruction tax: off | on | patched.
    #[arg(long)]
    tax: Option<TaxSetting>,

    /// Heap arena size (suffixes K/KiB, M/MiB allowed).
    #[arg(long, value_name = "BYTES")]
    heap_bytes: Option<String>,

    /// Cost units between profiler samples.
    #[arg(long, value_name = "UNITS")]
    sample_interval: Option<u64>,

    /// Abort runs whose total cost exceeds this (0 disables).
    #[arg(long, value_name = "UNITS")]
    step_limit: Option<u64>,

    /// `key = value` configuration file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory for metrics/folded output files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Stdout format: json | csv | markdown.
    #[arg(long, default_value = "json")]
    format: String,

    /// Second configuration `MODE.BLOCK.FRAME.TAX` to run and diff against.
    #[arg(long, value_name = "CONFIG")]
    compare: Option<String>,

    /// Load benchmarks from a directory instead of the built-in set.
    #[arg(long, value_name = "DIR")]
    bench_dir: Option<PathBuf>,

    /// Print the final allocation-table state (./H/T/M per block).
    #[arg(long)]
    dump_atb: bool,
}

fn base_config(cli: &Cli) -> Result<VmConfig, Error> {
    let mut base = VmConfig::new(
        Mode::Hybrid,
        Scale::WordScaled,
        Scale::WordScaled,
        TaxSetting::Off,
    );
    if let Some(path) = &cli.config {
        FileConfig::load(path)?.apply(&mut base)?;
    }
    if let Some(m) = cli.mode {
        base.mode = m;
    }
    if let Some(s) = cli.block_policy {
        base.policy.block_scale = s;
    }
    if let Some(s) = cli.frame_policy {
        base.policy.frame_scale = s;
    }
    if let Some(t) = cli.tax {
        base.tax = t;
    }
    if let Some(h) = &cli.heap_bytes {
        base.heap_bytes = parse_bytes(h)?;
    }
    if let Some(i) = cli.sample_interval {
        if i == 0 {
            return Err(Error::Config("sample_interval must be at least 1".into()));
        }
        base.sample_interval = i;
    }
    if let Some(l) = cli.step_limit {
        base.step_limit = if l == 0 { None } else { Some(l) };
    }
    Ok(base)
}

fn select_benchmarks(cli: &Cli) -> Result<Vec<Benchmark>, Error> {
    let all = match &cli.bench_dir {
        Some(dir) => bench::load_dir(dir)?,
        None => bench::builtin_benchmarks(),
    };
    if cli.bench == "all" {
        return Ok(all);
    }
    all.into_iter()
        .find(|b| b.name == cli.bench)
        .map(|b| vec![b])
        .ok_or_else(|| Error::Config(format!("unknown benchmark `{}`", cli.bench)))
}

struct CompletedRun {
    metrics: RunMetrics,
    samples: SampleSet,
}

fn run_one(
    cli: &Cli,
    b: &Benchmark,
    rc: RunConfig,
    base: &VmConfig,
) -> Result<CompletedRun, Error> {
    let (metrics, samples) = run_benchmark(b, rc, base)?;
    if cli.dump_atb {
        // Re-run cheaply enough is not possible; instead instantiate and
        // run again only when the dump is requested.
        let mut interp = b.instantiate(rc.vm_config(base))?;
        interp.run_main()?;
        eprintln!("{}", interp.heap().dump_atb());
    }
    if let Some(dir) = &cli.out {
        write_run_files(dir, &metrics, &samples)?;
    }
    Ok(CompletedRun { metrics, samples })
}

fn emit(cli: &Cli, rows: &[RunMetrics]) -> Result<(), Error> {
    match cli.format.as_str() {
        "json" => {
            for m in rows {
                println!("{}", to_json(m)?);
            }
        }
        "csv" => print!("{}", to_csv(rows)),
        "markdown" => print!("{}", to_markdown(rows)),
        other => {
            return Err(Error::Config(format!(
                "unknown format `{other}` (expected json, csv, or markdown)"
            )))
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let base = base_config(cli)?;
    let benches = select_benchmarks(cli)?;
    let primary = RunConfig::new(
        base.mode,
        base.policy.block_scale,
        base.policy.frame_scale,
        base.tax,
    );
    let compare = cli
        .compare
        .as_deref()
        .map(RunConfig::parse)
        .transpose()?;

    let mut rows = Vec::new();
    for b in &benches {
        let first = run_one(cli, b, primary, &base)?;
        if let Some(other) = compare {
            let second = run_one(cli, b, other, &base)?;
            if let Some(dir) = &cli.out {
                write_diff_file(
                    dir,
                    &b.name,
                    primary,
                    &first.samples,
                    other,
                    &second.samples,
                )?;
            } else {
                eprintln!(
                    "# diff-folded {}",
                    fold_label_pair(&b.name, primary, other)
                );
                eprint!("{}", capvm::fold_diff(&first.samples, &second.samples));
            }
            rows.push(first.metrics);
            rows.push(second.metrics);
        } else {
            rows.push(first.metrics);
        }
    }
    emit(cli, &rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BenchMismatch { .. } => ExitCode::from(2),
                Error::HeapExhausted { .. } => ExitCode::from(3),
                Error::Config(_) | Error::Asm { .. } => ExitCode::from(4),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
