use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use delegated_condvar::bench::{
    emit_report, emit_reports, parse_duration, run_benchmark, BenchConfig, Format, Mode, Sweep,
};

/// Producer/consumer wakeup benchmark: legacy broadcast vs delegated
/// condition evaluation.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Args {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Number of consumer threads (one producer thread is added).
    #[arg(long, default_value_t = 1)]
    consumers: usize,
    #[arg(long, default_value_t = BenchConfig::DEFAULT_RUNS)]
    runs: usize,
    /// Seconds per run.
    #[arg(long, default_value = "5", value_parser = parse_duration)]
    duration: Duration,
    /// Local work per item is uniform in [0, K) PRNG steps.
    #[arg(long = "max-work", default_value_t = BenchConfig::DEFAULT_MAX_WORK)]
    max_work: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Sweep consumer counts FIRST:LAST:STEP (inclusive); overrides --consumers.
    #[arg(long, value_parser = |s: &str| s.parse::<Sweep>())]
    sweep: Option<Sweep>,
    /// Byte stride between slots.
    #[arg(long = "pad-bytes", default_value_t = BenchConfig::DEFAULT_PAD_BYTES)]
    pad_bytes: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = BenchConfig {
        mode: args.mode,
        consumers: args.consumers,
        duration_per_run: args.duration,
        runs: args.runs,
        max_work_iters: args.max_work,
        rng_seed: args.seed,
        pad_bytes: args.pad_bytes,
    };
    let counts: Vec<usize> = match args.sweep {
        Some(sweep) => sweep.counts().collect(),
        None => vec![config.consumers],
    };

    let mut reports = Vec::with_capacity(counts.len());
    for consumers in counts {
        let config = BenchConfig {
            consumers,
            ..config.clone()
        };
        match run_benchmark(&config) {
            Ok(report) => {
                for error in &report.errors {
                    eprintln!("bench: run {} failed: {}", error.run, error.message);
                }
                reports.push(report);
            }
            Err(e) => {
                eprintln!("bench: {e}");
                return ExitCode::from(2);
            }
        }
    }

    let output = match (args.sweep, reports.as_slice()) {
        (None, [report]) => emit_report(report, args.format),
        _ => emit_reports(&reports, args.format),
    };
    print!("{output}");
    if reports.iter().all(|r| r.is_complete()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
