use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    /// Producer iterations completed.
    pub produced_items: u64,
    /// Items processed by consumers; equals `produced_items` in a correct run.
    pub consumed_items: u64,
    pub futile_wakeups: u64,
    /// Wakeups delivered by the condvar during the run.
    pub signals_sent: u64,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn throughput(&self) -> f64 {
        if self.wall_time_s > 0.0 {
            self.produced_items as f64 / self.wall_time_s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunError {
    pub run: usize,
    pub message: String,
}

/// Aggregates over the per-run records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Items per second.
    pub mean_throughput: f64,
    /// Sample standard deviation; zero for fewer than two runs.
    pub stddev_throughput: f64,
    pub mean_futile_wakeups: f64,
    pub mean_produced_items: f64,
    pub mean_wall_time_s: f64,
}

impl Summary {
    pub fn from_records(records: &[RunRecord]) -> Self {
        if records.is_empty() {
            return Summary::default();
        }
        let n = records.len() as f64;
        let mean = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let mean_throughput = mean(&|r| r.throughput());
        let stddev_throughput = if records.len() < 2 {
            0.0
        } else {
            let ss: f64 = records
                .iter()
                .map(|r| (r.throughput() - mean_throughput).powi(2))
                .sum();
            (ss / (n - 1.0)).sqrt()
        };
        Summary {
            mean_throughput,
            stddev_throughput,
            mean_futile_wakeups: mean(&|r| r.futile_wakeups as f64),
            mean_produced_items: mean(&|r| r.produced_items as f64),
            mean_wall_time_s: mean(&|r| r.wall_time_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: Mode,
    pub consumers: usize,
    pub records: Vec<RunRecord>,
    pub errors: Vec<RunError>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn new(mode: Mode, consumers: usize) -> Self {
        BenchReport {
            mode,
            consumers,
            records: Vec::new(),
            errors: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn push(&mut self, record: RunRecord) {
        self.records.push(record);
        self.summary = Summary::from_records(&self.records);
    }

    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "mode,consumers,run,produced_items,futile_wakeups,duration_s";

/// Renders one report.
pub fn emit_report(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Csv => emit_csv(std::slice::from_ref(report)),
        Format::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
    }
}

/// Renders a sweep: one CSV table with a summary row per report, or a JSON
/// array.
pub fn emit_reports(reports: &[BenchReport], format: Format) -> String {
    match format {
        Format::Csv => emit_csv(reports),
        Format::Json => {
            let mut out = serde_json::to_string_pretty(reports).expect("report serializes");
            out.push('\n');
            out
        }
    }
}

fn emit_csv(reports: &[BenchReport]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for report in reports {
        for r in &report.records {
            writeln!(
                out,
                "{},{},{},{},{},{:.6}",
                report.mode,
                report.consumers,
                r.run,
                r.produced_items,
                r.futile_wakeups,
                r.wall_time_s
            )
            .unwrap();
        }
        if !report.records.is_empty() {
            let s = &report.summary;
            writeln!(
                out,
                "{},{},mean,{:.3},{:.3},{:.6}",
                report.mode,
                report.consumers,
                s.mean_produced_items,
                s.mean_futile_wakeups,
                s.mean_wall_time_s
            )
            .unwrap();
        }
    }
    out
}
