use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which notification scheme the benchmark exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Consumers use `wait_legacy`; the producer uses `broadcast_all`.
    Legacy,
    /// Consumers use `wait_dce`; the producer uses `signal_dce`.
    Dce,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Legacy => "legacy",
            Mode::Dce => "dce",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("at least one consumer is required")]
    NoConsumers,
    #[error("at least one run is required")]
    NoRuns,
    #[error("run duration must be positive")]
    NonPositiveDuration,
    #[error("invalid duration {0:?}: expected a positive number of seconds")]
    BadDuration(String),
    #[error("slot padding must be a positive multiple of 8 bytes, got {0}")]
    BadPadding(usize),
    #[error("invalid sweep {0:?}: expected FIRST:LAST:STEP with 1 <= FIRST <= LAST and STEP >= 1")]
    BadSweep(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub mode: Mode,
    /// Consumer threads; the run uses one more thread for the producer.
    pub consumers: usize,
    pub duration_per_run: Duration,
    pub runs: usize,
    /// Local work after each item is uniform in `[0, max_work_iters)`.
    pub max_work_iters: u64,
    pub rng_seed: u64,
    /// Stride between consecutive slots.
    pub pad_bytes: usize,
}

impl BenchConfig {
    pub const DEFAULT_RUNS: usize = 7;
    pub const DEFAULT_MAX_WORK: u64 = 512;
    pub const DEFAULT_DURATION: Duration = Duration::from_secs(5);
    pub const DEFAULT_PAD_BYTES: usize = 64;

    pub fn new(mode: Mode, consumers: usize) -> Self {
        BenchConfig {
            mode,
            consumers,
            duration_per_run: Self::DEFAULT_DURATION,
            runs: Self::DEFAULT_RUNS,
            max_work_iters: Self::DEFAULT_MAX_WORK,
            rng_seed: 0,
            pad_bytes: Self::DEFAULT_PAD_BYTES,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.consumers == 0 {
            return Err(ConfigError::NoConsumers);
        }
        if self.runs == 0 {
            return Err(ConfigError::NoRuns);
        }
        if self.duration_per_run.is_zero() {
            return Err(ConfigError::NonPositiveDuration);
        }
        if self.pad_bytes == 0 || !self.pad_bytes.is_multiple_of(8) {
            return Err(ConfigError::BadPadding(self.pad_bytes));
        }
        Ok(())
    }
}

/// Parses a positive number of seconds, e.g. `2` or `0.5`.
pub fn parse_duration(text: &str) -> Result<Duration, ConfigError> {
    let bad = || ConfigError::BadDuration(text.to_owned());
    let secs: f64 = text.trim().parse().map_err(|_| bad())?;
    if secs.is_nan() || secs <= 0.0 {
        return Err(bad());
    }
    Duration::try_from_secs_f64(secs).map_err(|_| bad())
}

/// Inclusive range of consumer counts, `FIRST:LAST:STEP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweep {
    pub first: usize,
    pub last: usize,
    pub step: usize,
}

impl Sweep {
    pub fn counts(&self) -> impl Iterator<Item = usize> {
        (self.first..=self.last).step_by(self.step)
    }
}

impl FromStr for Sweep {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadSweep(text.to_owned());
        let parts: Vec<usize> = text
            .split(':')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [first, last, step] = parts[..] else {
            return Err(bad());
        };
        if first == 0 || last < first || step == 0 {
            return Err(bad());
        }
        Ok(Sweep { first, last, step })
    }
}
