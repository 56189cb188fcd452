//! Producer/consumer microbenchmark comparing legacy broadcast wakeups with
//! delegated condition evaluation.
//!
//! One producer and `consumers` consumer threads share an array of padded
//! slots, one per consumer. The producer repeatedly picks a random slot,
//! waits (outside the lock) until it is empty, sets it to 1 under the lock
//! and notifies, then does a random amount of local work. Consumer `i`
//! waits until slot `i` is non-zero and clears it.
//!
//! In [`Mode::Legacy`] consumers call `wait_legacy` and the producer calls
//! `broadcast_all`, so every item wakes every idle consumer. In
//! [`Mode::Dce`] consumers register the predicate "my slot is set" and the
//! producer calls `signal_dce`, which wakes only the owner of the slot.

mod config;
mod report;
mod workload;

pub use config::{parse_duration, BenchConfig, ConfigError, Mode, Sweep};
pub use report::{
    emit_report, emit_reports, BenchReport, Format, RunError, RunRecord, Summary, CSV_HEADER,
};
pub use workload::{local_work, Step, Workload};

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_utils::Backoff;
use parking_lot::Mutex;

use crate::condvar::DceCondvar;

/// One cell per consumer, spaced `pad_bytes` apart. 0 means empty, 1 means
/// an item is pending. Only the producer sets a slot and only its consumer
/// clears it.
#[derive(Debug)]
pub struct SlotArray {
    cells: Box<[AtomicU64]>,
    stride: usize,
    len: usize,
}

impl SlotArray {
    pub fn new(len: usize, pad_bytes: usize) -> Self {
        let stride = (pad_bytes / std::mem::size_of::<AtomicU64>()).max(1);
        let cells = (0..len * stride).map(|_| AtomicU64::new(0)).collect();
        SlotArray { cells, stride, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn slot(&self, index: usize) -> &AtomicU64 {
        assert!(index < self.len, "slot {index} out of range");
        &self.cells[index * self.stride]
    }
}

/// State shared by the producer and consumers of one run.
#[derive(Debug)]
pub struct BenchSync {
    pub slots: SlotArray,
    pub lock: Mutex<()>,
    pub cv: DceCondvar<()>,
    /// Set under `lock` once the producer has finished.
    pub stop_consumers: AtomicBool,
}

impl BenchSync {
    pub fn new(consumers: usize, pad_bytes: usize) -> Self {
        BenchSync {
            slots: SlotArray::new(consumers, pad_bytes),
            lock: Mutex::new(()),
            cv: DceCondvar::new(),
            stop_consumers: AtomicBool::new(false),
        }
    }

    /// Stops consumers after draining: they process any pending item and
    /// then exit.
    pub fn stop_consumers(&self, mode: Mode) {
        let mut guard = self.lock.lock();
        self.stop_consumers.store(true, Ordering::Release);
        match mode {
            Mode::Legacy => self.cv.broadcast_all(&mut guard),
            Mode::Dce => self.cv.broadcast_dce(&mut guard),
        };
    }
}

/// Per-consumer counts returned when a consumer exits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConsumerTally {
    pub processed: u64,
    pub futile_wakeups: u64,
}

/// Producer loop. Returns the number of items produced before `stop` was
/// observed.
pub fn run_producer(
    sync: &BenchSync,
    mode: Mode,
    stop: &AtomicBool,
    workload: &mut Workload,
) -> u64 {
    let mut produced = 0;
    let mut scratch = 0x9e37_79b9_7f4a_7c15;
    while !stop.load(Ordering::Relaxed) {
        let step = workload.next_step();
        let cell = sync.slots.slot(step.slot);
        // The spin has to stay outside the lock: the consumer needs it to
        // clear the slot.
        let backoff = Backoff::new();
        while cell.load(Ordering::Acquire) != 0 {
            if stop.load(Ordering::Relaxed) {
                return produced;
            }
            backoff.snooze();
        }
        {
            let mut guard = sync.lock.lock();
            cell.store(1, Ordering::Release);
            match mode {
                Mode::Legacy => {
                    sync.cv.broadcast_all(&mut guard);
                }
                Mode::Dce => {
                    sync.cv.signal_dce(&mut guard);
                }
            }
        }
        scratch = local_work(step.work_iters, scratch);
        produced += 1;
    }
    produced
}

/// Legacy consumer: wait in a loop, counting every wakeup that finds the
/// slot still empty.
pub fn run_consumer_legacy(sync: &BenchSync, index: usize) -> ConsumerTally {
    let cell = sync.slots.slot(index);
    let mut tally = ConsumerTally::default();
    loop {
        let mut guard = sync.lock.lock();
        while cell.load(Ordering::Acquire) == 0 && !sync.stop_consumers.load(Ordering::Acquire) {
            sync.cv.wait_legacy(&mut guard);
            if cell.load(Ordering::Acquire) == 0 && !sync.stop_consumers.load(Ordering::Acquire) {
                tally.futile_wakeups += 1;
            }
        }
        if cell.load(Ordering::Acquire) == 0 {
            return tally;
        }
        cell.store(0, Ordering::Release);
        tally.processed += 1;
    }
}

/// DCE consumer: the signaler evaluates "my slot is set, or we are
/// stopping". Futile wakeups are the ones the condvar attributes to this
/// waiter.
pub fn run_consumer_dce(sync: &Arc<BenchSync>, index: usize) -> ConsumerTally {
    let cell = sync.slots.slot(index);
    let mut tally = ConsumerTally::default();
    loop {
        let mut guard = sync.lock.lock();
        let shared = Arc::clone(sync);
        let report = sync.cv.wait_dce(&mut guard, move |_| {
            shared.slots.slot(index).load(Ordering::Acquire) != 0
                || shared.stop_consumers.load(Ordering::Acquire)
        });
        tally.futile_wakeups += u64::from(report.futile_wakeups);
        if cell.load(Ordering::Acquire) == 0 {
            return tally;
        }
        cell.store(0, Ordering::Release);
        tally.processed += 1;
    }
}

/// Runs one timed run with fresh state.
pub fn run_once(config: &BenchConfig, run: usize) -> Result<RunRecord, RunError> {
    let sync = Arc::new(BenchSync::new(config.consumers, config.pad_bytes));
    let stop_producer = AtomicBool::new(false);
    let start = Barrier::new(2);
    let mut workload = Workload::new(
        config.rng_seed.wrapping_add(run as u64),
        config.consumers,
        config.max_work_iters,
    );
    let mode = config.mode;
    let run_error = |e: std::io::Error| RunError {
        run,
        message: format!("failed to spawn thread: {e}"),
    };

    thread::scope(|scope| {
        let mut consumers = Vec::with_capacity(config.consumers);
        for index in 0..config.consumers {
            let shared = Arc::clone(&sync);
            let spawned = thread::Builder::new()
                .name(format!("consumer-{index}"))
                .spawn_scoped(scope, move || match mode {
                    Mode::Legacy => run_consumer_legacy(&shared, index),
                    Mode::Dce => run_consumer_dce(&shared, index),
                });
            match spawned {
                Ok(handle) => consumers.push(handle),
                Err(e) => {
                    sync.stop_consumers(mode);
                    return Err(run_error(e));
                }
            }
        }

        let producer = thread::Builder::new()
            .name("producer".into())
            .spawn_scoped(scope, || {
                start.wait();
                let began = Instant::now();
                let produced = run_producer(&sync, mode, &stop_producer, &mut workload);
                (produced, began.elapsed())
            });
        let producer = match producer {
            Ok(handle) => handle,
            Err(e) => {
                sync.stop_consumers(mode);
                return Err(run_error(e));
            }
        };

        start.wait();
        thread::sleep(config.duration_per_run);
        stop_producer.store(true, Ordering::Relaxed);
        let (produced_items, elapsed) = producer.join().expect("producer panicked");
        sync.stop_consumers(mode);

        let mut consumed_items = 0;
        let mut futile_wakeups = 0;
        for handle in consumers {
            let tally = handle.join().expect("consumer panicked");
            consumed_items += tally.processed;
            futile_wakeups += tally.futile_wakeups;
        }
        let stats = sync.cv.stats();
        if mode == Mode::Dce {
            debug_assert_eq!(futile_wakeups, stats.futile_wakeups);
        }
        Ok(RunRecord {
            run,
            produced_items,
            consumed_items,
            futile_wakeups,
            signals_sent: stats.signals_sent,
            wall_time_s: elapsed.as_secs_f64(),
        })
    })
}

/// Runs `config.runs` independent runs. A failed run is recorded in
/// `errors` and the remaining runs still execute.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, ConfigError> {
    config.validate()?;
    let mut report = BenchReport::new(config.mode, config.consumers);
    for run in 0..config.runs {
        match run_once(config, run) {
            Ok(record) => report.push(record),
            Err(error) => report.errors.push(error),
        }
    }
    Ok(report)
}

/// Convenience for short runs in tests and docs.
pub fn quick_config(mode: Mode, consumers: usize, runs: usize, duration: Duration) -> BenchConfig {
    BenchConfig {
        runs,
        duration_per_run: duration,
        ..BenchConfig::new(mode, consumers)
    }
}
