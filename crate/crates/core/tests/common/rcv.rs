//! Delegated-action workloads: stress for exactly-once and lock discipline,
//! and small instances checked against a brute-force sequential oracle.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;

use delegated_condvar::{DceCondvar, Mutex};

#[derive(Debug, Default)]
struct State {
    tokens: Vec<u64>,
    completions: u64,
    executions: u64,
    unlocked_executions: u64,
    stop: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RcvStressOutcome {
    pub calls: u64,
    pub executions: u64,
    pub unlocked_executions: u64,
    pub delegated: u64,
    pub futile_wakeups: u64,
}

/// Token passing where every step is a delegated action. After `wait_rcv`
/// returns, the caller locks again to notify the kind it just enabled.
pub fn run_rcv_stress(threads: usize, target: u64) -> RcvStressOutcome {
    assert!(threads >= 2);
    let kinds = (threads / 2).max(2);
    let lock = Arc::new(Mutex::new(State {
        tokens: (0..kinds).map(|k| u64::from(k % 2 == 0)).collect(),
        ..State::default()
    }));
    let cv = Arc::new(DceCondvar::<State>::new());
    let calls = Arc::new(AtomicU64::new(0));
    let delegated = Arc::new(AtomicU64::new(0));

    let workers: Vec<_> = (0..threads)
        .map(|t| {
            let kind = t % kinds;
            let (lock, cv) = (Arc::clone(&lock), Arc::clone(&cv));
            let (calls, delegated) = (Arc::clone(&calls), Arc::clone(&delegated));
            thread::spawn(move || {
                let me = thread::current().id();
                let mut passes = 0u64;
                loop {
                    let guard = lock.lock();
                    if guard.stop {
                        return;
                    }
                    let observer = Arc::clone(&lock);
                    calls.fetch_add(1, Ordering::Relaxed);
                    let (progressed, executor) = cv
                        .wait_rcv(
                            guard,
                            move |s: &State| s.tokens[kind] > 0 || s.stop,
                            move |s: &mut State| {
                                s.executions += 1;
                                if !observer.is_locked() {
                                    s.unlocked_executions += 1;
                                }
                                if s.tokens[kind] == 0 {
                                    return (false, thread::current().id());
                                }
                                s.tokens[kind] -= 1;
                                s.tokens[(kind + 1) % kinds] += 1;
                                s.completions += 1;
                                if s.completions >= target {
                                    s.stop = true;
                                }
                                (true, thread::current().id())
                            },
                        )
                        .expect("action does not panic");
                    if executor != me {
                        delegated.fetch_add(1, Ordering::Relaxed);
                    }
                    // The remainder of the critical section needs the lock again.
                    let mut guard = lock.lock();
                    passes += 1;
                    if guard.stop {
                        cv.broadcast_dce(&mut guard);
                        return;
                    }
                    if progressed {
                        if passes.is_multiple_of(16) {
                            cv.broadcast_all(&mut guard);
                        } else {
                            cv.signal_dce(&mut guard);
                        }
                    }
                }
            })
        })
        .collect();
    for worker in workers {
        worker.join().expect("rcv worker panicked");
    }
    let state = lock.lock();
    RcvStressOutcome {
        calls: calls.load(Ordering::Relaxed),
        executions: state.executions,
        unlocked_executions: state.unlocked_executions,
        delegated: delegated.load(Ordering::Relaxed),
        futile_wakeups: cv.stats().futile_wakeups,
    }
}

/// A waiter whose action was delegated returns without holding the lock:
/// another thread can take it while the waiter is still alive.
pub fn check_lock_released() -> Result<(), String> {
    let lock = Arc::new(Mutex::new(false));
    let cv = Arc::new(DceCondvar::<bool>::new());
    let (tx, rx) = mpsc::channel();
    let (resume_tx, resume_rx) = mpsc::channel::<()>();
    let waiter = {
        let (lock, cv) = (Arc::clone(&lock), Arc::clone(&cv));
        thread::spawn(move || {
            let guard = lock.lock();
            let out = cv.wait_rcv(guard, |go| *go, |_| 5).unwrap();
            tx.send(out).unwrap();
            resume_rx.recv().unwrap();
        })
    };
    if !super::wait_until(super::WATCHDOG, || cv.waiting() == 1) {
        return Err("waiter never registered".into());
    }
    {
        let mut guard = lock.lock();
        *guard = true;
        cv.signal_dce(&mut guard);
    }
    let out = rx.recv().map_err(|e| e.to_string())?;
    let free = lock.try_lock().is_some();
    resume_tx.send(()).map_err(|e| e.to_string())?;
    waiter.join().map_err(|_| "waiter panicked".to_string())?;
    match (out, free) {
        (5, true) => Ok(()),
        (5, false) => Err("lock still held after wait_rcv returned".into()),
        (other, _) => Err(format!("action returned {other}")),
    }
}

// ---------------------------------------------------------------------------
// Atomicity equivalence on small instances.

/// Waiter `i` waits for `x >= thresholds[i]` and then applies
/// `x = x * 3 + i + 1`, logging `i`. The operation does not commute, so the
/// final state pins down the execution order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Small {
    pub x: u64,
    pub log: Vec<usize>,
}

fn apply(state: &mut Small, i: usize) -> u64 {
    let before = state.x;
    state.x = state.x * 3 + i as u64 + 1;
    state.log.push(i);
    before
}

/// All sequential executions in which each action runs at a moment its
/// threshold holds, as (final state, per-waiter results).
pub fn sequential_outcomes(initial: u64, thresholds: &[u64]) -> Vec<(Small, Vec<u64>)> {
    fn go(
        state: Small,
        results: Vec<Option<u64>>,
        thresholds: &[u64],
        out: &mut Vec<(Small, Vec<u64>)>,
    ) {
        if results.iter().all(Option::is_some) {
            out.push((state, results.into_iter().map(Option::unwrap).collect()));
            return;
        }
        for i in 0..thresholds.len() {
            if results[i].is_none() && state.x >= thresholds[i] {
                let mut next = state.clone();
                let mut results = results.clone();
                results[i] = Some(apply(&mut next, i));
                go(next, results, thresholds, out);
            }
        }
    }
    let mut out = Vec::new();
    go(
        Small {
            x: initial,
            log: Vec::new(),
        },
        vec![None; thresholds.len()],
        thresholds,
        &mut out,
    );
    out
}

/// Runs the waiters concurrently while a driver keeps broadcasting, and
/// returns the observed (final state, results).
pub fn run_small(initial: u64, thresholds: &[u64]) -> (Small, Vec<u64>) {
    let lock = Arc::new(Mutex::new(Small {
        x: initial,
        log: Vec::new(),
    }));
    let cv = Arc::new(DceCondvar::<Small>::new());
    let waiters: Vec<_> = thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let (lock, cv) = (Arc::clone(&lock), Arc::clone(&cv));
            thread::spawn(move || {
                let guard = lock.lock();
                cv.wait_rcv(guard, move |s| s.x >= threshold, move |s| apply(s, i))
                    .expect("action does not panic")
            })
        })
        .collect();
    while lock.lock().log.len() < thresholds.len() {
        let mut guard = lock.lock();
        cv.broadcast_dce(&mut guard);
        drop(guard);
        thread::yield_now();
    }
    let results = waiters.into_iter().map(|w| w.join().unwrap()).collect();
    let state = lock.lock().clone();
    (state, results)
}

/// Checks `rounds` concurrent executions of each instance against the
/// sequential oracle.
pub fn check_atomicity(rounds: usize) -> Result<String, String> {
    let instances: [(u64, &[u64]); 4] = [
        (0, &[0, 1, 2]),
        (1, &[5, 1, 1]),
        (0, &[4, 0, 2]),
        (2, &[2, 2, 2]),
    ];
    let mut checked = 0;
    for (initial, thresholds) in instances {
        let allowed = sequential_outcomes(initial, thresholds);
        if allowed.is_empty() {
            return Err(format!("instance {thresholds:?} has no valid execution"));
        }
        for _ in 0..rounds {
            let observed = run_small(initial, thresholds);
            if !allowed.contains(&observed) {
                return Err(format!(
                    "instance ({initial}, {thresholds:?}): {observed:?} matches no sequential execution"
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} concurrent executions matched the sequential oracle"
    ))
}
