#![allow(dead_code)]

pub mod queue;
pub mod rcv;

use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

/// Bound used by every liveness check.
pub const WATCHDOG: Duration = Duration::from_secs(10);

/// Runs `f` on its own thread and fails if it does not finish within
/// `limit`. A hung scenario leaks its threads; the test process exits anyway.
pub fn watchdog<R, F>(name: &str, limit: Duration, f: F) -> Result<R, String>
where
    R: Send + 'static,
    F: FnOnce() -> R + Send + 'static,
{
    let (tx, rx) = mpsc::channel();
    thread::Builder::new()
        .name(format!("watchdog:{name}"))
        .spawn(move || {
            let _ = tx.send(f());
        })
        .expect("spawn watchdog thread");
    rx.recv_timeout(limit)
        .map_err(|_| format!("{name}: did not finish within {limit:?}"))
}

/// Polls `cond` until it holds or `limit` elapses.
pub fn wait_until(limit: Duration, mut cond: impl FnMut() -> bool) -> bool {
    let deadline = Instant::now() + limit;
    while !cond() {
        if Instant::now() > deadline {
            return false;
        }
        thread::yield_now();
    }
    true
}

/// Every merge of the per-thread programs that preserves each program's
/// own order.
pub fn interleavings<E: Clone>(programs: &[Vec<E>]) -> Vec<Vec<E>> {
    fn go<E: Clone>(
        programs: &[Vec<E>],
        next: &mut [usize],
        current: &mut Vec<E>,
        out: &mut Vec<Vec<E>>,
    ) {
        let mut finished = true;
        for t in 0..programs.len() {
            if next[t] < programs[t].len() {
                finished = false;
                current.push(programs[t][next[t]].clone());
                next[t] += 1;
                go(programs, next, current, out);
                next[t] -= 1;
                current.pop();
            }
        }
        if finished {
            out.push(current.clone());
        }
    }
    let mut out = Vec::new();
    go(
        programs,
        &mut vec![0; programs.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

pub fn multinomial(lengths: &[usize]) -> usize {
    let fact = |n: usize| (1..=n).product::<usize>();
    fact(lengths.iter().sum()) / lengths.iter().map(|&n| fact(n)).product::<usize>()
}
