//! Conservation and ordering checks for `BoundedQueue` over recorded
//! histories.

use std::collections::HashMap;
use std::sync::Arc;
use std::thread;

use delegated_condvar::BoundedQueue;

#[derive(Debug, Clone, Copy)]
pub struct QueueRun {
    pub producers: usize,
    pub consumers: usize,
    pub items_per_producer: u64,
    pub capacity: usize,
}

const STRIDE: u64 = 1 << 32;

/// Producer `p` enqueues `p * STRIDE + seq` for increasing `seq`. Consumers
/// split the total evenly and record what they dequeue, in order.
pub fn run_queue(run: QueueRun) -> Result<String, String> {
    let total = run.producers as u64 * run.items_per_producer;
    if !total.is_multiple_of(run.consumers as u64) {
        return Err("items must split evenly across consumers".into());
    }
    let per_consumer = total / run.consumers as u64;
    let q = Arc::new(BoundedQueue::new(run.capacity));

    let producers: Vec<_> = (0..run.producers as u64)
        .map(|p| {
            let q = Arc::clone(&q);
            thread::spawn(move || {
                for seq in 0..run.items_per_producer {
                    q.enq(p * STRIDE + seq);
                    assert!(q.len() <= run.capacity);
                }
            })
        })
        .collect();
    let consumers: Vec<_> = (0..run.consumers)
        .map(|_| {
            let q = Arc::clone(&q);
            thread::spawn(move || (0..per_consumer).map(|_| q.deq()).collect::<Vec<u64>>())
        })
        .collect();

    for p in producers {
        p.join().map_err(|_| "producer panicked".to_string())?;
    }
    let histories: Vec<Vec<u64>> = consumers
        .into_iter()
        .map(|c| c.join().map_err(|_| "consumer panicked".to_string()))
        .collect::<Result<_, _>>()?;
    check_histories(&histories, run.producers, run.items_per_producer)?;
    if !q.is_empty() {
        return Err("queue not drained".into());
    }
    Ok(format!(
        "capacity {}: {total} items conserved, futile wakeups {}",
        run.capacity,
        q.condvar().stats().futile_wakeups
    ))
}

/// Multiset equality with what was enqueued, and each producer's values
/// appear in increasing order within every consumer's history.
pub fn check_histories(
    histories: &[Vec<u64>],
    producers: usize,
    per_producer: u64,
) -> Result<(), String> {
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for history in histories {
        let mut last: HashMap<u64, u64> = HashMap::new();
        for &value in history {
            *seen.entry(value).or_default() += 1;
            let (p, seq) = (value / STRIDE, value % STRIDE);
            if let Some(&prev) = last.get(&p) {
                if seq <= prev {
                    return Err(format!("producer {p}: {seq} dequeued after {prev}"));
                }
            }
            last.insert(p, seq);
        }
    }
    let expected = producers as u64 * per_producer;
    if seen.len() as u64 != expected {
        return Err(format!(
            "{} distinct values, expected {expected}",
            seen.len()
        ));
    }
    for p in 0..producers as u64 {
        for seq in 0..per_producer {
            match seen.get(&(p * STRIDE + seq)) {
                Some(1) => {}
                Some(n) => return Err(format!("value ({p}, {seq}) dequeued {n} times")),
                None => return Err(format!("value ({p}, {seq}) lost")),
            }
        }
    }
    Ok(())
}
