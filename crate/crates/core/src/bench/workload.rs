//! The producer's random choices: which slot to fill and how much local
//! work to do afterwards. Seeded, so a given seed always yields the same
//! sequence regardless of how threads interleave.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
pub struct Workload {
    rng: SmallRng,
    slots: usize,
    max_work_iters: u64,
}

/// One producer iteration's choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub slot: usize,
    pub work_iters: u64,
}

impl Workload {
    pub fn new(seed: u64, slots: usize, max_work_iters: u64) -> Self {
        assert!(slots > 0);
        Workload {
            rng: SmallRng::seed_from_u64(seed),
            slots,
            max_work_iters,
        }
    }

    pub fn next_step(&mut self) -> Step {
        let slot = self.rng.random_range(0..self.slots);
        let work_iters = if self.max_work_iters == 0 {
            0
        } else {
            self.rng.random_range(0..self.max_work_iters)
        };
        Step { slot, work_iters }
    }
}

/// Simulated local work: `iters` steps of a xorshift generator.
#[inline(never)]
pub fn local_work(iters: u64, seed: u64) -> u64 {
    let mut x = seed | 1;
    for _ in 0..iters {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
    }
    std::hint::black_box(x)
}
