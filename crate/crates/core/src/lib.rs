//! Condition variables with delegated condition evaluation.
//!
//! A waiter hands its condition to the condition variable as a predicate
//! over the lock-protected state. Signalers evaluate those predicates while
//! holding the lock and wake only the waiters whose condition holds, so
//! waiters never wake up just to find out they have to sleep again.
//!
//! ```
//! use std::sync::Arc;
//! use std::thread;
//! use delegated_condvar::{DceCondvar, Mutex};
//!
//! let state = Arc::new(Mutex::new(0u32));
//! let cv = Arc::new(DceCondvar::new());
//!
//! let waiter = {
//!     let (state, cv) = (Arc::clone(&state), Arc::clone(&cv));
//!     thread::spawn(move || {
//!         let mut flag = state.lock();
//!         cv.wait_dce(&mut flag, |flag| *flag == 1);
//!         assert_eq!(*flag, 1);
//!     })
//! };
//!
//! let mut flag = state.lock();
//! *flag = 1;
//! cv.signal_dce(&mut flag);
//! drop(flag);
//! waiter.join().unwrap();
//! ```
//!
//! The modules:
//!
//! - [`parking`]: the per-waiter block/unblock token.
//! - [`condvar`]: [`DceCondvar`] with `wait_dce`, `wait_legacy`,
//!   `signal_dce`, `broadcast_dce` and `broadcast_all`.
//! - [`rcv`]: `wait_rcv`, which also delegates the action guarded by the
//!   predicate.
//! - [`bounded_queue`]: a bounded FIFO built on one lock and one condvar.
//! - [`bench`]: the producer/consumer benchmark behind the `bench` binary.
//!
//! The guide under `book/` explains the design in more depth; its code
//! samples are compiled and run as doctests of this crate.

pub mod bench;
pub mod bounded_queue;
pub mod condvar;
pub mod parking;
pub mod rcv;

pub use bounded_queue::{BoundedQueue, Full};
pub use condvar::{CondvarStats, DceCondvar, NodeId, SignalOutcome, WaitMode, WaitReport};
pub use parking::{ParkToken, TokenState, Wakeup};
pub use parking_lot::{Mutex, MutexGuard};
pub use rcv::ActionPanicked;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/waiting.md")]
    mod waiting {}
    #[doc = include_str!("../../../book/src/signaling.md")]
    mod signaling {}
    #[doc = include_str!("../../../book/src/remote-actions.md")]
    mod remote_actions {}
    #[doc = include_str!("../../../book/src/bounded-queue.md")]
    mod bounded_queue {}
    #[doc = include_str!("../../../book/src/parking.md")]
    mod parking {}
    #[doc = include_str!("../../../book/src/benchmark.md")]
    mod benchmark {}
}
