//! One-shot block/unblock channel used by every waiter node.
//!
//! A [`ParkToken`] belongs to the thread that created it. That thread may
//! [`park`](ParkToken::park) on it; any thread may [`unpark`](ParkToken::unpark)
//! it. Notifications coalesce: a token holds at most one pending
//! notification, so two `unpark`s followed by one `park` leave the token
//! empty.
//!
//! Blocking is delegated to [`std::thread::park`]. Its own spurious returns
//! are absorbed here; the only spurious returns that escape `park` are the
//! ones injected through [`ParkToken::inject_spurious`].

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU8, Ordering};
use std::thread::{self, Thread};

const EMPTY: u8 = 0;
const NOTIFIED: u8 = 1;
const PARKED: u8 = 2;

/// Observable state of a [`ParkToken`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenState {
    /// No pending notification and nobody parked.
    Empty,
    /// One notification is pending; the next `park` returns immediately.
    Notified,
    /// The owner is blocked in `park`.
    Parked,
}

impl TokenState {
    fn from_raw(raw: u8) -> Self {
        match raw {
            EMPTY => TokenState::Empty,
            NOTIFIED => TokenState::Notified,
            PARKED => TokenState::Parked,
            _ => unreachable!("invalid park token state {raw}"),
        }
    }
}

/// Why [`ParkToken::park`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wakeup {
    /// A notification was consumed.
    Notified,
    /// The return was injected by [`ParkToken::inject_spurious`].
    Spurious,
}

/// Per-thread binary-semaphore style parking channel.
pub struct ParkToken {
    state: AtomicU8,
    spurious: AtomicBool,
    parking: AtomicBool,
    owner: Thread,
}

impl ParkToken {
    /// Creates a token owned by the calling thread.
    pub fn new() -> Self {
        ParkToken {
            state: AtomicU8::new(EMPTY),
            spurious: AtomicBool::new(false),
            parking: AtomicBool::new(false),
            owner: thread::current(),
        }
    }

    /// Blocks the owning thread until a notification is available, then
    /// consumes it.
    ///
    /// Must only be called by the thread that created the token, and never
    /// while holding a lock that the unparking thread needs.
    pub fn park(&self) -> Wakeup {
        debug_assert_eq!(
            thread::current().id(),
            self.owner.id(),
            "ParkToken::park called from a thread that does not own the token"
        );
        let reentered = self.parking.swap(true, Ordering::Relaxed);
        debug_assert!(!reentered, "two threads parked on one ParkToken");

        let wakeup = self.park_inner();
        self.parking.store(false, Ordering::Relaxed);
        wakeup
    }

    fn park_inner(&self) -> Wakeup {
        // Pending notification: consume without blocking.
        if self
            .state
            .compare_exchange(NOTIFIED, EMPTY, Ordering::Acquire, Ordering::Acquire)
            .is_ok()
        {
            return Wakeup::Notified;
        }
        if self.take_spurious() {
            return Wakeup::Spurious;
        }
        if let Err(current) =
            self.state
                .compare_exchange(EMPTY, PARKED, Ordering::Acquire, Ordering::Acquire)
        {
            // An unpark slipped in between the two exchanges.
            debug_assert_eq!(current, NOTIFIED);
            self.state.store(EMPTY, Ordering::Release);
            return Wakeup::Notified;
        }
        loop {
            thread::park();
            if self
                .state
                .compare_exchange(NOTIFIED, EMPTY, Ordering::Acquire, Ordering::Acquire)
                .is_ok()
            {
                return Wakeup::Notified;
            }
            if self.take_spurious()
                && self
                    .state
                    .compare_exchange(PARKED, EMPTY, Ordering::Acquire, Ordering::Acquire)
                    .is_ok()
            {
                return Wakeup::Spurious;
            }
        }
    }

    fn take_spurious(&self) -> bool {
        self.spurious.swap(false, Ordering::AcqRel)
    }

    /// Releases the parked owner, or stores one pending notification if
    /// nobody is parked. Repeated calls before the owner parks coalesce.
    pub fn unpark(&self) {
        if self.state.swap(NOTIFIED, Ordering::Release) == PARKED {
            self.owner.unpark();
        }
    }

    /// Makes the next (or current) `park` return [`Wakeup::Spurious`]
    /// without consuming a notification.
    ///
    /// Test hook: upper layers must tolerate spurious returns, and this is
    /// how the test suites force them.
    pub fn inject_spurious(&self) {
        self.spurious.store(true, Ordering::Release);
        self.owner.unpark();
    }

    pub fn state(&self) -> TokenState {
        TokenState::from_raw(self.state.load(Ordering::Acquire))
    }
}

impl Default for ParkToken {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for ParkToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParkToken")
            .field("state", &self.state())
            .field("owner", &self.owner.id())
            .finish()
    }
}
