//! Condition variable with delegated condition evaluation.
//!
//! Every waiter registers the predicate it is waiting for. Signalers walk
//! the wait list in arrival order, evaluate those predicates against the
//! lock-protected state, and unpark only waiters whose predicate holds.
//! A waiter blocked in [`DceCondvar::wait_dce`] therefore returns only
//! when its predicate is true, and threads whose condition is still false
//! are never woken just to go back to sleep.
//!
//! The condvar is bound to a single [`Mutex<T>`]. All signaling calls take
//! a guard of that mutex as proof that the lock is held; predicates see
//! the protected `T` through that guard.
//!
//! The wait list lives behind a short internal guard that is never held
//! while a thread blocks.

use std::any::Any;
use std::collections::VecDeque;
use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicU8, AtomicUsize, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, MutexGuard};
use serde::{Deserialize, Serialize};

use crate::parking::{ParkToken, Wakeup};

pub(crate) type Predicate<T> = Box<dyn Fn(&T) -> bool + Send + Sync>;
pub(crate) type Action<T> = Box<dyn FnOnce(&mut T) -> Box<dyn Any + Send> + Send>;
pub(crate) type ActionResult = std::thread::Result<Box<dyn Any + Send>>;

pub(crate) const WAITING: u8 = 0;
pub(crate) const SIGNALED: u8 = 1;
pub(crate) const ACTION_DONE: u8 = 2;

/// Identity of one registered wait, as reported by [`SignalOutcome::Woke`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u64);

/// How a waiter registered itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitMode {
    /// `wait_dce`: predicate evaluated by signalers, holds on return.
    Dce,
    /// `wait_legacy`: always eligible, returns on any wakeup.
    Legacy,
    /// `wait_rcv`: predicate plus a delegated action.
    Rcv,
}

/// Lifecycle of a [`WaitNode`]. Transitions only move forward within one
/// registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Waiting,
    Signaled,
    ActionDone,
}

pub(crate) struct WaitNode<T> {
    pub(crate) id: NodeId,
    pub(crate) mode: WaitMode,
    predicate: Option<Predicate<T>>,
    pub(crate) action: Mutex<Option<Action<T>>>,
    pub(crate) result: Mutex<Option<ActionResult>>,
    pub(crate) status: AtomicU8,
    pub(crate) token: ParkToken,
}

impl<T> WaitNode<T> {
    pub(crate) fn new(
        id: NodeId,
        mode: WaitMode,
        predicate: Option<Predicate<T>>,
        action: Option<Action<T>>,
    ) -> Self {
        WaitNode {
            id,
            mode,
            predicate,
            action: Mutex::new(action),
            result: Mutex::new(None),
            status: AtomicU8::new(WAITING),
            token: ParkToken::new(),
        }
    }

    /// Legacy nodes carry an implicit always-true predicate.
    pub(crate) fn ready(&self, state: &T) -> bool {
        match &self.predicate {
            Some(predicate) => predicate(state),
            None => true,
        }
    }

    pub(crate) fn status(&self) -> NodeStatus {
        match self.status.load(Ordering::Acquire) {
            WAITING => NodeStatus::Waiting,
            SIGNALED => NodeStatus::Signaled,
            ACTION_DONE => NodeStatus::ActionDone,
            raw => unreachable!("invalid node status {raw}"),
        }
    }

    /// Runs the delegated action under the caller's lock and publishes the
    /// result. A panicking action is captured, not propagated.
    pub(crate) fn run_action(&self, state: &mut T) -> ActionResult {
        let action = self
            .action
            .lock()
            .take()
            .expect("delegated action already executed");
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| action(state)))
    }
}

/// Counters describing what a [`DceCondvar`] has done so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondvarStats {
    /// Wakeups delivered to waiters (by signal, broadcast, or forwarding).
    pub signals_sent: u64,
    /// Predicates evaluated by scanning threads. Waiter-side self checks
    /// are not counted.
    pub predicates_evaluated: u64,
    /// Wakeups after which the woken waiter found its predicate false and
    /// blocked again.
    pub futile_wakeups: u64,
    /// Calls to `broadcast_dce` and `broadcast_all`.
    pub broadcasts: u64,
}

/// Result of [`DceCondvar::signal_dce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalOutcome {
    /// The earliest waiter whose predicate held was woken.
    Woke(NodeId),
    /// Waiters exist but none of their predicates held; nobody was woken.
    NoneReady,
    /// The wait list was empty.
    Empty,
}

/// What happened to one call of `wait_dce`/`wait_legacy`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WaitReport {
    /// Whether the caller blocked at all.
    pub blocked: bool,
    /// Wakeups this waiter received while its predicate was false.
    pub futile_wakeups: u32,
    /// Spurious returns from parking absorbed by this wait.
    pub spurious_wakeups: u32,
}

pub(crate) struct Shared<T> {
    pub(crate) waiters: VecDeque<Arc<WaitNode<T>>>,
    pub(crate) stats: CondvarStats,
}

/// A condition variable whose signalers evaluate waiter predicates.
pub struct DceCondvar<T> {
    pub(crate) shared: Mutex<Shared<T>>,
    next_id: AtomicU64,
    bound: AtomicUsize,
}

impl<T> Default for DceCondvar<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> fmt::Debug for DceCondvar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shared = self.shared.lock();
        f.debug_struct("DceCondvar")
            .field("waiting", &shared.waiters.len())
            .field("stats", &shared.stats)
            .finish()
    }
}

impl<T> DceCondvar<T> {
    pub const fn new() -> Self {
        DceCondvar {
            shared: Mutex::new(Shared {
                waiters: VecDeque::new(),
                stats: CondvarStats {
                    signals_sent: 0,
                    predicates_evaluated: 0,
                    futile_wakeups: 0,
                    broadcasts: 0,
                },
            }),
            next_id: AtomicU64::new(0),
            bound: AtomicUsize::new(0),
        }
    }

    /// Blocks until `predicate` holds for the protected state.
    ///
    /// The caller holds `guard` on entry and on return, and `predicate` is
    /// true at the moment of return. If it is already true on entry the
    /// call returns immediately without registering.
    ///
    /// The predicate may run on any thread that signals this condvar, so it
    /// must only read the protected state: no blocking, no locking, no side
    /// effects.
    pub fn wait_dce<F>(&self, guard: &mut MutexGuard<'_, T>, predicate: F) -> WaitReport
    where
        F: Fn(&T) -> bool + Send + Sync + 'static,
    {
        self.bind(guard);
        let mut report = WaitReport::default();
        if predicate(guard) {
            return report;
        }
        report.blocked = true;
        let node = Arc::new(WaitNode::new(
            self.fresh_id(),
            WaitMode::Dce,
            Some(Box::new(predicate)),
            None,
        ));
        self.enqueue(Arc::clone(&node));

        loop {
            let wakeup = MutexGuard::unlocked(guard, || node.token.park());
            if wakeup == Wakeup::Spurious {
                report.spurious_wakeups += 1;
            }
            match node.status() {
                NodeStatus::Signaled => {
                    if node.ready(guard) {
                        return report;
                    }
                    // The state changed between the signal and re-locking:
                    // pass the consumed wakeup on, then queue up again.
                    report.futile_wakeups += 1;
                    self.requeue_after_futile(guard, &node);
                }
                NodeStatus::Waiting => {
                    if node.ready(guard) && self.withdraw(&node) {
                        return report;
                    }
                }
                NodeStatus::ActionDone => unreachable!("DCE node carries no action"),
            }
        }
    }

    /// Legacy wait: blocks until the next wakeup of any kind and returns
    /// with the lock held. No condition is guaranteed; callers re-check in
    /// a loop.
    ///
    /// Signalers treat a legacy waiter as always eligible.
    pub fn wait_legacy(&self, guard: &mut MutexGuard<'_, T>) -> WaitReport {
        self.bind(guard);
        let node = Arc::new(WaitNode::new(self.fresh_id(), WaitMode::Legacy, None, None));
        self.enqueue(Arc::clone(&node));
        let wakeup = MutexGuard::unlocked(guard, || node.token.park());
        if node.status() == NodeStatus::Waiting {
            // Spurious return: still registered.
            self.withdraw(&node);
        }
        WaitReport {
            blocked: true,
            futile_wakeups: 0,
            spurious_wakeups: u32::from(wakeup == Wakeup::Spurious),
        }
    }

    /// Wakes the earliest waiter whose predicate holds.
    ///
    /// Predicates are evaluated in arrival order and the scan stops at the
    /// first true one. Waiters whose predicates are false are left
    /// untouched. Must be called with the lock held; `guard` is the proof.
    pub fn signal_dce(&self, guard: &mut MutexGuard<'_, T>) -> SignalOutcome {
        self.check_bound(guard);
        let mut shared = self.shared.lock();
        let woken = self.scan_first(&mut shared, guard);
        drop(shared);
        match woken {
            Scan::Woke(node) => {
                let id = node.id;
                node.token.unpark();
                SignalOutcome::Woke(id)
            }
            Scan::NoneReady => SignalOutcome::NoneReady,
            Scan::Empty => SignalOutcome::Empty,
        }
    }

    /// Wakes every waiter whose predicate holds and returns how many were
    /// woken. Delegated actions run in arrival order during the scan, so a
    /// later predicate sees the effects of earlier actions.
    pub fn broadcast_dce(&self, guard: &mut MutexGuard<'_, T>) -> usize {
        self.check_bound(guard);
        let mut shared = self.shared.lock();
        shared.stats.broadcasts += 1;
        let mut woken = Vec::new();
        let mut index = 0;
        while index < shared.waiters.len() {
            shared.stats.predicates_evaluated += 1;
            if shared.waiters[index].ready(guard) {
                let node = shared.waiters.remove(index).expect("index in bounds");
                Self::deliver(&mut shared.stats, &node, guard);
                woken.push(node);
            } else {
                index += 1;
            }
        }
        drop(shared);
        for node in &woken {
            node.token.unpark();
        }
        woken.len()
    }

    /// Wakes every waiter without evaluating any predicate.
    ///
    /// Meant for barrier-like uses where every waiter is expected to
    /// proceed. DCE waiters whose predicate turns out false re-block and
    /// are counted as futile wakeups.
    pub fn broadcast_all(&self, guard: &mut MutexGuard<'_, T>) -> usize {
        self.check_bound(guard);
        let mut shared = self.shared.lock();
        shared.stats.broadcasts += 1;
        let woken: Vec<_> = shared.waiters.drain(..).collect();
        for node in &woken {
            node.status.store(SIGNALED, Ordering::Release);
        }
        shared.stats.signals_sent += woken.len() as u64;
        drop(shared);
        for node in &woken {
            node.token.unpark();
        }
        woken.len()
    }

    pub fn stats(&self) -> CondvarStats {
        self.shared.lock().stats
    }

    /// Number of registered waiters.
    pub fn waiting(&self) -> usize {
        self.shared.lock().waiters.len()
    }

    /// Ids of the registered waiters, earliest first.
    pub fn waiter_ids(&self) -> Vec<NodeId> {
        self.shared
            .lock()
            .waiters
            .iter()
            .map(|node| node.id)
            .collect()
    }

    /// Forces a spurious park return on every registered waiter. Test hook.
    #[doc(hidden)]
    pub fn inject_spurious_wakeups(&self) -> usize {
        let shared = self.shared.lock();
        for node in &shared.waiters {
            node.token.inject_spurious();
        }
        shared.waiters.len()
    }

    pub(crate) fn fresh_id(&self) -> NodeId {
        NodeId(self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    pub(crate) fn enqueue(&self, node: Arc<WaitNode<T>>) {
        self.shared.lock().waiters.push_back(node);
    }

    /// Removes a still-waiting node on the waiter's own initiative. Returns
    /// false if a signaler claimed it first.
    pub(crate) fn withdraw(&self, node: &Arc<WaitNode<T>>) -> bool {
        let mut shared = self.shared.lock();
        if node.status() != NodeStatus::Waiting {
            return false;
        }
        match shared.waiters.iter().position(|n| Arc::ptr_eq(n, node)) {
            Some(index) => {
                shared.waiters.remove(index);
                true
            }
            None => false,
        }
    }

    /// Futile wakeup path: count it, forward the wakeup to the first other
    /// eligible waiter, and re-register at the tail.
    pub(crate) fn requeue_after_futile(
        &self,
        guard: &mut MutexGuard<'_, T>,
        node: &Arc<WaitNode<T>>,
    ) {
        let mut shared = self.shared.lock();
        shared.stats.futile_wakeups += 1;
        let forwarded = match self.scan_first(&mut shared, guard) {
            Scan::Woke(next) => Some(next),
            Scan::NoneReady | Scan::Empty => None,
        };
        node.status.store(WAITING, Ordering::Release);
        shared.waiters.push_back(Arc::clone(node));
        drop(shared);
        if let Some(next) = forwarded {
            next.token.unpark();
        }
    }

    /// The `signal_dce` scan. The chosen node is removed and marked, but
    /// unparking is left to the caller so it happens outside the list guard.
    fn scan_first(&self, shared: &mut Shared<T>, guard: &mut MutexGuard<'_, T>) -> Scan<T> {
        if shared.waiters.is_empty() {
            return Scan::Empty;
        }
        let mut found = None;
        for (index, node) in shared.waiters.iter().enumerate() {
            shared.stats.predicates_evaluated += 1;
            if node.ready(guard) {
                found = Some(index);
                break;
            }
        }
        match found {
            Some(index) => {
                let node = shared.waiters.remove(index).expect("index in bounds");
                Self::deliver(&mut shared.stats, &node, guard);
                Scan::Woke(node)
            }
            None => Scan::NoneReady,
        }
    }

    /// Marks a node whose predicate just held as woken. For delegated
    /// waits this is where the action runs.
    fn deliver(stats: &mut CondvarStats, node: &WaitNode<T>, guard: &mut MutexGuard<'_, T>) {
        stats.signals_sent += 1;
        if node.mode == WaitMode::Rcv {
            crate::rcv::execute_delegated(node, guard);
        } else {
            node.status.store(SIGNALED, Ordering::Release);
        }
    }

    /// Binds the condvar to the mutex of the first waiter; later calls must
    /// use the same mutex.
    pub(crate) fn bind(&self, guard: &MutexGuard<'_, T>) {
        let addr = MutexGuard::mutex(guard) as *const Mutex<T> as usize;
        if let Err(bound) =
            self.bound
                .compare_exchange(0, addr, Ordering::Relaxed, Ordering::Relaxed)
        {
            debug_assert_eq!(bound, addr, "DceCondvar used with more than one mutex");
        }
    }

    fn check_bound(&self, guard: &MutexGuard<'_, T>) {
        if cfg!(debug_assertions) {
            let addr = MutexGuard::mutex(guard) as *const Mutex<T> as usize;
            let bound = self.bound.load(Ordering::Relaxed);
            assert!(
                bound == 0 || bound == addr,
                "DceCondvar signaled while holding a different mutex than its waiters use"
            );
        }
    }
}

enum Scan<T> {
    Woke(Arc<WaitNode<T>>),
    NoneReady,
    Empty,
}
