//! Remote condition variables: delegating the guarded action as well.
//!
//! [`DceCondvar::wait_rcv`] registers a predicate together with the action
//! it guards. Whichever thread finds the predicate true while scanning the
//! wait list (a signaler, a broadcaster, or a waiter forwarding a wakeup)
//! runs the action on the waiter's behalf, still under the lock, and hands
//! the result back. The waiter never re-acquires the lock: when
//! `wait_rcv` returns, the action is done and the lock is not held.
//!
//! If the waiter needs to do more work under the lock afterwards, it has to
//! lock again explicitly.

use std::any::Any;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use parking_lot::MutexGuard;
use thiserror::Error;

use crate::condvar::{DceCondvar, NodeStatus, WaitMode, WaitNode, ACTION_DONE};

/// A delegated action panicked. The payload is the original panic value.
#[derive(Error)]
#[error("delegated action panicked: {}", panic_message(.0))]
pub struct ActionPanicked(pub Box<dyn Any + Send>);

impl std::fmt::Debug for ActionPanicked {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("ActionPanicked")
            .field(&panic_message(&self.0))
            .finish()
    }
}

impl ActionPanicked {
    /// The panic message, if the payload was a string.
    pub fn message(&self) -> &str {
        panic_message(&self.0)
    }
}

fn panic_message(payload: &Box<dyn Any + Send>) -> &str {
    if let Some(s) = payload.downcast_ref::<&'static str>() {
        s
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s
    } else {
        "<non-string panic payload>"
    }
}

impl<T> DceCondvar<T> {
    /// Waits for `predicate` and has `action` executed under the lock at a
    /// moment the predicate holds. Returns the action's result.
    ///
    /// Consumes the guard: the lock is released on return. If the predicate
    /// is already true, the caller runs the action itself before unlocking.
    /// Otherwise the action runs on whichever thread later finds the
    /// predicate true. A panic inside the action is caught on the executing
    /// thread and reported here as [`ActionPanicked`].
    ///
    /// The action must not block or call back into this condvar.
    pub fn wait_rcv<F, A, R>(
        &self,
        mut guard: MutexGuard<'_, T>,
        predicate: F,
        action: A,
    ) -> Result<R, ActionPanicked>
    where
        F: Fn(&T) -> bool + Send + Sync + 'static,
        A: FnOnce(&mut T) -> R + Send + 'static,
        R: Send + 'static,
    {
        self.bind(&guard);
        if predicate(&guard) {
            let result =
                std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| action(&mut guard)));
            drop(guard);
            return result.map_err(ActionPanicked);
        }

        let node = Arc::new(WaitNode::new(
            self.fresh_id(),
            WaitMode::Rcv,
            Some(Box::new(predicate)),
            Some(Box::new(move |state: &mut T| {
                Box::new(action(state)) as Box<dyn Any + Send>
            })),
        ));
        self.enqueue(Arc::clone(&node));
        let mutex = MutexGuard::mutex(&guard);
        drop(guard);

        loop {
            node.token.park();
            match node.status() {
                NodeStatus::ActionDone => break,
                // Spurious: the node is still registered.
                NodeStatus::Waiting => continue,
                // Woken without the action being run (broadcast_all): take
                // the lock and try to run it ourselves.
                NodeStatus::Signaled => {
                    let mut guard = mutex.lock();
                    if node.ready(&guard) {
                        let result = node.run_action(&mut guard);
                        drop(guard);
                        return unpack(result);
                    }
                    self.requeue_after_futile(&mut guard, &node);
                }
            }
        }

        let result = node
            .result
            .lock()
            .take()
            .expect("action result published before ACTION_DONE");
        unpack(result)
    }
}

fn unpack<R: 'static>(
    result: std::thread::Result<Box<dyn Any + Send>>,
) -> Result<R, ActionPanicked> {
    match result {
        Ok(value) => Ok(*value
            .downcast::<R>()
            .expect("delegated action result has the waiter's type")),
        Err(payload) => Err(ActionPanicked(payload)),
    }
}

/// Executes a delegated action for `node`, whose predicate was just found
/// true by the calling scan. The caller holds the lock (through `guard`).
/// The result is stored before the status flips to done, so the waiter
/// observes it once it sees `ACTION_DONE`.
pub(crate) fn execute_delegated<T>(node: &WaitNode<T>, guard: &mut MutexGuard<'_, T>) {
    let result = node.run_action(guard);
    *node.result.lock() = Some(result);
    node.status.store(ACTION_DONE, Ordering::Release);
}
