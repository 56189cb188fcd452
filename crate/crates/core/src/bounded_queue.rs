//! Bounded FIFO queue synchronized with one lock and one condition
//! variable.
//!
//! The classic design needs two condvars ("not full" for producers, "not
//! empty" for consumers) or one condvar plus broadcasts. Here producers and
//! consumers share a single [`DceCondvar`]; each waits on its own proceed
//! condition, and a single `signal_dce` after every mutation wakes a peer
//! that can actually make progress.

use std::collections::VecDeque;
use std::fmt;

use parking_lot::Mutex;
use thiserror::Error;

use crate::condvar::DceCondvar;

/// Returned by [`BoundedQueue::try_enq`] when the queue is full. Carries the
/// rejected value back to the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("queue is full")]
pub struct Full<V>(pub V);

pub struct BoundedQueue<V> {
    capacity: usize,
    items: Mutex<VecDeque<V>>,
    cv: DceCondvar<VecDeque<V>>,
}

impl<V: Send + 'static> BoundedQueue<V> {
    /// # Panics
    ///
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "bounded queue capacity must be positive");
        BoundedQueue {
            capacity,
            items: Mutex::new(VecDeque::with_capacity(capacity)),
            cv: DceCondvar::new(),
        }
    }

    /// Appends `value`, blocking while the queue is full.
    pub fn enq(&self, value: V) {
        let capacity = self.capacity;
        let mut items = self.items.lock();
        self.cv.wait_dce(&mut items, move |q| q.len() < capacity);
        items.push_back(value);
        debug_assert!(items.len() <= capacity);
        self.cv.signal_dce(&mut items);
    }

    /// Removes the head, blocking while the queue is empty.
    pub fn deq(&self) -> V {
        let mut items = self.items.lock();
        self.cv.wait_dce(&mut items, |q| !q.is_empty());
        let value = items.pop_front().expect("predicate guarantees an item");
        self.cv.signal_dce(&mut items);
        value
    }

    pub fn try_enq(&self, value: V) -> Result<(), Full<V>> {
        let mut items = self.items.lock();
        if items.len() >= self.capacity {
            return Err(Full(value));
        }
        items.push_back(value);
        self.cv.signal_dce(&mut items);
        Ok(())
    }

    /// `None` if the queue is empty.
    pub fn try_deq(&self) -> Option<V> {
        let mut items = self.items.lock();
        let value = items.pop_front()?;
        self.cv.signal_dce(&mut items);
        Some(value)
    }
}

impl<V> BoundedQueue<V> {
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.lock().is_empty()
    }

    /// The queue's only condition variable, shared by producers and
    /// consumers.
    pub fn condvar(&self) -> &DceCondvar<VecDeque<V>> {
        &self.cv
    }
}

impl<V> fmt::Debug for BoundedQueue<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedQueue")
            .field("capacity", &self.capacity)
            .field("len", &self.len())
            .finish()
    }
}
