//! Fixed-capacity experience store with uniform with-replacement sampling.

use rand::Rng;

/// Ring buffer: once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    next: usize,
    cap: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(cap: usize) -> Self {
        assert!(cap > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: Vec::new(),
            next: 0,
            cap,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.cap {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.cap;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn get(&self, i: usize) -> &T {
        &self.items[i]
    }

    /// `batch` indices drawn uniformly with replacement; empty when the
    /// buffer is empty.
    pub fn sample_indices<R: Rng>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch).map(|_| rng.gen_range(0..self.items.len())).collect()
    }
}
