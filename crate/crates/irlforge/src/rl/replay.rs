//! FIFO ring replay buffer with seeded uniform sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            items: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Pushes one item, evicting the oldest once at capacity.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
            self.next = (self.next + 1) % self.capacity;
        }
    }

    /// Uniform sample with replacement from the provided stream.
    pub fn sample_with(&self, batch: usize, rng: &mut ChaCha8Rng) -> Result<Vec<&T>> {
        if self.items.len() < batch {
            return Err(Error::BufferUnderfull {
                have: self.items.len(),
                need: batch,
            });
        }
        Ok((0..batch)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect())
    }

    /// Seeded uniform sample with replacement.
    pub fn sample(&self, batch: usize, seed: u64) -> Result<Vec<&T>> {
        let mut rng = stream(seed, &["replay-sample"], 0);
        self.sample_with(batch, &mut rng)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifo_eviction_at_capacity() {
        let mut buf = ReplayBuffer::new(2);
        buf.push(1);
        buf.push(2);
        buf.push(3);
        assert_eq!(buf.len(), 2);
        let contents: Vec<i32> = buf.iter().copied().collect();
        assert!(!contents.contains(&1), "oldest item should be evicted");
        assert!(contents.contains(&2) && contents.contains(&3));
    }

    #[test]
    fn same_seed_same_indices() {
        let mut buf = ReplayBuffer::new(16);
        for i in 0..16 {
            buf.push(i);
        }
        let a: Vec<i32> = buf.sample(8, 7).unwrap().into_iter().copied().collect();
        let b: Vec<i32> = buf.sample(8, 7).unwrap().into_iter().copied().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn underfull_sample_signals() {
        let mut buf = ReplayBuffer::new(8);
        buf.push(0);
        match buf.sample(4, 0) {
            Err(Error::BufferUnderfull { have: 1, need: 4 }) => {}
            other => panic!("expected underfull, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_uniform_within_3_sigma() {
        let mut buf = ReplayBuffer::new(10);
        for i in 0..10 {
            buf.push(i);
        }
        let draws = 100_000usize;
        let mut counts = [0usize; 10];
        let mut rng = stream(42, &["uniformity"], 0);
        for _ in 0..draws / 10 {
            for &item in buf.sample_with(10, &mut rng).unwrap().iter() {
                counts[*item as usize] += 1;
            }
        }
        let expected = draws as f64 / 10.0;
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() <= 3.0 * sigma,
                "bin {i}: {c} vs {expected} ± {sigma}"
            );
        }
    }
}
