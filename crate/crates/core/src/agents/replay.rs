use std::collections::VecDeque;

use rand::Rng;

use crate::env::Action;
use crate::error::{Error, Result};

/// One transition as the learner sees it. `reward` is already on the
/// learner's scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience<T> {
    pub state: Vec<T>,
    pub action: Action,
    pub reward: T,
    pub next_state: Vec<T>,
}

/// Bounded FIFO of experiences with uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: VecDeque<Experience<T>>,
    capacity: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
        }
    }

    pub fn push(&mut self, e: Experience<T>) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
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

    pub fn iter(&self) -> impl Iterator<Item = &Experience<T>> {
        self.items.iter()
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Experience<T>>> {
        if batch == 0 || self.items.len() < batch {
            return Err(Error::State(format!(
                "cannot sample {batch} experiences from a buffer holding {}",
                self.items.len()
            )));
        }
        Ok((0..batch)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp(tag: f64) -> Experience<f64> {
        Experience {
            state: vec![tag],
            action: Action::Hold,
            reward: tag,
            next_state: vec![tag + 1.0],
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut b = ReplayBuffer::new(3);
        for k in 0..5 {
            b.push(exp(k as f64));
        }
        assert_eq!(b.len(), 3);
        let tags: Vec<f64> = b.iter().map(|e| e.reward).collect();
        assert_eq!(tags, [2.0, 3.0, 4.0]);
    }

    #[test]
    fn sampling_needs_enough_items() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        b.push(exp(0.0));
        assert!(b.sample(2, &mut rng).is_err());
        b.push(exp(1.0));
        assert_eq!(b.sample(2, &mut rng).unwrap().len(), 2);
    }

    #[test]
    fn samples_are_roughly_uniform() {
        let mut b = ReplayBuffer::new(4);
        for k in 0..4 {
            b.push(exp(k as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            for e in b.sample(4, &mut rng).unwrap() {
                counts[e.reward as usize] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }
}
