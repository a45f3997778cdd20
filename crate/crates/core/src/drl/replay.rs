//! Fixed-capacity ring buffer with uniform sampling.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: Vec::new(),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Overwrites the oldest entry once full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.random_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&T> {
        self.sample_indices(n, rng).into_iter().map(|i| &self.items[i]).collect()
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.items.get(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..50, pushes in 0usize..200) {
            let mut b = ReplayBuffer::new(cap);
            for i in 0..pushes {
                b.push(i);
                prop_assert!(b.len() <= cap);
            }
            prop_assert_eq!(b.len(), pushes.min(cap));
        }
    }

    #[test]
    fn keeps_most_recent() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(i);
        }
        let mut kept: Vec<i32> = (0..3).map(|i| *b.get(i).unwrap()).collect();
        kept.sort();
        assert_eq!(kept, vec![2, 3, 4]);
    }

    #[test]
    fn uniform_sampling_chi_squared() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 20_000;
        let mut counts = [0usize; 10];
        for i in b.sample_indices(draws, &mut rng) {
            counts[i] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 9 degrees of freedom, p = 0.001 critical value
        assert!(chi2 < 27.877, "chi2 = {chi2}");
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn empty_sample() {
        let b: ReplayBuffer<u8> = ReplayBuffer::new(4);
        assert!(b.sample(3, &mut ChaCha8Rng::seed_from_u64(0)).is_empty());
    }
}
