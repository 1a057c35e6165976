//! Binary indexed tree over integer weights with prefix-target selection.
//!
//! Backs the per-clone event index of the simulator: selecting a clone
//! proportionally to its size and updating a size are both `O(log K)`.

/// Fenwick tree over `u64` weights, growable by appending.
#[derive(Debug, Clone, Default)]
pub struct FenwickTree {
    // storage[i] covers the range (i - lsb(i), i], 1-based.
    storage: Vec<u64>,
    total: u64,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl FenwickTree {
    pub fn new() -> Self {
        Self { storage: vec![0], total: 0 }
    }

    /// Number of indexed weights.
    pub fn len(&self) -> usize {
        self.storage.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of all weights; maintained incrementally, `O(1)`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Appends a new weight at index `len()`.
    pub fn push(&mut self, weight: u64) {
        let i = self.storage.len();
        // A new node starts as the sum of the sub-ranges it covers.
        let mut v = weight;
        let mut j = 1;
        while j < lsb(i) {
            v += self.storage[i - j];
            j <<= 1;
        }
        self.storage.push(v);
        self.total += weight;
    }

    /// Adds `delta` to the weight at `index` (0-based).
    pub fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i < self.storage.len() {
            self.storage[i] = self.storage[i].checked_add_signed(delta).expect("weight underflow");
            i += lsb(i);
        }
        self.total = self.total.checked_add_signed(delta).expect("total underflow");
    }

    /// Sum of weights at indices `0..=index`.
    pub fn prefix_sum(&self, index: usize) -> u64 {
        let mut i = index + 1;
        let mut sum = 0;
        while i > 0 {
            sum += self.storage[i];
            i -= lsb(i);
        }
        sum
    }

    /// Smallest index whose prefix sum exceeds `target`; i.e. the clone
    /// owning position `target` when weights are laid out contiguously.
    /// Requires `target < total()`.
    pub fn select(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total, "select target {target} >= total {}", self.total);
        let mut pos = 0;
        let mut step = self.storage.len().next_power_of_two() >> 1;
        while step > 0 {
            let next = pos + step;
            if next < self.storage.len() && self.storage[next] <= target {
                target -= self.storage[next];
                pos = next;
            }
            step >>= 1;
        }
        pos // 1-based internal position == 0-based external index
    }
}
