//! SplitMix64, the fixed generator behind every seeded generator in this
//! crate. Outputs are a pure function of the seed, independent of platform
//! and of any external crate's sampling algorithms:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)
//! ```
//!
//! Derived draws:
//! - `unit()`: `(next() >> 11) * 2^-53`, uniform in `[0, 1)`
//! - `symmetric()`: `2 * unit() - 1`, uniform in `[-1, 1)`
//! - `below(b)`: `(next() as u128 * b as u128) >> 64`, in `[0, b)`

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    pub fn below(&mut self, bound: usize) -> usize {
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// `k` distinct values from `0..n`, ascending (Floyd's sampling).
    pub fn distinct_sorted(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct values from {n}");
        let mut picked = std::collections::BTreeSet::new();
        for j in n - k..n {
            let t = self.below(j + 1);
            if !picked.insert(t) {
                picked.insert(j);
            }
        }
        picked.into_iter().collect()
    }

    /// Uniform `[-1, 1)` vector.
    pub fn symmetric_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.symmetric()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_outputs() {
        // first outputs for seed 0 of the reference SplitMix64
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn distinct_draws() {
        let mut r = SplitMix64::new(7);
        let v = r.distinct_sorted(50, 50);
        assert_eq!(v, (0..50).collect::<Vec<_>>());
        let v = r.distinct_sorted(1000, 30);
        assert_eq!(v.len(), 30);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|&x| x < 1000));
    }
}
