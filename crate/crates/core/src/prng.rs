//! Seedable, splittable pseudo-random source.
//!
//! A SplitMix64 counter generator: the state advances by a fixed odd
//! increment and every output is a bijective mix of the counter. Child
//! streams are derived from the *original* seed and the child index only, so
//! `child(i)` does not depend on how much of the parent stream was consumed.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prng {
    seed: u64,
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { seed, state: seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream number `index`, a pure function of `(seed, index)`.
    pub fn child(&self, index: u64) -> Prng {
        let a = mix64(self.seed ^ 0x6a09_e667_f3bc_c908);
        let b = mix64(index.wrapping_add(GOLDEN_GAMMA).wrapping_mul(0xd1b5_4a32_d192_ed03));
        Prng::new(mix64(a.wrapping_add(b).rotate_left(17) ^ b))
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }
}

impl RngCore for Prng {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

/// Stateless keyed draw: the `index`-th word of the stream selected by `key`.
/// Used by the fully random baseline, which must answer the same value for the
/// same key without remembering it.
#[inline]
pub(crate) fn keyed_word(seed: u64, key: u64, index: u64) -> u64 {
    let s = mix64(seed ^ mix64(key.wrapping_mul(GOLDEN_GAMMA) ^ 0x243f_6a88_85a3_08d3));
    mix64(s.wrapping_add((index + 1).wrapping_mul(GOLDEN_GAMMA)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Prng::new(99);
        let mut b = Prng::new(99);
        for _ in 0..1000 {
            assert_eq!(a.next_word(), b.next_word());
        }
    }

    #[test]
    fn children_are_distinct_and_ignore_parent_position() {
        let root = Prng::new(5);
        let mut advanced = root.clone();
        for _ in 0..17 {
            advanced.next_word();
        }
        assert_eq!(root.child(3), advanced.child(3));

        let firsts: Vec<u64> = (0..256).map(|i| root.child(i).next_word()).collect();
        let mut sorted = firsts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), firsts.len());
        assert_ne!(root.child(0), Prng::new(6).child(0));
    }

    #[test]
    fn range_draws_stay_in_range() {
        let mut p = Prng::new(1);
        for n in [1u64, 2, 3, 7, 1000, (1 << 61) - 1] {
            for _ in 0..100 {
                assert!(p.random_range(0..n) < n);
            }
        }
    }

    #[test]
    fn fill_bytes_handles_ragged_tail() {
        let mut p = Prng::new(2);
        let mut buf = [0u8; 13];
        p.fill_bytes(&mut buf);
        assert!(buf.iter().any(|&b| b != 0));
    }
}
