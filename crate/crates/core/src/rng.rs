//! Seeded, splittable pseudo-random streams.
//!
//! The generator is SplitMix64. Child streams are derived by hashing parent
//! output (for [`RngState::split`]) or parent state plus a string key (for
//! [`RngState::fork`]), so every stream is a pure function of the root seed.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(key: &str) -> u64 {
    key.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    state: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            state: mix64(seed ^ 0x5DEE_CE66_D1CE_4E5B),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Two child streams; advances `self`.
    pub fn split(&mut self) -> (RngState, RngState) {
        let a = self.next_u64();
        let b = self.next_u64();
        (
            RngState {
                state: mix64(a ^ 0xA076_1D64_78BD_642F),
            },
            RngState {
                state: mix64(b ^ 0xE703_7ED1_A0B4_28DB),
            },
        )
    }

    /// Child stream keyed by name. Does not advance `self`; distinct keys
    /// give distinct streams.
    pub fn fork(&self, key: &str) -> RngState {
        RngState {
            state: mix64(self.state ^ mix64(fnv1a(key).wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(RngState::new(7).next_u64(), RngState::new(8).next_u64());
    }

    #[test]
    fn split_is_deterministic() {
        let mut p1 = RngState::new(42);
        let mut p2 = RngState::new(42);
        assert_eq!(p1.split(), p2.split());
    }

    #[test]
    fn split_children_differ() {
        let (mut a, mut b) = RngState::new(1).split();
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn split_advances_parent() {
        let mut p = RngState::new(42);
        let first = p.split();
        let second = p.split();
        assert_ne!(first, second);
    }

    #[test]
    fn fork_is_keyed_and_pure() {
        let p = RngState::new(3);
        assert_eq!(p.fork("U0"), p.fork("U0"));
        assert_ne!(p.fork("U0").next_u64(), p.fork("U1").next_u64());
        assert_eq!(p, RngState::new(3));
    }

    #[test]
    fn unit_interval_and_below() {
        let mut r = RngState::new(11);
        let mut seen = [false; 6];
        for _ in 0..10_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            seen[r.below(6) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = RngState::new(5);
        let mut v: Vec<usize> = (0..20).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
    }
}
