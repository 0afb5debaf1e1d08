//! xoshiro256++ pseudo-random generator with SplitMix64 seeding and
//! jump-ahead for non-overlapping parallel streams.
//!
//! The output sequence is bit-identical to the reference C implementation by
//! Blackman and Vigna (`xoshiro256plusplus.c`), so simulation results do not
//! depend on the platform or on whatever generator a dependency ships.

use crate::error::{Error, Result};

const JUMP: [u64; 4] = [
    0x180e_c6d3_3cfd_0aba,
    0xd5a6_1266_f0c9_392c,
    0xa958_2618_e03f_c9aa,
    0x39ab_dc45_29b1_661c,
];

const LONG_JUMP: [u64; 4] = [
    0x76e1_5d3e_fefd_cbbf,
    0xc500_4e44_1c52_2fb3,
    0x7771_0069_854e_e241,
    0x3910_9bb0_2acb_e635,
];

/// One step of SplitMix64. Returns the output and updates `state`.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Converts a raw 64-bit output to a uniform real in `[0, 1)` using the high
/// 53 bits.
#[inline(always)]
pub fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// 256-bit xoshiro256++ state. Never all zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    /// Expands `seed` into a full state with four successive SplitMix64
    /// outputs.
    pub fn seed_from_u64(seed: u64) -> Self {
        Self::try_seed_from_u64(seed).expect("SplitMix64 produced an all-zero state")
    }

    pub fn try_seed_from_u64(seed: u64) -> Result<Self> {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self::from_state(s).map_err(|_| Error::SeedingFailure(seed))
    }

    pub fn from_state(s: [u64; 4]) -> Result<Self> {
        if s == [0; 4] {
            return Err(Error::InvalidParameter(
                "xoshiro256++ state must not be all zero".into(),
            ));
        }
        Ok(Self { s })
    }

    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform real in `[0, 1)`.
    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        u64_to_unit(self.next_u64())
    }

    /// Uniform integer in `[0, bound)`, unbiased (Lemire's multiply-and-reject).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires a positive bound");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Advances the state by 2^128 steps.
    pub fn jump(&mut self) {
        self.apply_jump(&JUMP);
    }

    /// Advances the state by 2^192 steps.
    pub fn long_jump(&mut self) {
        self.apply_jump(&LONG_JUMP);
    }

    fn apply_jump(&mut self, poly: &[u64; 4]) {
        let mut acc = [0u64; 4];
        for &word in poly {
            for b in 0..64 {
                if word & (1u64 << b) != 0 {
                    for (a, s) in acc.iter_mut().zip(self.s.iter()) {
                        *a ^= *s;
                    }
                }
                self.next_u64();
            }
        }
        self.s = acc;
    }

    /// Returns a copy advanced by `k` jumps.
    pub fn jumped(&self, k: u64) -> Self {
        let mut r = self.clone();
        for _ in 0..k {
            r.jump();
        }
        r
    }
}

/// Long-jump counts identifying the stream family of each campaign command.
pub mod command {
    pub const BUILD_TABLE: u32 = 0;
    pub const EVALUATE: u32 = 1;
    pub const DIAGNOSTICS: u32 = 2;
    pub const PAIR_SAMPLING: u32 = 3;
}

/// Stream family for one campaign command: the root state is long-jumped
/// `command` times, and task `k` receives that base jumped `k` times.
///
/// Stream assignment depends only on `(seed, command, task index)`, never on
/// which worker ends up running the task.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    base: Xoshiro256PlusPlus,
}

impl StreamFamily {
    pub fn new(seed: u64, command: u32) -> Self {
        let mut base = Xoshiro256PlusPlus::seed_from_u64(seed);
        for _ in 0..command {
            base.long_jump();
        }
        Self { base }
    }

    pub fn stream(&self, task: u64) -> Xoshiro256PlusPlus {
        self.base.jumped(task)
    }

    /// Streams for tasks `0..count`, computed with `count` jumps in total.
    pub fn streams(&self, count: usize) -> Vec<Xoshiro256PlusPlus> {
        let mut cur = self.base.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(cur.clone());
            cur.jump();
        }
        out
    }
}
