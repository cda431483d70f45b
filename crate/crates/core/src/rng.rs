//! Counter-based random numbers.
//!
//! Every random quantity in the crate is a pure function of a key and a
//! counter. Environments hash `(seed, canonical edge)` to a uniform; walkers
//! draw from an [`RngStream`] whose `k`-th output depends only on
//! `(seed, walker index, k)`. Streams can therefore be replayed, skipped and
//! evaluated in any order without changing results.

use rand::RngCore;
use rand_distr::{Distribution, Exp1};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function (Stafford's variant 13).
#[inline(always)]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a key together with a sequence of words. Each word goes through a
/// full mixing round, so distinct sequences of equal length give unrelated
/// outputs.
#[inline]
pub fn hash_words(key: u64, words: &[u64]) -> u64 {
    let mut h = mix64(key ^ GOLDEN);
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ w);
    }
    mix64(h ^ (words.len() as u64))
}

/// Top 53 bits of `x` as a uniform in `[0, 1)`.
#[inline(always)]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `(0, 1]`; never zero, so safe for `ln` and reciprocals.
#[inline(always)]
pub fn unit_f64_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Separate seed namespaces so that, for example, the environment and the
/// walks drawn from one master seed are independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Namespace {
    Environment,
    Walk,
    Classical,
    Sampling,
}

impl Namespace {
    fn tag(self) -> u64 {
        match self {
            Namespace::Environment => 0x656e_7669_726f_6e6d,
            Namespace::Walk => 0x7761_6c6b_6572_7321,
            Namespace::Classical => 0x636c_6173_7369_6361,
            Namespace::Sampling => 0x7361_6d70_6c69_6e67,
        }
    }
}

/// Derive the seed used for item `index` of a namespace (the `index`-th
/// environment of an experiment, say).
pub fn derive_seed(master: u64, ns: Namespace, index: u64) -> u64 {
    hash_words(master, &[ns.tag(), index])
}

/// One walker's random stream: output `k` is a keyed hash of the counter `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    walker: u64,
    counter: u64,
    k0: u64,
    k1: u64,
}

impl RngStream {
    pub fn new(seed: u64, walker: u64) -> Self {
        let k0 = hash_words(seed, &[walker, 0]);
        let k1 = hash_words(seed, &[walker, 1]);
        RngStream { seed, walker, counter: 0, k0, k1 }
    }

    /// Stream `walker` in the walk namespace of `master`.
    pub fn for_walker(master: u64, walker: u64) -> Self {
        RngStream::new(derive_seed(master, Namespace::Walk, 0), walker)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn walker(&self) -> u64 {
        self.walker
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Reposition the stream; the next draw is output number `counter`.
    pub fn seek(&mut self, counter: u64) {
        self.counter = counter;
    }

    #[inline(always)]
    fn output(&self, counter: u64) -> u64 {
        mix64(mix64(counter.wrapping_mul(GOLDEN).wrapping_add(self.k0)) ^ self.k1)
    }

    #[inline(always)]
    pub fn uniform(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    #[inline(always)]
    pub fn uniform_open(&mut self) -> f64 {
        unit_f64_open(self.next_u64())
    }

    /// Standard exponential variate (ziggurat).
    #[inline(always)]
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(self)
    }

    /// Standard normal variate (ziggurat).
    pub fn normal(&mut self) -> f64 {
        rand_distr::StandardNormal.sample(self)
    }
}

impl RngCore for RngStream {
    #[inline(always)]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        let out = self.output(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
