//! Counter-based random streams for reproducible replications.
//!
//! Every stream is ChaCha8 keyed by `seed_from_u64(base_seed)` with stream id
//! `(replicate << 8) | purpose`. Streams for different replications or purposes
//! never overlap and each can be regenerated on its own, so results do not
//! depend on execution order or thread count.
//!
//! Uniforms take the top 53 bits of a `u64` and map them to the open interval
//! `((k + 0.5) / 2^53)`; normals are the inverse cdf of such a uniform.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::std_normal_quantile;

/// What a stream is used for within one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Data = 0,
    TestData = 1,
    Split = 2,
    Folds = 3,
}

#[derive(Debug, Clone)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn substream(base_seed: u64, replicate: u64, purpose: Purpose) -> Self {
        assert!(replicate < 1 << 56, "replicate index {replicate} exceeds 56 bits");
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream((replicate << 8) | purpose as u64);
        SimRng(rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform()).expect("uniform lies in (0, 1)")
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.0);
    }
}
