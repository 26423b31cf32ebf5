//! Counter-based random streams.
//!
//! Every stream is a ChaCha20 generator keyed by the master seed and placed on
//! its own stream id derived from `(replica, purpose)`.  Streams therefore do
//! not depend on scheduling or on how many other streams were consumed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Tag separating independent uses of randomness within one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Field,
    Noise,
    Scenery,
    TestFunction,
    Other(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Field => 1,
            Purpose::Noise => 2,
            Purpose::Scenery => 3,
            Purpose::TestFunction => 4,
            Purpose::Other(k) => 0x100 + k as u64,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed from which all replica streams are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree {
    pub seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut z = self.seed;
        for chunk in key.chunks_mut(8) {
            z = splitmix(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        key
    }

    pub fn stream(&self, replica: u64, purpose: Purpose) -> Stream {
        let mut rng = ChaCha20Rng::from_seed(self.key());
        rng.set_stream(splitmix(replica ^ splitmix(purpose.tag())));
        Stream { rng, spare: None }
    }
}

/// A single reproducible random stream.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Stream {
    /// Standard normal variate; Box–Muller pairs are consumed in order.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.normal_pair();
        self.spare = Some(b);
        a
    }

    /// Pair of independent standard normals.
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Standard normal pair attached to counter `k` of this stream.
    ///
    /// The draw depends only on `k`, not on previous draws, so the same mode
    /// index yields the same variate on grids of different sizes.
    pub fn normal_pair_at(&mut self, k: u64) -> (f64, f64) {
        self.spare = None;
        self.rng.set_word_pos(k as u128 * 8);
        self.normal_pair()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
