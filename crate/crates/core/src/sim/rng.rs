use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POLICY_SALT: u64 = 0x5eed_0f_a11_ce5;

/// Step noise for one path: a ChaCha8 stream keyed by `(seed, path)`, so a
/// path draws the same numbers whichever worker runs it.
pub struct NoiseSource {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl NoiseSource {
    pub fn for_path(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        Self {
            rng,
            bits: 0,
            left: 0,
        }
    }

    /// Fair `±1`, one bit of a buffered word per call.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.bits & 1;
        self.bits >>= 1;
        self.left -= 1;
        if b == 1 {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Randomness a policy may use; disjoint from the step noise of every path.
pub struct PolicyRng(ChaCha8Rng);

impl PolicyRng {
    pub fn new(seed: u64, stream_id: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ POLICY_SALT) ^ splitmix(stream_id));
        rng.set_stream(path);
        Self(rng)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}
