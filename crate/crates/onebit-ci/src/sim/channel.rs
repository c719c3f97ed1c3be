//! Seeded instance generation: Rayleigh channels and receiver noise.
//!
//! Randomness is keyed by `(seed, stream)` through independent ChaCha
//! streams, so trial `t` draws the same instance no matter how trials are
//! scheduled across workers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent generator for one trial: the master seed selects the key,
/// the stream index selects the sequence.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Composes a sweep-point stream id from the grid index and trial number.
pub fn stream_id(point: usize, trial: u64) -> u64 {
    ((point as u64) << 40) ^ trial
}

/// Flat-fading Rayleigh channel: i.i.d. entries with independent real and
/// imaginary parts of variance 1/2, so each entry is CN(0, 1).
pub fn gen_channel(k: usize, nt: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    assert!(k >= 1 && nt >= 1);
    let std = (0.5f64).sqrt();
    DMatrix::from_fn(k, nt, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * std, im * std)
    })
}

/// Receiver noise vector CN(0, sigma2 * I).
pub fn gen_noise(k: usize, sigma2: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    assert!(sigma2 >= 0.0);
    let std = (sigma2 / 2.0).sqrt();
    (0..k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * std, im * std)
        })
        .collect()
}
