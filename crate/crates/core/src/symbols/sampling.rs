//! Random draws used by the region samplers. Every chunk of work owns a
//! ChaCha stream derived from the user seed, so results do not depend on the
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub(crate) fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    rng.gen_range(-1.0..=1.0) * half_width
}

/// Uniform direction in `R^d`; for `d = 0` returns the empty vector.
pub(crate) fn sphere(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if d == 0 {
            return v;
        }
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform point of the closed ball of radius `r` in `R^d`.
pub(crate) fn ball(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    if d == 0 {
        return Vec::new();
    }
    let u: f64 = rng.gen();
    let rad = r * u.powf(1.0 / d as f64);
    sphere(rng, d).into_iter().map(|x| x * rad).collect()
}

/// Removes the component along the unit vector `dir`.
pub(crate) fn reject(v: &mut [f64], dir: &[f64]) {
    let a: f64 = v.iter().zip(dir).map(|(x, y)| x * y).sum();
    for (x, d) in v.iter_mut().zip(dir) {
        *x -= a * d;
    }
}
