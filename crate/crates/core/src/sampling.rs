//! Deterministic random streams.
//!
//! Every parallel loop in the crate indexes its work items and draws item `i`
//! from stream `(seed, i)`. Results therefore do not depend on how rayon
//! splits the index range across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::symmat::SymMat;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for work item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a sub-seed so that nested loops do not share streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn uniform<T: Scalar>(rng: &mut StreamRng, lo: T, hi: T) -> T {
    let u: f64 = rng.gen();
    lo + (hi - lo) * T::lit(u)
}

/// Log-uniform draw in `[lo, hi]`, both positive.
pub fn log_uniform<T: Scalar>(rng: &mut StreamRng, lo: T, hi: T) -> T {
    let (a, b) = (lo.ln(), hi.ln());
    uniform(rng, a, b).exp()
}

pub fn unit_vector<T: Scalar>(rng: &mut StreamRng, n: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..n).map(|_| uniform(rng, -T::one(), T::one())).collect();
        let norm = v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        if norm > T::lit(1e-3) {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point in the Euclidean ball of `radius` around `center`.
pub fn point_in_ball<T: Scalar>(rng: &mut StreamRng, center: &[T], radius: T) -> Vec<T> {
    let d = center.len();
    let dir = unit_vector::<T>(rng, d);
    let u: T = uniform(rng, T::zero(), T::one());
    let r = radius * u.powf(T::one() / T::lit(d as f64));
    center.iter().zip(dir).map(|(&c, e)| c + r * e).collect()
}

/// Symmetric matrix with entries uniform in `[-scale, scale]` before symmetrization.
pub fn sym_from_rng<T: Scalar>(rng: &mut StreamRng, dim: usize, scale: T) -> SymMat<T> {
    let mut raw = vec![T::zero(); dim * dim];
    for x in raw.iter_mut() {
        *x = uniform(rng, -T::one(), T::one()) * scale;
    }
    SymMat::from_fn(dim, |i, j| (raw[i * dim + j] + raw[j * dim + i]) * T::lit(0.5))
}

/// `Σ c_k v_k v_kᵀ` with 1–3 unit vectors and weights log-uniform in `[lo, hi]`.
pub fn psd_bump<T: Scalar>(rng: &mut StreamRng, dim: usize, lo: T, hi: T) -> SymMat<T> {
    let k = rng.gen_range(1..=3);
    let mut acc = SymMat::zeros(dim);
    for _ in 0..k {
        let v = unit_vector::<T>(rng, dim);
        let c = log_uniform(rng, lo, hi);
        acc = &acc + &SymMat::rank_one(&v).scaled(c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(3, 7).gen()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream(3, 7).gen()).collect();
        assert_eq!(a, b);
        let x: u64 = stream(3, 7).gen();
        let y: u64 = stream(3, 8).gen();
        assert_ne!(x, y);
    }

    #[test]
    fn ball_points_stay_inside() {
        let mut rng = stream(1, 0);
        for _ in 0..500 {
            let p = point_in_ball(&mut rng, &[0.5_f64, -1.0], 0.1);
            let d = ((p[0] - 0.5).powi(2) + (p[1] + 1.0).powi(2)).sqrt();
            assert!(d <= 0.1 + 1e-15);
        }
    }
}
