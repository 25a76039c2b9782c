#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

pub fn gaussian_vector(n: usize, seed: u64) -> DVector<f64> {
    gaussian_matrix(n, 1, seed).column(0).into_owned()
}

/// Random orthogonal matrix from the QR factor of a Gaussian one.
pub fn orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    gaussian_matrix(n, n, seed).qr().q()
}

/// `rows × cols` of rank exactly `rank` (almost surely).
pub fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> DMatrix<f64> {
    gaussian_matrix(rows, rank, seed) * gaussian_matrix(rank, cols, seed.wrapping_add(1))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Signed values with magnitude log-uniform in `[10^lo, 10^hi]`.
pub fn signed_log_uniform(lo: f64, hi: f64) -> impl proptest::strategy::Strategy<Value = f64> {
    use proptest::prelude::*;
    (lo..hi, any::<bool>()).prop_map(|(e, neg)| if neg { -(10f64.powf(e)) } else { 10f64.powf(e) })
}

pub fn log_uniform(lo: f64, hi: f64) -> impl proptest::strategy::Strategy<Value = f64> {
    use proptest::prelude::*;
    (lo..hi).prop_map(|e| 10f64.powf(e))
}
