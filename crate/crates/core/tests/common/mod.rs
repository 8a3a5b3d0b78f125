#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdfstab::markov::MarkovChain;
use sdfstab::spectral::ValuationMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive rows (hence irreducible and aperiodic), normalized to sum to one.
pub fn random_chain<R: Rng>(rng: &mut R, n: usize) -> MarkovChain {
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = row.iter().sum();
        for j in 0..n {
            p[(i, j)] = row[j] / s;
        }
    }
    MarkovChain::new((0..n).map(|i| i as f64).collect(), p).unwrap()
}

pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
}

pub fn random_valuation<R: Rng>(rng: &mut R, n: usize) -> ValuationMatrix {
    let chain = random_chain(rng, n);
    let w = random_weights(rng, n);
    ValuationMatrix::from_weights(&chain, &w).unwrap()
}
