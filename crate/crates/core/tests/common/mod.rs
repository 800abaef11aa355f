#![allow(dead_code)]

use ecomplexity_core::rca::IncidenceMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bernoulli(density) matrix with empty rows and columns dropped.
pub fn random_incidence(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> IncidenceMatrix {
    loop {
        let mut bits: Vec<Vec<u8>> = (0..rows)
            .map(|_| (0..cols).map(|_| u8::from(rng.random_bool(density))).collect())
            .collect();
        bits.retain(|r| r.contains(&1));
        if bits.len() < 2 {
            continue;
        }
        let keep: Vec<usize> = (0..cols).filter(|&j| bits.iter().any(|r| r[j] == 1)).collect();
        if keep.len() < 2 {
            continue;
        }
        let pruned: Vec<Vec<u8>> = bits.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
        return IncidenceMatrix::from_rows(&pruned).unwrap();
    }
}

pub fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
