//! Fixtures shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use phaseprior::bench::{complexify, holdout_split, load_digits};
use phaseprior::generative::{train_pca, GenerativeModel};
use phaseprior::rng::seeded;
use rand::Rng;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn digits_path() -> PathBuf {
    repo_root().join("data/digits.csv")
}

/// Averages each 2x2 block of an 8x8 image into a 4x4 image.
pub fn pool_4x4(image: &[f64]) -> Vec<f64> {
    (0..16)
        .map(|p| {
            let (r, c) = (2 * (p / 4), 2 * (p % 4));
            (image[8 * r + c] + image[8 * r + c + 1] + image[8 * r + 8 + c] + image[8 * r + 9 + c])
                / 4.0
        })
        .collect()
}

/// A small data-driven problem: digits pooled to 16 pixels, complexified,
/// split 80/20, and a rank-`k` model trained on the training part.
pub struct SmallDigits {
    pub model: GenerativeModel,
    pub n_train: usize,
    pub holdout: Vec<Vec<Complex64>>,
}

pub fn small_digits(k: usize, seed: u64) -> SmallDigits {
    let pixels: Vec<Vec<f64>> = load_digits(digits_path())
        .unwrap()
        .iter()
        .map(|img| pool_4x4(img))
        .collect();
    let signals = complexify(&pixels, seed).unwrap();
    let (train, test) = holdout_split(signals.len(), 0.2, seed + 1).unwrap();
    let train_set: Vec<_> = train.iter().map(|&i| signals[i].clone()).collect();
    SmallDigits {
        model: train_pca(&train_set, k).unwrap(),
        n_train: train.len(),
        holdout: test.iter().map(|&i| signals[i].clone()).collect(),
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// A rank-`k` model of dimension `n` trained on uniform random data.
pub fn random_model(n: usize, k: usize, seed: u64) -> GenerativeModel {
    let mut rng = seeded(seed);
    let data: Vec<_> = (0..4 * n).map(|_| random_vec(&mut rng, n)).collect();
    train_pca(&data, k).unwrap()
}
