#![allow(dead_code)]

use dhsom::{Bin, Histogram, ObservationVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Contiguous histogram with random bounds and weights.
pub fn random_histogram<R: Rng>(rng: &mut R, max_bins: usize) -> Histogram {
    let n = rng.random_range(1..=max_bins);
    let mut raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter_mut().for_each(|w| *w /= total);
    let mut lower = rng.random_range(-5.0..5.0);
    let bins = raw
        .into_iter()
        .map(|w| {
            let upper = lower + rng.random_range(0.0..2.0);
            let b = Bin::new(lower, upper, w);
            lower = upper;
            b
        })
        .collect();
    Histogram::normalized(bins).unwrap()
}

pub fn random_observation<R: Rng>(rng: &mut R, dim: usize, max_bins: usize) -> ObservationVector {
    ObservationVector::new((0..dim).map(|_| random_histogram(rng, max_bins)).collect()).unwrap()
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, dim: usize, max_bins: usize) -> Vec<ObservationVector> {
    (0..n).map(|_| random_observation(rng, dim, max_bins)).collect()
}

/// Histogram with `bins` equal-weight bins centred near `center`.
pub fn blob<R: Rng>(rng: &mut R, center: f64, bins: usize) -> Histogram {
    let mut lower = center - 1.0 + rng.random_range(-0.1..0.1);
    let w = 1.0 / bins as f64;
    let parts = (0..bins)
        .map(|_| {
            let upper = lower + 2.0 / bins as f64 + rng.random_range(0.0..0.05);
            let b = Bin::new(lower, upper, w);
            lower = upper;
            b
        })
        .collect();
    Histogram::normalized(parts).unwrap()
}

/// Quantile function evaluated straight from the bins, for oracles.
pub fn quantile_of(h: &Histogram, s: f64) -> f64 {
    let mut acc = 0.0;
    for (i, b) in h.bins().iter().enumerate() {
        let next = acc + b.weight;
        if s <= next || i + 1 == h.len() {
            let t = if b.weight > 0.0 { ((s - acc) / b.weight).clamp(0.0, 1.0) } else { 0.0 };
            return b.lower + t * (b.upper - b.lower);
        }
        acc = next;
    }
    unreachable!()
}

/// Trapezoid rule on `[0, 1]` for the squared quantile difference.
pub fn integrated_wasserstein_sq(a: &ObservationVector, b: &ObservationVector, points: usize) -> f64 {
    a.histograms()
        .iter()
        .zip(b.histograms())
        .map(|(ha, hb)| {
            let h = 1.0 / (points - 1) as f64;
            let f = |k: usize| {
                let s = k as f64 * h;
                (quantile_of(ha, s) - quantile_of(hb, s)).powi(2)
            };
            let inner: f64 = (1..points - 1).map(f).sum();
            h * (inner + 0.5 * (f(0) + f(points - 1)))
        })
        .sum()
}

pub fn histogram_strategy(max_bins: usize) -> impl Strategy<Value = Histogram> {
    any::<u64>().prop_map(move |seed| random_histogram(&mut rng(seed), max_bins))
}

pub fn observation_strategy(dim: usize, max_bins: usize) -> impl Strategy<Value = ObservationVector> {
    any::<u64>().prop_map(move |seed| random_observation(&mut rng(seed), dim, max_bins))
}
