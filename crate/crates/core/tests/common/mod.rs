#![allow(dead_code)]

use mixfit_core::{Dataset, MixtureModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian sample with one `(mu, sigma, n)` block per subset, plus the block labels.
pub fn gaussian_blocks(seed: u64, blocks: &[(f64, f64, usize)]) -> (Vec<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for (k, &(mu, sigma, n)) in blocks.iter().enumerate() {
        let d = Normal::new(mu, sigma).unwrap();
        for _ in 0..n {
            xs.push(d.sample(&mut r));
            labels.push(k);
        }
    }
    (xs, labels)
}

pub fn poisson_blocks(seed: u64, blocks: &[(f64, usize)]) -> Vec<u64> {
    let mut r = rng(seed);
    let mut xs = Vec::new();
    for &(lambda, n) in blocks {
        let d = Poisson::new(lambda).unwrap();
        for _ in 0..n {
            xs.push(d.sample(&mut r) as u64);
        }
    }
    xs
}

/// Isotropic blocks in `dim` dimensions, row-major.
pub fn mvn_blocks(seed: u64, dim: usize, blocks: &[(Vec<f64>, f64, usize)]) -> Vec<f64> {
    let mut r = rng(seed);
    let mut xs = Vec::new();
    for (mu, sigma, n) in blocks {
        let d = Normal::new(0.0, *sigma).unwrap();
        for _ in 0..*n {
            for m in &mu[..dim] {
                xs.push(m + d.sample(&mut r));
            }
        }
    }
    xs
}

/// A random dataset of the given family: `k` blocks with random locations, `n` rows total.
pub fn random_dataset(seed: u64, family: usize, k: usize, n: usize) -> Dataset {
    let mut r = rng(seed ^ 0x9e37_79b9);
    let sizes = split(&mut r, n, k);
    match family {
        0 => {
            let blocks: Vec<_> = sizes
                .iter()
                .map(|&s| (r.random_range(-20.0..20.0), r.random_range(0.3..4.0), s))
                .collect();
            Dataset::univariate(gaussian_blocks(seed, &blocks).0)
        }
        1 => {
            let dim = r.random_range(2..=3);
            let blocks: Vec<_> = sizes
                .iter()
                .map(|&s| {
                    (
                        (0..dim).map(|_| r.random_range(-10.0..10.0)).collect(),
                        r.random_range(0.5..3.0),
                        s,
                    )
                })
                .collect();
            Dataset::multivariate(dim, mvn_blocks(seed, dim, &blocks)).unwrap()
        }
        _ => {
            let blocks: Vec<_> = sizes
                .iter()
                .map(|&s| (r.random_range(0.5..30.0), s))
                .collect();
            Dataset::counts(&poisson_blocks(seed, &blocks))
        }
    }
}

fn split(r: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut sizes = vec![n / k; k];
    for _ in 0..n % k {
        sizes[r.random_range(0..k)] += 1;
    }
    sizes
}

/// Flattened parameter vector in component order: weights, then per-family parameters.
pub fn params(m: &MixtureModel) -> Vec<f64> {
    use mixfit_core::Components;
    let mut out = m.weights().to_vec();
    match m.components() {
        Components::Gaussian1D(c) => c.iter().for_each(|p| out.extend([p.mu, p.sigma2])),
        Components::Mvn(c) => c.iter().for_each(|p| {
            out.extend(&p.mu);
            out.extend(&p.sigma);
        }),
        Components::Poisson(c) => c.iter().for_each(|p| out.push(p.lambda)),
    }
    out
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn is_monotone(trace: &[mixfit_core::TraceEntry]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1].log_likelihood >= w[0].log_likelihood - 1e-9 * w[0].log_likelihood.abs())
}
