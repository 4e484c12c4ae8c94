//! Synthetic samples: per-component draws concatenated in order.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use mixfit_core::{rng, Family, FreqTable};

use crate::error::{CliError, Result};

/// Frequencies of `x = 0..=20` for the three-Poisson example data set
/// (n = 2666).
pub const POISSON_EXAMPLE_FREQUENCIES: [u64; 21] = [
    162, 267, 271, 185, 111, 61, 120, 210, 215, 136, 73, 43, 14, 160, 230, 243, 104, 36, 15, 10, 0,
];

pub fn poisson_example_table() -> FreqTable {
    table_from_frequencies(&POISSON_EXAMPLE_FREQUENCIES)
}

pub fn table_from_frequencies(freqs: &[u64]) -> FreqTable {
    FreqTable::from_pairs(
        freqs
            .iter()
            .enumerate()
            .map(|(x, &c)| (x as u64, c))
            .collect(),
    )
    .expect("values 0..n are strictly increasing")
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentSpec {
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    /// Independent coordinates.
    Mvn {
        mu: Vec<f64>,
        sigma: Vec<f64>,
    },
    Poisson {
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSpec {
    pub component: ComponentSpec,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub family: Family,
    pub subsets: Vec<SubsetSpec>,
}

impl SynthSpec {
    /// Three Gaussians N(−10, 1.2²) × 700, N(0, 2²) × 1000, N(5, 5²) × 500.
    pub fn paper_gaussian() -> Self {
        let g = |mu, sigma, size| SubsetSpec {
            component: ComponentSpec::Gaussian { mu, sigma },
            size,
        };
        Self {
            family: Family::Gaussian1D,
            subsets: vec![g(-10.0, 1.2, 700), g(0.0, 2.0, 1000), g(5.0, 5.0, 500)],
        }
    }

    /// Parse `--component` arguments: `MU:SIGMA:SIZE` (gaussian),
    /// `MU1,MU2,..:SIGMA1,SIGMA2,..:SIZE` (mvn) or `LAMBDA:SIZE` (poisson).
    pub fn parse(family: Family, components: &[String]) -> Result<Self> {
        if components.is_empty() {
            return Err(CliError::Usage(
                "at least one --component is required".into(),
            ));
        }
        let subsets = components
            .iter()
            .map(|c| parse_subset(family, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { family, subsets })
    }

    pub fn total(&self) -> usize {
        self.subsets.iter().map(|s| s.size).sum()
    }
}

fn parse_subset(family: Family, text: &str) -> Result<SubsetSpec> {
    let bad = |why: &str| CliError::Usage(format!("invalid component `{text}`: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    let reals = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| f64::from_str(v.trim()).map_err(|_| bad("not a number")))
            .collect()
    };
    let size = |s: &str| -> Result<usize> {
        match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(bad("size must be a positive integer")),
        }
    };
    let component = match (family, parts.as_slice()) {
        (Family::Gaussian1D, [mu, sigma, n]) => {
            let (mu, sigma) = (reals(mu)?, reals(sigma)?);
            let ([mu], [sigma]) = (mu.as_slice(), sigma.as_slice()) else {
                return Err(bad("expected MU:SIGMA:SIZE"));
            };
            if !(mu.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                return Err(bad("need a finite mean and positive sigma"));
            }
            return Ok(SubsetSpec {
                component: ComponentSpec::Gaussian {
                    mu: *mu,
                    sigma: *sigma,
                },
                size: size(n)?,
            });
        }
        (Family::Mvn, [mu, sigma, _]) => {
            let (mu, sigma) = (reals(mu)?, reals(sigma)?);
            if mu.len() != sigma.len() || mu.len() < 2 {
                return Err(bad(
                    "mean and sigma vectors need the same length (at least 2)",
                ));
            }
            if !(mu.iter().all(|v| v.is_finite())
                && sigma.iter().all(|s| *s > 0.0 && s.is_finite()))
            {
                return Err(bad("need finite means and positive sigmas"));
            }
            ComponentSpec::Mvn { mu, sigma }
        }
        (Family::Poisson, [lambda, _]) => {
            let lambda = reals(lambda)?;
            match lambda.as_slice() {
                [l] if *l > 0.0 && l.is_finite() => ComponentSpec::Poisson { lambda: *l },
                _ => return Err(bad("expected a positive LAMBDA")),
            }
        }
        _ => return Err(bad("wrong number of `:` fields for this family")),
    };
    let n = parts.last().expect("split yields at least one part");
    Ok(SubsetSpec {
        component,
        size: size(n)?,
    })
}

/// Generated rows with the index of the subset that produced each.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub dim: usize,
    pub reals: Vec<f64>,
    pub counts: Vec<u64>,
    pub labels: Vec<usize>,
}

/// Deterministic for a given `(spec, seed)`.
pub fn generate(spec: &SynthSpec, seed: u64) -> Sample {
    let mut rng = rng::stream(seed, 0);
    let dim = match spec.subsets.first().map(|s| &s.component) {
        Some(ComponentSpec::Mvn { mu, .. }) => mu.len(),
        _ => 1,
    };
    let mut sample = Sample {
        dim,
        reals: Vec::new(),
        counts: Vec::new(),
        labels: Vec::with_capacity(spec.total()),
    };
    for (label, subset) in spec.subsets.iter().enumerate() {
        for _ in 0..subset.size {
            draw_into(&subset.component, &mut rng, &mut sample);
            sample.labels.push(label);
        }
    }
    sample
}

fn draw_into(c: &ComponentSpec, rng: &mut impl Rng, out: &mut Sample) {
    match c {
        ComponentSpec::Gaussian { mu, sigma } => {
            let d = Normal::new(*mu, *sigma).expect("validated sigma");
            out.reals.push(d.sample(rng));
        }
        ComponentSpec::Mvn { mu, sigma } => {
            for (m, s) in mu.iter().zip(sigma) {
                out.reals
                    .push(Normal::new(*m, *s).expect("validated sigma").sample(rng));
            }
        }
        ComponentSpec::Poisson { lambda } => {
            let d = Poisson::new(*lambda).expect("validated lambda");
            out.counts.push(d.sample(rng) as u64);
        }
    }
}
