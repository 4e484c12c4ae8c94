//! Seeded random starting points.
//!
//! Gaussian components draw `μ ~ U(min, max)` and `σ ~ U(σ_floor, range/6]`,
//! covering the data with a spread of about six standard deviations.
//! Poisson rates draw `λ ~ U(min, max)`. Weights draw `U(0, 1)` and are
//! normalized.

use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::Dataset;
use crate::distributions::{
    Components, Family, Gaussian1DParams, MixtureModel, MvnParams, PoissonParams,
};
use crate::em::{variance_floor, LAMBDA_FLOOR};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitRecipe {
    pub family: Family,
    pub k: usize,
    pub seed: u64,
}

impl InitRecipe {
    pub fn new(family: Family, k: usize, seed: u64) -> Self {
        Self { family, k, seed }
    }
}

pub fn init_gaussian1d(data: &Dataset, recipe: &InitRecipe) -> Result<MixtureModel> {
    checked(data, recipe, Family::Gaussian1D)?;
    draw_model(data, recipe.k, &mut rng::stream(recipe.seed, 0))
}

pub fn init_mvn(data: &Dataset, recipe: &InitRecipe) -> Result<MixtureModel> {
    checked(data, recipe, Family::Mvn)?;
    draw_model(data, recipe.k, &mut rng::stream(recipe.seed, 0))
}

pub fn init_poisson(data: &Dataset, recipe: &InitRecipe) -> Result<MixtureModel> {
    checked(data, recipe, Family::Poisson)?;
    draw_model(data, recipe.k, &mut rng::stream(recipe.seed, 0))
}

/// Dispatch on `recipe.family`.
pub fn init_model(data: &Dataset, recipe: &InitRecipe) -> Result<MixtureModel> {
    match recipe.family {
        Family::Gaussian1D => init_gaussian1d(data, recipe),
        Family::Mvn => init_mvn(data, recipe),
        Family::Poisson => init_poisson(data, recipe),
    }
}

fn checked(data: &Dataset, recipe: &InitRecipe, expected: Family) -> Result<()> {
    if recipe.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1"));
    }
    if data.family() != expected || recipe.family != expected {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: recipe.family,
        });
    }
    Ok(())
}

/// Draw a full model from `rng`. The family follows the data.
pub(crate) fn draw_model(data: &Dataset, k: usize, rng: &mut StreamRng) -> Result<MixtureModel> {
    let sampler = ComponentSampler::new(data)?;
    let components = sampler.draw_components(k, rng);
    let weights = draw_weights(k, rng);
    Ok(MixtureModel::from_parts(weights, components))
}

fn draw_weights(k: usize, rng: &mut StreamRng) -> Vec<f64> {
    // 1 - U[0,1) lies in (0, 1], so no weight starts at exactly zero
    let raw: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Draws single components from the initialization distribution. Also used
/// to re-seed degenerate components during a fit.
#[derive(Debug, Clone)]
pub(crate) struct ComponentSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Gaussian1D { lo: f64, hi: f64, sigma_lo: f64 },
    Mvn { bounds: Vec<(f64, f64)> },
    Poisson { lo: f64, hi: f64 },
}

impl ComponentSampler {
    pub(crate) fn new(data: &Dataset) -> Result<Self> {
        let bounds = data.bounds().ok_or(Error::EmptyData)?;
        if bounds
            .iter()
            .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::Domain("observations must be finite"));
        }
        let kind = match data {
            Dataset::Univariate(_) => {
                let (lo, hi) = bounds[0];
                if !(hi > lo) {
                    return Err(Error::ZeroRange { coordinate: None });
                }
                let sigma_lo = libm::sqrt(variance_floor(hi - lo));
                SamplerKind::Gaussian1D { lo, hi, sigma_lo }
            }
            Dataset::Multivariate { .. } => {
                if let Some(j) = bounds.iter().position(|(lo, hi)| !(hi > lo)) {
                    return Err(Error::ZeroRange {
                        coordinate: Some(j),
                    });
                }
                SamplerKind::Mvn { bounds }
            }
            Dataset::Counts(_) => {
                let (lo, hi) = bounds[0];
                if !(hi > 0.0) {
                    return Err(Error::ZeroRange { coordinate: None });
                }
                SamplerKind::Poisson {
                    lo: lo.max(LAMBDA_FLOOR),
                    hi,
                }
            }
        };
        Ok(Self { kind })
    }

    fn draw_components(&self, k: usize, rng: &mut StreamRng) -> Components {
        match &self.kind {
            SamplerKind::Gaussian1D { .. } => {
                Components::Gaussian1D((0..k).map(|_| self.draw_gaussian(rng)).collect())
            }
            SamplerKind::Mvn { .. } => {
                Components::Mvn((0..k).map(|_| self.draw_mvn(rng)).collect())
            }
            SamplerKind::Poisson { .. } => {
                Components::Poisson((0..k).map(|_| self.draw_poisson(rng)).collect())
            }
        }
    }

    /// Replace component `k` of `components` with a fresh draw.
    pub(crate) fn redraw(&self, components: &mut Components, k: usize, rng: &mut StreamRng) {
        match components {
            Components::Gaussian1D(c) => c[k] = self.draw_gaussian(rng),
            Components::Mvn(c) => c[k] = self.draw_mvn(rng),
            Components::Poisson(c) => c[k] = self.draw_poisson(rng),
        }
    }

    fn draw_gaussian(&self, rng: &mut StreamRng) -> Gaussian1DParams {
        let SamplerKind::Gaussian1D { lo, hi, sigma_lo } = self.kind else {
            unreachable!("sampler family fixed at construction")
        };
        let mu = lo + (hi - lo) * rng.random::<f64>();
        let sigma_hi = (hi - lo) / 6.0;
        // U[0,1) mapped onto (sigma_lo, sigma_hi]
        let sigma = sigma_hi - (sigma_hi - sigma_lo) * rng.random::<f64>();
        Gaussian1DParams {
            mu: mu.min(hi),
            sigma2: sigma * sigma,
        }
    }

    fn draw_mvn(&self, rng: &mut StreamRng) -> MvnParams {
        let SamplerKind::Mvn { bounds } = &self.kind else {
            unreachable!("sampler family fixed at construction")
        };
        let d = bounds.len();
        let mu: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| (lo + (hi - lo) * rng.random::<f64>()).min(hi))
            .collect();
        let u = 0.5 + 0.5 * rng.random::<f64>();
        let mut sigma = alloc::vec![0.0; d * d];
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            let s = (hi - lo) / 6.0 * u;
            sigma[j * d + j] = s * s;
        }
        MvnParams { mu, sigma }
    }

    fn draw_poisson(&self, rng: &mut StreamRng) -> PoissonParams {
        let SamplerKind::Poisson { lo, hi } = self.kind else {
            unreachable!("sampler family fixed at construction")
        };
        PoissonParams {
            lambda: (lo + (hi - lo) * rng.random::<f64>()).min(hi),
        }
    }
}
