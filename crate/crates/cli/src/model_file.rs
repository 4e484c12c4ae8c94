//! JSON model documents.
//!
//! Floats are written in shortest round-trip form and parsed with exact
//! rounding, so `parse(serialize(m))` reproduces every bit of the model and
//! re-serializing a parsed file gives the same bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mixfit_core::{
    Components, Family, FitConfig, FitResult, Gaussian1DParams, MixtureModel, MvnParams,
    PoissonParams,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub family: String,
    pub k: usize,
    pub weights: Vec<f64>,
    pub components: Vec<ComponentRecord>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ComponentRecord {
    Gaussian { mu: f64, sigma2: f64 },
    Mvn { mu: Vec<f64>, sigma: Vec<Vec<f64>> },
    Poisson { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub seed: u64,
    pub tol: f64,
    pub iters: usize,
    pub converged: bool,
    pub rng_algorithm: String,
    pub final_log_likelihood: f64,
}

impl ModelFile {
    pub fn new(model: &MixtureModel, metadata: Metadata) -> Self {
        let components = match model.components() {
            Components::Gaussian1D(c) => c
                .iter()
                .map(|p| ComponentRecord::Gaussian {
                    mu: p.mu,
                    sigma2: p.sigma2,
                })
                .collect(),
            Components::Mvn(c) => c
                .iter()
                .map(|p| ComponentRecord::Mvn {
                    mu: p.mu.clone(),
                    sigma: p.sigma.chunks(p.dim()).map(<[f64]>::to_vec).collect(),
                })
                .collect(),
            Components::Poisson(c) => c
                .iter()
                .map(|p| ComponentRecord::Poisson { lambda: p.lambda })
                .collect(),
        };
        Self {
            family: model.family().as_str().to_owned(),
            k: model.k(),
            weights: model.weights().to_vec(),
            components,
            metadata,
        }
    }

    pub fn from_fit(fit: &FitResult, model: &MixtureModel, config: &FitConfig) -> Self {
        Self::new(
            model,
            Metadata {
                seed: config.seed,
                tol: config.tol,
                iters: fit.iters,
                converged: fit.converged,
                rng_algorithm: fit.rng_algorithm.to_owned(),
                final_log_likelihood: fit.final_log_likelihood,
            },
        )
    }

    pub fn family(&self) -> std::result::Result<Family, String> {
        self.family
            .parse()
            .map_err(|_| format!("unknown family `{}`", self.family))
    }

    pub fn to_model(&self) -> std::result::Result<MixtureModel, String> {
        let family = self.family()?;
        if self.k != self.components.len() || self.k != self.weights.len() {
            return Err(format!(
                "k = {} but {} weights and {} components",
                self.k,
                self.weights.len(),
                self.components.len()
            ));
        }
        let wrong = |i: usize| format!("component {i} does not match family {family}");
        let components = match family {
            Family::Gaussian1D => Components::Gaussian1D(
                self.components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| match c {
                        ComponentRecord::Gaussian { mu, sigma2 } => Ok(Gaussian1DParams {
                            mu: *mu,
                            sigma2: *sigma2,
                        }),
                        _ => Err(wrong(i)),
                    })
                    .collect::<std::result::Result<_, _>>()?,
            ),
            Family::Mvn => Components::Mvn(
                self.components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| match c {
                        ComponentRecord::Mvn { mu, sigma } => {
                            if sigma.len() != mu.len() || sigma.iter().any(|r| r.len() != mu.len())
                            {
                                return Err(format!(
                                    "component {i}: covariance must be {0}×{0}",
                                    mu.len()
                                ));
                            }
                            Ok(MvnParams {
                                mu: mu.clone(),
                                sigma: sigma.concat(),
                            })
                        }
                        _ => Err(wrong(i)),
                    })
                    .collect::<std::result::Result<_, _>>()?,
            ),
            Family::Poisson => Components::Poisson(
                self.components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| match c {
                        ComponentRecord::Poisson { lambda } => {
                            Ok(PoissonParams { lambda: *lambda })
                        }
                        _ => Err(wrong(i)),
                    })
                    .collect::<std::result::Result<_, _>>()?,
            ),
        };
        MixtureModel::new(self.weights.clone(), components).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("model files contain only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|msg| CliError::ModelFile {
            path: path.to_path_buf(),
            msg,
        })
    }

    pub fn read_model(path: &Path) -> Result<MixtureModel> {
        Self::read(path)?
            .to_model()
            .map_err(|msg| CliError::ModelFile {
                path: path.to_path_buf(),
                msg,
            })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}
