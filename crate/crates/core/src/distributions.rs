//! Component densities in log space and the mixture built from them.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::math::{ln_factorial, log_sum_exp};

/// `ln(2π)`
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gaussian1D,
    Mvn,
    Poisson,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian1D => "gaussian",
            Family::Mvn => "mvn",
            Family::Poisson => "poisson",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian1d" | "normal" => Ok(Family::Gaussian1D),
            "mvn" | "multivariate" => Ok(Family::Mvn),
            "poisson" => Ok(Family::Poisson),
            _ => Err(Error::InvalidParameter("unknown family")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1DParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl Gaussian1DParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        let p = Self { mu, sigma2 };
        p.validate()?;
        Ok(p)
    }

    pub fn sigma(&self) -> f64 {
        libm::sqrt(self.sigma2)
    }

    fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mean must be finite"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidParameter("variance must be positive"));
        }
        Ok(())
    }
}

/// Multivariate normal with mean `mu` (length `d`) and row-major `d × d`
/// covariance `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl MvnParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let p = Self { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.dim() + j]
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive"));
        }
        if self.sigma.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: self.sigma.len(),
            });
        }
        if !self.mu.iter().chain(&self.sigma).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("MVN parameters must be finite"));
        }
        let scale = self.sigma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in (i + 1)..d {
                if (self.cov(i, j) - self.cov(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter("covariance must be symmetric"));
                }
            }
        }
        self.factor().map(|_| ())
    }

    pub(crate) fn factor(&self) -> Result<Cholesky> {
        Cholesky::factor_with_jitter(&self.sigma, self.dim()).map(|(c, _)| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    pub lambda: f64,
}

impl PoissonParams {
    pub fn new(lambda: f64) -> Result<Self> {
        let p = Self { lambda };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("rate must be positive"));
        }
        Ok(())
    }
}

pub fn gaussian_log_pdf(x: f64, p: &Gaussian1DParams) -> Result<f64> {
    if !(p.sigma2 > 0.0) {
        return Err(Error::InvalidParameter("variance must be positive"));
    }
    Ok(gaussian_log_pdf_unchecked(x, p.mu, p.sigma2))
}

#[inline]
pub(crate) fn gaussian_log_pdf_unchecked(x: f64, mu: f64, sigma2: f64) -> f64 {
    let z = x - mu;
    -0.5 * (LN_2PI + libm::log(sigma2)) - z * z / (2.0 * sigma2)
}

/// Evaluated through a Cholesky factor of `Σ`, with the jitter retry policy
/// of the crate if the plain factorization fails.
pub fn mvn_log_pdf(x: &[f64], p: &MvnParams) -> Result<f64> {
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: x.len(),
        });
    }
    if p.sigma.len() != p.dim() * p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim() * p.dim(),
            got: p.sigma.len(),
        });
    }
    let chol = p.factor()?;
    Ok(mvn_log_pdf_factored(x, &p.mu, &chol))
}

pub(crate) fn mvn_log_pdf_factored(x: &[f64], mu: &[f64], chol: &Cholesky) -> f64 {
    let mut diff = [0.0f64; 8];
    let quad = if mu.len() <= diff.len() {
        for (j, (a, b)) in x.iter().zip(mu).enumerate() {
            diff[j] = a - b;
        }
        chol.mahalanobis_sq(&diff[..mu.len()])
    } else {
        let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
        chol.mahalanobis_sq(&diff)
    };
    -0.5 * (mu.len() as f64 * LN_2PI + chol.log_det() + quad)
}

pub fn poisson_log_pmf(x: i64, p: &PoissonParams) -> Result<f64> {
    if x < 0 {
        return Err(Error::Domain(
            "Poisson support is the non-negative integers",
        ));
    }
    if !(p.lambda > 0.0) {
        return Err(Error::InvalidParameter("rate must be positive"));
    }
    Ok(poisson_log_pmf_unchecked(x as u64, p.lambda))
}

#[inline]
pub(crate) fn poisson_log_pmf_unchecked(x: u64, lambda: f64) -> f64 {
    let xf = x as f64;
    // 0·ln λ is 0 even for tiny λ
    let term = if x == 0 { 0.0 } else { xf * libm::log(lambda) };
    -lambda + term - ln_factorial(x)
}

/// Per-family component parameters. All components of a mixture belong to
/// one family.
#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    Gaussian1D(Vec<Gaussian1DParams>),
    Mvn(Vec<MvnParams>),
    Poisson(Vec<PoissonParams>),
}

impl Components {
    pub fn len(&self) -> usize {
        match self {
            Components::Gaussian1D(c) => c.len(),
            Components::Mvn(c) => c.len(),
            Components::Poisson(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family(&self) -> Family {
        match self {
            Components::Gaussian1D(_) => Family::Gaussian1D,
            Components::Mvn(_) => Family::Mvn,
            Components::Poisson(_) => Family::Poisson,
        }
    }

    /// Location used to order components: `μ`, first coordinate of `μ⃗`, or `λ`.
    pub fn location(&self, k: usize) -> f64 {
        match self {
            Components::Gaussian1D(c) => c[k].mu,
            Components::Mvn(c) => c[k].mu[0],
            Components::Poisson(c) => c[k].lambda,
        }
    }

    fn permuted(&self, order: &[usize]) -> Self {
        fn pick<T: Clone>(v: &[T], order: &[usize]) -> Vec<T> {
            order.iter().map(|&i| v[i].clone()).collect()
        }
        match self {
            Components::Gaussian1D(c) => Components::Gaussian1D(pick(c, order)),
            Components::Mvn(c) => Components::Mvn(pick(c, order)),
            Components::Poisson(c) => Components::Poisson(pick(c, order)),
        }
    }
}

/// `f(x) = Σ_k w_k g_k(x; Θ_k)` with nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Components,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Components) -> Result<Self> {
        let m = Self {
            weights,
            components,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian1d(weights: Vec<f64>, comps: Vec<Gaussian1DParams>) -> Result<Self> {
        Self::new(weights, Components::Gaussian1D(comps))
    }

    pub fn mvn(weights: Vec<f64>, comps: Vec<MvnParams>) -> Result<Self> {
        Self::new(weights, Components::Mvn(comps))
    }

    pub fn poisson(weights: Vec<f64>, comps: Vec<PoissonParams>) -> Result<Self> {
        Self::new(weights, Components::Poisson(comps))
    }

    /// Skips validation; used by the engine on parameters it constructed.
    pub(crate) fn from_parts(weights: Vec<f64>, components: Components) -> Self {
        debug_assert_eq!(weights.len(), components.len());
        Self {
            weights,
            components,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.components.len();
        if k == 0 {
            return Err(Error::InvalidModel(
                "a mixture needs at least one component",
            ));
        }
        if self.weights.len() != k {
            return Err(Error::InvalidModel("one weight per component is required"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidModel(
                "weights must be nonnegative and finite",
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel("weights must sum to one"));
        }
        match &self.components {
            Components::Gaussian1D(c) => c.iter().try_for_each(Gaussian1DParams::validate),
            Components::Poisson(c) => c.iter().try_for_each(PoissonParams::validate),
            Components::Mvn(c) => {
                let d = c[0].dim();
                if c.iter().any(|p| p.dim() != d) {
                    return Err(Error::InvalidModel(
                        "MVN components must share one dimension",
                    ));
                }
                c.iter().try_for_each(MvnParams::validate)
            }
        }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn family(&self) -> Family {
        self.components.family()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    /// Dimension of one observation (1 for the univariate families).
    pub fn dim(&self) -> usize {
        match &self.components {
            Components::Mvn(c) => c[0].dim(),
            _ => 1,
        }
    }

    /// Reorder components (and weights) so that `new[i] = old[order[i]]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            components: self.components.permuted(order),
        }
    }

    /// Components sorted by location, with the permutation applied.
    pub fn sorted_by_location(&self) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.k()).collect();
        order.sort_by(|&a, &b| {
            self.components
                .location(a)
                .total_cmp(&self.components.location(b))
        });
        (self.permuted(&order), order)
    }

    /// `ln g_k(x)` for every component, written into `out`.
    pub fn component_log_densities(&self, x: Observation<'_>, out: &mut [f64]) -> Result<()> {
        PreparedModel::new(self)?.component_log_densities(x, out)
    }

    /// `ln g_k(x)`.
    pub fn component_log_density(&self, k: usize, x: Observation<'_>) -> Result<f64> {
        match (&self.components, x) {
            (Components::Gaussian1D(c), Observation::Real(v)) => gaussian_log_pdf(v, &c[k]),
            (Components::Mvn(c), Observation::Vector(v)) => mvn_log_pdf(v, &c[k]),
            (Components::Poisson(c), Observation::Count(v)) => {
                poisson_log_pmf(i64::try_from(v).unwrap_or(i64::MAX), &c[k])
            }
            (_, x) => Err(mismatch(self.family(), x)),
        }
    }
}

fn observation_family(x: Observation<'_>) -> Family {
    match x {
        Observation::Real(_) => Family::Gaussian1D,
        Observation::Vector(_) => Family::Mvn,
        Observation::Count(_) => Family::Poisson,
    }
}

fn mismatch(model: Family, x: Observation<'_>) -> Error {
    Error::FamilyMismatch {
        data: observation_family(x),
        model,
    }
}

/// `ln Σ_k w_k g_k(x)` via log-sum-exp; components with zero weight are
/// left out of the reduction.
pub fn mixture_log_pdf(x: Observation<'_>, m: &MixtureModel) -> Result<f64> {
    let prepared = PreparedModel::new(m)?;
    let mut buf = alloc::vec![0.0; m.k()];
    prepared.weighted_log_densities(x, &mut buf)?;
    Ok(log_sum_exp(&buf))
}

/// A model with per-component constants (log weights, Cholesky factors)
/// computed once for repeated evaluation.
pub(crate) struct PreparedModel<'m> {
    model: &'m MixtureModel,
    log_weights: Vec<f64>,
    factors: Vec<Cholesky>,
}

impl<'m> PreparedModel<'m> {
    pub(crate) fn new(model: &'m MixtureModel) -> Result<Self> {
        let log_weights = model
            .weights
            .iter()
            .map(|&w| {
                if w > 0.0 {
                    libm::log(w)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let factors = match &model.components {
            Components::Mvn(c) => c.iter().map(MvnParams::factor).collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        Ok(Self {
            model,
            log_weights,
            factors,
        })
    }

    pub(crate) fn component_log_densities(
        &self,
        x: Observation<'_>,
        out: &mut [f64],
    ) -> Result<()> {
        match (&self.model.components, x) {
            (Components::Gaussian1D(c), Observation::Real(v)) => {
                for (o, p) in out.iter_mut().zip(c) {
                    *o = gaussian_log_pdf_unchecked(v, p.mu, p.sigma2);
                }
            }
            (Components::Mvn(c), Observation::Vector(v)) => {
                let d = c[0].dim();
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: v.len(),
                    });
                }
                for ((o, p), chol) in out.iter_mut().zip(c).zip(&self.factors) {
                    *o = mvn_log_pdf_factored(v, &p.mu, chol);
                }
            }
            (Components::Poisson(c), Observation::Count(v)) => {
                for (o, p) in out.iter_mut().zip(c) {
                    *o = poisson_log_pmf_unchecked(v, p.lambda);
                }
            }
            (_, x) => return Err(mismatch(self.model.family(), x)),
        }
        Ok(())
    }

    /// `ln w_k + ln g_k(x)`; `-inf` where `w_k = 0`.
    pub(crate) fn weighted_log_densities(&self, x: Observation<'_>, out: &mut [f64]) -> Result<()> {
        self.component_log_densities(x, out)?;
        for (o, &lw) in out.iter_mut().zip(&self.log_weights) {
            *o = if lw == f64::NEG_INFINITY { lw } else { *o + lw };
        }
        Ok(())
    }
}
