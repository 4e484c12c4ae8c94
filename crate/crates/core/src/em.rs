//! The K-component EM loop.
//!
//! One iteration is: E-step (responsibilities from the current model), then
//! the family's closed-form M-step for every component from those same
//! responsibilities, then the weight update. The observed-data
//! log-likelihood falls out of the E-step's log-sum-exp and is what the
//! convergence test and the trace monitor.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::distributions::{
    Components, Family, Gaussian1DParams, MixtureModel, MvnParams, PoissonParams, PreparedModel,
};
use crate::error::{Error, Result};
use crate::init::{draw_model, ComponentSampler};
use crate::linalg::{clip_scaled_eigenvalues, symmetrize, Cholesky};
use crate::math::log_sum_exp;
use crate::rng::{self, StreamRng, RNG_ALGORITHM};

/// A component is degenerate when its responsibility mass drops below this
/// fraction of `n`.
pub const DEGENERATE_FRACTION: f64 = 1e-8;

/// Lower bound on Poisson rates.
pub const LAMBDA_FLOOR: f64 = 1e-10;

/// Lower bound on a Gaussian variance for data spanning `range`.
pub fn variance_floor(range: f64) -> f64 {
    if range > 0.0 && range.is_finite() {
        1e-10 * range * range
    } else {
        1e-10
    }
}

/// `γ̂_{i,k}`: posterior probability that row `i` came from component `k`.
///
/// Rows carry an optional multiplicity so count data stored as a frequency
/// table is weighted by how often each value occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityMatrix {
    k: usize,
    gamma: Vec<f64>,
    multiplicity: Option<Vec<u64>>,
}

impl ResponsibilityMatrix {
    /// Row-major `rows × k` responsibilities; each row must be a probability
    /// vector (within 1e-12).
    pub fn new(k: usize, gamma: Vec<f64>) -> Result<Self> {
        Self::build(k, gamma, None)
    }

    pub fn with_multiplicity(k: usize, gamma: Vec<f64>, multiplicity: Vec<u64>) -> Result<Self> {
        Self::build(k, gamma, Some(multiplicity))
    }

    fn build(k: usize, gamma: Vec<f64>, multiplicity: Option<Vec<u64>>) -> Result<Self> {
        if k == 0 || !gamma.len().is_multiple_of(k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: gamma.len(),
            });
        }
        if let Some(m) = &multiplicity {
            if m.len() != gamma.len() / k {
                return Err(Error::DimensionMismatch {
                    expected: gamma.len() / k,
                    got: m.len(),
                });
            }
        }
        for row in gamma.chunks_exact(k) {
            if row.iter().any(|g| !(0.0..=1.0).contains(g)) {
                return Err(Error::InvalidParameter(
                    "responsibilities must lie in [0, 1]",
                ));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "responsibility rows must sum to one",
                ));
            }
        }
        Ok(Self {
            k,
            gamma,
            multiplicity,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.gamma.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.gamma[i * self.k + k]
    }

    pub fn multiplicity(&self, i: usize) -> u64 {
        self.multiplicity.as_ref().map_or(1, |m| m[i])
    }

    /// `n`, the number of observations the rows stand for.
    pub fn observations(&self) -> f64 {
        match &self.multiplicity {
            Some(m) => m.iter().map(|&c| c as f64).sum(),
            None => self.rows() as f64,
        }
    }

    /// `Σ_i γ̂_{i,k}` counted with multiplicity.
    pub fn mass(&self, k: usize) -> f64 {
        (0..self.rows())
            .map(|i| self.multiplicity(i) as f64 * self.get(i, k))
            .sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }
}

/// Responsibilities for every row: a softmax over `ln w_k + ln g_k(x_i)`.
pub fn e_step(data: &Dataset, model: &MixtureModel) -> Result<ResponsibilityMatrix> {
    check_compatible(data, model)?;
    e_step_with_loglik(data, model).map(|(r, _)| r)
}

/// E-step that also returns `Σ_i ln f(x_i)`, which the same log-sum-exp
/// already produces.
fn e_step_with_loglik(data: &Dataset, model: &MixtureModel) -> Result<(ResponsibilityMatrix, f64)> {
    let k = model.k();
    let prepared = PreparedModel::new(model)?;
    let rows = data.rows();
    let mut gamma = vec![0.0; rows * k];
    let mut loglik = 0.0;
    for (i, out) in gamma.chunks_exact_mut(k).enumerate() {
        prepared.weighted_log_densities(data.row(i), out)?;
        let lse = log_sum_exp(out);
        if lse == f64::NEG_INFINITY {
            return Err(Error::InvalidModel("every component has zero weight"));
        }
        for g in out.iter_mut() {
            *g = libm::exp(*g - lse);
        }
        let m = data.multiplicity(i);
        if m > 0 {
            loglik += m as f64 * lse;
        }
    }
    let multiplicity = match data {
        Dataset::Counts(t) => Some(t.entries().iter().map(|&(_, c)| c).collect()),
        _ => None,
    };
    Ok((
        ResponsibilityMatrix {
            k,
            gamma,
            multiplicity,
        },
        loglik,
    ))
}

/// `ŵ_k = Σ_i γ̂_{i,k} / Σ_i Σ_k' γ̂_{i,k'}`, i.e. the column means.
pub fn update_weights(r: &ResponsibilityMatrix) -> Vec<f64> {
    let mass: Vec<f64> = (0..r.k()).map(|k| r.mass(k)).collect();
    let total: f64 = mass.iter().sum();
    mass.into_iter().map(|m| m / total).collect()
}

/// Outcome of a closed-form M-step for one component.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimate<P> {
    Fitted(P),
    /// Responsibility mass fell below `DEGENERATE_FRACTION · n`. `fallback`
    /// holds the closed-form estimate when the mass is still positive.
    Degenerate {
        mass: f64,
        fallback: Option<P>,
    },
}

impl<P> Estimate<P> {
    pub fn fitted(self) -> Option<P> {
        match self {
            Estimate::Fitted(p) => Some(p),
            Estimate::Degenerate { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Floors {
    variance: Vec<f64>,
}

impl Floors {
    fn for_data(data: &Dataset) -> Self {
        let variance = data
            .bounds()
            .unwrap_or_default()
            .into_iter()
            .map(|(lo, hi)| variance_floor(hi - lo))
            .collect();
        Self { variance }
    }
}

fn degenerate_threshold(r: &ResponsibilityMatrix) -> f64 {
    DEGENERATE_FRACTION * r.observations()
}

fn classify<P>(mass: f64, threshold: f64, estimate: impl FnOnce() -> P) -> Estimate<P> {
    if mass < threshold || !(mass > 0.0) {
        let fallback = if mass > 0.0 { Some(estimate()) } else { None };
        Estimate::Degenerate { mass, fallback }
    } else {
        Estimate::Fitted(estimate())
    }
}

fn check_rows(data: &Dataset, r: &ResponsibilityMatrix) -> Result<()> {
    if r.rows() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            got: r.rows(),
        });
    }
    Ok(())
}

/// Weighted mean and biased weighted variance per component; the variance
/// uses the freshly updated mean and is clamped to the variance floor.
pub fn m_step_gaussian1d(
    data: &Dataset,
    r: &ResponsibilityMatrix,
) -> Result<Vec<Estimate<Gaussian1DParams>>> {
    let Dataset::Univariate(xs) = data else {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: Family::Gaussian1D,
        });
    };
    check_rows(data, r)?;
    Ok(gaussian1d_estimates(xs, r, &Floors::for_data(data)))
}

fn gaussian1d_estimates(
    xs: &[f64],
    r: &ResponsibilityMatrix,
    floors: &Floors,
) -> Vec<Estimate<Gaussian1DParams>> {
    let threshold = degenerate_threshold(r);
    let floor = floors.variance[0];
    (0..r.k())
        .map(|k| {
            let mass = r.mass(k);
            classify(mass, threshold, || {
                let mut sum = 0.0;
                for (i, &x) in xs.iter().enumerate() {
                    sum += r.get(i, k) * x;
                }
                let mu = sum / mass;
                let mut ss = 0.0;
                for (i, &x) in xs.iter().enumerate() {
                    let d = x - mu;
                    ss += r.get(i, k) * d * d;
                }
                Gaussian1DParams {
                    mu,
                    sigma2: (ss / mass).max(floor),
                }
            })
        })
        .collect()
}

/// Weighted mean vector and weighted scatter matrix per component,
/// symmetrized. Eigenvalues of the matrix scaled by the per-coordinate
/// variance floors are clipped at 1, and jitter is added only if the result
/// still fails to factorize.
pub fn m_step_mvn(data: &Dataset, r: &ResponsibilityMatrix) -> Result<Vec<Estimate<MvnParams>>> {
    let Dataset::Multivariate { dim, values } = data else {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: Family::Mvn,
        });
    };
    check_rows(data, r)?;
    mvn_estimates(*dim, values, r, &Floors::for_data(data))
}

fn mvn_estimates(
    dim: usize,
    values: &[f64],
    r: &ResponsibilityMatrix,
    floors: &Floors,
) -> Result<Vec<Estimate<MvnParams>>> {
    let threshold = degenerate_threshold(r);
    (0..r.k())
        .map(|k| {
            let mass = r.mass(k);
            let est = classify(mass, threshold, || {
                weighted_moments(dim, values, |i| r.get(i, k), mass)
            });
            let regularize = |(mu, sigma)| regularized_mvn(mu, sigma, &floors.variance);
            Ok(match est {
                Estimate::Fitted(m) => Estimate::Fitted(regularize(m)?),
                Estimate::Degenerate { mass, fallback } => Estimate::Degenerate {
                    mass,
                    fallback: fallback.map(regularize).transpose()?,
                },
            })
        })
        .collect()
}

fn weighted_moments(
    dim: usize,
    values: &[f64],
    weight: impl Fn(usize) -> f64,
    mass: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut mu = vec![0.0; dim];
    for (i, row) in values.chunks_exact(dim).enumerate() {
        let w = weight(i);
        for (m, &x) in mu.iter_mut().zip(row) {
            *m += w * x;
        }
    }
    for m in &mut mu {
        *m /= mass;
    }
    let mut sigma = vec![0.0; dim * dim];
    let mut diff = vec![0.0; dim];
    for (i, row) in values.chunks_exact(dim).enumerate() {
        let w = weight(i);
        for ((d, &x), &m) in diff.iter_mut().zip(row).zip(&mu) {
            *d = x - m;
        }
        for a in 0..dim {
            for b in a..dim {
                sigma[a * dim + b] += w * diff[a] * diff[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            let v = sigma[a * dim + b] / mass;
            sigma[a * dim + b] = v;
            sigma[b * dim + a] = v;
        }
    }
    (mu, sigma)
}

fn regularized_mvn(mu: Vec<f64>, mut sigma: Vec<f64>, floors: &[f64]) -> Result<MvnParams> {
    let dim = mu.len();
    symmetrize(&mut sigma, dim);
    clip_scaled_eigenvalues(&mut sigma, dim, &floors[..dim]);
    let (_, jitter) = Cholesky::factor_with_jitter(&sigma, dim)?;
    if jitter > 0.0 {
        for j in 0..dim {
            sigma[j * dim + j] += jitter;
        }
    }
    Ok(MvnParams { mu, sigma })
}

/// `λ̂_k = Σ_i γ̂_{i,k} x_i / Σ_i γ̂_{i,k}`, clamped below at [`LAMBDA_FLOOR`].
pub fn m_step_poisson(
    data: &Dataset,
    r: &ResponsibilityMatrix,
) -> Result<Vec<Estimate<PoissonParams>>> {
    let Dataset::Counts(table) = data else {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: Family::Poisson,
        });
    };
    check_rows(data, r)?;
    Ok(poisson_estimates(table.entries(), r))
}

fn poisson_estimates(
    entries: &[(u64, u64)],
    r: &ResponsibilityMatrix,
) -> Vec<Estimate<PoissonParams>> {
    let threshold = degenerate_threshold(r);
    (0..r.k())
        .map(|k| {
            let mass = r.mass(k);
            classify(mass, threshold, || {
                let mut sum = 0.0;
                for (i, &(v, c)) in entries.iter().enumerate() {
                    sum += c as f64 * r.get(i, k) * v as f64;
                }
                PoissonParams {
                    lambda: (sum / mass).max(LAMBDA_FLOOR),
                }
            })
        })
        .collect()
}

/// `Σ_i ln Σ_k w_k g_k(x_i)`; frequency-table rows count `count` times.
pub fn log_likelihood(data: &Dataset, model: &MixtureModel) -> Result<f64> {
    check_compatible(data, model)?;
    let prepared = PreparedModel::new(model)?;
    let mut buf = vec![0.0; model.k()];
    let mut total = 0.0;
    for i in 0..data.rows() {
        let m = data.multiplicity(i);
        if m == 0 {
            continue;
        }
        prepared.weighted_log_densities(data.row(i), &mut buf)?;
        total += m as f64 * log_sum_exp(&buf);
    }
    Ok(total)
}

fn check_compatible(data: &Dataset, model: &MixtureModel) -> Result<()> {
    if data.family() != model.family() {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: model.family(),
        });
    }
    if let Dataset::Multivariate { dim, .. } = data {
        if *dim != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: *dim,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    /// Abort the fit.
    Error,
    /// Redraw the component from the initialization distribution.
    #[default]
    Reinit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub k: usize,
    pub family: Family,
    /// Relative change in log-likelihood below which the fit has converged.
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub degenerate_policy: DegeneratePolicy,
}

impl FitConfig {
    pub fn new(family: Family, k: usize) -> Self {
        Self {
            k,
            family,
            tol: 1e-8,
            max_iters: 1000,
            restarts: 10,
            seed: 0,
            degenerate_policy: DegeneratePolicy::Reinit,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_policy(mut self, policy: DegeneratePolicy) -> Self {
        self.degenerate_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// 0 is the starting point.
    pub iter: usize,
    pub log_likelihood: f64,
    pub model: MixtureModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// Fewer observations than components.
    FewObservations { n: usize, k: usize },
}

/// One EM run from one starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartRun {
    pub restart: usize,
    pub model: MixtureModel,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub iters: usize,
    /// Degenerate components replaced by fresh draws.
    pub reinits: usize,
}

impl RestartRun {
    pub fn final_log_likelihood(&self) -> f64 {
        self.trace
            .last()
            .map_or(f64::NEG_INFINITY, |t| t.log_likelihood)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: MixtureModel,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub iters: usize,
    /// Index of the restart that was selected.
    pub best_of: usize,
    pub final_log_likelihood: f64,
    pub reinits: usize,
    pub rng_algorithm: &'static str,
    pub warnings: Vec<Warning>,
}

/// Run EM from `config.restarts` random starts (or once from `init`) and
/// keep the run with the highest final log-likelihood.
pub fn em_fit(
    data: &Dataset,
    config: &FitConfig,
    init: Option<&MixtureModel>,
) -> Result<FitResult> {
    let restarts = if init.is_some() { 1 } else { config.restarts };
    let runs = (0..restarts)
        .map(|r| fit_restart(data, config, init, r))
        .collect::<Result<Vec<_>>>()?;
    select_best(data, config, runs)
}

/// Pick the run with the highest final log-likelihood, lowest restart index
/// on ties.
pub fn select_best(
    data: &Dataset,
    config: &FitConfig,
    mut runs: Vec<RestartRun>,
) -> Result<FitResult> {
    runs.sort_by_key(|r| r.restart);
    let mut best: Option<RestartRun> = None;
    for run in runs {
        match &best {
            Some(b) if !(run.final_log_likelihood() > b.final_log_likelihood()) => {}
            _ => best = Some(run),
        }
    }
    let best = best.ok_or(Error::InvalidConfig("no restart was run"))?;
    let mut warnings = Vec::new();
    if data.len() < config.k {
        warnings.push(Warning::FewObservations {
            n: data.len(),
            k: config.k,
        });
    }
    Ok(FitResult {
        final_log_likelihood: best.final_log_likelihood(),
        model: best.model,
        trace: best.trace,
        converged: best.converged,
        iters: best.iters,
        best_of: best.restart,
        reinits: best.reinits,
        rng_algorithm: RNG_ALGORITHM,
        warnings,
    })
}

/// A single EM run. Random draws for restart `restart` come from stream
/// `(config.seed, restart)`, so runs are independent of each other and of
/// the order in which they execute.
pub fn fit_restart(
    data: &Dataset,
    config: &FitConfig,
    init: Option<&MixtureModel>,
    restart: usize,
) -> Result<RestartRun> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.family() != config.family {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: config.family,
        });
    }
    data.check_finite()
        .map_err(|_| Error::NonFiniteLikelihood { iteration: 0 })?;

    let mut rng = rng::stream(config.seed, restart as u64);
    let model = match init {
        Some(m) => {
            m.validate()?;
            check_compatible(data, m)?;
            if m.k() != config.k {
                return Err(Error::InvalidConfig(
                    "initial model has the wrong number of components",
                ));
            }
            m.clone()
        }
        None => draw_model(data, config.k, &mut rng)?,
    };
    Engine::new(data, config, rng).run(model, restart)
}

/// One EM iteration from `model`. Degenerate components are an error.
pub fn em_step(data: &Dataset, model: &MixtureModel) -> Result<MixtureModel> {
    check_compatible(data, model)?;
    let r = e_step(data, model)?;
    let floors = Floors::for_data(data);
    let estimates = m_step_all(data, &r, &floors)?;
    let components = estimates.resolve(model.components(), |k, mass| {
        Err(Error::DegenerateComponent { component: k, mass })
    })?;
    Ok(MixtureModel::from_parts(update_weights(&r), components))
}

struct Engine<'d> {
    data: &'d Dataset,
    config: &'d FitConfig,
    floors: Floors,
    rng: StreamRng,
    sampler: Option<ComponentSampler>,
}

enum FamilyEstimates {
    Gaussian1D(Vec<Estimate<Gaussian1DParams>>),
    Mvn(Vec<Estimate<MvnParams>>),
    Poisson(Vec<Estimate<PoissonParams>>),
}

impl FamilyEstimates {
    fn degenerate(&self) -> Vec<(usize, f64)> {
        fn scan<P>(v: &[Estimate<P>]) -> Vec<(usize, f64)> {
            v.iter()
                .enumerate()
                .filter_map(|(k, e)| match e {
                    Estimate::Degenerate { mass, .. } => Some((k, *mass)),
                    Estimate::Fitted(_) => None,
                })
                .collect()
        }
        match self {
            FamilyEstimates::Gaussian1D(v) => scan(v),
            FamilyEstimates::Mvn(v) => scan(v),
            FamilyEstimates::Poisson(v) => scan(v),
        }
    }

    /// Build components, using the closed-form fallback (or the previous
    /// parameters when there is none) for degenerate entries after consulting
    /// `on_degenerate`.
    fn resolve(
        self,
        previous: &Components,
        mut on_degenerate: impl FnMut(usize, f64) -> Result<()>,
    ) -> Result<Components> {
        fn take<P: Clone>(
            v: Vec<Estimate<P>>,
            prev: &[P],
            f: &mut impl FnMut(usize, f64) -> Result<()>,
        ) -> Result<Vec<P>> {
            v.into_iter()
                .enumerate()
                .map(|(k, e)| match e {
                    Estimate::Fitted(p) => Ok(p),
                    Estimate::Degenerate { mass, fallback } => {
                        f(k, mass)?;
                        Ok(fallback.unwrap_or_else(|| prev[k].clone()))
                    }
                })
                .collect()
        }
        Ok(match (self, previous) {
            (FamilyEstimates::Gaussian1D(v), Components::Gaussian1D(p)) => {
                Components::Gaussian1D(take(v, p, &mut on_degenerate)?)
            }
            (FamilyEstimates::Mvn(v), Components::Mvn(p)) => {
                Components::Mvn(take(v, p, &mut on_degenerate)?)
            }
            (FamilyEstimates::Poisson(v), Components::Poisson(p)) => {
                Components::Poisson(take(v, p, &mut on_degenerate)?)
            }
            _ => unreachable!("estimates follow the model family"),
        })
    }
}

fn m_step_all(
    data: &Dataset,
    r: &ResponsibilityMatrix,
    floors: &Floors,
) -> Result<FamilyEstimates> {
    Ok(match data {
        Dataset::Univariate(xs) => FamilyEstimates::Gaussian1D(gaussian1d_estimates(xs, r, floors)),
        Dataset::Multivariate { dim, values } => {
            FamilyEstimates::Mvn(mvn_estimates(*dim, values, r, floors)?)
        }
        Dataset::Counts(t) => FamilyEstimates::Poisson(poisson_estimates(t.entries(), r)),
    })
}

impl<'d> Engine<'d> {
    fn new(data: &'d Dataset, config: &'d FitConfig, rng: StreamRng) -> Self {
        Self {
            data,
            config,
            floors: Floors::for_data(data),
            rng,
            sampler: None,
        }
    }

    fn evaluate(
        &self,
        model: &MixtureModel,
        iteration: usize,
    ) -> Result<(ResponsibilityMatrix, f64)> {
        let (r, ll) = e_step_with_loglik(self.data, model)?;
        if !ll.is_finite() {
            return Err(Error::NonFiniteLikelihood { iteration });
        }
        Ok((r, ll))
    }

    fn run(mut self, mut model: MixtureModel, restart: usize) -> Result<RestartRun> {
        let (mut resp, mut ll) = self.evaluate(&model, 0)?;
        let mut trace = vec![TraceEntry {
            iter: 0,
            log_likelihood: ll,
            model: model.clone(),
        }];
        let mut converged = false;
        let mut iters = 0;
        let mut reinits = 0;

        for iter in 1..=self.config.max_iters {
            let estimates = m_step_all(self.data, &resp, &self.floors)?;
            let weights = update_weights(&resp);
            let degenerate = estimates.degenerate();

            let policy = self.config.degenerate_policy;
            let candidate =
                estimates.resolve(model.components(), |component, mass| match policy {
                    DegeneratePolicy::Error => Err(Error::DegenerateComponent { component, mass }),
                    DegeneratePolicy::Reinit => Ok(()),
                })?;
            let mut next = MixtureModel::from_parts(weights, candidate);
            let (mut next_resp, mut next_ll) = self.evaluate(&next, iter)?;

            if !degenerate.is_empty() {
                if let Some((m, r, l)) = self.try_reinit(&next, &degenerate, next_ll, iter)? {
                    next = m;
                    next_resp = r;
                    next_ll = l;
                    reinits += degenerate.len();
                }
            }

            let delta = (next_ll - ll).abs();
            model = next;
            resp = next_resp;
            let prev = ll;
            ll = next_ll;
            iters = iter;
            trace.push(TraceEntry {
                iter,
                log_likelihood: ll,
                model: model.clone(),
            });
            if delta == 0.0 || delta < self.config.tol * prev.abs() {
                converged = true;
                break;
            }
        }

        Ok(RestartRun {
            restart,
            model,
            trace,
            converged,
            iters,
            reinits,
        })
    }

    /// Redraw the degenerate components of `model`. The redraw is kept only
    /// if it does not lower the log-likelihood, so the ascent property holds.
    fn try_reinit(
        &mut self,
        model: &MixtureModel,
        degenerate: &[(usize, f64)],
        current_ll: f64,
        iter: usize,
    ) -> Result<Option<(MixtureModel, ResponsibilityMatrix, f64)>> {
        if self.sampler.is_none() {
            match ComponentSampler::new(self.data) {
                Ok(s) => self.sampler = Some(s),
                Err(_) => {
                    let (component, mass) = degenerate[0];
                    return Err(Error::DegenerateComponent { component, mass });
                }
            }
        }
        let sampler = self.sampler.as_ref().expect("sampler initialized above");
        let mut components = model.components().clone();
        for &(k, _) in degenerate {
            sampler.redraw(&mut components, k, &mut self.rng);
        }
        let redrawn = MixtureModel::from_parts(model.weights().to_vec(), components);
        let (r, ll) = self.evaluate(&redrawn, iter)?;
        Ok((ll >= current_ll).then_some((redrawn, r, ll)))
    }
}

/// Closed-form single-distribution maximum likelihood fit, returned as a
/// one-component mixture.
pub fn mle_single(data: &Dataset, family: Family) -> Result<MixtureModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.family() != family {
        return Err(Error::FamilyMismatch {
            data: data.family(),
            model: family,
        });
    }
    data.check_finite()?;
    let floors = Floors::for_data(data);
    let components = match data {
        Dataset::Univariate(xs) => {
            let n = xs.len() as f64;
            let mut sum = 0.0;
            for &x in xs {
                sum += x;
            }
            let mu = sum / n;
            let mut ss = 0.0;
            for &x in xs {
                ss += (x - mu) * (x - mu);
            }
            Components::Gaussian1D(vec![Gaussian1DParams {
                mu,
                sigma2: (ss / n).max(floors.variance[0]),
            }])
        }
        Dataset::Multivariate { dim, values } => {
            let n = (values.len() / dim) as f64;
            let (mu, sigma) = weighted_moments(*dim, values, |_| 1.0, n);
            Components::Mvn(vec![regularized_mvn(mu, sigma, &floors.variance)?])
        }
        Dataset::Counts(t) => {
            let mut sum = 0.0;
            for &(v, c) in t.entries() {
                sum += c as f64 * v as f64;
            }
            Components::Poisson(vec![PoissonParams {
                lambda: (sum / t.total() as f64).max(LAMBDA_FLOOR),
            }])
        }
    };
    Ok(MixtureModel::from_parts(vec![1.0], components))
}
