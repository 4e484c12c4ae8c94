//! Command implementations, independent of argument parsing.

use std::fmt::Write as _;
use std::thread;

use mixfit_core::{
    em::select_best, fit_restart, label_observation, log_likelihood, mle_single, Dataset,
    DegeneratePolicy, Family, FitConfig, FitResult, LabelRule, MixtureModel, Observation,
    TraceEntry,
};

use crate::data_file::{DataFile, DataFormat};
use crate::error::{CliError, Result};
use crate::fmt_f64;
use crate::model_file::{Metadata, ModelFile};
use crate::trace;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub config: FitConfig,
    /// Worker threads for restarts. Results do not depend on this.
    pub threads: usize,
    /// Sort output components by location.
    pub sort: bool,
    pub baseline_mle: bool,
}

impl FitOptions {
    pub fn new(config: FitConfig) -> Self {
        Self {
            config,
            threads: 1,
            sort: true,
            baseline_mle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    /// Components already reordered when sorting is on.
    pub fit: FitResult,
    pub model_file: ModelFile,
    pub trace_csv: String,
    pub baseline: Option<ModelFile>,
}

/// EM restarts spread over `threads` workers. Each restart draws from its
/// own stream, and selection happens after all runs finish, so the result
/// is the same for any thread count.
pub fn fit_with_threads(
    data: &Dataset,
    config: &FitConfig,
    threads: usize,
) -> mixfit_core::Result<FitResult> {
    let threads = threads.clamp(1, config.restarts.max(1));
    if threads == 1 {
        return mixfit_core::em_fit(data, config, None);
    }
    let runs = thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    (t..config.restarts)
                        .step_by(threads)
                        .map(|r| fit_restart(data, config, None, r))
                        .collect::<mixfit_core::Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("restart worker panicked"))
            .collect::<mixfit_core::Result<Vec<_>>>()
    })?;
    select_best(data, config, runs.into_iter().flatten().collect())
}

pub fn run_fit(data: &Dataset, opts: &FitOptions) -> Result<FitOutput> {
    let config = &opts.config;
    let mut fit = fit_with_threads(data, config, opts.threads)?;
    if opts.sort {
        let (sorted, order) = fit.model.sorted_by_location();
        fit.model = sorted;
        for TraceEntry { model, .. } in &mut fit.trace {
            *model = model.permuted(&order);
        }
    }
    let model_file = ModelFile::from_fit(&fit, &fit.model, config);
    let trace_csv = trace::to_csv(&fit.trace);
    let baseline = if opts.baseline_mle {
        let mle = mle_single(data, config.family)?;
        let ll = log_likelihood(data, &mle)?;
        Some(ModelFile::new(
            &mle,
            Metadata {
                seed: config.seed,
                tol: config.tol,
                iters: 0,
                converged: true,
                rng_algorithm: fit.rng_algorithm.to_owned(),
                final_log_likelihood: ll,
            },
        ))
    } else {
        None
    };
    Ok(FitOutput {
        fit,
        model_file,
        trace_csv,
        baseline,
    })
}

pub fn parse_policy(s: &str) -> Result<DegeneratePolicy> {
    match s {
        "reinit" => Ok(DegeneratePolicy::Reinit),
        "error" => Ok(DegeneratePolicy::Error),
        _ => Err(CliError::Usage(format!("unknown degenerate policy `{s}`"))),
    }
}

pub fn parse_rule(s: &str) -> Result<LabelRule> {
    match s {
        "density" => Ok(LabelRule::ComponentDensity),
        "posterior" => Ok(LabelRule::PosteriorResponsibility),
        _ => Err(CliError::Usage(format!("unknown label rule `{s}`"))),
    }
}

fn check_family(data: &DataFile, model: &MixtureModel) -> Result<()> {
    let fam = data.dataset.family();
    if fam != model.family() {
        return Err(CliError::Usage(format!(
            "data is {fam} but the model is {}",
            model.family()
        )));
    }
    if let Dataset::Multivariate { dim, .. } = data.dataset {
        if dim != model.dim() {
            return Err(CliError::Usage(format!(
                "data has {dim} columns but the model has dimension {}",
                model.dim()
            )));
        }
    }
    Ok(())
}

/// `index,label` with one row per input row, in input order.
pub fn run_cluster(data: &DataFile, model: &MixtureModel, rule: LabelRule) -> Result<String> {
    check_family(data, model)?;
    let labels: Vec<usize> = match (&data.raw_counts, data.format) {
        (Some(raw), DataFormat::RawCsv) => raw
            .iter()
            .map(|&c| label_observation(Observation::Count(c), model, rule))
            .collect::<mixfit_core::Result<_>>()?,
        _ => mixfit_core::assign_labels(&data.dataset, model, rule)?.labels,
    };
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    pub steps: usize,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || CliError::Usage(format!("grid must be MIN:MAX:STEPS, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts.as_slice() else {
            return Err(bad());
        };
        let min: f64 = min.trim().parse().map_err(|_| bad())?;
        let max: f64 = max.trim().parse().map_err(|_| bad())?;
        let steps: usize = steps.trim().parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite() && max > min && steps > 0) {
            return Err(bad());
        }
        Ok(Self { min, max, steps })
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.max - self.min) / self.steps as f64;
        (0..=self.steps).map(move |i| {
            if i == self.steps {
                self.max
            } else {
                self.min + h * i as f64
            }
        })
    }

    /// The grid as non-negative integers, if every point is one.
    pub fn integer_points(&self) -> Option<Vec<u64>> {
        let span = self.max - self.min;
        let is_int = |v: f64| v.fract() == 0.0 && v >= 0.0 && v < 2f64.powi(53);
        if !is_int(self.min)
            || !is_int(self.max)
            || !(span as u64).is_multiple_of(self.steps as u64)
        {
            return None;
        }
        let step = span as u64 / self.steps as u64;
        Some(
            (0..=self.steps as u64)
                .map(|i| self.min as u64 + i * step)
                .collect(),
        )
    }
}

pub enum EvalPoints<'a> {
    Grid(Grid),
    File(&'a DataFile),
}

/// Columns `x, component_1..K, mixture`, where `component_k = w_k g_k(x)` and
/// `mixture` is their sum. Multivariate models get `x_1..x_d`.
pub fn run_eval(model: &MixtureModel, points: EvalPoints<'_>) -> Result<String> {
    let k = model.k();
    let mut out = String::new();
    if model.family() == Family::Mvn {
        let names: Vec<String> = (1..=model.dim()).map(|j| format!("x_{j}")).collect();
        out.push_str(&names.join(","));
    } else {
        out.push('x');
    }
    for i in 1..=k {
        let _ = write!(out, ",component_{i}");
    }
    out.push_str(",mixture\n");

    let mut logs = vec![0.0; k];
    let mut row = |x: Observation<'_>, label: String, out: &mut String| -> Result<()> {
        model.component_log_densities(x, &mut logs)?;
        out.push_str(&label);
        let mut total = 0.0;
        for (w, lg) in model.weights().iter().zip(&logs) {
            let v = if *w > 0.0 { w * lg.exp() } else { 0.0 };
            total += v;
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push(',');
        out.push_str(&fmt_f64(total));
        out.push('\n');
        Ok(())
    };

    match points {
        EvalPoints::Grid(grid) => match model.family() {
            Family::Poisson => {
                let xs = grid.integer_points().ok_or_else(|| {
                    CliError::Usage("Poisson models need a grid of non-negative integers".into())
                })?;
                for x in xs {
                    row(Observation::Count(x), x.to_string(), &mut out)?;
                }
            }
            Family::Gaussian1D => {
                for x in grid.points() {
                    row(Observation::Real(x), fmt_f64(x), &mut out)?;
                }
            }
            Family::Mvn => {
                return Err(CliError::Usage(
                    "multivariate models are evaluated with --points".into(),
                ))
            }
        },
        EvalPoints::File(data) => {
            check_family(data, model)?;
            match (&data.raw_counts, &data.dataset) {
                (Some(raw), _) if data.format == DataFormat::RawCsv => {
                    for &c in raw {
                        row(Observation::Count(c), c.to_string(), &mut out)?;
                    }
                }
                (_, ds) => {
                    for x in ds.iter() {
                        let label = match x {
                            Observation::Real(v) => fmt_f64(v),
                            Observation::Vector(v) => {
                                v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(",")
                            }
                            Observation::Count(c) => c.to_string(),
                        };
                        row(x, label, &mut out)?;
                    }
                }
            }
        }
    }
    Ok(out)
}
