//! Embedded oracle suite run by `mixfit selfcheck`.

use std::fmt::Write as _;

use mixfit_core::{
    e_step, em_fit, em_step, gaussian_log_pdf, mixture_log_pdf, mle_single, poisson_log_pmf,
    Components, Dataset, Family, FitConfig, FreqTable, Gaussian1DParams, MixtureModel, Observation,
    PoissonParams,
};

use crate::synth::poisson_example_table;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<String, String>) -> CheckResult {
    match outcome {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, expected {want} ± {tol}"))
    }
}

/// Target values for the three-Poisson example fit, sorted by rate.
pub const POISSON_EXAMPLE_RATES: [f64; 3] = [1.66, 6.72, 12.85];
pub const POISSON_EXAMPLE_WEIGHTS: [f64; 3] = [0.328, 0.256, 0.416];

pub fn run_embedded() -> Vec<CheckResult> {
    run_with_table(&poisson_example_table())
}

/// All checks, with the Poisson reproduction run against `table`.
pub fn run_with_table(table: &FreqTable) -> Vec<CheckResult> {
    vec![
        check("component-densities", component_densities()),
        check("em-iteration-oracle", em_iteration_oracle()),
        check("k1-mle-reduction", k1_reduction()),
        check("poisson-reproduction", poisson_reproduction(table)),
    ]
}

pub fn report(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {}: {}", r.name, r.detail);
    }
    out
}

fn component_densities() -> Result<String, String> {
    let std_normal = Gaussian1DParams {
        mu: 0.0,
        sigma2: 1.0,
    };
    let v = gaussian_log_pdf(0.0, &std_normal).map_err(|e| e.to_string())?;
    close("ln φ(0)", v, -0.918_938_533_204_672_7, 1e-14)?;
    let v = poisson_log_pmf(3, &PoissonParams { lambda: 2.0 }).map_err(|e| e.to_string())?;
    close("ln P(3; 2)", v, -1.712_317_927_548_219, 1e-14)?;
    Ok("log-density closed forms".into())
}

/// One iteration on four points against hand-derived values (40-digit
/// arithmetic).
fn em_iteration_oracle() -> Result<String, String> {
    let data = Dataset::univariate(vec![-1.0, 0.5, 2.0, 3.5]);
    let init = MixtureModel::gaussian1d(
        vec![0.4, 0.6],
        vec![
            Gaussian1DParams {
                mu: 0.0,
                sigma2: 1.0,
            },
            Gaussian1DParams {
                mu: 3.0,
                sigma2: 2.0,
            },
        ],
    )
    .map_err(|e| e.to_string())?;
    let gamma = [
        0.968_964_867_398_298_5,
        0.798_767_423_405_590_4,
        0.140_772_149_202_981_18,
        0.002_190_589_681_670_563,
    ];
    let r = e_step(&data, &init).map_err(|e| e.to_string())?;
    for (i, g) in gamma.iter().enumerate() {
        close("γ", r.get(i, 0), *g, 1e-10)?;
    }
    let next = em_step(&data, &init).map_err(|e| e.to_string())?;
    let Components::Gaussian1D(c) = next.components() else {
        return Err("family changed".into());
    };
    close("μ₁", c[0].mu, -0.146_737_071_613_881_05, 1e-10)?;
    close("σ₁²", c[0].sigma2, 0.898_855_848_015_156_8, 1e-10)?;
    close("μ₂", c[1].mu, 2.527_333_188_996_593_7, 1e-10)?;
    close("σ₂²", c[1].sigma2, 1.146_872_362_504_583_6, 1e-10)?;
    close("w₁", next.weights()[0], 0.477_673_757_422_135_2, 1e-10)?;
    Ok("γ, μ, σ², w within 1e-10".into())
}

fn k1_reduction() -> Result<String, String> {
    let data = Dataset::univariate(vec![-2.0, 0.5, 1.0, 4.25, 7.0, 3.0]);
    let fit = em_fit(
        &data,
        &FitConfig::new(Family::Gaussian1D, 1).with_restarts(2),
        None,
    )
    .map_err(|e| e.to_string())?;
    let mle = mle_single(&data, Family::Gaussian1D).map_err(|e| e.to_string())?;
    let (Components::Gaussian1D(a), Components::Gaussian1D(b)) =
        (fit.model.components(), mle.components())
    else {
        return Err("family changed".into());
    };
    close("μ", a[0].mu, b[0].mu, 1e-10)?;
    close("σ²", a[0].sigma2, b[0].sigma2, 1e-10)?;
    Ok(format!("converged in {} iterations", fit.iters))
}

fn poisson_reproduction(table: &FreqTable) -> Result<String, String> {
    let data = Dataset::freq_table(table.clone());
    let config = FitConfig::new(Family::Poisson, 3)
        .with_restarts(10)
        .with_tol(1e-8);
    let fit = em_fit(&data, &config, None).map_err(|e| e.to_string())?;
    let (model, _) = fit.model.sorted_by_location();
    let Components::Poisson(c) = model.components() else {
        return Err("family changed".into());
    };
    for k in 0..3 {
        close("λ", c[k].lambda, POISSON_EXAMPLE_RATES[k], 0.1)?;
        close("w", model.weights()[k], POISSON_EXAMPLE_WEIGHTS[k], 0.02)?;
    }
    let mass: f64 = (0..=200u64)
        .map(|x| mixture_log_pdf(Observation::Count(x), &model).map(f64::exp))
        .sum::<mixfit_core::Result<f64>>()
        .map_err(|e| e.to_string())?;
    close("Σ pmf", mass, 1.0, 1e-9)?;
    Ok(format!(
        "λ = ({:.2}, {:.2}, {:.2}), w = ({:.3}, {:.3}, {:.3})",
        c[0].lambda,
        c[1].lambda,
        c[2].lambda,
        model.weights()[0],
        model.weights()[1],
        model.weights()[2]
    ))
}
