//! Per-iteration trace CSV: `iter,loglik,<parameter columns>`.

use std::fmt::Write as _;

use mixfit_core::{Components, MixtureModel, TraceEntry};

use crate::fmt_f64;

pub fn header(model: &MixtureModel) -> Vec<String> {
    let k = model.k();
    let mut cols = vec!["iter".to_owned(), "loglik".to_owned()];
    cols.extend((1..=k).map(|i| format!("w_{i}")));
    match model.components() {
        Components::Gaussian1D(_) => {
            for i in 1..=k {
                cols.push(format!("mu_{i}"));
                cols.push(format!("sigma2_{i}"));
            }
        }
        Components::Mvn(c) => {
            let d = c[0].dim();
            for i in 1..=k {
                cols.extend((1..=d).map(|a| format!("mu_{i}_{a}")));
                for a in 1..=d {
                    cols.extend((a..=d).map(|b| format!("sigma_{i}_{a}_{b}")));
                }
            }
        }
        Components::Poisson(_) => cols.extend((1..=k).map(|i| format!("lambda_{i}"))),
    }
    cols
}

fn params(model: &MixtureModel) -> Vec<f64> {
    let mut v = model.weights().to_vec();
    match model.components() {
        Components::Gaussian1D(c) => {
            for p in c {
                v.push(p.mu);
                v.push(p.sigma2);
            }
        }
        Components::Mvn(c) => {
            for p in c {
                let d = p.dim();
                v.extend_from_slice(&p.mu);
                for a in 0..d {
                    v.extend((a..d).map(|b| p.cov(a, b)));
                }
            }
        }
        Components::Poisson(c) => v.extend(c.iter().map(|p| p.lambda)),
    }
    v
}

/// One row per trace entry, iteration 0 included.
pub fn to_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    let Some(first) = trace.first() else {
        return out;
    };
    out.push_str(&header(&first.model).join(","));
    out.push('\n');
    for t in trace {
        let _ = write!(out, "{},{}", t.iter, fmt_f64(t.log_likelihood));
        for p in params(&t.model) {
            out.push(',');
            out.push_str(&fmt_f64(p));
        }
        out.push('\n');
    }
    out
}
