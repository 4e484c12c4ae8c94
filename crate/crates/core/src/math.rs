//! Small numeric helpers shared by the density and EM code.

/// `ln(sum(exp(v)))` without overflow. Empty input and all `-inf` give `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

/// `ln(x!)` via the log-gamma function.
pub fn ln_factorial(x: u64) -> f64 {
    if x < 2 {
        0.0
    } else {
        libm::lgamma(x as f64 + 1.0)
    }
}

/// Index of the maximum, lowest index on ties. `None` for empty input.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
