//! Log-space helpers shared by the sampler and the exact enumerator.

pub use statrs::function::gamma::ln_gamma;

/// `ln B(x) = sum ln Γ(x_j) - ln Γ(sum x_j)`, the log multivariate beta function.
pub fn ln_multi_beta(x: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut acc = 0.0;
    for v in x {
        acc += ln_gamma(v);
        sum += v;
    }
    acc - ln_gamma(sum)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `1 / (1 + exp(-x))` without overflow for large |x|.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
