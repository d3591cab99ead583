//! Per-sample EM for isoform proportions and the averaging/pooling estimators
//! built on it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::read_model::GeneratingMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Stop once the log-likelihood improves by less than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting proportions; `None` means uniform.
    pub init: Option<Vec<f64>>,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            init: None,
        }
    }
}

/// Result of one EM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub tau: Vec<f64>,
    pub iterations: usize,
    /// Log-likelihood at the start and after every iteration.
    pub loglik: Vec<f64>,
    /// Iterations whose log-likelihood fell below the previous value by more
    /// than floating-point noise.
    pub monotonicity_violations: usize,
}

impl EmFit {
    pub fn final_loglik(&self) -> f64 {
        *self.loglik.last().expect("at least the initial value")
    }
}

fn loglik(h: &GeneratingMatrix, tau: &[f64]) -> f64 {
    h.rows()
        .map(|row| row.iter().zip(tau).map(|(a, b)| a * b).sum::<f64>().ln())
        .sum()
}

/// Maximum-likelihood proportions of one sample by EM.
pub fn em_single_sample(h: &GeneratingMatrix, cfg: &EmConfig) -> Result<EmFit> {
    let n_iso = h.n_isoforms();
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidInput("EM needs tol > 0 and max_iter >= 1".into()));
    }
    if h.n_reads() == 0 {
        return Err(Error::NoUsableReads);
    }
    let mut tau = match &cfg.init {
        Some(init) => {
            if init.len() != n_iso
                || init.iter().any(|&v| !(v >= 0.0))
                || (init.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidInput("EM init must lie on the simplex".into()));
            }
            init.clone()
        }
        None => vec![1.0 / n_iso as f64; n_iso],
    };
    if let Some(row) = h.rows().position(|r| r.iter().zip(&tau).all(|(a, b)| a * b <= 0.0)) {
        return Err(Error::ZeroRow { row });
    }
    let n = h.n_reads() as f64;
    let mut trace = vec![loglik(h, &tau)];
    let mut violations = 0;
    let mut next = vec![0.0; n_iso];
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for row in h.rows() {
            let denom: f64 = row.iter().zip(&tau).map(|(a, b)| a * b).sum();
            for ((acc, hij), tj) in next.iter_mut().zip(row).zip(&tau) {
                *acc += hij * tj / denom;
            }
        }
        next.iter_mut().for_each(|v| *v /= n);
        std::mem::swap(&mut tau, &mut next);
        iterations += 1;
        let ll = loglik(h, &tau);
        let prev = *trace.last().unwrap();
        if ll < prev - 1e-12 * prev.abs().max(1.0) {
            violations += 1;
        }
        debug_assert!(
            ll >= prev - 1e-9 * prev.abs().max(1.0),
            "EM log-likelihood decreased: {prev} -> {ll}"
        );
        trace.push(ll);
        if ll - prev < cfg.tol {
            break;
        }
    }
    Ok(EmFit {
        tau,
        iterations,
        loglik: trace,
        monotonicity_violations: violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "AVG")]
    Avg,
    #[serde(rename = "AVG*")]
    AvgOracle,
    #[serde(rename = "POOL")]
    Pool,
    #[serde(rename = "POOL*")]
    PoolOracle,
    #[serde(rename = "MSIQa")]
    MsiqA,
    #[serde(rename = "MSIQp")]
    MsiqP,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::AvgOracle,
        EstimatorKind::MsiqA,
        EstimatorKind::Avg,
        EstimatorKind::PoolOracle,
        EstimatorKind::MsiqP,
        EstimatorKind::Pool,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Avg => "AVG",
            EstimatorKind::AvgOracle => "AVG*",
            EstimatorKind::Pool => "POOL",
            EstimatorKind::PoolOracle => "POOL*",
            EstimatorKind::MsiqA => "MSIQa",
            EstimatorKind::MsiqP => "MSIQp",
        }
    }

    pub fn needs_truth(self) -> bool {
        matches!(self, EstimatorKind::AvgOracle | EstimatorKind::PoolOracle)
    }

    pub fn needs_theta(self) -> bool {
        matches!(self, EstimatorKind::MsiqA | EstimatorKind::MsiqP)
    }

    fn pools(self) -> bool {
        matches!(
            self,
            EstimatorKind::Pool | EstimatorKind::PoolOracle | EstimatorKind::MsiqP
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "avg" => EstimatorKind::Avg,
            "avg*" | "avg-oracle" => EstimatorKind::AvgOracle,
            "pool" => EstimatorKind::Pool,
            "pool*" | "pool-oracle" => EstimatorKind::PoolOracle,
            "msiqa" => EstimatorKind::MsiqA,
            "msiqp" => EstimatorKind::MsiqP,
            _ => return Err(Error::InvalidInput(format!("unknown estimator {s:?}"))),
        })
    }
}

/// Inputs shared by all EM-based estimators of one gene.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorInputs<'a> {
    pub h: &'a [GeneratingMatrix],
    pub cfg: &'a EmConfig,
    pub true_e: Option<&'a [bool]>,
    pub theta_hat: Option<&'a [f64]>,
    /// Samples with `theta_hat > threshold` are treated as informative.
    pub threshold: f64,
}

/// Estimated proportions plus the EM runs behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub kind: EstimatorKind,
    pub alpha_hat: Vec<f64>,
    pub samples_used: Vec<usize>,
    pub fits: Vec<EmFit>,
}

/// Samples selected by `theta_hat > threshold`, or the arg-max sample when
/// none passes.
pub fn msiq_selected(theta_hat: &[f64], threshold: f64) -> Vec<usize> {
    let chosen: Vec<usize> = (0..theta_hat.len())
        .filter(|&d| theta_hat[d] > threshold)
        .collect();
    if !chosen.is_empty() || theta_hat.is_empty() {
        return chosen;
    }
    let mut best = 0;
    for (d, &t) in theta_hat.iter().enumerate() {
        if t > theta_hat[best] {
            best = d;
        }
    }
    vec![best]
}

fn selected_samples(kind: EstimatorKind, inputs: &EstimatorInputs<'_>) -> Result<Vec<usize>> {
    let n = inputs.h.len();
    let all = || (0..n).collect::<Vec<_>>();
    if kind.needs_truth() {
        let truth = inputs
            .true_e
            .ok_or_else(|| Error::MissingInput(format!("{kind} needs the true informative set")))?;
        if truth.len() != n {
            return Err(Error::InvalidInput("true_E length differs from sample count".into()));
        }
        let chosen: Vec<usize> = (0..n).filter(|&d| truth[d]).collect();
        if chosen.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{kind} needs at least one informative sample"
            )));
        }
        Ok(chosen)
    } else if kind.needs_theta() {
        let theta = inputs
            .theta_hat
            .ok_or_else(|| Error::MissingInput(format!("{kind} needs theta_hat")))?;
        if theta.len() != n {
            return Err(Error::InvalidInput("theta_hat length differs from sample count".into()));
        }
        Ok(msiq_selected(theta, inputs.threshold))
    } else {
        Ok(all())
    }
}

/// Averages per-sample EM fits (given in sample order) over `samples`.
fn average(fits: &[&EmFit]) -> Vec<f64> {
    let n_iso = fits[0].tau.len();
    let mut out = vec![0.0; n_iso];
    for f in fits {
        out.iter_mut().zip(&f.tau).for_each(|(o, t)| *o += t);
    }
    out.iter_mut().for_each(|o| *o /= fits.len() as f64);
    out
}

pub fn estimate(kind: EstimatorKind, inputs: &EstimatorInputs<'_>) -> Result<Estimate> {
    if inputs.h.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let samples = selected_samples(kind, inputs)?;
    if kind.pools() {
        let pooled = GeneratingMatrix::concat(samples.iter().map(|&d| &inputs.h[d]))?;
        let fit = em_single_sample(&pooled, inputs.cfg)?;
        Ok(Estimate {
            kind,
            alpha_hat: fit.tau.clone(),
            samples_used: samples,
            fits: vec![fit],
        })
    } else {
        let fits = samples
            .iter()
            .map(|&d| em_single_sample(&inputs.h[d], inputs.cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Estimate {
            kind,
            alpha_hat: average(&fits.iter().collect::<Vec<_>>()),
            samples_used: samples,
            fits,
        })
    }
}

/// All requested estimators, sharing the per-sample EM fits among the
/// averaging kinds.
pub fn estimate_all(kinds: &[EstimatorKind], inputs: &EstimatorInputs<'_>) -> Result<Vec<Estimate>> {
    let needs_per_sample = kinds.iter().any(|k| !k.pools());
    let per_sample = if needs_per_sample {
        Some(
            inputs
                .h
                .iter()
                .map(|m| em_single_sample(m, inputs.cfg))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    kinds
        .iter()
        .map(|&kind| {
            if kind.pools() {
                return estimate(kind, inputs);
            }
            let samples = selected_samples(kind, inputs)?;
            let all = per_sample.as_ref().expect("computed above");
            let fits: Vec<&EmFit> = samples.iter().map(|&d| &all[d]).collect();
            Ok(Estimate {
                kind,
                alpha_hat: average(&fits),
                fits: fits.into_iter().cloned().collect(),
                samples_used: samples,
            })
        })
        .collect()
}
