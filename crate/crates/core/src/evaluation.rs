//! Relative estimation error and scenario × setting sweeps over a gene corpus.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{estimate_all, EmConfig, EstimatorInputs, EstimatorKind};
use crate::error::{Error, Result};
use crate::gene_model::GeneModel;
use crate::gibbs::{run_chain, stream_seed, ChainConfig, Hyperparameters, PriorNormalization};
use crate::read_model::{generating_matrix, FragmentLengthModel, GeneratingMatrix};
use crate::simulator::{gen_proportions, simulate_gene, ScenarioSpec, SimConfig};

/// How coordinates with a true proportion of zero enter the REE.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum ZeroTruthPolicy {
    /// Leave them out and count them.
    #[default]
    Skip,
    /// Add a fixed amount whenever the estimate is nonzero there.
    Penalty(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReeValue {
    pub value: f64,
    /// Zero-truth coordinates that were skipped or penalized.
    pub zero_truth: usize,
}

/// `sum_j |alpha_j - alpha_hat_j| / alpha_j`.
pub fn ree(alpha_true: &[f64], alpha_hat: &[f64]) -> Result<f64> {
    Ok(ree_with_policy(alpha_true, alpha_hat, ZeroTruthPolicy::Skip)?.value)
}

pub fn ree_with_policy(
    alpha_true: &[f64],
    alpha_hat: &[f64],
    policy: ZeroTruthPolicy,
) -> Result<ReeValue> {
    if alpha_true.len() != alpha_hat.len() {
        return Err(Error::InvalidInput(format!(
            "REE of vectors with lengths {} and {}",
            alpha_true.len(),
            alpha_hat.len()
        )));
    }
    let mut value = 0.0;
    let mut zero_truth = 0;
    for (&a, &b) in alpha_true.iter().zip(alpha_hat) {
        if a > 0.0 {
            value += (a - b).abs() / a;
        } else if b != 0.0 {
            zero_truth += 1;
            if let ZeroTruthPolicy::Penalty(p) = policy {
                value += p;
            }
        }
    }
    Ok(ReeValue { value, zero_truth })
}

/// Fragment/read length pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub id: u8,
    pub frag_mean: f64,
    pub read_len: u64,
}

impl Setting {
    /// The four standard settings: (150, 50), (250, 50), (150, 100), (250, 100).
    pub fn standard(id: u8) -> Result<Self> {
        let (frag_mean, read_len) = match id {
            1 => (150.0, 50),
            2 => (250.0, 50),
            3 => (150.0, 100),
            4 => (250.0, 100),
            _ => return Err(Error::InvalidInput(format!("setting must be 1..=4, got {id}"))),
        };
        Ok(Self {
            id,
            frag_mean,
            read_len,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_samples: usize,
    pub n_reads: usize,
    pub frag_sd: f64,
    pub replicates: usize,
    pub seed: u64,
    pub chain: ChainConfig,
    pub em: EmConfig,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub normalization: PriorNormalization,
    pub threshold: f64,
    /// Use these gene-level proportions instead of drawing them. Outlier
    /// proportions are still random.
    pub fixed_alpha: Option<Vec<f64>>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_samples: 10,
            n_reads: 500,
            frag_sd: 10.0,
            replicates: 1,
            seed: 1,
            chain: ChainConfig::default(),
            em: EmConfig::default(),
            lambda: 1.0,
            a: 1.0,
            b: 1.0,
            normalization: PriorNormalization::default(),
            threshold: 0.5,
            fixed_alpha: None,
            workers: 0,
        }
    }
}

pub const MSIQ_LABEL: &str = "MSIQ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReeRow {
    pub gene_id: String,
    pub replicate: usize,
    pub scenario: u8,
    pub setting: u8,
    pub estimator: String,
    pub ree: f64,
    pub zero_truth: usize,
    /// 0-based samples the estimate drew on.
    pub samples_used: Vec<usize>,
}

/// Informative-group posteriors of one chain next to the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub gene_id: String,
    pub replicate: usize,
    pub scenario: u8,
    pub setting: u8,
    pub theta_hat: Vec<f64>,
    pub true_e: Vec<bool>,
    pub alpha: Vec<f64>,
    pub alpha_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub gene_id: String,
    pub replicate: usize,
    pub scenario: u8,
    pub setting: u8,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: u8,
    pub setting: u8,
    pub estimator: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReeReport {
    pub rows: Vec<ReeRow>,
    pub theta: Vec<ThetaRow>,
    pub failures: Vec<FailureRow>,
    pub aggregates: Vec<Aggregate>,
    pub em_runs: usize,
    pub em_monotonicity_violations: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median, quartiles and mean per (scenario, setting, estimator).
pub fn aggregate(rows: &[ReeRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(u8, u8, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.scenario, r.setting, r.estimator.clone()))
            .or_default()
            .push(r.ree);
    }
    groups
        .into_iter()
        .map(|((scenario, setting, estimator), mut v)| {
            v.sort_by(|a, b| a.total_cmp(b));
            Aggregate {
                scenario,
                setting,
                estimator,
                n: v.len(),
                median: quantile(&v, 0.5),
                q1: quantile(&v, 0.25),
                q3: quantile(&v, 0.75),
                mean: v.iter().sum::<f64>() / v.len() as f64,
            }
        })
        .collect()
}

impl ReeReport {
    pub fn aggregate_for(&self, scenario: u8, setting: u8, estimator: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.scenario == scenario && a.setting == setting && a.estimator == estimator)
    }

    /// One row per gene × replicate × scenario × setting × estimator.
    pub fn to_tsv(&self, provenance: &str) -> String {
        let mut out = format!("# provenance: {provenance}\n");
        out.push_str("gene_id\treplicate\tscenario\tsetting\testimator\tree\tzero_truth\tsamples_used\n");
        for r in &self.rows {
            let used: Vec<String> = r.samples_used.iter().map(|d| (d + 1).to_string()).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.gene_id,
                r.replicate,
                r.scenario,
                r.setting,
                r.estimator,
                r.ree,
                r.zero_truth,
                used.join(",")
            );
        }
        out
    }
}

/// Outcome of one (gene, replicate) unit across all scenarios and settings.
struct UnitOutcome {
    rows: Vec<ReeRow>,
    theta: Vec<ThetaRow>,
    failures: Vec<FailureRow>,
    em_runs: usize,
    em_violations: usize,
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[allow(clippy::too_many_arguments)]
fn run_case(
    gene: &GeneModel,
    replicate: usize,
    proportions: &crate::simulator::Proportions,
    scenario: u8,
    setting: &Setting,
    cfg: &SweepConfig,
    seed: u64,
    out: &mut UnitOutcome,
) -> Result<()> {
    let spec = ScenarioSpec::with_samples(scenario, cfg.n_samples)?;
    let sim_cfg = SimConfig {
        n_reads: cfg.n_reads,
        frag_mean: setting.frag_mean,
        frag_sd: cfg.frag_sd,
        read_len: setting.read_len,
        strict: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sim = simulate_gene(gene, proportions, &spec, &sim_cfg, &mut rng)?;
    let flm = FragmentLengthModel::new(setting.frag_mean, cfg.frag_sd)?;
    let h: Vec<GeneratingMatrix> = sim
        .samples
        .iter()
        .map(|s| generating_matrix(&s.reads, gene, &flm).map(|o| o.matrix))
        .collect::<Result<_>>()?;

    let hyper = Hyperparameters::symmetric(gene.num_isoforms(), cfg.lambda, cfg.a, cfg.b)
        .with_normalization(cfg.normalization);
    let chain_cfg = ChainConfig {
        seed: mix(seed, 0xC4A1),
        keep_trace: false,
        ..cfg.chain
    };
    let summary = run_chain(&h, &hyper, &chain_cfg)?;
    let inputs = EstimatorInputs {
        h: &h,
        cfg: &cfg.em,
        true_e: Some(&sim.design.true_e),
        theta_hat: Some(&summary.theta_hat),
        threshold: cfg.threshold,
    };
    let estimates = estimate_all(&EstimatorKind::ALL, &inputs)?;

    let alpha = &proportions.alpha;
    let row = |estimator: &str, alpha_hat: &[f64], used: Vec<usize>| -> Result<ReeRow> {
        let r = ree_with_policy(alpha, alpha_hat, ZeroTruthPolicy::Skip)?;
        Ok(ReeRow {
            gene_id: gene.gene_id().to_string(),
            replicate,
            scenario,
            setting: setting.id,
            estimator: estimator.to_string(),
            ree: r.value,
            zero_truth: r.zero_truth,
            samples_used: used,
        })
    };
    out.rows
        .push(row(MSIQ_LABEL, &summary.alpha_hat, (0..cfg.n_samples).collect())?);
    for est in &estimates {
        out.rows
            .push(row(est.kind.label(), &est.alpha_hat, est.samples_used.clone())?);
        for fit in &est.fits {
            out.em_runs += 1;
            out.em_violations += fit.monotonicity_violations;
        }
    }
    out.theta.push(ThetaRow {
        gene_id: gene.gene_id().to_string(),
        replicate,
        scenario,
        setting: setting.id,
        theta_hat: summary.theta_hat,
        true_e: sim.design.true_e,
        alpha: alpha.clone(),
        alpha_hat: summary.alpha_hat,
    });
    Ok(())
}

fn run_unit(
    gene: &GeneModel,
    gene_index: usize,
    replicate: usize,
    scenarios: &[u8],
    settings: &[Setting],
    cfg: &SweepConfig,
) -> UnitOutcome {
    let unit_seed = mix(stream_seed(cfg.seed, gene_index as u64), replicate as u64);
    let mut out = UnitOutcome {
        rows: Vec::new(),
        theta: Vec::new(),
        failures: Vec::new(),
        em_runs: 0,
        em_violations: 0,
    };
    // Proportions depend only on (gene, replicate); every scenario and
    // setting of the unit shares them.
    let mut rng = ChaCha8Rng::seed_from_u64(unit_seed);
    let drawn = gen_proportions(gene.num_isoforms(), &mut rng).and_then(|mut p| {
        if let Some(alpha) = &cfg.fixed_alpha {
            if alpha.len() != p.alpha.len() {
                return Err(Error::InvalidInput(format!(
                    "fixed alpha has {} entries, gene has {} isoforms",
                    alpha.len(),
                    p.alpha.len()
                )));
            }
            p.alpha = alpha.clone();
        }
        Ok(p)
    });
    let proportions = match drawn {
        Ok(p) => p,
        Err(e) => {
            for &scenario in scenarios {
                for s in settings {
                    out.failures.push(FailureRow {
                        gene_id: gene.gene_id().to_string(),
                        replicate,
                        scenario,
                        setting: s.id,
                        error: e.to_string(),
                    });
                }
            }
            return out;
        }
    };
    for &scenario in scenarios {
        for setting in settings {
            let seed = mix(mix(unit_seed, scenario as u64), 0x100 + setting.id as u64);
            let before = out.rows.len();
            if let Err(e) = run_case(gene, replicate, &proportions, scenario, setting, cfg, seed, &mut out)
            {
                out.rows.truncate(before);
                out.failures.push(FailureRow {
                    gene_id: gene.gene_id().to_string(),
                    replicate,
                    scenario,
                    setting: setting.id,
                    error: e.to_string(),
                });
            }
        }
    }
    out
}

/// Simulates every (gene, replicate, scenario, setting) case, runs the chain
/// and the six EM-based estimators, and scores each against the true alpha.
/// Failures are recorded per case. Output order is canonical and does not
/// depend on the worker count.
pub fn sweep(
    genes: &[GeneModel],
    scenarios: &[u8],
    settings: &[Setting],
    cfg: &SweepConfig,
) -> Result<ReeReport> {
    if genes.is_empty() {
        return Err(Error::InvalidInput("empty gene corpus".into()));
    }
    if let Some(s) = scenarios.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(Error::InvalidInput(format!("invalid scenario {s}")));
    }
    let units: Vec<(usize, usize)> = (0..genes.len())
        .flat_map(|g| (0..cfg.replicates).map(move |r| (g, r)))
        .collect();
    let work = || -> Vec<UnitOutcome> {
        units
            .par_iter()
            .map(|&(g, r)| run_unit(&genes[g], g, r, scenarios, settings, cfg))
            .collect()
    };
    let outcomes = if cfg.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?
            .install(work)
    };

    let mut report = ReeReport {
        rows: Vec::new(),
        theta: Vec::new(),
        failures: Vec::new(),
        aggregates: Vec::new(),
        em_runs: 0,
        em_monotonicity_violations: 0,
    };
    for o in outcomes {
        report.rows.extend(o.rows);
        report.theta.extend(o.theta);
        report.failures.extend(o.failures);
        report.em_runs += o.em_runs;
        report.em_monotonicity_violations += o.em_violations;
    }
    report.aggregates = aggregate(&report.rows);
    Ok(report)
}
