//! Synthetic multi-sample paired-end data: random proportions, the five
//! heterogeneity scenarios, read simulation, and a random gene generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gene_model::{derive_subexons, GeneAnnotation, GeneModel, IsoformExons};
use crate::read_model::{summarize_read, SummarizedRead};

/// Number of non-informative proportion vectors drawn per gene.
pub const N_BETAS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub n_samples: usize,
}

impl ScenarioSpec {
    pub fn new(scenario: u8) -> Result<Self> {
        Self::with_samples(scenario, 10)
    }

    pub fn with_samples(scenario: u8, n_samples: usize) -> Result<Self> {
        if !(1..=5).contains(&scenario) {
            return Err(Error::InvalidInput(format!("scenario must be 1..=5, got {scenario}")));
        }
        if n_samples == 0 {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        Ok(Self {
            scenario,
            n_samples,
        })
    }

    /// 100%, 50%, 70%, 70%, 70% of the samples (10, 5, 7, 7, 7 at D = 10).
    pub fn informative_count(&self) -> usize {
        let frac = match self.scenario {
            1 => 1.0,
            2 => 0.5,
            _ => 0.7,
        };
        ((self.n_samples as f64 * frac).round() as usize).clamp(1, self.n_samples)
    }
}

/// Proportions of one simulated gene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub alpha: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
}

fn flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Draws alpha and five betas independently from the flat Dirichlet.
pub fn gen_proportions<R: Rng + ?Sized>(n_isoforms: usize, rng: &mut R) -> Result<Proportions> {
    if n_isoforms == 0 {
        return Err(Error::InvalidInput("J must be at least 1".into()));
    }
    Ok(Proportions {
        alpha: flat_dirichlet(n_isoforms, rng),
        betas: (0..N_BETAS).map(|_| flat_dirichlet(n_isoforms, rng)).collect(),
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Per-sample proportions and the informative-group truth of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDesign {
    pub tau: Vec<Vec<f64>>,
    pub true_e: Vec<bool>,
}

/// Lays out the samples: informative samples first, all at alpha, then the
/// outliers. Scenarios 2 and 3 use beta_1, beta_2, ... in turn; scenario 4
/// repeats the beta farthest from alpha and scenario 5 the closest one.
pub fn make_scenario(spec: &ScenarioSpec, alpha: &[f64], betas: &[Vec<f64>]) -> Result<ScenarioDesign> {
    if betas.len() != N_BETAS {
        return Err(Error::InvalidInput(format!(
            "expected {N_BETAS} beta vectors, got {}",
            betas.len()
        )));
    }
    if !(1..=5).contains(&spec.scenario) {
        return Err(Error::InvalidInput(format!("invalid scenario {}", spec.scenario)));
    }
    let k = spec.informative_count();
    let outliers = spec.n_samples - k;
    let by_distance = |farthest: bool| {
        let mut best = 0;
        for i in 1..betas.len() {
            let (di, db) = (sq_dist(&betas[i], alpha), sq_dist(&betas[best], alpha));
            if (farthest && di > db) || (!farthest && di < db) {
                best = i;
            }
        }
        best
    };
    let mut tau = vec![alpha.to_vec(); k];
    match spec.scenario {
        1 | 2 | 3 => tau.extend((0..outliers).map(|i| betas[i % N_BETAS].clone())),
        4 => tau.extend(std::iter::repeat_n(betas[by_distance(true)].clone(), outliers)),
        _ => tau.extend(std::iter::repeat_n(betas[by_distance(false)].clone(), outliers)),
    }
    let mut true_e = vec![true; k];
    true_e.extend(std::iter::repeat_n(false, outliers));
    Ok(ScenarioDesign { tau, true_e })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_reads: usize,
    pub frag_mean: f64,
    pub frag_sd: f64,
    pub read_len: u64,
    /// Fail instead of flagging when no isoform can hold two read ends.
    pub strict: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_reads: 500,
            frag_mean: 250.0,
            frag_sd: 10.0,
            read_len: 100,
            strict: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frag_mean > 0.0 && self.frag_sd > 0.0 && self.read_len > 0) {
            return Err(Error::InvalidInput(
                "fragment mean, sd and read length must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Unrounded, unclamped fragment length draws.
    pub fn fragment_distribution(&self) -> Result<Normal<f64>> {
        Normal::new(self.frag_mean, self.frag_sd)
            .map_err(|e| Error::InvalidInput(format!("fragment distribution: {e}")))
    }
}

/// Reads of one sample with the hidden truth behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSample {
    pub reads: Vec<SummarizedRead>,
    /// 0-based isoform of origin per read.
    pub origins: Vec<usize>,
    pub fragment_lengths: Vec<u64>,
    /// Reads whose drawn fragment length had to be clamped.
    pub clamped: usize,
    /// Reads from isoforms shorter than two read ends, drawn full-length with
    /// ends shortened to half the isoform.
    pub short_isoform: usize,
}

fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return k;
            }
            u -= w;
            last = k;
        }
    }
    last
}

/// Simulates `cfg.n_reads` paired-end reads of `gene` with proportions `tau`.
pub fn simulate_reads<R: Rng + ?Sized>(
    gene: &GeneModel,
    tau: &[f64],
    cfg: &SimConfig,
    id_prefix: &str,
    rng: &mut R,
) -> Result<SimulatedSample> {
    cfg.validate()?;
    if tau.len() != gene.num_isoforms()
        || tau.iter().any(|&t| !(t >= 0.0))
        || (tau.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidInput("tau must be a simplex vector over the isoforms".into()));
    }
    let lengths: Vec<u64> = (0..gene.num_isoforms())
        .map(|j| gene.isoform_length(j))
        .collect::<Result<_>>()?;
    let c = cfg.read_len;
    if cfg.strict && lengths.iter().all(|&l| l < 2 * c) {
        return Err(Error::InvalidInput(format!(
            "gene {}: every isoform is shorter than two read ends",
            gene.gene_id()
        )));
    }
    let normal = cfg.fragment_distribution()?;
    let mut out = SimulatedSample {
        reads: Vec::with_capacity(cfg.n_reads),
        origins: Vec::with_capacity(cfg.n_reads),
        fragment_lengths: Vec::with_capacity(cfg.n_reads),
        clamped: 0,
        short_isoform: 0,
    };
    for n in 0..cfg.n_reads {
        let j = draw_index(tau, rng);
        let len = lengths[j];
        let raw = normal.sample(rng).round();
        let (frag, end) = if len < 2 * c {
            out.short_isoform += 1;
            (len, (len / 2).max(1))
        } else {
            let lo = (2 * c) as f64;
            let frag = raw.clamp(lo, len as f64) as u64;
            if frag as f64 != raw {
                out.clamped += 1;
            }
            (frag, c)
        };
        let start = rng.random_range(1..=len - frag + 1);
        let stop = start + frag - 1;
        let blocks = |from, to| {
            gene.genomic_blocks(j, from, to)
                .expect("fragment lies inside the isoform")
        };
        let left = blocks(start, start + end - 1);
        let right = blocks(stop + 1 - end, stop);
        let read = summarize_read(format!("{id_prefix}r{n}"), &left, &right, gene)?;
        out.reads.push(read);
        out.origins.push(j);
        out.fragment_lengths.push(frag);
    }
    Ok(out)
}

/// Parameters of the random gene generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneGeneratorConfig {
    pub min_exons: usize,
    pub max_exons: usize,
    pub min_exon_len: u64,
    pub max_exon_len: u64,
    pub min_intron_len: u64,
    pub max_intron_len: u64,
    pub max_isoforms: usize,
    /// Candidate isoforms shorter than this are discarded.
    pub min_isoform_len: u64,
}

impl Default for GeneGeneratorConfig {
    fn default() -> Self {
        Self {
            min_exons: 3,
            max_exons: 10,
            min_exon_len: 50,
            max_exon_len: 300,
            min_intron_len: 100,
            max_intron_len: 1000,
            max_isoforms: 5,
            min_isoform_len: 400,
        }
    }
}

/// A random multi-isoform gene. Every isoform keeps the first and last exon
/// and includes each middle exon with probability 1/2; duplicates and short
/// isoforms are discarded.
pub fn random_gene<R: Rng + ?Sized>(
    gene_id: &str,
    cfg: &GeneGeneratorConfig,
    rng: &mut R,
) -> Result<GeneModel> {
    if cfg.min_exons < 2 || cfg.min_exons > cfg.max_exons || cfg.max_isoforms < 2 {
        return Err(Error::InvalidInput("gene generator needs >= 2 exons and isoforms".into()));
    }
    for _attempt in 0..1000 {
        let n_exons = rng.random_range(cfg.min_exons..=cfg.max_exons);
        let mut pos = 1u64;
        let mut exons = Vec::with_capacity(n_exons);
        for _ in 0..n_exons {
            let len = rng.random_range(cfg.min_exon_len..=cfg.max_exon_len);
            exons.push([pos, pos + len - 1]);
            pos += len + rng.random_range(cfg.min_intron_len..=cfg.max_intron_len);
        }
        let middle = n_exons - 2;
        let possible = 1usize.checked_shl(middle as u32).unwrap_or(usize::MAX);
        let max_isoforms = cfg.max_isoforms.min(possible);
        if max_isoforms < 2 {
            continue;
        }
        let target = rng.random_range(2..=max_isoforms);
        let mut chosen: Vec<Vec<usize>> = Vec::new();
        for _ in 0..50 * target {
            if chosen.len() == target {
                break;
            }
            let mut members = vec![0];
            members.extend((1..=middle).filter(|_| rng.random_bool(0.5)));
            members.push(n_exons - 1);
            let len: u64 = members.iter().map(|&k| exons[k][1] - exons[k][0] + 1).sum();
            if len >= cfg.min_isoform_len && !chosen.contains(&members) {
                chosen.push(members);
            }
        }
        if chosen.len() < 2 {
            continue;
        }
        let annotation = GeneAnnotation {
            gene_id: gene_id.to_string(),
            isoforms: chosen
                .iter()
                .enumerate()
                .map(|(i, members)| IsoformExons {
                    isoform_id: format!("{gene_id}.{}", i + 1),
                    exons: members.iter().map(|&k| exons[k]).collect(),
                })
                .collect(),
        };
        return derive_subexons(&annotation);
    }
    Err(Error::InvalidInput(
        "gene generator could not satisfy the isoform constraints".into(),
    ))
}

/// `n` random genes named `gene0001`, ... drawn from one seeded stream.
pub fn random_corpus(n: usize, cfg: &GeneGeneratorConfig, seed: u64) -> Result<Vec<GeneModel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| random_gene(&format!("gene{:04}", i + 1), cfg, &mut rng))
        .collect()
}

/// Everything simulated for one gene under one scenario and setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedGene {
    pub proportions: Proportions,
    pub design: ScenarioDesign,
    pub samples: Vec<SimulatedSample>,
}

/// Simulates every sample of `gene` under the given proportions and scenario.
pub fn simulate_gene<R: Rng + ?Sized>(
    gene: &GeneModel,
    proportions: &Proportions,
    spec: &ScenarioSpec,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SimulatedGene> {
    let design = make_scenario(spec, &proportions.alpha, &proportions.betas)?;
    let samples = design
        .tau
        .iter()
        .enumerate()
        .map(|(d, tau)| simulate_reads(gene, tau, cfg, &format!("s{}_", d + 1), rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedGene {
        proportions: proportions.clone(),
        design,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gene_model::{GenomicInterval, Isoform};
    use crate::read_model::{compatible_isoforms, fragment_length};

    fn two_isoform_gene() -> GeneModel {
        let iv = |s, e| GenomicInterval { start: s, end: e };
        GeneModel::new(
            "g",
            vec![iv(1, 400), iv(1001, 1200), iv(2001, 2500)],
            vec![
                Isoform {
                    isoform_id: "a".into(),
                    subexon_indices: vec![0, 1, 2],
                },
                Isoform {
                    isoform_id: "b".into(),
                    subexon_indices: vec![0, 2],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn proportions_lie_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = gen_proportions(1, &mut rng).unwrap();
        assert_eq!(p.alpha, vec![1.0]);
        assert!(p.betas.iter().all(|b| b == &vec![1.0]));
        for _ in 0..100 {
            let p = gen_proportions(4, &mut rng).unwrap();
            for v in std::iter::once(&p.alpha).chain(&p.betas) {
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!(gen_proportions(0, &mut rng).is_err());
    }

    #[test]
    fn flat_dirichlet_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let a = gen_proportions(3, &mut rng).unwrap().alpha;
            sum.iter_mut().zip(&a).for_each(|(s, v)| *s += v);
        }
        for s in sum {
            assert!((s / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn scenario_layouts() {
        let alpha = vec![1.0, 0.0];
        // squared distances 0.01, 0.81, 0.25, 0.04, 0.09
        let betas: Vec<Vec<f64>> = [0.1, 0.9, 0.5, 0.2, 0.3]
            .iter()
            .map(|d| {
                let t = d / 2f64.sqrt();
                vec![1.0 - t, t]
            })
            .collect();
        let counts: Vec<usize> = (1..=5)
            .map(|s| ScenarioSpec::new(s).unwrap().informative_count())
            .collect();
        assert_eq!(counts, vec![10, 5, 7, 7, 7]);

        let s1 = make_scenario(&ScenarioSpec::new(1).unwrap(), &alpha, &betas).unwrap();
        assert_eq!(s1.tau, vec![alpha.clone(); 10]);
        assert!(s1.true_e.iter().all(|&e| e));

        let s2 = make_scenario(&ScenarioSpec::new(2).unwrap(), &alpha, &betas).unwrap();
        assert_eq!(&s2.tau[5..], &betas[..]);
        let s3 = make_scenario(&ScenarioSpec::new(3).unwrap(), &alpha, &betas).unwrap();
        assert_eq!(&s3.tau[7..], &betas[..3]);
        assert_eq!(s3.true_e.iter().filter(|&&e| e).count(), 7);

        let s4 = make_scenario(&ScenarioSpec::new(4).unwrap(), &alpha, &betas).unwrap();
        assert!(s4.tau[7..].iter().all(|t| t == &betas[1]));
        let s5 = make_scenario(&ScenarioSpec::new(5).unwrap(), &alpha, &betas).unwrap();
        assert!(s5.tau[7..].iter().all(|t| t == &betas[0]));

        assert!(ScenarioSpec::new(6).is_err());
        assert!(make_scenario(&ScenarioSpec::new(1).unwrap(), &alpha, &betas[..4]).is_err());
    }

    #[test]
    fn reads_round_trip_through_read_model() {
        let gene = two_isoform_gene();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = SimConfig {
            n_reads: 2000,
            ..SimConfig::default()
        };
        let s = simulate_reads(&gene, &[0.5, 0.5], &cfg, "x", &mut rng).unwrap();
        for ((read, &j), &len) in s.reads.iter().zip(&s.origins).zip(&s.fragment_lengths) {
            assert!(compatible_isoforms(read, &gene).contains(&j));
            assert_eq!(fragment_length(read, j, &gene).unwrap(), len);
            assert_eq!(read.half_length, 100);
        }
    }

    #[test]
    fn degenerate_proportions() {
        let gene = two_isoform_gene();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = simulate_reads(&gene, &[1.0, 0.0], &SimConfig::default(), "", &mut rng).unwrap();
        assert!(s.origins.iter().all(|&j| j == 0));
    }

    #[test]
    fn origin_counts_follow_tau() {
        let gene = two_isoform_gene();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = simulate_reads(&gene, &[0.6, 0.4], &SimConfig::default(), "", &mut rng).unwrap();
        let frac = s.origins.iter().filter(|&&j| j == 0).count() as f64 / 500.0;
        // 99% binomial region: 2.576 * sqrt(0.24 / 500) = 0.0564
        assert!((frac - 0.6).abs() < 0.06, "{frac}");
    }

    #[test]
    fn short_isoforms_are_flagged() {
        let iv = |s, e| GenomicInterval { start: s, end: e };
        let gene = GeneModel::new(
            "short",
            vec![iv(1, 60), iv(101, 160)],
            vec![Isoform {
                isoform_id: "s".into(),
                subexon_indices: vec![0, 1],
            }],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SimConfig {
            n_reads: 20,
            ..SimConfig::default()
        };
        let s = simulate_reads(&gene, &[1.0], &cfg, "", &mut rng).unwrap();
        assert_eq!(s.short_isoform, 20);
        assert!(s.fragment_lengths.iter().all(|&l| l == 120));
        for read in &s.reads {
            assert_eq!(compatible_isoforms(read, &gene), vec![0]);
        }
        let strict = SimConfig { strict: true, ..cfg };
        assert!(simulate_reads(&gene, &[1.0], &strict, "", &mut rng).is_err());
    }

    #[test]
    fn random_genes_satisfy_constraints() {
        let cfg = GeneGeneratorConfig::default();
        let genes = random_corpus(40, &cfg, 17).unwrap();
        for g in &genes {
            assert!(g.num_isoforms() >= 2 && g.num_isoforms() <= cfg.max_isoforms);
            assert!((2..=cfg.max_exons).contains(&g.num_subexons()));
            for j in 0..g.num_isoforms() {
                assert!(g.isoform_length(j).unwrap() >= cfg.min_isoform_len);
                let idx = &g.isoforms()[j].subexon_indices;
                assert_eq!(idx[0], 0);
                assert_eq!(*idx.last().unwrap(), g.num_subexons() - 1);
            }
            let sets: std::collections::HashSet<_> =
                g.isoforms().iter().map(|i| i.subexon_indices.clone()).collect();
            assert_eq!(sets.len(), g.num_isoforms());
        }
        assert_eq!(genes, random_corpus(40, &cfg, 17).unwrap());
    }

    #[test]
    fn fragment_draws_are_normal() {
        use statrs::distribution::{ContinuousCDF, Normal as SNormal};
        let cfg = SimConfig::default();
        let dist = cfg.fragment_distribution().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 10_000;
        let mut xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let reference = SNormal::new(cfg.frag_mean, cfg.frag_sd).unwrap();
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = reference.cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks}");
    }
}
