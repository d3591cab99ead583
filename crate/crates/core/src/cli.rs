//! Command-line front end: `simulate`, `estimate`, `fraglen` and `sweep`.
//!
//! File layout shared by the subcommands:
//!
//! * annotation: a JSON gene annotation, or an array of them; derived
//!   (subexon-level) genes are accepted too
//! * reads: `<reads-dir>/<gene_id>/<sample>.tsv`, raw or summarized
//! * truth: `truth.json` written by `simulate`
//!
//! Every output file starts with the resolved configuration. Worker count
//! and output paths are left out of it, since neither changes the content.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::em::{estimate_all, EmConfig, EstimatorInputs, EstimatorKind};
use crate::error::{Error, Result};
use crate::evaluation::{sweep, Setting, SweepConfig};
use crate::gene_model::{derive_subexons, DerivedGene, GeneAnnotation, GeneModel};
use crate::gibbs::{run_chain, stream_seed, ChainConfig, Hyperparameters};
use crate::read_model::{
    estimate_fragment_params, format_summarized_tsv, generating_matrix, parse_read_tsv,
    FragmentLengthModel, GeneratingMatrix, SummarizedRead,
};
use crate::simulator::{
    gen_proportions, random_corpus, simulate_gene, GeneGeneratorConfig, ScenarioSpec, SimConfig,
};

#[derive(Debug, Parser)]
#[command(name = "msiq", version, about = "Joint isoform quantification across heterogeneous RNA-seq samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a multi-sample dataset: annotation, reads and truth.
    Simulate(SimulateArgs),
    /// Estimate isoform proportions for every gene of a dataset.
    Estimate(EstimateArgs),
    /// Fit the fragment length model from single-isoform genes.
    Fraglen(FraglenArgs),
    /// Run a scenario × setting benchmark and write REE reports.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChainArgs {
    /// Retained Gibbs sweeps.
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 500)]
    pub burnin: usize,
    #[arg(long, env = "MSIQ_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Dirichlet prior: one value for every isoform, or a comma list.
    #[arg(long, default_value = "1")]
    pub lambda: String,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub em_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub em_max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Genes to simulate from; a random corpus is generated when absent.
    #[arg(long)]
    pub annotation: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub n_genes: usize,
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 10)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 500)]
    pub n_reads: usize,
    #[arg(long, default_value_t = 250.0)]
    pub frag_mean: f64,
    #[arg(long, default_value_t = 10.0)]
    pub frag_sd: f64,
    #[arg(long, default_value_t = 100)]
    pub read_len: u64,
    #[arg(long, env = "MSIQ_SEED", default_value_t = 1)]
    pub seed: u64,
    #[serde(skip)]
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Msiq,
    Avg,
    Pool,
    AvgOracle,
    PoolOracle,
    Msiqa,
    Msiqp,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub annotation: PathBuf,
    #[arg(long)]
    pub reads_dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "msiq")]
    pub method: Vec<Method>,
    /// Truth file with the informative samples, needed by the oracle methods.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Fragment length model JSON as written by `fraglen`; overrides the flags.
    #[arg(long)]
    pub fragment_model: Option<PathBuf>,
    #[arg(long, default_value_t = 250.0)]
    pub frag_mean: f64,
    #[arg(long, default_value_t = 10.0)]
    pub frag_sd: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[serde(skip)]
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FraglenArgs {
    #[arg(long)]
    pub annotation: PathBuf,
    #[arg(long)]
    pub reads_dir: PathBuf,
    #[serde(skip)]
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Genes to benchmark on; a random corpus is generated when absent.
    #[arg(long)]
    pub annotation: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub n_genes: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub scenario: Vec<u8>,
    /// Setting ids 1-4: (150, 50), (250, 50), (150, 100), (250, 100).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub settings: Vec<u8>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 10)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 500)]
    pub n_reads: usize,
    #[arg(long, default_value_t = 10.0)]
    pub frag_sd: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[serde(skip)]
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` and runs the chosen subcommand. Returns the process exit
/// code; errors are printed to stderr as `{"error": .., "kind": ..}`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", json!({"error": e.to_string().trim(), "kind": "usage"}));
            return 2;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({"error": e.to_string(), "kind": e.kind()}));
            1
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Fraglen(a) => cmd_fraglen(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn provenance(subcommand: &str, args: &impl Serialize) -> Value {
    json!({
        "tool": "msiq",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "config": args,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyGene {
    Annotation(GeneAnnotation),
    Derived(DerivedGene),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnnotationFile {
    Many(Vec<AnyGene>),
    One(AnyGene),
}

/// Loads genes from an annotation JSON: one gene or an array, exon-level or
/// subexon-level.
pub fn load_genes(path: &Path) -> Result<Vec<GeneModel>> {
    let text = read_text(path)?;
    let file: AnnotationFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    let genes = match file {
        AnnotationFile::Many(v) => v,
        AnnotationFile::One(g) => vec![g],
    };
    let models = genes
        .iter()
        .map(|g| match g {
            AnyGene::Annotation(a) => derive_subexons(a),
            AnyGene::Derived(d) => GeneModel::try_from(d),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    for g in &models {
        if !seen.insert(g.gene_id()) {
            return Err(Error::MalformedAnnotation(format!("duplicate gene id {}", g.gene_id())));
        }
    }
    Ok(models)
}

/// Per-sample read files of one gene, sorted by sample name.
fn sample_names(reads_dir: &Path, genes: &[GeneModel]) -> Result<Vec<String>> {
    let mut names = BTreeSet::new();
    for g in genes {
        let dir = reads_dir.join(g.gene_id());
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        for entry in entries {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "tsv") {
                if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                    names.insert(stem.to_string());
                }
            }
        }
    }
    if names.is_empty() {
        return Err(Error::MissingInput(format!(
            "no read files under {}",
            reads_dir.display()
        )));
    }
    Ok(names.into_iter().collect())
}

fn load_sample_reads(path: &Path, gene: &GeneModel) -> Result<Vec<SummarizedRead>> {
    let text = read_text(path)?;
    parse_read_tsv(&text, &path.display().to_string())?
        .iter()
        .map(|r| r.summarize(gene))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneTruth {
    pub gene_id: String,
    pub alpha: Vec<f64>,
    pub per_sample_tau: Vec<Vec<f64>>,
    #[serde(rename = "true_E")]
    pub true_e: Vec<bool>,
    /// 1-based isoform of origin per read, per sample.
    pub true_origins: Vec<Vec<usize>>,
    pub clamped_fragments: usize,
    pub short_isoform_reads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub provenance: Value,
    pub samples: Vec<String>,
    pub genes: Vec<GeneTruth>,
}

fn sample_name(d: usize) -> String {
    format!("s{:02}", d + 1)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = ScenarioSpec::with_samples(args.scenario, args.n_samples)?;
    let cfg = SimConfig {
        n_reads: args.n_reads,
        frag_mean: args.frag_mean,
        frag_sd: args.frag_sd,
        read_len: args.read_len,
        strict: false,
    };
    cfg.validate()?;
    let genes = match &args.annotation {
        Some(p) => load_genes(p)?,
        None => random_corpus(args.n_genes, &GeneGeneratorConfig::default(), args.seed)?,
    };
    let prov = provenance("simulate", args);
    let header = serde_json::to_string(&prov)?;

    let annotations: Vec<GeneAnnotation> = genes.iter().map(GeneAnnotation::from).collect();
    write_json(&args.out.join("annotation.json"), &annotations)?;
    let derived: Vec<DerivedGene> = genes.iter().map(DerivedGene::from).collect();
    write_json(&args.out.join("derived.json"), &derived)?;

    let mut truth = Vec::with_capacity(genes.len());
    for (g, gene) in genes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(args.seed, g as u64));
        let props = gen_proportions(gene.num_isoforms(), &mut rng)?;
        let sim = simulate_gene(gene, &props, &spec, &cfg, &mut rng)?;
        for (d, sample) in sim.samples.iter().enumerate() {
            let path = args
                .out
                .join("reads")
                .join(gene.gene_id())
                .join(format!("{}.tsv", sample_name(d)));
            write_text(&path, &format_summarized_tsv(&sample.reads, Some(&header)))?;
        }
        truth.push(GeneTruth {
            gene_id: gene.gene_id().to_string(),
            alpha: props.alpha.clone(),
            per_sample_tau: sim.design.tau.clone(),
            true_e: sim.design.true_e.clone(),
            true_origins: sim
                .samples
                .iter()
                .map(|s| s.origins.iter().map(|j| j + 1).collect())
                .collect(),
            clamped_fragments: sim.samples.iter().map(|s| s.clamped).sum(),
            short_isoform_reads: sim.samples.iter().map(|s| s.short_isoform).sum(),
        });
    }
    write_json(
        &args.out.join("truth.json"),
        &TruthFile {
            provenance: prov,
            samples: (0..args.n_samples).map(sample_name).collect(),
            genes: truth,
        },
    )
}

fn lambda_for(spec: &str, n_isoforms: usize) -> Result<Vec<f64>> {
    let vals = spec
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad lambda value {v:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; n_isoforms]),
        n if n == n_isoforms => Ok(vals),
        n => Err(Error::InvalidInput(format!(
            "lambda has {n} values but the gene has {n_isoforms} isoforms"
        ))),
    }
}

fn kinds_for(methods: &[Method]) -> (bool, Vec<EstimatorKind>) {
    let mut msiq = false;
    let mut kinds = BTreeSet::new();
    for m in methods {
        match m {
            Method::Msiq => msiq = true,
            Method::Avg => {
                kinds.insert(EstimatorKind::Avg);
            }
            Method::Pool => {
                kinds.insert(EstimatorKind::Pool);
            }
            Method::AvgOracle => {
                kinds.insert(EstimatorKind::AvgOracle);
            }
            Method::PoolOracle => {
                kinds.insert(EstimatorKind::PoolOracle);
            }
            Method::Msiqa => {
                kinds.insert(EstimatorKind::MsiqA);
            }
            Method::Msiqp => {
                kinds.insert(EstimatorKind::MsiqP);
            }
            Method::All => {
                msiq = true;
                kinds.extend(EstimatorKind::ALL);
            }
        }
    }
    (msiq, EstimatorKind::ALL.into_iter().filter(|k| kinds.contains(k)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsiqResult {
    pub gene_id: String,
    pub alpha_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub dropped_reads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub gene_id: String,
    pub kind: EstimatorKind,
    pub alpha_hat: Vec<f64>,
    /// 1-based samples the estimate drew on.
    pub samples_used: Vec<usize>,
    pub em_iterations: Vec<usize>,
    /// Final log-likelihood of each EM run.
    pub loglik: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneResult {
    pub gene_id: String,
    pub samples: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub msiq: Option<MsiqResult>,
    pub estimators: Vec<EstimatorResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGene {
    pub gene_id: String,
    pub kind: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub provenance: Value,
    pub results: Vec<GeneResult>,
    pub skipped: Vec<SkippedGene>,
}

struct EstimateContext<'a> {
    args: &'a EstimateArgs,
    samples: &'a [String],
    flm: FragmentLengthModel,
    truth: Option<&'a TruthFile>,
    run_msiq: bool,
    kinds: &'a [EstimatorKind],
    em: EmConfig,
}

fn estimate_gene(ctx: &EstimateContext<'_>, g: usize, gene: &GeneModel) -> Result<GeneResult> {
    let mut h: Vec<GeneratingMatrix> = Vec::with_capacity(ctx.samples.len());
    let mut dropped = 0;
    for name in ctx.samples {
        let path = ctx
            .args
            .reads_dir
            .join(gene.gene_id())
            .join(format!("{name}.tsv"));
        if !path.exists() {
            return Err(Error::MissingInput(format!("no reads for sample {name}")));
        }
        let reads = load_sample_reads(&path, gene)?;
        if reads.is_empty() {
            return Err(Error::MissingInput(format!("no reads for sample {name}")));
        }
        let out = generating_matrix(&reads, gene, &ctx.flm)
            .map_err(|e| Error::InvalidInput(format!("sample {name}: {e}")))?;
        dropped += out.dropped.len();
        h.push(out.matrix);
    }
    let n_iso = gene.num_isoforms();
    let hyper = Hyperparameters {
        lambda: lambda_for(&ctx.args.chain.lambda, n_iso)?,
        ..Hyperparameters::symmetric(n_iso, 1.0, ctx.args.chain.a, ctx.args.chain.b)
    };
    let seed = stream_seed(ctx.args.chain.seed, g as u64);
    let summary = if ctx.run_msiq || ctx.kinds.iter().any(|k| k.needs_theta()) {
        let cfg = ChainConfig {
            iterations: ctx.args.chain.iterations,
            burn_in: ctx.args.chain.burnin,
            seed,
            ..ChainConfig::default()
        };
        Some(run_chain(&h, &hyper, &cfg)?)
    } else {
        None
    };
    let true_e = match ctx.truth {
        Some(t) if ctx.kinds.iter().any(|k| k.needs_truth()) => {
            let gt = t
                .genes
                .iter()
                .find(|x| x.gene_id == gene.gene_id())
                .ok_or_else(|| Error::MissingInput(format!("gene {} not in truth file", gene.gene_id())))?;
            if t.samples != ctx.samples {
                return Err(Error::InvalidInput(
                    "truth file samples differ from the read files".into(),
                ));
            }
            Some(gt.true_e.clone())
        }
        _ => None,
    };
    let inputs = EstimatorInputs {
        h: &h,
        cfg: &ctx.em,
        true_e: true_e.as_deref(),
        theta_hat: summary.as_ref().map(|s| s.theta_hat.as_slice()),
        threshold: ctx.args.chain.threshold,
    };
    let estimators = estimate_all(ctx.kinds, &inputs)?
        .into_iter()
        .map(|e| EstimatorResult {
            gene_id: gene.gene_id().to_string(),
            kind: e.kind,
            alpha_hat: e.alpha_hat,
            samples_used: e.samples_used.iter().map(|d| d + 1).collect(),
            em_iterations: e.fits.iter().map(|f| f.iterations).collect(),
            loglik: e.fits.iter().map(|f| f.final_loglik()).collect(),
        })
        .collect();
    Ok(GeneResult {
        gene_id: gene.gene_id().to_string(),
        samples: ctx.samples.to_vec(),
        msiq: summary.filter(|_| ctx.run_msiq).map(|s| MsiqResult {
            gene_id: gene.gene_id().to_string(),
            alpha_hat: s.alpha_hat,
            theta_hat: s.theta_hat,
            iterations: s.iterations,
            burn_in: s.burn_in,
            seed: s.seed,
            dropped_reads: dropped,
        }),
        estimators,
    })
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let genes = load_genes(&args.annotation)?;
    let samples = sample_names(&args.reads_dir, &genes)?;
    let flm = match &args.fragment_model {
        Some(p) => {
            #[derive(Deserialize)]
            struct FlmFile {
                mean: f64,
                sd: f64,
            }
            let f: FlmFile = serde_json::from_str(&read_text(p)?)?;
            FragmentLengthModel::new(f.mean, f.sd)?
        }
        None => FragmentLengthModel::new(args.frag_mean, args.frag_sd)?,
    };
    let truth: Option<TruthFile> = match &args.truth {
        Some(p) => Some(serde_json::from_str(&read_text(p)?)?),
        None => None,
    };
    let (run_msiq, kinds) = kinds_for(&args.method);
    if truth.is_none() {
        if let Some(k) = kinds.iter().find(|k| k.needs_truth()) {
            return Err(Error::MissingInput(format!("{k} needs --truth")));
        }
    }
    let em = EmConfig {
        tol: args.chain.em_tol,
        max_iter: args.chain.em_max_iter,
        init: None,
    };
    let ctx = EstimateContext {
        args,
        samples: &samples,
        flm,
        truth: truth.as_ref(),
        run_msiq,
        kinds: &kinds,
        em,
    };
    let outcomes: Vec<Result<GeneResult>> = with_pool(args.workers, || {
        genes
            .par_iter()
            .enumerate()
            .map(|(g, gene)| estimate_gene(&ctx, g, gene))
            .collect()
    })?;
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for (gene, outcome) in genes.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => skipped.push(SkippedGene {
                gene_id: gene.gene_id().to_string(),
                kind: e.kind().to_string(),
                reason: e.to_string(),
            }),
        }
    }
    let prov = provenance("estimate", args);
    write_json(
        &args.out.join("skipped.json"),
        &json!({"provenance": prov, "skipped": skipped}),
    )?;
    write_json(
        &args.out.join("estimates.json"),
        &EstimateReport {
            provenance: prov,
            results,
            skipped,
        },
    )
}

fn cmd_fraglen(args: &FraglenArgs) -> Result<()> {
    let genes = load_genes(&args.annotation)?;
    let single: Vec<&GeneModel> = genes.iter().filter(|g| g.num_isoforms() == 1).collect();
    if single.is_empty() {
        return Err(Error::InvalidInput("annotation has no single-isoform genes".into()));
    }
    let mut pairs = Vec::new();
    let mut used = Vec::new();
    for gene in single {
        let dir = args.reads_dir.join(gene.gene_id());
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "tsv"))
            .collect();
        files.sort();
        if !files.is_empty() {
            used.push(gene.gene_id().to_string());
        }
        for f in files {
            pairs.extend(load_sample_reads(&f, gene)?.into_iter().map(|r| (r, gene)));
        }
    }
    let flm = estimate_fragment_params(&pairs)?;
    write_json(
        &args.out.join("fragment_model.json"),
        &json!({
            "provenance": provenance("fraglen", args),
            "mean": flm.mean,
            "sd": flm.sd,
            "n_reads": pairs.len(),
            "genes_used": used,
        }),
    )
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let genes = match &args.annotation {
        Some(p) => load_genes(p)?,
        None => random_corpus(args.n_genes, &GeneGeneratorConfig::default(), args.chain.seed)?,
    };
    let settings = args
        .settings
        .iter()
        .map(|&s| Setting::standard(s))
        .collect::<Result<Vec<_>>>()?;
    let n_iso_max = genes.iter().map(|g| g.num_isoforms()).max().unwrap_or(1);
    let lambda = lambda_for(&args.chain.lambda, 1).map_err(|_| {
        Error::InvalidInput(format!(
            "sweep takes a single lambda value (genes have up to {n_iso_max} isoforms)"
        ))
    })?[0];
    let cfg = SweepConfig {
        n_samples: args.n_samples,
        n_reads: args.n_reads,
        frag_sd: args.frag_sd,
        replicates: args.replicates,
        seed: args.chain.seed,
        chain: ChainConfig {
            iterations: args.chain.iterations,
            burn_in: args.chain.burnin,
            seed: args.chain.seed,
            ..ChainConfig::default()
        },
        em: EmConfig {
            tol: args.chain.em_tol,
            max_iter: args.chain.em_max_iter,
            init: None,
        },
        lambda,
        a: args.chain.a,
        b: args.chain.b,
        threshold: args.chain.threshold,
        workers: args.workers,
        ..SweepConfig::default()
    };
    let report = sweep(&genes, &args.scenario, &settings, &cfg)?;
    let prov = provenance("sweep", args);
    let header = serde_json::to_string(&prov)?;
    write_text(&args.out.join("ree_rows.tsv"), &report.to_tsv(&header))?;
    write_json(
        &args.out.join("ree_aggregates.json"),
        &json!({
            "provenance": prov,
            "aggregates": report.aggregates,
            "failures": report.failures,
            "em_runs": report.em_runs,
            "em_monotonicity_violations": report.em_monotonicity_violations,
        }),
    )?;
    write_json(
        &args.out.join("theta.json"),
        &json!({"provenance": prov, "theta": report.theta}),
    )
}
