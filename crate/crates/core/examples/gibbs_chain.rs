// Run the collapsed Gibbs sampler on three simulated samples, one of which
// is an outlier, and print the estimated proportions and group posteriors.
//
// ```bash
// cargo run --release --example gibbs_chain
// ```

use msiq::gibbs::{run_chain, ChainConfig, Hyperparameters, PosteriorSummary};
use msiq::gene_model::{GeneModel, GenomicInterval, Isoform};
use msiq::read_model::{generating_matrix, FragmentLengthModel};
use msiq::simulator::{simulate_reads, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<PosteriorSummary, Box<dyn std::error::Error>> {
    let iv = |start, end| GenomicInterval { start, end };
    let gene = GeneModel::new(
        "two_isoforms",
        vec![iv(1, 400), iv(1001, 1200), iv(2001, 2500)],
        vec![
            Isoform {
                isoform_id: "full".into(),
                subexon_indices: vec![0, 1, 2],
            },
            Isoform {
                isoform_id: "skip".into(),
                subexon_indices: vec![0, 2],
            },
        ],
    )?;
    let cfg = SimConfig {
        n_reads: 300,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let taus = [[0.7, 0.3], [0.7, 0.3], [0.1, 0.9]];
    let flm = FragmentLengthModel::new(cfg.frag_mean, cfg.frag_sd)?;
    let mut h = Vec::new();
    for (d, tau) in taus.iter().enumerate() {
        let sample = simulate_reads(&gene, tau, &cfg, &format!("s{}_", d + 1), &mut rng)?;
        h.push(generating_matrix(&sample.reads, &gene, &flm)?.matrix);
    }
    let chain = ChainConfig {
        iterations: 1000,
        burn_in: 200,
        seed: 5,
        ..ChainConfig::default()
    };
    let summary = run_chain(&h, &Hyperparameters::uniform(2), &chain)?;
    println!("alpha_hat = {:.3?}", summary.alpha_hat);
    println!("theta_hat = {:.3?}", summary.theta_hat);
    Ok(summary)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
