// The six EM-based estimators on a scenario 3 dataset, scored against the
// true proportions.
//
// ```bash
// cargo run --release --example em_estimators
// ```

use msiq::em::{estimate_all, EmConfig, EstimatorInputs, EstimatorKind};
use msiq::evaluation::ree;
use msiq::gibbs::{run_chain, ChainConfig, Hyperparameters};
use msiq::read_model::{generating_matrix, FragmentLengthModel, GeneratingMatrix};
use msiq::simulator::{
    gen_proportions, random_gene, simulate_gene, GeneGeneratorConfig, ScenarioSpec, SimConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<Vec<(String, f64)>, Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let gene = random_gene("demo", &GeneGeneratorConfig::default(), &mut rng)?;
    let props = gen_proportions(gene.num_isoforms(), &mut rng)?;
    let spec = ScenarioSpec::new(3)?;
    let cfg = SimConfig {
        n_reads: 200,
        ..SimConfig::default()
    };
    let sim = simulate_gene(&gene, &props, &spec, &cfg, &mut rng)?;
    let flm = FragmentLengthModel::new(cfg.frag_mean, cfg.frag_sd)?;
    let h: Vec<GeneratingMatrix> = sim
        .samples
        .iter()
        .map(|s| generating_matrix(&s.reads, &gene, &flm).map(|o| o.matrix))
        .collect::<msiq::Result<_>>()?;
    let chain = ChainConfig {
        iterations: 400,
        burn_in: 100,
        seed: 1,
        ..ChainConfig::default()
    };
    let summary = run_chain(&h, &Hyperparameters::uniform(gene.num_isoforms()), &chain)?;
    let em = EmConfig::default();
    let inputs = EstimatorInputs {
        h: &h,
        cfg: &em,
        true_e: Some(&sim.design.true_e),
        theta_hat: Some(&summary.theta_hat),
        threshold: 0.5,
    };
    let mut scores = vec![("MSIQ".to_string(), ree(&props.alpha, &summary.alpha_hat)?)];
    for est in estimate_all(&EstimatorKind::ALL, &inputs)? {
        scores.push((est.kind.label().to_string(), ree(&props.alpha, &est.alpha_hat)?));
    }
    println!("gene with {} isoforms, true alpha {:.3?}", gene.num_isoforms(), props.alpha);
    for (name, r) in &scores {
        println!("{name:>6}  REE {r:.4}");
    }
    Ok(scores)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
