// Lay out the five heterogeneity scenarios for one gene and simulate a
// sample, writing it in the summarized TSV format.
//
// ```bash
// cargo run --example simulate_scenario
// ```

use msiq::read_model::format_summarized_tsv;
use msiq::simulator::{
    gen_proportions, make_scenario, random_gene, simulate_reads, GeneGeneratorConfig,
    ScenarioSpec, SimConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gene = random_gene("sim", &GeneGeneratorConfig::default(), &mut rng)?;
    let props = gen_proportions(gene.num_isoforms(), &mut rng)?;
    println!("alpha = {:.3?}", props.alpha);
    for s in 1..=5 {
        let design = make_scenario(&ScenarioSpec::new(s)?, &props.alpha, &props.betas)?;
        let marks: String = design.true_e.iter().map(|&e| if e { 'I' } else { '.' }).collect();
        println!("scenario {s}: {marks}");
    }
    let cfg = SimConfig {
        n_reads: 5,
        ..SimConfig::default()
    };
    let sample = simulate_reads(&gene, &props.alpha, &cfg, "s1_", &mut rng)?;
    let tsv = format_summarized_tsv(&sample.reads, Some("simulate_scenario example"));
    print!("{tsv}");
    Ok(tsv)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
