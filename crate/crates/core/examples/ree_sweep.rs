// A small benchmark sweep: a few random genes, two scenarios, one setting.
// Prints the median REE per estimator.
//
// ```bash
// cargo run --release --example ree_sweep
// ```

use msiq::evaluation::{sweep, ReeReport, Setting, SweepConfig};
use msiq::gibbs::ChainConfig;
use msiq::simulator::{random_corpus, GeneGeneratorConfig};

pub fn run_example() -> Result<ReeReport, Box<dyn std::error::Error>> {
    let genes = random_corpus(3, &GeneGeneratorConfig::default(), 8)?;
    let cfg = SweepConfig {
        n_reads: 150,
        chain: ChainConfig {
            iterations: 200,
            burn_in: 50,
            ..ChainConfig::default()
        },
        ..SweepConfig::default()
    };
    let report = sweep(&genes, &[2, 4], &[Setting::standard(4)?], &cfg)?;
    for a in &report.aggregates {
        println!(
            "scenario {} setting {} {:>6}: median {:.3} (Q1 {:.3}, Q3 {:.3})",
            a.scenario, a.setting, a.estimator, a.median, a.q1, a.q3
        );
    }
    Ok(report)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
