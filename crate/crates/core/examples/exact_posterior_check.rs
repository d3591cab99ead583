// Compare a long chain with exhaustive enumeration of the posterior on a
// tiny instance.
//
// ```bash
// cargo run --release --example exact_posterior_check
// ```

use msiq::gibbs::{exact_posterior, run_chain, ChainConfig, Hyperparameters};
use msiq::read_model::GeneratingMatrix;

pub fn run_example() -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let h = vec![
        GeneratingMatrix::from_rows(2, &[vec![0.4, 0.1], vec![0.2, 0.2], vec![0.3, 0.0]])?,
        GeneratingMatrix::from_rows(2, &[vec![0.05, 0.5], vec![0.0, 0.3]])?,
        GeneratingMatrix::from_rows(2, &[vec![0.3, 0.2], vec![0.6, 0.1]])?,
    ];
    let hyper = Hyperparameters::uniform(2);
    let exact = exact_posterior(&h, &hyper)?;
    let chain = run_chain(
        &h,
        &hyper,
        &ChainConfig {
            iterations: 20_000,
            burn_in: 1_000,
            seed: 3,
            ..ChainConfig::default()
        },
    )?;
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let da = max_diff(&exact.alpha, &chain.alpha_hat);
    let dt = max_diff(&exact.theta, &chain.theta_hat);
    println!("exact alpha {:.4?}  chain {:.4?}", exact.alpha, chain.alpha_hat);
    println!("exact theta {:.4?}  chain {:.4?}", exact.theta, chain.theta_hat);
    println!("max |diff|: alpha {da:.4}, theta {dt:.4}");
    Ok((da, dt))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
