// Drive the command-line interface in-process: simulate a dataset, then
// estimate it with every method.
//
// ```bash
// cargo run --release --example cli_roundtrip
// ```

use std::path::PathBuf;

pub fn run_example() -> Result<PathBuf, Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("msiq-cli-example-{}", std::process::id()));
    let data = dir.join("data");
    let out = dir.join("est");
    let code = msiq::cli::run([
        "msiq", "simulate", "--n-genes", "2", "--scenario", "1", "--n-samples", "3",
        "--n-reads", "100", "--seed", "9", "--out", data.to_str().unwrap(),
    ]);
    if code != 0 {
        return Err("simulate failed".into());
    }
    let annotation = data.join("annotation.json");
    let reads = data.join("reads");
    let truth = data.join("truth.json");
    let code = msiq::cli::run([
        "msiq", "estimate",
        "--annotation", annotation.to_str().unwrap(),
        "--reads-dir", reads.to_str().unwrap(),
        "--truth", truth.to_str().unwrap(),
        "--method", "all", "--iterations", "200", "--burnin", "50",
        "--out", out.to_str().unwrap(),
    ]);
    if code != 0 {
        return Err("estimate failed".into());
    }
    let estimates = out.join("estimates.json");
    println!("{}", std::fs::read_to_string(&estimates)?);
    Ok(estimates)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
