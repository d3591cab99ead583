use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn msiq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_msiq"))
        .args(args)
        .env_remove("MSIQ_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = msiq(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, scenario: &str, seed: &str) {
    ok(&[
        "simulate", "--n-genes", "3", "--scenario", scenario, "--n-samples", "4", "--n-reads", "60",
        "--seed", seed, "--out", p(dir),
    ]);
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_annotation_reads_and_truth() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "2", "4");
    let truth = read_json(&tmp.path().join("truth.json"));
    let genes = truth["genes"].as_array().unwrap();
    assert_eq!(genes.len(), 3);
    for g in genes {
        assert_eq!(g["true_E"], serde_json::json!([true, true, false, false]));
        let id = g["gene_id"].as_str().unwrap();
        for s in ["s01", "s02", "s03", "s04"] {
            let text = fs::read_to_string(tmp.path().join("reads").join(id).join(format!("{s}.tsv"))).unwrap();
            assert!(text.starts_with("# "));
            assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 61);
        }
        let origins = g["true_origins"].as_array().unwrap();
        assert!(origins.iter().flat_map(|o| o.as_array().unwrap()).all(|j| j.as_u64().unwrap() >= 1));
    }
    let ann = read_json(&tmp.path().join("annotation.json"));
    assert_eq!(ann.as_array().unwrap().len(), 3);
}

#[test]
fn scenario_one_oracles_match_plain_estimators() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("est");
    simulate(&data, "1", "5");
    ok(&[
        "estimate", "--annotation", p(&data.join("annotation.json")), "--reads-dir",
        p(&data.join("reads")), "--truth", p(&data.join("truth.json")), "--method", "all",
        "--iterations", "100", "--burnin", "20", "--out", p(&out),
    ]);
    let report = read_json(&out.join("estimates.json"));
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for r in results {
        let by_kind = |k: &str| {
            r["estimators"]
                .as_array()
                .unwrap()
                .iter()
                .find(|e| e["kind"] == k)
                .unwrap()["alpha_hat"]
                .clone()
        };
        assert_eq!(by_kind("AVG"), by_kind("AVG*"));
        assert_eq!(by_kind("POOL"), by_kind("POOL*"));
        assert!(r["msiq"]["alpha_hat"].is_array());
    }
}

#[test]
fn gene_missing_a_sample_is_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "1", "6");
    let truth = read_json(&data.join("truth.json"));
    let victim = truth["genes"][1]["gene_id"].as_str().unwrap().to_string();
    let sample = data.join("reads").join(&victim).join("s03.tsv");
    let text = fs::read_to_string(&sample).unwrap();
    let header: String = text.lines().take_while(|l| l.starts_with('#') || l.starts_with("read_id")).map(|l| format!("{l}\n")).collect();
    fs::write(&sample, header).unwrap();
    let out = tmp.path().join("est");
    ok(&[
        "estimate", "--annotation", p(&data.join("annotation.json")), "--reads-dir",
        p(&data.join("reads")), "--method", "msiq,avg", "--iterations", "50", "--burnin", "10",
        "--out", p(&out),
    ]);
    let report = read_json(&out.join("estimates.json"));
    let ids: Vec<&str> = report["results"].as_array().unwrap().iter().map(|r| r["gene_id"].as_str().unwrap()).collect();
    assert!(!ids.contains(&victim.as_str()));
    assert_eq!(ids.len(), 2);
    let skipped = read_json(&out.join("skipped.json"));
    assert_eq!(skipped["skipped"][0]["gene_id"], victim.as_str());
}

#[test]
fn same_seed_gives_identical_bytes_and_inputs_are_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    simulate(&a, "3", "9");
    simulate(&b, "3", "9");
    for f in ["annotation.json", "derived.json", "truth.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let before = fs::read(a.join("truth.json")).unwrap();
    let mut outs = Vec::new();
    for (k, workers) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("est{k}"));
        ok(&[
            "estimate", "--annotation", p(&a.join("annotation.json")), "--reads-dir",
            p(&a.join("reads")), "--truth", p(&a.join("truth.json")), "--method", "all",
            "--iterations", "60", "--burnin", "10", "--workers", workers, "--out", p(&out),
        ]);
        outs.push(fs::read(out.join("estimates.json")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(before, fs::read(a.join("truth.json")).unwrap());
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_msiq"));
        cmd.args(["simulate", "--n-genes", "1", "--n-samples", "2", "--n-reads", "10", "--out", p(dir)]);
        match env {
            Some(v) => cmd.env("MSIQ_SEED", v),
            None => cmd.env_remove("MSIQ_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        fs::read(dir.join("truth.json")).unwrap()
    };
    let from_env = run(&tmp.path().join("env"), Some("77"));
    let default = run(&tmp.path().join("default"), None);
    assert_ne!(from_env, default);
    ok(&["simulate", "--n-genes", "1", "--n-samples", "2", "--n-reads", "10", "--seed", "77", "--out", p(&tmp.path().join("flag"))]);
    assert_eq!(from_env, fs::read(tmp.path().join("flag").join("truth.json")).unwrap());
}

#[test]
fn fraglen_recovers_simulation_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let ann = tmp.path().join("single.json");
    fs::write(
        &ann,
        r#"[{"gene_id": "solo", "isoforms": [{"isoform_id": "t", "exons": [[1, 600], [901, 1500]]}]},
            {"gene_id": "solo2", "isoforms": [{"isoform_id": "t", "exons": [[1, 2000]]}]}]"#,
    )
    .unwrap();
    let data = tmp.path().join("data");
    ok(&[
        "simulate", "--annotation", p(&ann), "--n-samples", "2", "--n-reads", "400",
        "--frag-mean", "300", "--frag-sd", "20", "--seed", "3", "--out", p(&data),
    ]);
    let out = tmp.path().join("fl");
    ok(&["fraglen", "--annotation", p(&ann), "--reads-dir", p(&data.join("reads")), "--out", p(&out)]);
    let fl = read_json(&out.join("fragment_model.json"));
    assert_eq!(fl["n_reads"], 1600);
    assert!((fl["mean"].as_f64().unwrap() - 300.0).abs() < 3.0, "{fl}");
    assert!((fl["sd"].as_f64().unwrap() - 20.0).abs() < 2.0, "{fl}");
}

#[test]
fn sweep_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "sweep", "--n-genes", "2", "--scenario", "2,4", "--settings", "4", "--n-reads", "60",
        "--n-samples", "4", "--iterations", "60", "--burnin", "10", "--out", p(tmp.path()),
    ]);
    let tsv = fs::read_to_string(tmp.path().join("ree_rows.tsv")).unwrap();
    assert!(tsv.starts_with("# provenance: {"));
    assert_eq!(tsv.lines().count(), 2 + 2 * 2 * 7);
    let agg = read_json(&tmp.path().join("ree_aggregates.json"));
    assert_eq!(agg["aggregates"].as_array().unwrap().len(), 2 * 7);
    assert_eq!(agg["em_monotonicity_violations"], 0);
}

#[test]
fn failures_are_reported_as_json() {
    let out = msiq(&["estimate", "--annotation", "/nonexistent.json", "--reads-dir", "/nonexistent", "--out", "/tmp/x"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "missing_input");

    let out = msiq(&["estimate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "usage");

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"gene_id": "g", "isoforms": []}"#).unwrap();
    let out = msiq(&["simulate", "--annotation", p(&bad), "--out", p(tmp.path())]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());
}
