use std::path::Path;
use std::process::{Command, Output};

use rc_eq::esn::WeightFile;
use rc_eq::ofdm::Method;
use rc_eq_cli::csv::{parse_csv, HEADER};
use rc_eq_cli::pipeline::{derive_weights, run_ser};
use rc_eq_cli::ExperimentConfig;

fn rc_eq(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rc-eq"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RC_EQ_LOG", "error")
        .output()
        .expect("binary runs")
}

const SMALL: [&str; 10] = [
    "--set", "basis.n_obs=300",
    "--set", "basis.n_freq=64",
    "--set", "basis.m=3",
    "--set", "fit.k=5",
    "--set", "fit.k_prime=4",
];

#[test]
fn derive_weights_default_is_100_nodes_and_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = rc_eq(&["derive-weights", "--seed", "5"], &dir.path().join("a"));
    let b = rc_eq(&["derive-weights", "--seed", "5"], &dir.path().join("b"));
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let wa = std::fs::read(dir.path().join("a/weights.json")).unwrap();
    assert_eq!(wa, std::fs::read(dir.path().join("b/weights.json")).unwrap());
    let weights = WeightFile::from_json(std::str::from_utf8(&wa).unwrap()).unwrap();
    assert_eq!(weights.n_nodes, 100);
    assert_eq!(weights.to_model().unwrap().n_nodes(), 100);
    let table = std::fs::read_to_string(dir.path().join("a/fit_errors.csv")).unwrap();
    assert_eq!(table.lines().count(), 11);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/derive-weights.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["warnings"]["pole_clamp"].is_u64());
    assert!(manifest["warnings"]["min_phase_rejection"].is_u64());
}

#[test]
fn cdl_weight_sets_have_140_and_150_nodes() {
    for (profile, m, nodes) in [("cdl-d", 14, 140), ("cdl-e", 15, 150)] {
        let cfg = ExperimentConfig::from_toml_with_overrides(
            "[channel]\nfamily = \"tdl\"\n",
            &[format!("channel.profile={profile}"), format!("basis.m={m}"), "basis.n_obs=600".into()],
        )
        .unwrap();
        assert_eq!(derive_weights(&cfg).unwrap().weights.n_nodes, nodes);
    }
}

#[test]
fn run_ser_with_weight_file_writes_csv_plot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w");
    assert!(rc_eq(&[&["derive-weights"][..], &SMALL].concat(), &w).status.success());
    let weights = w.join("weights.json");
    let out = dir.path().join("ser");
    let args = [
        &["run-ser", "--weights", weights.to_str().unwrap(), "--workers", "1"][..],
        &SMALL,
        &["--set", "ofdm.fft_size=64", "--set", "ofdm.cp_len=16", "--set", "sweep.trials=2", "--set", "sweep.ebn0_db=[0, 10, 20]"],
    ]
    .concat();
    let o = rc_eq(&args, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("ser.csv")).unwrap();
    assert!(text.starts_with(HEADER));
    assert_eq!(parse_csv(&text, "ser.csv").unwrap().len(), 5 * 3 * 2);
    assert!(std::fs::read_to_string(out.join("ser.svg")).unwrap().starts_with("<svg"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run-ser.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["warnings"]["weights_derived_in_process"], 0);
    assert!(!out.join("weights.json").exists());
}

#[test]
fn noiseless_qpsk_smoke_has_no_errors() {
    let cfg = ExperimentConfig::from_toml_with_overrides(
        "",
        &[
            "ofdm.constellation=qpsk".into(),
            "sweep.ebn0_db=[inf]".into(),
            "sweep.trials=3".into(),
            "esn.input_scale=2.0".into(),
            "basis.n_obs=1000".into(),
        ],
    )
    .unwrap();
    let run = run_ser(&cfg, None, 1).unwrap();
    assert_eq!(run.rows.len(), 15);
    for r in &run.rows {
        assert_eq!(r.n_errors, 0, "{:?} trial {}", r.method, r.seed);
    }
    assert_eq!(run.rows.iter().filter(|r| r.method == Method::EsnOptimum).count(), 3);
}

#[test]
fn verify_rank_reports_44_for_ten_taps() {
    let dir = tempfile::tempdir().unwrap();
    let o = rc_eq(&["verify-rank", "--set", "rank.taps=10", "--set", "rank.n_obs=500", "--set", "rank.n_freq=32"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("4(L+1) = 44"));
    let spectrum = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 1 + 64);
    assert!(spectrum.starts_with("index,eigenvalue\n1,"));
    assert!(dir.path().join("rank_report.json").exists());
}

#[test]
fn plot_is_byte_stable_and_rejects_bad_schema() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    std::fs::write(
        &good,
        format!("{HEADER}\nesn-optimum,10,1,1000,20,0.02\nesn-optimum,20,1,1000,1,0.001\nzf-perfect,10,1,1000,15,0.015\n"),
    )
    .unwrap();
    let a = rc_eq(&["plot", good.to_str().unwrap()], &dir.path().join("a"));
    let b = rc_eq(&["plot", good.to_str().unwrap()], &dir.path().join("b"));
    assert!(a.status.success() && b.status.success());
    let svg = std::fs::read(dir.path().join("a/plot.svg")).unwrap();
    assert_eq!(svg, std::fs::read(dir.path().join("b/plot.svg")).unwrap());
    assert_eq!(String::from_utf8(svg).unwrap().matches("class=\"marker\"").count(), 3);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "method,snr\nzf-perfect,1\n").unwrap();
    assert_eq!(rc_eq(&["plot", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, format!("{HEADER}\n")).unwrap();
    assert_eq!(rc_eq(&["plot", empty.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| rc_eq(args, dir.path()).status.code();
    assert_eq!(code(&["run-ser", "--set", "sweep.trials=0"]), Some(2));
    assert_eq!(code(&["run-ser", "--set", "sweep.ebn0_db=[10, 0]"]), Some(2));
    assert_eq!(code(&["derive-weights", "--config", "/nonexistent/config.toml"]), Some(2));
    assert_eq!(code(&["run-ser", "--weights", "/nonexistent/weights.json"]), Some(2));
    assert_eq!(
        code(&["derive-weights", "--set", "channel.family=tdl", "--set", "channel.max_attempts=1", "--set", "basis.n_obs=2000"]),
        Some(3)
    );
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(Some(&path), &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}
