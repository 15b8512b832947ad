//! Acceptance criteria. Every test prints one `ACCEPTANCE criterion N: PASS|FAIL` line
//! to stderr (uncaptured) and then asserts the verdict.

use std::io::Write as _;
use std::sync::OnceLock;

use rc_eq::basis::{mean_reconstruction_error, optimum_basis, sample_channel_inverses, BasisSet, empirical_covariance, stack_real_imag};
use rc_eq::channel::{ChannelModel, IidGaussian};
use rc_eq::esn::{Activation, EsnModel};
use rc_eq::ofdm::{simulate_trial, Method, OfdmModem, TrialSetup};
use rc_eq::ratfit::{expand_pf, fit_rational, partial_fractions, PoleResidueSet};
use rc_eq::{ComplexMatrix, RngStream, C64};
use rc_eq_cli::csv::{aggregate, pooled_ser, AggregatePoint};
use rc_eq_cli::pipeline::{derive_weights, run_ser, trial_seed, verify_rank, DeriveOutput};
use rc_eq_cli::ExperimentConfig;

/// Receiver input gain shared by both reservoirs in every SER criterion.
const INPUT_SCALE: &str = "esn.input_scale=2.0";

fn report(n: u32, name: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "ACCEPTANCE criterion {n}: {verdict} [{name}] {detail}");
    pass
}

fn config(overrides: &[&str]) -> ExperimentConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::from_toml_with_overrides("", &o).expect("valid acceptance config")
}

fn derived(key: &'static str) -> &'static DeriveOutput {
    static EXP: OnceLock<DeriveOutput> = OnceLock::new();
    static CDL_D: OnceLock<DeriveOutput> = OnceLock::new();
    static CDL_E: OnceLock<DeriveOutput> = OnceLock::new();
    let (cell, cfg) = match key {
        "exp" => (&EXP, config(&[INPUT_SCALE])),
        "cdl-d" => (&CDL_D, config(&[INPUT_SCALE, "channel.family=tdl", "channel.profile=cdl-d", "basis.m=14"])),
        "cdl-e" => (&CDL_E, config(&[INPUT_SCALE, "channel.family=tdl", "channel.profile=cdl-e", "basis.m=15"])),
        _ => unreachable!("unknown weight set {key}"),
    };
    cell.get_or_init(|| derive_weights(&cfg).expect("weight derivation"))
}

fn ser_at(points: &[AggregatePoint], method: Method, ebn0: f64) -> f64 {
    pooled_ser(points, method, ebn0).expect("point present")
}

#[test]
fn criterion_1_rank_plateau() {
    let mut pass = true;
    let mut details = Vec::new();
    for taps in [2, 3, 4] {
        let taps_set = format!("rank.taps={taps}");
        let cfg = config(&[&taps_set, "rank.sigma0=0.05", "rank.n_freq=64", "rank.n_obs=20000"]);
        let start = std::time::Instant::now();
        let (r, _) = verify_rank(&cfg).expect("rank run");
        let secs = start.elapsed().as_secs_f64();
        let drop = r.drop_at_predicted.unwrap_or(0.0);
        pass &= drop >= 100.0 && secs <= 60.0;
        details.push(format!(
            "L={taps}: drop at {} = {drop:.3e}, largest drop {:.3e} at {}, {secs:.1}s",
            r.predicted_rank, r.largest_drop, r.largest_drop_index
        ));
    }
    assert!(report(1, "rank plateau at 4(L+1)", pass, &details.join("; ")));
}

fn planted_system(rng: &mut RngStream) -> PoleResidueSet {
    let k = 1 + rng.index(10);
    let mut poles: Vec<C64> = Vec::with_capacity(k);
    while poles.len() < k {
        let p = C64::from_polar(0.8 * rng.unit().sqrt(), rng.uniform(-std::f64::consts::PI, std::f64::consts::PI));
        if poles.iter().all(|q| (q - p).norm() >= 0.05) {
            poles.push(p);
        }
    }
    let residues = (0..k).map(|_| rng.complex_uniform()).collect();
    PoleResidueSet::new(poles, residues).expect("planted set")
}

#[test]
fn criterion_2_rational_round_trip() {
    let mut rng = RngStream::new(2024);
    let (mut worst_pole, mut worst_residue, mut failures) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..100 {
        let truth = planted_system(&mut rng);
        let k = truth.len();
        let f = expand_pf(&truth, 64).expect("expansion");
        let est = match fit_rational(&f, k, k - 1).and_then(|ra| partial_fractions(&ra)) {
            Ok(est) => est,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let mut unused: Vec<usize> = (0..est.len()).collect();
        for (p, q) in truth.poles.iter().zip(&truth.residues) {
            let (slot, &j) = unused
                .iter()
                .enumerate()
                .min_by(|a, b| (est.poles[*a.1] - p).norm().total_cmp(&(est.poles[*b.1] - p).norm()))
                .expect("as many estimated poles as planted");
            unused.remove(slot);
            worst_pole = worst_pole.max((est.poles[j] - p).norm());
            worst_residue = worst_residue.max((est.residues[j] - q).norm());
        }
    }
    let pass = failures == 0 && worst_pole <= 1e-6 && worst_residue <= 1e-5;
    let detail = format!("100 systems: max pole error {worst_pole:.2e}, max residue error {worst_residue:.2e}, fit failures {failures}");
    assert!(report(2, "rational round trip", pass, &detail));
}

/// Largest relative error between each node's simulated response to a 512-sample
/// complex exponential and `q/(1 − p e^{−jω})`, over 16 probe frequencies.
fn iir_probe_error(model: &EsnModel) -> f64 {
    let poles = model.w_res().diagonal();
    let residues = model.w_in().column(0);
    let mut worst = 0.0f64;
    for r in 0..16 {
        let omega = -std::f64::consts::PI + (r as f64 + 0.5) * std::f64::consts::PI / 8.0;
        let probe: Vec<C64> = (0..512).map(|n| C64::from_polar(1.0, omega * n as f64)).collect();
        let traj = model.run_states(&probe);
        let last = traj.states.row(511);
        for i in 0..model.n_nodes() {
            let measured = last[i] / probe[511];
            let expected = residues[i] / (C64::new(1.0, 0.0) - poles[i] * C64::from_polar(1.0, -omega));
            worst = worst.max((measured - expected).norm() / expected.norm().max(1e-300));
        }
    }
    worst
}

#[test]
fn criterion_3_iir_equivalence() {
    let mut pass = true;
    let mut details = Vec::new();
    for key in ["exp", "cdl-d", "cdl-e"] {
        let model = derived(key)
            .model()
            .expect("model")
            .with_activation(Activation::Linear)
            .with_input_scale(1.0)
            .expect("scale");
        let err = iir_probe_error(&model);
        pass &= err <= 1e-4;
        details.push(format!("{key} ({} nodes): max rel error {err:.2e}", model.n_nodes()));
    }
    assert!(report(3, "per-node IIR equivalence", pass, &details.join("; ")));
}

fn setup(cfg: &ExperimentConfig, channel: ChannelModel, optimum: EsnModel) -> TrialSetup {
    TrialSetup {
        modem: OfdmModem::new(&cfg.ofdm_config()).expect("modem"),
        channel,
        min_phase_only: cfg.channel.min_phase_only,
        max_channel_attempts: cfg.channel.max_attempts,
        charge_cp: cfg.ofdm.charge_cp,
        methods: Method::ALL.to_vec(),
        optimum: Some(optimum),
        random: Some(cfg.random_spec()),
        train: cfg.train_config(),
    }
}

#[test]
fn criterion_4_noiseless_exactness() {
    let cfg = config(&[INPUT_SCALE]);
    let optimum = derived("exp").model().expect("model");
    let flat = ChannelModel::Iid(IidGaussian::new(vec![C64::new(1.0, 0.0)], 0.0).expect("flat channel"));
    let flat_setup = setup(&cfg, flat, optimum.clone());
    let flat_rows = simulate_trial(&flat_setup, trial_seed(cfg.sweep.seed, 0), &[f64::INFINITY]).expect("flat trial").rows;
    let flat_errors: Vec<String> = flat_rows.iter().map(|r| format!("{}={}", r.method.label(), r.n_errors)).collect();
    let flat_ok = flat_rows.len() == 5 && flat_rows.iter().all(|r| r.n_errors == 0);

    let mut linear_setup = setup(&cfg, cfg.channel_model().expect("exp-pdp"), optimum.with_activation(Activation::Linear));
    linear_setup.methods = vec![Method::EsnOptimum];
    let row = simulate_trial(&linear_setup, trial_seed(cfg.sweep.seed, 0), &[f64::INFINITY]).expect("exp-pdp trial").rows[0].clone();
    let pass = flat_ok && row.ser <= 1e-3;
    let detail = format!(
        "flat channel errors [{}]; exp-PDP linear esn-optimum SER {:.3e} over {} symbols",
        flat_errors.join(", "),
        row.ser,
        row.n_symbols
    );
    assert!(report(4, "noiseless exactness", pass, &detail));
}

#[test]
fn criterion_5_exp_pdp_16qam_ordering() {
    let cfg = config(&[INPUT_SCALE, "ofdm.constellation=qam16", "sweep.trials=50"]);
    let start = std::time::Instant::now();
    let run = run_ser(&cfg, Some(&derived("exp").weights), 0).expect("sweep");
    let secs = start.elapsed().as_secs_f64();
    let points = aggregate(&run.rows);
    let mut pass = secs <= 600.0;
    let mut cells = Vec::new();
    for &e in cfg.sweep.ebn0_db.iter().filter(|&&e| e >= 10.0) {
        let (o, r) = (ser_at(&points, Method::EsnOptimum, e), ser_at(&points, Method::EsnRandom, e));
        pass &= o < r;
        cells.push(format!("{e}dB {o:.2e}<{r:.2e}"));
    }
    let (o25, zf25) = (ser_at(&points, Method::EsnOptimum, 25.0), ser_at(&points, Method::ZfPerfect, 25.0));
    pass &= o25 <= 5.0 * zf25;
    let detail = format!("optimum<random: {}; 25dB optimum {o25:.2e} vs 5x zf {:.2e}; {secs:.0}s", cells.join(", "), 5.0 * zf25);
    assert!(report(5, "16-QAM exp-PDP ordering", pass, &detail));
}

#[test]
fn criterion_6_error_floor() {
    let cfg = config(&[
        INPUT_SCALE,
        "ofdm.constellation=qam64",
        "sweep.trials=50",
        "sweep.ebn0_db=[15, 25]",
        r#"sweep.methods=["esn-optimum", "esn-random"]"#,
    ]);
    let start = std::time::Instant::now();
    let run = run_ser(&cfg, Some(&derived("exp").weights), 0).expect("sweep");
    let secs = start.elapsed().as_secs_f64();
    let points = aggregate(&run.rows);
    let (r15, r25) = (ser_at(&points, Method::EsnRandom, 15.0), ser_at(&points, Method::EsnRandom, 25.0));
    let (o15, o25) = (ser_at(&points, Method::EsnOptimum, 15.0), ser_at(&points, Method::EsnOptimum, 25.0));
    let pass = r25 >= 0.5 * r15 && o25 <= 0.2 * o15 && secs <= 900.0;
    let detail = format!(
        "random 15dB {r15:.3e} 25dB {r25:.3e} (ratio {:.3}, need >= 0.5); optimum 15dB {o15:.3e} 25dB {o25:.3e} (ratio {:.3}, need <= 0.2); {secs:.0}s",
        r25 / r15,
        o25 / o15
    );
    assert!(report(6, "64-QAM error floor", pass, &detail));
}

#[test]
fn criterion_7_cdl_profiles() {
    let mut pass = true;
    let mut details = Vec::new();
    for (key, m, nodes) in [("cdl-d", "basis.m=14", 140), ("cdl-e", "basis.m=15", 150)] {
        let profile = format!("channel.profile={key}");
        let cfg = config(&[INPUT_SCALE, "channel.family=tdl", &profile, m, "ofdm.constellation=qpsk", "sweep.trials=20"]);
        let weights = &derived(key).weights;
        let run = run_ser(&cfg, Some(weights), 0).expect("sweep");
        let points = aggregate(&run.rows);
        let bad: Vec<String> = cfg
            .sweep
            .ebn0_db
            .iter()
            .filter(|&&e| e >= 10.0)
            .filter(|&&e| ser_at(&points, Method::EsnOptimum, e) > ser_at(&points, Method::EsnRandom, e))
            .map(|e| format!("{e}dB"))
            .collect();
        pass &= weights.n_nodes == nodes && bad.is_empty() && run.rows.len() == 20 * 11 * 5;
        details.push(format!(
            "{key}: {} nodes, optimum>random at [{}], 25dB optimum {:.2e} random {:.2e}",
            weights.n_nodes,
            bad.join(" "),
            ser_at(&points, Method::EsnOptimum, 25.0),
            ser_at(&points, Method::EsnRandom, 25.0)
        ));
    }
    assert!(report(7, "CDL profile runs", pass, &details.join("; ")));
}

fn random_orthonormal_basis(n: usize, m: usize, rng: &mut RngStream) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    while cols.len() < m {
        let mut v: Vec<C64> = (0..n).map(|_| rng.complex_normal(1.0)).collect();
        for c in &cols {
            let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.iter().map(|x| x / norm).collect());
        }
    }
    ComplexMatrix::from_columns(&cols).expect("basis matrix")
}

#[test]
fn criterion_8_pca_optimality() {
    let cfg = config(&["basis.n_freq=64"]);
    let set = sample_channel_inverses(&cfg.channel_model().expect("model"), 64, 500, 8, true, 10_000).expect("samples");
    let stacked: Vec<Vec<f64>> = set.samples.iter().map(|v| stack_real_imag(v)).collect();
    let basis = optimum_basis(&empirical_covariance(&stacked, false).expect("covariance"), cfg.basis.m).expect("basis");
    let ours = mean_reconstruction_error(&basis, &set.samples).expect("error");
    let mut rng = RngStream::new(88);
    let random_errors: Vec<f64> = (0..50)
        .map(|_| {
            let candidate = BasisSet {
                f: random_orthonormal_basis(64, cfg.basis.m, &mut rng),
                eigenvalues: vec![0.0; cfg.basis.m],
                m: cfg.basis.m,
                n: 64,
                centered: false,
                mean: vec![C64::new(0.0, 0.0); 64],
                source_indices: (0..cfg.basis.m).collect(),
            };
            mean_reconstruction_error(&candidate, &set.samples).expect("error")
        })
        .collect();
    let best = random_errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let beaten = random_errors.iter().filter(|&&e| ours < e).count();
    let pass = ours <= 1.01 * best && beaten * 100 >= 95 * random_errors.len();
    let detail = format!("basis error {ours:.4e}, best random {best:.4e}, strictly below {beaten}/50 random bases");
    assert!(report(8, "PCA optimality", pass, &detail));
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("smoke.toml");
    std::fs::write(
        &config_path,
        "[basis]\nn_freq = 64\nn_obs = 300\nm = 3\n[fit]\nk = 5\nk_prime = 4\n[ofdm]\nfft_size = 64\ncp_len = 16\nn_data_syms = 4\n[sweep]\ntrials = 4\nebn0_db = [5.0, 15.0, 25.0]\n",
    )
    .expect("config");
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_rc-eq"))
            .args(["run-ser", "--config"])
            .arg(&config_path)
            .args(["--seed", "77", "--workers", workers, "--out"])
            .arg(&out)
            .output()
            .expect("binary runs");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out.join("ser.csv")).expect("csv")
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "2");
    let pass = a == b && a == c && !a.is_empty();
    let detail = format!("{} bytes; repeat identical: {}; 2 workers identical: {}", a.len(), a == b, a == c);
    assert!(report(9, "byte-identical CSV", pass, &detail));
}
