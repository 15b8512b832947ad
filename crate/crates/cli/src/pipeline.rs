//! The three computational commands, as library functions.

use rayon::prelude::*;
use rc_eq::basis::{
    default_epsilon, empirical_covariance, epsilon_rank, optimum_basis, sample_channel_inverses, spectrum_drop,
    stack_real_imag,
};
use rc_eq::esn::{EsnModel, WeightFile};
use rc_eq::numkit::sym_eig;
use rc_eq::ofdm::{simulate_trial, Method, OfdmModem, SerResult, TrialSetup};
use rc_eq::ratfit::{synthesize_filter, WeightEntry};
use rc_eq::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::manifest::RunManifest;
use crate::{CliError, Stage};

/// Stream index of the weight-derivation seed under the base seed.
const WEIGHTS_STREAM: u64 = 0;
/// Stream index of the per-trial seeds under the base seed.
const TRIALS_STREAM: u64 = 1;
/// Stream index of the rank-verification seed under the base seed.
const RANK_STREAM: u64 = 2;

/// Seed of trial `t` for base seed `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    derive_seed(derive_seed(seed, TRIALS_STREAM), t as u64)
}

/// Fit quality of one basis vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub m: usize,
    pub k: usize,
    pub k_prime: usize,
    pub fit_error: f64,
    pub ridge: f64,
    pub stabilized_poles: usize,
    pub perturbed: bool,
    pub max_pole_magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct DeriveOutput {
    pub weights: WeightFile,
    pub fit_table: Vec<FitRow>,
    pub manifest: RunManifest,
}

impl DeriveOutput {
    pub fn model(&self) -> Result<EsnModel, CliError> {
        self.weights.to_model().map_err(|e| CliError::stage(Stage::EsnInit, e))
    }

    /// Fit table as CSV with header `m,k,k_prime,fit_error,ridge,stabilized_poles,perturbed,max_pole_magnitude`.
    pub fn fit_table_csv(&self) -> String {
        use crate::csv::format_number as f;
        let mut out = String::from("m,k,k_prime,fit_error,ridge,stabilized_poles,perturbed,max_pole_magnitude\n");
        for r in &self.fit_table {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.m,
                r.k,
                r.k_prime,
                f(r.fit_error),
                f(r.ridge),
                r.stabilized_poles,
                r.perturbed,
                f(r.max_pole_magnitude)
            ));
        }
        out
    }
}

/// Channel statistics → optimum reservoir weights.
///
/// Samples `n_obs` channel inverses, builds the real-stacked covariance, takes
/// the `M` leading complexified eigenvectors and fits each with a stabilized
/// order-`(K', K)` rational filter whose poles and residues become the reservoir.
pub fn derive_weights(cfg: &ExperimentConfig) -> Result<DeriveOutput, CliError> {
    let mut manifest = RunManifest::new("derive-weights", cfg);
    let start = std::time::Instant::now();
    let model = cfg.channel_model()?;
    let seed = derive_seed(cfg.sweep.seed, WEIGHTS_STREAM);

    let inverses = manifest
        .time("channel-sampling", || {
            sample_channel_inverses(
                &model,
                cfg.basis.n_freq,
                cfg.basis.n_obs,
                seed,
                cfg.channel.min_phase_only,
                cfg.channel.max_attempts,
            )
        })
        .map_err(|e| CliError::stage(Stage::ChannelSampling, e))?;
    manifest.warn("min_phase_rejection", inverses.rejected_non_min_phase);
    manifest.warn("spectral_null_rejection", inverses.rejected_spectral_null);

    let cov = manifest
        .time("covariance", || {
            let stacked: Vec<Vec<f64>> = inverses.samples.iter().map(|v| stack_real_imag(v)).collect();
            empirical_covariance(&stacked, cfg.basis.centered)
        })
        .map_err(|e| CliError::stage(Stage::Covariance, e))?;
    let basis = manifest
        .time("basis", || optimum_basis(&cov, cfg.basis.m))
        .map_err(|e| CliError::stage(Stage::Basis, e))?;

    let entries: Vec<WeightEntry> = manifest
        .time("rational-fit", || {
            (0..basis.m)
                .into_par_iter()
                .map(|m| synthesize_filter(&basis.f.column(m), cfg.fit.k, cfg.fit.k_prime, cfg.fit.rho_max))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| CliError::stage(Stage::RationalFit, e))?;

    let fit_table: Vec<FitRow> = entries
        .iter()
        .enumerate()
        .map(|(m, e)| FitRow {
            m,
            k: e.k,
            k_prime: e.k_prime,
            fit_error: e.fit_error,
            ridge: e.ridge,
            stabilized_poles: e.stabilized.iter().filter(|&&s| s).count(),
            perturbed: e.perturbed,
            max_pole_magnitude: e.poles.iter().map(|p| p.norm()).fold(0.0, f64::max),
        })
        .collect();
    let clamped: usize = fit_table.iter().map(|r| r.stabilized_poles).sum();
    let perturbed = fit_table.iter().filter(|r| r.perturbed).count();
    manifest.warn("pole_clamp", clamped);
    manifest.warn("pole_perturbation", perturbed);
    if clamped > 0 {
        manifest.note(format!("{clamped} poles clamped to |p| = {}", cfg.fit.rho_max));
    }

    let mut weights = WeightFile::optimum(entries, cfg.esn.activation, cfg.esn.input_scale, cfg.fit.rho_max);
    let meta = [
        ("config_hash", serde_json::json!(cfg.hash())),
        ("seed", serde_json::json!(cfg.sweep.seed)),
        ("channel_taps", serde_json::json!(model.taps())),
        ("n_freq", serde_json::json!(cfg.basis.n_freq)),
        ("n_obs", serde_json::json!(cfg.basis.n_obs)),
        ("m", serde_json::json!(cfg.basis.m)),
        ("centered", serde_json::json!(cfg.basis.centered)),
        ("eigenvalues", serde_json::json!(basis.eigenvalues)),
        ("rejected_non_min_phase", serde_json::json!(inverses.rejected_non_min_phase)),
        ("rejected_spectral_null", serde_json::json!(inverses.rejected_spectral_null)),
    ];
    weights.meta.extend(meta.into_iter().map(|(k, v)| (k.to_string(), v)));
    manifest
        .time("esn-init", || weights.to_model())
        .map_err(|e| CliError::stage(Stage::EsnInit, e))?;
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(DeriveOutput { weights, fit_table, manifest })
}

#[derive(Debug, Clone)]
pub struct SerRun {
    /// Rows ordered by trial, then Eb/N0, then method.
    pub rows: Vec<SerResult>,
    pub manifest: RunManifest,
    /// Weights derived in-process when none were supplied.
    pub derived: Option<DeriveOutput>,
}

/// Monte-Carlo SER sweep.
///
/// Trials run on a pool of `workers` threads (0 means the rayon default); every
/// method sees the same channel, subframe and noise within a trial. Without
/// `weights`, an optimum reservoir is derived in-process when needed and the
/// manifest records it.
pub fn run_ser(cfg: &ExperimentConfig, weights: Option<&WeightFile>, workers: usize) -> Result<SerRun, CliError> {
    let mut manifest = RunManifest::new("run-ser", cfg);
    let start = std::time::Instant::now();
    let mut derived = None;
    let optimum = if cfg.sweep.methods.contains(&Method::EsnOptimum) {
        let model = match weights {
            Some(w) => w.to_model().map_err(|e| CliError::stage(Stage::EsnInit, e))?,
            None => {
                let out = derive_weights(cfg)?;
                manifest.absorb(&out.manifest);
                manifest.warn("weights_derived_in_process", 1);
                manifest.note("no weight file given; optimum weights derived in-process");
                let model = out.model()?;
                derived = Some(out);
                model
            }
        };
        if model.w_out().is_some() {
            manifest.note("weight file readout ignored; the readout is retrained on every subframe");
        }
        Some(model)
    } else {
        None
    };
    let methods: Vec<Method> = Method::ALL.iter().copied().filter(|m| cfg.sweep.methods.contains(m)).collect();
    let setup = TrialSetup {
        modem: OfdmModem::new(&cfg.ofdm_config()).map_err(|e| CliError::Config(e.to_string()))?,
        channel: cfg.channel_model()?,
        min_phase_only: cfg.channel.min_phase_only,
        max_channel_attempts: cfg.channel.max_attempts,
        charge_cp: cfg.ofdm.charge_cp,
        methods,
        optimum,
        random: Some(cfg.random_spec()),
        train: cfg.train_config(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let outcomes = manifest
        .time("simulation", || {
            pool.install(|| {
                (0..cfg.sweep.trials)
                    .into_par_iter()
                    .map(|t| simulate_trial(&setup, trial_seed(cfg.sweep.seed, t), &cfg.sweep.ebn0_db))
                    .collect::<Result<Vec<_>, _>>()
            })
        })
        .map_err(|e| CliError::stage(Stage::Simulation, e))?;
    let mut rows = Vec::with_capacity(cfg.sweep.trials * cfg.sweep.ebn0_db.len() * setup.methods.len());
    for o in outcomes {
        manifest.warn("min_phase_rejection", o.min_phase_rejections);
        manifest.warn("ridge_fallback", o.ridge_fallbacks);
        rows.extend(o.rows);
    }
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(SerRun { rows, manifest, derived })
}

/// Measured ε-rank at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRank {
    pub eps: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub taps: usize,
    pub sigma0: f64,
    pub n_freq: usize,
    pub n_obs: usize,
    pub centered: bool,
    /// `4(L+1)` real dimensions.
    pub predicted_rank: usize,
    /// Eigenvalue ratio `λ_pred / λ_{pred+1}`.
    pub drop_at_predicted: Option<f64>,
    /// 1-based index `k` maximizing `λ_k / λ_{k+1}` over the leading half of the spectrum.
    pub largest_drop_index: usize,
    pub largest_drop: f64,
    pub default_eps: f64,
    pub rank_at_default_eps: usize,
    pub eps_grid: Vec<EpsRank>,
    /// Full descending spectrum of length `2N`.
    pub eigenvalues: Vec<f64>,
    pub rejected_spectral_null: usize,
}

impl RankReport {
    /// Spectrum CSV with header `index,eigenvalue` (1-based index).
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, crate::csv::format_number(*l)));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "L = {}: predicted eps-rank 4(L+1) = {}\n",
            self.taps, self.predicted_rank
        );
        match self.drop_at_predicted {
            Some(d) => s.push_str(&format!("eigenvalue drop at index {}: {:.3e}\n", self.predicted_rank, d)),
            None => s.push_str("predicted index beyond the spectrum\n"),
        }
        s.push_str(&format!(
            "largest drop at index {}: {:.3e}\nrank at default eps {:.3e}: {}\n",
            self.largest_drop_index, self.largest_drop, self.default_eps, self.rank_at_default_eps
        ));
        for e in &self.eps_grid {
            s.push_str(&format!("eps {:.3e}: rank {}\n", e.eps, e.rank));
        }
        s
    }
}

/// Eigenvalue spectrum of the real-stacked channel-inverse covariance for
/// i.i.d. Gaussian taps, with ε-ranks over a log grid spanning `[σ₀⁶, σ₀²]`.
pub fn verify_rank(cfg: &ExperimentConfig) -> Result<(RankReport, RunManifest), CliError> {
    let mut manifest = RunManifest::new("verify-rank", cfg);
    let start = std::time::Instant::now();
    let r = &cfg.rank;
    let model = cfg.rank_model()?;
    let inverses = manifest
        .time("channel-sampling", || {
            sample_channel_inverses(
                &model,
                r.n_freq,
                r.n_obs,
                derive_seed(cfg.sweep.seed, RANK_STREAM),
                false,
                cfg.channel.max_attempts,
            )
        })
        .map_err(|e| CliError::stage(Stage::ChannelSampling, e))?;
    manifest.warn("spectral_null_rejection", inverses.rejected_spectral_null);
    let cov = manifest
        .time("covariance", || {
            let stacked: Vec<Vec<f64>> = inverses.samples.iter().map(|v| stack_real_imag(v)).collect();
            empirical_covariance(&stacked, r.centered)
        })
        .map_err(|e| CliError::stage(Stage::Covariance, e))?;
    let eig = manifest.time("eigen", || sym_eig(&cov.sigma)).map_err(|e| CliError::stage(Stage::Rank, e))?;
    let eigenvalues = eig.eigenvalues;

    let predicted_rank = 4 * (r.taps + 1);
    let (largest_drop_index, largest_drop) = (1..eigenvalues.len() / 2)
        .filter_map(|k| spectrum_drop(&eigenvalues, k).map(|d| (k, d)))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let (lo, hi) = (r.sigma0.powi(6), r.sigma0.powi(2));
    let eps_grid = (0..r.eps_points)
        .map(|i| {
            let t = if r.eps_points == 1 { 0.0 } else { i as f64 / (r.eps_points - 1) as f64 };
            let eps = lo * (hi / lo).powf(t);
            EpsRank { eps, rank: epsilon_rank(&eigenvalues, eps) }
        })
        .collect();
    let default_eps = default_epsilon(r.sigma0, &eigenvalues);
    let report = RankReport {
        taps: r.taps,
        sigma0: r.sigma0,
        n_freq: r.n_freq,
        n_obs: r.n_obs,
        centered: r.centered,
        predicted_rank,
        drop_at_predicted: spectrum_drop(&eigenvalues, predicted_rank),
        largest_drop_index,
        largest_drop,
        default_eps,
        rank_at_default_eps: epsilon_rank(&eigenvalues, default_eps),
        eps_grid,
        eigenvalues,
        rejected_spectral_null: inverses.rejected_spectral_null,
    };
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    Ok((report, manifest))
}
