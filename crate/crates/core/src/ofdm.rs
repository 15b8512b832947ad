//! SISO-OFDM link: Gray-mapped QAM, block-pilot subframes, multipath plus AWGN,
//! classical per-subcarrier equalizers, the time-domain ESN equalizer, and SER.
//!
//! Symbol grids are stored with one row per OFDM symbol and one column per
//! subcarrier.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{sample_min_phase, ChannelError, ChannelModel, ChannelRealization, SPECTRAL_NULL_TOL};
use crate::esn::{init_random, train_readout, Activation, EsnError, EsnModel, StateTrajectory, TrainReport};
use crate::numkit::{dft_response, ComplexMatrix, NumError};
use crate::rng::derive_seed;
use crate::{RngStream, C64};

#[derive(Debug, Error)]
pub enum OfdmError {
    #[error("symbol index {index} out of range for a {size}-point constellation")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("grid shapes differ: {expected:?} vs {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("spectral null at subcarrier {index} (|H| = {magnitude:e})")]
    SpectralNull { index: usize, magnitude: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerical(#[from] NumError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Esn(#[from] EsnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Qpsk,
    Qam16,
    Qam64,
}

fn gray(b: usize) -> usize {
    b ^ (b >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    pub fn size(self) -> usize {
        match self {
            Self::Qpsk => 4,
            Self::Qam16 => 16,
            Self::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        self.size().trailing_zeros()
    }

    fn levels(self) -> usize {
        1 << (self.bits_per_symbol() / 2)
    }

    /// Spacing between adjacent amplitudes divided by two; gives unit average energy.
    fn unit(self) -> f64 {
        match self {
            Self::Qpsk => FRAC_1_SQRT_2,
            _ => (1.5 / (self.size() as f64 - 1.0)).sqrt(),
        }
    }

    /// Index bits split into an in-phase half (high bits) and a quadrature half
    /// (low bits), each Gray-coded onto the amplitudes `±1, ±3, …`.
    pub fn point(self, index: usize) -> Result<C64, OfdmError> {
        if index >= self.size() {
            return Err(OfdmError::IndexOutOfRange { index, size: self.size() });
        }
        let half = self.bits_per_symbol() / 2;
        let mask = (1 << half) - 1;
        let amplitude = |g: usize| (2 * gray_inverse(g)) as f64 - (self.levels() - 1) as f64;
        Ok(C64::new(amplitude(index >> half), amplitude(index & mask)) * self.unit())
    }

    pub fn points(self) -> Vec<C64> {
        (0..self.size()).map(|i| self.point(i).expect("in range")).collect()
    }

    /// Nearest constellation point (per-axis slicing of the square grid).
    pub fn demap(self, z: C64) -> usize {
        let half = self.bits_per_symbol() / 2;
        let top = self.levels() - 1;
        let slice = |x: f64| {
            let level = ((x / self.unit() + top as f64) / 2.0).round();
            gray(level.clamp(0.0, top as f64) as usize)
        };
        (slice(z.re) << half) | slice(z.im)
    }
}

/// Integer symbol indices on an OFDM grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexGrid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<usize>,
}

impl IndexGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<usize>) -> Result<Self, OfdmError> {
        if data.len() != rows * cols {
            return Err(OfdmError::ShapeMismatch { expected: (rows, cols), found: (data.len(), 1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Maps an index grid to constellation points.
pub fn modulate(indices: &IndexGrid, constellation: Constellation) -> Result<ComplexMatrix, OfdmError> {
    let points: Result<Vec<C64>, OfdmError> = indices.data.iter().map(|&i| constellation.point(i)).collect();
    Ok(ComplexMatrix::from_row_major(indices.rows, indices.cols, points?)?)
}

/// Nearest-point decisions for every entry of a grid.
pub fn demap_grid(grid: &ComplexMatrix, constellation: Constellation) -> IndexGrid {
    IndexGrid {
        rows: grid.rows(),
        cols: grid.cols(),
        data: grid.as_slice().iter().map(|&z| constellation.demap(z)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub cp_len: usize,
    pub n_pilot_syms: usize,
    pub n_data_syms: usize,
    pub constellation: Constellation,
}

impl OfdmConfig {
    /// FFT 1024, CP 160, 4 pilot and 13 data symbols.
    pub fn full_scale(constellation: Constellation) -> Self {
        Self { fft_size: 1024, cp_len: 160, n_pilot_syms: 4, n_data_syms: 13, constellation }
    }

    /// FFT 256 with the same CP fraction and symbol counts as [`Self::full_scale`].
    pub fn desk_scale(constellation: Constellation) -> Self {
        Self { fft_size: 256, cp_len: 40, n_pilot_syms: 4, n_data_syms: 13, constellation }
    }

    pub fn validate(&self) -> Result<(), OfdmError> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            return Err(OfdmError::InvalidConfig(format!("fft_size {} is not a power of two", self.fft_size)));
        }
        if self.cp_len >= self.fft_size {
            return Err(OfdmError::InvalidConfig(format!("cp_len {} must be below fft_size", self.cp_len)));
        }
        if self.n_pilot_syms == 0 || self.n_data_syms == 0 {
            return Err(OfdmError::InvalidConfig("need at least one pilot and one data symbol".into()));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn n_symbols(&self) -> usize {
        self.n_pilot_syms + self.n_data_syms
    }

    pub fn subframe_len(&self) -> usize {
        self.n_symbols() * self.symbol_len()
    }

    /// Time-domain samples covering the pilot symbols.
    pub fn pilot_span(&self) -> usize {
        self.n_pilot_syms * self.symbol_len()
    }
}

/// Unitary-scaled FFT pair for one configuration.
#[derive(Clone)]
pub struct OfdmModem {
    cfg: OfdmConfig,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem").field("cfg", &self.cfg).finish()
    }
}

impl OfdmModem {
    pub fn new(cfg: &OfdmConfig) -> Result<Self, OfdmError> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg: cfg.clone(),
            forward: planner.plan_fft_forward(cfg.fft_size),
            inverse: planner.plan_fft_inverse(cfg.fft_size),
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// IFFT (scaled by `1/√N`) of each grid row with the last `cp_len` samples prepended.
    pub fn modulate_symbols(&self, grid: &ComplexMatrix) -> Vec<C64> {
        let (n, cp) = (self.cfg.fft_size, self.cfg.cp_len);
        let scale = 1.0 / (n as f64).sqrt();
        let mut out = Vec::with_capacity(grid.rows() * (n + cp));
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for r in 0..grid.rows() {
            buf.copy_from_slice(grid.row(r));
            self.inverse.process(&mut buf);
            for z in buf.iter_mut() {
                *z *= scale;
            }
            out.extend_from_slice(&buf[n - cp..]);
            out.extend_from_slice(&buf);
        }
        out
    }

    /// CP removal and FFT (scaled by `1/√N`) of `count` symbols starting at symbol `first`.
    pub fn demodulate(&self, rx: &[C64], first: usize, count: usize) -> Result<ComplexMatrix, OfdmError> {
        let (n, cp) = (self.cfg.fft_size, self.cfg.cp_len);
        let sym = n + cp;
        if rx.len() < (first + count) * sym {
            return Err(OfdmError::ShapeMismatch { expected: ((first + count) * sym, 1), found: (rx.len(), 1) });
        }
        let scale = 1.0 / (n as f64).sqrt();
        let mut grid = ComplexMatrix::zeros(count, n);
        for s in 0..count {
            let start = (first + s) * sym + cp;
            let row = grid.row_mut(s);
            row.copy_from_slice(&rx[start..start + n]);
            self.forward.process(row);
            for z in row.iter_mut() {
                *z *= scale;
            }
        }
        Ok(grid)
    }
}

/// One transmitted subframe with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Subframe {
    pub pilot_indices: IndexGrid,
    pub data_indices: IndexGrid,
    pub pilot_grid: ComplexMatrix,
    pub data_grid: ComplexMatrix,
    pub tx_time: Vec<C64>,
}

impl Subframe {
    /// Mean `|x|²` of the transmitted samples.
    pub fn sample_power(&self) -> f64 {
        self.tx_time.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.tx_time.len() as f64
    }
}

/// Uniformly random pilot and data symbols, modulated and framed.
pub fn build_subframe(modem: &OfdmModem, rng: &mut RngStream) -> Result<Subframe, OfdmError> {
    let cfg = modem.config();
    let size = cfg.constellation.size();
    let mut draw = |rows: usize| IndexGrid {
        rows,
        cols: cfg.fft_size,
        data: (0..rows * cfg.fft_size).map(|_| rng.index(size)).collect(),
    };
    let pilot_indices = draw(cfg.n_pilot_syms);
    let data_indices = draw(cfg.n_data_syms);
    let pilot_grid = modulate(&pilot_indices, cfg.constellation)?;
    let data_grid = modulate(&data_indices, cfg.constellation)?;
    let mut tx_time = modem.modulate_symbols(&pilot_grid);
    tx_time.extend(modem.modulate_symbols(&data_grid));
    Ok(Subframe { pilot_indices, data_indices, pilot_grid, data_grid, tx_time })
}

/// Linear convolution with `h`, truncated to the input length, plus circularly
/// symmetric Gaussian noise of variance `noise_var` per sample.
pub fn apply_channel(tx: &[C64], h: &ChannelRealization, noise_var: f64, rng: &mut RngStream) -> Vec<C64> {
    let taps = h.taps();
    (0..tx.len())
        .map(|n| {
            let mut y: C64 = taps.iter().take(n + 1).enumerate().map(|(l, t)| t * tx[n - l]).sum();
            if noise_var > 0.0 {
                y += rng.complex_normal(noise_var);
            }
            y
        })
        .collect()
}

/// `Es / (log2(M) · 10^{Eb/N0 / 10})`. With `charge_cp`, the CP energy is counted
/// against the bit energy, raising the noise by `(N + CP)/N`.
pub fn ebn0_to_noise_var(ebn0_db: f64, cfg: &OfdmConfig, es_per_sample: f64, charge_cp: bool) -> f64 {
    let bits = cfg.constellation.bits_per_symbol() as f64;
    let overhead = if charge_cp { cfg.symbol_len() as f64 / cfg.fft_size as f64 } else { 1.0 };
    es_per_sample * overhead / (bits * 10f64.powf(ebn0_db / 10.0))
}

fn check_shape(a: (usize, usize), b: (usize, usize)) -> Result<(), OfdmError> {
    if a != b {
        return Err(OfdmError::ShapeMismatch { expected: a, found: b });
    }
    Ok(())
}

/// `X̂_k = Y_k / H_k` with the true `H`, then nearest-point decisions.
pub fn zf_perfect_csi(rx_grid: &ComplexMatrix, h: &ChannelRealization, cfg: &OfdmConfig) -> Result<IndexGrid, OfdmError> {
    let freq = dft_response(h.taps(), cfg.fft_size)?;
    if let Some((index, z)) = freq.iter().enumerate().find(|(_, z)| z.norm() <= SPECTRAL_NULL_TOL) {
        return Err(OfdmError::SpectralNull { index, magnitude: z.norm() });
    }
    let eq = ComplexMatrix::from_fn(rx_grid.rows(), rx_grid.cols(), |r, k| rx_grid[(r, k)] / freq[k]);
    Ok(demap_grid(&eq, cfg.constellation))
}

/// `Ĥ_k` = mean over pilot symbols of `Y_k / X_k`.
pub fn ls_estimate(rx_pilot: &ComplexMatrix, pilots: &ComplexMatrix) -> Result<Vec<C64>, OfdmError> {
    check_shape((pilots.rows(), pilots.cols()), (rx_pilot.rows(), rx_pilot.cols()))?;
    if pilots.rows() == 0 {
        return Err(OfdmError::InvalidConfig("no pilot symbols".into()));
    }
    let p = pilots.rows() as f64;
    Ok((0..pilots.cols())
        .map(|k| (0..pilots.rows()).map(|r| rx_pilot[(r, k)] / pilots[(r, k)]).sum::<C64>() / p)
        .collect())
}

/// Wiener shrinkage of the LS estimate, per subcarrier:
/// `Ĥ_k · σ²_{H,k} / (σ²_{H,k} + e_k)`, where `e_k = (1/P²) Σ_p noise_var/|X_{pk}|²` is the
/// LS error variance and `σ²_{H,k} = max(0, mean_p |Y_{pk}/X_{pk}|² − P·e_k)` is the
/// empirical channel power at that subcarrier with the noise bias removed.
pub fn mmse_estimate(rx_pilot: &ComplexMatrix, pilots: &ComplexMatrix, noise_var: f64) -> Result<Vec<C64>, OfdmError> {
    let ls = ls_estimate(rx_pilot, pilots)?;
    let p = pilots.rows() as f64;
    Ok(ls
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let inv_energy: f64 = (0..pilots.rows()).map(|r| 1.0 / pilots[(r, k)].norm_sqr()).sum();
            let err = noise_var * inv_energy / (p * p);
            let power: f64 = (0..pilots.rows()).map(|r| (rx_pilot[(r, k)] / pilots[(r, k)]).norm_sqr()).sum::<f64>() / p;
            let signal = (power - p * err).max(0.0);
            let denom = signal + err;
            if denom > 0.0 {
                h * (signal / denom)
            } else {
                h
            }
        })
        .collect())
}

/// `X̂_k = Ĥ_k* Y_k / (|Ĥ_k|² + noise_var)`.
pub fn mmse_equalize_soft(rx_grid: &ComplexMatrix, h_est: &[C64], noise_var: f64) -> Result<ComplexMatrix, OfdmError> {
    check_shape((rx_grid.rows(), h_est.len()), (rx_grid.rows(), rx_grid.cols()))?;
    Ok(ComplexMatrix::from_fn(rx_grid.rows(), rx_grid.cols(), |r, k| {
        let h = h_est[k];
        let den = h.norm_sqr() + noise_var;
        if den > 0.0 {
            h.conj() * rx_grid[(r, k)] / den
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

pub fn mmse_equalize(
    rx_grid: &ComplexMatrix,
    h_est: &[C64],
    noise_var: f64,
    constellation: Constellation,
) -> Result<IndexGrid, OfdmError> {
    Ok(demap_grid(&mmse_equalize_soft(rx_grid, h_est, noise_var)?, constellation))
}

/// Readout training settings for the ESN equalizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnTrainConfig {
    /// Leading pilot-span samples excluded from training.
    pub washout: usize,
    /// `None` uses the default ridge.
    pub ridge: Option<f64>,
    /// Target delay in samples: the readout learns `tx[n − delay]`.
    pub delay: usize,
}

impl EsnTrainConfig {
    pub fn for_config(cfg: &OfdmConfig) -> Self {
        Self { washout: cfg.cp_len, ridge: None, delay: 0 }
    }
}

/// Trains the readout on the pilot span (received → transmitted samples), runs it
/// over the whole subframe, and demodulates the data symbols.
pub fn esn_equalize(
    model: &EsnModel,
    subframe: &Subframe,
    rx_time: &[C64],
    modem: &OfdmModem,
    train: &EsnTrainConfig,
) -> Result<(IndexGrid, TrainReport), OfdmError> {
    let cfg = modem.config();
    let span = cfg.pilot_span();
    if rx_time.len() != subframe.tx_time.len() {
        return Err(OfdmError::ShapeMismatch { expected: (subframe.tx_time.len(), 1), found: (rx_time.len(), 1) });
    }
    if train.washout + train.delay >= span {
        return Err(OfdmError::InvalidConfig(format!(
            "washout {} plus delay {} leaves no pilot samples",
            train.washout, train.delay
        )));
    }
    let full = model.run_states(rx_time);
    let zero = C64::new(0.0, 0.0);
    let targets: Vec<C64> =
        (0..span).map(|n| if n >= train.delay { subframe.tx_time[n - train.delay] } else { zero }).collect();
    let pilot_traj = StateTrajectory { states: full.states.row_range(0..span), washout: train.washout + train.delay };
    let (trained, report) = train_readout(model, &pilot_traj, &targets, train.ridge)?;
    let w_out = trained.w_out().expect("readout just trained");
    let mut out: Vec<C64> = (0..full.states.rows())
        .map(|t| full.states.row(t).iter().zip(w_out).map(|(x, w)| x * w).sum())
        .collect();
    if train.delay > 0 {
        out.drain(..train.delay);
        out.resize(rx_time.len(), zero);
    }
    let grid = modem.demodulate(&out, cfg.n_pilot_syms, cfg.n_data_syms)?;
    Ok((demap_grid(&grid, cfg.constellation), report))
}

/// Number of mismatched entries and the total compared.
pub fn count_errors(estimated: &IndexGrid, truth: &IndexGrid) -> Result<(usize, usize), OfdmError> {
    check_shape(truth.shape(), estimated.shape())?;
    let errors = estimated.data.iter().zip(&truth.data).filter(|(a, b)| a != b).count();
    Ok((errors, truth.data.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    EsnOptimum,
    EsnRandom,
    ZfPerfect,
    LsMmse,
    MmseMmse,
}

impl Method {
    pub const ALL: [Method; 5] = [Self::EsnOptimum, Self::EsnRandom, Self::ZfPerfect, Self::LsMmse, Self::MmseMmse];

    pub fn label(self) -> &'static str {
        match self {
            Self::EsnOptimum => "esn-optimum",
            Self::EsnRandom => "esn-random",
            Self::ZfPerfect => "zf-perfect",
            Self::LsMmse => "ls-mmse",
            Self::MmseMmse => "mmse-mmse",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerResult {
    pub method: Method,
    pub ebn0_db: f64,
    pub seed: u64,
    pub n_symbols: usize,
    pub n_errors: usize,
    pub ser: f64,
}

/// SER over the data symbols.
pub fn measure_ser(
    estimated: &IndexGrid,
    truth: &IndexGrid,
    method: Method,
    ebn0_db: f64,
    seed: u64,
) -> Result<SerResult, OfdmError> {
    let (n_errors, n_symbols) = count_errors(estimated, truth)?;
    Ok(SerResult { method, ebn0_db, seed, n_symbols, n_errors, ser: n_errors as f64 / n_symbols as f64 })
}

/// Random reservoir drawn fresh for every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomEsnSpec {
    pub n_nodes: usize,
    pub spectral_radius: f64,
    pub sparsity: f64,
    pub activation: Activation,
    pub input_scale: f64,
}

/// Everything one Monte-Carlo trial needs.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub modem: OfdmModem,
    pub channel: ChannelModel,
    pub min_phase_only: bool,
    pub max_channel_attempts: usize,
    pub charge_cp: bool,
    pub methods: Vec<Method>,
    pub optimum: Option<EsnModel>,
    pub random: Option<RandomEsnSpec>,
    pub train: EsnTrainConfig,
}

/// Result rows of one trial plus event counts for the run manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialOutcome {
    pub rows: Vec<SerResult>,
    pub min_phase_rejections: usize,
    pub ridge_fallbacks: usize,
}

/// One channel draw and one subframe, evaluated at every Eb/N0 point by every method.
///
/// Streams derived from `trial_seed` give the channel (0), the subframe (1), the
/// random reservoir (2) and the noise at Eb/N0 index `e` (`100 + e`), so every
/// method sees identical realizations.
pub fn simulate_trial(setup: &TrialSetup, trial_seed: u64, ebn0_db: &[f64]) -> Result<TrialOutcome, OfdmError> {
    let cfg = setup.modem.config();
    let mut channel_rng = RngStream::new(derive_seed(trial_seed, 0));
    let (h, rejections) = if setup.min_phase_only {
        sample_min_phase(&setup.channel, &mut channel_rng, setup.max_channel_attempts)?
    } else {
        (setup.channel.sample(&mut channel_rng), 0)
    };
    if h.len() > cfg.cp_len + 1 {
        log::warn!("channel length {} exceeds CP + 1 = {}", h.len(), cfg.cp_len + 1);
    }
    let subframe = build_subframe(&setup.modem, &mut RngStream::new(derive_seed(trial_seed, 1)))?;
    let es = subframe.sample_power();

    let random_model = match (&setup.random, setup.methods.contains(&Method::EsnRandom)) {
        (Some(spec), true) => Some(
            init_random(spec.n_nodes, 1, 1, spec.spectral_radius, spec.sparsity, &mut RngStream::new(derive_seed(trial_seed, 2)))?
                .with_activation(spec.activation)
                .with_input_scale(spec.input_scale)?,
        ),
        (None, true) => return Err(OfdmError::InvalidConfig("esn-random requested without a reservoir spec".into())),
        _ => None,
    };
    if setup.methods.contains(&Method::EsnOptimum) && setup.optimum.is_none() {
        return Err(OfdmError::InvalidConfig("esn-optimum requested without weights".into()));
    }

    let mut outcome = TrialOutcome { min_phase_rejections: rejections, ..TrialOutcome::default() };
    for (e, &ebn0) in ebn0_db.iter().enumerate() {
        let noise_var = ebn0_to_noise_var(ebn0, cfg, es, setup.charge_cp);
        let rx = apply_channel(&subframe.tx_time, &h, noise_var, &mut RngStream::new(derive_seed(trial_seed, 100 + e as u64)));
        let rx_pilot = setup.modem.demodulate(&rx, 0, cfg.n_pilot_syms)?;
        let rx_data = setup.modem.demodulate(&rx, cfg.n_pilot_syms, cfg.n_data_syms)?;
        for &method in &setup.methods {
            let decided = match method {
                Method::ZfPerfect => zf_perfect_csi(&rx_data, &h, cfg)?,
                Method::LsMmse => {
                    let est = ls_estimate(&rx_pilot, &subframe.pilot_grid)?;
                    mmse_equalize(&rx_data, &est, noise_var, cfg.constellation)?
                }
                Method::MmseMmse => {
                    let est = mmse_estimate(&rx_pilot, &subframe.pilot_grid, noise_var)?;
                    mmse_equalize(&rx_data, &est, noise_var, cfg.constellation)?
                }
                Method::EsnOptimum | Method::EsnRandom => {
                    let model = if method == Method::EsnOptimum { setup.optimum.as_ref() } else { random_model.as_ref() };
                    let (grid, report) = esn_equalize(model.expect("checked above"), &subframe, &rx, &setup.modem, &setup.train)?;
                    outcome.ridge_fallbacks += report.ridge_fallback as usize;
                    grid
                }
            };
            outcome.rows.push(measure_ser(&decided, &subframe.data_indices, method, ebn0, trial_seed)?);
        }
    }
    Ok(outcome)
}
