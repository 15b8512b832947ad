//! Random multipath channels and their sampled frequency-domain inverse.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{checked_vector, dft_response, poly_roots, NumError};
use crate::{RngStream, C64};

/// Magnitude below which a sampled frequency response counts as a null.
pub const SPECTRAL_NULL_TOL: f64 = 1e-9;

/// Zeros must sit at least this far inside the unit circle to count as minimum phase.
pub const MIN_PHASE_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("bad channel profile: {0}")]
    BadProfile(String),
    #[error("spectral null at frequency index {index} (|H| = {magnitude:e})")]
    SpectralNull { index: usize, magnitude: f64 },
    #[error("no minimum-phase realization in {attempts} draws")]
    TooManyRejections { attempts: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerical(#[from] NumError),
    #[error("reading profile {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One draw of a channel impulse response `h = [h_0, …, h_{L−1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    taps: Vec<C64>,
}

impl ChannelRealization {
    pub fn new(taps: Vec<C64>) -> Result<Self, ChannelError> {
        Ok(Self { taps: checked_vector(taps)? })
    }

    pub fn taps(&self) -> &[C64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// `H(e^{jω_n})` at `ω_n = 2πn/N`.
    pub fn freq_response(&self, n: usize) -> Result<Vec<C64>, ChannelError> {
        Ok(dft_response(&self.taps, n)?)
    }
}

/// True when every zero of `H(z) = Σ h_ℓ z^{−ℓ}` lies strictly inside the unit circle.
///
/// The zeros are the roots of `h_0 z^{L−1} + h_1 z^{L−2} + … + h_{L−1}`. A vanishing
/// leading tap puts a zero at infinity, so such channels are not minimum phase.
pub fn is_minimum_phase(h: &ChannelRealization) -> Result<bool, ChannelError> {
    let taps = h.taps();
    if taps.len() == 1 {
        return Ok(taps[0].norm() > 0.0);
    }
    if taps[0].norm() <= 1e-12 {
        return Ok(false);
    }
    let ascending: Vec<C64> = taps.iter().rev().cloned().collect();
    let zeros = poly_roots(&ascending)?;
    Ok(zeros.iter().all(|z| z.norm() < 1.0 - MIN_PHASE_MARGIN))
}

/// `v_i = 1 / H(e^{j2πi/N})`.
pub fn channel_inverse_freq(h: &ChannelRealization, n: usize) -> Result<Vec<C64>, ChannelError> {
    let response = h.freq_response(n)?;
    if let Some((index, z)) = response.iter().enumerate().find(|(_, z)| z.norm() <= SPECTRAL_NULL_TOL) {
        return Err(ChannelError::SpectralNull { index, magnitude: z.norm() });
    }
    Ok(response.iter().map(|z| z.inv()).collect())
}

/// Exponentially decaying power delay profile with a unit first tap:
/// `h_0 = 1`, `h_ℓ ~ CN(e^{−1.5ℓ} μ_0, ½ e^{−3.75ℓ})`, `μ_0 ~ CN(0, 1)` drawn once per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpPdp {
    pub taps: usize,
    pub mean_decay: f64,
    pub variance_scale: f64,
    pub variance_decay: f64,
    /// Pins `μ_0` instead of drawing it.
    pub fixed_mu0: Option<C64>,
    /// Replaces the per-tap variances of taps `1..L` (length `L − 1`).
    pub variance_override: Option<Vec<f64>>,
}

impl ExpPdp {
    pub fn new(taps: usize) -> Result<Self, ChannelError> {
        if taps < 2 {
            return Err(ChannelError::InvalidArgument(format!("exp-PDP needs L >= 2, got {taps}")));
        }
        Ok(Self {
            taps,
            mean_decay: 1.5,
            variance_scale: 0.5,
            variance_decay: 3.75,
            fixed_mu0: None,
            variance_override: None,
        })
    }

    pub fn with_mu0(mut self, mu0: C64) -> Self {
        self.fixed_mu0 = Some(mu0);
        self
    }

    pub fn with_variances(mut self, variances: Vec<f64>) -> Result<Self, ChannelError> {
        if variances.len() != self.taps - 1 || variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(ChannelError::InvalidArgument(format!(
                "need {} non-negative variances for taps 1..L",
                self.taps - 1
            )));
        }
        self.variance_override = Some(variances);
        Ok(self)
    }

    /// `μ_ℓ` given `μ_0`, for `ℓ = 1..L`.
    pub fn means(&self, mu0: C64) -> Vec<C64> {
        (1..self.taps).map(|l| mu0 * (-self.mean_decay * l as f64).exp()).collect()
    }

    /// `σ_ℓ²` for `ℓ = 1..L`.
    pub fn variances(&self) -> Vec<f64> {
        match &self.variance_override {
            Some(v) => v.clone(),
            None => (1..self.taps)
                .map(|l| self.variance_scale * (-self.variance_decay * l as f64).exp())
                .collect(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> ChannelRealization {
        let mu0 = self.fixed_mu0.unwrap_or_else(|| rng.complex_normal(1.0));
        let mut taps = Vec::with_capacity(self.taps);
        taps.push(C64::new(1.0, 0.0));
        for (mean, var) in self.means(mu0).into_iter().zip(self.variances()) {
            let tap = if var > 0.0 { mean + rng.complex_normal(var) } else { mean };
            taps.push(tap);
        }
        ChannelRealization { taps }
    }
}

pub fn sample_exp_pdp(taps: usize, rng: &mut RngStream) -> Result<ChannelRealization, ChannelError> {
    Ok(ExpPdp::new(taps)?.sample(rng))
}

/// Independent taps `h_ℓ ~ CN(μ_ℓ, σ_0²)` with fixed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidGaussian {
    pub means: Vec<C64>,
    pub sigma0: f64,
}

impl IidGaussian {
    pub fn new(means: Vec<C64>, sigma0: f64) -> Result<Self, ChannelError> {
        if means.is_empty() || !(sigma0 >= 0.0) {
            return Err(ChannelError::InvalidArgument("need L >= 1 means and sigma0 >= 0".into()));
        }
        Ok(Self { means, sigma0 })
    }

    /// Means `μ_ℓ = e^{−1.5ℓ}`, the exp-PDP mean profile with `μ_0 = 1`.
    pub fn with_decaying_means(taps: usize, sigma0: f64) -> Result<Self, ChannelError> {
        Self::new((0..taps).map(|l| C64::new((-1.5 * l as f64).exp(), 0.0)).collect(), sigma0)
    }

    pub fn sample(&self, rng: &mut RngStream) -> ChannelRealization {
        let var = self.sigma0 * self.sigma0;
        let taps = self.means.iter().map(|&m| m + rng.complex_normal(var)).collect();
        ChannelRealization { taps }
    }
}

/// Tapped-delay-line profile file: `name`, `delays_taps`, `powers_db`, `k_factors_db`,
/// and optionally `num_taps` (defaults to the largest delay plus one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdlProfile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_taps: Option<usize>,
    pub delays_taps: Vec<usize>,
    pub powers_db: Vec<f64>,
    pub k_factors_db: Vec<f64>,
}

const CDL_D: &str = include_str!("../profiles/cdl-d.toml");
const CDL_E: &str = include_str!("../profiles/cdl-e.toml");

impl TdlProfile {
    pub fn from_toml_str(text: &str) -> Result<Self, ChannelError> {
        let p: Self = toml::from_str(text).map_err(|e| ChannelError::BadProfile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ChannelError> {
        let p: Self = serde_json::from_str(text).map_err(|e| ChannelError::BadProfile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Loads a `.json` or TOML profile from disk, or one of the built-in names
    /// `cdl-d` / `cdl-e`.
    pub fn load(path: &str) -> Result<Self, ChannelError> {
        if let Some(p) = Self::builtin(path) {
            return Ok(p);
        }
        let text = std::fs::read_to_string(path)
            .map_err(|source| ChannelError::Io { path: path.to_string(), source })?;
        if Path::new(path).extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let text = match name.to_ascii_lowercase().as_str() {
            "cdl-d" => CDL_D,
            "cdl-e" => CDL_E,
            _ => return None,
        };
        Some(Self::from_toml_str(text).expect("built-in profile is valid"))
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let n = self.delays_taps.len();
        if n == 0 {
            return Err(ChannelError::BadProfile("profile has no paths".into()));
        }
        if self.powers_db.len() != n || self.k_factors_db.len() != n {
            return Err(ChannelError::BadProfile(format!(
                "length mismatch: {} delays, {} powers, {} K-factors",
                n,
                self.powers_db.len(),
                self.k_factors_db.len()
            )));
        }
        if self.powers_db.iter().any(|p| !p.is_finite()) {
            return Err(ChannelError::BadProfile("powers must be finite dB values".into()));
        }
        if self.k_factors_db.iter().any(|k| k.is_nan() || *k == f64::INFINITY) {
            return Err(ChannelError::BadProfile("K-factors must be finite dB values or -inf".into()));
        }
        let taps = self.taps();
        if let Some(d) = self.delays_taps.iter().find(|&&d| d >= taps) {
            return Err(ChannelError::BadProfile(format!("delay {d} beyond L - 1 = {}", taps - 1)));
        }
        Ok(())
    }

    /// Channel length `L`.
    pub fn taps(&self) -> usize {
        self.num_taps.unwrap_or_else(|| self.delays_taps.iter().max().map_or(1, |d| d + 1))
    }

    pub fn powers_linear(&self) -> Vec<f64> {
        self.powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect()
    }

    pub fn k_factors_linear(&self) -> Vec<f64> {
        self.k_factors_db.iter().map(|k| 10f64.powf(k / 10.0)).collect()
    }

    /// Each path contributes `√P (√(K/(K+1)) + √(1/(K+1)) g)`, `g ~ CN(0,1)`, to the tap
    /// at its delay. Paths sharing a delay add.
    pub fn sample(&self, rng: &mut RngStream) -> ChannelRealization {
        let mut taps = vec![C64::new(0.0, 0.0); self.taps()];
        for ((&delay, power), k) in
            self.delays_taps.iter().zip(self.powers_linear()).zip(self.k_factors_linear())
        {
            let los = (k / (k + 1.0)).sqrt();
            let scatter = (1.0 / (k + 1.0)).sqrt();
            let g = rng.complex_normal(1.0);
            taps[delay] += power.sqrt() * (C64::new(los, 0.0) + scatter * g);
        }
        ChannelRealization { taps }
    }
}

pub fn sample_tdl(profile: &TdlProfile, rng: &mut RngStream) -> Result<ChannelRealization, ChannelError> {
    profile.validate()?;
    Ok(profile.sample(rng))
}

/// Any of the supported channel families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChannelModel {
    ExpPdp(ExpPdp),
    Tdl(TdlProfile),
    Iid(IidGaussian),
}

impl ChannelModel {
    pub fn taps(&self) -> usize {
        match self {
            Self::ExpPdp(m) => m.taps,
            Self::Tdl(p) => p.taps(),
            Self::Iid(m) => m.means.len(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> ChannelRealization {
        match self {
            Self::ExpPdp(m) => m.sample(rng),
            Self::Tdl(p) => p.sample(rng),
            Self::Iid(m) => m.sample(rng),
        }
    }
}

/// Rejection-samples a minimum-phase realization. Returns it with the number of
/// rejected draws.
pub fn sample_min_phase(
    model: &ChannelModel,
    rng: &mut RngStream,
    max_attempts: usize,
) -> Result<(ChannelRealization, usize), ChannelError> {
    for attempt in 0..max_attempts {
        let h = model.sample(rng);
        if is_minimum_phase(&h)? {
            return Ok((h, attempt));
        }
    }
    Err(ChannelError::TooManyRejections { attempts: max_attempts })
}
