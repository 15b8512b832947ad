//! Experiment configuration: a TOML file whose every field can be overridden
//! with `--set section.key=value`.

use std::path::{Path, PathBuf};

use rc_eq::channel::{ChannelModel, ExpPdp, IidGaussian, TdlProfile};
use rc_eq::esn::Activation;
use rc_eq::ofdm::{Constellation, EsnTrainConfig, Method, OfdmConfig, RandomEsnSpec};
use rc_eq::ratfit::DEFAULT_RHO_MAX;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelFamily {
    /// Unit first tap, exponentially decaying mean and variance.
    ExpPdp,
    /// Tapped delay line from a profile file or built-in name.
    Tdl,
    /// Independent Gaussian taps `CN(e^{−1.5ℓ}, σ₀²)`.
    Iid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub family: ChannelFamily,
    /// Tap count for the exp-PDP and i.i.d. families.
    pub taps: usize,
    /// Profile path, or `cdl-d` / `cdl-e`, for the TDL family.
    pub profile: String,
    /// Tap standard deviation for the i.i.d. family.
    pub sigma0: f64,
    pub min_phase_only: bool,
    /// Draws allowed per accepted realization.
    pub max_attempts: usize,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            family: ChannelFamily::ExpPdp,
            taps: 10,
            profile: "cdl-d".into(),
            sigma0: 0.05,
            min_phase_only: true,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    /// Frequency samples `N` of the channel inverse.
    pub n_freq: usize,
    /// Channel realizations used for the covariance.
    pub n_obs: usize,
    /// Retained basis vectors `M`.
    pub m: usize,
    pub centered: bool,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self { n_freq: 128, n_obs: 4000, m: 10, centered: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub k: usize,
    pub k_prime: usize,
    pub rho_max: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { k: 10, k_prime: 9, rho_max: DEFAULT_RHO_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsnSection {
    pub activation: Activation,
    /// Gain on the received samples before they enter either reservoir.
    pub input_scale: f64,
    pub spectral_radius: f64,
    pub sparsity: f64,
    /// Random reservoir size; 0 means `M·K`, the size of the optimum reservoir.
    pub random_nodes: usize,
    /// Readout ridge; absent means the default ridge.
    pub ridge: Option<f64>,
    /// Washout in samples; absent means the CP length.
    pub washout: Option<usize>,
    pub delay: usize,
}

impl Default for EsnSection {
    fn default() -> Self {
        Self {
            activation: Activation::SplitTanh,
            input_scale: 1.0,
            spectral_radius: 0.4,
            sparsity: 0.6,
            random_nodes: 0,
            ridge: None,
            washout: None,
            delay: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSection {
    pub fft_size: usize,
    pub cp_len: usize,
    pub n_pilot_syms: usize,
    pub n_data_syms: usize,
    pub constellation: Constellation,
    /// Count the CP energy against the bit energy.
    pub charge_cp: bool,
}

impl Default for OfdmSection {
    fn default() -> Self {
        let d = OfdmConfig::desk_scale(Constellation::Qam16);
        Self {
            fft_size: d.fft_size,
            cp_len: d.cp_len,
            n_pilot_syms: d.n_pilot_syms,
            n_data_syms: d.n_data_syms,
            constellation: d.constellation,
            charge_cp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Ascending Eb/N0 points in dB (`inf` means noiseless).
    pub ebn0_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ebn0_db: (0..=10).map(|i| 2.5 * i as f64).collect(),
            trials: 50,
            seed: 1,
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSection {
    pub taps: usize,
    pub sigma0: f64,
    pub n_freq: usize,
    pub n_obs: usize,
    pub centered: bool,
    /// Points of the log-spaced ε grid over `[σ₀⁶, σ₀²]`.
    pub eps_points: usize,
}

impl Default for RankSection {
    fn default() -> Self {
        Self { taps: 3, sigma0: 0.05, n_freq: 64, n_obs: 20_000, centered: false, eps_points: 13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write an SVG plot after `run-ser`.
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plot: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub channel: ChannelSection,
    pub basis: BasisSection,
    pub fit: FitSection,
    pub esn: EsnSection,
    pub ofdm: OfdmSection,
    pub sweep: SweepSection,
    pub rank: RankSection,
    pub output: OutputSection,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Applies `key=value` overrides (dotted keys) on top of `text`, then validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| config_err(format!("override `{item}` is not KEY=VALUE")))?;
            let path: Vec<&str> = key.trim().split('.').collect();
            if path.iter().any(|p| p.is_empty()) {
                return Err(config_err(format!("bad override key `{key}`")));
            }
            let mut node = &mut table;
            for part in &path[..path.len() - 1] {
                node = node
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| config_err(format!("`{part}` in `{key}` is not a section")))?;
            }
            node.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("reading {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("channel.taps", self.channel.taps),
            ("channel.max_attempts", self.channel.max_attempts),
            ("basis.n_freq", self.basis.n_freq),
            ("basis.n_obs", self.basis.n_obs),
            ("basis.m", self.basis.m),
            ("fit.k", self.fit.k),
            ("sweep.trials", self.sweep.trials),
            ("rank.taps", self.rank.taps),
            ("rank.n_freq", self.rank.n_freq),
            ("rank.n_obs", self.rank.n_obs),
            ("rank.eps_points", self.rank.eps_points),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(config_err(format!("{name} must be positive")));
        }
        if self.sweep.ebn0_db.is_empty() {
            return Err(config_err("sweep.ebn0_db is empty"));
        }
        if self.sweep.ebn0_db.iter().any(|x| x.is_nan()) || self.sweep.ebn0_db.windows(2).any(|w| w[0] > w[1]) {
            return Err(config_err("sweep.ebn0_db must be sorted ascending"));
        }
        if self.sweep.methods.is_empty() {
            return Err(config_err("sweep.methods is empty"));
        }
        if self.basis.m > self.basis.n_freq {
            return Err(config_err("basis.m cannot exceed basis.n_freq"));
        }
        if self.fit.k_prime >= self.fit.k {
            return Err(config_err("fit.k_prime must be below fit.k"));
        }
        if self.basis.n_freq < self.fit.k + self.fit.k_prime + 1 {
            return Err(config_err("basis.n_freq must be at least k + k_prime + 1"));
        }
        if !(self.fit.rho_max > 0.0 && self.fit.rho_max < 1.0) {
            return Err(config_err("fit.rho_max must lie in (0, 1)"));
        }
        if !(self.esn.spectral_radius > 0.0 && self.esn.spectral_radius < 1.0) {
            return Err(config_err("esn.spectral_radius must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.esn.sparsity) {
            return Err(config_err("esn.sparsity must lie in [0, 1)"));
        }
        if !(self.esn.input_scale > 0.0 && self.esn.input_scale.is_finite()) {
            return Err(config_err("esn.input_scale must be positive"));
        }
        if self.esn.ridge.is_some_and(|r| !(r >= 0.0 && r.is_finite())) {
            return Err(config_err("esn.ridge must be finite and non-negative"));
        }
        if !(self.channel.sigma0 >= 0.0 && self.rank.sigma0 > 0.0) {
            return Err(config_err("sigma0 values must be positive"));
        }
        self.ofdm_config().validate().map_err(|e| config_err(e.to_string()))?;
        let taps = self.channel_model()?.taps();
        if self.basis.n_freq < taps {
            return Err(config_err(format!("basis.n_freq must be at least the channel length {taps}")));
        }
        if taps > self.ofdm.cp_len + 1 {
            log::warn!("channel length {taps} exceeds cp_len + 1 = {}", self.ofdm.cp_len + 1);
        }
        Ok(())
    }

    pub fn ofdm_config(&self) -> OfdmConfig {
        OfdmConfig {
            fft_size: self.ofdm.fft_size,
            cp_len: self.ofdm.cp_len,
            n_pilot_syms: self.ofdm.n_pilot_syms,
            n_data_syms: self.ofdm.n_data_syms,
            constellation: self.ofdm.constellation,
        }
    }

    pub fn channel_model(&self) -> Result<ChannelModel, CliError> {
        let c = &self.channel;
        Ok(match c.family {
            ChannelFamily::ExpPdp => ChannelModel::ExpPdp(ExpPdp::new(c.taps).map_err(|e| config_err(e.to_string()))?),
            ChannelFamily::Tdl => ChannelModel::Tdl(TdlProfile::load(&c.profile).map_err(|e| config_err(e.to_string()))?),
            ChannelFamily::Iid => ChannelModel::Iid(
                IidGaussian::with_decaying_means(c.taps, c.sigma0).map_err(|e| config_err(e.to_string()))?,
            ),
        })
    }

    /// Channel model used by `verify-rank`: i.i.d. taps with the rank section's settings.
    pub fn rank_model(&self) -> Result<ChannelModel, CliError> {
        Ok(ChannelModel::Iid(
            IidGaussian::with_decaying_means(self.rank.taps, self.rank.sigma0).map_err(|e| config_err(e.to_string()))?,
        ))
    }

    pub fn optimum_nodes(&self) -> usize {
        self.basis.m * self.fit.k
    }

    pub fn random_spec(&self) -> RandomEsnSpec {
        RandomEsnSpec {
            n_nodes: if self.esn.random_nodes == 0 { self.optimum_nodes() } else { self.esn.random_nodes },
            spectral_radius: self.esn.spectral_radius,
            sparsity: self.esn.sparsity,
            activation: self.esn.activation,
            input_scale: self.esn.input_scale,
        }
    }

    pub fn train_config(&self) -> EsnTrainConfig {
        EsnTrainConfig {
            washout: self.esn.washout.unwrap_or(self.ofdm.cp_len),
            ridge: self.esn.ridge,
            delay: self.esn.delay,
        }
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::to_toml`] with the output section reset, hex encoded,
    /// so the same experiment hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let experiment = Self { output: OutputSection::default(), ..self.clone() };
        let digest = Sha256::digest(experiment.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
