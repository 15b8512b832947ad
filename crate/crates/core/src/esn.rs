//! Echo state network with a trained linear readout.
//!
//! `x[n] = σ(W_res x[n−1] + W_in s·u[n])`, `y[n] = W_out x[n]`, with `x[−1] = 0`
//! and `s` the input scale. Reservoirs are either drawn at random or assembled
//! from fitted poles and residues (`W_in = vec(q)`, `W_res = diag(p)`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{default_ridge, ridge_pinv_solve_with, spectral_radius, ComplexMatrix, NumError, DEFAULT_TOLERANCES};
use crate::ratfit::{PoleResidueSet, RatfitError, WeightEntry};
use crate::{RngStream, C64};

/// Version tag written into weight files.
pub const WEIGHT_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EsnError {
    #[error("sparsified reservoir has spectral radius {radius:e}; cannot rescale")]
    DegenerateReservoir { radius: f64 },
    #[error("pole {index} has magnitude {magnitude} > rho_max {rho_max}")]
    UnstablePole { index: usize, magnitude: f64, rho_max: f64 },
    #[error("model has no trained readout")]
    ReadoutMissing,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerical(#[from] NumError),
    #[error(transparent)]
    Ratfit(#[from] RatfitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Linear,
    /// `tanh` applied separately to the real and imaginary parts.
    SplitTanh,
}

impl Activation {
    pub fn apply(self, z: C64) -> C64 {
        match self {
            Self::Linear => z,
            Self::SplitTanh => C64::new(z.re.tanh(), z.im.tanh()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Random,
    Optimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Reservoir {
    Diagonal(Vec<C64>),
    Dense(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnModel {
    /// `N_nodes × 1` input weights.
    w_in: Vec<C64>,
    w_res: Reservoir,
    /// `1 × N_nodes` readout.
    w_out: Option<Vec<C64>>,
    pub activation: Activation,
    pub init_kind: InitKind,
    /// Gain applied to the input stream before `W_in`.
    pub input_scale: f64,
}

/// Reservoir states, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    /// `T × N_nodes`; row `n` is `x[n]ᵀ`.
    pub states: ComplexMatrix,
    pub washout: usize,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.rows() == 0
    }

    pub fn with_washout(mut self, washout: usize) -> Result<Self, EsnError> {
        if washout >= self.len() {
            return Err(EsnError::InvalidArgument(format!("washout {washout} must be below T = {}", self.len())));
        }
        self.washout = washout;
        Ok(self)
    }
}

/// Outcome of readout training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean `|y − ŷ|²` over the non-washout steps.
    pub mse: f64,
    pub ridge: f64,
    /// True when the unregularized solve was singular and the default ridge was used.
    pub ridge_fallback: bool,
}

impl EsnModel {
    fn check(&self) -> Result<(), EsnError> {
        let n = self.w_in.len();
        if n == 0 {
            return Err(EsnError::InvalidArgument("reservoir has no nodes".into()));
        }
        let res_ok = match &self.w_res {
            Reservoir::Diagonal(p) => p.len() == n,
            Reservoir::Dense(w) => w.rows() == n && w.cols() == n,
        };
        if !res_ok || self.w_out.as_ref().is_some_and(|w| w.len() != n) {
            return Err(EsnError::InvalidArgument("inconsistent weight dimensions".into()));
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return Err(EsnError::InvalidArgument(format!("input scale must be positive, got {}", self.input_scale)));
        }
        Ok(())
    }

    /// Model from explicit weights. A diagonal `w_res` is stored as a diagonal reservoir.
    pub fn from_weights(
        w_in: Vec<C64>,
        w_res: ComplexMatrix,
        activation: Activation,
        init_kind: InitKind,
    ) -> Result<Self, EsnError> {
        let w_res = if w_res.is_square() && w_res.is_diagonal() {
            Reservoir::Diagonal(w_res.diagonal())
        } else {
            Reservoir::Dense(w_res)
        };
        let model = Self { w_in, w_res, w_out: None, activation, init_kind, input_scale: 1.0 };
        model.check()?;
        Ok(model)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_input_scale(mut self, scale: f64) -> Result<Self, EsnError> {
        self.input_scale = scale;
        self.check()?;
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.w_in.len()
    }

    pub fn d_in(&self) -> usize {
        1
    }

    pub fn d_out(&self) -> usize {
        1
    }

    /// `W_in` as an `N_nodes × 1` matrix.
    pub fn w_in(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(std::slice::from_ref(&self.w_in)).expect("non-empty")
    }

    pub fn w_res(&self) -> ComplexMatrix {
        match &self.w_res {
            Reservoir::Diagonal(p) => ComplexMatrix::from_diagonal(p),
            Reservoir::Dense(w) => w.clone(),
        }
    }

    pub fn reservoir_is_diagonal(&self) -> bool {
        matches!(self.w_res, Reservoir::Diagonal(_))
    }

    /// `W_out` as a row, if trained.
    pub fn w_out(&self) -> Option<&[C64]> {
        self.w_out.as_deref()
    }

    pub fn with_readout(mut self, w_out: Vec<C64>) -> Result<Self, EsnError> {
        self.w_out = Some(w_out);
        self.check()?;
        Ok(self)
    }

    pub fn spectral_radius(&self) -> Result<f64, EsnError> {
        Ok(match &self.w_res {
            Reservoir::Diagonal(p) => p.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Reservoir::Dense(w) => spectral_radius(w)?,
        })
    }

    /// Runs the reservoir over a scalar input stream from the zero state.
    pub fn run_states(&self, input: &[C64]) -> StateTrajectory {
        let n = self.n_nodes();
        let mut states = ComplexMatrix::zeros(input.len(), n);
        let mut x = vec![C64::new(0.0, 0.0); n];
        let mut next = vec![C64::new(0.0, 0.0); n];
        for (t, &u) in input.iter().enumerate() {
            let drive = u * self.input_scale;
            match &self.w_res {
                Reservoir::Diagonal(p) => {
                    for i in 0..n {
                        next[i] = self.activation.apply(p[i] * x[i] + self.w_in[i] * drive);
                    }
                }
                Reservoir::Dense(w) => {
                    for i in 0..n {
                        let row = w.row(i);
                        let mut acc = self.w_in[i] * drive;
                        for (a, b) in row.iter().zip(&x) {
                            acc += a * b;
                        }
                        next[i] = self.activation.apply(acc);
                    }
                }
            }
            std::mem::swap(&mut x, &mut next);
            states.row_mut(t).copy_from_slice(&x);
        }
        StateTrajectory { states, washout: 0 }
    }

    /// `y[n] = W_out x[n]` from freshly computed states.
    pub fn predict(&self, input: &[C64]) -> Result<Vec<C64>, EsnError> {
        let w_out = self.w_out.as_ref().ok_or(EsnError::ReadoutMissing)?;
        let traj = self.run_states(input);
        Ok(readout(&traj.states, w_out))
    }
}

fn readout(states: &ComplexMatrix, w_out: &[C64]) -> Vec<C64> {
    (0..states.rows()).map(|t| states.row(t).iter().zip(w_out).map(|(x, w)| x * w).sum()).collect()
}

/// Random reservoir: `W_in`, `W_res` entries i.i.d. `U(−1,1) + jU(−1,1)`, each `W_res`
/// entry zeroed with probability `sparsity`, then `W_res` rescaled to the target
/// spectral radius.
pub fn init_random(
    n_nodes: usize,
    d_in: usize,
    d_out: usize,
    spectral_radius_target: f64,
    sparsity: f64,
    rng: &mut RngStream,
) -> Result<EsnModel, EsnError> {
    if n_nodes == 0 || d_in != 1 || d_out != 1 {
        return Err(EsnError::InvalidArgument(format!(
            "need n_nodes >= 1 and d_in = d_out = 1 (got {n_nodes}, {d_in}, {d_out})"
        )));
    }
    if !(spectral_radius_target > 0.0 && spectral_radius_target < 1.0) {
        return Err(EsnError::InvalidArgument(format!("spectral radius target {spectral_radius_target} not in (0, 1)")));
    }
    if !(0.0..1.0).contains(&sparsity) {
        return Err(EsnError::InvalidArgument(format!("sparsity {sparsity} not in [0, 1)")));
    }
    let w_in: Vec<C64> = (0..n_nodes).map(|_| rng.complex_uniform()).collect();
    let w_res = ComplexMatrix::from_fn(n_nodes, n_nodes, |_, _| {
        let value = rng.complex_uniform();
        if rng.unit() < sparsity {
            C64::new(0.0, 0.0)
        } else {
            value
        }
    });
    let radius = spectral_radius(&w_res)?;
    if radius < 1e-12 {
        return Err(EsnError::DegenerateReservoir { radius });
    }
    let scaled = w_res.scale(C64::new(spectral_radius_target / radius, 0.0));
    Ok(EsnModel {
        w_in,
        w_res: Reservoir::Dense(scaled),
        w_out: None,
        activation: Activation::SplitTanh,
        init_kind: InitKind::Random,
        input_scale: 1.0,
    })
}

/// Reservoir assembled from fitted single-pole filters: node order is m-major
/// (all poles of the first set, then the second, ...), `W_in` holds the residues and
/// `W_res` the poles on its diagonal.
pub fn init_optimum(sets: &[PoleResidueSet], rho_max: f64) -> Result<EsnModel, EsnError> {
    if sets.is_empty() {
        return Err(EsnError::InvalidArgument("no pole/residue sets".into()));
    }
    let poles: Vec<C64> = sets.iter().flat_map(|s| s.poles.iter().cloned()).collect();
    let residues: Vec<C64> = sets.iter().flat_map(|s| s.residues.iter().cloned()).collect();
    if let Some((index, p)) = poles.iter().enumerate().find(|(_, p)| p.norm() > rho_max * (1.0 + 1e-12)) {
        return Err(EsnError::UnstablePole { index, magnitude: p.norm(), rho_max });
    }
    let model = EsnModel {
        w_in: residues,
        w_res: Reservoir::Diagonal(poles),
        w_out: None,
        activation: Activation::SplitTanh,
        init_kind: InitKind::Optimum,
        input_scale: 1.0,
    };
    model.check()?;
    Ok(model)
}

/// Least-squares readout `argmin_w ‖X w − y‖² + ridge ‖w‖²` over the non-washout steps.
///
/// `ridge = None` selects the default ridge. With `Some(0.0)` the plain solve is
/// tried first and the default ridge is used only if it is singular.
pub fn train_readout(
    model: &EsnModel,
    traj: &StateTrajectory,
    targets: &[C64],
    ridge: Option<f64>,
) -> Result<(EsnModel, TrainReport), EsnError> {
    if targets.len() != traj.len() {
        return Err(NumError::DimensionMismatch { expected: traj.len(), found: targets.len() }.into());
    }
    if traj.states.cols() != model.n_nodes() {
        return Err(NumError::DimensionMismatch { expected: model.n_nodes(), found: traj.states.cols() }.into());
    }
    if traj.washout >= traj.len() {
        return Err(EsnError::InvalidArgument(format!("washout {} must be below T = {}", traj.washout, traj.len())));
    }
    let x = traj.states.row_range(traj.washout..traj.len());
    let y = &targets[traj.washout..];
    let fallback = default_ridge(&x, &DEFAULT_TOLERANCES);
    let (solution, ridge_fallback) = match ridge {
        None => (ridge_pinv_solve_with(&x, y, fallback, &DEFAULT_TOLERANCES)?, false),
        Some(r) => match ridge_pinv_solve_with(&x, y, r, &DEFAULT_TOLERANCES) {
            Ok(s) => (s, false),
            Err(NumError::SingularSystem { condition }) => {
                log::warn!("readout solve singular (estimate {condition:e}); using ridge {fallback:e}");
                (ridge_pinv_solve_with(&x, y, fallback, &DEFAULT_TOLERANCES)?, true)
            }
            Err(e) => return Err(e.into()),
        },
    };
    let fitted = readout(&x, &solution.x);
    let mse = fitted.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / y.len() as f64;
    let trained = model.clone().with_readout(solution.x)?;
    Ok((trained, TrainReport { mse, ridge: solution.ridge, ridge_fallback }))
}

/// Dense weights of a randomly initialized model, as stored in a weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseWeights {
    pub w_in: Vec<C64>,
    pub w_res: ComplexMatrix,
}

/// Serialized model: the fitted single-pole filters (optimum init) or dense weights
/// (random init), plus the readout and activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub version: u32,
    pub init_kind: InitKind,
    pub activation: Activation,
    pub input_scale: f64,
    pub rho_max: f64,
    pub n_nodes: usize,
    #[serde(default)]
    pub entries: Vec<WeightEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<DenseWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_out: Option<Vec<C64>>,
    /// Free-form run metadata (sorted keys).
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl WeightFile {
    /// Describes an optimum-init model built from `entries`.
    pub fn optimum(entries: Vec<WeightEntry>, activation: Activation, input_scale: f64, rho_max: f64) -> Self {
        let n_nodes = entries.iter().map(|e| e.poles.len()).sum();
        Self {
            version: WEIGHT_FILE_VERSION,
            init_kind: InitKind::Optimum,
            activation,
            input_scale,
            rho_max,
            n_nodes,
            entries,
            dense: None,
            w_out: None,
            meta: BTreeMap::new(),
        }
    }

    /// Snapshot of any model. Optimum models need the entries they were built from.
    pub fn from_model(model: &EsnModel, entries: Vec<WeightEntry>, rho_max: f64) -> Self {
        let dense = match model.init_kind {
            InitKind::Random => Some(DenseWeights { w_in: model.w_in.clone(), w_res: model.w_res() }),
            InitKind::Optimum => None,
        };
        Self {
            version: WEIGHT_FILE_VERSION,
            init_kind: model.init_kind,
            activation: model.activation,
            input_scale: model.input_scale,
            rho_max,
            n_nodes: model.n_nodes(),
            entries,
            dense,
            w_out: model.w_out.clone(),
            meta: BTreeMap::new(),
        }
    }

    pub fn to_model(&self) -> Result<EsnModel, EsnError> {
        let model = match self.init_kind {
            InitKind::Optimum => {
                let sets: Result<Vec<PoleResidueSet>, RatfitError> =
                    self.entries.iter().map(|e| e.pole_residues()).collect();
                init_optimum(&sets?, self.rho_max)?
            }
            InitKind::Random => {
                let dense = self
                    .dense
                    .as_ref()
                    .ok_or_else(|| EsnError::InvalidArgument("random model without dense weights".into()))?;
                EsnModel::from_weights(dense.w_in.clone(), dense.w_res.clone(), self.activation, InitKind::Random)?
            }
        };
        if model.n_nodes() != self.n_nodes {
            return Err(EsnError::InvalidArgument(format!(
                "weight file declares {} nodes but holds {}",
                self.n_nodes,
                model.n_nodes()
            )));
        }
        let model = model.with_activation(self.activation).with_input_scale(self.input_scale)?;
        match &self.w_out {
            Some(w) => model.with_readout(w.clone()),
            None => Ok(model),
        }
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn stabilized_poles(&self) -> usize {
        self.entries.iter().map(|e| e.stabilized.iter().filter(|&&s| s).count()).sum()
    }
}
