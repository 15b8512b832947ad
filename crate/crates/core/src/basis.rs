//! Optimum orthonormal basis of the frequency-domain channel inverse.
//!
//! Samples `v = 1/H` are stacked into real vectors `ṽ = [Re v; Im v]`, their
//! second-moment matrix `Σ̃` is eigendecomposed, and the leading eigenvectors
//! are mapped back to `ℂᴺ` through `P = [I | jI]` and re-orthonormalized.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{channel_inverse_freq, is_minimum_phase, ChannelError, ChannelModel};
use crate::numkit::{dotc, norm2, norm2_sqr, sym_eig, ComplexMatrix, NumError, RealMatrix};
use crate::rng::derive_seed;
use crate::{RngStream, C64};

/// A complexified eigenvector whose component outside the span of the columns
/// already accepted is below this fraction of its norm adds no new direction.
pub const GRAM_SCHMIDT_DROP_TOL: f64 = 1e-8;

/// Samples accumulated per partial sum; fixed so results do not depend on the
/// number of worker threads.
const COVARIANCE_CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("sample {index} has length {found}, expected {expected}")]
    LengthMismatch { index: usize, expected: usize, found: usize },
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("requested M = {requested} but only {available} independent complex directions exist")]
    InsufficientRank { requested: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("could not draw a usable channel after {attempts} attempts")]
    SamplingFailed { attempts: usize },
    #[error(transparent)]
    Numerical(#[from] NumError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// `[Re v; Im v]`.
pub fn stack_real_imag(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// Inverse of [`stack_real_imag`], i.e. multiplication by `P = [I | jI]`.
pub fn unstack_real_imag(x: &[f64]) -> Result<Vec<C64>, BasisError> {
    if !x.len().is_multiple_of(2) {
        return Err(BasisError::InvalidArgument(format!("odd stacked length {}", x.len())));
    }
    let n = x.len() / 2;
    Ok((0..n).map(|i| C64::new(x[i], x[n + i])).collect())
}

/// Second-moment matrix of the real-stacked samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    /// `Σ̃`, `2N × 2N`.
    pub sigma: RealMatrix,
    pub n_obs: usize,
    /// Sample mean of `ṽ`, kept in both modes.
    pub mean_tilde: Vec<f64>,
    pub centered: bool,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }
}

/// `(1/N_obs) Σ (ṽ − m)(ṽ − m)ᵀ` when `centered`, otherwise `(1/N_obs) Σ ṽ ṽᵀ`.
///
/// Partial sums over fixed-size chunks are computed in parallel and added in
/// chunk order, so the result is bitwise reproducible.
pub fn empirical_covariance(samples: &[Vec<f64>], centered: bool) -> Result<CovarianceEstimate, BasisError> {
    if samples.len() < 2 {
        return Err(BasisError::TooFewSamples { needed: 2, found: samples.len() });
    }
    let dim = samples[0].len();
    if dim == 0 {
        return Err(BasisError::InvalidArgument("samples are empty vectors".into()));
    }
    if let Some((index, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != dim) {
        return Err(BasisError::LengthMismatch { index, expected: dim, found: s.len() });
    }
    if samples.iter().flatten().any(|x| !x.is_finite()) {
        return Err(NumError::NonFinite.into());
    }
    let n_obs = samples.len();
    if n_obs < dim {
        log::warn!("covariance from {n_obs} samples of dimension {dim}; at least {dim} recommended");
    }

    let mean_tilde: Vec<f64> = samples
        .par_chunks(COVARIANCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; dim];
            for s in chunk {
                for (a, x) in acc.iter_mut().zip(s) {
                    *a += x;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0.0; dim], |mut total, part| {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
            total
        })
        .into_iter()
        .map(|s| s / n_obs as f64)
        .collect();

    let offset = if centered { mean_tilde.clone() } else { vec![0.0; dim] };
    // upper triangle, row-major, packed
    let packed = dim * (dim + 1) / 2;
    let partials: Vec<Vec<f64>> = samples
        .par_chunks(COVARIANCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; packed];
            let mut y = vec![0.0; dim];
            for s in chunk {
                for ((yi, x), o) in y.iter_mut().zip(s).zip(&offset) {
                    *yi = x - o;
                }
                let mut k = 0;
                for i in 0..dim {
                    let yi = y[i];
                    for yj in &y[i..] {
                        acc[k] += yi * yj;
                        k += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; packed];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }

    let mut sigma = RealMatrix::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        for j in i..dim {
            let value = total[k] / n_obs as f64;
            sigma[(i, j)] = value;
            sigma[(j, i)] = value;
            k += 1;
        }
    }
    Ok(CovarianceEstimate { sigma, n_obs, mean_tilde, centered })
}

/// The retained basis `F` (`N × M`, orthonormal columns) and the spectrum it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub f: ComplexMatrix,
    /// Full descending spectrum of `Σ̃` (length `2N`).
    pub eigenvalues: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub centered: bool,
    /// Empirical mean of `v`.
    pub mean: Vec<C64>,
    /// Index into `eigenvalues` of the eigenvector behind each column of `F`.
    pub source_indices: Vec<usize>,
}

/// Leading `M` eigenvectors of `Σ̃`, complexified as `f = q̃[..N] + j q̃[N..]` and
/// orthonormalized in `ℂᴺ` by modified Gram–Schmidt.
///
/// Two real eigenvectors can complexify to the same complex direction (a vector
/// and `j` times it); the second adds nothing and is skipped in favour of the
/// next eigenvector.
pub fn optimum_basis(cov: &CovarianceEstimate, m: usize) -> Result<BasisSet, BasisError> {
    let dim = cov.dim();
    if !dim.is_multiple_of(2) {
        return Err(BasisError::InvalidArgument(format!("covariance dimension {dim} is odd")));
    }
    let n = dim / 2;
    if m == 0 || m > n {
        return Err(BasisError::InvalidArgument(format!("need 1 <= M <= N = {n}, got M = {m}")));
    }
    let eig = sym_eig(&cov.sigma)?;

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut source_indices = Vec::with_capacity(m);
    for i in 0..dim {
        if columns.len() == m {
            break;
        }
        let mut f = unstack_real_imag(&eig.eigenvectors.column(i))?;
        let start = norm2(&f);
        // two passes of MGS keep the columns orthonormal to working precision
        for _ in 0..2 {
            for c in &columns {
                let proj = dotc(c, &f);
                for (fi, ci) in f.iter_mut().zip(c) {
                    *fi -= proj * ci;
                }
            }
        }
        let residual = norm2(&f);
        if residual <= GRAM_SCHMIDT_DROP_TOL * start {
            continue;
        }
        for fi in f.iter_mut() {
            *fi /= residual;
        }
        columns.push(f);
        source_indices.push(i);
    }
    if columns.len() < m {
        return Err(BasisError::InsufficientRank { requested: m, available: columns.len() });
    }
    let mean = unstack_real_imag(&cov.mean_tilde)?;
    Ok(BasisSet {
        f: ComplexMatrix::from_columns(&columns)?,
        eigenvalues: eig.eigenvalues,
        m,
        n,
        centered: cov.centered,
        mean,
        source_indices,
    })
}

/// Result of projecting one vector onto a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Latent vector `u = Fᴴ(v − mean)` (mean is zero in uncentered mode).
    pub u: Vec<C64>,
    pub v_hat: Vec<C64>,
    /// `‖v − v̂‖²`.
    pub err: f64,
}

pub fn project_reconstruct(basis: &BasisSet, v: &[C64]) -> Result<Projection, BasisError> {
    if v.len() != basis.n {
        return Err(NumError::DimensionMismatch { expected: basis.n, found: v.len() }.into());
    }
    let centered: Vec<C64> = if basis.centered {
        v.iter().zip(&basis.mean).map(|(a, b)| a - b).collect()
    } else {
        v.to_vec()
    };
    let u = basis.f.adjoint_mul_vec(&centered)?;
    let mut v_hat = basis.f.mul_vec(&u)?;
    if basis.centered {
        for (x, mu) in v_hat.iter_mut().zip(&basis.mean) {
            *x += mu;
        }
    }
    let err = v.iter().zip(&v_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(Projection { u, v_hat, err })
}

/// Mean of `‖v − v̂‖²` over a sample set.
pub fn mean_reconstruction_error(basis: &BasisSet, samples: &[Vec<C64>]) -> Result<f64, BasisError> {
    if samples.is_empty() {
        return Err(NumError::Empty.into());
    }
    let errs: Result<Vec<f64>, BasisError> =
        samples.iter().map(|v| project_reconstruct(basis, v).map(|p| p.err)).collect();
    Ok(errs?.iter().sum::<f64>() / samples.len() as f64)
}

/// Number of eigenvalues strictly greater than `eps`.
pub fn epsilon_rank(eigenvalues: &[f64], eps: f64) -> usize {
    eigenvalues.iter().filter(|&&l| l > eps).count()
}

/// `10 σ₀⁴ λ_max`, the threshold used when no ε is given.
pub fn default_epsilon(sigma0: f64, eigenvalues: &[f64]) -> f64 {
    let scale = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    10.0 * sigma0.powi(4) * scale
}

/// `λ_k / λ_{k+1}` with 1-based `k`: the size of the drop right after the `k`-th eigenvalue.
/// Non-positive denominators give infinity.
pub fn spectrum_drop(eigenvalues: &[f64], k: usize) -> Option<f64> {
    if k == 0 || k >= eigenvalues.len() {
        return None;
    }
    let (a, b) = (eigenvalues[k - 1], eigenvalues[k]);
    Some(if b > 0.0 { a / b } else { f64::INFINITY })
}

/// Channel-inverse samples plus bookkeeping for the run manifest.
#[derive(Debug, Clone)]
pub struct InverseSamples {
    pub samples: Vec<Vec<C64>>,
    /// Draws discarded as non-minimum-phase.
    pub rejected_non_min_phase: usize,
    /// Draws discarded because `H` had a null on the sample grid.
    pub rejected_spectral_null: usize,
}

/// Draws `n_obs` channel realizations and samples `v = 1/H` on `n_freq` points.
///
/// Realization `i` uses its own stream derived from `(seed, i)`, so the set is
/// independent of how the work is split across threads. Each realization retries
/// up to `max_attempts` draws when `min_phase_only` rejects it or `H` has a null.
pub fn sample_channel_inverses(
    model: &ChannelModel,
    n_freq: usize,
    n_obs: usize,
    seed: u64,
    min_phase_only: bool,
    max_attempts: usize,
) -> Result<InverseSamples, BasisError> {
    if n_freq < model.taps() {
        return Err(BasisError::InvalidArgument(format!(
            "N = {n_freq} frequency samples is below the channel length {}",
            model.taps()
        )));
    }
    let draws: Result<Vec<(Vec<C64>, usize, usize)>, BasisError> = (0..n_obs)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(derive_seed(seed, i as u64));
            let (mut non_min, mut nulls) = (0, 0);
            for _ in 0..max_attempts {
                let h = model.sample(&mut rng);
                if min_phase_only && !is_minimum_phase(&h)? {
                    non_min += 1;
                    continue;
                }
                match channel_inverse_freq(&h, n_freq) {
                    Ok(v) => return Ok((v, non_min, nulls)),
                    Err(ChannelError::SpectralNull { .. }) => nulls += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            Err(BasisError::SamplingFailed { attempts: max_attempts })
        })
        .collect();
    let draws = draws?;
    let rejected_non_min_phase = draws.iter().map(|d| d.1).sum();
    let rejected_spectral_null = draws.iter().map(|d| d.2).sum();
    Ok(InverseSamples {
        samples: draws.into_iter().map(|d| d.0).collect(),
        rejected_non_min_phase,
        rejected_spectral_null,
    })
}

/// On-disk form of a [`BasisSet`]; `f` holds the `N` rows of `F` as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BasisFile {
    n: usize,
    m: usize,
    centered: bool,
    eigenvalues: Vec<f64>,
    f: Vec<Vec<C64>>,
    mean: Vec<C64>,
    source_indices: Vec<usize>,
}

impl BasisSet {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let file = BasisFile {
            n: self.n,
            m: self.m,
            centered: self.centered,
            eigenvalues: self.eigenvalues.clone(),
            f: (0..self.n).map(|i| self.f.row(i).to_vec()).collect(),
            mean: self.mean.clone(),
            source_indices: self.source_indices.clone(),
        };
        serde_json::to_string_pretty(&file)
    }

    pub fn from_json(text: &str) -> Result<Self, BasisError> {
        let file: BasisFile =
            serde_json::from_str(text).map_err(|e| BasisError::InvalidArgument(e.to_string()))?;
        if file.f.len() != file.n || file.f.iter().any(|r| r.len() != file.m) || file.mean.len() != file.n {
            return Err(BasisError::InvalidArgument("basis file dimensions are inconsistent".into()));
        }
        let data = file.f.into_iter().flatten().collect();
        Ok(Self {
            f: ComplexMatrix::from_row_major(file.n, file.m, data)?,
            eigenvalues: file.eigenvalues,
            m: file.m,
            n: file.n,
            centered: file.centered,
            mean: file.mean,
            source_indices: file.source_indices,
        })
    }

    /// `max |FᴴF − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.f.adjoint().matmul(&self.f).expect("shapes agree");
        gram.sub(&ComplexMatrix::identity(self.m)).expect("shapes agree").max_abs()
    }
}

/// Energy `‖v‖²` averaged over a sample set.
pub fn mean_energy(samples: &[Vec<C64>]) -> f64 {
    samples.iter().map(|v| norm2_sqr(v)).sum::<f64>() / samples.len().max(1) as f64
}
