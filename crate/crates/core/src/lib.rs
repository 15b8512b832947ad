//! Echo state network (ESN) channel equalization for OFDM receivers.
//!
//! The crate covers the whole chain from channel statistics to symbol
//! decisions:
//!
//! * [`channel`] draws channel impulse responses and samples their frequency-domain inverse,
//! * [`basis`] finds the orthonormal basis that best represents that inverse (PCA over
//!   real-stacked samples),
//! * [`ratfit`] fits each basis vector with a rational function and splits it into
//!   single-pole terms,
//! * [`esn`] turns those poles and residues into reservoir and input weights, and also
//!   provides the conventional randomly initialized reservoir,
//! * [`ofdm`] simulates a SISO-OFDM link and the classical equalizers used as baselines.

pub mod basis;
pub mod channel;
pub mod esn;
pub mod numkit;
pub mod ofdm;
pub mod ratfit;
pub mod rng;

pub use numkit::{ComplexMatrix, ComplexVector, RealMatrix, C64};
pub use rng::RngStream;
