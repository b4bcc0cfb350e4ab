//! Continuous-time stochastic linear recurrent networks as path classifiers.
//!
//! A reservoir `dy = (W₀y + u x(t))dt + Σ dB` driven by an input path `x`
//! has a Gaussian terminal state `y(T) ~ N(ν_{x,u}, A)`. A linear read-out
//! `(ω, b)` classifies by the sign of `⟨ω, y(T)⟩ + b`; the expected 0-1 loss
//! is a Gaussian tail, and it is minimised over `(u, ω, b)`.

pub mod dataset_io;
pub mod error;
pub mod eval;
pub mod features;
pub mod learn;
pub mod linalg;
pub mod ode;
pub mod paths;
pub mod quadrature;
pub mod reservoir;
pub mod serde_matrix;
pub mod synthetic;
pub mod vowels;

pub use error::{Error, Result};
pub use paths::{Label, LabeledDataset, Path};
pub use reservoir::{ReservoirSpec, ReservoirSystem};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every seeded draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
