//! Holographic cogit algebra and cognitive-security optimization.
//!
//! The crate implements, at desk scale, the quantitative machinery of a
//! projective "cogit" model of cognitive state:
//!
//! * [`projective`] — two-level cogit states, hypervectors, and the
//!   holographic algebra (bundle, bind/unbind, permute), Born-rule
//!   measurement, dense tensor states, and unitary dynamics;
//! * [`statedist`] — fidelity and normalized Bures distance statistics of
//!   Haar-random states, published vs corrected CDF formulas, and the Monte
//!   Carlo adjudication between them;
//! * [`measurement`] — noisy binary measurement statistics: mixture pmf,
//!   exact log-space binomial tails, erfc approximations, concentration
//!   intervals;
//! * [`divergence`] — classical/quantum Jensen-Shannon distances and the
//!   binary-entropy upper bound;
//! * [`models`] — toy neural-to-cognitive readout and dynamics models with
//!   operational-taxonomy metadata, fitting, and serialization;
//! * [`optimizer`] — the six attack/defense objectives and derivative-free
//!   optimizers;
//! * [`scenario`] — shipped demo scenarios with frozen-seed baselines;
//! * [`rng`] — the seeded stream discipline that makes every run
//!   reproducible, serial or parallel.

pub mod divergence;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod models;
pub mod optimizer;
pub mod projective;
pub mod rng;
pub mod scenario;
pub mod statedist;

pub use error::{CoreError, Result};
