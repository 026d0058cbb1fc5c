//! Quantum integrated information.
//!
//! `Φ(ρ)` is the smallest quantum Jensen–Shannon divergence between a
//! multipartite state and a product state across a bipartition. This crate
//! computes it exhaustively over cuts, together with the optimal cut, the
//! closest product state, the difference witness `σ* − ρ`, a recursive
//! integration dendrogram, a max-Φ observer search over channel families, and
//! a Petz-recovery blanket scan. [`verify`] bundles the property checks.

pub mod blanket;
pub mod channels;
pub mod dendrogram;
pub mod entropy;
pub mod error;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod observer;
pub mod optimize;
mod par;
pub mod phi;
pub mod rng;
pub mod state;
pub mod verify;
pub mod witness;

pub use channels::{KrausChannel, LocalChannel};
pub use entropy::{delta, qjsd, von_neumann_entropy, DivergenceValue};
pub use error::{Error, ErrorClass, Result};
pub use par::with_threads;
pub use phi::{phi, Mode, PhiConfig, PhiResult};
pub use state::{Bipartition, DensityMatrix, SubsystemLayout};
