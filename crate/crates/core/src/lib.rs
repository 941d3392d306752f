//! Simulation of a dc SQUID artificial atom coupled to single-mode radiation:
//! chirped-level population transfer, photon-pair generation and the
//! transfer of entanglement and l1 coherence between the device and the
//! field.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod ladder;
pub mod measures;
pub mod ode;
pub mod scenarios;
pub mod series;
pub mod state;

pub use density::{partial_trace, partial_trace_tol, PairDensityMatrix};
pub use dynamics::{integrate, ModelParams, Trajectory};
pub use error::{Error, Result};
pub use measures::{concurrence, entanglement_of_formation, eof_from_concurrence, l1_coherence};
pub use ode::IntegratorConfig;
pub use state::{Amplitudes, Factor};
