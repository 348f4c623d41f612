//! Stochastic coagulation–fragmentation jump processes.

pub mod direct;
pub mod ensemble;
pub mod error;
pub mod eta;
pub mod experiments;
pub mod jump;
pub mod kernels;
pub mod massflow;
pub mod oracles;
pub mod particles;
pub mod rng;
pub mod stats;
pub mod tracked;
pub mod validate;

pub use error::{Error, Result};
pub use particles::{BoundaryGuards, ParticleSystem};
pub use rng::Seed;
