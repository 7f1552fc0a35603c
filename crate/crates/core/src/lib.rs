//! Perspectival gridworld agent.
//!
//! A slow perspective latent `g` gates perception through a FiLM layer and
//! sets its own update rate through a small plasticity network. The crate
//! bundles the gridworld, a hand-written differentiable core, the agent,
//! the two-stage training protocol, the experiment orchestration, and the
//! statistics used to summarize runs.

pub mod agent;
pub mod analysis;
pub mod checkpoint;
pub mod checks;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod experiments;
pub mod neural;
pub mod rng;
pub mod runlog;
pub mod training;

pub use error::{Error, Result};
