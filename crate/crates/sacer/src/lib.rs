//! Two-vehicle interaction simulator and off-policy trainer for human-like
//! decision-making at unsignalized intersections.
//!
//! The crate bundles everything needed to reproduce social-value-orientation
//! (SVO) guided longitudinal control from recorded or synthetic trajectories:
//!
//! - [`geometry`] — track-file ingest, arc-length routes, conflict points and
//!   interaction scenarios (real or synthetic),
//! - [`svo`] — interaction outcomes and the closed-form optimal orientation,
//! - [`env`] — the 10 Hz longitudinal environment with collision detection,
//! - [`reward`] — the four shaped reward terms and episode-replay finalization,
//! - [`nn`] — a small dense network engine (backprop, Adam, squashed-Gaussian
//!   policy head, checkpoints),
//! - [`agent`] — the SACER training loop plus the SACER-V and behavior-cloning
//!   baselines,
//! - [`eval`] — rollout metrics (priority accuracy, episode-length error,
//!   collisions), s-t curve export and reward curves,
//! - [`config`] / [`cli`] — run configuration and the `sacer` command-line
//!   front end.
//!
//! See the crate examples for one runnable program per capability.

pub mod agent;
pub mod cli;
pub mod config;
pub mod env;
pub mod eval;
pub mod geometry;
pub mod kinematics;
pub mod nn;
pub mod reward;
pub mod rng;
pub mod svg;
pub mod svo;
