//! Exact solver and analysis toolkit for finite-horizon two-agent teams
//! restricted to symmetric (identical, possibly randomized) strategies.
//!
//! The library covers:
//!
//! - finite probability primitives over a dual numeric backend
//!   (exact big rationals or `f64`), see [`scalar`] and [`dist`];
//! - the team model with shared/local states, a single local transition
//!   kernel shared by both agents, and four information structures
//!   (one-step delayed sharing, full local history, reduced local history,
//!   aggregate actions), see [`model`];
//! - a brute-force trajectory enumerator used as the ground-truth oracle
//!   for every conditional quantity, plus exact and Monte Carlo strategy
//!   evaluation, see [`traj`];
//! - coordinator belief filters for each information structure, including
//!   the factored updates and the non-factorizing joint update for the
//!   aggregate-action structure, see [`belief`];
//! - prescription enumeration (deterministic tables and simplex grids) and
//!   the history/current-state prescription mappings, see [`prescription`];
//! - the coordinator dynamic program with identical prescriptions: memoized
//!   value recursion, grid optimization with deterministic tie-breaking and
//!   optional coordinate-descent refinement, symmetric strategy extraction,
//!   and the zero-cost certificate for specialized costs, see [`solver`];
//! - the current-state strategy reduction and its symmetry diagnostics,
//!   see [`analysis`].
//!
//! Everything is deterministic: support orderings come from the model
//! declaration, maps are ordered, ties break lexicographically, and Monte
//! Carlo draws use per-agent counter-based streams.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod belief;
pub mod dist;
pub mod error;
pub mod model;
pub mod prescription;
pub mod random;
pub mod scalar;
pub mod solver;
pub mod traj;
pub mod verify;

pub use dist::{Dist, Kernel};
pub use error::Error;
pub use model::{InfoStructure, Space, Strategy, StrategyPair, TeamModel};
pub use scalar::{Rat, Scalar};
