//! Optimistic tree search for black-box maximization under delayed, noisy
//! and multi-fidelity feedback.

pub mod benchmarks;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mfpoo;
pub mod policy;
pub mod sim;
pub mod tree;

pub use engine::{run_pcts, run_random_search, run_wait_and_act, Algorithm, Budget, RunConfig, RunTrace};
pub use error::{Error, Result};
