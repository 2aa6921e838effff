//! Step-level reward data tooling: Monte Carlo step labels with weak/strong
//! consistency filtering, curation and export, a logistic step scorer, and
//! Best-of-N, step-judgment and reward-ranked selection, all runnable on a
//! synthetic reasoning simulator whose step correctness is known.
//!
//! Every stage reads and writes plain files; see [`pipeline`].

pub mod cli;
pub mod curate;
pub mod error;
pub mod evalkit;
pub mod label;
pub mod pipeline;
mod par;
pub mod rng;
pub mod score;
pub mod simulate;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
