//! Context tree (variable length Markov chain) selection by penalized
//! likelihood, with exact Kullback-Leibler risk oracles for known sources.

pub mod cli;
pub mod counts;
pub mod error;
pub mod harness;
pub mod par;
pub mod risk;
pub mod rng;
pub mod select;
pub mod sources;
pub mod tree;

pub use counts::{CountTable, FeasibilityPolicy, Horizon};
pub use error::{Error, Result};
pub use select::{prune_select, Penalty, PenaltyShape, SelectOptions, SelectionResult};
pub use sources::{build_renewal_model, RenewalParams, SourceModel};
pub use tree::{Alphabet, ContextTree, Word};
