//! Learning hidden agent utilities in finite normal-form games from
//! recommendation-compliance feedback, and issuing low-regret correlated
//! recommendations with a cutting-plane method.
//!
//! The crate is `no_std` with `alloc`; enable the `std` feature for
//! `std::error::Error` on [`Error`].
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod affine;
pub mod behavior;
pub mod catalog;
pub mod ce;
pub mod cutting;
pub mod error;
pub mod game;
pub mod learn;
pub mod linalg;
pub mod lp;
pub mod polyhedral;
pub mod seed;

pub use error::{Error, Result};
pub use game::{
    dot, CeCheck, DifferenceVector, Dominance, Game, Mechanism, ProfileIndexing, DEFAULT_TOL,
};
