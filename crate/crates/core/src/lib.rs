//! Exact algorithms for query-to-communication lifting with low-discrepancy
//! gadgets: distributions and min-entropy, discrepancy, density and dangerous
//! values, protocol and decision-tree models, and the simulations that turn a
//! protocol for `S ∘ g^n` into a parallel decision tree for `S`.
//!
//! All probabilities are exact rationals. Comparisons against `2^q` for
//! rational `q` never go through floating point.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dist;
pub mod error;
pub mod fourier;
pub mod gadget;
pub mod dtree;
pub mod logcmp;
pub mod protocol;
pub mod rational;
pub mod simulate;
pub mod space;
pub mod structure;
pub mod verify;

pub use dist::{BlockDist, Distribution};
pub use error::*;
pub use gadget::{BooleanGadget, Gadget, MultiGadget};
pub use rational::Rational;
pub use space::{BitVector, BlockSpace, Coords};
