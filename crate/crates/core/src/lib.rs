//! Design and validation of an interference-mitigating cognitive radio
//! transmitter that only knows the statistics of its channels.
//!
//! The transmitter splits its power between relaying the primary user's
//! signal (ratio `α₁`) and sending its own message, which is precoded against
//! the known primary signal with linear-assignment Gel'fand–Pinsker coding
//! (coefficient `α₂`). The crate provides:
//!
//! * [`channel`]: Rician statistics, reproducible sampling and exact rates;
//! * [`quadform`]: quadratic-form moments and outage surrogates;
//! * [`design_fast`] / [`design_slow`]: parameter design for ergodic and
//!   outage criteria;
//! * [`montecarlo`]: ground-truth estimators and brute-force searches;
//! * [`lattice`]: an E8 nested-lattice implementation of the precoder;
//! * [`asymptotics`]: convergence checks towards the non-fading design.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod channel;
pub mod design_fast;
pub mod design_slow;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod montecarlo;
pub mod quadform;
mod solve;
pub mod special;

pub use error::{Error, Result};
pub use linalg::{Mat2, C64};
