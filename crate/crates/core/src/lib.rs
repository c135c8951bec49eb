//! Stationary mean-field games on networks, solved through their Wardrop
//! equilibrium reformulation.
//!
//! The pipeline is: describe an undirected network ([`netmodel`]), attach edge
//! models that turn a current into travel costs ([`edgecost`]), build the
//! directed Wardrop network ([`wardrop_net`]), solve and certify the
//! equilibrium ([`equilibrium`]) and recover the value function
//! ([`recovery`]). [`calibrate`] goes the other way, from a prescribed cost to
//! an edge model.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod edgecost;
pub mod equilibrium;
pub mod error;
pub mod netmodel;
pub mod numerics;
pub mod recovery;
pub mod wardrop_net;

pub use error::{Error, Result};
