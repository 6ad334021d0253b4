//! Simulation and verification of shot-noise processes with immigration at
//! random times.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrivals;
pub mod error;
pub mod experiment;
pub mod limitgauss;
pub mod output;
pub mod responses;
pub mod rng;
pub mod shotnoise;
pub mod verify;
