//! Truncated-Gaussian stratigraphic modelling from borehole logs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fieldsim;
pub mod gauss;
pub mod io;
pub mod likelihood;
pub mod mcmc;
pub mod normal;
pub mod sequence;
pub mod synth;

pub use error::{Error, Result};
