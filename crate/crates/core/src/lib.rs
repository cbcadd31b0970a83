#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and analysis of continuous heat machines built from a
//! periodically modulated V-type multilevel system coupled to a hot and a
//! cold bath.

pub mod bath;
pub mod config;
pub mod error;
pub mod floquet;
pub mod generator;
pub mod integrate;
pub mod model;
pub mod presets;
pub mod steady;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};
