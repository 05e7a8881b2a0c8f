// SPDX-License-Identifier: Apache-2.0
//! Diffusion-model synthesis of tabular circuit-delay data.

pub mod config;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod gbr;
pub mod nn;
pub mod schema;
pub mod simulator;

pub use error::{Error, Result};
