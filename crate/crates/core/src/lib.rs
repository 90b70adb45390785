// SPDX-License-Identifier: Apache-2.0

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod config;
pub mod error;
pub mod fit;
pub mod lockin;
pub mod ode;
pub mod params;
pub mod readout;
pub mod rwa;
pub mod sweep;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
