//! Simulation and analysis toolkit for a polarization-entangled photon
//! source built from Savart plates and segmented half-wave plates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beamprop;
pub mod birefringence;
pub mod detection;
pub mod error;
pub mod exec;
pub mod lsq;
pub mod pipeline;
pub mod polcalc;
pub mod report;

pub use error::{Error, Result};
pub use exec::Exec;
