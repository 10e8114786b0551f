//! Simulator for a two-phase LED-based optical integrated sensing and
//! communication (O-ISAC) system.
//!
//! The crate is organised by concern:
//!
//! * [`geometry`] holds the scene and the world/camera/film transforms.
//! * [`channel`] evaluates Lambertian and lens-shaped radiation patterns and
//!   the resulting per-photodiode intensities.
//! * [`modem`] runs the DCO-OFDM chain and Monte Carlo BER.
//! * [`sensing`] synthesises pinhole measurements and triangulates.
//! * [`layout_opt`] scores and searches circular LED layouts.
//! * [`optics`] traces rays through the collimating lens and builds the
//!   beamformed pattern.
//! * [`harness`] loads configs, runs experiments and writes CSV.
//!
//! Monte Carlo loops and grid searches go through [`exec::Execution`], which
//! runs on rayon when the `parallel` feature is on and falls back to a plain
//! loop otherwise. Results never depend on which path ran.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod layout_opt;
pub mod modem;
pub mod optics;
pub mod quadrature;
pub mod sensing;

pub use error::{Error, Result};
