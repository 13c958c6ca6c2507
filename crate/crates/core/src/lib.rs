//! Compressive spectrum sensing toolkit.
//!
//! The crate is organised the way a sensing experiment flows:
//!
//! * [`signal`] builds ground-truth signals, adds noise and scores reconstructions.
//! * [`sensing`] builds measurement operators (dense random, partial circulant,
//!   partial Toeplitz) and compresses signals with them.
//! * [`recovery`] solves the underdetermined system: basis pursuit, OMP, CoSaMP,
//!   sparse Bayesian learning and binary iterative hard thresholding.
//! * [`detect`] holds the narrowband detectors, threshold rules and closed-form ROC.
//! * [`snr`] estimates SNR blindly from covariance eigenvalues.
//! * [`harness`] runs Monte-Carlo sweeps and the wideband scan simulator.
//! * [`io`] persists configs, reports and run manifests.
//!
//! Every random quantity is driven by an explicit 64-bit seed, so results are
//! reproducible bit-for-bit regardless of thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod par;
pub mod recovery;
pub mod rng;
pub mod sensing;
pub mod signal;
pub mod snr;

pub use error::{Error, Result};
