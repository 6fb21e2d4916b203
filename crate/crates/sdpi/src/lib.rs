//! Information-contraction toolkit for noisy channels.
//!
//! Computes `F_I` curves (the largest `I(W;Y)` compatible with a budget
//! `I(W;X) <= t` along a Markov chain `W - X - Y`), lower bounds on the gaps
//! `t - F_I(t)` and `C - F_I(t)` for additive Gaussian and general noise,
//! total-variation contraction coefficients, and deconvolution estimates that
//! turn closeness after noise into closeness before it.
//!
//! All information quantities are in nats.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
pub mod contraction;
pub mod deconv;
pub mod error;
pub mod fi_curves;
pub mod gaussian_sdpi;
pub mod general_sdpi;
pub mod io;
pub mod oracle;
pub mod prob;
pub mod quad;

pub use error::{Error, Result};
