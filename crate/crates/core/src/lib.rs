//! Forecasting primitives for noisy hourly plant signals.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Everything here is pure computation: IO, file formats and the
//! command-line front end live in the `stemcast` crate.
//!
//! Pipeline overview:
//!
//! 1. [`wavelet`]: db2 Mallat pyramid, detail thresholding, reconstruction.
//! 2. [`datasets`]: frames, synthetic data, min-max scaling, chronological
//!    splits and sliding windows.
//! 3. [`models`]: LSTM (with output-gate peephole), GRU, MLP, the two-layer
//!    LSTM encoder-decoder, additive attention and the prediction head.
//! 4. [`training`]: SGD, autoencoder pretraining, predictor training and the
//!    experiment/ablation driver.
//! 5. [`metrics`]: relative and absolute error measures plus histograms.
//!
//! All of it runs on the small reverse-mode engine in [`ndmath`].

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod datasets;
mod error;
pub mod metrics;
pub mod models;
pub mod ndmath;
pub mod training;
pub mod wavelet;

pub use error::{Error, Result};
