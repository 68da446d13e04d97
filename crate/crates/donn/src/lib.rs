//! Simulation and training of diffractive optical neural networks.
//!
//! A stack of phase-only masks, separated by stretches of free space, can
//! classify images: light enters at one end, diffracts through the layers,
//! and the detector region collecting the most power names the class. This
//! crate simulates such networks with the band-limited angular-spectrum
//! method, trains the mask phases by gradient descent, and measures how the
//! trained networks degrade under fabrication and alignment errors (phase
//! noise, height quantisation, layer misalignment, source frequency drift) -
//! including training with weight noise injection to buy back robustness.

pub mod chart;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod error_models;
pub mod field;
mod fft;
pub mod grad;
pub mod input;
pub mod mask;
pub mod mnist;
pub mod model;
pub mod propagate;
pub mod seeds;
pub mod sweep;
pub mod train;

pub use config::{OpticalConfig, SPEED_OF_LIGHT};
pub use detector::{DetectorLayout, Prediction, ReadoutMode, Rect};
pub use error::{Error, Result};
pub use field::{apply_phase, ComplexField};
pub use mask::PhaseMask;
pub use model::{ForwardTrace, Model};
pub use propagate::{
    make_transfer_function, propagate, propagate_uncropped, rs_direct, TransferFunction,
};
pub use train::{
    evaluate, init_model, train, EvalResult, OptimizerKind, Sample, TrainConfig, TrainHistory,
};
