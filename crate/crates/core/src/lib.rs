//! Semi-supervised anomaly detection benchmark for hydraulic condition
//! monitoring.
//!
//! The crate ingests the hydraulic test-rig dataset (17 sensor channels
//! per 60-second cycle plus component-condition codes), reduces each
//! cycle to 68 statistical features, and runs six semi-supervised
//! detectors over a shared train/validation/test protocol:
//!
//! * Robust Covariance (minimum-covariance-determinant Mahalanobis)
//! * Local Outlier Factor
//! * One-class SVM (RBF kernel, SMO dual solver)
//! * Isolation Forest
//! * Deep autoencoder (reconstruction error)
//! * Hierarchical extreme learning machine (stacked ELM autoencoders
//!   feeding a one-class ELM)
//!
//! All detectors are fit on normal-only data, and all randomness flows
//! from explicit seeds, so every run is reproducible.

pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod features;
pub mod numerics;

pub use error::{Error, Result};
