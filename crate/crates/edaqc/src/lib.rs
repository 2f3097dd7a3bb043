//! Motion-artifact quality assessment for electrodermal activity (EDA)
//! recordings.
//!
//! The pipeline mirrors a two-channel acquisition protocol: windows of the
//! target channel are labeled clean or noisy by correlation against a
//! simultaneous reference channel (with reviewer-mark override), a
//! 52-dimensional feature vector is extracted per window (AR(2) model, raw
//! and derivative statistics, 3-level Haar wavelet statistics, and
//! complex-demodulation band features), and classifiers (random forest,
//! SVM-RBF trained by SMO, KNN) are evaluated leave-one-subject-out with
//! random-forest feature selection, against a rule-based screen.

pub mod baseline;
pub mod error;
pub mod ml;
pub mod exec;
pub mod features;
pub mod fir;
pub mod io;
pub mod labeling;
pub mod report;
pub mod seeds;
pub mod signal;
pub mod synth;
pub mod vfcdm;

pub use error::{Error, Result};
