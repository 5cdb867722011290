//! Sarcasm classification toolkit: comment preprocessing, TF-IDF features,
//! seven classical classifiers, an HTTP client for external probability
//! endpoints, evaluation (confusion metrics, ROC/PR curves, stratified
//! K-fold) and LIME token attributions.

pub mod blackbox;
pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lime;
pub mod pipeline;
pub mod preprocess;

pub use error::{Error, Result};
