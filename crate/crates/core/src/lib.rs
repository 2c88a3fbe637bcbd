//! Detection of machine-translated text from back-translation similarity.
//!
//! A sentence is translated into an intermediate language and back. Text that
//! already came out of a translator changes little on this round trip, while
//! human-written text changes more. Seven BLEU scores between the sentence and
//! its back-translation form the feature vector of a binary classifier.
//!
//! The pipeline stages live in separate modules:
//!
//! - [`translator`]: cached, retrying translation backends (HTTP, replay,
//!   deterministic fixture) and back-translation records.
//! - [`tokenize`] and [`bleu`]: tokenization and the seven-score
//!   [`bleu::FeatureVector`].
//! - [`dataset`]: corpus loading, labeled dataset construction and the paired
//!   train/test split.
//! - [`classify`]: linear, AdaBoost, SMO-SVM and SGD-SVM classifiers.
//! - [`eval`]: metrics, experiment runner and report rendering.
//! - [`records`]: the line-delimited file formats exchanged by the CLI.

pub mod bleu;
pub mod cli;
pub mod classify;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod records;
pub mod sentence;
pub mod tokenize;
pub mod translator;

pub use sentence::{LanguageTag, Sentence};
