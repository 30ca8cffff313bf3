//! Cross-domain voice command verification.
//!
//! A voice assistant hears a command through its microphone; a wearable on the
//! user's wrist picks up the same sound as a faint vibration on its
//! accelerometer. Because the accelerometer samples at a few hundred hertz
//! with no anti-alias filter, voice-band energy folds down into its 0..fs/2
//! band. This crate converts the microphone spectrogram into that folded form,
//! aligns it with the accelerometer spectrogram, and scores the two with a
//! shifted 2-D correlation. A command is accepted only when both sensors agree.
//!
//! Module map:
//!
//! - [`signal`]: sampled signals, accelerometer traces, spectrogram storage and file IO.
//! - [`preprocess`]: zero-phase filters, command segmentation, wake-trigger sync.
//! - [`spectro`]: short-time Fourier power spectrograms and sweep curves.
//! - [`convert`]: aliasing-based microphone-to-accelerometer spectrogram conversion.
//! - [`similarity`]: normalization, shift 2-D correlation and the end-to-end [`verify`].
//! - [`wearsim`]: wearable accelerometer simulator, synthetic utterances, attack scenarios.
//! - [`eval`]: ROC/AUC metrics and cross-correlation matrices over labeled trials.
//! - [`service`]: length-prefixed TCP verification service.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod convert;
pub mod eval;
pub mod preprocess;
pub mod service;
pub mod signal;
pub mod similarity;
pub mod spectro;
pub mod wearsim;

mod error;

pub use config::VerifyConfig;
pub use error::Error;
pub use signal::{AccelTrace, Origin, Signal, Spectrogram};
pub use similarity::{verify, RejectReason, SimilarityReport, Verdict};

pub type Result<T, E = Error> = std::result::Result<T, E>;
