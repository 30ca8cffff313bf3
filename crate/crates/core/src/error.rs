use thiserror::Error;

use crate::convert::ConvertError;
use crate::eval::EvalError;
use crate::preprocess::PreprocessError;
use crate::signal::SignalError;
use crate::similarity::SimilarityError;
use crate::spectro::SpectroError;
use crate::wearsim::SimError;

/// Any failure from the verification pipeline or its IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Spectro(#[from] SpectroError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
