//! Lighting command grammar, synthetic command corpus, intent-to-settings
//! mapping and a ternary bag-of-words intent classifier.

mod classifier;
mod corpus;
mod features;
mod lexicon;
mod mapping;
mod parse;

pub use classifier::{
    eval_classifier, eval_parser, train_intent_classifier, train_intent_classifier_with,
    ClassAccuracy, ClassifierConfig, ClassifierReport, IntentClassifier, IntentKind,
};
pub use corpus::{
    generate_corpus, label_distribution, read_corpus, write_corpus, CorpusEntry, CHUNK_SIZE,
};
pub use features::{featurize_text, FEATURE_DIM};
pub use lexicon::{Lexicon, ALL_ZONES};
pub use mapping::{intent_to_config, ConfigDocument, IntentResolution, ZoneSetting};
pub use parse::parse_command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A parsed lighting command. Zone fields hold a canonical zone name or
/// [`ALL_ZONES`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Intent {
    TurnOn {
        zone: String,
    },
    TurnOff {
        zone: String,
    },
    /// `pct` is a multiple of 10.
    SetBrightness {
        zone: String,
        pct: u8,
    },
    /// `kelvin` is one of the color-temperature bins.
    SetColorTemp {
        zone: String,
        kelvin: u16,
    },
    ActivateScene {
        scene: String,
    },
    QueryState {
        zone: Option<String>,
    },
}

impl Intent {
    pub fn kind(&self) -> IntentKind {
        match self {
            Intent::TurnOn { .. } => IntentKind::TurnOn,
            Intent::TurnOff { .. } => IntentKind::TurnOff,
            Intent::SetBrightness { .. } => IntentKind::SetBrightness,
            Intent::SetColorTemp { .. } => IntentKind::SetColorTemp,
            Intent::ActivateScene { .. } => IntentKind::ActivateScene,
            Intent::QueryState { .. } => IntentKind::QueryState,
        }
    }
}

/// Structured no-parse diagnostic. [`ParseError::slot`] names the slot that
/// could not be filled.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ParseError {
    #[error("empty command")]
    Empty,
    #[error("unknown room '{name}'")]
    UnknownRoom { name: String },
    #[error("unknown scene '{name}'")]
    UnknownScene { name: String },
    #[error("missing {slot}")]
    MissingSlot { slot: String },
    #[error("{slot} value {value} out of range")]
    OutOfRange { slot: String, value: u64 },
}

impl ParseError {
    pub fn slot(&self) -> &str {
        match self {
            ParseError::Empty => "verb",
            ParseError::UnknownRoom { .. } => "zone",
            ParseError::UnknownScene { .. } => "scene",
            ParseError::MissingSlot { slot } | ParseError::OutOfRange { slot, .. } => slot,
        }
    }
}

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("unknown zone '{0}'")]
    UnknownZone(String),
    #[error("unknown scene '{0}'")]
    UnknownScene(String),
    #[error("corpus has no examples of {0}")]
    MissingClass(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Quant(#[from] crate::ternary::QuantError),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
