//! Operator command layer: vocabulary loading, n-best fuzzy matching of
//! tokenized utterances and validation of the resulting action against the
//! live scene.
//!
//! ```
//! use agrobot::command::{match_utterance, Utterance, Verb, Vocabulary};
//!
//! let vocab = Vocabulary::default_vocabulary();
//! let best = &match_utterance(&vocab, &Utterance::from_text("pick the oranje"), 3).unwrap()[0];
//! assert_eq!(best.action.verb, Verb::Pick);
//! assert_eq!(best.action.target_class.as_deref(), Some("orange"));
//! assert!((best.score - 5.0 / 6.0).abs() < 1e-12);
//! ```

mod matcher;
mod vocabulary;

pub use matcher::{
    levenshtein, map_to_action, match_utterance, match_utterance_with, similarity, ActionRequest,
    CommandMatch, Utterance, DEFAULT_MIN_SCORE,
};
pub use vocabulary::{load_vocabulary, Verb, Vocabulary, DEFAULT_VOCABULARY};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("surface form {0:?} is defined more than once")]
    DuplicateSurfaceForm(String),
    #[error("section [{0}] is empty")]
    EmptySection(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("no verb recognized in {0:?}")]
    NoVerbFound(String),
    #[error("no candidate scored at least the minimum for {0:?}")]
    NoMatch(String),
    #[error("no {0} in the scene")]
    TargetAbsent(String),
    #[error("n-best count must be at least 1")]
    InvalidCount,
}

impl CommandError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DuplicateSurfaceForm(_) => "DuplicateSurfaceForm",
            Self::EmptySection(_) => "EmptySection",
            Self::MalformedLine { .. } => "MalformedLine",
            Self::NoVerbFound(_) => "NoVerbFound",
            Self::NoMatch(_) => "NoMatch",
            Self::TargetAbsent(_) => "TargetAbsent",
            Self::InvalidCount => "InvalidCount",
        }
    }
}
