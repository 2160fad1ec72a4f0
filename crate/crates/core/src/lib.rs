//! Corpus engineering for an English / Afaan Oromo parallel corpus built by
//! crowdsourcing.
//!
//! - [`text`]: normalization, tokenization and sentence splitting.
//! - [`corpus`]: segment and pair records, dedup keys, the reduction filter.
//! - [`align`]: length-based dynamic-programming sentence alignment.
//! - [`bleu`]: corpus and sentence BLEU.
//! - [`engine`]: translation and verification batches, points, badges, leaderboard.
//! - [`bitext`]: line-aligned parallel-text export and ingest.

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

pub mod align;
pub mod bitext;
pub mod bleu;
pub mod corpus;
pub mod engine;
pub mod text;

pub use corpus::{
    DedupKey, Direction, DocId, DropReason, FilterDecision, FilterRule, LangTag, Origin, PairId,
    ReviewStatus, Segment, SegmentId, SegmentPair, Timestamp,
};

/// Error returned by every fallible operation in this crate.
///
/// `reason` is a stable snake_case code meant for machines (HTTP bodies, CLI
/// error lines); `message` is for people.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{message}")]
    Invalid { reason: &'static str, message: String },
    #[error("{message}")]
    Conflict { reason: &'static str, message: String },
    #[error("{message}")]
    NotFound { reason: &'static str, message: String },
}

impl Error {
    pub fn invalid(reason: &'static str, message: impl Into<String>) -> Error {
        Error::Invalid { reason, message: message.into() }
    }

    pub fn conflict(reason: &'static str, message: impl Into<String>) -> Error {
        Error::Conflict { reason, message: message.into() }
    }

    pub fn not_found(reason: &'static str, message: impl Into<String>) -> Error {
        Error::NotFound { reason, message: message.into() }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            Error::Invalid { reason, .. } | Error::Conflict { reason, .. } | Error::NotFound { reason, .. } => reason,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
