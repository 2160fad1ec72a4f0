//! Corpus records: segments, aligned pairs, deduplication keys and the
//! data-reduction filter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::text::{comparison_form, normalize_text, tokenize};
use crate::{Error, Result};

/// Language of a text-bearing record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LangTag {
    En,
    Om,
}

impl LangTag {
    pub fn other(self) -> LangTag {
        match self {
            LangTag::En => LangTag::Om,
            LangTag::Om => LangTag::En,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            LangTag::En => "en",
            LangTag::Om => "om",
        }
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LangTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(LangTag::En),
            "om" => Ok(LangTag::Om),
            other => Err(Error::invalid("unknown_language", format!("unknown language {other:?}"))),
        }
    }
}

/// Translation direction, written `en-om` or `om-en` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "en-om")]
    EnOm,
    #[serde(rename = "om-en")]
    OmEn,
}

impl Direction {
    pub fn source(self) -> LangTag {
        match self {
            Direction::EnOm => LangTag::En,
            Direction::OmEn => LangTag::Om,
        }
    }

    pub fn target(self) -> LangTag {
        self.source().other()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::EnOm => "en-om",
            Direction::OmEn => "om-en",
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en-om" => Ok(Direction::EnOm),
            "om-en" => Ok(Direction::OmEn),
            other => Err(Error::invalid("unknown_direction", format!("unknown direction {other:?}"))),
        }
    }
}

string_id!(SegmentId);
string_id!(PairId);
string_id!(
    /// Identifier of a source document (or ingest run, or the crowd pseudo-document).
    DocId
);

/// Milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn now() -> Timestamp {
        let elapsed = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap_or_default();
        Timestamp(elapsed.as_millis() as u64)
    }
}

/// One sentence in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: SegmentId,
    pub lang: LangTag,
    pub raw: String,
    pub normalized: String,
    pub source_doc: DocId,
    pub position: usize,
}

impl Segment {
    /// Builds a segment whose id is derived from its document and position,
    /// which are unique per document by construction.
    pub fn new(lang: LangTag, raw: &str, source_doc: &DocId, position: usize) -> Result<Segment> {
        let normalized = normalize_text(raw, lang);
        if normalized.is_empty() {
            return Err(Error::invalid("empty_text", "segment text is empty after normalization"));
        }
        Ok(Segment {
            id: SegmentId(format!("{source_doc}:{position}")),
            lang,
            raw: raw.to_string(),
            normalized,
            source_doc: source_doc.clone(),
            position,
        })
    }

    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.normalized, self.lang)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    DocumentAligned,
    Crowdsourced,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Pending,
    Verified,
    Rejected,
}

impl ReviewStatus {
    pub fn is_terminal(self) -> bool {
        self != ReviewStatus::Pending
    }
}

/// An aligned source/target sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub id: PairId,
    pub src: Segment,
    pub tgt: Segment,
    pub origin: Origin,
    pub status: ReviewStatus,
    pub created_at: Timestamp,
}

impl SegmentPair {
    pub fn new(src: Segment, tgt: Segment, origin: Origin, created_at: Timestamp) -> Result<SegmentPair> {
        if src.lang == tgt.lang {
            return Err(Error::invalid(
                "same_language",
                "source and target segments share a language",
            ));
        }
        Ok(SegmentPair {
            id: PairId(format!("{}={}", src.id, tgt.id)),
            src,
            tgt,
            origin,
            status: ReviewStatus::Pending,
            created_at,
        })
    }

    /// Moves a pending pair to a terminal status. Terminal statuses never change.
    pub fn set_status(&mut self, status: ReviewStatus) -> Result<()> {
        match (self.status, status) {
            (ReviewStatus::Pending, _) => {
                self.status = status;
                Ok(())
            }
            (current, requested) if current == requested => Ok(()),
            (current, requested) => Err(Error::invalid(
                "status_frozen",
                format!("pair {} is {current:?} and cannot become {requested:?}", self.id),
            )),
        }
    }

    /// The (English, Afaan Oromo) sides regardless of translation direction.
    pub fn by_language(&self) -> (&Segment, &Segment) {
        if self.src.lang == LangTag::En {
            (&self.src, &self.tgt)
        } else {
            (&self.tgt, &self.src)
        }
    }

    pub fn dedup_key(&self) -> DedupKey {
        dedup_key(&self.src, &self.tgt)
    }
}

/// Digest of the casefolded, whitespace-collapsed (English, Oromo) text tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DedupKey(pub String);

/// Key under which two pairs count as the same pair. Sides are ordered by
/// language, so a pair and its reverse-direction twin collide.
pub fn dedup_key(src: &Segment, tgt: &Segment) -> DedupKey {
    let (en, om) = if src.lang == LangTag::En { (src, tgt) } else { (tgt, src) };
    dedup_key_for_texts(&en.normalized, &om.normalized)
}

pub fn dedup_key_for_texts(en: &str, om: &str) -> DedupKey {
    let mut hasher = Sha256::new();
    hasher.update(comparison_form(en).as_bytes());
    // normalized text never contains NUL, so the separator keeps the tuple injective
    hasher.update([0u8]);
    hasher.update(comparison_form(om).as_bytes());
    DedupKey(hex::encode(hasher.finalize()))
}

/// Length and ratio thresholds of the data-reduction pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRule {
    pub max_len_tokens: usize,
    pub max_token_ratio: f64,
    pub min_len_tokens: usize,
}

impl Default for FilterRule {
    fn default() -> Self {
        FilterRule {
            max_len_tokens: 120,
            max_token_ratio: 3.0,
            min_len_tokens: 1,
        }
    }
}

impl FilterRule {
    pub fn new(min_len_tokens: usize, max_len_tokens: usize, max_token_ratio: f64) -> Result<FilterRule> {
        let rule = FilterRule {
            max_len_tokens,
            max_token_ratio,
            min_len_tokens,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_len_tokens == 0 || self.max_len_tokens < self.min_len_tokens {
            return Err(Error::invalid(
                "invalid_filter",
                "token length bounds must satisfy 1 <= min <= max",
            ));
        }
        if !(self.max_token_ratio >= 1.0) {
            return Err(Error::invalid("invalid_filter", "max_token_ratio must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// A link with nothing on one side (alignment only).
    Unmatched,
    /// One side has no tokens.
    Empty,
    /// One side is shorter than `min_len_tokens` or longer than `max_len_tokens`.
    Length,
    /// Token-count ratio above `max_token_ratio`.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Drop(DropReason),
}

/// Decides from token counts alone; rules are checked in the order empty,
/// length, ratio and the first violation is reported.
pub fn filter_counts(src_tokens: usize, tgt_tokens: usize, rules: &FilterRule) -> FilterDecision {
    if src_tokens == 0 || tgt_tokens == 0 {
        return FilterDecision::Drop(DropReason::Empty);
    }
    let out_of_bounds = |n: usize| n < rules.min_len_tokens || n > rules.max_len_tokens;
    if out_of_bounds(src_tokens) || out_of_bounds(tgt_tokens) {
        return FilterDecision::Drop(DropReason::Length);
    }
    let longer = src_tokens.max(tgt_tokens) as f64;
    let shorter = src_tokens.min(tgt_tokens) as f64;
    if longer / shorter > rules.max_token_ratio {
        return FilterDecision::Drop(DropReason::Ratio);
    }
    FilterDecision::Keep
}

pub fn filter_texts(src: &str, src_lang: LangTag, tgt: &str, tgt_lang: LangTag, rules: &FilterRule) -> FilterDecision {
    filter_counts(tokenize(src, src_lang).len(), tokenize(tgt, tgt_lang).len(), rules)
}

pub fn filter_pair(pair: &SegmentPair, rules: &FilterRule) -> FilterDecision {
    filter_texts(
        &pair.src.normalized,
        pair.src.lang,
        &pair.tgt.normalized,
        pair.tgt.lang,
        rules,
    )
}
