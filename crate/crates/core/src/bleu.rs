//! Corpus- and sentence-level BLEU.
//!
//! Clipped n-gram counts are summed over all segments before the precisions
//! are formed, so corpus BLEU is not an average of sentence scores. The
//! brevity penalty uses, per segment, the reference length closest to the
//! candidate length (shorter reference on ties).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    #[default]
    Cased,
    Lowercased,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Replace a zero clipped count by `epsilon` (the denominator is floored at 1).
    AddEpsilon(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BleuConfig {
    pub max_n: usize,
    pub weights: Vec<f64>,
    pub case_mode: CaseMode,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig::uniform(4).expect("4 is a valid order")
    }
}

impl BleuConfig {
    pub const MAX_ORDER: usize = 9;

    /// Uniform weights up to `max_n`, cased, unsmoothed.
    pub fn uniform(max_n: usize) -> Result<BleuConfig> {
        if max_n == 0 || max_n > Self::MAX_ORDER {
            return Err(Error::invalid("invalid_bleu_config", format!("max_n must be in 1..=9, got {max_n}")));
        }
        Ok(BleuConfig {
            max_n,
            weights: vec![1.0 / max_n as f64; max_n],
            case_mode: CaseMode::Cased,
            smoothing: Smoothing::None,
        })
    }

    /// The sentence-level default: BLEU-4 with add-0.1 smoothing.
    pub fn sentence() -> BleuConfig {
        BleuConfig {
            smoothing: Smoothing::AddEpsilon(0.1),
            ..BleuConfig::default()
        }
    }

    pub fn with_case_mode(mut self, case_mode: CaseMode) -> Self {
        self.case_mode = case_mode;
        self
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 || self.max_n > Self::MAX_ORDER {
            return Err(Error::invalid("invalid_bleu_config", "max_n must be in 1..=9"));
        }
        if self.weights.len() != self.max_n {
            return Err(Error::invalid("invalid_bleu_config", "one weight per n-gram order is required"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("invalid_bleu_config", "weights must be non-negative"));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("invalid_bleu_config", format!("weights sum to {sum}, expected 1")));
        }
        if let Smoothing::AddEpsilon(eps) = self.smoothing {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid("invalid_bleu_config", "smoothing epsilon must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramPrecision {
    pub n: usize,
    pub clipped: usize,
    pub total: usize,
    /// The precision that enters the geometric mean (after smoothing).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub score: f64,
    pub precisions: Vec<NgramPrecision>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub segments: usize,
}

/// Contiguous n-grams of `tokens` with their multiplicities.
pub fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> Result<HashMap<Vec<&str>, usize>> {
    if n == 0 {
        return Err(Error::invalid("invalid_ngram_order", "n must be at least 1"));
    }
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let gram: Vec<&str> = window.iter().map(|t| t.as_ref()).collect();
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// `(clipped, total)` n-gram matches of `candidate` against `references`.
pub fn modified_precision<T: AsRef<str>, R: AsRef<[T]>>(candidate: &[T], references: &[R], n: usize) -> Result<(usize, usize)> {
    if references.is_empty() {
        return Err(Error::invalid("no_references", "at least one reference is required"));
    }
    let cand = ngram_counts(candidate, n)?;
    let total = cand.values().sum();
    let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
    for reference in references {
        for (gram, count) in ngram_counts(reference.as_ref(), n)? {
            if cand.contains_key(&gram) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
    }
    let clipped = cand
        .iter()
        .map(|(gram, &count)| count.min(max_ref.get(gram).copied().unwrap_or(0)))
        .sum();
    Ok((clipped, total))
}

/// `1` when the candidate is at least as long as the reference, otherwise `e^(1 - r/c)`.
pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> Result<f64> {
    if candidate_len == 0 {
        return Err(Error::invalid("empty_candidate", "brevity penalty is undefined for an empty candidate"));
    }
    if candidate_len >= reference_len {
        return Ok(1.0);
    }
    Ok((1.0 - reference_len as f64 / candidate_len as f64).exp())
}

/// Length of the reference closest to `candidate_len`, preferring the shorter on ties.
pub fn closest_reference_length(candidate_len: usize, reference_lens: impl IntoIterator<Item = usize>) -> usize {
    reference_lens
        .into_iter()
        .min_by_key(|&r| (r.abs_diff(candidate_len), r))
        .unwrap_or(0)
}

fn fold_case<T: AsRef<str>>(tokens: &[T], mode: CaseMode) -> Vec<String> {
    tokens
        .iter()
        .map(|t| match mode {
            CaseMode::Cased => t.as_ref().to_string(),
            CaseMode::Lowercased => t.as_ref().to_lowercase(),
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct Tally {
    clipped: Vec<usize>,
    total: Vec<usize>,
    candidate_len: usize,
    reference_len: usize,
}

fn tally_segment<T: AsRef<str>, R: AsRef<[T]>>(candidate: &[T], references: &[R], config: &BleuConfig, tally: &mut Tally) -> Result<()> {
    if references.is_empty() {
        return Err(Error::invalid("no_references", "every segment needs at least one reference"));
    }
    let candidate = fold_case(candidate, config.case_mode);
    let references: Vec<Vec<String>> = references
        .iter()
        .map(|r| fold_case(r.as_ref(), config.case_mode))
        .collect();
    for n in 1..=config.max_n {
        let (clipped, total) = modified_precision(&candidate, &references, n)?;
        tally.clipped[n - 1] += clipped;
        tally.total[n - 1] += total;
    }
    tally.candidate_len += candidate.len();
    tally.reference_len += closest_reference_length(candidate.len(), references.iter().map(Vec::len));
    Ok(())
}

/// Corpus BLEU over parallel lists of candidates and reference sets.
pub fn corpus_bleu<T, R, S>(candidates: &[S], references: &[R], config: &BleuConfig) -> Result<BleuReport>
where
    T: AsRef<str>,
    S: AsRef<[T]>,
    R: AsRef<[S]>,
{
    config.validate()?;
    if candidates.len() != references.len() {
        return Err(Error::invalid(
            "length_mismatch",
            format!("{} candidates but {} reference sets", candidates.len(), references.len()),
        ));
    }
    if candidates.is_empty() {
        return Err(Error::invalid("empty_corpus", "at least one segment is required"));
    }
    let mut tally = Tally {
        clipped: vec![0; config.max_n],
        total: vec![0; config.max_n],
        ..Tally::default()
    };
    for (candidate, refs) in candidates.iter().zip(references) {
        tally_segment(candidate.as_ref(), refs.as_ref(), config, &mut tally)?;
    }
    Ok(report_from_tally(&tally, config, candidates.len()))
}

/// BLEU of one candidate; identical to [`corpus_bleu`] on a one-segment corpus.
/// Use [`BleuConfig::sentence`] for the smoothed sentence-level default.
pub fn sentence_bleu<T: AsRef<str>, S: AsRef<[T]>>(candidate: &[T], references: &[S], config: &BleuConfig) -> Result<BleuReport> {
    config.validate()?;
    let mut tally = Tally {
        clipped: vec![0; config.max_n],
        total: vec![0; config.max_n],
        ..Tally::default()
    };
    tally_segment(candidate, references, config, &mut tally)?;
    Ok(report_from_tally(&tally, config, 1))
}

fn report_from_tally(tally: &Tally, config: &BleuConfig, segments: usize) -> BleuReport {
    let precisions: Vec<NgramPrecision> = (0..config.max_n)
        .map(|i| {
            let (clipped, total) = (tally.clipped[i], tally.total[i]);
            let value = match config.smoothing {
                Smoothing::AddEpsilon(eps) if clipped == 0 => eps / total.max(1) as f64,
                _ if total == 0 => 0.0,
                _ => clipped as f64 / total as f64,
            };
            NgramPrecision { n: i + 1, clipped, total, value }
        })
        .collect();

    // An empty candidate side has BP -> 0 in the limit c -> 0.
    let brevity_penalty = match brevity_penalty(tally.candidate_len, tally.reference_len) {
        Ok(bp) => bp,
        Err(_) if tally.reference_len == 0 => 1.0,
        Err(_) => 0.0,
    };

    let weighted = precisions.iter().zip(&config.weights).filter(|(_, &w)| w > 0.0);
    let score = if weighted.clone().any(|(p, _)| p.value == 0.0) || brevity_penalty == 0.0 {
        0.0
    } else {
        let log_mean: f64 = weighted.map(|(p, &w)| w * p.value.ln()).sum();
        brevity_penalty * log_mean.exp()
    };

    BleuReport {
        score,
        precisions,
        brevity_penalty,
        candidate_len: tally.candidate_len,
        reference_len: tally.reference_len,
        segments,
    }
}
