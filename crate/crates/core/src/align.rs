//! Length-based sentence alignment.
//!
//! Each link consumes zero to two sentences per side. A link's cost is the
//! negative log probability of the observed character-length deviation plus
//! the negative log prior of its kind, and [`align`] finds the cheapest
//! monotone sequence of links with a dynamic program over
//! `(source index, target index)` cells.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_pair, DocId, DropReason, FilterDecision, FilterRule, LangTag, Origin, Segment, SegmentPair, Timestamp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    OneOne,
    OneZero,
    ZeroOne,
    TwoOne,
    OneTwo,
    TwoTwo,
}

impl LinkKind {
    /// All kinds in tie-break preference order.
    pub const ALL: [LinkKind; 6] = [
        LinkKind::OneOne,
        LinkKind::OneZero,
        LinkKind::ZeroOne,
        LinkKind::TwoOne,
        LinkKind::OneTwo,
        LinkKind::TwoTwo,
    ];

    /// Sentences consumed on the (source, target) side.
    pub fn spans(self) -> (usize, usize) {
        match self {
            LinkKind::OneOne => (1, 1),
            LinkKind::OneZero => (1, 0),
            LinkKind::ZeroOne => (0, 1),
            LinkKind::TwoOne => (2, 1),
            LinkKind::OneTwo => (1, 2),
            LinkKind::TwoTwo => (2, 2),
        }
    }

    pub fn from_spans(src: usize, tgt: usize) -> Option<LinkKind> {
        LinkKind::ALL.into_iter().find(|k| k.spans() == (src, tgt))
    }

    /// The kind seen from the other document.
    pub fn transposed(self) -> LinkKind {
        let (s, t) = self.spans();
        LinkKind::from_spans(t, s).expect("kind set is closed under transposition")
    }

    pub fn is_matched(self) -> bool {
        !matches!(self, LinkKind::OneZero | LinkKind::ZeroOne)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignLink {
    pub src_span: Range<usize>,
    pub tgt_span: Range<usize>,
    pub kind: LinkKind,
    /// This link's contribution to the total cost.
    pub cost: f64,
}

/// Prior probability of each link kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPriors {
    pub one_one: f64,
    pub one_zero: f64,
    pub zero_one: f64,
    pub two_one: f64,
    pub one_two: f64,
    pub two_two: f64,
}

impl Default for LinkPriors {
    fn default() -> Self {
        let one_zero = 0.0099 / 2.0;
        let two_one = 0.089 / 2.0;
        let two_two = 0.011;
        LinkPriors {
            one_one: 1.0 - (2.0 * one_zero + 2.0 * two_one + two_two),
            one_zero,
            zero_one: one_zero,
            two_one,
            one_two: two_one,
            two_two,
        }
    }
}

impl LinkPriors {
    pub fn get(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::OneOne => self.one_one,
            LinkKind::OneZero => self.one_zero,
            LinkKind::ZeroOne => self.zero_one,
            LinkKind::TwoOne => self.two_one,
            LinkKind::OneTwo => self.one_two,
            LinkKind::TwoTwo => self.two_two,
        }
    }

    pub fn sum(&self) -> f64 {
        LinkKind::ALL.iter().map(|&k| self.get(k)).sum()
    }
}

/// Which length the deviation is scaled by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthModel {
    /// `sqrt(l_src * s2)`, with `l_src` floored to 1.
    #[default]
    SourceScaled,
    /// `sqrt(s2 * (l_src + l_tgt / c) / 2)`; symmetric in the two sides when `c = 1`.
    MeanScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentParams {
    /// Expected target characters per source character.
    pub mean_ratio: f64,
    /// Variance of that ratio, characters² per character.
    pub variance: f64,
    pub link_priors: LinkPriors,
    /// Upper bound on the length cost of a single link.
    pub max_cost: f64,
    pub length_model: LengthModel,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams {
            mean_ratio: 1.0,
            variance: 6.8,
            link_priors: LinkPriors::default(),
            max_cost: 25.0,
            length_model: LengthModel::SourceScaled,
        }
    }
}

impl AlignmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_ratio > 0.0 && self.mean_ratio.is_finite()) {
            return Err(Error::invalid("invalid_alignment_params", "mean_ratio must be positive"));
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::invalid("invalid_alignment_params", "variance must be positive"));
        }
        if !(self.max_cost > 0.0) {
            return Err(Error::invalid("invalid_alignment_params", "max_cost must be positive"));
        }
        if LinkKind::ALL.iter().any(|&k| !(self.link_priors.get(k) >= 0.0)) {
            return Err(Error::invalid("invalid_alignment_params", "link priors must be non-negative"));
        }
        if self.link_priors.one_zero <= 0.0 || self.link_priors.zero_one <= 0.0 {
            return Err(Error::invalid(
                "invalid_alignment_params",
                "OneZero and ZeroOne priors must be positive so every lattice cell is reachable",
            ));
        }
        let sum = self.link_priors.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "invalid_alignment_params",
                format!("link priors sum to {sum}, expected 1"),
            ));
        }
        Ok(())
    }
}

/// Negative log of the two-tailed normal probability of the length deviation
/// between a source span of `src_chars` and a target span of `tgt_chars`,
/// capped at `params.max_cost`.
pub fn length_cost(src_chars: usize, tgt_chars: usize, params: &AlignmentParams) -> f64 {
    if src_chars == 0 && tgt_chars == 0 {
        return 0.0;
    }
    let l_src = src_chars as f64;
    let l_tgt = tgt_chars as f64;
    let c = params.mean_ratio;
    let scale = match params.length_model {
        LengthModel::SourceScaled => l_src.max(1.0),
        LengthModel::MeanScaled => (l_src + l_tgt / c) / 2.0,
    };
    let delta = (l_tgt - l_src * c) / (scale * params.variance).sqrt();
    // P(|Z| >= |delta|) = erfc(|delta| / sqrt 2)
    let probability = libm::erfc(delta.abs() / std::f64::consts::SQRT_2);
    let cost = -probability.ln();
    if cost.is_nan() || cost > params.max_cost {
        params.max_cost
    } else {
        cost.max(0.0)
    }
}

/// Cost of one link of `kind` spanning the given character totals. `None`
/// when the kind has zero prior probability.
pub fn link_cost(kind: LinkKind, src_chars: usize, tgt_chars: usize, params: &AlignmentParams) -> Option<f64> {
    let prior = params.link_priors.get(kind);
    if prior <= 0.0 {
        return None;
    }
    Some(length_cost(src_chars, tgt_chars, params) - prior.ln())
}

fn prefix_lengths<S: AsRef<str>>(sentences: &[S]) -> Vec<usize> {
    let mut acc = Vec::with_capacity(sentences.len() + 1);
    acc.push(0);
    for s in sentences {
        acc.push(acc.last().unwrap() + s.as_ref().chars().count());
    }
    acc
}

/// Minimum-cost alignment of two sentence lists.
///
/// The returned links partition both inputs in order. Equal-cost choices are
/// settled while backtracking from the end: the link kind earliest in
/// [`LinkKind::ALL`] wins.
///
/// Panics if `params` has a zero OneZero or ZeroOne prior; such params fail
/// [`AlignmentParams::validate`].
pub fn align<S: AsRef<str>>(src_sentences: &[S], tgt_sentences: &[S], params: &AlignmentParams) -> Vec<AlignLink> {
    align_lengths(
        &prefix_lengths(src_sentences),
        &prefix_lengths(tgt_sentences),
        params,
    )
}

/// [`align`] over character counts instead of sentences.
pub fn align_char_lengths(src_lengths: &[usize], tgt_lengths: &[usize], params: &AlignmentParams) -> Vec<AlignLink> {
    let prefix = |lengths: &[usize]| {
        std::iter::once(0)
            .chain(lengths.iter().scan(0, |acc, &l| {
                *acc += l;
                Some(*acc)
            }))
            .collect::<Vec<_>>()
    };
    align_lengths(&prefix(src_lengths), &prefix(tgt_lengths), params)
}

fn align_lengths(src_prefix: &[usize], tgt_prefix: &[usize], params: &AlignmentParams) -> Vec<AlignLink> {
    let n = src_prefix.len() - 1;
    let m = tgt_prefix.len() - 1;
    let width = m + 1;
    let mut best = vec![f64::INFINITY; (n + 1) * width];
    let mut back: Vec<Option<(LinkKind, f64)>> = vec![None; (n + 1) * width];
    best[0] = 0.0;

    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut cell = f64::INFINITY;
            let mut choice = None;
            for kind in LinkKind::ALL {
                let (di, dj) = kind.spans();
                if i < di || j < dj {
                    continue;
                }
                let prev = best[(i - di) * width + (j - dj)];
                if !prev.is_finite() {
                    continue;
                }
                let src_chars = src_prefix[i] - src_prefix[i - di];
                let tgt_chars = tgt_prefix[j] - tgt_prefix[j - dj];
                let Some(step) = link_cost(kind, src_chars, tgt_chars, params) else {
                    continue;
                };
                let total = prev + step;
                if total < cell {
                    cell = total;
                    choice = Some((kind, step));
                }
            }
            best[i * width + j] = cell;
            back[i * width + j] = choice;
        }
    }

    let mut links = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let (kind, cost) = back[i * width + j].expect("every cell is reachable when OneZero and ZeroOne have positive prior");
        let (di, dj) = kind.spans();
        links.push(AlignLink {
            src_span: i - di..i,
            tgt_span: j - dj..j,
            kind,
            cost,
        });
        i -= di;
        j -= dj;
    }
    links.reverse();
    links
}

/// Sum of link costs in document order, the same order the DP accumulates.
pub fn total_cost(links: &[AlignLink]) -> f64 {
    links.iter().fold(0.0, |acc, l| acc + l.cost)
}

/// Where the aligned sentences came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentPairRef {
    pub src_doc: DocId,
    pub tgt_doc: DocId,
    pub src_lang: LangTag,
}

/// Links that did not become pairs, by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub emitted: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl DropReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }

    pub(crate) fn drop(&mut self, reason: DropReason) {
        *self.dropped.entry(reason).or_default() += 1;
    }
}

/// Turns matched links into pending document-aligned pairs and runs the
/// reduction filter over them. Unmatched links are counted, never emitted.
pub fn emit_pairs<S: AsRef<str>>(
    links: &[AlignLink],
    src_sentences: &[S],
    tgt_sentences: &[S],
    docs: &DocumentPairRef,
    rules: &FilterRule,
    created_at: Timestamp,
) -> (Vec<SegmentPair>, DropReport) {
    let join = |sentences: &[S], span: &Range<usize>| {
        sentences[span.clone()]
            .iter()
            .map(|s| s.as_ref())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut pairs = Vec::new();
    let mut report = DropReport::default();
    for link in links {
        if !link.kind.is_matched() {
            report.drop(DropReason::Unmatched);
            continue;
        }
        let src = Segment::new(docs.src_lang, &join(src_sentences, &link.src_span), &docs.src_doc, link.src_span.start);
        let tgt = Segment::new(docs.src_lang.other(), &join(tgt_sentences, &link.tgt_span), &docs.tgt_doc, link.tgt_span.start);
        let (Ok(src), Ok(tgt)) = (src, tgt) else {
            report.drop(DropReason::Empty);
            continue;
        };
        let pair = SegmentPair::new(src, tgt, Origin::DocumentAligned, created_at)
            .expect("sides carry different languages");
        match filter_pair(&pair, rules) {
            FilterDecision::Keep => {
                report.emitted += 1;
                pairs.push(pair);
            }
            FilterDecision::Drop(reason) => report.drop(reason),
        }
    }
    (pairs, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_priors_are_a_distribution() {
        let params = AlignmentParams::default();
        assert!((params.link_priors.sum() - 1.0).abs() < 1e-12);
        params.validate().unwrap();
    }

    #[test]
    fn zero_deviation_is_free() {
        let params = AlignmentParams::default();
        assert_eq!(length_cost(100, 100, &params), 0.0);
        assert!(length_cost(100, 101, &params) > 0.0);
    }

    #[test]
    fn cost_is_symmetric_in_deviation() {
        let params = AlignmentParams::default();
        let up = length_cost(100, 120, &params);
        let down = length_cost(100, 80, &params);
        assert!((up - down).abs() < 1e-9);
    }

    #[test]
    fn cost_is_clamped() {
        let params = AlignmentParams::default();
        assert_eq!(length_cost(0, 500, &params), 25.0);
        assert_eq!(length_cost(10_000, 1, &params), 25.0);
    }

    #[test]
    fn equal_sentences_align_one_to_one() {
        let s = vec!["x".repeat(40); 3];
        let links = align(&s, &s, &AlignmentParams::default());
        let kinds: Vec<_> = links.iter().map(|l| l.kind).collect();
        assert_eq!(kinds, [LinkKind::OneOne; 3]);
    }

    #[test]
    fn empty_side_yields_null_links() {
        let params = AlignmentParams::default();
        let empty: Vec<&str> = vec![];
        let links = align(&["a b", "c"], &empty, &params);
        assert!(links.iter().all(|l| l.kind == LinkKind::OneZero));
        assert_eq!(links.len(), 2);
        let links = align(&empty, &["a"], &params);
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].kind, LinkKind::ZeroOne);
        assert!(align(&empty, &empty, &params).is_empty());
    }

    #[test]
    fn rejects_bad_params() {
        let mut params = AlignmentParams::default();
        params.link_priors.one_one += 0.01;
        assert!(params.validate().is_err());
        let params = AlignmentParams { variance: 0.0, ..AlignmentParams::default() };
        assert!(params.validate().is_err());
    }

    #[test]
    fn emits_matched_links_only() {
        let docs = DocumentPairRef {
            src_doc: DocId::from("s"),
            tgt_doc: DocId::from("t"),
            src_lang: LangTag::En,
        };
        let src = ["Hello there."];
        let tgt = ["Akkam jirta.", "Nagaa."];
        let links = vec![
            AlignLink { src_span: 0..1, tgt_span: 0..1, kind: LinkKind::OneOne, cost: 0.0 },
            AlignLink { src_span: 1..1, tgt_span: 1..2, kind: LinkKind::ZeroOne, cost: 0.0 },
        ];
        let (pairs, report) = emit_pairs(&links, &src, &tgt, &docs, &FilterRule::default(), Timestamp(0));
        assert_eq!(pairs.len(), 1);
        assert_eq!(report.emitted, 1);
        assert_eq!(report.dropped[&DropReason::Unmatched], 1);
        assert_eq!(pairs[0].origin, Origin::DocumentAligned);
    }

    #[test]
    fn joins_multi_sentence_spans() {
        let docs = DocumentPairRef {
            src_doc: DocId::from("s"),
            tgt_doc: DocId::from("t"),
            src_lang: LangTag::En,
        };
        let src = ["A b.", "C d."];
        let tgt = ["X y z w."];
        let links = vec![AlignLink { src_span: 0..2, tgt_span: 0..1, kind: LinkKind::TwoOne, cost: 0.0 }];
        let (pairs, _) = emit_pairs(&links, &src, &tgt, &docs, &FilterRule::default(), Timestamp(0));
        assert_eq!(pairs[0].src.normalized, "A b. C d.");
        assert_eq!(pairs[0].src.position, 0);
    }
}
