//! Community engagement engine: contributors, batches of translation and
//! verification tasks, review status, points, badges and the leaderboard.
//!
//! [`Engine`] is a deterministic state machine. Every mutation goes through
//! [`Engine::execute`] with a [`Command`] that carries its own timestamp, so
//! replaying the same command log onto an empty engine rebuilds exactly the
//! same state. Ids are drawn from a counter inside the state for the same
//! reason. A command either applies completely or returns an error and leaves
//! the engine untouched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::align::{align, emit_pairs, AlignmentParams, DocumentPairRef, DropReport};
use crate::corpus::{
    filter_texts, DedupKey, Direction, DocId, DropReason, FilterDecision, FilterRule, LangTag, Origin, PairId,
    ReviewStatus, Segment, SegmentId, SegmentPair, Timestamp,
};
use crate::text::{comparison_form, normalize_text, sentence_split, tokenize};
use crate::{Error, Result};

string_id!(ContributorId);
string_id!(BatchId);
string_id!(ItemId);
string_id!(CandidateId);
string_id!(VerificationId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadgeTier {
    Bronze,
    Silver,
    Gold,
}

/// Points needed for each badge tier; strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BadgeThresholds {
    pub bronze: u64,
    pub silver: u64,
    pub gold: u64,
}

impl Default for BadgeThresholds {
    fn default() -> Self {
        BadgeThresholds {
            bronze: 10,
            silver: 100,
            gold: 1000,
        }
    }
}

impl BadgeThresholds {
    pub fn tiers(&self) -> [(BadgeTier, u64); 3] {
        [
            (BadgeTier::Bronze, self.bronze),
            (BadgeTier::Silver, self.silver),
            (BadgeTier::Gold, self.gold),
        ]
    }

    pub fn earned(&self, points: u64) -> BTreeSet<BadgeTier> {
        self.tiers()
            .into_iter()
            .filter(|&(_, threshold)| points >= threshold)
            .map(|(tier, _)| tier)
            .collect()
    }
}

/// Tunable rules of the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    pub batch_size: usize,
    /// Most distinct translations accepted for one item.
    pub max_translations_per_item: usize,
    /// Ratings needed before a candidate's status is decided.
    pub quorum: usize,
    pub verify_mean: f64,
    pub reject_mean: f64,
    pub translate_points: u64,
    pub verify_points: u64,
    pub badges: BadgeThresholds,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            batch_size: 5,
            max_translations_per_item: 5,
            quorum: 3,
            verify_mean: 4.0,
            reject_mean: 2.5,
            translate_points: 2,
            verify_points: 1,
            badges: BadgeThresholds::default(),
        }
    }
}

impl Policy {
    pub const MIN_RATING: u8 = 1;
    pub const MAX_RATING: u8 = 5;

    pub fn validate(&self) -> Result<()> {
        let b = self.badges;
        if self.batch_size == 0 || self.max_translations_per_item == 0 || self.quorum == 0 {
            return Err(Error::invalid("invalid_policy", "batch size, translation cap and quorum must be positive"));
        }
        if !(self.reject_mean <= self.verify_mean) {
            return Err(Error::invalid("invalid_policy", "reject_mean must not exceed verify_mean"));
        }
        if !(b.bronze < b.silver && b.silver < b.gold) {
            return Err(Error::invalid("invalid_policy", "badge thresholds must be strictly increasing"));
        }
        Ok(())
    }

    /// Review status implied by a set of ratings.
    pub fn decide(&self, ratings: &[u8]) -> ReviewStatus {
        if ratings.len() < self.quorum {
            return ReviewStatus::Pending;
        }
        let sum: u64 = ratings.iter().map(|&r| u64::from(r)).sum();
        let count = ratings.len() as f64;
        let sum = sum as f64;
        if sum >= self.verify_mean * count {
            ReviewStatus::Verified
        } else if sum < self.reject_mean * count {
            ReviewStatus::Rejected
        } else {
            ReviewStatus::Pending
        }
    }

    pub fn points_for(&self, translations: u64, verifications: u64) -> u64 {
        self.translate_points * translations + self.verify_points * verifications
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributorProfile {
    pub id: ContributorId,
    pub handle: String,
    pub points: u64,
    pub badges: BTreeSet<BadgeTier>,
    pub translations_submitted: u64,
    pub verifications_submitted: u64,
    pub skips: u64,
    pub created_at: Timestamp,
    /// When the current point total was reached.
    pub points_reached_at: Timestamp,
    /// Engine sequence number of the same moment; orders ties within a millisecond.
    pub points_reached_seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    Translate,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemState {
    Open,
    Done,
    Skipped,
}

/// What a batch item asks the contributor to work on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskRef {
    Segment(SegmentId),
    Candidate(CandidateId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchItem {
    pub id: ItemId,
    pub task: TaskRef,
    pub state: ItemState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub id: BatchId,
    pub contributor: ContributorId,
    pub kind: BatchKind,
    pub items: Vec<BatchItem>,
    pub issued_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    Contributor(ContributorId),
    /// Came with an imported or document-aligned pair.
    Machine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCandidate {
    pub id: CandidateId,
    pub source_segment: SegmentId,
    pub lang: LangTag,
    pub text: String,
    pub author: Author,
    pub created_at: Timestamp,
    pub status: ReviewStatus,
    pub ratings: Vec<u8>,
    /// The pair this candidate mirrors its status into, once one exists.
    pub pair: Option<PairId>,
    seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub id: VerificationId,
    pub candidate: CandidateId,
    pub verifier: ContributorId,
    pub rating: u8,
    pub alternative: Option<String>,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SourceEntry {
    created_at: Timestamp,
    seq: u64,
    candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DocumentState {
    Staged,
    Aligned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagedDocument {
    pub id: DocId,
    pub src_lang: LangTag,
    pub src_text: String,
    pub tgt_text: String,
    pub meta: serde_json::Value,
    pub state: DocumentState,
    pub staged_at: Timestamp,
}

/// Counts from importing pre-aligned lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub added: usize,
    pub duplicates: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl ImportReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignReport {
    pub document: DocId,
    pub src_sentences: usize,
    pub tgt_sentences: usize,
    pub links: usize,
    pub emitted: DropReport,
    pub added: usize,
    pub duplicates: usize,
}

/// Every state-changing request, with the inputs needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    RegisterContributor {
        handle: String,
        at: Timestamp,
    },
    RequestBatch {
        contributor: ContributorId,
        kind: BatchKind,
        at: Timestamp,
    },
    SubmitTranslation {
        contributor: ContributorId,
        item: ItemId,
        texts: Vec<String>,
        at: Timestamp,
    },
    SkipItem {
        contributor: ContributorId,
        item: ItemId,
        at: Timestamp,
    },
    SubmitVerification {
        contributor: ContributorId,
        item: ItemId,
        rating: i64,
        alternative: Option<String>,
        at: Timestamp,
    },
    ImportBitext {
        src_lang: LangTag,
        src_lines: Vec<String>,
        tgt_lines: Vec<String>,
        rules: FilterRule,
        at: Timestamp,
    },
    StageDocument {
        src_lang: LangTag,
        src_text: String,
        tgt_text: String,
        meta: serde_json::Value,
        at: Timestamp,
    },
    AlignDocument {
        document: DocId,
        params: AlignmentParams,
        rules: FilterRule,
        at: Timestamp,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub verification: Verification,
    pub alternative_candidate: Option<TranslationCandidate>,
    pub status: ReviewStatus,
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Registered(ContributorProfile),
    Batch(Batch),
    Translations(Vec<TranslationCandidate>),
    Skipped { next_item: Option<ItemId> },
    Verified(Box<VerificationOutcome>),
    Imported(ImportReport),
    Staged(DocId),
    Aligned(AlignReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub handle: String,
    pub points: u64,
    pub badges: BTreeSet<BadgeTier>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pairs: usize,
    pub by_status: BTreeMap<ReviewStatus, usize>,
    pub by_origin: BTreeMap<Origin, usize>,
    pub tokens_en: usize,
    pub tokens_om: usize,
    pub candidates: usize,
    pub verifications: usize,
    pub contributors: usize,
    pub total_points: u64,
    pub staged_documents: usize,
}

const CROWD_DOC: &str = "crowd";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    policy: Policy,
    seq: u64,
    contributors: BTreeMap<ContributorId, ContributorProfile>,
    handles: BTreeMap<String, ContributorId>,
    segments: BTreeMap<SegmentId, Segment>,
    sources: BTreeMap<SegmentId, SourceEntry>,
    pairs: BTreeMap<PairId, SegmentPair>,
    dedup: BTreeMap<DedupKey, PairId>,
    candidates: BTreeMap<CandidateId, TranslationCandidate>,
    candidate_keys: BTreeSet<(SegmentId, String)>,
    verifications: BTreeMap<VerificationId, Verification>,
    verified_by: BTreeSet<(CandidateId, ContributorId)>,
    batches: BTreeMap<BatchId, Batch>,
    items: BTreeMap<ItemId, (BatchId, usize)>,
    issued: BTreeSet<(ContributorId, TaskRef)>,
    documents: BTreeMap<DocId, StagedDocument>,
    memory: BTreeMap<LangTag, BTreeMap<String, PairId>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(Policy::default())
    }
}

impl Engine {
    pub fn new(policy: Policy) -> Engine {
        Engine {
            policy,
            seq: 0,
            contributors: BTreeMap::new(),
            handles: BTreeMap::new(),
            segments: BTreeMap::new(),
            sources: BTreeMap::new(),
            pairs: BTreeMap::new(),
            dedup: BTreeMap::new(),
            candidates: BTreeMap::new(),
            candidate_keys: BTreeSet::new(),
            verifications: BTreeMap::new(),
            verified_by: BTreeSet::new(),
            batches: BTreeMap::new(),
            items: BTreeMap::new(),
            issued: BTreeSet::new(),
            documents: BTreeMap::new(),
            memory: BTreeMap::new(),
        }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    fn next_id(&mut self, prefix: &str) -> String {
        self.seq += 1;
        format!("{prefix}{}", self.seq)
    }

    /// Applies one command. On error the engine is unchanged.
    pub fn execute(&mut self, command: &Command) -> Result<Outcome> {
        match command {
            Command::RegisterContributor { handle, at } => self.register_contributor(handle, *at).map(Outcome::Registered),
            Command::RequestBatch { contributor, kind, at } => self.request_batch(contributor, *kind, *at).map(Outcome::Batch),
            Command::SubmitTranslation { contributor, item, texts, at } => {
                self.submit_translation(contributor, item, texts, *at).map(Outcome::Translations)
            }
            Command::SkipItem { contributor, item, .. } => {
                self.skip_item(contributor, item).map(|next_item| Outcome::Skipped { next_item })
            }
            Command::SubmitVerification { contributor, item, rating, alternative, at } => self
                .submit_verification(contributor, item, *rating, alternative.as_deref(), *at)
                .map(|o| Outcome::Verified(Box::new(o))),
            Command::ImportBitext { src_lang, src_lines, tgt_lines, rules, at } => {
                self.import_bitext(*src_lang, src_lines, tgt_lines, rules, *at).map(Outcome::Imported)
            }
            Command::StageDocument { src_lang, src_text, tgt_text, meta, at } => self
                .stage_document(*src_lang, src_text, tgt_text, meta.clone(), *at)
                .map(Outcome::Staged),
            Command::AlignDocument { document, params, rules, at } => {
                self.align_document(document, params, rules, *at).map(Outcome::Aligned)
            }
        }
    }

    // ---- contributors -------------------------------------------------

    pub fn register_contributor(&mut self, handle: &str, at: Timestamp) -> Result<ContributorProfile> {
        let handle = normalize_text(handle, LangTag::En);
        if handle.is_empty() {
            return Err(Error::invalid("empty_handle", "handle is empty"));
        }
        let key = comparison_form(&handle);
        if self.handles.contains_key(&key) {
            return Err(Error::conflict("duplicate_handle", format!("handle {handle:?} is taken")));
        }
        let id = ContributorId(self.next_id("c"));
        let profile = ContributorProfile {
            id: id.clone(),
            handle,
            points: 0,
            badges: BTreeSet::new(),
            translations_submitted: 0,
            verifications_submitted: 0,
            skips: 0,
            created_at: at,
            points_reached_at: at,
            points_reached_seq: self.seq,
        };
        self.handles.insert(key, id.clone());
        self.contributors.insert(id, profile.clone());
        Ok(profile)
    }

    pub fn profile(&self, id: &ContributorId) -> Option<&ContributorProfile> {
        self.contributors.get(id)
    }

    pub fn contributors(&self) -> impl Iterator<Item = &ContributorProfile> {
        self.contributors.values()
    }

    fn require_contributor(&self, id: &ContributorId) -> Result<()> {
        if self.contributors.contains_key(id) {
            Ok(())
        } else {
            Err(Error::not_found("unknown_contributor", format!("no contributor {id}")))
        }
    }

    fn credit(&mut self, id: &ContributorId, translations: u64, verifications: u64, at: Timestamp) {
        let policy = self.policy;
        self.seq += 1;
        let seq = self.seq;
        let profile = self.contributors.get_mut(id).expect("caller checked the contributor");
        profile.translations_submitted += translations;
        profile.verifications_submitted += verifications;
        let points = policy.points_for(profile.translations_submitted, profile.verifications_submitted);
        if points != profile.points {
            profile.points = points;
            profile.points_reached_at = at;
            profile.points_reached_seq = seq;
        }
        award_badges(profile, &policy.badges);
    }

    // ---- batches ------------------------------------------------------

    /// Issues up to `batch_size` items the contributor has never been given.
    ///
    /// Translate batches prefer source segments with the fewest candidates,
    /// verify batches prefer pending candidates with the fewest ratings; the
    /// oldest record wins ties. An empty pool gives an empty batch.
    pub fn request_batch(&mut self, contributor: &ContributorId, kind: BatchKind, at: Timestamp) -> Result<Batch> {
        self.require_contributor(contributor)?;
        let tasks = self.eligible_tasks(contributor, kind);
        let batch_id = BatchId(self.next_id("b"));
        let mut items = Vec::with_capacity(tasks.len());
        for (index, task) in tasks.into_iter().enumerate() {
            let item_id = ItemId(self.next_id("i"));
            self.items.insert(item_id.clone(), (batch_id.clone(), index));
            self.issued.insert((contributor.clone(), task.clone()));
            items.push(BatchItem {
                id: item_id,
                task,
                state: ItemState::Open,
            });
        }
        let batch = Batch {
            id: batch_id.clone(),
            contributor: contributor.clone(),
            kind,
            items,
            issued_at: at,
        };
        self.batches.insert(batch_id, batch.clone());
        Ok(batch)
    }

    /// Tasks that [`Engine::request_batch`] would issue next, in order.
    pub fn eligible_tasks(&self, contributor: &ContributorId, kind: BatchKind) -> Vec<TaskRef> {
        let limit = self.policy.batch_size;
        match kind {
            BatchKind::Translate => {
                let mut pool: Vec<(&SegmentId, &SourceEntry)> = self
                    .sources
                    .iter()
                    .filter(|(id, _)| !self.issued.contains(&(contributor.clone(), TaskRef::Segment((*id).clone()))))
                    .collect();
                pool.sort_by_key(|(_, e)| (e.candidates, e.created_at, e.seq));
                pool.into_iter()
                    .take(limit)
                    .map(|(id, _)| TaskRef::Segment(id.clone()))
                    .collect()
            }
            BatchKind::Verify => {
                let author = Author::Contributor(contributor.clone());
                let mut pool: Vec<&TranslationCandidate> = self
                    .candidates
                    .values()
                    .filter(|c| c.status == ReviewStatus::Pending && c.author != author)
                    .filter(|c| !self.verified_by.contains(&(c.id.clone(), contributor.clone())))
                    .filter(|c| !self.issued.contains(&(contributor.clone(), TaskRef::Candidate(c.id.clone()))))
                    .collect();
                pool.sort_by_key(|c| (c.ratings.len(), c.created_at, c.seq));
                pool.into_iter()
                    .take(limit)
                    .map(|c| TaskRef::Candidate(c.id.clone()))
                    .collect()
            }
        }
    }

    pub fn batch(&self, id: &BatchId) -> Option<&Batch> {
        self.batches.get(id)
    }

    pub fn batches(&self) -> impl Iterator<Item = &Batch> {
        self.batches.values()
    }

    /// Everything ever issued to a contributor, batch by batch.
    pub fn issued_tasks(&self, contributor: &ContributorId) -> Vec<TaskRef> {
        self.batches
            .values()
            .filter(|b| &b.contributor == contributor)
            .flat_map(|b| b.items.iter().map(|i| i.task.clone()))
            .collect()
    }

    fn open_item(&self, contributor: &ContributorId, item: &ItemId, kind: Option<BatchKind>) -> Result<(BatchId, usize, TaskRef)> {
        let (batch_id, index) = self
            .items
            .get(item)
            .ok_or_else(|| Error::invalid("unknown_item", format!("no item {item}")))?;
        let batch = &self.batches[batch_id];
        if &batch.contributor != contributor {
            return Err(Error::invalid("item_not_owned", format!("item {item} belongs to another contributor")));
        }
        if let Some(kind) = kind {
            if batch.kind != kind {
                return Err(Error::invalid("wrong_batch_kind", format!("item {item} is not a {kind:?} item")));
            }
        }
        let entry = &batch.items[*index];
        if entry.state != ItemState::Open {
            return Err(Error::invalid("item_not_open", format!("item {item} is already {:?}", entry.state)));
        }
        Ok((batch_id.clone(), *index, entry.task.clone()))
    }

    fn close_item(&mut self, batch: &BatchId, index: usize, state: ItemState) {
        self.batches.get_mut(batch).expect("item index points at a batch").items[index].state = state;
    }

    // ---- translation --------------------------------------------------

    /// Records one or more translations for an open translate item.
    ///
    /// Texts are normalized; empty ones and repeats (ignoring case and
    /// spacing) are dropped. Texts already known for the segment create no
    /// new candidate. The item counts once towards the contributor's points
    /// however many texts it carries.
    pub fn submit_translation(&mut self, contributor: &ContributorId, item: &ItemId, texts: &[String], at: Timestamp) -> Result<Vec<TranslationCandidate>> {
        self.require_contributor(contributor)?;
        let (batch, index, task) = self.open_item(contributor, item, Some(BatchKind::Translate))?;
        let TaskRef::Segment(segment_id) = task else {
            unreachable!("translate batches hold segments")
        };
        let lang = self.segments[&segment_id].lang.other();

        let mut seen = BTreeSet::new();
        let mut distinct = Vec::new();
        for text in texts {
            let normalized = normalize_text(text, lang);
            if normalized.is_empty() {
                continue;
            }
            if seen.insert(comparison_form(&normalized)) {
                distinct.push(normalized);
            }
        }
        if distinct.is_empty() {
            return Err(Error::invalid("empty_translation", "no non-empty translation was submitted"));
        }
        if distinct.len() > self.policy.max_translations_per_item {
            return Err(Error::invalid(
                "too_many_translations",
                format!("{} distinct translations, at most {} allowed", distinct.len(), self.policy.max_translations_per_item),
            ));
        }

        let author = Author::Contributor(contributor.clone());
        let created: Vec<TranslationCandidate> = distinct
            .into_iter()
            .filter_map(|text| self.add_candidate(&segment_id, text, author.clone(), None, at))
            .collect();
        self.close_item(&batch, index, ItemState::Done);
        self.credit(contributor, 1, 0, at);
        Ok(created)
    }

    fn add_candidate(&mut self, segment: &SegmentId, text: String, author: Author, pair: Option<PairId>, at: Timestamp) -> Option<TranslationCandidate> {
        let key = (segment.clone(), comparison_form(&text));
        if self.candidate_keys.contains(&key) {
            return None;
        }
        let id = CandidateId(self.next_id("t"));
        let candidate = TranslationCandidate {
            id: id.clone(),
            source_segment: segment.clone(),
            lang: self.segments[segment].lang.other(),
            text,
            author,
            created_at: at,
            status: ReviewStatus::Pending,
            ratings: Vec::new(),
            pair,
            seq: self.seq,
        };
        self.candidate_keys.insert(key);
        if let Some(entry) = self.sources.get_mut(segment) {
            entry.candidates += 1;
        }
        self.candidates.insert(id, candidate.clone());
        Some(candidate)
    }

    /// Marks an open item skipped. The item stays available to everyone else.
    /// Returns the next open item of the same batch, if any.
    pub fn skip_item(&mut self, contributor: &ContributorId, item: &ItemId) -> Result<Option<ItemId>> {
        self.require_contributor(contributor)?;
        let (batch, index, _) = self.open_item(contributor, item, None)?;
        self.close_item(&batch, index, ItemState::Skipped);
        self.contributors.get_mut(contributor).expect("checked").skips += 1;
        let next = self.batches[&batch]
            .items
            .iter()
            .find(|i| i.state == ItemState::Open)
            .map(|i| i.id.clone());
        Ok(next)
    }

    // ---- verification -------------------------------------------------

    /// Stores a rating for an open verify item, optionally with a better
    /// translation, and re-evaluates the candidate's status.
    pub fn submit_verification(
        &mut self,
        contributor: &ContributorId,
        item: &ItemId,
        rating: i64,
        alternative: Option<&str>,
        at: Timestamp,
    ) -> Result<VerificationOutcome> {
        self.require_contributor(contributor)?;
        let (batch, index, task) = self.open_item(contributor, item, Some(BatchKind::Verify))?;
        let TaskRef::Candidate(candidate_id) = task else {
            unreachable!("verify batches hold candidates")
        };
        if !(i64::from(Policy::MIN_RATING)..=i64::from(Policy::MAX_RATING)).contains(&rating) {
            return Err(Error::invalid("rating_out_of_range", format!("rating {rating} is outside 1..=5")));
        }
        let rating = rating as u8;
        let candidate = &self.candidates[&candidate_id];
        if candidate.author == Author::Contributor(contributor.clone()) {
            return Err(Error::invalid("self_verification", "contributors cannot rate their own translation"));
        }
        if self.verified_by.contains(&(candidate_id.clone(), contributor.clone())) {
            return Err(Error::invalid("already_verified", "this candidate already has your rating"));
        }
        let alternative = match alternative {
            None => None,
            Some(raw) => {
                let text = normalize_text(raw, candidate.lang);
                if text.is_empty() {
                    return Err(Error::invalid("empty_alternative", "alternative translation is empty"));
                }
                if comparison_form(&text) == comparison_form(&candidate.text) {
                    return Err(Error::invalid("alternative_matches_candidate", "alternative repeats the rated translation"));
                }
                Some(text)
            }
        };
        let segment = candidate.source_segment.clone();

        let verification = Verification {
            id: VerificationId(self.next_id("v")),
            candidate: candidate_id.clone(),
            verifier: contributor.clone(),
            rating,
            alternative: alternative.clone(),
            created_at: at,
        };
        self.verifications.insert(verification.id.clone(), verification.clone());
        self.verified_by.insert((candidate_id.clone(), contributor.clone()));
        self.candidates.get_mut(&candidate_id).expect("exists").ratings.push(rating);

        let alternative_candidate = alternative.and_then(|text| {
            self.add_candidate(&segment, text, Author::Contributor(contributor.clone()), None, at)
        });
        let translations = u64::from(alternative_candidate.is_some());
        self.close_item(&batch, index, ItemState::Done);
        self.credit(contributor, translations, 1, at);
        let status = self.refresh_status(&candidate_id, at);
        Ok(VerificationOutcome {
            verification,
            alternative_candidate,
            status,
        })
    }

    /// Current status of a candidate.
    pub fn aggregate_status(&self, candidate: &CandidateId) -> Option<ReviewStatus> {
        self.candidates.get(candidate).map(|c| c.status)
    }

    fn refresh_status(&mut self, candidate_id: &CandidateId, at: Timestamp) -> ReviewStatus {
        let policy = self.policy;
        let candidate = self.candidates.get_mut(candidate_id).expect("exists");
        if candidate.status.is_terminal() {
            return candidate.status;
        }
        let status = policy.decide(&candidate.ratings);
        if status == ReviewStatus::Pending {
            return status;
        }
        candidate.status = status;
        let candidate = candidate.clone();
        let pair_id = match candidate.pair.clone() {
            Some(id) => Some(id),
            None => self.crowd_pair(&candidate, at),
        };
        if let Some(pair_id) = pair_id {
            let pair = self.pairs.get_mut(&pair_id).expect("linked pair exists");
            if pair.status == ReviewStatus::Pending {
                pair.set_status(status).expect("pending pairs accept any status");
            }
            if pair.status == ReviewStatus::Verified {
                let pair = pair.clone();
                self.remember(&pair);
            }
        }
        status
    }

    /// Creates the crowdsourced pair for a candidate that just got decided,
    /// unless an equal pair is already stored.
    fn crowd_pair(&mut self, candidate: &TranslationCandidate, at: Timestamp) -> Option<PairId> {
        let src = self.segments[&candidate.source_segment].clone();
        let position = candidate.seq as usize;
        let tgt = Segment::new(candidate.lang, &candidate.text, &DocId::from(CROWD_DOC), position).ok()?;
        let pair = SegmentPair::new(src, tgt, Origin::Crowdsourced, at).ok()?;
        let key = pair.dedup_key();
        if self.dedup.contains_key(&key) {
            return None;
        }
        let id = pair.id.clone();
        self.segments.insert(pair.tgt.id.clone(), pair.tgt.clone());
        self.dedup.insert(key, id.clone());
        self.pairs.insert(id.clone(), pair);
        self.candidates.get_mut(&candidate.id).expect("exists").pair = Some(id.clone());
        Some(id)
    }

    fn remember(&mut self, pair: &SegmentPair) {
        for (side, other) in [(&pair.src, &pair.tgt), (&pair.tgt, &pair.src)] {
            let _ = other;
            self.memory
                .entry(side.lang)
                .or_default()
                .entry(comparison_form(&side.normalized))
                .or_insert_with(|| pair.id.clone());
        }
    }

    /// Exact-match lookup over verified pairs.
    pub fn memory_lookup(&self, text: &str, direction: Direction) -> Option<String> {
        let source = direction.source();
        let key = comparison_form(&normalize_text(text, source));
        let pair_id = self.memory.get(&source)?.get(&key)?;
        let pair = &self.pairs[pair_id];
        let target = if pair.src.lang == source { &pair.tgt } else { &pair.src };
        Some(target.normalized.clone())
    }

    // ---- corpus ingestion ---------------------------------------------

    fn insert_pair(&mut self, pair: SegmentPair, at: Timestamp) -> bool {
        let key = pair.dedup_key();
        if self.dedup.contains_key(&key) {
            return false;
        }
        self.seq += 1;
        let id = pair.id.clone();
        self.sources.insert(
            pair.src.id.clone(),
            SourceEntry {
                created_at: at,
                seq: self.seq,
                candidates: 0,
            },
        );
        self.segments.insert(pair.src.id.clone(), pair.src.clone());
        self.segments.insert(pair.tgt.id.clone(), pair.tgt.clone());
        self.dedup.insert(key, id.clone());
        let src_id = pair.src.id.clone();
        let text = pair.tgt.normalized.clone();
        self.pairs.insert(id.clone(), pair);
        self.add_candidate(&src_id, text, Author::Machine, Some(id), at);
        true
    }

    /// Adds line-aligned pairs as pending, after normalization, the reduction
    /// filter and deduplication (against the store and within the input).
    pub fn import_bitext(&mut self, src_lang: LangTag, src_lines: &[String], tgt_lines: &[String], rules: &FilterRule, at: Timestamp) -> Result<ImportReport> {
        rules.validate()?;
        if src_lines.len() != tgt_lines.len() {
            return Err(Error::invalid(
                "line_count_mismatch",
                format!("{} source lines but {} target lines", src_lines.len(), tgt_lines.len()),
            ));
        }
        let doc = DocId(self.next_id("d"));
        let src_doc = DocId(format!("{doc}.{src_lang}"));
        let tgt_doc = DocId(format!("{doc}.{}", src_lang.other()));
        let mut report = ImportReport::default();
        for (position, (src, tgt)) in src_lines.iter().zip(tgt_lines).enumerate() {
            let decision = filter_texts(
                &normalize_text(src, src_lang),
                src_lang,
                &normalize_text(tgt, src_lang.other()),
                src_lang.other(),
                rules,
            );
            if let FilterDecision::Drop(reason) = decision {
                *report.dropped.entry(reason).or_default() += 1;
                continue;
            }
            let pair = SegmentPair::new(
                Segment::new(src_lang, src, &src_doc, position)?,
                Segment::new(src_lang.other(), tgt, &tgt_doc, position)?,
                Origin::Imported,
                at,
            )?;
            if self.insert_pair(pair, at) {
                report.added += 1;
            } else {
                report.duplicates += 1;
            }
        }
        Ok(report)
    }

    pub fn stage_document(&mut self, src_lang: LangTag, src_text: &str, tgt_text: &str, meta: serde_json::Value, at: Timestamp) -> Result<DocId> {
        if normalize_text(src_text, src_lang).is_empty() && normalize_text(tgt_text, src_lang.other()).is_empty() {
            return Err(Error::invalid("empty_document", "both documents are empty"));
        }
        let id = DocId(self.next_id("d"));
        self.documents.insert(
            id.clone(),
            StagedDocument {
                id: id.clone(),
                src_lang,
                src_text: src_text.to_string(),
                tgt_text: tgt_text.to_string(),
                meta,
                state: DocumentState::Staged,
                staged_at: at,
            },
        );
        Ok(id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &StagedDocument> {
        self.documents.values()
    }

    /// Splits, aligns and stores a staged document pair.
    pub fn align_document(&mut self, id: &DocId, params: &AlignmentParams, rules: &FilterRule, at: Timestamp) -> Result<AlignReport> {
        params.validate()?;
        rules.validate()?;
        let doc = self
            .documents
            .get(id)
            .ok_or_else(|| Error::not_found("unknown_document", format!("no staged document {id}")))?;
        if doc.state == DocumentState::Aligned {
            return Err(Error::invalid("already_aligned", format!("document {id} is already aligned")));
        }
        let src_lang = doc.src_lang;
        let src_sentences = sentence_split(&normalize_text(&doc.src_text, src_lang), src_lang);
        let tgt_sentences = sentence_split(&normalize_text(&doc.tgt_text, src_lang.other()), src_lang.other());
        let links = align(&src_sentences, &tgt_sentences, params);
        let refs = DocumentPairRef {
            src_doc: DocId(format!("{id}.{src_lang}")),
            tgt_doc: DocId(format!("{id}.{}", src_lang.other())),
            src_lang,
        };
        let (pairs, emitted) = emit_pairs(&links, &src_sentences, &tgt_sentences, &refs, rules, at);
        let mut report = AlignReport {
            document: id.clone(),
            src_sentences: src_sentences.len(),
            tgt_sentences: tgt_sentences.len(),
            links: links.len(),
            emitted,
            added: 0,
            duplicates: 0,
        };
        for pair in pairs {
            if self.insert_pair(pair, at) {
                report.added += 1;
            } else {
                report.duplicates += 1;
            }
        }
        self.documents.get_mut(id).expect("exists").state = DocumentState::Aligned;
        Ok(report)
    }

    // ---- reads --------------------------------------------------------

    pub fn segment(&self, id: &SegmentId) -> Option<&Segment> {
        self.segments.get(id)
    }

    pub fn candidate(&self, id: &CandidateId) -> Option<&TranslationCandidate> {
        self.candidates.get(id)
    }

    pub fn candidates(&self) -> impl Iterator<Item = &TranslationCandidate> {
        self.candidates.values()
    }

    pub fn verifications(&self) -> impl Iterator<Item = &Verification> {
        self.verifications.values()
    }

    pub fn pair(&self, id: &PairId) -> Option<&SegmentPair> {
        self.pairs.get(id)
    }

    pub fn pairs(&self) -> impl Iterator<Item = &SegmentPair> {
        self.pairs.values()
    }

    /// Contributors by points (descending), then by who reached their total
    /// first, then by handle.
    pub fn leaderboard(&self, limit: usize) -> Vec<LeaderboardEntry> {
        let mut ranked: Vec<&ContributorProfile> = self.contributors.values().collect();
        ranked.sort_by(|a, b| {
            b.points
                .cmp(&a.points)
                .then(a.points_reached_at.cmp(&b.points_reached_at))
                .then(a.points_reached_seq.cmp(&b.points_reached_seq))
                .then_with(|| a.handle.cmp(&b.handle))
        });
        ranked
            .into_iter()
            .take(limit)
            .enumerate()
            .map(|(i, p)| LeaderboardEntry {
                rank: i + 1,
                handle: p.handle.clone(),
                points: p.points,
                badges: p.badges.clone(),
            })
            .collect()
    }

    pub fn stats(&self) -> CorpusStats {
        let mut stats = CorpusStats {
            pairs: self.pairs.len(),
            candidates: self.candidates.len(),
            verifications: self.verifications.len(),
            contributors: self.contributors.len(),
            total_points: self.contributors.values().map(|c| c.points).sum(),
            staged_documents: self.documents.values().filter(|d| d.state == DocumentState::Staged).count(),
            ..CorpusStats::default()
        };
        for pair in self.pairs.values() {
            *stats.by_status.entry(pair.status).or_default() += 1;
            *stats.by_origin.entry(pair.origin).or_default() += 1;
            let (en, om) = pair.by_language();
            stats.tokens_en += tokenize(&en.normalized, LangTag::En).len();
            stats.tokens_om += tokenize(&om.normalized, LangTag::Om).len();
        }
        stats
    }
}

/// Brings the badge set up to date with the profile's points. Badges are
/// only ever added.
pub fn award_badges<'a>(profile: &'a mut ContributorProfile, thresholds: &BadgeThresholds) -> &'a BTreeSet<BadgeTier> {
    profile.badges.extend(thresholds.earned(profile.points));
    &profile.badges
}
