use std::collections::{BTreeMap, BTreeSet, HashSet};

use cep_core::engine::{
    BadgeThresholds, BatchKind, CandidateId, Command, ContributorId, Engine, Outcome, Policy, TaskRef,
};
use cep_core::{FilterRule, LangTag, Origin, ReviewStatus, Timestamp};
use cep_oracles::{policy_status, rating_multisets};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seeded(pairs: usize, at: u64) -> Command {
    Command::ImportBitext {
        src_lang: LangTag::En,
        src_lines: (0..pairs).map(|i| format!("source sentence {at} {i}")).collect(),
        tgt_lines: (0..pairs).map(|i| format!("hima {at} {i}")).collect(),
        rules: FilterRule::default(),
        at: Timestamp(at),
    }
}

/// Pool computed from public reads only.
fn brute_force_pool(engine: &Engine, who: &ContributorId, kind: BatchKind) -> BTreeSet<TaskRef> {
    let issued: BTreeSet<TaskRef> = engine.issued_tasks(who).into_iter().collect();
    match kind {
        BatchKind::Translate => engine
            .pairs()
            .filter(|p| p.origin != Origin::Crowdsourced)
            .map(|p| TaskRef::Segment(p.src.id.clone()))
            .filter(|t| !issued.contains(t))
            .collect(),
        BatchKind::Verify => {
            let rated: BTreeSet<&CandidateId> =
                engine.verifications().filter(|v| &v.verifier == who).map(|v| &v.candidate).collect();
            engine
                .candidates()
                .filter(|c| c.status == ReviewStatus::Pending)
                .filter(|c| c.author != cep_core::engine::Author::Contributor(who.clone()))
                .filter(|c| !rated.contains(&c.id))
                .map(|c| TaskRef::Candidate(c.id.clone()))
                .filter(|t| !issued.contains(t))
                .collect()
        }
    }
}

struct Checker {
    ledger: BTreeMap<ContributorId, u64>,
    terminal: BTreeMap<String, ReviewStatus>,
    badges: BTreeMap<ContributorId, BTreeSet<cep_core::engine::BadgeTier>>,
}

impl Checker {
    fn new() -> Checker {
        Checker { ledger: BTreeMap::new(), terminal: BTreeMap::new(), badges: BTreeMap::new() }
    }

    fn check(&mut self, engine: &Engine) {
        let thresholds = BadgeThresholds::default();
        for p in engine.contributors() {
            assert_eq!(p.points, 2 * p.translations_submitted + p.verifications_submitted);
            assert_eq!(p.points, self.ledger.get(&p.id).copied().unwrap_or(0), "ledger for {}", p.id);
            assert_eq!(p.badges, thresholds.earned(p.points));
            let before = self.badges.entry(p.id.clone()).or_default();
            assert!(before.is_subset(&p.badges));
            *before = p.badges.clone();
            let issued = engine.issued_tasks(&p.id);
            let unique: HashSet<&TaskRef> = issued.iter().collect();
            assert_eq!(unique.len(), issued.len(), "re-issued item to {}", p.id);
        }
        for c in engine.candidates() {
            // status freezes at the first decision, so compare against the
            // shortest decided prefix of the ratings
            let frozen = (1..=c.ratings.len())
                .map(|k| policy_status(&c.ratings[..k], 3, (4, 1), (5, 2)))
                .find(|s| *s != "pending")
                .unwrap_or("pending");
            let got = match c.status {
                ReviewStatus::Pending => "pending",
                ReviewStatus::Verified => "verified",
                ReviewStatus::Rejected => "rejected",
            };
            assert_eq!(got, frozen, "candidate {} ratings {:?}", c.id, c.ratings);
            assert!(c.ratings.iter().all(|r| (1..=5).contains(r)));
            self.monotone(format!("candidate {}", c.id), c.status);
        }
        for p in engine.pairs() {
            self.monotone(format!("pair {}", p.id), p.status);
        }
    }

    fn monotone(&mut self, key: String, status: ReviewStatus) {
        if let Some(previous) = self.terminal.get(&key) {
            assert_eq!(*previous, status, "{key} left a terminal status");
        } else if status.is_terminal() {
            self.terminal.insert(key, status);
        }
    }
}

/// Runs `steps` random operations, checking every invariant after each.
/// Returns the successful commands.
fn random_run(seed: u64, contributors: usize, steps: usize) -> (Engine, Vec<Command>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut engine = Engine::default();
    let mut log = Vec::new();
    let mut checker = Checker::new();
    let mut ids = Vec::new();
    let mut open: BTreeMap<ContributorId, Vec<(cep_core::engine::ItemId, BatchKind)>> = BTreeMap::new();
    let mut clock = 0;
    let apply = |engine: &mut Engine, command: Command, log: &mut Vec<Command>| {
        let before = engine.clone();
        let result = engine.execute(&command);
        if result.is_ok() {
            log.push(command);
        } else {
            assert_eq!(*engine, before, "failed command changed state");
        }
        result
    };

    let seed_cmd = seeded(rng.random_range(3..15), 0);
    apply(&mut engine, seed_cmd, &mut log).unwrap();
    for i in 0..contributors {
        let cmd = Command::RegisterContributor { handle: format!("user{i}"), at: Timestamp(0) };
        if let Ok(Outcome::Registered(p)) = apply(&mut engine, cmd, &mut log) {
            ids.push(p.id);
        }
    }
    checker.check(&engine);

    for _ in 0..steps {
        clock += rng.random_range(0..3);
        let at = Timestamp(clock);
        let who = ids[rng.random_range(0..ids.len())].clone();
        let pending = open.entry(who.clone()).or_default();
        let roll = rng.random_range(0..10);
        if pending.is_empty() || roll == 0 {
            if roll == 0 && rng.random_bool(0.2) {
                apply(&mut engine, seeded(rng.random_range(1..6), clock), &mut log).unwrap();
                checker.check(&engine);
                continue;
            }
            let kind = if rng.random_bool(0.5) { BatchKind::Translate } else { BatchKind::Verify };
            let pool = brute_force_pool(&engine, &who, kind);
            let Ok(Outcome::Batch(batch)) = apply(&mut engine, Command::RequestBatch { contributor: who.clone(), kind, at }, &mut log) else {
                panic!("request failed")
            };
            assert_eq!(batch.items.len(), pool.len().min(5));
            assert!(batch.items.iter().all(|i| pool.contains(&i.task)));
            pending.extend(batch.items.iter().map(|i| (i.id.clone(), kind)));
        } else {
            let (item, kind) = pending.remove(rng.random_range(0..pending.len()));
            let skip = rng.random_range(0..6) == 0;
            let command = if skip {
                Command::SkipItem { contributor: who.clone(), item, at }
            } else if kind == BatchKind::Translate {
                let k = rng.random_range(0..4);
                let texts = (0..k).map(|_| format!("jecha {}", rng.random_range(0..4))).collect();
                Command::SubmitTranslation { contributor: who.clone(), item, texts, at }
            } else {
                let rating = rng.random_range(0..=6);
                let alternative = rng.random_bool(0.2).then(|| format!("alt {}", rng.random_range(0..3)));
                Command::SubmitVerification { contributor: who.clone(), item, rating, alternative, at }
            };
            match apply(&mut engine, command, &mut log) {
                Ok(Outcome::Translations(_)) => *checker.ledger.entry(who.clone()).or_default() += 2,
                Ok(Outcome::Verified(v)) => {
                    *checker.ledger.entry(who.clone()).or_default() += 1 + if v.alternative_candidate.is_some() { 2 } else { 0 }
                }
                Ok(_) => {}
                Err(e) => assert!(
                    [
                        "empty_translation",
                        "rating_out_of_range",
                        "alternative_matches_candidate",
                        "already_verified",
                        "self_verification"
                    ]
                    .contains(&e.reason()),
                    "unexpected error {e:?}"
                ),
            }
        }
        checker.check(&engine);
    }
    (engine, log)
}

#[test]
fn invariants_hold_across_many_interleavings() {
    for seed in 0..1000 {
        random_run(seed, 3, 40);
    }
}

#[test]
fn long_runs_hold_invariants_and_replay_exactly() {
    for seed in 0..5 {
        let (engine, log) = random_run(10_000 + seed, 5, 400);
        let mut replayed = Engine::default();
        for cmd in &log {
            replayed.execute(cmd).unwrap();
        }
        assert_eq!(replayed, engine);
        let json = serde_json::to_string(&log).unwrap();
        let decoded: Vec<Command> = serde_json::from_str(&json).unwrap();
        assert_eq!(decoded, log);
    }
}

#[test]
fn policy_matches_reference_predicate_on_every_multiset() {
    let policy = Policy::default();
    let sets = rating_multisets(1, 5, 5);
    assert_eq!(sets.len(), 252);
    for ratings in sets {
        let got = match policy.decide(&ratings) {
            ReviewStatus::Pending => "pending",
            ReviewStatus::Verified => "verified",
            ReviewStatus::Rejected => "rejected",
        };
        assert_eq!(got, policy_status(&ratings, 3, (4, 1), (5, 2)), "{ratings:?}");
    }
}

#[test]
fn aggregate_status_follows_ratings_through_the_engine() {
    // drive the real engine for every multiset of size 3..=5 whose prefixes
    // stay undecided until the last rating
    for ratings in rating_multisets(1, 5, 5).into_iter().filter(|r| r.len() >= 3) {
        let mut engine = Engine::default();
        engine.execute(&seeded(1, 0)).unwrap();
        let mut status = ReviewStatus::Pending;
        let mut candidate = None;
        for (i, &r) in ratings.iter().enumerate() {
            let Ok(Outcome::Registered(p)) =
                engine.execute(&Command::RegisterContributor { handle: format!("r{i}"), at: Timestamp(1) })
            else {
                panic!()
            };
            let batch = engine.request_batch(&p.id, BatchKind::Verify, Timestamp(2)).unwrap();
            if batch.items.is_empty() {
                break;
            }
            let TaskRef::Candidate(id) = &batch.items[0].task else { panic!() };
            candidate = Some(id.clone());
            status = engine.submit_verification(&p.id, &batch.items[0].id, r as i64, None, Timestamp(3)).unwrap().status;
        }
        let c = engine.candidate(candidate.as_ref().unwrap()).unwrap();
        let expected = policy_status(&c.ratings, 3, (4, 1), (5, 2));
        let got = format!("{status:?}").to_lowercase();
        assert_eq!(got, expected, "{:?}", c.ratings);
    }
}

#[test]
fn leaderboard_is_sorted_for_random_populations() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for seed in 0..100 {
        let (engine, _) = random_run(50_000 + seed, rng.random_range(1..6), 60);
        let board = engine.leaderboard(100);
        assert_eq!(board.len(), engine.contributors().count());
        assert!(board.windows(2).all(|w| w[0].points >= w[1].points));
        assert!(board.iter().enumerate().all(|(i, e)| e.rank == i + 1));
    }
}

#[test]
fn thousand_handles_get_distinct_ids() {
    let mut engine = Engine::default();
    let ids: HashSet<ContributorId> = (0..1000)
        .map(|i| engine.register_contributor(&format!("handle{i}"), Timestamp(0)).unwrap().id)
        .collect();
    assert_eq!(ids.len(), 1000);
}

#[test]
fn skipped_item_never_returns_to_the_skipper() {
    let mut engine = Engine::default();
    engine.execute(&seeded(30, 0)).unwrap();
    let me = engine.register_contributor("me", Timestamp(0)).unwrap().id;
    let first = engine.request_batch(&me, BatchKind::Translate, Timestamp(1)).unwrap();
    let skipped = first.items[0].task.clone();
    engine.skip_item(&me, &first.items[0].id).unwrap();
    for cycle in 0..100 {
        engine.execute(&seeded(1, 10 + cycle)).unwrap();
        let batch = engine.request_batch(&me, BatchKind::Translate, Timestamp(10 + cycle)).unwrap();
        assert!(batch.items.iter().all(|i| i.task != skipped));
    }
}
