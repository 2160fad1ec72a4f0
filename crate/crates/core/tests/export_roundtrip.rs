use std::collections::BTreeSet;

use cep_core::bitext::{export_pairs, read_bitext, SplitRatios, StatusFilter, SPLITS};
use cep_core::engine::{BatchKind, Engine};
use cep_core::text::tokenized_line;
use cep_core::{FilterRule, LangTag, ReviewStatus, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &["Inni", "ba'e", "bishaan", "dhuge", "The", "water", "is", "cold", "\u{201c}yes\u{201d}", "(ok)", "x,", "y."];

fn line(rng: &mut ChaCha8Rng) -> String {
    (0..rng.random_range(1..8)).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join("  ")
}

/// An engine holding random imported pairs, some of which were verified or
/// rejected by three raters.
fn populated(seed: u64) -> Engine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut engine = Engine::default();
    let n = rng.random_range(0..40);
    let src: Vec<String> = (0..n).map(|_| line(&mut rng)).collect();
    let tgt: Vec<String> = (0..n).map(|_| line(&mut rng)).collect();
    engine.import_bitext(LangTag::En, &src, &tgt, &FilterRule::default(), Timestamp(0)).unwrap();
    for r in 0..3 {
        let rater = engine.register_contributor(&format!("rater{r}"), Timestamp(1)).unwrap().id;
        loop {
            let batch = engine.request_batch(&rater, BatchKind::Verify, Timestamp(2)).unwrap();
            if batch.items.is_empty() {
                break;
            }
            for item in &batch.items {
                let rating = if rng.random_bool(0.7) { 5 } else { 1 };
                engine.submit_verification(&rater, &item.id, rating, None, Timestamp(3)).unwrap();
            }
        }
    }
    engine
}

fn pair_set<'a>(pairs: impl Iterator<Item = &'a cep_core::SegmentPair>) -> BTreeSet<(String, String)> {
    pairs
        .map(|p| {
            let (en, om) = p.by_language();
            (tokenized_line(&en.normalized, LangTag::En), tokenized_line(&om.normalized, LangTag::Om))
        })
        .collect()
}

#[test]
fn export_then_ingest_reproduces_verified_pairs() {
    for seed in 0..30 {
        let engine = populated(seed);
        let bundle = export_pairs(engine.pairs(), StatusFilter::Verified, seed, SplitRatios::default()).unwrap();
        let mut fresh = Engine::default();
        let mut en_all = String::new();
        let mut om_all = String::new();
        for split in SPLITS {
            let en = &bundle.files[&format!("{split}.en")];
            let om = &bundle.files[&format!("{split}.om")];
            assert_eq!(en.lines().count(), om.lines().count(), "split {split}");
            en_all.push_str(en);
            om_all.push_str(om);
        }
        let (en, om) = read_bitext(&en_all, &om_all).unwrap();
        fresh.import_bitext(LangTag::En, &en, &om, &FilterRule::default(), Timestamp(0)).unwrap();
        let verified = pair_set(engine.pairs().filter(|p| p.status == ReviewStatus::Verified));
        assert_eq!(pair_set(fresh.pairs()), verified, "seed {seed}");
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let engine = populated(99);
    let a = export_pairs(engine.pairs(), StatusFilter::Verified, 5, SplitRatios::default()).unwrap();
    let b = export_pairs(engine.pairs(), StatusFilter::Verified, 5, SplitRatios::default()).unwrap();
    assert_eq!(a.entries(), b.entries());
}

#[test]
fn only_verified_pairs_reach_a_verified_export() {
    let engine = populated(7);
    let bundle = export_pairs(engine.pairs(), StatusFilter::Verified, 1, SplitRatios::default()).unwrap();
    let exported: BTreeSet<(String, String)> = SPLITS.iter().flat_map(|s| bundle.split_lines(s)).collect();
    let others = pair_set(engine.pairs().filter(|p| p.status != ReviewStatus::Verified));
    let verified = pair_set(engine.pairs().filter(|p| p.status == ReviewStatus::Verified));
    assert_eq!(exported, verified);
    assert!(others.iter().all(|p| !exported.contains(p) || verified.contains(p)));
}
