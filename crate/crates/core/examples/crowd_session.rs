//! One contributor translates a batch, three others verify it, and the
//! leaderboard and pair statuses show the result. Ratings of 5, 5 and 3
//! average 4.33, above the verification threshold.

use cep_core::engine::{BatchKind, Engine};
use cep_core::{FilterRule, LangTag, ReviewStatus, Timestamp};

fn main() {
    let mut engine = Engine::default();
    let en: Vec<String> = ["Water is life", "Where is the school?", "I am learning Oromo", "Thank you very much", "See you tomorrow", "The road is long"]
        .map(String::from)
        .to_vec();
    let om: Vec<String> = ["Bishaan jireenya", "Manni barumsaa eessa?", "Afaan Oromoo barachaan jira", "Baay'ee galatoomi", "Boru wal agarra", "Karaan dheeraa dha"]
        .map(String::from)
        .to_vec();
    let report = engine.import_bitext(LangTag::En, &en, &om, &FilterRule::default(), Timestamp(0)).unwrap();
    println!("imported {} pairs", report.added);

    let translator = engine.register_contributor("Ebise", Timestamp(1)).unwrap().id;
    let batch = engine.request_batch(&translator, BatchKind::Translate, Timestamp(2)).unwrap();
    println!("{} got {} items", translator, batch.items.len());
    for (k, item) in batch.items.iter().enumerate() {
        engine.submit_translation(&translator, &item.id, &[format!("hiikkaa {k}")], Timestamp(3)).unwrap();
    }

    // Raters get the least-rated candidates first; keep going until each
    // has seen everything they may rate.
    for (r, handle) in ["Tola", "Meron", "Abdi"].iter().enumerate() {
        let rater = engine.register_contributor(handle, Timestamp(4)).unwrap().id;
        loop {
            let batch = engine.request_batch(&rater, BatchKind::Verify, Timestamp(5)).unwrap();
            if batch.items.is_empty() {
                break;
            }
            for item in &batch.items {
                let rating = if r == 2 { 3 } else { 5 };
                engine.submit_verification(&rater, &item.id, rating, None, Timestamp(6)).unwrap();
            }
        }
    }

    for entry in engine.leaderboard(10) {
        println!("#{} {} {} points {:?}", entry.rank, entry.handle, entry.points, entry.badges);
    }
    let verified = engine.pairs().filter(|p| p.status == ReviewStatus::Verified).count();
    println!("verified pairs: {verified}");
    println!("{}", serde_json::to_string_pretty(&engine.stats()).unwrap());
}
