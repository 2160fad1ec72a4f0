//! Exports every stored pair into seeded train/dev/test splits and prints
//! the manifest.

use cep_core::bitext::{export_pairs, SplitRatios, StatusFilter};
use cep_core::engine::Engine;
use cep_core::{FilterRule, LangTag, Timestamp};

fn main() {
    let mut engine = Engine::default();
    let en: Vec<String> = (1..=20).map(|i| format!("Sentence number {i}.")).collect();
    let om: Vec<String> = (1..=20).map(|i| format!("Hima lakkoofsa {i}.")).collect();
    engine.import_bitext(LangTag::En, &en, &om, &FilterRule::default(), Timestamp(0)).unwrap();

    let bundle = export_pairs(engine.pairs(), StatusFilter::All, 7, SplitRatios::default()).unwrap();
    println!("{}", bundle.manifest_json());
    println!("--- dev.en\n{}--- dev.om\n{}", bundle.files["dev.en"], bundle.files["dev.om"]);
}
