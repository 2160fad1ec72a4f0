//! Normalization, tokenization, sentence splitting, dedup keys and the
//! length filter on a few messy lines.

use cep_core::corpus::{dedup_key_for_texts, filter_texts};
use cep_core::text::{normalize_text, sentence_split, tokenize};
use cep_core::{FilterRule, LangTag};

fn main() {
    let raw_en = "  \u{201c}Good   morning,\u{201d} she said.\tThe market opens at 8 a.m. today! ";
    let raw_om = "\u{201c}Akkam  bulte,\u{201d} jette. Gabaan sa'aatii 2tti banama, kkf. har'a!";

    for (lang, raw) in [(LangTag::En, raw_en), (LangTag::Om, raw_om)] {
        let normalized = normalize_text(raw, lang);
        println!("[{}] normalized: {normalized:?}", lang.code());
        for sentence in sentence_split(&normalized, lang) {
            println!("  sentence: {sentence:?}");
            println!("    tokens: {:?}", tokenize(&sentence, lang));
        }
    }

    let a = dedup_key_for_texts("Good morning", "Akkam bulte");
    let b = dedup_key_for_texts("  GOOD morning ", "akkam   BULTE");
    println!("dedup keys equal after casefolding: {}", a == b);

    let rules = FilterRule::default();
    for (en, om) in [("Yes", "Eeyyee"), ("", "Eeyyee"), ("one", "tokko lama sadii afur shan")] {
        println!("filter {en:?} / {om:?}: {:?}", filter_texts(en, LangTag::En, om, LangTag::Om, &rules));
    }
}
