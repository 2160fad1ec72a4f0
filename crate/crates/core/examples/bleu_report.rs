//! Corpus BLEU with per-order precisions, then the same corpus lowercased
//! and smoothed.

use cep_core::bleu::{corpus_bleu, sentence_bleu, BleuConfig, CaseMode, Smoothing};

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn main() {
    let candidates = vec![tokens("the cat sat on the mat"), tokens("There is a dog in the garden")];
    let references = vec![
        vec![tokens("the cat sat on the mat"), tokens("a cat was sitting on the mat")],
        vec![tokens("there is a dog in the garden"), tokens("a dog is in the garden")],
    ];

    let plain = corpus_bleu(&candidates, &references, &BleuConfig::default()).unwrap();
    println!("BLEU {:.4}, BP {:.4}, c={} r={}", plain.score, plain.brevity_penalty, plain.candidate_len, plain.reference_len);
    for (n, p) in plain.precisions.iter().enumerate() {
        println!("  p{} = {}/{} = {:.4}", n + 1, p.clipped, p.total, p.value);
    }

    let relaxed = BleuConfig::default()
        .with_case_mode(CaseMode::Lowercased)
        .with_smoothing(Smoothing::AddEpsilon(0.1));
    println!("lowercased + smoothed: {:.4}", corpus_bleu(&candidates, &references, &relaxed).unwrap().score);

    let short = sentence_bleu(&tokens("the cat"), &[tokens("the cat sat on the mat")], &BleuConfig::sentence()).unwrap();
    println!("sentence-level, short candidate: {:.4}", short.score);
}
