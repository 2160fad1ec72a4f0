//! Sentence-aligns a short document pair where one English sentence was
//! translated as two Oromo sentences, then emits the pending pairs.

use cep_core::align::{align, emit_pairs, AlignmentParams, DocumentPairRef};
use cep_core::text::{normalize_text, sentence_split};
use cep_core::{DocId, FilterRule, LangTag, Timestamp};

fn main() {
    let en = "The rains came early this year. Farmers planted maize and beans in the valley, \
              and the harvest was the best anyone could remember. Prices at the market fell.";
    let om = "Bara kana roobni dafee dhufe. Qonnaan bultoonni gammoojjii keessatti boqqolloo fi baaqelaa facaasan. \
              Midhaan argame kan yeroo kamiiyyuu caalu ture. Gatiin gabaa gadi bu'e.";
    let src = sentence_split(&normalize_text(en, LangTag::En), LangTag::En);
    let tgt = sentence_split(&normalize_text(om, LangTag::Om), LangTag::Om);

    let params = AlignmentParams::default();
    let links = align(&src, &tgt, &params);
    for link in &links {
        println!("{:?} src {:?} tgt {:?} cost {:.3}", link.kind, link.src_span, link.tgt_span, link.cost);
    }

    let docs = DocumentPairRef { src_doc: DocId::from("d1.en"), tgt_doc: DocId::from("d1.om"), src_lang: LangTag::En };
    let (pairs, report) = emit_pairs(&links, &src, &tgt, &docs, &FilterRule::default(), Timestamp(0));
    for pair in &pairs {
        println!("{} | {}", pair.src.normalized, pair.tgt.normalized);
    }
    println!("emitted {}, dropped {:?}", report.emitted, report.dropped);
}
