//! Deterministic text pipeline for English and Afaan Oromo: normalization,
//! tokenization and rule-based sentence splitting.
//!
//! Everything here is a pure function of its input. Storage keeps the
//! normalized text with its original casing; casefolding only happens when
//! computing comparison keys (see [`comparison_form`]).

use unicode_normalization::UnicodeNormalization;

use crate::corpus::LangTag;

/// Punctuation detached from the edges of a whitespace-delimited chunk.
const EDGE_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '(', ')', '[', ']', '\''];

const TERMINATORS: &[char] = &['.', '!', '?'];

/// Closing characters allowed between a terminator and the following space.
const CLOSERS: &[char] = &['"', '\'', ')', ']'];

const EN_ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "vs.", "e.g.", "i.e.",
];

// kkf. = "and so on", fkn. = "for example", Obb. = Mr., Ad. = Mrs.
const OM_ABBREVIATIONS: &[&str] = &["kkf.", "fkn.", "obb.", "ad."];

fn map_char(c: char) -> Option<char> {
    if c.is_whitespace() {
        return Some(' ');
    }
    if c.is_control() || is_invisible_format(c) {
        return None;
    }
    Some(match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' | '\u{02BC}' => '\'',
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => '"',
        other => other,
    })
}

fn is_invisible_format(c: char) -> bool {
    matches!(
        c,
        '\u{200B}' | '\u{200C}' | '\u{200D}' | '\u{2060}' | '\u{FEFF}' | '\u{00AD}'
    )
}

/// Cleans raw text into its stored form.
///
/// Typographic quotes become ASCII quotes, control and zero-width format
/// characters are dropped, whitespace runs collapse to a single space and the
/// ends are trimmed. Canonical composition (NFC) runs last so that removing a
/// control character between a base letter and a combining mark cannot leave
/// a decomposed sequence behind. Case is preserved and the function is
/// idempotent.
pub fn normalize_text(raw: &str, _lang: LangTag) -> String {
    let mapped: String = raw.chars().filter_map(map_char).collect();
    let mut collapsed = String::with_capacity(mapped.len());
    for word in mapped.split(' ').filter(|w| !w.is_empty()) {
        if !collapsed.is_empty() {
            collapsed.push(' ');
        }
        collapsed.push_str(word);
    }
    collapsed.nfc().collect()
}

/// Splits normalized text into word and punctuation tokens.
///
/// Leading and trailing punctuation is peeled off each whitespace chunk one
/// character at a time. Characters inside a word are left alone, which keeps
/// the Afaan Oromo glottal-stop apostrophe (`ba'e`) inside its token.
pub fn tokenize(text: &str, _lang: LangTag) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && EDGE_PUNCT.contains(&chars[start]) {
            start += 1;
        }
        while end > start && EDGE_PUNCT.contains(&chars[end - 1]) {
            end -= 1;
        }
        tokens.extend(chars[..start].iter().map(|c| c.to_string()));
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        tokens.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    tokens
}

/// Tokens joined by single spaces: the line form used in parallel-text files.
pub fn tokenized_line(text: &str, lang: LangTag) -> String {
    tokenize(text, lang).join(" ")
}

fn abbreviations(lang: LangTag) -> &'static [&'static str] {
    match lang {
        LangTag::En => EN_ABBREVIATIONS,
        LangTag::Om => OM_ABBREVIATIONS,
    }
}

/// Splits a normalized document into sentences.
///
/// A break happens at a space that follows `.`, `!` or `?` (optionally
/// followed by closing quotes or brackets) when the next character is an
/// uppercase letter, unless the word carrying the terminator is a known
/// abbreviation. Breaks only ever consume a single space, so joining the
/// result with `" "` gives back the input exactly.
pub fn sentence_split(document: &str, lang: LangTag) -> Vec<String> {
    if document.is_empty() {
        return Vec::new();
    }
    let abbrevs = abbreviations(lang);
    let mut sentences = Vec::new();
    let mut sentence_start = 0;
    let mut word_start = 0;
    let mut iter = document.char_indices().peekable();

    while let Some((idx, c)) = iter.next() {
        if c != ' ' {
            continue;
        }
        let word = &document[word_start..idx];
        word_start = idx + 1;
        let next_upper = iter.peek().is_some_and(|&(_, n)| n.is_uppercase());
        if next_upper && ends_sentence(word, abbrevs) {
            sentences.push(document[sentence_start..idx].to_string());
            sentence_start = idx + 1;
        }
    }
    sentences.push(document[sentence_start..].to_string());
    sentences
}

fn ends_sentence(word: &str, abbrevs: &[&str]) -> bool {
    let core = word.trim_end_matches(CLOSERS);
    if !core.ends_with(TERMINATORS) {
        return false;
    }
    let lowered = core.trim_start_matches(['"', '\'', '(', '[']).to_lowercase();
    !abbrevs.contains(&lowered.as_str())
}

/// Casefolded form with whitespace collapsed; the basis of every equality key
/// (pair dedup, candidate dedup, translation-memory lookups).
pub fn comparison_form(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}
