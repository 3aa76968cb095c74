//! Word segmentation and the three-way word classification.

use super::LexicalResources;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordClass {
    Stopword,
    Content,
    Other,
}

/// Lowercases, splits on Unicode whitespace and strips leading/trailing
/// punctuation. Tokens made only of punctuation are kept whole.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let stripped = raw.trim_matches(|c: char| !c.is_alphanumeric());
            let tok = if stripped.is_empty() { raw } else { stripped };
            (!tok.is_empty()).then(|| tok.to_lowercase())
        })
        .collect()
}

/// Alphabetic, allowing internal hyphens and apostrophes ("guarda-chuva", "d'água").
pub fn is_alphabetic_word(tok: &str) -> bool {
    let mut chars = tok.chars().peekable();
    let mut prev_joiner = true;
    let mut any = false;
    while let Some(c) = chars.next() {
        if c.is_alphabetic() {
            prev_joiner = false;
            any = true;
        } else if (c == '-' || c == '\'' || c == '\u{2019}') && !prev_joiner && chars.peek().is_some() {
            prev_joiner = true;
        } else {
            return false;
        }
    }
    any && !prev_joiner
}

pub fn classify(tok: &str, res: &LexicalResources) -> WordClass {
    if res.stopwords.contains(tok) {
        WordClass::Stopword
    } else if is_alphabetic_word(tok) && res.content_lexicon.as_ref().is_none_or(|lex| lex.contains(tok)) {
        WordClass::Content
    } else {
        WordClass::Other
    }
}

pub fn classify_tokens(tokens: &[String], res: &LexicalResources) -> Vec<WordClass> {
    tokens.iter().map(|t| classify(t, res)).collect()
}
