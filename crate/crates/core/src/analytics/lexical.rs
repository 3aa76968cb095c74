//! Frequency-based and class-based lexical measures.

use super::tokens::WordClass;
use super::LexicalResources;
use crate::error::{ForgeError, Result};

/// Share of content tokens that fall outside the top-K reference words.
pub fn lexical_sophistication(tokens: &[String], classes: &[WordClass], res: &LexicalResources) -> Result<f64> {
    let mut content = 0u64;
    let mut rare = 0u64;
    for (tok, class) in tokens.iter().zip(classes) {
        if *class == WordClass::Content {
            content += 1;
            if !res.top_k_frequent.contains(tok) {
                rare += 1;
            }
        }
    }
    if content == 0 {
        return Err(ForgeError::data("no content tokens"));
    }
    Ok(rare as f64 / content as f64)
}

/// Mean reference frequency over tokens found in the list, and the share of
/// tokens that were found.
pub fn avg_word_frequency(tokens: &[String], res: &LexicalResources) -> Result<(f64, f64)> {
    if tokens.is_empty() {
        return Err(ForgeError::data("no tokens"));
    }
    let mut found = 0u64;
    let mut sum = 0u128;
    for tok in tokens {
        if let Some(&f) = res.frequency_list.get(tok) {
            found += 1;
            sum += f as u128;
        }
    }
    if found == 0 {
        return Err(ForgeError::data("no coverage"));
    }
    Ok((sum as f64 / found as f64, found as f64 / tokens.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRatios {
    pub lexical_density: f64,
    pub stopword_ratio: f64,
    pub other_ratio: f64,
}

/// Content, stopword and other shares. `other_ratio` is taken as the
/// complement so that the three add up to exactly 1.0.
pub fn density_and_stopwords(classes: &[WordClass]) -> Result<ClassRatios> {
    if classes.is_empty() {
        return Err(ForgeError::data("no tokens"));
    }
    let total = classes.len() as f64;
    let content = classes.iter().filter(|c| **c == WordClass::Content).count() as f64;
    let stop = classes.iter().filter(|c| **c == WordClass::Stopword).count() as f64;
    let lexical_density = content / total;
    let stopword_ratio = stop / total;
    Ok(ClassRatios {
        lexical_density,
        stopword_ratio,
        other_ratio: 1.0 - (lexical_density + stopword_ratio),
    })
}
