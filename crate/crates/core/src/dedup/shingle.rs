use crate::document::Document;
use crate::error::{ForgeError, Result};
use crate::hash::{hash_bytes, mix64};

/// Hashed word windows of one document, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet {
    pub doc_id: String,
    pub shingles: Vec<u64>,
}

impl ShingleSet {
    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }

    /// Exact Jaccard similarity of two shingle sets.
    pub fn jaccard(&self, other: &ShingleSet) -> f64 {
        jaccard_sorted(&self.shingles, &other.shingles)
    }
}

pub fn jaccard_sorted(a: &[u64], b: &[u64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

#[inline]
fn combine(window: &[u64], seed: u64) -> u64 {
    let mut acc = seed ^ 0x243f_6a88_85a3_08d3;
    for &w in window {
        acc = (acc.rotate_left(23) ^ w).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
    mix64(acc ^ window.len() as u64)
}

/// Hashes every `size`-word window of the lowercased text.
///
/// A window hash depends only on its words, so a document with fewer than
/// `size` words yields one shingle equal to the window it would form.
pub fn shingle_text(text: &str, size: usize, seed: u64) -> Vec<u64> {
    assert!(size >= 1, "shingle size must be positive");
    let mut word_hashes = Vec::new();
    let mut lower = String::new();
    for word in text.split_whitespace() {
        let h = if word.bytes().any(|b| b.is_ascii_uppercase() || b >= 0x80) {
            lower.clear();
            lower.extend(word.chars().flat_map(char::to_lowercase));
            hash_bytes(lower.as_bytes(), seed)
        } else {
            hash_bytes(word.as_bytes(), seed)
        };
        word_hashes.push(h);
    }
    if word_hashes.is_empty() {
        return Vec::new();
    }
    let mut shingles: Vec<u64> = if word_hashes.len() < size {
        vec![combine(&word_hashes, seed)]
    } else {
        word_hashes.windows(size).map(|w| combine(w, seed)).collect()
    };
    shingles.sort_unstable();
    shingles.dedup();
    shingles
}

pub fn shingle(doc: &Document, size: usize, seed: u64) -> Result<ShingleSet> {
    if size == 0 {
        return Err(ForgeError::Config("shingle size must be positive".into()));
    }
    let shingles = shingle_text(&doc.text, size, seed);
    if shingles.is_empty() {
        return Err(ForgeError::data(format!("empty document {}", doc.id)));
    }
    Ok(ShingleSet {
        doc_id: doc.id.clone(),
        shingles,
    })
}
