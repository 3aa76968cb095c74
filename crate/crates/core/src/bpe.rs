//! Byte-level byte-pair encoding.
//!
//! Text is pre-split at whitespace boundaries (each chunk is a word with its
//! leading whitespace run attached), so no merge ever spans two words. The
//! base vocabulary is the 256 byte values; every merge appends one token.
//!
//! Models are stored as `vocab.json` + `merges.txt`, with tokens written in
//! the usual printable byte-to-unicode alphabet.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::path::Path;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::document::Document;
use crate::error::{ForgeError, Result};

pub const MERGES_FILE: &str = "merges.txt";
pub const VOCAB_FILE: &str = "vocab.json";
pub const MERGES_HEADER: &str = "#version: 0.2";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(u32, u32)>,
    /// Byte sequence of every token, indexed by id.
    tokens: Vec<Vec<u8>>,
    ranks: FxHashMap<(u32, u32), u32>,
    target_vocab: usize,
}

impl BpeModel {
    /// A model with the 256 byte tokens and no merges.
    pub fn bytes_only() -> Self {
        Self {
            merges: Vec::new(),
            tokens: (0..=255u8).map(|b| vec![b]).collect(),
            ranks: FxHashMap::default(),
            target_vocab: 256,
        }
    }

    /// Builds a model by replaying `merges` in order.
    pub fn from_merges(merges: &[(u32, u32)], target_vocab: usize) -> Result<Self> {
        let mut model = Self::bytes_only();
        model.target_vocab = target_vocab.max(256);
        for &(l, r) in merges {
            model.push_merge(l, r)?;
        }
        Ok(model)
    }

    fn push_merge(&mut self, l: u32, r: u32) -> Result<u32> {
        let n = self.tokens.len() as u32;
        if l >= n || r >= n {
            return Err(ForgeError::data(format!(
                "merge ({l}, {r}) references an unknown token"
            )));
        }
        if self.ranks.contains_key(&(l, r)) {
            return Err(ForgeError::data(format!("merge ({l}, {r}) appears twice")));
        }
        let mut bytes = self.tokens[l as usize].clone();
        bytes.extend_from_slice(&self.tokens[r as usize]);
        self.ranks.insert((l, r), self.merges.len() as u32);
        self.merges.push((l, r));
        self.tokens.push(bytes);
        Ok(n)
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn target_vocab(&self) -> usize {
        self.target_vocab
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    /// Token (as printable string) to id.
    pub fn vocab(&self) -> BTreeMap<String, u32> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(id, bytes)| (bytes_to_printable(bytes), id as u32))
            .collect()
    }

    /// Applies merges in rank order to one pre-tokenized chunk.
    fn encode_chunk(&self, chunk: &[u8], out: &mut Vec<u32>) {
        let mut ids: Vec<u32> = chunk.iter().map(|&b| b as u32).collect();
        if !self.merges.is_empty() {
            loop {
                let mut best: Option<(u32, usize)> = None;
                for i in 0..ids.len().saturating_sub(1) {
                    if let Some(&rank) = self.ranks.get(&(ids[i], ids[i + 1])) {
                        if best.is_none_or(|(r, _)| rank < r) {
                            best = Some((rank, i));
                        }
                    }
                }
                let Some((rank, _)) = best else { break };
                let (l, r) = self.merges[rank as usize];
                let new_id = 256 + rank;
                let mut merged = Vec::with_capacity(ids.len());
                let mut i = 0;
                while i < ids.len() {
                    if i + 1 < ids.len() && ids[i] == l && ids[i + 1] == r {
                        merged.push(new_id);
                        i += 2;
                    } else {
                        merged.push(ids[i]);
                        i += 1;
                    }
                }
                ids = merged;
            }
        }
        out.extend_from_slice(&ids);
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::with_capacity(text.len() / 3);
        for chunk in pre_tokenize(text) {
            self.encode_chunk(chunk.as_bytes(), &mut out);
        }
        out
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut bytes = Vec::new();
        for &id in ids {
            let tok = self
                .tokens
                .get(id as usize)
                .ok_or_else(|| ForgeError::data(format!("token id {id} out of range")))?;
            bytes.extend_from_slice(tok);
        }
        String::from_utf8(bytes).map_err(|e| ForgeError::data(format!("decoded bytes are not UTF-8: {e}")))
    }

    pub fn count_tokens(&self, text: &str) -> u64 {
        let mut buf = Vec::new();
        let mut n = 0u64;
        for chunk in pre_tokenize(text) {
            buf.clear();
            self.encode_chunk(chunk.as_bytes(), &mut buf);
            n += buf.len() as u64;
        }
        n
    }

    /// Writes `vocab.json` and `merges.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        let vocab_path = dir.join(VOCAB_FILE);
        let mut vocab = serde_json::to_vec(&self.vocab()).expect("vocab serializes");
        vocab.push(b'\n');
        std::fs::write(&vocab_path, vocab).map_err(|e| ForgeError::io(&vocab_path, e))?;
        let merges_path = dir.join(MERGES_FILE);
        std::fs::write(&merges_path, self.merges_text()).map_err(|e| ForgeError::io(&merges_path, e))
    }

    pub fn merges_text(&self) -> String {
        let mut s = String::from(MERGES_HEADER);
        s.push('\n');
        for &(l, r) in &self.merges {
            s.push_str(&bytes_to_printable(&self.tokens[l as usize]));
            s.push(' ');
            s.push_str(&bytes_to_printable(&self.tokens[r as usize]));
            s.push('\n');
        }
        s
    }

    /// Loads a merges file on its own, e.g. a pretrained GPT-2 merge list.
    pub fn load_merges(path: &Path) -> Result<Self> {
        let text = crate::ingest::read_to_string(path)?;
        Self::parse_merges(&text)
    }

    pub fn parse_merges(text: &str) -> Result<Self> {
        let mut model = Self::bytes_only();
        let mut by_bytes: HashMap<Vec<u8>, u32> = (0..=255u8).map(|b| (vec![b], b as u32)).collect();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (Some(l), Some(r), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(ForgeError::data(format!("merges line {}: expected two tokens", i + 1)));
            };
            let lb = printable_to_bytes(l)?;
            let rb = printable_to_bytes(r)?;
            let lookup = |b: &Vec<u8>, tok: &str| {
                by_bytes
                    .get(b)
                    .copied()
                    .ok_or_else(|| ForgeError::data(format!("merges line {}: unknown token {tok:?}", i + 1)))
            };
            let (lid, rid) = (lookup(&lb, l)?, lookup(&rb, r)?);
            let id = model.push_merge(lid, rid)?;
            let mut joined = lb;
            joined.extend_from_slice(&rb);
            by_bytes.entry(joined).or_insert(id);
        }
        model.target_vocab = model.vocab_size();
        Ok(model)
    }

    /// Loads a directory written by [`save`](Self::save) and checks the vocabulary agrees.
    pub fn load(dir: &Path) -> Result<Self> {
        let model = Self::load_merges(&dir.join(MERGES_FILE))?;
        let vocab_path = dir.join(VOCAB_FILE);
        if vocab_path.exists() {
            let bytes = std::fs::read(&vocab_path).map_err(|e| ForgeError::io(&vocab_path, e))?;
            let vocab: BTreeMap<String, u32> = serde_json::from_slice(&bytes)
                .map_err(|e| ForgeError::data(format!("bad {}: {e}", vocab_path.display())))?;
            if vocab != model.vocab() {
                return Err(ForgeError::data(format!(
                    "{} does not match the merge list",
                    vocab_path.display()
                )));
            }
        }
        Ok(model)
    }
}

/// Splits text into chunks that merges may not cross. A new chunk starts at
/// every whitespace character that follows a non-whitespace character.
pub fn pre_tokenize(text: &str) -> impl Iterator<Item = &str> {
    let mut start = 0;
    let mut prev_ws = true;
    let mut cuts: Vec<usize> = Vec::new();
    for (i, c) in text.char_indices() {
        let ws = c.is_whitespace();
        if ws && !prev_ws && i > start {
            cuts.push(i);
            start = i;
        }
        prev_ws = ws;
    }
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0);
    bounds.extend(cuts);
    bounds.push(text.len());
    (0..bounds.len() - 1)
        .map(move |i| &text[bounds[i]..bounds[i + 1]])
        .filter(|s| !s.is_empty())
}

pub fn encode(model: &BpeModel, text: &str) -> Vec<u32> {
    model.encode(text)
}

pub fn decode(model: &BpeModel, ids: &[u32]) -> Result<String> {
    model.decode(ids)
}

pub fn count_tokens(model: &BpeModel, doc: &Document) -> u64 {
    model.count_tokens(&doc.text)
}

#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Reverse<Vec<u8>>,
    right: Reverse<Vec<u8>>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| self.left.cmp(&other.left))
            .then_with(|| self.right.cmp(&other.right))
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn add_pairs(
    word: &[u32],
    weight: u64,
    idx: usize,
    counts: &mut FxHashMap<(u32, u32), u64>,
    where_: &mut FxHashMap<(u32, u32), FxHashSet<usize>>,
    touched: &mut FxHashSet<(u32, u32)>,
) {
    for w in word.windows(2) {
        let p = (w[0], w[1]);
        *counts.entry(p).or_insert(0) += weight;
        where_.entry(p).or_default().insert(idx);
        touched.insert(p);
    }
}

fn remove_pairs(
    word: &[u32],
    weight: u64,
    counts: &mut FxHashMap<(u32, u32), u64>,
    touched: &mut FxHashSet<(u32, u32)>,
) {
    for w in word.windows(2) {
        let p = (w[0], w[1]);
        if let Some(c) = counts.get_mut(&p) {
            *c -= weight;
            if *c == 0 {
                counts.remove(&p);
            }
        }
        touched.insert(p);
    }
}

/// Pre-tokenized chunk frequencies, accumulated one text at a time so a
/// corpus can be streamed through training.
#[derive(Debug, Clone, Default)]
pub struct ChunkCounts {
    counts: FxHashMap<String, u64>,
    any_text: bool,
}

impl ChunkCounts {
    pub fn add(&mut self, text: &str) {
        self.any_text |= !text.is_empty();
        for chunk in pre_tokenize(text) {
            match self.counts.get_mut(chunk) {
                Some(c) => *c += 1,
                None => {
                    self.counts.insert(chunk.to_string(), 1);
                }
            }
        }
    }

    pub fn merge(&mut self, other: ChunkCounts) {
        self.any_text |= other.any_text;
        for (chunk, n) in other.counts {
            *self.counts.entry(chunk).or_insert(0) += n;
        }
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Learns merges until the vocabulary reaches `target_vocab` or no
    /// adjacent pair occurs at least twice. The most frequent pair wins; ties
    /// go to the pair whose (left bytes, right bytes) is lexicographically
    /// smallest, then to the smaller ids. Pairs whose bytes already form a
    /// token are skipped.
    pub fn train(self, target_vocab: usize) -> Result<BpeModel> {
        if target_vocab < 257 {
            return Err(ForgeError::Config(format!("target_vocab {target_vocab} is below 257")));
        }
        if !self.any_text {
            return Err(ForgeError::data("empty corpus"));
        }
        let mut entries: Vec<(String, u64)> = self.counts.into_iter().collect();
        entries.sort_unstable();
        let words: Vec<Vec<u32>> = entries
            .iter()
            .map(|(w, _)| w.bytes().map(u32::from).collect())
            .collect();
        let weights: Vec<u64> = entries.iter().map(|(_, c)| *c).collect();
        drop(entries);
        learn_merges(words, &weights, target_vocab)
    }
}

/// Trains on an in-memory set of texts; see [`ChunkCounts::train`].
pub fn train_bpe<'a, I>(texts: I, target_vocab: usize) -> Result<BpeModel>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts = ChunkCounts::default();
    for text in texts {
        counts.add(text);
    }
    counts.train(target_vocab)
}

fn learn_merges(mut words: Vec<Vec<u32>>, weights: &[u64], target_vocab: usize) -> Result<BpeModel> {
    let mut model = BpeModel::bytes_only();
    model.target_vocab = target_vocab;

    let mut counts: FxHashMap<(u32, u32), u64> = FxHashMap::default();
    let mut where_: FxHashMap<(u32, u32), FxHashSet<usize>> = FxHashMap::default();
    let mut touched = FxHashSet::default();
    for (i, w) in words.iter().enumerate() {
        add_pairs(w, weights[i], i, &mut counts, &mut where_, &mut touched);
    }
    let candidate = |model: &BpeModel, pair: (u32, u32), count: u64| Candidate {
        count,
        left: Reverse(model.tokens[pair.0 as usize].clone()),
        right: Reverse(model.tokens[pair.1 as usize].clone()),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts.iter().map(|(&p, &c)| candidate(&model, p, c)).collect();
    // Byte strings already in the vocabulary. A pair that would rebuild one
    // is never merged, so every token has distinct bytes.
    let mut known: FxHashSet<Vec<u8>> = model.tokens.iter().cloned().collect();

    while model.vocab_size() < target_vocab {
        let Some(top) = heap.pop() else { break };
        // Lazy deletion: skip entries whose count has since changed.
        if counts.get(&top.pair).copied() != Some(top.count) {
            continue;
        }
        if top.count < 2 {
            break;
        }
        let (l, r) = top.pair;
        let mut joined = model.tokens[l as usize].clone();
        joined.extend_from_slice(&model.tokens[r as usize]);
        if !known.insert(joined) {
            continue;
        }
        let new_id = model.push_merge(l, r)?;
        touched.clear();
        let mut affected: Vec<usize> = where_.remove(&top.pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        for idx in affected {
            let old = &words[idx];
            if !old.windows(2).any(|w| w[0] == l && w[1] == r) {
                continue;
            }
            let mut merged = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && old[i] == l && old[i + 1] == r {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(old[i]);
                    i += 1;
                }
            }
            remove_pairs(old, weights[idx], &mut counts, &mut touched);
            add_pairs(&merged, weights[idx], idx, &mut counts, &mut where_, &mut touched);
            words[idx] = merged;
        }
        for p in touched.drain() {
            if let Some(&c) = counts.get(&p) {
                heap.push(candidate(&model, p, c));
            }
        }
    }
    Ok(model)
}

/// Trains on document texts.
pub fn train_bpe_documents(docs: &[Document], target_vocab: usize) -> Result<BpeModel> {
    train_bpe(docs.iter().map(|d| d.text.as_str()), target_vocab)
}

/// The printable alphabet used for bytes in vocabulary files: printable
/// Latin-1 bytes map to themselves, the rest to code points from U+0100.
fn byte_alphabet() -> &'static [char; 256] {
    static TABLE: std::sync::OnceLock<[char; 256]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = ['\0'; 256];
        let mut extra = 0u32;
        for b in 0..=255u32 {
            let printable = (0x21..=0x7e).contains(&b) || (0xa1..=0xac).contains(&b) || (0xae..=0xff).contains(&b);
            table[b as usize] = if printable {
                char::from_u32(b).unwrap()
            } else {
                let c = char::from_u32(256 + extra).unwrap();
                extra += 1;
                c
            };
        }
        table
    })
}

pub fn bytes_to_printable(bytes: &[u8]) -> String {
    let table = byte_alphabet();
    bytes.iter().map(|&b| table[b as usize]).collect()
}

pub fn printable_to_bytes(s: &str) -> Result<Vec<u8>> {
    static REV: std::sync::OnceLock<HashMap<char, u8>> = std::sync::OnceLock::new();
    let rev = REV.get_or_init(|| byte_alphabet().iter().enumerate().map(|(b, &c)| (c, b as u8)).collect());
    s.chars()
        .map(|c| {
            rev.get(&c)
                .copied()
                .ok_or_else(|| ForgeError::data(format!("character {c:?} is not a byte token")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference trainer: recounts every pair over the whole corpus before
    /// each merge.
    fn naive_merges(texts: &[String], target: usize) -> Vec<(u32, u32)> {
        let mut chunks: BTreeMap<&str, u64> = BTreeMap::new();
        for t in texts {
            for c in pre_tokenize(t) {
                *chunks.entry(c).or_insert(0) += 1;
            }
        }
        let mut words: Vec<(Vec<u32>, u64)> =
            chunks.into_iter().map(|(c, n)| (c.bytes().map(u32::from).collect(), n)).collect();
        let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let mut merges = Vec::new();
        while tokens.len() < target {
            let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
            for (w, n) in &words {
                for p in w.windows(2) {
                    *counts.entry((p[0], p[1])).or_insert(0) += n;
                }
            }
            let joined = |p: &(u32, u32)| [tokens[p.0 as usize].clone(), tokens[p.1 as usize].clone()].concat();
            let best = counts
                .iter()
                .filter(|(p, &c)| c >= 2 && !tokens.contains(&joined(p)))
                .min_by(|(p, c), (q, d)| {
                    d.cmp(c)
                        .then_with(|| tokens[p.0 as usize].cmp(&tokens[q.0 as usize]))
                        .then_with(|| tokens[p.1 as usize].cmp(&tokens[q.1 as usize]))
                        .then_with(|| p.cmp(q))
                })
                .map(|(p, _)| *p);
            let Some((l, r)) = best else { break };
            let id = tokens.len() as u32;
            tokens.push(joined(&(l, r)));
            merges.push((l, r));
            for (w, _) in words.iter_mut() {
                let mut out = Vec::with_capacity(w.len());
                let mut i = 0;
                while i < w.len() {
                    if i + 1 < w.len() && w[i] == l && w[i + 1] == r {
                        out.push(id);
                        i += 2;
                    } else {
                        out.push(w[i]);
                        i += 1;
                    }
                }
                *w = out;
            }
        }
        merges
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn incremental_training_matches_full_recount(texts in prop::collection::vec("[abc ]{0,40}", 1..12), extra in 1usize..80) {
            prop_assume!(texts.iter().any(|t| !t.is_empty()));
            let target = 256 + extra;
            let model = train_bpe(texts.iter().map(String::as_str), target).unwrap();
            prop_assert_eq!(model.merges().to_vec(), naive_merges(&texts, target));
        }
    }

    #[test]
    fn tokens_have_distinct_bytes() {
        // "ab"+"c" and "a"+"bc" would both spell "abc".
        let texts = ["abc abc abc", "ab ab ab", "bc bc bc bc"].map(String::from);
        let model = train_bpe(texts.iter().map(String::as_str), 400).unwrap();
        let vocab = model.vocab();
        assert_eq!(vocab.len(), model.vocab_size());
        assert_eq!(model.merges().to_vec(), naive_merges(&texts, 400));
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        assert_eq!(BpeModel::load(dir.path()).unwrap().merges(), model.merges());
    }

    #[test]
    fn only_pair_is_merged() {
        let m = train_bpe(["aaaa"], 258).unwrap();
        assert_eq!(m.merges(), &[(97, 97)]);
        assert_eq!(m.token_bytes(256), Some(&b"aa"[..]));
    }

    #[test]
    fn most_frequent_pair_first() {
        let m = train_bpe(["abab"], 258).unwrap();
        assert_eq!(m.merges(), &[(97, 98)]);
        assert_eq!(m.vocab_size(), 257);
    }

    #[test]
    fn stops_without_repeats() {
        let m = train_bpe(["abcdefg"], 300).unwrap();
        assert_eq!(m.vocab_size(), 256);
        assert!(m.merges().is_empty());
    }

    #[test]
    fn tie_breaks_on_bytes() {
        // (a,b) and (b,a) both occur twice; (a,b) sorts first.
        let m = train_bpe(["ab", "ba", "ab", "ba"], 257).unwrap();
        assert_eq!(m.merges()[0], (97, 98));
    }

    #[test]
    fn training_errors() {
        assert!(train_bpe(["abc"], 256).is_err());
        let empty: [&str; 0] = [];
        assert!(train_bpe(empty, 300).is_err());
        assert!(train_bpe([""], 300).is_err());
    }

    #[test]
    fn encode_basics() {
        let m = BpeModel::bytes_only();
        assert!(m.encode("").is_empty());
        assert_eq!(m.encode("ab"), vec![97, 98]);
        assert_eq!(m.count_tokens(&"x".repeat(100)), 100);
    }

    #[test]
    fn decode_out_of_range() {
        let m = BpeModel::bytes_only();
        assert_eq!(m.decode(&[]).unwrap(), "");
        let err = m.decode(&[256]).unwrap_err();
        assert!(err.to_string().contains("256"));
    }

    #[test]
    fn merges_never_cross_whitespace() {
        let m = train_bpe(["a b a b a b a b"], 300).unwrap();
        for &(l, r) in m.merges() {
            let mut bytes = m.token_bytes(l).unwrap().to_vec();
            bytes.extend_from_slice(m.token_bytes(r).unwrap());
            let s = String::from_utf8(bytes).unwrap();
            assert!(!s.trim_start().contains(char::is_whitespace), "{s:?}");
        }
    }

    #[test]
    fn pre_tokenize_is_lossless() {
        for t in ["", "a", "  a  b ", "olá\tmundo\n\nfim", " "] {
            assert_eq!(pre_tokenize(t).collect::<String>(), t);
        }
        assert_eq!(pre_tokenize("ab  cd e").collect::<Vec<_>>(), ["ab", "  cd", " e"]);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = train_bpe(["o gato viu o rato e o rato viu o gato"], 280).unwrap();
        m.save(dir.path()).unwrap();
        let back = BpeModel::load(dir.path()).unwrap();
        assert_eq!(back.merges(), m.merges());
        assert_eq!(back.encode("o gato"), m.encode("o gato"));
    }

    #[test]
    fn printable_alphabet_round_trip() {
        let all: Vec<u8> = (0..=255).collect();
        let s = bytes_to_printable(&all);
        assert_eq!(printable_to_bytes(&s).unwrap(), all);
        assert_eq!(bytes_to_printable(b" "), "\u{120}");
    }

    #[test]
    fn gpt2_style_merge_file() {
        let m = BpeModel::parse_merges("#version: 0.2\nĠ t\nh e\nĠt he\n").unwrap();
        assert_eq!(m.vocab_size(), 259);
        assert_eq!(m.encode(" the"), vec![258]);
        assert_eq!(m.count_tokens("he the"), 2);
    }
}
