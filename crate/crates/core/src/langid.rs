//! Language identification and the language-filter stage.
//!
//! The built-in identifier is a character n-gram multinomial model with
//! add-one smoothing. Any other identifier can drive the stage through the
//! [`LanguageScorer`] trait, including precomputed per-document scores read
//! from a sidecar file ([`ScoreTable`]).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::document::Document;
use crate::error::{ForgeError, Result};
use crate::hash::hash_bytes;
use crate::report::{Stage, StageReport, StageTally};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScore {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramProfile {
    pub label: String,
    pub n: usize,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

/// Lowercases and collapses every whitespace run to a single space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            if c.is_ascii() {
                out.push(c.to_ascii_lowercase());
            } else {
                out.extend(c.to_lowercase());
            }
        }
    }
    out
}

/// Calls `f` with every character n-gram of normalized `text`; a text
/// shorter than `n` characters yields itself as a single symbol.
fn for_each_gram(text: &str, n: usize, mut f: impl FnMut(&str)) {
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = bounds.len() - 1;
    if chars < n {
        f(text);
        return;
    }
    for i in 0..=chars - n {
        f(&text[bounds[i]..bounds[i + n]]);
    }
}

pub fn train_profile(label: &str, texts: &[impl AsRef<str>], n: usize) -> Result<NgramProfile> {
    if n == 0 {
        return Err(ForgeError::Config("n-gram order must be at least 1".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in texts {
        let norm = normalize(t.as_ref());
        if norm.chars().count() < n {
            continue;
        }
        for_each_gram(&norm, n, |g| *counts.entry(g.to_string()).or_insert(0) += 1);
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(ForgeError::data("no training data"));
    }
    Ok(NgramProfile {
        label: label.to_string(),
        n,
        counts,
        total,
    })
}

/// Anything that can assign a language score to a document.
pub trait LanguageScorer: Sync {
    fn score_document(&self, doc: &Document) -> Result<LanguageScore>;

    /// Labels this scorer can emit, when known up front.
    fn labels(&self) -> Option<Vec<String>> {
        None
    }
}

/// Compact key for an n-gram: packed code points for n <= 3, a hash otherwise.
#[inline]
fn gram_key(gram: &str, n: usize) -> u64 {
    if n <= 3 {
        let mut key = 1u64;
        for c in gram.chars() {
            key = (key << 21) | c as u64;
        }
        key
    } else {
        hash_bytes(gram.as_bytes(), 0x6c61_6e67)
    }
}

/// Same keys as `for_each_gram(&normalize(text), n, ..)` followed by
/// [`gram_key`], for `n <= 3`, without building the normalized string.
fn packed_keys(text: &str, n: usize, mut f: impl FnMut(u64)) {
    let bits = 21 * n as u32;
    let mask = (1u64 << bits) - 1;
    let mut window = 0u64;
    let mut seen = 0usize;
    let mut pending_space = false;
    let mut push = |c: char, window: &mut u64, seen: &mut usize| {
        *window = ((*window << 21) | c as u64) & mask;
        *seen += 1;
        if *seen >= n {
            f((1u64 << bits) | *window);
        }
    };
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = seen > 0;
            continue;
        }
        if pending_space {
            push(' ', &mut window, &mut seen);
            pending_space = false;
        }
        if c.is_ascii() {
            push(c.to_ascii_lowercase(), &mut window, &mut seen);
        } else {
            for lc in c.to_lowercase() {
                push(lc, &mut window, &mut seen);
            }
        }
    }
    if seen < n {
        // Shorter than one n-gram: the whole text is a single symbol.
        let mut key = 1u64;
        for i in (0..seen).rev() {
            key = (key << 21) | ((window >> (21 * i)) & 0x1f_ffff);
        }
        f(key);
    }
}

/// A set of trained profiles compiled for fast scoring.
#[derive(Debug, Clone)]
pub struct LanguageIdentifier {
    labels: Vec<String>,
    n: usize,
    /// n-gram key -> row into `log_probs`.
    rows: FxHashMap<u64, u32>,
    /// Row-major `[row][label]` smoothed log-probabilities.
    log_probs: Vec<f64>,
    /// Per-label log-probability of an n-gram never seen by any profile.
    unseen: Vec<f64>,
    profiles: Vec<NgramProfile>,
}

impl LanguageIdentifier {
    pub fn new(mut profiles: Vec<NgramProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(ForgeError::Config("identifier needs at least one profile".into()));
        }
        profiles.sort_by(|a, b| a.label.cmp(&b.label));
        let n = profiles[0].n;
        for w in profiles.windows(2) {
            if w[0].label == w[1].label {
                return Err(ForgeError::Config(format!("duplicate profile label {}", w[0].label)));
            }
        }
        for p in &profiles {
            if p.n != n {
                return Err(ForgeError::Config(format!(
                    "profile {} has order {} but {} was expected",
                    p.label, p.n, n
                )));
            }
            if p.label.is_empty() || p.total != p.counts.values().sum::<u64>() {
                return Err(ForgeError::Config(format!("profile {:?} is inconsistent", p.label)));
            }
        }

        let vocab: BTreeSet<&str> = profiles
            .iter()
            .flat_map(|p| p.counts.keys().map(String::as_str))
            .collect();
        // +1 reserves mass for n-grams outside every profile.
        let v = vocab.len() as f64 + 1.0;
        let labels: Vec<String> = profiles.iter().map(|p| p.label.clone()).collect();
        let l = labels.len();
        let unseen: Vec<f64> = profiles.iter().map(|p| (1.0 / (p.total as f64 + v)).ln()).collect();

        let mut rows = FxHashMap::default();
        let mut log_probs = Vec::with_capacity(vocab.len() * l);
        for (row, gram) in vocab.iter().enumerate() {
            let key = gram_key(gram, n);
            if rows.insert(key, row as u32).is_some() {
                return Err(ForgeError::Config(format!("n-gram key collision on {gram:?}")));
            }
            for p in &profiles {
                let c = p.counts.get(*gram).copied().unwrap_or(0) as f64;
                log_probs.push(((c + 1.0) / (p.total as f64 + v)).ln());
            }
        }

        Ok(Self {
            labels,
            n,
            rows,
            log_probs,
            unseen,
            profiles,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn profiles(&self) -> &[NgramProfile] {
        &self.profiles
    }

    /// Per-label mean log-likelihood of the normalized text.
    pub fn mean_log_likelihoods(&self, text: &str) -> Vec<f64> {
        let l = self.labels.len();
        let mut sums = vec![0.0f64; l];
        let mut count = 0u64;
        let mut add = |key: u64| {
            count += 1;
            let lps = match self.rows.get(&key) {
                Some(&row) => &self.log_probs[row as usize * l..(row as usize + 1) * l],
                None => &self.unseen[..],
            };
            for (s, lp) in sums.iter_mut().zip(lps) {
                *s += lp;
            }
        };
        if self.n <= 3 {
            packed_keys(text, self.n, &mut add);
        } else {
            for_each_gram(&normalize(text), self.n, |g| add(gram_key(g, self.n)));
        }
        let count = count.max(1) as f64;
        sums.iter().map(|s| s / count).collect()
    }

    /// Most likely label and its softmax confidence over per-label mean log-likelihoods.
    pub fn score(&self, text: &str) -> LanguageScore {
        let means = self.mean_log_likelihoods(text);
        let mut best = 0;
        for (i, m) in means.iter().enumerate() {
            if *m > means[best] {
                best = i;
            }
        }
        let top = means[best];
        let z: f64 = means.iter().map(|m| (m - top).exp()).sum();
        LanguageScore {
            label: self.labels[best].clone(),
            confidence: (1.0 / z).clamp(0.0, 1.0),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_profiles(&self.profiles, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(load_profiles(path)?)
    }
}

impl LanguageScorer for LanguageIdentifier {
    fn score_document(&self, doc: &Document) -> Result<LanguageScore> {
        Ok(self.score(&doc.text))
    }

    fn labels(&self) -> Option<Vec<String>> {
        Some(self.labels.clone())
    }
}

pub fn save_profiles(profiles: &[NgramProfile], path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec(profiles).expect("profiles serialize");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| ForgeError::io(path, e))
}

pub fn load_profiles(path: &Path) -> Result<Vec<NgramProfile>> {
    let bytes = std::fs::read(path).map_err(|e| ForgeError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| ForgeError::data(format!("bad profile file {}: {e}", path.display())))
}

/// Precomputed scores keyed by document id, e.g. the output of an external identifier.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    scores: HashMap<String, LanguageScore>,
}

#[derive(Deserialize)]
struct ScoreRecord {
    id: String,
    label: String,
    confidence: f64,
}

impl ScoreTable {
    pub fn insert(&mut self, id: impl Into<String>, score: LanguageScore) {
        self.scores.insert(id.into(), score);
    }

    /// Reads newline-delimited `{id, label, confidence}` records.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::ingest::read_to_string(path)?;
        let file = path.display().to_string();
        let mut table = ScoreTable::default();
        let mut offset = 0u64;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let start = offset;
            offset += line.len() as u64;
            let body = line.trim_end();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| ForgeError::Record {
                file: file.clone(),
                line: i as u64 + 1,
                offset: start,
                message,
            };
            let rec: ScoreRecord = serde_json::from_str(body).map_err(|e| err(format!("malformed score ({e})")))?;
            if !(0.0..=1.0).contains(&rec.confidence) || rec.label.is_empty() {
                return Err(err(format!("invalid score for {}", rec.id)));
            }
            table.insert(
                rec.id,
                LanguageScore {
                    label: rec.label,
                    confidence: rec.confidence,
                },
            );
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl LanguageScorer for ScoreTable {
    fn score_document(&self, doc: &Document) -> Result<LanguageScore> {
        self.scores
            .get(&doc.id)
            .cloned()
            .ok_or_else(|| ForgeError::data(format!("no language score for document {}", doc.id)))
    }
}

pub const WRONG_LABEL: &str = "wrong_label";
pub const LOW_CONFIDENCE: &str = "low_confidence";

/// Drop reason for a score, or `None` when the document is kept.
pub fn language_verdict(score: &LanguageScore, cfg: &PipelineConfig) -> Option<&'static str> {
    if score.label != cfg.lang_label {
        Some(WRONG_LABEL)
    } else if score.confidence < cfg.lang_threshold {
        Some(LOW_CONFIDENCE)
    } else {
        None
    }
}

pub(crate) fn check_scorer(scorer: &dyn LanguageScorer, cfg: &PipelineConfig) -> Result<()> {
    if let Some(labels) = scorer.labels() {
        if !labels.contains(&cfg.lang_label) {
            return Err(ForgeError::Config(format!(
                "identifier has no profile for {}",
                cfg.lang_label
            )));
        }
    }
    Ok(())
}

/// Keeps documents scored as `cfg.lang_label` with confidence at or above the threshold.
pub fn filter_by_language<I>(
    docs: I,
    cfg: &PipelineConfig,
    scorer: &dyn LanguageScorer,
) -> Result<(Vec<Document>, StageReport)>
where
    I: IntoIterator<Item = Document>,
{
    check_scorer(scorer, cfg)?;
    let mut tally = StageTally::new(Stage::Langid);
    let mut kept = Vec::new();
    for doc in docs {
        let score = scorer.score_document(&doc)?;
        match language_verdict(&score, cfg) {
            None => {
                tally.keep(&doc.source);
                kept.push(doc);
            }
            Some(reason) => tally.drop(&doc.source, reason),
        }
    }
    Ok((kept, tally.total()))
}
