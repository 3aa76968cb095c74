//! Corpus-quality metrics: lexical diversity (TTR, HD-D), lexical
//! sophistication, average word frequency, lexical density and stopword
//! ratio per document, summarized as median and interquartile range over a
//! seeded sample. Perplexity is aggregated from externally computed token
//! log-probabilities.

mod diversity;
mod lexical;
mod stats;
mod tokens;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diversity::{frequency_spectrum, hdd, hdd_from_spectrum, ttr};
pub use lexical::{avg_word_frequency, density_and_stopwords, lexical_sophistication, ClassRatios};
pub use stats::{
    load_logprobs, metric_summary, perplexity_from_logprobs, sample_fraction, summarize, LogprobRecord, MetricSummary,
    PerplexityAccumulator, Quartiles, Sampler,
};
pub use tokens::{classify, classify_tokens, is_alphabetic_word, word_tokens, WordClass};

use crate::config::PipelineConfig;
use crate::document::Document;
use crate::error::{ForgeError, Result};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Reference word lists. All entries are lowercased on load.
#[derive(Debug, Clone, Default)]
pub struct LexicalResources {
    pub stopwords: HashSet<String>,
    pub content_lexicon: Option<HashSet<String>>,
    pub frequency_list: HashMap<String, u64>,
    pub top_k_frequent: HashSet<String>,
}

impl LexicalResources {
    pub fn from_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            stopwords: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            ..Self::default()
        }
    }

    /// Installs a frequency list given in rank order; the first `top_k`
    /// distinct words form the frequent-word set.
    pub fn set_frequency_list(&mut self, ranked: Vec<(String, u64)>, top_k: usize) {
        self.frequency_list.clear();
        self.top_k_frequent.clear();
        for (word, count) in ranked {
            let word = word.to_lowercase();
            if self.frequency_list.contains_key(&word) {
                continue;
            }
            if self.top_k_frequent.len() < top_k {
                self.top_k_frequent.insert(word.clone());
            }
            self.frequency_list.insert(word, count);
        }
    }

    pub fn load(stopwords: &Path, frequencies: &Path, lexicon: Option<&Path>, top_k: usize) -> Result<Self> {
        let mut res = Self::from_stopwords(read_word_list(stopwords)?);
        res.set_frequency_list(read_frequency_list(frequencies)?, top_k);
        if let Some(path) = lexicon {
            res.content_lexicon = Some(read_word_list(path)?.into_iter().map(|w| w.to_lowercase()).collect());
        }
        Ok(res)
    }
}

/// One word per line; blank lines are skipped.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = crate::ingest::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// `word<TAB>count` per line, most frequent first.
pub fn read_frequency_list(path: &Path) -> Result<Vec<(String, u64)>> {
    let text = crate::ingest::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || ForgeError::data(format!("{}:{}: expected word<TAB>count", path.display(), i + 1));
        let (word, count) = line.split_once('\t').ok_or_else(bad)?;
        let count: u64 = count.trim().parse().map_err(|_| bad())?;
        out.push((word.trim().to_string(), count));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocMetrics {
    pub doc_id: String,
    pub source: String,
    pub token_count: u64,
    pub ttr: f64,
    /// `None` when the document is shorter than the HD-D sample.
    pub hdd: Option<f64>,
    /// `None` when the document has no content words.
    pub sophistication: Option<f64>,
    /// `None` when no token is in the frequency list.
    pub avg_word_freq: Option<f64>,
    pub freq_coverage: f64,
    pub lexical_density: f64,
    pub stopword_ratio: f64,
    pub other_ratio: f64,
}

/// Metrics for one document, or `None` if it has no word tokens.
pub fn doc_metrics(doc: &Document, res: &LexicalResources, hdd_sample_size: usize) -> Option<DocMetrics> {
    let toks = word_tokens(&doc.text);
    if toks.is_empty() {
        return None;
    }
    let classes = classify_tokens(&toks, res);
    let ratios = density_and_stopwords(&classes).expect("non-empty");
    let hdd = (toks.len() >= hdd_sample_size).then(|| hdd(&toks, hdd_sample_size).expect("length checked"));
    let (avg_word_freq, freq_coverage) = match avg_word_frequency(&toks, res) {
        Ok((mean, cov)) => (Some(mean), cov),
        Err(_) => (None, 0.0),
    };
    Some(DocMetrics {
        doc_id: doc.id.clone(),
        source: doc.source.clone(),
        token_count: toks.len() as u64,
        ttr: ttr(&toks).expect("non-empty"),
        hdd,
        sophistication: lexical_sophistication(&toks, &classes, res).ok(),
        avg_word_freq,
        freq_coverage,
        lexical_density: ratios.lexical_density,
        stopword_ratio: ratios.stopword_ratio,
        other_ratio: ratios.other_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexitySummary {
    pub perplexity: f64,
    pub docs: u64,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub corpus: String,
    pub sample_fraction: f64,
    pub seed: u64,
    pub docs_seen: u64,
    pub docs_sampled: u64,
    pub docs_without_words: u64,
    pub metrics: Vec<MetricSummary>,
    pub perplexity: Option<PerplexitySummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub docs: Vec<DocMetrics>,
    pub summary: AnalysisSummary,
}

pub struct AnalysisOptions<'a> {
    pub corpus: String,
    pub fraction: f64,
    pub seed: u64,
    pub logprobs: Option<&'a [LogprobRecord]>,
}

const BATCH: usize = 4096;

/// Samples the stream, computes per-document metrics in parallel and
/// summarizes each metric over the documents where it is defined.
pub fn analyze<I>(docs: I, res: &LexicalResources, cfg: &PipelineConfig, opts: &AnalysisOptions) -> Result<Analysis>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let sampler = Sampler::new(opts.fraction, opts.seed)?;
    let mut seen = 0u64;
    let mut sampled_ids: HashSet<String> = HashSet::new();
    let mut metrics: Vec<DocMetrics> = Vec::new();
    let mut batch: Vec<Document> = Vec::with_capacity(BATCH);
    let mut without_words = 0u64;
    let mut flush = |batch: &mut Vec<Document>, metrics: &mut Vec<DocMetrics>| {
        let out: Vec<Option<DocMetrics>> = batch
            .par_iter()
            .map(|d| doc_metrics(d, res, cfg.hdd_sample_size))
            .collect();
        for m in out {
            match m {
                Some(m) => metrics.push(m),
                None => without_words += 1,
            }
        }
        batch.clear();
    };
    for doc in docs {
        let doc = doc?;
        seen += 1;
        if !sampler.keeps(&doc.id) {
            continue;
        }
        if opts.logprobs.is_some() {
            sampled_ids.insert(doc.id.clone());
        }
        batch.push(doc);
        if batch.len() == BATCH {
            flush(&mut batch, &mut metrics);
        }
    }
    flush(&mut batch, &mut metrics);
    let docs_sampled = metrics.len() as u64 + without_words;

    let perplexity = match opts.logprobs {
        None => None,
        Some(records) => {
            let mut acc = PerplexityAccumulator::default();
            for rec in records.iter().filter(|r| sampled_ids.contains(&r.id)) {
                acc.add(&rec.id, &rec.logprobs)?;
            }
            Some(PerplexitySummary {
                perplexity: acc.perplexity()?,
                docs: acc.docs(),
                tokens: acc.tokens(),
            })
        }
    };

    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for m in &metrics {
        let mut push = |name, v: Option<f64>| {
            let col: &mut Vec<f64> = columns.entry(name).or_default();
            if let Some(v) = v {
                col.push(v);
            }
        };
        push("ttr", Some(m.ttr));
        push("hdd", m.hdd);
        push("sophistication", m.sophistication);
        push("avg_word_freq", m.avg_word_freq);
        push("freq_coverage", Some(m.freq_coverage));
        push("lexical_density", Some(m.lexical_density));
        push("stopword_ratio", Some(m.stopword_ratio));
        push("other_ratio", Some(m.other_ratio));
        push("token_count", Some(m.token_count as f64));
    }
    let summaries = columns
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(name, v)| metric_summary(&opts.corpus, name, &v))
        .collect::<Result<Vec<_>>>()?;

    Ok(Analysis {
        docs: metrics,
        summary: AnalysisSummary {
            corpus: opts.corpus.clone(),
            sample_fraction: opts.fraction,
            seed: opts.seed,
            docs_seen: seen,
            docs_sampled,
            docs_without_words: without_words,
            metrics: summaries,
            perplexity,
        },
    })
}

impl Analysis {
    /// Writes `metrics.jsonl` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        let metrics_path = dir.join(METRICS_FILE);
        let mut buf = Vec::new();
        for m in &self.docs {
            serde_json::to_writer(&mut buf, m).expect("metrics serialize");
            buf.push(b'\n');
        }
        std::fs::write(&metrics_path, buf).map_err(|e| ForgeError::io(&metrics_path, e))?;
        let summary_path = dir.join(SUMMARY_FILE);
        let mut json = serde_json::to_vec_pretty(&self.summary).expect("summary serializes");
        json.push(b'\n');
        std::fs::write(&summary_path, json).map_err(|e| ForgeError::io(&summary_path, e))?;
        Ok((metrics_path, summary_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resources() -> LexicalResources {
        let mut res = LexicalResources::from_stopwords(["o", "a", "de", "e"]);
        res.set_frequency_list(vec![("o".into(), 500), ("gato".into(), 40), ("rato".into(), 10)], 2);
        res
    }

    #[test]
    fn top_k_is_a_prefix_of_the_list() {
        let res = resources();
        assert_eq!(res.top_k_frequent, HashSet::from(["o".to_string(), "gato".to_string()]));
        assert!(res.top_k_frequent.iter().all(|w| res.frequency_list.contains_key(w)));
    }

    #[test]
    fn metrics_for_one_document() {
        let doc = Document::new("d", "O gato e o rato, 2 vezes.", "s");
        let m = doc_metrics(&doc, &resources(), 42).unwrap();
        assert_eq!(m.token_count, 7);
        assert_eq!(m.hdd, None);
        assert!((m.ttr - 6.0 / 7.0).abs() < 1e-15);
        // content: gato, rato, vezes; rare: rato, vezes.
        assert_eq!(m.sophistication, Some(2.0 / 3.0));
        assert_eq!(m.lexical_density + m.stopword_ratio + m.other_ratio, 1.0);
        assert!(doc_metrics(&Document::new("e", "  ", "s"), &resources(), 42).is_none());
    }

    #[test]
    fn analyze_writes_outputs() {
        let docs = crate::synth::portuguese_documents(30, 3, "blogs");
        let cfg = PipelineConfig::default();
        let opts = AnalysisOptions {
            corpus: "demo".into(),
            fraction: 1.0,
            seed: 0,
            logprobs: None,
        };
        let a = analyze(docs.into_iter().map(Ok), &resources(), &cfg, &opts).unwrap();
        assert_eq!(a.summary.docs_seen, 30);
        assert_eq!(a.docs.len(), 30);
        for s in &a.summary.metrics {
            assert!(s.q1 <= s.median && s.median <= s.q3, "{s:?}");
        }
        let dir = tempfile::tempdir().unwrap();
        a.write(dir.path()).unwrap();
        let lines = std::fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
        assert_eq!(lines.lines().count(), 30);
    }

    #[test]
    fn perplexity_restricted_to_sample() {
        let docs = vec![Document::new("a", "o gato", "s"), Document::new("b", "o rato", "s")];
        let recs = vec![
            LogprobRecord {
                id: "a".into(),
                logprobs: vec![0.5f64.ln(); 2],
            },
            LogprobRecord {
                id: "zzz".into(),
                logprobs: vec![-10.0],
            },
        ];
        let opts = AnalysisOptions {
            corpus: "c".into(),
            fraction: 1.0,
            seed: 0,
            logprobs: Some(&recs),
        };
        let a = analyze(
            docs.into_iter().map(Ok),
            &resources(),
            &PipelineConfig::default(),
            &opts,
        )
        .unwrap();
        let p = a.summary.perplexity.unwrap();
        assert_eq!((p.docs, p.tokens), (1, 2));
        assert!((p.perplexity - 2.0).abs() < 1e-12);
    }
}
