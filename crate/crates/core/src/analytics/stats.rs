//! Corpus-level aggregation: median/IQR summaries, perplexity and sampling.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::hash::hash_bytes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub corpus: String,
    pub metric: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n_docs: u64,
}

/// Percentile by linear interpolation at rank `p * (n - 1)` of sorted values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn summarize(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(ForgeError::data("cannot summarize an empty sequence"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(ForgeError::data(format!("cannot summarize non-finite value {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        median: percentile(&sorted, 0.5),
        q1: percentile(&sorted, 0.25),
        q3: percentile(&sorted, 0.75),
    })
}

pub fn metric_summary(corpus: &str, metric: &str, values: &[f64]) -> Result<MetricSummary> {
    let q = summarize(values)?;
    Ok(MetricSummary {
        corpus: corpus.to_string(),
        metric: metric.to_string(),
        median: q.median,
        q1: q.q1,
        q3: q.q3,
        n_docs: values.len() as u64,
    })
}

/// Running sum of token log-probabilities (natural log).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerplexityAccumulator {
    sum: f64,
    tokens: u64,
    docs: u64,
}

impl PerplexityAccumulator {
    pub fn add(&mut self, doc_id: &str, logprobs: &[f64]) -> Result<()> {
        for &lp in logprobs {
            if lp.is_nan() || lp > 0.0 {
                return Err(ForgeError::data(format!(
                    "log-probability {lp} for {doc_id} is not ≤ 0"
                )));
            }
        }
        self.sum += logprobs.iter().sum::<f64>();
        self.tokens += logprobs.len() as u64;
        self.docs += 1;
        Ok(())
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }

    pub fn docs(&self) -> u64 {
        self.docs
    }

    pub fn perplexity(&self) -> Result<f64> {
        if self.tokens == 0 {
            return Err(ForgeError::data("no log-probabilities to aggregate"));
        }
        Ok((-self.sum / self.tokens as f64).exp())
    }
}

/// Corpus perplexity: exp of the negated mean log-probability over all tokens.
pub fn perplexity_from_logprobs<'a, I>(records: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let mut acc = PerplexityAccumulator::default();
    for (id, lps) in records {
        acc.add(id, lps)?;
    }
    acc.perplexity()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobRecord {
    pub id: String,
    pub logprobs: Vec<f64>,
}

/// Reads a newline-delimited `{id, logprobs}` sidecar.
pub fn load_logprobs(path: &Path) -> Result<Vec<LogprobRecord>> {
    let text = crate::ingest::read_to_string(path)?;
    let file = path.display().to_string();
    let mut offset = 0u64;
    let mut out = Vec::new();
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let rec: LogprobRecord = serde_json::from_str(trimmed).map_err(|e| ForgeError::Record {
                file: file.clone(),
                line: i as u64 + 1,
                offset,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        offset += line.len() as u64;
    }
    Ok(out)
}

/// Seeded threshold sampler: keeps an id iff its hash, read as a fraction of
/// 2^64, is below `fraction`. Larger fractions keep a superset.
#[derive(Debug, Clone, Copy)]
pub struct Sampler {
    threshold: Option<u64>,
    seed: u64,
}

impl Sampler {
    pub fn new(fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(ForgeError::Config(format!(
                "sample fraction {fraction} is outside (0, 1]"
            )));
        }
        let threshold = (fraction < 1.0).then_some((fraction * 18_446_744_073_709_551_616.0) as u64);
        Ok(Self { threshold, seed })
    }

    pub fn keeps(&self, id: &str) -> bool {
        self.threshold.is_none_or(|t| hash_bytes(id.as_bytes(), self.seed) < t)
    }
}

pub fn sample_fraction<I>(docs: I, fraction: f64, seed: u64) -> Result<impl Iterator<Item = crate::Document>>
where
    I: IntoIterator<Item = crate::Document>,
{
    let sampler = Sampler::new(fraction, seed)?;
    Ok(docs.into_iter().filter(move |d| sampler.keeps(&d.id)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_examples() {
        assert_eq!(
            summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(),
            Quartiles {
                median: 3.0,
                q1: 2.0,
                q3: 4.0
            }
        );
        assert_eq!(
            summarize(&[7.0]).unwrap(),
            Quartiles {
                median: 7.0,
                q1: 7.0,
                q3: 7.0
            }
        );
        assert_eq!(
            summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap(),
            Quartiles {
                median: 2.5,
                q1: 1.75,
                q3: 3.25
            }
        );
        assert!(summarize(&[]).is_err());
        assert!(summarize(&[f64::NAN]).is_err());
    }

    #[test]
    fn perplexity_examples() {
        let half = 0.5f64.ln();
        let p = perplexity_from_logprobs([("a", &[half, half][..])]).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        let k = 7usize;
        let uniform = vec![(1.0 / k as f64).ln(); k];
        let p = perplexity_from_logprobs([("a", &uniform[..])]).unwrap();
        assert!((p - k as f64).abs() < 1e-9);
        assert_eq!(perplexity_from_logprobs([("a", &[0.0, 0.0][..])]).unwrap(), 1.0);
        assert!(perplexity_from_logprobs([("a", &[0.1][..])]).is_err());
        assert!(perplexity_from_logprobs([("a", &[f64::NAN][..])]).is_err());
        assert!(perplexity_from_logprobs(std::iter::empty()).is_err());
    }

    #[test]
    fn sampling_fraction_one_is_identity() {
        let s = Sampler::new(1.0, 9).unwrap();
        assert!((0..1000).all(|i| s.keeps(&format!("d{i}"))));
        assert!(Sampler::new(0.0, 1).is_err());
        assert!(Sampler::new(1.5, 1).is_err());
    }

    #[test]
    fn sampling_one_percent_of_a_million() {
        let s = Sampler::new(0.01, 42).unwrap();
        let kept = (0..1_000_000u32).filter(|i| s.keeps(&format!("doc-{i}"))).count() as f64;
        let sigma = (1e6f64 * 0.01 * 0.99).sqrt();
        assert!((kept - 10_000.0).abs() <= 3.0 * sigma, "kept {kept}");
    }

    #[test]
    fn logprob_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lp.jsonl");
        std::fs::write(
            &p,
            "{\"id\":\"a\",\"logprobs\":[-1.0,-2.0]}\n\n{\"id\":\"b\",\"logprobs\":[]}\n",
        )
        .unwrap();
        let recs = load_logprobs(&p).unwrap();
        assert_eq!(recs.len(), 2);
        std::fs::write(&p, "{\"id\":\"a\"}\n").unwrap();
        assert!(load_logprobs(&p).unwrap_err().to_string().contains(":1"));
    }
}
