//! Near-duplicate removal with MinHash signatures and LSH banding.
//!
//! Execution is map / reduce / filter: signatures are computed per document
//! in parallel, the band-key index is resolved once globally, then every
//! clustered document except its survivor is dropped.

mod cluster;
mod minhash;
mod shingle;

pub use cluster::{cluster_duplicates, cluster_verified, Cluster, DuplicateClusters, LshIndex, Resolution, UnionFind};
pub use minhash::{matching_fraction, minhash_signature, MinHashSignature, MinHasher, MERSENNE_61};
pub use shingle::{jaccard_sorted, shingle, shingle_text, ShingleSet};

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::document::Document;
use crate::error::Result;
use crate::report::{Stage, StageReport, StageTally};

pub const NEAR_DUPLICATE: &str = "near_duplicate";

/// Shingling and signature computation bound to one configuration.
#[derive(Debug, Clone)]
pub struct Deduplicator {
    hasher: MinHasher,
    shingle_size: usize,
    seed: u64,
    verify: Option<f64>,
}

impl Deduplicator {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        Ok(Self {
            hasher: MinHasher::from_config(cfg)?,
            shingle_size: cfg.shingle_size,
            seed: cfg.master_seed,
            verify: cfg.dedup_verify.then_some(cfg.dedup_verify_threshold),
        })
    }

    pub fn hasher(&self) -> &MinHasher {
        &self.hasher
    }

    /// Jaccard threshold used to confirm candidates, if verification is on.
    pub fn verify_threshold(&self) -> Option<f64> {
        self.verify
    }

    pub fn shingles(&self, doc: &Document) -> Vec<u64> {
        shingle_text(&doc.text, self.shingle_size, self.seed)
    }

    /// Signature of a document, or `None` when it has no words to shingle.
    /// Wordless documents are never clustered.
    pub fn signature(&self, doc: &Document) -> Option<MinHashSignature> {
        self.signature_from_shingles(&doc.id, &self.shingles(doc))
    }

    pub fn signature_from_shingles(&self, id: &str, shingles: &[u64]) -> Option<MinHashSignature> {
        if shingles.is_empty() {
            return None;
        }
        let components = self.hasher.components(shingles);
        let bands = self.hasher.band_keys(&components);
        Some(MinHashSignature {
            doc_id: id.to_string(),
            components,
            bands,
        })
    }

    /// Resolves clusters over an in-memory corpus; returns one removal flag per document.
    pub fn find_duplicates(
        &self,
        docs: &[Document],
    ) -> Result<(Vec<bool>, DuplicateClusters, Vec<Option<MinHashSignature>>)> {
        let prepared: Vec<(Option<MinHashSignature>, Vec<u64>)> = docs
            .par_iter()
            .map(|d| {
                let sh = self.shingles(d);
                let sig = self.signature_from_shingles(&d.id, &sh);
                let keep_shingles = if self.verify.is_some() { sh } else { Vec::new() };
                (sig, keep_shingles)
            })
            .collect();

        let mut index = LshIndex::new(self.hasher.num_bands());
        let mut entry_doc = Vec::new();
        let mut entry_shingles = Vec::new();
        for (i, (sig, sh)) in prepared.iter().enumerate() {
            if let Some(sig) = sig {
                index.insert(sig.doc_id.clone(), &sig.bands)?;
                entry_doc.push(i);
                entry_shingles.push(sh.clone());
            }
        }
        let resolution = match self.verify {
            None => index.resolve()?,
            Some(t) => {
                let verify = |a: usize, b: usize| shingle::jaccard_sorted(&entry_shingles[a], &entry_shingles[b]) >= t;
                index.resolve_with(&verify)?
            }
        };
        let mut removed = vec![false; docs.len()];
        for (entry, &doc) in entry_doc.iter().enumerate() {
            removed[doc] = resolution.removed[entry];
        }
        let sigs = prepared.into_iter().map(|(s, _)| s).collect();
        Ok((removed, resolution.clusters, sigs))
    }
}

/// Drops every clustered document except its survivor, preserving order.
pub fn dedup_corpus<I>(docs: I, cfg: &PipelineConfig) -> Result<(Vec<Document>, StageReport)>
where
    I: IntoIterator<Item = Document>,
{
    let docs: Vec<Document> = docs.into_iter().collect();
    let dedup = Deduplicator::new(cfg)?;
    let (removed, _, _) = dedup.find_duplicates(&docs)?;
    let mut tally = StageTally::new(Stage::Dedup);
    let mut kept = Vec::with_capacity(docs.len());
    for (doc, gone) in docs.into_iter().zip(removed) {
        if gone {
            tally.drop(&doc.source, NEAR_DUPLICATE);
        } else {
            tally.keep(&doc.source);
            kept.push(doc);
        }
    }
    Ok((kept, tally.total()))
}
