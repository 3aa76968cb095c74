//! LSH band grouping and connected-component resolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minhash::MinHashSignature;
use super::shingle::jaccard_sorted;
use crate::error::{ForgeError, Result};

/// Disjoint sets with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns true when `a` and `b` were in different sets.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    /// Member ids in ascending order.
    pub members: Vec<String>,
    /// The survivor: the lexicographically smallest member.
    pub kept: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateClusters {
    pub clusters: Vec<Cluster>,
}

impl DuplicateClusters {
    /// Ids of every clustered document other than its cluster's survivor.
    pub fn removed_ids(&self) -> std::collections::HashSet<&str> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().filter(move |m| **m != c.kept))
            .map(String::as_str)
            .collect()
    }

    pub fn removed_count(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len() - 1).sum()
    }
}

/// Outcome of resolving an [`LshIndex`]: clusters plus a per-entry removal mask.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub clusters: DuplicateClusters,
    /// `removed[i]` is true when entry `i` (insertion order) loses to its survivor.
    pub removed: Vec<bool>,
}

/// Band keys of every indexed document, grouped in a single reduce step.
///
/// Only ids and band keys are held, so memory is `O(docs * bands)`.
#[derive(Debug, Clone)]
pub struct LshIndex {
    num_bands: usize,
    ids: Vec<String>,
    keys: Vec<u64>,
}

impl LshIndex {
    pub fn new(num_bands: usize) -> Self {
        Self {
            num_bands,
            ids: Vec::new(),
            keys: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Adds one document; returns its entry index.
    pub fn insert(&mut self, id: String, bands: &[u64]) -> Result<usize> {
        if bands.len() != self.num_bands {
            return Err(ForgeError::data(format!(
                "signature for {id} has {} bands, index expects {}",
                bands.len(),
                self.num_bands
            )));
        }
        self.ids.push(id);
        self.keys.extend_from_slice(bands);
        Ok(self.ids.len() - 1)
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut order: Vec<u32> = (0..self.ids.len() as u32).collect();
        order.par_sort_unstable_by(|&a, &b| self.ids[a as usize].cmp(&self.ids[b as usize]));
        for w in order.windows(2) {
            if self.ids[w[0] as usize] == self.ids[w[1] as usize] {
                return Err(ForgeError::DuplicateId(self.ids[w[0] as usize].clone()));
            }
        }
        Ok(())
    }

    /// `(key, band, doc)` for every band key, sorted so that the members of
    /// one bucket are adjacent.
    fn buckets(&self) -> Vec<(u64, u32, u32)> {
        let b = self.num_bands;
        let mut entries: Vec<(u64, u32, u32)> = Vec::with_capacity(self.keys.len());
        for (doc, chunk) in self.keys.chunks(b).enumerate() {
            for (band, &key) in chunk.iter().enumerate() {
                entries.push((key, band as u32, doc as u32));
            }
        }
        entries.par_sort_unstable();
        entries
    }

    /// Links every pair of documents sharing at least one band key.
    pub fn resolve(self) -> Result<Resolution> {
        self.resolve_inner(None)
    }

    /// Like [`resolve`](Self::resolve), but only links candidate pairs
    /// (entry indices) accepted by `verify`.
    pub fn resolve_with(self, verify: &(dyn Fn(usize, usize) -> bool + Sync)) -> Result<Resolution> {
        self.resolve_inner(Some(verify))
    }

    fn resolve_inner(self, verify: Option<&(dyn Fn(usize, usize) -> bool + Sync)>) -> Result<Resolution> {
        self.check_unique_ids()?;
        let entries = self.buckets();
        let mut uf = UnionFind::new(self.ids.len());
        let mut start = 0;
        while start < entries.len() {
            let mut end = start + 1;
            while end < entries.len() && entries[end].0 == entries[start].0 && entries[end].1 == entries[start].1 {
                end += 1;
            }
            let bucket = &entries[start..end];
            match verify {
                // Chaining every member to the first yields the same components as all pairs.
                None => {
                    for e in &bucket[1..] {
                        uf.union(bucket[0].2, e.2);
                    }
                }
                Some(verify) => {
                    for i in 0..bucket.len() {
                        for j in i + 1..bucket.len() {
                            let (x, y) = (bucket[i].2, bucket[j].2);
                            if verify(x as usize, y as usize) {
                                uf.union(x, y);
                            }
                        }
                    }
                }
            }
            start = end;
        }
        Ok(self.collect(uf))
    }

    fn collect(self, mut uf: UnionFind) -> Resolution {
        let n = self.ids.len();
        let mut groups: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
        for i in 0..n as u32 {
            let root = uf.find(i);
            groups.entry(root).or_default().push(i);
        }
        let mut removed = vec![false; n];
        let mut clusters: Vec<Cluster> = Vec::new();
        for members in groups.into_values().filter(|m| m.len() > 1) {
            let survivor = *members
                .iter()
                .min_by(|&&a, &&b| self.ids[a as usize].cmp(&self.ids[b as usize]))
                .unwrap();
            for &m in &members {
                if m != survivor {
                    removed[m as usize] = true;
                }
            }
            let mut ids: Vec<String> = members.iter().map(|&m| self.ids[m as usize].clone()).collect();
            ids.sort();
            clusters.push(Cluster {
                kept: self.ids[survivor as usize].clone(),
                members: ids,
            });
        }
        clusters.sort_by(|a, b| a.kept.cmp(&b.kept));
        Resolution {
            clusters: DuplicateClusters { clusters },
            removed,
        }
    }
}

/// Connected components of the "shares a band key" graph.
pub fn cluster_duplicates<I>(signatures: I) -> Result<DuplicateClusters>
where
    I: IntoIterator<Item = MinHashSignature>,
{
    let mut index: Option<LshIndex> = None;
    for sig in signatures {
        let idx = index.get_or_insert_with(|| LshIndex::new(sig.bands.len()));
        idx.insert(sig.doc_id, &sig.bands)?;
    }
    match index {
        Some(idx) => Ok(idx.resolve()?.clusters),
        None => Ok(DuplicateClusters::default()),
    }
}

/// Clustering that confirms each candidate pair with exact shingle Jaccard.
pub fn cluster_verified(
    signatures: Vec<MinHashSignature>,
    shingles: &[Vec<u64>],
    threshold: f64,
) -> Result<DuplicateClusters> {
    let Some(first) = signatures.first() else {
        return Ok(DuplicateClusters::default());
    };
    let mut idx = LshIndex::new(first.bands.len());
    for sig in signatures {
        idx.insert(sig.doc_id, &sig.bands)?;
    }
    let verify = |a: usize, b: usize| jaccard_sorted(&shingles[a], &shingles[b]) >= threshold;
    Ok(idx.resolve_with(&verify)?.clusters)
}
