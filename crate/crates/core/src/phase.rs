//! Token-budgeted split of a corpus into three training phases: standard
//! pre-training, context extension and learning-rate decay.
//!
//! Documents longer than the long-document threshold never go to phase 1.
//! They are placed first, each by a seeded coin weighted by the phase 2:3
//! ratio. Short documents are then visited in seeded-shuffle order and each
//! goes to the phase with the largest remaining token deficit.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpe::BpeModel;
use crate::config::PipelineConfig;
use crate::document::Document;
use crate::error::{ForgeError, Result};

pub const PLAN_FILE: &str = "phase_plan.json";

pub fn ids_file_name(phase: usize) -> String {
    format!("phase{phase}.ids")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub ratios: [f64; 3],
    pub long_threshold: u64,
    pub seed: u64,
    pub total_tokens: u64,
    pub targets: [f64; 3],
    pub phase_token_totals: [u64; 3],
    pub phase_doc_counts: [u64; 3],
    pub long_docs: u64,
    pub warnings: Vec<String>,
    /// Document id to phase number (1, 2 or 3).
    #[serde(skip)]
    pub assignments: BTreeMap<String, u8>,
}

impl PhasePlan {
    pub fn phase_of(&self, id: &str) -> Option<u8> {
        self.assignments.get(id).copied()
    }

    /// Ids assigned to `phase`, in id order.
    pub fn ids(&self, phase: u8) -> impl Iterator<Item = &str> {
        self.assignments
            .iter()
            .filter(move |(_, p)| **p == phase)
            .map(|(id, _)| id.as_str())
    }

    /// Writes `phase{1,2,3}.ids` and `phase_plan.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        for phase in 1..=3u8 {
            let path = dir.join(ids_file_name(phase as usize));
            let mut out = String::new();
            for id in self.ids(phase) {
                out.push_str(id);
                out.push('\n');
            }
            std::fs::write(&path, out).map_err(|e| ForgeError::io(&path, e))?;
        }
        let path = dir.join(PLAN_FILE);
        let mut json = serde_json::to_vec_pretty(self).expect("plan serializes");
        json.push(b'\n');
        std::fs::write(&path, json).map_err(|e| ForgeError::io(&path, e))
    }

    /// Reads a plan back, including assignments from the id files.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(PLAN_FILE);
        let bytes = std::fs::read(&path).map_err(|e| ForgeError::io(&path, e))?;
        let mut plan: PhasePlan =
            serde_json::from_slice(&bytes).map_err(|e| ForgeError::data(format!("bad {}: {e}", path.display())))?;
        for phase in 1..=3u8 {
            let ids = crate::ingest::read_to_string(&dir.join(ids_file_name(phase as usize)))?;
            for id in ids.lines().filter(|l| !l.is_empty()) {
                plan.assignments.insert(id.to_string(), phase);
            }
        }
        Ok(plan)
    }
}

/// Index (0..3) of the largest deficit among `candidates`; ties go to the
/// lower phase.
fn largest_deficit(deficits: &[f64; 3], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if deficits[c] > deficits[best] {
            best = c;
        }
    }
    best
}

pub fn partition_phases<I, S>(docs: I, cfg: &PipelineConfig) -> Result<PhasePlan>
where
    I: IntoIterator<Item = (S, u64)>,
    S: Into<String>,
{
    partition_with_seed(docs, cfg, cfg.master_seed)
}

pub fn partition_with_seed<I, S>(docs: I, cfg: &PipelineConfig, seed: u64) -> Result<PhasePlan>
where
    I: IntoIterator<Item = (S, u64)>,
    S: Into<String>,
{
    let mut docs: Vec<(String, u64)> = docs.into_iter().map(|(id, n)| (id.into(), n)).collect();
    if docs.is_empty() {
        return Err(ForgeError::data("empty corpus"));
    }
    // Sorting by id makes the plan independent of input order.
    docs.sort_unstable();
    if let Some(w) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ForgeError::DuplicateId(w[0].0.clone()));
    }

    let ratios = cfg.phase_ratios;
    let threshold = cfg.long_doc_token_threshold;
    let total: u64 = docs.iter().map(|(_, n)| n).sum();
    let targets = ratios.map(|r| r * total as f64);
    let mut deficits = targets;
    let mut totals = [0u64; 3];
    let mut counts = [0u64; 3];
    let mut warnings = Vec::new();
    let mut assignments = BTreeMap::new();
    let mut assign = |id: &str, n: u64, phase: usize, deficits: &mut [f64; 3]| {
        deficits[phase] -= n as f64;
        totals[phase] += n;
        counts[phase] += 1;
        assignments.insert(id.to_string(), phase as u8 + 1);
    };

    let (long, short): (Vec<_>, Vec<_>) = docs.iter().partition(|(_, n)| *n > threshold);
    let long_mass: u64 = long.iter().map(|(_, n)| n).sum();
    let later_budget = targets[1] + targets[2];
    if long_mass as f64 > later_budget {
        warnings.push(format!(
            "long documents hold {long_mass} tokens, more than the phase 2+3 budget of {later_budget:.0}; \
             phases 2 and 3 absorb the excess and phase 1 receives only short documents"
        ));
    }

    let mut coin_rng = ChaCha8Rng::seed_from_u64(seed);
    coin_rng.set_stream(1);
    let p2 = if later_budget > 0.0 {
        targets[1] / later_budget
    } else {
        1.0
    };
    for (id, n) in &long {
        let n = *n;
        // Draw for every long document so the stream stays aligned.
        let coin = if coin_rng.gen_bool(p2.clamp(0.0, 1.0)) { 1 } else { 2 };
        let phase = if n as f64 > later_budget {
            warnings.push(format!(
                "document {id} ({n} tokens) exceeds the phase 2+3 budget; assigned to phase 2"
            ));
            1
        } else if n as f64 <= deficits[coin] {
            coin
        } else if n as f64 <= deficits[3 - coin] {
            3 - coin
        } else {
            largest_deficit(&deficits, &[1, 2])
        };
        assign(id, n, phase, &mut deficits);
    }

    let mut order: Vec<&(String, u64)> = short;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(2);
    order.shuffle(&mut shuffle_rng);
    for (id, n) in order {
        let phase = largest_deficit(&deficits, &[0, 1, 2]);
        assign(id, *n, phase, &mut deficits);
    }

    Ok(PhasePlan {
        ratios,
        long_threshold: threshold,
        seed,
        total_tokens: total,
        targets,
        phase_token_totals: totals,
        phase_doc_counts: counts,
        long_docs: long.len() as u64,
        warnings,
        assignments,
    })
}

/// Token counts for a batch of documents, computed in parallel.
pub fn token_counts(docs: &[Document], model: &BpeModel) -> Vec<(String, u64)> {
    docs.par_iter()
        .map(|d| (d.id.clone(), model.count_tokens(&d.text)))
        .collect()
}

/// Counts tokens over a document stream in parallel batches.
pub fn count_stream<I>(docs: I, model: &BpeModel) -> Result<Vec<(String, u64)>>
where
    I: IntoIterator<Item = Result<Document>>,
{
    const BATCH: usize = 4096;
    let mut out = Vec::new();
    let mut batch = Vec::with_capacity(BATCH);
    for doc in docs {
        batch.push(doc?);
        if batch.len() == BATCH {
            out.extend(token_counts(&batch, model));
            batch.clear();
        }
    }
    out.extend(token_counts(&batch, model));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PROSE_PHASE_RATIOS;

    fn cfg(ratios: [f64; 3]) -> PipelineConfig {
        PipelineConfig {
            phase_ratios: ratios,
            ..PipelineConfig::default()
        }
    }

    fn uniform(n: usize, tokens: u64) -> Vec<(String, u64)> {
        (0..n).map(|i| (format!("d{i:03}"), tokens)).collect()
    }

    #[test]
    fn ten_equal_docs() {
        let plan = partition_phases(uniform(10, 100), &cfg([0.848, 0.126, 0.026])).unwrap();
        assert_eq!(plan.targets[0], 848.0);
        assert_eq!(plan.phase_token_totals, [900, 100, 0]);
        assert_eq!(plan.assignments.len(), 10);
    }

    #[test]
    fn degenerate_ratios() {
        let plan = partition_phases(uniform(20, 50), &cfg([1.0, 0.0, 0.0])).unwrap();
        assert_eq!(plan.phase_doc_counts, [20, 0, 0]);
    }

    #[test]
    fn long_doc_never_in_phase_one() {
        let mut docs = uniform(100, 100);
        docs.push(("long".into(), 2000));
        for seed in 0..20 {
            let plan = partition_with_seed(docs.clone(), &PipelineConfig::default(), seed).unwrap();
            assert_ne!(plan.phase_of("long"), Some(1));
        }
    }

    #[test]
    fn threshold_is_strict() {
        let mut docs = uniform(100, 100);
        docs.push(("edge".into(), 1024));
        docs.push(("over".into(), 1025));
        let plan = partition_phases(docs, &PipelineConfig::default()).unwrap();
        assert_eq!(plan.long_docs, 1);
        assert_ne!(plan.phase_of("over"), Some(1));
    }

    #[test]
    fn oversized_long_doc_warns() {
        let mut docs = uniform(10, 100);
        docs.push(("huge".into(), 5000));
        let plan = partition_phases(docs, &PipelineConfig::default()).unwrap();
        assert_eq!(plan.phase_of("huge"), Some(2));
        assert!(plan.warnings.iter().any(|w| w.contains("huge")));
        assert_eq!(plan.phase_doc_counts[0], 10);
    }

    #[test]
    fn shares_with_many_short_docs() {
        let docs: Vec<_> = (0..5000)
            .map(|i| (format!("d{i}"), 50 + (i as u64 * 37) % 400))
            .collect();
        for ratios in [PipelineConfig::default().phase_ratios, PROSE_PHASE_RATIOS] {
            let plan = partition_phases(docs.clone(), &cfg(ratios)).unwrap();
            for i in 0..3 {
                assert!(
                    (plan.phase_token_totals[i] as f64 - plan.targets[i]).abs() <= 449.0,
                    "{plan:?}"
                );
            }
        }
    }

    #[test]
    fn input_order_does_not_matter() {
        let docs: Vec<_> = (0..300).map(|i| (format!("d{i}"), 10 + i as u64 * 7)).collect();
        let mut rev = docs.clone();
        rev.reverse();
        let c = PipelineConfig::default();
        assert_eq!(partition_phases(docs, &c).unwrap(), partition_phases(rev, &c).unwrap());
    }

    #[test]
    fn errors() {
        let none: Vec<(String, u64)> = Vec::new();
        assert!(partition_phases(none, &PipelineConfig::default()).is_err());
        let dup = vec![("a".to_string(), 1), ("a".to_string(), 2)];
        assert!(matches!(
            partition_phases(dup, &PipelineConfig::default()),
            Err(ForgeError::DuplicateId(_))
        ));
    }

    #[test]
    fn write_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let plan = partition_phases(uniform(30, 90), &PipelineConfig::default()).unwrap();
        plan.write(dir.path()).unwrap();
        assert_eq!(PhasePlan::load(dir.path()).unwrap(), plan);
    }
}
