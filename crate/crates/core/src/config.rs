//! Pipeline configuration.
//!
//! Every numeric threshold used by the curation stages lives in
//! [`PipelineConfig`]. Defaults reproduce the reference Portuguese build;
//! a JSON config file only needs to name the fields it overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ForgeError, Result};

/// Phase shares realized by the reference build: 195B, 29B and 6B tokens.
pub const TABLE_PHASE_RATIOS: [f64; 3] = [195.0 / 230.0, 29.0 / 230.0, 6.0 / 230.0];

/// Rounded phase shares (85% / 12.5% / 2.5%).
pub const PROSE_PHASE_RATIOS: [f64; 3] = [0.85, 0.125, 0.025];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Label a document must receive to survive language filtering.
    pub lang_label: String,
    /// Minimum identifier confidence; documents at exactly this value are kept.
    pub lang_threshold: f64,
    /// Character n-gram order of the built-in identifier.
    pub ngram_order: usize,

    pub minhash_num_hashes: usize,
    pub minhash_num_bands: usize,
    /// Words per shingle.
    pub shingle_size: usize,
    /// Confirm LSH candidates with exact shingle Jaccard before linking.
    pub dedup_verify: bool,
    pub dedup_verify_threshold: f64,

    pub min_words_per_line: usize,
    pub banned_substrings: Vec<String>,
    pub banned_case_insensitive: bool,
    /// Characters that count as line-final punctuation.
    pub terminal_punctuation: String,
    pub punct_line_ratio_min: f64,
    pub short_line_ratio_max: f64,
    pub short_line_char_limit: usize,
    pub dup_line_char_ratio_max: f64,

    /// Token shares of (pre-training, context extension, lr decay).
    pub phase_ratios: [f64; 3],
    /// Documents with strictly more tokens than this never enter phase 1.
    pub long_doc_token_threshold: u64,

    pub hdd_sample_size: usize,
    /// Size of the high-frequency reference band for lexical sophistication.
    pub sophistication_top_k: usize,

    pub target_vocab: usize,
    pub max_docs_per_shard: usize,
    pub master_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lang_label: "por".to_string(),
            lang_threshold: 0.799,
            ngram_order: 3,
            minhash_num_hashes: 112,
            minhash_num_bands: 14,
            shingle_size: 5,
            dedup_verify: false,
            dedup_verify_threshold: 0.7,
            min_words_per_line: 3,
            banned_substrings: vec![
                "javascript".to_string(),
                "cookies".to_string(),
                "lorem ipsum".to_string(),
            ],
            banned_case_insensitive: true,
            terminal_punctuation: ".?!\"'".to_string(),
            punct_line_ratio_min: 0.12,
            short_line_ratio_max: 0.67,
            short_line_char_limit: 30,
            dup_line_char_ratio_max: 0.10,
            phase_ratios: TABLE_PHASE_RATIOS,
            long_doc_token_threshold: 1024,
            hdd_sample_size: 42,
            sophistication_top_k: 2000,
            target_vocab: 50_368,
            max_docs_per_shard: 100_000,
            master_seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Defaults with the rounded 85 / 12.5 / 2.5 phase shares.
    pub fn prose_phase_preset() -> Self {
        Self {
            phase_ratios: PROSE_PHASE_RATIOS,
            ..Self::default()
        }
    }

    /// Reads a JSON config file; absent fields take their defaults.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| ForgeError::io(path, e))?;
        Self::from_json_slice(&bytes)
    }

    /// Parses a JSON document. An empty (or whitespace-only) input means all defaults.
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Ok(Self::default());
        }
        let cfg: Self =
            serde_json::from_slice(bytes).map_err(|e| ForgeError::Config(format!("cannot parse config: {e}")))?;
        cfg.validate()
    }

    /// Returns the config unchanged when every invariant holds.
    pub fn validate(self) -> Result<Self> {
        let err = |msg: String| Err(ForgeError::Config(msg));

        if self.lang_label.is_empty() {
            return err("lang_label is empty".into());
        }
        for (name, v) in [
            ("lang_threshold", self.lang_threshold),
            ("dedup_verify_threshold", self.dedup_verify_threshold),
            ("punct_line_ratio_min", self.punct_line_ratio_min),
            ("short_line_ratio_max", self.short_line_ratio_max),
            ("dup_line_char_ratio_max", self.dup_line_char_ratio_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if self.ngram_order == 0 {
            return err("ngram_order must be positive".into());
        }
        if self.minhash_num_hashes == 0 || self.minhash_num_bands == 0 {
            return err("minhash_num_hashes and minhash_num_bands must be positive".into());
        }
        if !self.minhash_num_hashes.is_multiple_of(self.minhash_num_bands) {
            return err(format!(
                "hashes not divisible by bands ({} % {} != 0)",
                self.minhash_num_hashes, self.minhash_num_bands
            ));
        }
        if self.shingle_size == 0 {
            return err("shingle_size must be positive".into());
        }
        if self.terminal_punctuation.is_empty() {
            return err("terminal_punctuation is empty".into());
        }
        if self.banned_substrings.iter().any(String::is_empty) {
            return err("banned_substrings contains an empty string".into());
        }
        if self.phase_ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return err(format!(
                "phase_ratios {:?} has a value outside [0, 1]",
                self.phase_ratios
            ));
        }
        let sum: f64 = self.phase_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return err(format!("phase ratios sum ≠ 1 (sum = {sum})"));
        }
        if self.hdd_sample_size == 0 {
            return err("hdd_sample_size must be at least 1".into());
        }
        if self.target_vocab < 257 {
            return err(format!("target_vocab {} is below 257", self.target_vocab));
        }
        if self.max_docs_per_shard == 0 {
            return err("max_docs_per_shard must be at least 1".into());
        }
        Ok(self)
    }

    pub fn rows_per_band(&self) -> usize {
        self.minhash_num_hashes / self.minhash_num_bands
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
