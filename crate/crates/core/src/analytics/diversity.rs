//! Type-token ratio and HD-D.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::error::{ForgeError, Result};

pub fn ttr<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(ForgeError::data("no tokens"));
    }
    let types: rustc_hash::FxHashSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
    Ok(types.len() as f64 / tokens.len() as f64)
}

/// Maps each type frequency to the number of types with that frequency.
pub fn frequency_spectrum<S: AsRef<str>>(tokens: &[S]) -> BTreeMap<u64, u64> {
    let mut freqs: FxHashMap<&str, u64> = FxHashMap::default();
    for t in tokens {
        *freqs.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut spectrum = BTreeMap::new();
    for f in freqs.into_values() {
        *spectrum.entry(f).or_insert(0) += 1;
    }
    spectrum
}

/// Probability that a sample of `s` tokens drawn without replacement from
/// `n` misses every one of the `f` occurrences of a type.
fn miss_probability(n: u64, f: u64, s: u64) -> f64 {
    if n - f < s {
        return 0.0;
    }
    (0..s).map(|i| (n - f - i) as f64 / (n - i) as f64).product()
}

/// Expected share of a random `sample_size`-token sample made up of distinct
/// types. Depends only on the frequency spectrum.
pub fn hdd<S: AsRef<str>>(tokens: &[S], sample_size: usize) -> Result<f64> {
    hdd_from_spectrum(&frequency_spectrum(tokens), tokens.len() as u64, sample_size)
}

pub fn hdd_from_spectrum(spectrum: &BTreeMap<u64, u64>, n: u64, sample_size: usize) -> Result<f64> {
    let s = sample_size as u64;
    if s == 0 {
        return Err(ForgeError::Config("HD-D sample size must be at least 1".into()));
    }
    if n < s {
        return Err(ForgeError::data("text shorter than HD-D sample"));
    }
    let mut total = 0.0;
    for (&f, &count) in spectrum {
        let per_type = if f == 1 {
            // A singleton is drawn with probability s/n, contributing 1/n.
            count as f64 / n as f64
        } else {
            count as f64 * (1.0 - miss_probability(n, f, s)) / s as f64
        };
        total += per_type;
    }
    Ok(total)
}
