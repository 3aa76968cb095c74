//! MinHash signatures over the universal affine family modulo 2^61 - 1.

use serde::{Deserialize, Serialize};

use super::shingle::ShingleSet;
use crate::config::PipelineConfig;
use crate::error::{ForgeError, Result};
use crate::hash::{counter_stream, hash_bytes};

/// The Mersenne prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub components: Vec<u64>,
    pub bands: Vec<u64>,
}

/// `(a * x + b) mod p` for `a, x, b < p`, using 2^64 = 8 (mod p).
#[cfg(test)]
fn affine_mod(a: u64, x: u64, b: u64) -> u64 {
    let prod = a as u128 * x as u128;
    let (lo, hi) = (prod as u64, (prod >> 64) as u64);
    // hi < 2^58, so every term is below 2^61 and the sum below 2^63.
    let s = (lo & MERSENNE_61) + (lo >> 61) + (hi << 3) + b;
    let y = (s & MERSENNE_61) + (s >> 61);
    if y >= MERSENNE_61 {
        y - MERSENNE_61
    } else {
        y
    }
}

const LOW32: u64 = 0xffff_ffff;

/// Same value as [`affine_mod`], built from 32-bit partial products so the
/// loop over shingles vectorizes. `a_lo`/`a_hi` are the low 32 and high 29
/// bits of `a`.
#[inline(always)]
fn affine_mod_split(a_lo: u64, a_hi: u64, x: u64, b: u64) -> u64 {
    let (x_lo, x_hi) = (x & LOW32, x >> 32);
    // None of these overflow; wrapping ops keep overflow checks out of the
    // loop so it vectorizes in every build profile.
    let ll = a_lo.wrapping_mul(x_lo);
    let mid = a_hi.wrapping_mul(x_lo).wrapping_add(a_lo.wrapping_mul(x_hi)); // < 2^62
    let hh = a_hi.wrapping_mul(x_hi); // < 2^58
                                      // mid * 2^32 = (mid >> 29) * 2^61 + (mid mod 2^29) * 2^32, and 2^61 = 1 (mod p).
    let s = (ll & MERSENNE_61)
        .wrapping_add(ll >> 61)
        .wrapping_add(mid >> 29)
        .wrapping_add((mid & ((1 << 29) - 1)) << 32)
        .wrapping_add(hh << 3)
        .wrapping_add(b);
    let y = (s & MERSENNE_61).wrapping_add(s >> 61);
    if y >= MERSENNE_61 {
        y.wrapping_sub(MERSENNE_61)
    } else {
        y
    }
}

#[inline(always)]
fn minima(a: &[u64], b: &[u64], xs: &[u64], out: &mut [u64]) {
    for ((m, &a), &b) in out.iter_mut().zip(a).zip(b) {
        let (a_lo, a_hi) = (a & LOW32, a >> 32);
        *m = xs
            .iter()
            .fold(u64::MAX, |m, &x| m.min(affine_mod_split(a_lo, a_hi, x, b)));
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn minima_avx2(a: &[u64], b: &[u64], xs: &[u64], out: &mut [u64]) {
    minima(a, b, xs, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512vl")]
unsafe fn minima_avx512(a: &[u64], b: &[u64], xs: &[u64], out: &mut [u64]) {
    minima(a, b, xs, out)
}

/// `x mod p` for a full 64-bit `x`.
#[inline]
fn reduce64(x: u64) -> u64 {
    let y = (x & MERSENNE_61) + (x >> 61);
    if y >= MERSENNE_61 {
        y - MERSENNE_61
    } else {
        y
    }
}

/// The hash family `h_j(x) = (a_j * x + b_j) mod p` plus the band layout.
#[derive(Debug, Clone)]
pub struct MinHasher {
    a: Vec<u64>,
    b: Vec<u64>,
    rows: usize,
    bands: usize,
}

impl MinHasher {
    pub fn new(num_hashes: usize, num_bands: usize, seed: u64) -> Result<Self> {
        if num_hashes == 0 || num_bands == 0 || !num_hashes.is_multiple_of(num_bands) {
            return Err(ForgeError::Config(format!(
                "hashes not divisible by bands ({num_hashes} / {num_bands})"
            )));
        }
        let mut a = Vec::with_capacity(num_hashes);
        let mut b = Vec::with_capacity(num_hashes);
        for j in 0..num_hashes as u64 {
            a.push(1 + counter_stream(seed, 2 * j) % (MERSENNE_61 - 1));
            b.push(counter_stream(seed, 2 * j + 1) % MERSENNE_61);
        }
        Ok(Self {
            a,
            b,
            rows: num_hashes / num_bands,
            bands: num_bands,
        })
    }

    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        Self::new(cfg.minhash_num_hashes, cfg.minhash_num_bands, cfg.master_seed)
    }

    pub fn num_hashes(&self) -> usize {
        self.a.len()
    }

    pub fn num_bands(&self) -> usize {
        self.bands
    }

    /// Component-wise minima of every hash function over `shingles`.
    pub fn components(&self, shingles: &[u64]) -> Vec<u64> {
        let xs: Vec<u64> = shingles.iter().map(|&s| reduce64(s)).collect();
        let mut mins = vec![u64::MAX; self.a.len()];
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx512f") && std::arch::is_x86_feature_detected!("avx512vl") {
                // SAFETY: the required CPU features were detected at runtime.
                unsafe { minima_avx512(&self.a, &self.b, &xs, &mut mins) };
                return mins;
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: as above.
                unsafe { minima_avx2(&self.a, &self.b, &xs, &mut mins) };
                return mins;
            }
        }
        minima(&self.a, &self.b, &xs, &mut mins);
        mins
    }

    /// One 64-bit digest per band of `rows` consecutive components.
    pub fn band_keys(&self, components: &[u64]) -> Vec<u64> {
        let mut buf = Vec::with_capacity(self.rows * 8);
        components
            .chunks(self.rows)
            .enumerate()
            .map(|(k, chunk)| {
                buf.clear();
                for c in chunk {
                    buf.extend_from_slice(&c.to_le_bytes());
                }
                hash_bytes(&buf, k as u64)
            })
            .collect()
    }

    pub fn signature(&self, set: &ShingleSet) -> Result<MinHashSignature> {
        if set.is_empty() {
            return Err(ForgeError::data(format!("empty shingle set for {}", set.doc_id)));
        }
        let components = self.components(&set.shingles);
        let bands = self.band_keys(&components);
        Ok(MinHashSignature {
            doc_id: set.doc_id.clone(),
            components,
            bands,
        })
    }
}

/// Signature of a shingle set under the config's hash family.
pub fn minhash_signature(set: &ShingleSet, cfg: &PipelineConfig) -> Result<MinHashSignature> {
    MinHasher::from_config(cfg)?.signature(set)
}

/// Fraction of positions where two signatures agree.
pub fn matching_fraction(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len(), "signatures of different length");
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_reduction() {
        let p = MERSENNE_61;
        let edge = [0u64, 1, 2, 7, 8, p / 2, p - 2, p - 1];
        for &a in &edge {
            for &x in &edge {
                for &b in &edge {
                    let want = (a as u128 * x as u128 + b as u128) % p as u128;
                    assert_eq!(affine_mod(a, x, b) as u128, want, "a={a} x={x} b={b}");
                    assert_eq!(affine_mod_split(a & LOW32, a >> 32, x, b) as u128, want);
                }
            }
        }
        let mut z = 0x1234_5678u64;
        for _ in 0..10_000 {
            let mut next = || {
                z = crate::hash::mix64(z.wrapping_add(0x9e37_79b9_7f4a_7c15));
                z % p
            };
            let (a, x, b) = (next(), next(), next());
            assert_eq!(
                affine_mod(a, x, b) as u128,
                (a as u128 * x as u128 + b as u128) % p as u128
            );
            assert_eq!(affine_mod_split(a & LOW32, a >> 32, x, b), affine_mod(a, x, b));
        }
        for x in [0u64, MERSENNE_61, MERSENNE_61 + 5, u64::MAX] {
            assert_eq!(reduce64(x), x % MERSENNE_61);
        }
    }

    #[test]
    fn dispatch_matches_scalar() {
        let h = MinHasher::new(112, 14, 5).unwrap();
        let shingles: Vec<u64> = (0..301u64).map(crate::hash::mix64).collect();
        let xs: Vec<u64> = shingles.iter().map(|&s| reduce64(s)).collect();
        let want: Vec<u64> = (0..112)
            .map(|j| xs.iter().map(|&x| affine_mod(h.a[j], x, h.b[j])).min().unwrap())
            .collect();
        assert_eq!(h.components(&shingles), want);
        let mut scalar = vec![0; 112];
        minima(&h.a, &h.b, &xs, &mut scalar);
        assert_eq!(scalar, want);
    }

    #[test]
    fn layout_matches_config() {
        let h = MinHasher::from_config(&PipelineConfig::default()).unwrap();
        let set = ShingleSet {
            doc_id: "d".into(),
            shingles: vec![1, 2, 3],
        };
        let sig = h.signature(&set).unwrap();
        assert_eq!(sig.components.len(), 112);
        assert_eq!(sig.bands.len(), 14);
        assert!(sig.components.iter().all(|&c| c < MERSENNE_61));
    }

    #[test]
    fn identical_sets_identical_signatures() {
        let cfg = PipelineConfig::default();
        let set = ShingleSet {
            doc_id: "d".into(),
            shingles: vec![10, 20, 30, 40],
        };
        assert_eq!(
            minhash_signature(&set, &cfg).unwrap(),
            minhash_signature(&set, &cfg).unwrap()
        );
    }

    #[test]
    fn empty_set_errors() {
        let set = ShingleSet {
            doc_id: "d".into(),
            shingles: vec![],
        };
        assert!(minhash_signature(&set, &PipelineConfig::default()).is_err());
    }

    #[test]
    fn bad_band_layout() {
        assert!(MinHasher::new(112, 13, 0).is_err());
    }

    #[test]
    fn signature_json_shape() {
        let sig = MinHashSignature {
            doc_id: "x".into(),
            components: vec![1, 2],
            bands: vec![3],
        };
        assert_eq!(
            serde_json::to_string(&sig).unwrap(),
            r#"{"id":"x","components":[1,2],"bands":[3]}"#
        );
    }
}
