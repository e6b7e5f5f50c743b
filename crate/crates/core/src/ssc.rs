//! Support-set coding baseline.
//!
//! The K largest-magnitude entries of x~ pick the support, which is sent as
//! its lexicographic rank on `ceil(log2 C(N,K))` bits. The coefficients on
//! that support, ordered by position, are scalar-quantized with Gaussian
//! Lloyd-Max codebooks sharing the remaining bits.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{bsc, MAX_RATE};
use crate::combinatorics::{binomial, rank, unrank};
use crate::error::{config, Error, Result};
use crate::estimators::{lloyd_scalar, ScalarCodebook};
use crate::rng::{stream, Purpose};

/// Largest rate of a single coefficient quantizer.
pub const MAX_COEFF_BITS: u32 = 16;
/// Seed of the stream that trains the shared scalar codebooks.
const SCALAR_SEED: u64 = 0x5c5c;

/// Indices produced by the encoder, or seen by the decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SscIndices {
    pub support: u64,
    pub levels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SscDecoded {
    pub x: Vec<f64>,
    /// The support rank was out of range and got clamped.
    pub clamped: bool,
}

/// Serializable description of a codec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SscManifest {
    pub n: usize,
    pub k: usize,
    pub rate_bits: u32,
    pub support_bits: u32,
    pub coeff_bits: Vec<u32>,
    pub levels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SscCodec {
    n: usize,
    k: usize,
    rate_bits: u32,
    supports: u64,
    support_bits: u32,
    codebooks: Vec<ScalarCodebook>,
}

/// Bits of the support index and of each coefficient for `(n, k, rate)`.
pub fn bit_split(n: usize, k: usize, rate: u32) -> Result<(u32, Vec<u32>)> {
    if k == 0 || k > n {
        return config(format!("support coding needs 1 <= K <= N, got K = {k}, N = {n}"));
    }
    let supports = binomial(n, k).filter(|&c| c <= 1 << MAX_RATE);
    let Some(supports) = supports else {
        return config(format!("C({n},{k}) is too large to index"));
    };
    let support_bits = u64::BITS - (supports - 1).leading_zeros();
    let Some(coeff_total) = rate.checked_sub(support_bits).filter(|&b| b as usize >= k) else {
        return config(format!(
            "rate {rate} leaves fewer than one bit per coefficient after {support_bits} support bits"
        ));
    };
    let base = coeff_total / k as u32;
    let extra = (coeff_total % k as u32) as usize;
    let bits: Vec<u32> = (0..k).map(|j| base + u32::from(j < extra)).collect();
    if bits[0] > MAX_COEFF_BITS {
        return config(format!("{} bits per coefficient exceeds {MAX_COEFF_BITS}", bits[0]));
    }
    Ok((support_bits, bits))
}

/// Lloyd-Max codebook for a standard Gaussian at `rate` bits, trained once
/// per process on `max(1000 2^rate, 200000)` samples.
pub fn gaussian_codebook(rate: u32) -> Result<ScalarCodebook> {
    static CACHE: OnceLock<Mutex<HashMap<u32, ScalarCodebook>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(cb) = cache.lock().unwrap().get(&rate) {
        return Ok(cb.clone());
    }
    if !(1..=MAX_COEFF_BITS).contains(&rate) {
        return config(format!("scalar rate {rate} outside 1..={MAX_COEFF_BITS}"));
    }
    let count = (1000usize << rate).max(200_000);
    let mut rng = stream(SCALAR_SEED, Purpose::ScalarTraining, rate as u64);
    let samples: Vec<f64> = (0..count).map(|_| rng.sample(StandardNormal)).collect();
    let cb = lloyd_scalar(rate, &samples)?.codebook;
    cache.lock().unwrap().insert(rate, cb.clone());
    Ok(cb)
}

impl SscCodec {
    /// Codec with the shared Gaussian codebooks.
    pub fn new(n: usize, k: usize, rate_bits: u32) -> Result<Self> {
        let (_, bits) = bit_split(n, k, rate_bits)?;
        let codebooks = bits.iter().map(|&b| gaussian_codebook(b)).collect::<Result<_>>()?;
        Self::with_codebooks(n, k, rate_bits, codebooks)
    }

    /// Codec with explicit codebooks; their rates must match [`bit_split`].
    pub fn with_codebooks(n: usize, k: usize, rate_bits: u32, codebooks: Vec<ScalarCodebook>) -> Result<Self> {
        let (support_bits, bits) = bit_split(n, k, rate_bits)?;
        if codebooks.iter().map(ScalarCodebook::rate_bits).ne(bits.iter().copied()) {
            return config(format!("coefficient codebooks must have rates {bits:?}"));
        }
        Ok(Self {
            n,
            k,
            rate_bits,
            supports: binomial(n, k).unwrap_or(u64::MAX),
            support_bits,
            codebooks,
        })
    }

    pub fn from_manifest(m: &SscManifest) -> Result<Self> {
        let codebooks = m
            .levels
            .iter()
            .map(|l| ScalarCodebook::new(l.clone()))
            .collect::<Result<_>>()?;
        let codec = Self::with_codebooks(m.n, m.k, m.rate_bits, codebooks)?;
        if codec.support_bits != m.support_bits || codec.coeff_bits() != m.coeff_bits {
            return config("manifest bit split disagrees with (n, k, rate)");
        }
        Ok(codec)
    }

    pub fn manifest(&self) -> SscManifest {
        SscManifest {
            n: self.n,
            k: self.k,
            rate_bits: self.rate_bits,
            support_bits: self.support_bits,
            coeff_bits: self.coeff_bits(),
            levels: self.codebooks.iter().map(|c| c.levels().to_vec()).collect(),
        }
    }

    pub fn support_bits(&self) -> u32 {
        self.support_bits
    }

    pub fn coeff_bits(&self) -> Vec<u32> {
        self.codebooks.iter().map(ScalarCodebook::rate_bits).collect()
    }

    pub fn rate_bits(&self) -> u32 {
        self.rate_bits
    }

    pub fn encode(&self, x_tilde: &[f64]) -> Result<SscIndices> {
        if x_tilde.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: x_tilde.len(),
            });
        }
        if x_tilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite estimate".into()));
        }
        // stable sort: among equal magnitudes (zeros in particular) the
        // smaller position wins, which also pads short supports
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| x_tilde[b].abs().total_cmp(&x_tilde[a].abs()));
        let mut support = order[..self.k].to_vec();
        support.sort_unstable();
        let levels = support
            .iter()
            .zip(&self.codebooks)
            .map(|(&p, cb)| cb.quantize(x_tilde[p]) as u32)
            .collect();
        Ok(SscIndices {
            support: rank(&support, self.n)?,
            levels,
        })
    }

    pub fn decode(&self, idx: &SscIndices) -> Result<SscDecoded> {
        if idx.levels.len() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                actual: idx.levels.len(),
            });
        }
        let clamped = idx.support >= self.supports;
        let support = unrank(idx.support.min(self.supports - 1), self.n, self.k)?;
        let mut x = vec![0.0; self.n];
        for ((&p, &l), cb) in support.iter().zip(&idx.levels).zip(&self.codebooks) {
            let size = cb.levels().len();
            if l as usize >= size {
                return Err(Error::IndexOutOfRange { index: l as usize, size });
            }
            x[p] = cb.level(l as usize);
        }
        Ok(SscDecoded { x, clamped })
    }

    /// Sends every index over an uncoded BSC with crossover `epsilon`. With
    /// `ideal_support` the support rank bypasses the channel.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        idx: &SscIndices,
        epsilon: f64,
        ideal_support: bool,
        rng: &mut R,
    ) -> Result<SscIndices> {
        let support = if ideal_support {
            idx.support
        } else {
            bsc(self.support_bits, epsilon)?.transmit(idx.support as usize, rng)? as u64
        };
        let levels = idx
            .levels
            .iter()
            .zip(&self.codebooks)
            .map(|(&l, cb)| Ok(bsc(cb.rate_bits(), epsilon)?.transmit(l as usize, rng)? as u32))
            .collect::<Result<_>>()?;
        Ok(SscIndices { support, levels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::subsets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_codebooks(k: usize, bits: &[u32]) -> Vec<ScalarCodebook> {
        (0..k)
            .map(|j| {
                let size = 1usize << bits[j];
                ScalarCodebook::new((0..size).map(|i| i as f64 - (size / 2) as f64).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn bit_budget() {
        assert_eq!(bit_split(12, 2, 15).unwrap(), (7, vec![4, 4]));
        assert_eq!(bit_split(12, 2, 12).unwrap(), (7, vec![3, 2]));
        assert_eq!(bit_split(2, 1, 3).unwrap(), (1, vec![2]));
        assert!(bit_split(8, 1, 3).is_err());
        assert!(bit_split(12, 2, 8).is_err());
        for n in 2..20 {
            for k in 1..=n.min(4) {
                for rate in 1..30 {
                    if let Ok((s, bits)) = bit_split(n, k, rate) {
                        assert!(s + bits.iter().sum::<u32>() <= rate);
                        assert!(bits.iter().all(|&b| b >= 1));
                        assert!((1u64 << s) >= binomial(n, k).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_example() {
        let codec = SscCodec::new(2, 1, 3).unwrap();
        let idx = codec.encode(&[0.5, 0.0]).unwrap();
        assert_eq!(idx.support, 0);
        let levels = gaussian_codebook(2).unwrap();
        let nearest = (0..4)
            .min_by(|&a, &b| (levels.level(a) - 0.5).abs().total_cmp(&(levels.level(b) - 0.5).abs()))
            .unwrap();
        assert_eq!(idx.levels, vec![nearest as u32]);
    }

    #[test]
    fn support_round_trip_is_exhaustive_bijection() {
        let codec = SscCodec::with_codebooks(8, 2, 9, unit_codebooks(2, &[2, 2])).unwrap();
        let mut seen = std::collections::HashSet::new();
        for s in subsets(8, 2) {
            let mut x = vec![0.0; 8];
            x[s[0]] = 1.0;
            x[s[1]] = -2.0;
            let idx = codec.encode(&x).unwrap();
            assert!(seen.insert(idx.support));
            let out = codec.decode(&idx).unwrap();
            assert!(!out.clamped);
            assert_eq!(out.x, x);
        }
        assert_eq!(seen.len(), 28);
    }

    #[test]
    fn short_supports_pad_with_low_positions() {
        let codec = SscCodec::with_codebooks(5, 2, 6, unit_codebooks(2, &[1, 1])).unwrap();
        let idx = codec.encode(&[0.0, 0.0, 0.0, -1.0, 0.0]).unwrap();
        assert_eq!(unrank(idx.support, 5, 2).unwrap(), vec![0, 3]);
        let out = codec.decode(&idx).unwrap();
        assert_eq!(out.x[3], -1.0);
    }

    #[test]
    fn out_of_range_support_is_clamped_and_flagged() {
        let codec = SscCodec::with_codebooks(12, 2, 9, unit_codebooks(2, &[1, 1])).unwrap();
        let out = codec.decode(&SscIndices { support: 100, levels: vec![0, 1] }).unwrap();
        assert!(out.clamped);
        assert_eq!(out.x[10], -1.0);
        assert_eq!(out.x[11], 0.0);
        assert!(codec.decode(&SscIndices { support: 0, levels: vec![0, 2] }).is_err());
        assert!(codec.decode(&SscIndices { support: 0, levels: vec![0] }).is_err());
    }

    #[test]
    fn coefficient_distortion_matches_lloyd_max() {
        // Lloyd-Max 16-level Gaussian quantizer MSE from Max's table
        const MAX_4BIT: f64 = 0.009497;
        let codec = SscCodec::new(12, 2, 15).unwrap();
        assert_eq!(codec.coeff_bits(), vec![4, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 100_000;
        let mut errs = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut x = vec![0.0; 12];
            let a = rng.random_range(0..12);
            let b = (a + rng.random_range(1..12)) % 12;
            x[a] = rng.sample(StandardNormal);
            x[b] = rng.sample(StandardNormal);
            let out = codec.decode(&codec.encode(&x).unwrap()).unwrap();
            let e: f64 = x.iter().zip(&out.x).map(|(u, v)| (u - v) * (u - v)).sum();
            errs.push(e / 2.0);
        }
        let mean = errs.iter().sum::<f64>() / trials as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let sigma = (var / trials as f64).sqrt();
        assert!((mean - MAX_4BIT).abs() < 3.0 * sigma + 2e-5, "{mean} vs {MAX_4BIT} (sigma {sigma})");
    }

    #[test]
    fn permuting_the_support_permutes_the_decoded_support() {
        let codec = SscCodec::new(6, 2, 9).unwrap();
        let x = [0.0, 0.8, 0.0, 0.0, -1.3, 0.1];
        let perm = [3, 5, 0, 1, 2, 4];
        let mut px = [0.0; 6];
        for (i, &p) in perm.iter().enumerate() {
            px[p] = x[i];
        }
        let out = codec.decode(&codec.encode(&x).unwrap()).unwrap().x;
        let pout = codec.decode(&codec.encode(&px).unwrap()).unwrap().x;
        let support = |v: &[f64]| -> Vec<usize> { (0..6).filter(|&i| v[i] != 0.0).collect() };
        let mut mapped: Vec<usize> = support(&out).iter().map(|&i| perm[i]).collect();
        mapped.sort_unstable();
        assert_eq!(mapped, support(&pout));
    }

    #[test]
    fn ideal_support_bypasses_the_channel() {
        let codec = SscCodec::new(12, 2, 15).unwrap();
        let idx = codec.encode(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.4, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r = codec.transmit(&idx, 0.5, true, &mut rng).unwrap();
            assert_eq!(r.support, idx.support);
        }
        let r = codec.transmit(&idx, 0.0, false, &mut rng).unwrap();
        assert_eq!(r, idx);
    }

    #[test]
    fn manifest_round_trip() {
        let codec = SscCodec::new(12, 2, 12).unwrap();
        let m = codec.manifest();
        assert_eq!(SscCodec::from_manifest(&m).unwrap(), codec);
        let mut bad = m.clone();
        bad.support_bits = 6;
        assert!(SscCodec::from_manifest(&bad).is_err());
    }
}
