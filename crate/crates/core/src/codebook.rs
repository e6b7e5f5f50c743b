//! Codebooks and the channel-aware nearest-codevector search.
//!
//! The encoder never stores regions. For a codebook `c_j` and channel
//! `P(j|i)` it keeps `A_i = sum_j P(j|i) |c_j|^2` and the expected
//! codevector `e_i = sum_j P(j|i) c_j`; the score of index `i` for a
//! target `t` is `A_i - 2 t.e_i`, and `|t|^2 + score` is the expected
//! squared error of sending `i`.

use serde::{Deserialize, Serialize};

use crate::channel::Dmc;
use crate::error::{config, Error, Result};
use crate::kernel::{self, LANES, TILE};

/// Space the codevectors live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// Sparse-source space, dimension N.
    Source,
    /// Measurement space, dimension M.
    Measurement,
}

/// `2^R` codevectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    domain: Domain,
    dim: usize,
    vectors: Vec<f64>,
}

impl Codebook {
    pub fn new(domain: Domain, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return config("codevector dimension must be positive");
        }
        if !vectors.len().is_multiple_of(dim) || !(vectors.len() / dim).is_power_of_two() {
            return config(format!(
                "{} values do not form a power-of-two number of {dim}-vectors",
                vectors.len()
            ));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("codebook contains non-finite values".into()));
        }
        Ok(Self { domain, dim, vectors })
    }

    /// Every codevector set to `v`.
    pub fn constant(domain: Domain, rate_bits: u32, v: &[f64]) -> Result<Self> {
        let size = 1usize << rate_bits;
        Self::new(domain, v.len(), v.repeat(size))
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn rate_bits(&self) -> u32 {
        self.size().trailing_zeros()
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vectors
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.vectors
    }
}

/// Samples per encoder block.
const SAMPLE_BLOCK: usize = 256;
/// Candidates per encoder block, a multiple of `LANES`.
const CANDIDATE_BLOCK: usize = 1024;
/// Rows with at most this many nonzeros skip their zero coordinates.
const MAX_SPARSE: usize = 3;

/// Precomputed per-index constants of the channel-optimized encoder.
#[derive(Debug, Clone)]
pub struct EncoderTables {
    dim: usize,
    base: Vec<f64>,
    expected: Vec<f64>,
    // A_i padded to a multiple of LANES with +inf, which never wins
    padded_base: Vec<f64>,
    // e in chunk-major order: for each chunk of LANES candidates, `dim`
    // runs of LANES values, one per coordinate
    chunked: Vec<f64>,
    // e coordinate-major, `padded` values per coordinate
    columns: Vec<f64>,
}

impl EncoderTables {
    pub fn new(cb: &Codebook, dmc: &Dmc) -> Result<Self> {
        if cb.size() != dmc.size() {
            return Err(Error::Dimension {
                expected: dmc.size(),
                actual: cb.size(),
            });
        }
        let size = cb.size();
        let dim = cb.dim();
        let energy: Vec<f64> = (0..size)
            .map(|j| cb.vector(j).iter().map(|v| v * v).sum())
            .collect();
        let base = dmc.expect_given_input(&energy, 1);
        let expected = dmc.expect_given_input(cb.as_slice(), dim);
        let padded = size.next_multiple_of(LANES);
        let mut padded_base = base.clone();
        padded_base.resize(padded, f64::INFINITY);
        let mut chunked = vec![0.0; padded * dim];
        let mut columns = vec![0.0; padded * dim];
        for i in 0..size {
            let (chunk, lane) = (i / LANES, i % LANES);
            for k in 0..dim {
                chunked[(chunk * dim + k) * LANES + lane] = expected[i * dim + k];
                columns[k * padded + i] = expected[i * dim + k];
            }
        }
        Ok(Self {
            dim,
            base,
            expected,
            padded_base,
            chunked,
            columns,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.base.len()
    }

    /// `A_i`.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// `e_i = sum_j P(j|i) c_j`.
    pub fn expected(&self, i: usize) -> &[f64] {
        &self.expected[i * self.dim..(i + 1) * self.dim]
    }

    /// Arithmetic operations per sample in the score loop: one
    /// multiply-add per coordinate plus the base term, per candidate.
    pub fn ops_per_sample(&self) -> u64 {
        (2 * self.dim as u64 + 1) * self.size() as u64
    }

    /// Index minimizing the score for each row of `targets` (row-major,
    /// `dim` columns), plus the minimal score. Ties go to the lowest index.
    ///
    /// The score of index `i` is accumulated as `A_i + sum_k (-2 t_k) e_ik`
    /// in coordinate order. Sparse rows skip zero coordinates, which adds
    /// only signed zeros to the sum, so every path computes the same
    /// values and the result never depends on batching.
    pub fn encode_batch(&self, targets: &[f64]) -> Result<(Vec<u32>, Vec<f64>)> {
        let dim = self.dim;
        if !targets.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: targets.len() % dim,
            });
        }
        let n = targets.len() / dim;
        let padded = self.padded_base.len();
        let mut index = vec![0u32; n];
        let mut best = vec![f64::INFINITY; n];
        let mut sparse: Vec<(usize, Vec<(usize, f64)>)> = Vec::with_capacity(SAMPLE_BLOCK);
        let mut dense: Vec<usize> = Vec::with_capacity(SAMPLE_BLOCK);
        let mut tile_coefs: Vec<[f64; TILE]> = vec![[0.0; TILE]; dim];
        let mut scratch = vec![0.0; TILE * CANDIDATE_BLOCK];
        let mut terms: Vec<(&[f64], f64)> = Vec::with_capacity(MAX_SPARSE);
        for start in (0..n).step_by(SAMPLE_BLOCK) {
            sparse.clear();
            dense.clear();
            for r in start..n.min(start + SAMPLE_BLOCK) {
                let nz: Vec<(usize, f64)> = targets[r * dim..(r + 1) * dim]
                    .iter()
                    .enumerate()
                    .filter(|(_, &t)| t != 0.0)
                    .map(|(k, &t)| (k, -2.0 * t))
                    .collect();
                if nz.len() <= MAX_SPARSE {
                    sparse.push((r, nz));
                } else {
                    dense.push(r);
                }
            }
            for c0 in (0..padded).step_by(CANDIDATE_BLOCK) {
                let c1 = padded.min(c0 + CANDIDATE_BLOCK);
                let base = &self.padded_base[c0..c1];
                let chunked = &self.chunked[c0 * dim..c1 * dim];
                for (r, nz) in &sparse {
                    terms.clear();
                    terms.extend(nz.iter().map(|&(k, a)| (&self.columns[k * padded + c0..k * padded + c1], a)));
                    let (i, v) = kernel::sparse_argmin(base, &terms);
                    if v < best[*r] {
                        (index[*r], best[*r]) = ((c0 + i) as u32, v);
                    }
                }
                for group in dense.chunks(TILE) {
                    for (k, tc) in tile_coefs.iter_mut().enumerate() {
                        for (s, c) in tc.iter_mut().enumerate() {
                            // short groups repeat their last row
                            let r = group[s.min(group.len() - 1)];
                            *c = -2.0 * targets[r * dim + k];
                        }
                    }
                    let width = c1 - c0;
                    kernel::tile_scores(base, chunked, dim, &tile_coefs, &mut scratch);
                    for (s, &r) in group.iter().enumerate() {
                        let (i, v) = kernel::argmin(&scratch[s * width..(s + 1) * width]);
                        if v < best[r] {
                            (index[r], best[r]) = ((c0 + i) as u32, v);
                        }
                    }
                }
            }
        }
        if best.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("encoder produced a non-finite score".into()));
        }
        Ok((index, best))
    }

    /// Single-target form of [`encode_batch`](Self::encode_batch).
    pub fn encode(&self, target: &[f64]) -> Result<usize> {
        if target.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: target.len(),
            });
        }
        Ok(self.encode_batch(target)?.0[0] as usize)
    }

    /// All scores for one target by a plain loop, with the number of
    /// arithmetic operations it performed.
    pub fn scores_counted(&self, target: &[f64]) -> (Vec<f64>, u64) {
        let mut ops = 0u64;
        let scores = (0..self.size())
            .map(|i| {
                let mut acc = self.base[i];
                ops += 1;
                for (t, e) in target.iter().zip(self.expected(i)) {
                    acc += -2.0 * t * e;
                    ops += 2;
                }
                acc
            })
            .collect();
        (scores, ops)
    }
}

/// Row-major squared norms.
pub(crate) fn row_energies(values: &[f64], dim: usize) -> Vec<f64> {
    values
        .chunks_exact(dim)
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}
