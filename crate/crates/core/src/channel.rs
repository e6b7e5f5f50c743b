//! Discrete memoryless channels over index alphabets of size 2^R.
//!
//! Indices map to R-bit words by natural binary labelling. A BSC is kept in
//! factored form: its transition matrix is the R-fold Kronecker power of
//! `[[1-e, e], [e, 1-e]]`, so channel expectations cost `R 2^R` per
//! coordinate instead of `4^R`, and a single use flips each bit
//! independently.

use rand::Rng;

use crate::error::{config, Error, Result};

/// Largest alphabet accepted for an explicit transition matrix.
pub const MAX_DENSE_RATE: u32 = 12;
/// Largest rate accepted for any channel.
pub const MAX_RATE: u32 = 30;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Bsc { epsilon: f64 },
    Dense { p: Vec<f64>, cdf: Vec<f64> },
}

/// Discrete memoryless channel with `P(j|i)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    rate_bits: u32,
    kind: Kind,
}

/// Binary symmetric channel acting on R-bit indices.
pub fn bsc(rate_bits: u32, epsilon: f64) -> Result<Dmc> {
    if rate_bits > MAX_RATE {
        return config(format!("rate {rate_bits} exceeds {MAX_RATE}"));
    }
    if !(0.0..=0.5).contains(&epsilon) {
        return config(format!("crossover probability {epsilon} outside [0, 0.5]"));
    }
    Ok(Dmc {
        rate_bits,
        kind: Kind::Bsc { epsilon },
    })
}

/// BSC capacity in bits per use, `1 - H2(e)`.
pub fn bsc_capacity(epsilon: f64) -> f64 {
    fn xlog2x(v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else {
            v * v.log2()
        }
    }
    1.0 + xlog2x(epsilon) + xlog2x(1.0 - epsilon)
}

impl Dmc {
    /// Noiseless channel.
    pub fn identity(rate_bits: u32) -> Result<Self> {
        bsc(rate_bits, 0.0)
    }

    /// Channel from an explicit row-stochastic matrix, `p[i * size + j] = P(j|i)`.
    pub fn from_matrix(rate_bits: u32, p: Vec<f64>) -> Result<Self> {
        if rate_bits > MAX_DENSE_RATE {
            return config(format!("dense channels are limited to rate {MAX_DENSE_RATE}"));
        }
        let size = 1usize << rate_bits;
        if p.len() != size * size {
            return Err(Error::Dimension {
                expected: size * size,
                actual: p.len(),
            });
        }
        let mut cdf = Vec::with_capacity(p.len());
        for (i, row) in p.chunks(size).enumerate() {
            if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return config(format!("row {i} has a negative or non-finite entry"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return config(format!("row {i} sums to {total}"));
            }
            let mut acc = 0.0;
            for &v in row {
                acc += v;
                cdf.push(acc);
            }
            // inverse-CDF sampling must never run off the end of a row
            *cdf.last_mut().unwrap() = f64::INFINITY;
        }
        Ok(Self {
            rate_bits,
            kind: Kind::Dense { p, cdf },
        })
    }

    pub fn rate_bits(&self) -> u32 {
        self.rate_bits
    }

    pub fn size(&self) -> usize {
        1usize << self.rate_bits
    }

    /// Crossover probability for a BSC, `None` for an explicit matrix.
    pub fn epsilon(&self) -> Option<f64> {
        match self.kind {
            Kind::Bsc { epsilon } => Some(epsilon),
            Kind::Dense { .. } => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match &self.kind {
            Kind::Bsc { epsilon } => *epsilon == 0.0,
            Kind::Dense { p, .. } => {
                let size = self.size();
                (0..size).all(|i| p[i * size + i] == 1.0)
            }
        }
    }

    /// `P(j|i)`.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            Kind::Bsc { epsilon } => {
                let flips = ((i ^ j) as u64).count_ones() as i32;
                epsilon.powi(flips) * (1.0 - epsilon).powi(self.rate_bits as i32 - flips)
            }
            Kind::Dense { p, .. } => p[i * self.size() + j],
        }
    }

    /// Full transition matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let size = self.size();
        match &self.kind {
            Kind::Dense { p, .. } => p.clone(),
            Kind::Bsc { .. } => (0..size * size).map(|e| self.prob(e / size, e % size)).collect(),
        }
    }

    /// Channel expectation seen from the input: `out[i] = sum_j P(j|i) v[j]`
    /// where `values` holds `size` rows of `width` numbers.
    pub fn expect_given_input(&self, values: &[f64], width: usize) -> Vec<f64> {
        self.mix(values, width, false)
    }

    /// Channel-weighted accumulation seen from the output:
    /// `out[j] = sum_i P(j|i) v[i]`.
    pub fn accumulate_at_output(&self, values: &[f64], width: usize) -> Vec<f64> {
        self.mix(values, width, true)
    }

    fn mix(&self, values: &[f64], width: usize, transpose: bool) -> Vec<f64> {
        let size = self.size();
        assert_eq!(values.len(), size * width, "channel mix: wrong input length");
        match &self.kind {
            Kind::Bsc { epsilon } => {
                let mut out = values.to_vec();
                if *epsilon > 0.0 {
                    // P is symmetric, so both directions use the same butterfly.
                    bsc_butterfly(&mut out, width, self.rate_bits, *epsilon);
                }
                out
            }
            Kind::Dense { p, .. } => {
                let mut out = vec![0.0; size * width];
                for i in 0..size {
                    for j in 0..size {
                        let (w, src, dst) = if transpose {
                            (p[i * size + j], i, j)
                        } else {
                            (p[i * size + j], j, i)
                        };
                        if w == 0.0 {
                            continue;
                        }
                        let s = &values[src * width..(src + 1) * width];
                        let d = &mut out[dst * width..(dst + 1) * width];
                        for (d, s) in d.iter_mut().zip(s) {
                            *d += w * s;
                        }
                    }
                }
                out
            }
        }
    }

    /// Sends index `i` through the channel.
    pub fn transmit<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        let size = self.size();
        if i >= size {
            return Err(Error::IndexOutOfRange { index: i, size });
        }
        Ok(match &self.kind {
            Kind::Bsc { epsilon } => {
                let mut j = i;
                for bit in 0..self.rate_bits {
                    let u: f64 = rng.random();
                    if u < *epsilon {
                        j ^= 1 << bit;
                    }
                }
                j
            }
            Kind::Dense { cdf, .. } => {
                let u: f64 = rng.random();
                let row = &cdf[i * size..(i + 1) * size];
                row.partition_point(|&c| c <= u).min(size - 1)
            }
        })
    }

    /// Writes the transition matrix as CSV (one row per input index).
    pub fn to_csv(&self) -> String {
        let size = self.size();
        let dense = self.to_dense();
        let mut out = String::new();
        for row in dense.chunks(size) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// In-place Kronecker product of per-bit 2x2 BSC kernels.
fn bsc_butterfly(values: &mut [f64], width: usize, rate_bits: u32, epsilon: f64) {
    let keep = 1.0 - epsilon;
    let size = 1usize << rate_bits;
    for bit in 0..rate_bits {
        let stride = 1usize << bit;
        for base in 0..size {
            if base & stride != 0 {
                continue;
            }
            let partner = base | stride;
            let (lo, hi) = values.split_at_mut(partner * width);
            let a = &mut lo[base * width..(base + 1) * width];
            let b = &mut hi[..width];
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = keep * u + epsilon * v;
                *y = epsilon * u + keep * v;
            }
        }
    }
}
