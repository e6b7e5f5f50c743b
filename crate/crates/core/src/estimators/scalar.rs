//! Lloyd (LBG) scalar quantizer training.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Sorted reproduction levels; midpoints between neighbours are the
/// decision thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCodebook {
    levels: Vec<f64>,
}

impl ScalarCodebook {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || !levels.len().is_power_of_two() {
            return config("scalar codebook size must be a power of two");
        }
        if levels.iter().any(|v| !v.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return config("scalar levels must be finite and strictly increasing");
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn rate_bits(&self) -> u32 {
        self.levels.len().trailing_zeros()
    }

    /// Nearest level; a value exactly on a threshold goes to the lower level.
    pub fn quantize(&self, v: f64) -> usize {
        self.levels
            .windows(2)
            .position(|w| v <= 0.5 * (w[0] + w[1]))
            .unwrap_or(self.levels.len() - 1)
    }

    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }
}

/// Result of [`lloyd_scalar`]: the codebook and the distortion trace of
/// the final-rate Lloyd iterations.
#[derive(Debug, Clone)]
pub struct ScalarTraining {
    pub codebook: ScalarCodebook,
    pub trace: Vec<f64>,
}

const REL_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 1000;
const DELTA: f64 = 1e-3;

/// Trains a `2^rate`-level quantizer by splitting from the sample mean and
/// running Lloyd iterations to a relative improvement below 1e-6 at every
/// intermediate size.
pub fn lloyd_scalar(rate: u32, samples: &[f64]) -> Result<ScalarTraining> {
    if rate == 0 || rate > 16 {
        return config(format!("scalar rate {rate} outside 1..=16"));
    }
    let needed = 1000usize << rate;
    if samples.len() < needed {
        return config(format!("need at least {needed} samples for rate {rate}, got {}", samples.len()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return config("training samples must be finite");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let spread = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);

    let mut levels = vec![mean];
    let mut trace = Vec::new();
    for _ in 0..rate {
        levels = levels
            .iter()
            .flat_map(|&l| [l - DELTA * spread, l + DELTA * spread])
            .collect();
        let (l, t) = lloyd_iterations(&sorted, levels, spread);
        levels = l;
        trace = t;
    }
    Ok(ScalarTraining {
        codebook: ScalarCodebook::new(levels)?,
        trace,
    })
}

/// Cell boundaries in the sorted sample array for each level.
fn partition(sorted: &[f64], levels: &[f64]) -> Vec<usize> {
    let mut bounds = Vec::with_capacity(levels.len() + 1);
    bounds.push(0);
    for w in levels.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        bounds.push(sorted.partition_point(|&v| v <= t));
    }
    bounds.push(sorted.len());
    bounds
}

fn distortion(sorted: &[f64], levels: &[f64], bounds: &[usize]) -> f64 {
    let mut acc = 0.0;
    for (c, &l) in levels.iter().enumerate() {
        for &v in &sorted[bounds[c]..bounds[c + 1]] {
            acc += (v - l) * (v - l);
        }
    }
    acc / sorted.len() as f64
}

fn lloyd_iterations(sorted: &[f64], mut levels: Vec<f64>, spread: f64) -> (Vec<f64>, Vec<f64>) {
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..MAX_ITERS {
        let bounds = partition(sorted, &levels);
        let d = distortion(sorted, &levels, &bounds);
        if let Some(&prev) = trace.last() {
            if d > prev {
                break;
            }
            trace.push(d);
            if prev - d <= REL_TOL * prev {
                break;
            }
        } else {
            trace.push(d);
        }
        let mut next = levels.clone();
        let mut counts = Vec::with_capacity(levels.len());
        for c in 0..levels.len() {
            let cell = &sorted[bounds[c]..bounds[c + 1]];
            counts.push(cell.len());
            if !cell.is_empty() {
                next[c] = cell.iter().sum::<f64>() / cell.len() as f64;
            }
        }
        split_empty_levels(&mut next, &counts, spread);
        levels = next;
    }
    (levels, trace)
}

/// Re-seeds empty cells next to the most populated level and restores
/// strict ordering.
fn split_empty_levels(levels: &mut [f64], counts: &[usize], spread: f64) {
    let empties: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] == 0).collect();
    if empties.is_empty() {
        return;
    }
    let busiest = (0..counts.len()).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
    let base = levels[busiest];
    for (m, &e) in empties.iter().enumerate() {
        let step = DELTA * (m + 1) as f64;
        levels[e] = if base != 0.0 { base * (1.0 + step) } else { step * spread };
    }
    levels.sort_by(f64::total_cmp);
    for i in 1..levels.len() {
        if levels[i] <= levels[i - 1] {
            levels[i] = levels[i - 1] + DELTA * spread;
        }
    }
}
