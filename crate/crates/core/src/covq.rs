//! Channel-optimized single-stage VQ trained with the generalized Lloyd
//! algorithm.
//!
//! The same routines train the source-space quantizer (targets are the
//! encoder-side estimates x~) and the measurement-space nearest-neighbour
//! baseline (targets are the measurements y); only the codebook domain
//! differs.

use serde::{Deserialize, Serialize};

use crate::channel::Dmc;
use crate::codebook::{row_energies, Codebook, Domain, EncoderTables};
use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Stop once `(D_prev - D) <= rel_tol * D_prev`.
    pub rel_tol: f64,
    /// Perturbation used when splitting codevectors.
    pub delta_split: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-5,
            delta_split: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return config("max_iters must be positive");
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return config("rel_tol must be a finite non-negative number");
        }
        if !(self.delta_split > 0.0 && self.delta_split < 1.0) {
            return config("delta_split must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Training vectors of one domain, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub domain: Domain,
    pub dim: usize,
    pub data: &'a [f64],
}

impl<'a> Samples<'a> {
    pub fn new(domain: Domain, dim: usize, data: &'a [f64]) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return config("training data must hold a positive number of vectors");
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("training data contains non-finite values".into()));
        }
        Ok(Self { domain, dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Cells reseeded during one Lloyd iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitEvent {
    /// Number of distortions recorded in the phase before the split.
    pub after: usize,
    pub indices: Vec<usize>,
    /// False when the split raised the distortion and was undone.
    pub accepted: bool,
}

/// One run of Lloyd iterations at a fixed rate and channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub stage: usize,
    pub rate_bits: u32,
    pub epsilon: f64,
    pub distortions: Vec<f64>,
    pub splits: Vec<SplitEvent>,
}

impl Phase {
    pub fn is_monotone(&self) -> bool {
        self.distortions.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainReport {
    pub phases: Vec<Phase>,
}

impl TrainReport {
    pub fn is_monotone(&self) -> bool {
        self.phases.iter().all(Phase::is_monotone)
    }

    pub fn final_distortion(&self) -> Option<f64> {
        self.phases.last().and_then(|p| p.distortions.last().copied())
    }

    /// Trace as CSV rows `stage,rate_bits,epsilon,iteration,distortion`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,rate_bits,epsilon,iteration,distortion\n");
        for p in &self.phases {
            for (it, d) in p.distortions.iter().enumerate() {
                out.push_str(&format!("{},{},{},{},{}\n", p.stage, p.rate_bits, p.epsilon, it, d));
            }
        }
        out
    }
}

/// Optimal encoder for a single target.
pub fn covq_encode(target: &[f64], cb: &Codebook, dmc: &Dmc) -> Result<usize> {
    EncoderTables::new(cb, dmc)?.encode(target)
}

/// Channel-averaged centroid update. Returns the new codebook and the
/// number of samples assigned to each index. Indices with no channel mass
/// keep their previous codevector.
pub fn covq_decoder_update(
    targets: &[f64],
    indices: &[u32],
    dmc: &Dmc,
    previous: &Codebook,
) -> Result<(Codebook, Vec<usize>)> {
    let dim = previous.dim();
    let size = previous.size();
    if dmc.size() != size {
        return Err(Error::Dimension {
            expected: size,
            actual: dmc.size(),
        });
    }
    if targets.len() != indices.len() * dim {
        return Err(Error::Dimension {
            expected: indices.len() * dim,
            actual: targets.len(),
        });
    }
    let mut sums = vec![0.0; size * dim];
    let mut counts = vec![0usize; size];
    for (t, &i) in targets.chunks_exact(dim).zip(indices) {
        let i = i as usize;
        if i >= size {
            return Err(Error::IndexOutOfRange { index: i, size });
        }
        counts[i] += 1;
        for (s, v) in sums[i * dim..(i + 1) * dim].iter_mut().zip(t) {
            *s += v;
        }
    }
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let num = dmc.accumulate_at_output(&sums, dim);
    let den = dmc.accumulate_at_output(&mass, 1);
    let mut next = previous.clone();
    for (j, &d) in den.iter().enumerate() {
        if d > 0.0 {
            for (c, n) in next.as_mut_slice()[j * dim..(j + 1) * dim]
                .iter_mut()
                .zip(&num[j * dim..(j + 1) * dim])
            {
                *c = n / d;
            }
        }
    }
    Ok((next, counts))
}

/// Reseeds every index with zero usage from the most used codevector.
pub fn split_empty_cells(cb: &Codebook, usage: &[usize], delta: f64) -> Codebook {
    let empty: Vec<usize> = (0..usage.len()).filter(|&j| usage[j] == 0).collect();
    split_cells(cb, usage, &empty, delta)
}

/// The m-th listed cell (from 1) becomes `c_max (1 + m delta)`, or
/// `c_max + m delta` coordinate-wise when `c_max` is the zero vector.
fn split_cells(cb: &Codebook, usage: &[usize], cells: &[usize], delta: f64) -> Codebook {
    let mut out = cb.clone();
    if cells.is_empty() {
        return out;
    }
    let dim = cb.dim();
    let busiest = (0..usage.len())
        .max_by_key(|&j| (usage[j], std::cmp::Reverse(j)))
        .unwrap_or(0);
    let source = cb.vector(busiest).to_vec();
    let zero = source.iter().all(|&v| v == 0.0);
    for (m, &j) in cells.iter().enumerate() {
        let step = delta * (m + 1) as f64;
        for (c, s) in out.as_mut_slice()[j * dim..(j + 1) * dim].iter_mut().zip(&source) {
            *c = if zero { s + step } else { s * (1.0 + step) };
        }
    }
    out
}

/// Per-sample quantities the stage trainer needs besides the targets.
///
/// `baseline[s]` is the expected distortion of sample `s` before this
/// stage, so the stage distortion is `mean(baseline + min score)`. For a
/// single stage it is `|target|^2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StageProblem<'a> {
    pub samples: Samples<'a>,
    pub baseline: &'a [f64],
    pub stage: usize,
}

/// Result of training one stage.
#[derive(Debug, Clone)]
pub(crate) struct StageOutcome {
    pub codebook: Codebook,
    pub indices: Vec<u32>,
    pub scores: Vec<f64>,
    pub phases: Vec<Phase>,
}

fn stage_distortion(baseline: &[f64], scores: &[f64]) -> Result<f64> {
    let d = baseline.iter().zip(scores).map(|(b, s)| b + s).sum::<f64>() / scores.len() as f64;
    if !d.is_finite() {
        return Err(Error::Numerical(format!("training distortion became {d}")));
    }
    Ok(d)
}

/// Lloyd iterations from `init` on channel `dmc`.
///
/// A split that raises the distortion is undone and its cells are not
/// split again. A rise without a split can only be rounding; training then
/// stops with the codebook of the last recorded distortion, so the trace is
/// non-increasing by construction.
pub(crate) fn lloyd(
    problem: StageProblem<'_>,
    init: Codebook,
    dmc: &Dmc,
    cfg: &TrainConfig,
) -> Result<StageOutcome> {
    let targets = problem.samples.data;
    let mut phase = Phase {
        stage: problem.stage,
        rate_bits: dmc.rate_bits(),
        epsilon: dmc.epsilon().unwrap_or(f64::NAN),
        distortions: Vec::new(),
        splits: Vec::new(),
    };
    let mut rejected = vec![false; init.size()];
    let mut pending: Option<(Codebook, Vec<usize>)> = None;
    let mut cb = init;
    let mut kept: Option<(Codebook, Vec<u32>, Vec<f64>)> = None;
    let mut passes = 0;
    loop {
        let tables = EncoderTables::new(&cb, dmc)?;
        let (indices, scores) = tables.encode_batch(targets)?;
        let d = stage_distortion(problem.baseline, &scores)?;
        passes += 1;
        let prev = phase.distortions.last().copied();
        if prev.is_some_and(|p| d > p) {
            match pending.take() {
                Some((saved, cells)) => {
                    for &j in &cells {
                        rejected[j] = true;
                    }
                    phase.splits.push(SplitEvent {
                        after: phase.distortions.len(),
                        indices: cells,
                        accepted: false,
                    });
                    cb = saved;
                    if passes >= cfg.max_iters {
                        break;
                    }
                    continue;
                }
                None => break,
            }
        }
        if let Some((_, cells)) = pending.take() {
            phase.splits.push(SplitEvent {
                after: phase.distortions.len(),
                indices: cells,
                accepted: true,
            });
        }
        phase.distortions.push(d);
        let converged = prev.is_some_and(|p| p - d <= cfg.rel_tol * p);
        let (next, usage) = if converged || passes >= cfg.max_iters {
            kept = Some((cb, indices, scores));
            break;
        } else {
            covq_decoder_update(targets, &indices, dmc, &cb)?
        };
        kept = Some((cb, indices, scores));
        let cells: Vec<usize> = (0..usage.len())
            .filter(|&j| usage[j] == 0 && !rejected[j])
            .collect();
        if cells.is_empty() {
            cb = next;
        } else {
            cb = split_cells(&next, &usage, &cells, cfg.delta_split);
            pending = Some((next, cells));
        }
    }
    let (codebook, indices, scores) = match kept {
        Some(k) => k,
        None => unreachable!("the first pass always records a distortion"),
    };
    Ok(StageOutcome {
        codebook,
        indices,
        scores,
        phases: vec![phase],
    })
}

/// Per-coordinate mean and standard deviation of the targets.
fn moments(samples: Samples<'_>) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let dim = samples.dim;
    let mut mean = vec![0.0; dim];
    for row in samples.data.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for row in samples.data.chunks_exact(dim) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    (mean, var.iter().map(|s| (s / n).sqrt()).collect())
}

/// Noiseless LBG design: start from the mean and double the codebook
/// `rate` times, splitting `c_j` into `c_j - v` (index `j`) and `c_j + v`
/// (index `j + 2^b`), with `v` a `delta_split` multiple of the
/// per-coordinate spread. Lloyd runs to convergence at every size.
pub(crate) fn lbg(problem: StageProblem<'_>, rate: u32, cfg: &TrainConfig) -> Result<StageOutcome> {
    let samples = problem.samples;
    let (mean, spread) = moments(samples);
    let offset: Vec<f64> = spread
        .iter()
        .map(|&s| cfg.delta_split * if s > 0.0 { s } else { 1.0 })
        .collect();
    let init = Codebook::new(samples.domain, samples.dim, mean)?;
    let mut out = lloyd(problem, init, &Dmc::identity(0)?, cfg)?;
    for b in 0..rate {
        let dim = samples.dim;
        let prev = out.codebook.as_slice();
        let mut grown = Vec::with_capacity(prev.len() * 2);
        grown.extend(prev.chunks_exact(dim).flat_map(|c| c.iter().zip(&offset).map(|(v, o)| v - o)));
        grown.extend(prev.chunks_exact(dim).flat_map(|c| c.iter().zip(&offset).map(|(v, o)| v + o)));
        let init = Codebook::new(samples.domain, dim, grown)?;
        let mut next = lloyd(problem, init, &Dmc::identity(b + 1)?, cfg)?;
        out.phases.append(&mut next.phases);
        next.phases = std::mem::take(&mut out.phases);
        out = next;
    }
    Ok(out)
}

/// Trains one stage on `dmc`: from `init` when given, otherwise by LBG on
/// the noiseless channel followed, for a noisy channel, by Lloyd on `dmc`.
pub(crate) fn train_stage(
    problem: StageProblem<'_>,
    dmc: &Dmc,
    cfg: &TrainConfig,
    init: Option<&Codebook>,
) -> Result<StageOutcome> {
    cfg.validate()?;
    if problem.baseline.len() != problem.samples.len() {
        return Err(Error::Dimension {
            expected: problem.samples.len(),
            actual: problem.baseline.len(),
        });
    }
    match init {
        Some(cb) => {
            if cb.dim() != problem.samples.dim || cb.domain() != problem.samples.domain {
                return config("initial codebook does not match the training data");
            }
            lloyd(problem, cb.clone(), dmc, cfg)
        }
        None => {
            let mut out = lbg(problem, dmc.rate_bits(), cfg)?;
            if dmc.is_identity() {
                return Ok(out);
            }
            let mut noisy = lloyd(problem, out.codebook, dmc, cfg)?;
            out.phases.append(&mut noisy.phases);
            noisy.phases = out.phases;
            Ok(noisy)
        }
    }
}

/// Trained single-stage system.
#[derive(Debug, Clone)]
pub struct CovqTraining {
    pub codebook: Codebook,
    pub report: TrainReport,
}

/// Channel-optimized VQ design on `samples`. The codebook domain follows
/// the samples, so measurement-space data gives the nearest-neighbour
/// coding baseline.
pub fn train_covq(
    samples: Samples<'_>,
    dmc: &Dmc,
    cfg: &TrainConfig,
    init: Option<&Codebook>,
) -> Result<CovqTraining> {
    let baseline = row_energies(samples.data, samples.dim);
    let problem = StageProblem {
        samples,
        baseline: &baseline,
        stage: 0,
    };
    let out = train_stage(problem, dmc, cfg, init)?;
    Ok(CovqTraining {
        codebook: out.codebook,
        report: TrainReport { phases: out.phases },
    })
}

/// [`train_covq`] on measurement vectors.
pub fn train_nnc(
    measurements: &[f64],
    m: usize,
    dmc: &Dmc,
    cfg: &TrainConfig,
    init: Option<&Codebook>,
) -> Result<CovqTraining> {
    train_covq(Samples::new(Domain::Measurement, m, measurements)?, dmc, cfg, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(x: &[f64], cb: &Codebook, dmc: &Dmc) -> Vec<f64> {
        (0..cb.size())
            .map(|i| {
                (0..cb.size())
                    .map(|j| {
                        let d: f64 = x.iter().zip(cb.vector(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                        dmc.prob(i, j) * d
                    })
                    .sum()
            })
            .collect()
    }

    fn argmin(v: &[f64]) -> usize {
        let mut best = 0;
        for (i, &s) in v.iter().enumerate() {
            if s < v[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn one_bit_example() {
        let cb = Codebook::new(Domain::Source, 2, vec![1.0, 0.0, -1.0, 0.0]).unwrap();
        let dmc = bsc(1, 0.1).unwrap();
        let t = EncoderTables::new(&cb, &dmc).unwrap();
        let x = [0.3, 0.0];
        let (scores, _) = t.scores_counted(&x);
        let sq: f64 = x.iter().map(|v| v * v).sum();
        assert!((scores[0] + sq - 0.61).abs() < 1e-12 && (scores[1] + sq - 1.57).abs() < 1e-12);
        // with |x|^2 dropped the two scores are 1 -+ 2 * 0.3 * 0.8
        assert!((scores[0] - 0.52).abs() < 1e-12 && (scores[1] - 1.48).abs() < 1e-12);
        assert_eq!(covq_encode(&x, &cb, &dmc).unwrap(), 0);
    }

    #[test]
    fn matches_expected_distortion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dim = rng.random_range(1..=4);
            let rate = rng.random_range(1..=4);
            let eps = rng.random_range(0.0..0.5);
            let cb = Codebook::new(
                Domain::Source,
                dim,
                (0..dim << rate).map(|_| rng.random_range(-2.0..2.0)).collect(),
            )
            .unwrap();
            let dmc = bsc(rate, eps).unwrap();
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let oracle = brute_force(&x, &cb, &dmc);
            assert_eq!(covq_encode(&x, &cb, &dmc).unwrap(), argmin(&oracle));
        }
    }

    proptest! {
        #[test]
        fn noiseless_encoder_is_nearest_neighbour(
            values in proptest::collection::vec(-3.0f64..3.0, 24),
            x in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let cb = Codebook::new(Domain::Source, 3, values).unwrap();
            let dist: Vec<f64> = (0..8)
                .map(|j| x.iter().zip(cb.vector(j)).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            let got = covq_encode(&x, &cb, &Dmc::identity(3).unwrap()).unwrap();
            // equal up to rounding of the expanded score
            prop_assert!(dist[got] - dist[argmin(&dist)] < 1e-12);
        }

        #[test]
        fn argmin_ignores_positive_rescaling(
            values in proptest::collection::vec(-3.0f64..3.0, 8),
            x in -3.0f64..3.0,
            scale in 0.01f64..100.0,
        ) {
            let dmc = bsc(3, 0.07).unwrap();
            let cb = Codebook::new(Domain::Source, 1, values).unwrap();
            let (scores, _) = EncoderTables::new(&cb, &dmc).unwrap().scores_counted(&[x]);
            let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            prop_assert_eq!(argmin(&scores), argmin(&scaled));
        }
    }

    #[test]
    fn noiseless_update_is_cell_mean() {
        let prev = Codebook::new(Domain::Source, 1, vec![0.0, 0.0]).unwrap();
        let (cb, usage) =
            covq_decoder_update(&[1.0, 3.0, 10.0], &[0, 0, 1], &Dmc::identity(1).unwrap(), &prev).unwrap();
        assert_eq!(cb.as_slice(), &[2.0, 10.0]);
        assert_eq!(usage, vec![2, 1]);
    }

    #[test]
    fn uniform_channel_gives_global_mean() {
        let dmc = Dmc::from_matrix(2, vec![0.25; 16]).unwrap();
        let prev = Codebook::new(Domain::Source, 2, vec![0.0; 8]).unwrap();
        let targets = [1.0, 2.0, 3.0, -1.0, 5.0, 0.5];
        let (cb, _) = covq_decoder_update(&targets, &[0, 3, 3], &dmc, &prev).unwrap();
        for j in 0..4 {
            assert!((cb.vector(j)[0] - 3.0).abs() < 1e-12);
            assert!((cb.vector(j)[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn two_sample_noisy_update() {
        // x_a = 1 sent on index 0, x_b = -3 sent on index 1, crossover 0.1:
        // c_0 = (0.9 * 1 + 0.1 * -3) / (0.9 + 0.1) = 0.6
        // c_1 = (0.1 * 1 + 0.9 * -3) / (0.1 + 0.9) = -2.6
        let prev = Codebook::new(Domain::Source, 1, vec![0.0, 0.0]).unwrap();
        let (cb, _) = covq_decoder_update(&[1.0, -3.0], &[0, 1], &bsc(1, 0.1).unwrap(), &prev).unwrap();
        assert!((cb.vector(0)[0] - 0.6).abs() < 1e-12);
        assert!((cb.vector(1)[0] + 2.6).abs() < 1e-12);
    }

    #[test]
    fn unused_cells_keep_their_vector_without_channel_mass() {
        let prev = Codebook::new(Domain::Source, 1, vec![7.0, 0.0]).unwrap();
        let (cb, usage) = covq_decoder_update(&[1.0], &[1], &Dmc::identity(1).unwrap(), &prev).unwrap();
        assert_eq!(cb.as_slice(), &[7.0, 1.0]);
        assert_eq!(usage, vec![0, 1]);
    }

    #[test]
    fn splitting_examples() {
        let cb = Codebook::new(Domain::Source, 2, vec![2.0, 0.0, 5.0, 5.0]).unwrap();
        assert_eq!(split_empty_cells(&cb, &[3, 1], 1e-3), cb);
        let out = split_empty_cells(&cb, &[4, 0], 1e-3);
        assert!((out.vector(1)[0] - 2.002).abs() < 1e-15 && out.vector(1)[1] == 0.0);

        let cb = Codebook::new(Domain::Source, 1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = split_empty_cells(&cb, &[5, 0, 0, 0], 1e-3);
        let v: Vec<f64> = out.as_slice().to_vec();
        assert_eq!(v[0], 1.0);
        assert!(v[1] != v[2] && v[2] != v[3] && v[1] != v[3]);
    }

    #[test]
    fn split_then_lloyd_step_does_not_increase_distortion() {
        // every sample sits in cell 0, so cell 1 is empty and gets split
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
        let id = Dmc::identity(1).unwrap();
        let cb = Codebook::new(Domain::Source, 1, vec![0.5, 100.0]).unwrap();
        let (idx, scores) = EncoderTables::new(&cb, &id).unwrap().encode_batch(&data).unwrap();
        let base = row_energies(&data, 1);
        let d0 = stage_distortion(&base, &scores).unwrap();
        let (next, usage) = covq_decoder_update(&data, &idx, &id, &cb).unwrap();
        assert_eq!(usage[1], 0);
        let split = split_empty_cells(&next, &usage, 1e-3);
        let (idx, _) = EncoderTables::new(&split, &id).unwrap().encode_batch(&data).unwrap();
        let (after, _) = covq_decoder_update(&data, &idx, &id, &split).unwrap();
        let (_, scores) = EncoderTables::new(&after, &id).unwrap().encode_batch(&data).unwrap();
        let d1 = stage_distortion(&base, &scores).unwrap();
        assert!(d1 <= d0, "{d1} > {d0}");
        assert!(d1 < 0.5 * d0);
    }

    fn gaussian_pairs(n: usize, seed: u64) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2 * n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn single_codevector_is_mean_and_distortion_is_variance() {
        let data = gaussian_pairs(5000, 3);
        let s = Samples::new(Domain::Source, 2, &data).unwrap();
        let out = train_covq(s, &Dmc::identity(0).unwrap(), &TrainConfig::default(), None).unwrap();
        let (mean, sd) = moments(s);
        assert_eq!(out.codebook.as_slice(), &mean[..]);
        let var: f64 = sd.iter().map(|v| v * v).sum();
        let d = out.report.final_distortion().unwrap();
        assert!((d - var).abs() < 1e-9 * var, "{d} vs {var}");
    }

    #[test]
    fn traces_are_monotone_noiseless_and_noisy() {
        let data = gaussian_pairs(20_000, 4);
        let s = Samples::new(Domain::Source, 2, &data).unwrap();
        let cfg = TrainConfig::default();
        let clean = train_covq(s, &Dmc::identity(5).unwrap(), &cfg, None).unwrap();
        assert_eq!(clean.report.phases.len(), 6);
        assert!(clean.report.is_monotone());
        let noisy = train_covq(s, &bsc(5, 0.05).unwrap(), &cfg, Some(&clean.codebook)).unwrap();
        assert!(noisy.report.is_monotone());
        let cold = train_covq(s, &bsc(5, 0.05).unwrap(), &cfg, None).unwrap();
        assert_eq!(cold.report.phases.len(), 7);
        assert_eq!(cold.codebook, noisy.codebook);
    }

    #[test]
    fn rejects_mismatched_init() {
        let data = gaussian_pairs(100, 5);
        let s = Samples::new(Domain::Source, 2, &data).unwrap();
        let cb = Codebook::new(Domain::Measurement, 2, vec![0.0; 4]).unwrap();
        assert!(train_covq(s, &Dmc::identity(1).unwrap(), &TrainConfig::default(), Some(&cb)).is_err());
        let bad = TrainConfig {
            delta_split: 0.0,
            ..TrainConfig::default()
        };
        assert!(train_covq(s, &Dmc::identity(1).unwrap(), &bad, None).is_err());
    }
}
