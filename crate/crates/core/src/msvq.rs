//! L-stage channel-optimized multi-stage VQ.
//!
//! Stage `l` sends index `i_l` over its own channel and the decoder adds
//! the received codevectors of all stages. With the earlier stages fixed,
//! `E|x - sum_t C_t|^2` separates into the distortion left after stage
//! `l - 1` plus the single-stage score of stage `l` evaluated on the
//! residual `x - sum_{t<l} e_t(i_t)`, where `e_t` are the channel-expected
//! codevectors. Each stage is therefore a single-stage design on residual
//! targets, trained one after another.

use crate::channel::Dmc;
use crate::codebook::{row_energies, Codebook, Domain, EncoderTables};
use crate::covq::{covq_decoder_update, train_stage, Samples, StageProblem, TrainConfig, TrainReport};
use crate::error::{config, Error, Result};

#[derive(Debug, Clone)]
pub struct Stage {
    pub codebook: Codebook,
    pub channel: Dmc,
}

/// Trained stages with their channels.
#[derive(Debug, Clone)]
pub struct StagePlan {
    stages: Vec<Stage>,
    tables: Vec<EncoderTables>,
}

impl StagePlan {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let Some(first) = stages.first() else {
            return config("a stage plan needs at least one stage");
        };
        let (dim, domain) = (first.codebook.dim(), first.codebook.domain());
        if stages.iter().any(|s| s.codebook.dim() != dim || s.codebook.domain() != domain) {
            return config("all stages must share dimension and domain");
        }
        let tables = stages
            .iter()
            .map(|s| EncoderTables::new(&s.codebook, &s.channel))
            .collect::<Result<_>>()?;
        Ok(Self { stages, tables })
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn rates(&self) -> Vec<u32> {
        self.stages.iter().map(|s| s.codebook.rate_bits()).collect()
    }

    pub fn dim(&self) -> usize {
        self.stages[0].codebook.dim()
    }

    pub fn domain(&self) -> Domain {
        self.stages[0].codebook.domain()
    }

    pub fn tables(&self, l: usize) -> &EncoderTables {
        &self.tables[l]
    }

    /// Encoder work per sample, `(2 dim + 1) sum_l 2^{R_l}`.
    pub fn ops_per_sample(&self) -> u64 {
        self.tables.iter().map(EncoderTables::ops_per_sample).sum()
    }

    /// Stage indices for every row of `targets`, stage-major.
    pub fn encode_batch(&self, targets: &[f64]) -> Result<Vec<Vec<u32>>> {
        let dim = self.dim();
        let mut residual = targets.to_vec();
        let mut out = Vec::with_capacity(self.len());
        for (l, t) in self.tables.iter().enumerate() {
            let (idx, _) = t.encode_batch(&residual)?;
            if l + 1 < self.len() {
                subtract_expected(&mut residual, dim, t, &idx);
            }
            out.push(idx);
        }
        Ok(out)
    }

    /// Sum of the codevectors at the received indices.
    pub fn reconstruct(&self, received: &[usize]) -> Result<Vec<f64>> {
        if received.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: received.len(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        for (stage, &j) in self.stages.iter().zip(received) {
            let size = stage.codebook.size();
            if j >= size {
                return Err(Error::IndexOutOfRange { index: j, size });
            }
            for (o, c) in out.iter_mut().zip(stage.codebook.vector(j)) {
                *o += c;
            }
        }
        Ok(out)
    }
}

fn subtract_expected(residual: &mut [f64], dim: usize, tables: &EncoderTables, idx: &[u32]) {
    for (r, &i) in residual.chunks_exact_mut(dim).zip(idx) {
        for (v, e) in r.iter_mut().zip(tables.expected(i as usize)) {
            *v -= e;
        }
    }
}

/// Stage-`l` index (0-based) for target `x` given the indices already
/// chosen by stages `0..l`.
pub fn msvq_encode_stage(x: &[f64], l: usize, prior: &[usize], plan: &StagePlan) -> Result<usize> {
    if l >= plan.len() {
        return Err(Error::IndexOutOfRange {
            index: l,
            size: plan.len(),
        });
    }
    if prior.len() != l {
        return Err(Error::Dimension {
            expected: l,
            actual: prior.len(),
        });
    }
    if x.len() != plan.dim() {
        return Err(Error::Dimension {
            expected: plan.dim(),
            actual: x.len(),
        });
    }
    let mut residual = x.to_vec();
    for (t, &i) in prior.iter().enumerate() {
        let size = plan.tables(t).size();
        if i >= size {
            return Err(Error::IndexOutOfRange { index: i, size });
        }
        for (v, e) in residual.iter_mut().zip(plan.tables(t).expected(i)) {
            *v -= e;
        }
    }
    plan.tables(l).encode(&residual)
}

/// Residual targets for stage `l`: `x - sum_{t<l} e_t(i_t)`, with
/// `indices[t]` the stage-`t` indices of every sample.
pub fn stage_residuals(targets: &[f64], plan: &StagePlan, indices: &[Vec<u32>], l: usize) -> Result<Vec<f64>> {
    if l > plan.len() || indices.len() < l {
        return config("not enough stages for the requested residual");
    }
    let mut residual = targets.to_vec();
    for (t, idx) in indices.iter().enumerate().take(l) {
        subtract_expected(&mut residual, plan.dim(), plan.tables(t), idx);
    }
    Ok(residual)
}

/// Stage-`l` centroid update: the channel-averaged mean of the stage
/// residuals. Identical to the single-stage update when `l = 0`.
pub fn msvq_decoder_update_stage(
    targets: &[f64],
    plan: &StagePlan,
    indices: &[Vec<u32>],
    l: usize,
) -> Result<(Codebook, Vec<usize>)> {
    if l >= plan.len() || indices.len() <= l {
        return config("stage index out of range");
    }
    let residual = stage_residuals(targets, plan, indices, l)?;
    let stage = &plan.stages()[l];
    covq_decoder_update(&residual, &indices[l], &stage.channel, &stage.codebook)
}

#[derive(Debug, Clone)]
pub struct MsvqTraining {
    pub plan: StagePlan,
    pub report: TrainReport,
}

/// Sequential stage design. Stage `l` is trained with stages `0..l` frozen
/// and later stages absent. With `init`, every stage starts from the
/// matching codebook of `init` (typically a noiseless design); otherwise
/// as in [`train_covq`](crate::covq::train_covq).
pub fn train_msvq(
    samples: Samples<'_>,
    channels: &[Dmc],
    cfg: &TrainConfig,
    init: Option<&StagePlan>,
) -> Result<MsvqTraining> {
    if channels.is_empty() {
        return config("at least one stage is required");
    }
    if let Some(p) = init {
        if p.len() != channels.len() || p.rates() != channels.iter().map(Dmc::rate_bits).collect::<Vec<_>>() {
            return config("initial plan does not match the stage rates");
        }
    }
    let dim = samples.dim;
    let mut residual: Option<Vec<f64>> = None;
    let mut baseline = row_energies(samples.data, dim);
    let mut stages = Vec::with_capacity(channels.len());
    let mut report = TrainReport::default();
    for (l, dmc) in channels.iter().enumerate() {
        let data = residual.as_deref().unwrap_or(samples.data);
        let problem = StageProblem {
            samples: Samples { data, ..samples },
            baseline: &baseline,
            stage: l,
        };
        let out = train_stage(problem, dmc, cfg, init.map(|p| &p.stages()[l].codebook))?;
        report.phases.extend(out.phases);
        if l + 1 < channels.len() {
            let tables = EncoderTables::new(&out.codebook, dmc)?;
            let mut next = data.to_vec();
            subtract_expected(&mut next, dim, &tables, &out.indices);
            residual = Some(next);
            for (b, s) in baseline.iter_mut().zip(&out.scores) {
                *b += s;
            }
        }
        stages.push(Stage {
            codebook: out.codebook,
            channel: dmc.clone(),
        });
    }
    Ok(MsvqTraining {
        plan: StagePlan::new(stages)?,
        report,
    })
}

/// [`train_msvq`] on measurement vectors.
pub fn train_msnnc(
    measurements: &[f64],
    m: usize,
    channels: &[Dmc],
    cfg: &TrainConfig,
    init: Option<&StagePlan>,
) -> Result<MsvqTraining> {
    train_msvq(Samples::new(Domain::Measurement, m, measurements)?, channels, cfg, init)
}

/// Default split of `rate` over `stages`: as even as possible, extra bits
/// to the earlier stages.
pub fn split_rate(rate: u32, stages: usize) -> Result<Vec<u32>> {
    if stages == 0 || (rate as usize) < stages {
        return config(format!("cannot split {rate} bits over {stages} stages"));
    }
    let base = rate / stages as u32;
    let extra = rate as usize % stages;
    Ok((0..stages).map(|l| base + u32::from(l < extra)).collect())
}
