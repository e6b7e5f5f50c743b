//! One operating point: data generation, training and NMSE evaluation.

use std::collections::HashMap;

use crate::channel::{bsc, Dmc};
use crate::codebook::{Codebook, Domain, EncoderTables};
use crate::covq::{train_covq, Samples, TrainReport};
use crate::error::{config, Error, Result};
use crate::estimators::Reconstructor;
use crate::model::{generate_sensing_matrix, generate_source, measure, SensingModel, SourceSpec};
use crate::msvq::{train_msvq, StagePlan};
use crate::rng::{stream, Purpose, BATCH};
use crate::ssc::SscCodec;

use super::config::{ExperimentConfig, Scheme};

/// The sensing matrix of an experiment, drawn from the seed alone.
pub fn sensing_model(cfg: &ExperimentConfig) -> Result<SensingModel> {
    let mut rng = stream(cfg.seed, Purpose::Sensing, 0);
    let phi = generate_sensing_matrix(cfg.n, cfg.m(), &mut rng)?;
    SensingModel::new(phi, cfg.sigma_w2)
}

pub fn reconstructor(cfg: &ExperimentConfig, model: &SensingModel) -> Result<Reconstructor> {
    Reconstructor::build(cfg.estimator, model, &SourceSpec::new(cfg.n, cfg.k)?, cfg.enumeration_cap)
}

/// Samples of `(X, Y, x~(Y))`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub m: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Empty unless estimates were requested.
    pub x_tilde: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Draws samples `first..first + count` of the stream for `purpose`. Sample
/// `s` always comes from batch `s / BATCH`, so any range is a slice of the
/// same infinite sequence.
pub fn generate(
    cfg: &ExperimentConfig,
    model: &SensingModel,
    est: Option<&Reconstructor>,
    purpose: Purpose,
    first: usize,
    count: usize,
) -> Result<Dataset> {
    let spec = SourceSpec::new(cfg.n, cfg.k)?;
    let (n, m) = (cfg.n, model.m());
    let mut data = Dataset {
        n,
        m,
        x: Vec::with_capacity(count * n),
        y: Vec::with_capacity(count * m),
        x_tilde: Vec::with_capacity(if est.is_some() { count * n } else { 0 }),
    };
    let end = first + count;
    let mut s = first;
    while s < end {
        let batch = s / BATCH;
        let mut rng = stream(cfg.seed, purpose, batch as u64);
        let stop = ((batch + 1) * BATCH).min(end);
        for t in batch * BATCH..stop {
            let x = generate_source(&spec, &mut rng).values;
            let y = measure(&x, model, &mut rng)?;
            if t < s {
                continue;
            }
            if let Some(est) = est {
                data.x_tilde.extend(est.estimate(&y, &x)?);
            }
            data.x.extend(x);
            data.y.extend(y);
        }
        s = stop;
    }
    Ok(data)
}

pub enum Quantizer {
    Single {
        codebook: Codebook,
        channel: Dmc,
        tables: EncoderTables,
    },
    Multi(StagePlan),
    Ssc {
        codec: SscCodec,
        ideal_support: bool,
    },
}

/// A trained end-to-end system for one configuration.
pub struct TrainedSystem {
    pub config: ExperimentConfig,
    pub model: SensingModel,
    pub quantizer: Quantizer,
    pub report: TrainReport,
}

impl TrainedSystem {
    /// Codebooks in stage order; empty for support-set coding.
    pub fn codebooks(&self) -> Vec<&Codebook> {
        match &self.quantizer {
            Quantizer::Single { codebook, .. } => vec![codebook],
            Quantizer::Multi(plan) => plan.stages().iter().map(|s| &s.codebook).collect(),
            Quantizer::Ssc { .. } => Vec::new(),
        }
    }

    /// Assembles a system from stored codebooks, checking them against the
    /// configuration.
    pub fn from_parts(cfg: ExperimentConfig, model: SensingModel, codebooks: Vec<Codebook>) -> Result<Self> {
        cfg.validate()?;
        if model.n() != cfg.n || model.m() != cfg.m() {
            return config("sensing matrix shape does not match the configuration");
        }
        let quantizer = if cfg.scheme.is_ssc() {
            if !codebooks.is_empty() {
                return config("support-set coding takes no vector codebooks");
            }
            ssc_quantizer(&cfg)?
        } else {
            let (domain, dim) = domain_of(&cfg);
            let rates = cfg.stage_rates()?;
            if codebooks.len() != rates.len()
                || codebooks
                    .iter()
                    .zip(&rates)
                    .any(|(c, &r)| c.domain() != domain || c.dim() != dim || c.rate_bits() != r)
            {
                return config("codebooks do not match the scheme, dimensions or stage rates");
            }
            let channels = channels(&cfg)?;
            if cfg.scheme.is_multistage() {
                let stages = codebooks
                    .into_iter()
                    .zip(channels)
                    .map(|(codebook, channel)| crate::msvq::Stage { codebook, channel })
                    .collect();
                Quantizer::Multi(StagePlan::new(stages)?)
            } else {
                let codebook = codebooks.into_iter().next().unwrap();
                let channel = channels.into_iter().next().unwrap();
                let tables = EncoderTables::new(&codebook, &channel)?;
                Quantizer::Single { codebook, channel, tables }
            }
        };
        Ok(Self {
            config: cfg,
            model,
            quantizer,
            report: TrainReport::default(),
        })
    }
}

fn domain_of(cfg: &ExperimentConfig) -> (Domain, usize) {
    if cfg.scheme.is_measurement_domain() {
        (Domain::Measurement, cfg.m())
    } else {
        (Domain::Source, cfg.n)
    }
}

fn channels(cfg: &ExperimentConfig) -> Result<Vec<Dmc>> {
    cfg.stage_rates()?
        .iter()
        .zip(cfg.stage_epsilons()?)
        .map(|(&r, e)| bsc(r, e))
        .collect()
}

fn ssc_quantizer(cfg: &ExperimentConfig) -> Result<Quantizer> {
    Ok(Quantizer::Ssc {
        codec: SscCodec::new(cfg.n, cfg.k, cfg.rate)?,
        ideal_support: cfg.scheme == Scheme::SscIdealSupport,
    })
}

/// Trains the system of `cfg` on `n_train` fresh samples. `init` supplies
/// starting codebooks (normally the noiseless design of the same point).
pub fn train_system(cfg: &ExperimentConfig, init: Option<&TrainedSystem>) -> Result<TrainedSystem> {
    cfg.validate()?;
    let model = sensing_model(cfg)?;
    if cfg.scheme.is_ssc() {
        return Ok(TrainedSystem {
            config: cfg.clone(),
            model,
            quantizer: ssc_quantizer(cfg)?,
            report: TrainReport::default(),
        });
    }
    let measurement = cfg.scheme.is_measurement_domain();
    let est = if measurement { None } else { Some(reconstructor(cfg, &model)?) };
    let data = generate(cfg, &model, est.as_ref(), Purpose::Training, 0, cfg.n_train)?;
    let (domain, dim) = domain_of(cfg);
    let samples = Samples::new(domain, dim, if measurement { &data.y } else { &data.x_tilde })?;
    let channels = channels(cfg)?;
    let (quantizer, report) = if cfg.scheme.is_multistage() {
        let init = match init.map(|s| &s.quantizer) {
            Some(Quantizer::Multi(plan)) => Some(plan),
            None => None,
            Some(_) => return config("initial system has the wrong scheme"),
        };
        let out = train_msvq(samples, &channels, &cfg.train, init)?;
        (Quantizer::Multi(out.plan), out.report)
    } else {
        let init = match init.map(|s| &s.quantizer) {
            Some(Quantizer::Single { codebook, .. }) => Some(codebook),
            None => None,
            Some(_) => return config("initial system has the wrong scheme"),
        };
        let channel = channels.into_iter().next().unwrap();
        let out = train_covq(samples, &channel, &cfg.train, init)?;
        let tables = EncoderTables::new(&out.codebook, &channel)?;
        (
            Quantizer::Single {
                codebook: out.codebook,
                channel,
                tables,
            },
            out.report,
        )
    };
    Ok(TrainedSystem {
        config: cfg.clone(),
        model,
        quantizer,
        report,
    })
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Result of [`evaluate_nmse`]. Distortions are per sample (not normalized)
/// except the NMSE fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub n_eval: usize,
    /// `E|X - X^|^2 / K`.
    pub nmse: Estimate,
    pub nmse_db: f64,
    /// `E|X - x~|^2`.
    pub d_cs: Estimate,
    /// `E|x~ - X^|^2`.
    pub d_q: Estimate,
    /// `2 E[(X - x~)^T (x~ - X^)]`, the gap between D and `D_cs + D_q`.
    pub cross: Estimate,
    /// Support indices that arrived out of range and were clamped.
    pub clamped: usize,
}

pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// NMSE from per-sample squared errors; the normalizer `E|X|^2 = K` is
/// exact.
pub fn nmse_from_errors(errors: &[f64], k: usize) -> Estimate {
    let e = Estimate::of(errors);
    Estimate {
        mean: e.mean / k as f64,
        stderr: e.stderr / k as f64,
    }
}

/// End-to-end NMSE on `n_eval` fresh samples, with every index sent through
/// its channel.
pub fn evaluate_nmse(sys: &TrainedSystem) -> Result<Evaluation> {
    let cfg = &sys.config;
    let est = reconstructor(cfg, &sys.model)?;
    let n = cfg.n;
    let mut err = Vec::with_capacity(cfg.n_eval);
    let mut dcs = Vec::with_capacity(cfg.n_eval);
    let mut dq = Vec::with_capacity(cfg.n_eval);
    let mut cross = Vec::with_capacity(cfg.n_eval);
    let mut clamped = 0;
    // decoder outputs of measurement-domain schemes, keyed by received indices
    let mut memo: HashMap<Vec<u32>, Vec<f64>> = HashMap::new();
    let mut first = 0;
    while first < cfg.n_eval {
        let count = BATCH.min(cfg.n_eval - first);
        let batch = first / BATCH;
        let data = generate(cfg, &sys.model, Some(&est), Purpose::Evaluation, first, count)?;
        let mut chan = stream(cfg.seed, Purpose::Channel, batch as u64);
        let x_hat = decode_batch(sys, &est, &data, &mut chan, &mut memo, &mut clamped)?;
        for s in 0..count {
            let row = s * n..(s + 1) * n;
            let (x, xt, xh) = (&data.x[row.clone()], &data.x_tilde[row.clone()], &x_hat[row]);
            let (mut e, mut c, mut q, mut xc) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                e += (x[i] - xh[i]) * (x[i] - xh[i]);
                c += (x[i] - xt[i]) * (x[i] - xt[i]);
                q += (xt[i] - xh[i]) * (xt[i] - xh[i]);
                xc += 2.0 * (x[i] - xt[i]) * (xt[i] - xh[i]);
            }
            err.push(e);
            dcs.push(c);
            dq.push(q);
            cross.push(xc);
        }
        first += count;
    }
    let nmse = nmse_from_errors(&err, cfg.k);
    let nmse_db = to_db(nmse.mean);
    if !nmse_db.is_finite() {
        return Err(Error::Numerical(format!("NMSE {} has no finite dB value", nmse.mean)));
    }
    Ok(Evaluation {
        n_eval: cfg.n_eval,
        nmse,
        nmse_db,
        d_cs: Estimate::of(&dcs),
        d_q: Estimate::of(&dq),
        cross: Estimate::of(&cross),
        clamped,
    })
}

fn decode_batch(
    sys: &TrainedSystem,
    est: &Reconstructor,
    data: &Dataset,
    chan: &mut impl rand::Rng,
    memo: &mut HashMap<Vec<u32>, Vec<f64>>,
    clamped: &mut usize,
) -> Result<Vec<f64>> {
    let n = data.n;
    let count = data.len();
    let measurement = sys.config.scheme.is_measurement_domain();
    let targets = if measurement { &data.y } else { &data.x_tilde };
    let mut out = Vec::with_capacity(count * n);
    let mut finish = |received: Vec<u32>, decoded: &dyn Fn(&[u32]) -> Result<Vec<f64>>| -> Result<()> {
        if !measurement {
            out.extend(decoded(&received)?);
            return Ok(());
        }
        if let Some(v) = memo.get(&received) {
            out.extend_from_slice(v);
            return Ok(());
        }
        let x = est.reconstruct(&decoded(&received)?)?;
        out.extend_from_slice(&x);
        memo.insert(received, x);
        Ok(())
    };
    match &sys.quantizer {
        Quantizer::Single {
            codebook,
            channel,
            tables,
        } => {
            let (idx, _) = tables.encode_batch(targets)?;
            for &i in &idx {
                let j = channel.transmit(i as usize, chan)? as u32;
                finish(vec![j], &|r| Ok(codebook.vector(r[0] as usize).to_vec()))?;
            }
        }
        Quantizer::Multi(plan) => {
            let idx = plan.encode_batch(targets)?;
            for s in 0..count {
                let received = plan
                    .stages()
                    .iter()
                    .zip(&idx)
                    .map(|(st, stage_idx)| Ok(st.channel.transmit(stage_idx[s] as usize, chan)? as u32))
                    .collect::<Result<Vec<u32>>>()?;
                finish(received, &|r| {
                    plan.reconstruct(&r.iter().map(|&j| j as usize).collect::<Vec<_>>())
                })?;
            }
        }
        Quantizer::Ssc { codec, ideal_support } => {
            for xt in data.x_tilde.chunks_exact(n) {
                let sent = codec.encode(xt)?;
                let received = codec.transmit(&sent, sys.config.epsilon, *ideal_support, chan)?;
                let dec = codec.decode(&received)?;
                *clamped += usize::from(dec.clamped);
                out.extend(dec.x);
            }
        }
    }
    Ok(out)
}
