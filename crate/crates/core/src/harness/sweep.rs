//! Parameter sweeps and their CSV output.

use std::collections::HashMap;
use std::time::Instant;

use crate::bounds::{bound_noiseless, bound_noisy, BoundInputs};
use crate::error::Result;

use super::config::{ExperimentConfig, Scheme, SweepConfig};
use super::experiment::{evaluate_nmse, to_db, train_system, Evaluation, TrainedSystem};

pub const RECORD_HEADER: &str = "scheme,n,k,m,rate,epsilon,sigma_w2,nmse_db,n_eval,seed,wall_seconds";
pub const STATS_HEADER: &str = "scheme,n,k,m,rate,epsilon,sigma_w2,status,nmse,nmse_stderr,nmse_db,d_cs_db,d_q,cross,cross_stderr,clamped,train_distortion,train_monotone,train_seconds,eval_seconds";

/// Everything known about one grid point.
pub struct PointOutcome {
    pub scheme: Scheme,
    pub value: f64,
    /// Absent when the point's configuration was invalid.
    pub config: Option<ExperimentConfig>,
    pub result: Result<PointResult>,
}

pub struct PointResult {
    pub eval: Evaluation,
    pub train_distortion: Option<f64>,
    pub train_monotone: bool,
    pub train_seconds: f64,
    pub eval_seconds: f64,
}

/// Trains and evaluates one configuration. Noisy-channel designs start from
/// `noiseless`, the design of the same point on a clean channel, when
/// given.
pub fn run_point(cfg: &ExperimentConfig, noiseless: Option<&TrainedSystem>) -> Result<(TrainedSystem, PointResult)> {
    let t0 = Instant::now();
    let sys = train_system(cfg, noiseless)?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let eval = evaluate_nmse(&sys)?;
    let result = PointResult {
        eval,
        train_distortion: sys.report.final_distortion(),
        train_monotone: sys.report.is_monotone(),
        train_seconds,
        eval_seconds: t1.elapsed().as_secs_f64(),
    };
    Ok((sys, result))
}

/// Runs every `(scheme, value)` point, schemes outermost. A failing point
/// is recorded and the sweep moves on. `progress` sees each outcome as it
/// completes.
pub fn run_sweep(sweep: &SweepConfig, mut progress: impl FnMut(&PointOutcome)) -> Vec<PointOutcome> {
    let mut out = Vec::new();
    for &scheme in &sweep.schemes {
        // noiseless designs of this scheme, keyed by their configuration
        let mut clean: HashMap<String, TrainedSystem> = HashMap::new();
        for &value in &sweep.values {
            let cfg = match sweep.point(scheme, value) {
                Ok(c) => c,
                Err(e) => {
                    let o = PointOutcome {
                        scheme,
                        value,
                        config: None,
                        result: Err(e),
                    };
                    progress(&o);
                    out.push(o);
                    continue;
                }
            };
            let result = if cfg.scheme.is_ssc() || cfg.is_noiseless_channel() {
                run_point(&cfg, None).map(|(sys, r)| {
                    if !cfg.scheme.is_ssc() {
                        clean.insert(cfg.to_toml(), sys);
                    }
                    r
                })
            } else {
                let key = cfg.noiseless().to_toml();
                let init = match clean.remove(&key) {
                    Some(sys) => Ok(sys),
                    None => train_system(&cfg.noiseless(), None),
                };
                init.and_then(|sys| {
                    let r = run_point(&cfg, Some(&sys)).map(|(_, r)| r);
                    clean.insert(key, sys);
                    r
                })
            };
            let o = PointOutcome {
                scheme,
                value,
                config: Some(cfg),
                result,
            };
            progress(&o);
            out.push(o);
        }
    }
    out
}

fn key_columns(o: &PointOutcome) -> String {
    match &o.config {
        Some(c) => format!("{},{},{},{},{},{},{}", c.scheme, c.n, c.k, c.m(), c.rate, c.epsilon, c.sigma_w2),
        None => format!("{},,,,,,", o.scheme),
    }
}

/// Records of the successful points. The `wall_seconds` column is left
/// empty unless `wall_clock` is set, which keeps the file reproducible.
pub fn records_csv(outcomes: &[PointOutcome], wall_clock: bool) -> String {
    let mut out = format!("{RECORD_HEADER}\n");
    for o in outcomes {
        let (Some(cfg), Ok(r)) = (&o.config, &o.result) else {
            continue;
        };
        let wall = if wall_clock {
            format!("{}", r.train_seconds + r.eval_seconds)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            key_columns(o),
            r.eval.nmse_db,
            r.eval.n_eval,
            cfg.seed,
            wall
        ));
    }
    out
}

/// Every point including failures, with error bars, the distortion split
/// and timings.
pub fn stats_csv(outcomes: &[PointOutcome]) -> String {
    let mut out = format!("{STATS_HEADER}\n");
    for o in outcomes {
        let keys = key_columns(o);
        match (&o.config, &o.result) {
            (Some(cfg), Ok(r)) => {
                let e = &r.eval;
                out.push_str(&format!(
                    "{keys},ok,{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    e.nmse.mean,
                    e.nmse.stderr,
                    e.nmse_db,
                    to_db(e.d_cs.mean / cfg.k as f64),
                    e.d_q.mean,
                    e.cross.mean,
                    e.cross.stderr,
                    e.clamped,
                    r.train_distortion.map_or(String::new(), |d| d.to_string()),
                    r.train_monotone,
                    r.train_seconds,
                    r.eval_seconds
                ));
            }
            (_, Err(err)) => {
                let msg = format!("{err} (axis value {})", o.value).replace([',', '\n'], ";");
                out.push_str(&format!("{keys},error: {msg},,,,,,,,,,,,\n"));
            }
            (None, Ok(_)) => unreachable!("points without a configuration never run"),
        }
    }
    out
}

/// Lower-bound curve as `rate,bound,bound_db` rows, where `bound_db` is the
/// bound on the NMSE (`bound / K`) in dB. The noiseless bound is used when
/// `sigma_w2 = 0`.
pub fn bound_csv(template: &BoundInputs, rates: &[f64]) -> Result<String> {
    let mut out = String::from("rate,bound,bound_db\n");
    for &r in rates {
        let b = BoundInputs {
            rate_bits: r,
            ..*template
        };
        let d = if b.sigma_w2 > 0.0 {
            bound_noisy(&b)?
        } else {
            bound_noiseless(&b)?
        };
        out.push_str(&format!("{r},{d},{}\n", to_db(d / b.k as f64)));
    }
    Ok(out)
}
