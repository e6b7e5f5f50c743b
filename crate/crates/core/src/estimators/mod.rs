//! Reconstruction of the sparse source from measurements.

mod mmse;
mod omp;
mod scalar;

pub use mmse::{mmse_exact, MmseEstimator, DEFAULT_ENUMERATION_CAP};
pub use omp::{omp, OmpResult};
pub use scalar::{lloyd_scalar, ScalarCodebook, ScalarTraining};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial;
use crate::error::{config, Result};
use crate::model::{SensingModel, SourceSpec};

/// How x~(y) is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Exact MMSE for small noisy instances, OMP otherwise.
    #[default]
    Auto,
    Exact,
    Omp,
    /// Perfect recovery: the encoder sees the source itself.
    Oracle,
}

/// Largest N for which `Auto` enumerates supports.
pub const AUTO_EXACT_MAX_N: usize = 16;

pub enum Reconstructor {
    Oracle,
    Omp { phi: DMatrix<f64>, k: usize },
    Exact(MmseEstimator),
}

impl Reconstructor {
    pub fn build(mode: EstimatorMode, model: &SensingModel, spec: &SourceSpec, cap: u64) -> Result<Self> {
        let exact_ok = model.sigma_w2() > 0.0
            && spec.n <= AUTO_EXACT_MAX_N
            && binomial(spec.n, spec.k).is_some_and(|c| c <= cap);
        match mode {
            EstimatorMode::Oracle => Ok(Self::Oracle),
            EstimatorMode::Exact => Ok(Self::Exact(MmseEstimator::new(model, spec, cap)?)),
            EstimatorMode::Auto if exact_ok => Ok(Self::Exact(MmseEstimator::new(model, spec, cap)?)),
            EstimatorMode::Auto | EstimatorMode::Omp => {
                if spec.k > model.m() {
                    return config(format!("K = {} exceeds M = {}", spec.k, model.m()));
                }
                Ok(Self::Omp {
                    phi: model.phi().clone(),
                    k: spec.k,
                })
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }

    /// Encoder-side estimate. `source` is consulted only by the oracle.
    pub fn estimate(&self, y: &[f64], source: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Oracle => Ok(source.to_vec()),
            _ => self.reconstruct(y),
        }
    }

    /// Decoder-side reconstruction from a measurement-domain vector.
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Oracle => config("the oracle estimator cannot reconstruct from measurements"),
            Self::Omp { phi, k } => Ok(omp(y, phi, *k)?.x),
            Self::Exact(est) => est.estimate(y),
        }
    }
}
