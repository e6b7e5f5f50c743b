//! Exact conditional-mean estimator for a K-sparse Gaussian source.
//!
//! The posterior is a mixture over all C(N,K) supports. For support S with
//! `B_S = I + Phi_S^T Phi_S / s2`:
//!
//! * `E[X_S | y, S] = B_S^{-1} Phi_S^T y / s2`
//! * `log p(y | S) = -1/2 log det B_S - 1/2 (||y||^2 - z_S^T m_S) / s2 + const`
//!
//! where `z_S = Phi_S^T y`. The Cholesky factor of each `B_S` depends only
//! on the sensing matrix and is computed once.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::combinatorics::{binomial, subsets};
use crate::error::{config, Error, Result};
use crate::model::{correlate, SensingModel, SourceSpec};

/// Default limit on the number of supports enumerated.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

struct SupportTerm {
    indices: Vec<usize>,
    chol: Cholesky<f64, Dyn>,
    half_logdet: f64,
}

pub struct MmseEstimator {
    phi: DMatrix<f64>,
    sigma_w2: f64,
    n: usize,
    terms: Vec<SupportTerm>,
}

impl MmseEstimator {
    pub fn new(model: &SensingModel, spec: &SourceSpec, cap: u64) -> Result<Self> {
        if model.n() != spec.n {
            return Err(Error::Dimension {
                expected: spec.n,
                actual: model.n(),
            });
        }
        let s2 = model.sigma_w2();
        if s2 <= 0.0 {
            return config(
                "exact MMSE needs measurement noise > 0; use the OMP estimator for noiseless measurements",
            );
        }
        let count = binomial(spec.n, spec.k).unwrap_or(u64::MAX);
        if count > cap {
            return config(format!(
                "C({}, {}) = {count} supports exceeds the enumeration cap {cap}",
                spec.n, spec.k
            ));
        }
        let phi = model.phi().clone();
        let mut terms = Vec::with_capacity(count as usize);
        for indices in subsets(spec.n, spec.k) {
            let sub = phi.select_columns(indices.iter());
            let b = DMatrix::identity(spec.k, spec.k) + sub.tr_mul(&sub) / s2;
            let chol = Cholesky::new(b)
                .ok_or_else(|| Error::Numerical("posterior precision not positive definite".into()))?;
            let half_logdet = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            terms.push(SupportTerm {
                indices,
                chol,
                half_logdet,
            });
        }
        Ok(Self {
            phi,
            sigma_w2: s2,
            n: spec.n,
            terms,
        })
    }

    pub fn support_count(&self) -> usize {
        self.terms.len()
    }

    /// Per-support posterior weights and means, in lexicographic support order.
    fn mixture(&self, y: &[f64]) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        if y.len() != self.phi.nrows() {
            return Err(Error::Dimension {
                expected: self.phi.nrows(),
                actual: y.len(),
            });
        }
        let z = correlate(&self.phi, y);
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let mut logw = Vec::with_capacity(self.terms.len());
        let mut means = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let zs = DVector::from_iterator(term.indices.len(), term.indices.iter().map(|&i| z[i]));
            let mean = term.chol.solve(&(&zs / self.sigma_w2));
            let quad = (y2 - zs.dot(&mean)) / self.sigma_w2;
            logw.push(-term.half_logdet - 0.5 * quad);
            means.push(mean);
        }
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::Numerical("non-finite support evidence".into()));
        }
        let mut w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        Ok((w, means))
    }

    /// Posterior support probabilities p(S | y).
    pub fn posterior_weights(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mixture(y)?.0)
    }

    /// E[X | Y = y].
    pub fn estimate(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (w, means) = self.mixture(y)?;
        let mut x = vec![0.0; self.n];
        for ((term, wt), mean) in self.terms.iter().zip(&w).zip(&means) {
            for (&i, m) in term.indices.iter().zip(mean.iter()) {
                x[i] += wt * m;
            }
        }
        Ok(x)
    }
}

/// One-shot exact MMSE estimate with the default enumeration cap.
pub fn mmse_exact(y: &[f64], model: &SensingModel, spec: &SourceSpec) -> Result<Vec<f64>> {
    MmseEstimator::new(model, spec, DEFAULT_ENUMERATION_CAP)?.estimate(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_sensing_matrix;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    fn example_model(s2: f64) -> SensingModel {
        let phi = DMatrix::from_row_slice(2, 3, &[0.9924, 0.8961, 0.7201, 0.1230, 0.4439, 0.6939]);
        SensingModel::new(phi, s2).unwrap()
    }

    #[test]
    fn zero_observation_gives_zero_estimate() {
        let model = example_model(0.04);
        let x = mmse_exact(&[0.0, 0.0], &model, &SourceSpec::new(3, 1).unwrap()).unwrap();
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn noise_dominated_posterior_collapses_to_prior_mean() {
        let model = example_model(1e6);
        let x = mmse_exact(&[1.3, -0.4], &model, &SourceSpec::new(3, 1).unwrap()).unwrap();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "norm {norm}");
    }

    #[test]
    fn noiseless_model_is_rejected() {
        let model = example_model(0.0);
        assert!(matches!(
            mmse_exact(&[1.0, 0.0], &model, &SourceSpec::new(3, 1).unwrap()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let phi = generate_sensing_matrix(20, 10, &mut stream(1, Purpose::Sensing, 0)).unwrap();
        let model = SensingModel::new(phi, 0.1).unwrap();
        assert!(MmseEstimator::new(&model, &SourceSpec::new(20, 3).unwrap(), 1000).is_err());
        assert!(MmseEstimator::new(&model, &SourceSpec::new(20, 3).unwrap(), 1140).is_ok());
    }

    /// Independent route for K = 1: integrate over the single coefficient a
    /// with the trapezoid rule, p(y|S) = int N(y; phi a, s2 I) N(a; 0, 1) da.
    fn quadrature_oracle(phi: &DMatrix<f64>, s2: f64, y: &[f64]) -> Vec<f64> {
        let h = 1e-3;
        let steps = 30_000;
        let mut evid = Vec::new();
        let mut first = Vec::new();
        for s in 0..phi.ncols() {
            let (mut p, mut m1) = (0.0, 0.0);
            for t in 0..=steps {
                let a = -15.0 + t as f64 * h;
                let r2: f64 = (0..phi.nrows()).map(|r| (y[r] - phi[(r, s)] * a).powi(2)).sum();
                let f = (-0.5 * r2 / s2 - 0.5 * a * a).exp();
                let wt = if t == 0 || t == steps { 0.5 } else { 1.0 };
                p += wt * f;
                m1 += wt * f * a;
            }
            evid.push(p);
            first.push(m1);
        }
        let total: f64 = evid.iter().sum();
        (0..phi.ncols()).map(|s| first[s] / total).collect()
    }

    #[test]
    fn matches_quadrature_on_three_supports() {
        let model = example_model(0.04);
        let est = MmseEstimator::new(&model, &SourceSpec::new(3, 1).unwrap(), 10).unwrap();
        let mut rng = stream(11, Purpose::Training, 0);
        for _ in 0..20 {
            let y = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let fast = est.estimate(&y).unwrap();
            let slow = quadrature_oracle(model.phi(), 0.04, &y);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{fast:?} vs {slow:?}");
            }
            let w = est.posterior_weights(&y).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_support_reduces_to_linear_gaussian() {
        let phi = generate_sensing_matrix(4, 3, &mut stream(2, Purpose::Sensing, 0)).unwrap();
        let s2 = 0.3;
        let model = SensingModel::new(phi.clone(), s2).unwrap();
        let y = [0.4, -1.1, 0.7];
        let x = mmse_exact(&y, &model, &SourceSpec::new(4, 4).unwrap()).unwrap();
        let phi = model.phi();
        let a = DMatrix::identity(4, 4) + phi.tr_mul(phi) / s2;
        let b = phi.tr_mul(&DVector::from_column_slice(&y)) / s2;
        let direct = a.lu().solve(&b).unwrap();
        for (u, v) in x.iter().zip(direct.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn small_noise_is_stable() {
        // weights span hundreds of orders of magnitude; must stay finite
        let phi = generate_sensing_matrix(8, 4, &mut stream(3, Purpose::Sensing, 0)).unwrap();
        let model = SensingModel::new(phi, 1e-8).unwrap();
        let y = [3.0, -2.0, 1.0, 0.5];
        let x = mmse_exact(&y, &model, &SourceSpec::new(8, 2).unwrap()).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
