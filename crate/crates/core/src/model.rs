//! Sparse sources, random sensing matrices and noisy linear measurements.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Dimensions of an exactly K-sparse source in R^N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub n: usize,
    pub k: usize,
}

impl SourceSpec {
    /// `k = 0` is accepted so tests can exercise the degenerate all-zero
    /// source; experiments always use `k >= 1`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return config("source dimension must be positive");
        }
        if k > n {
            return config(format!("sparsity {k} exceeds dimension {n}"));
        }
        Ok(Self { n, k })
    }

    /// E[||X||^2]; each nonzero coefficient has unit variance.
    pub fn energy(&self) -> f64 {
        self.k as f64
    }
}

/// A dense vector together with its (sorted) support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub values: Vec<f64>,
    pub support: Vec<usize>,
}

impl SparseVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            support: Vec::new(),
        }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut values = vec![0.0; n];
        values[index] = 1.0;
        Self {
            values,
            support: vec![index],
        }
    }
}

/// Draws an exactly K-sparse vector: support uniform over all C(N,K)
/// subsets (partial Fisher-Yates), coefficients i.i.d. N(0,1).
pub fn generate_source<R: Rng + ?Sized>(spec: &SourceSpec, rng: &mut R) -> SparseVector {
    let mut positions: Vec<usize> = (0..spec.n).collect();
    for i in 0..spec.k {
        let j = rng.random_range(i..spec.n);
        positions.swap(i, j);
    }
    let mut support = positions[..spec.k].to_vec();
    support.sort_unstable();
    let mut values = vec![0.0; spec.n];
    for &s in &support {
        values[s] = StandardNormal.sample(rng);
    }
    SparseVector { values, support }
}

/// Known sensing matrix with unit-norm columns plus the measurement-noise
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingModel {
    phi: DMatrix<f64>,
    sigma_w2: f64,
}

impl SensingModel {
    /// Normalizes the columns of `phi` to unit l2 norm.
    pub fn new(mut phi: DMatrix<f64>, sigma_w2: f64) -> Result<Self> {
        if !(sigma_w2 >= 0.0 && sigma_w2.is_finite()) {
            return config(format!("noise variance must be finite and >= 0, got {sigma_w2}"));
        }
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return config("sensing matrix must be non-empty");
        }
        normalize_columns(&mut phi)?;
        Ok(Self { phi, sigma_w2 })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }

    pub fn with_sigma_w2(&self, sigma_w2: f64) -> Result<Self> {
        Self::new(self.phi.clone(), sigma_w2)
    }

    /// Number of measurements M.
    pub fn m(&self) -> usize {
        self.phi.nrows()
    }

    /// Ambient dimension N.
    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    /// Measurement rate M/N.
    pub fn alpha(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }
}

fn normalize_columns(phi: &mut DMatrix<f64>) -> Result<()> {
    for (c, mut col) in phi.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical(format!("column {c} has zero or non-finite norm")));
        }
        col /= norm;
    }
    Ok(())
}

/// Entries i.i.d. N(0, 1/M), then columns normalized to unit norm.
pub fn generate_sensing_matrix<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return config("sensing matrix dimensions must be positive");
    }
    if m > n {
        return config(format!("M = {m} exceeds N = {n}"));
    }
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("valid normal");
    let mut phi = DMatrix::from_fn(m, n, |_, _| normal.sample(rng));
    normalize_columns(&mut phi)?;
    Ok(phi)
}

/// y = Phi x + w with w ~ N(0, sigma_w2 I). The noiseless case draws no noise.
pub fn measure<R: Rng + ?Sized>(x: &[f64], model: &SensingModel, rng: &mut R) -> Result<Vec<f64>> {
    if x.len() != model.n() {
        return Err(Error::Dimension {
            expected: model.n(),
            actual: x.len(),
        });
    }
    let mut y = vec![0.0; model.m()];
    for (c, &xc) in x.iter().enumerate() {
        if xc != 0.0 {
            for (yr, &p) in y.iter_mut().zip(model.phi.column(c).iter()) {
                *yr += p * xc;
            }
        }
    }
    if model.sigma_w2 > 0.0 {
        let sd = model.sigma_w2.sqrt();
        for yr in y.iter_mut() {
            let w: f64 = StandardNormal.sample(rng);
            *yr += sd * w;
        }
    }
    Ok(y)
}

/// Largest normalized inner product between two distinct columns.
pub fn mutual_coherence(phi: &DMatrix<f64>) -> Result<f64> {
    if phi.ncols() < 2 {
        return config("mutual coherence needs at least two columns");
    }
    let norms: Vec<f64> = phi.column_iter().map(|c| c.norm()).collect();
    if let Some(c) = norms.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Numerical(format!("column {c} is zero")));
    }
    let mut mu: f64 = 0.0;
    for i in 0..phi.ncols() {
        for j in (i + 1)..phi.ncols() {
            let ip = phi.column(i).dot(&phi.column(j)).abs() / (norms[i] * norms[j]);
            mu = mu.max(ip);
        }
    }
    Ok(mu.min(1.0))
}

/// Phi^T y as a plain vector.
pub(crate) fn correlate(phi: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    phi.tr_mul(&DVector::from_column_slice(y))
}
