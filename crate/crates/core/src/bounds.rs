//! Asymptotic lower bounds on the end-to-end MSE.

use std::f64::consts::PI;

use crate::combinatorics::log2_binomial;
use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    /// Mutual coherence of the sensing matrix.
    pub mu: f64,
    pub sigma_w2: f64,
    /// Total rate in bits; real-valued.
    pub rate_bits: f64,
    /// Channel capacity in bits per use.
    pub capacity: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return config(format!("bounds need 1 <= K <= N, got K = {}, N = {}", self.k, self.n));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return config(format!("coherence {} outside [0, 1]", self.mu));
        }
        if !(self.sigma_w2 >= 0.0 && self.sigma_w2.is_finite()) {
            return config("sigma_w2 must be finite and non-negative");
        }
        if !self.rate_bits.is_finite() || !(0.0..=1.0).contains(&self.capacity) {
            return config("rate must be finite and capacity must lie in [0, 1]");
        }
        Ok(())
    }

    /// `2^{-2C(R - log2 C(N,K))/K}`.
    fn rate_term(&self) -> f64 {
        let excess = self.rate_bits - log2_binomial(self.n, self.k);
        (-2.0 * self.capacity * excess / self.k as f64).exp2()
    }
}

/// Gamma at `half_units / 2` for a positive integer `half_units`, from
/// `Gamma(1) = 1`, `Gamma(1/2) = sqrt(pi)` and `Gamma(x + 1) = x Gamma(x)`.
pub fn gamma_half(half_units: usize) -> f64 {
    assert!(half_units > 0, "gamma_half: argument must be positive");
    let (mut g, mut x2) = if half_units.is_multiple_of(2) { (1.0, 2) } else { (PI.sqrt(), 1) };
    while x2 < half_units {
        g *= x2 as f64 / 2.0;
        x2 += 2;
    }
    g
}

/// `sigma^2 / (1 + sigma^2 + (K + 1) mu)`.
pub fn c1(k: usize, mu: f64, sigma_w2: f64) -> f64 {
    sigma_w2 / (1.0 + sigma_w2 + (k as f64 + 1.0) * mu)
}

/// `2 ((K/2) Gamma(K/2))^{2/K} ((K + 2)/K)^{K/2}`.
pub fn c2(k: usize) -> f64 {
    assert!(k > 0, "c2: K must be positive");
    let kf = k as f64;
    2.0 * (kf / 2.0 * gamma_half(k)).powf(2.0 / kf) * ((kf + 2.0) / kf).powf(kf / 2.0)
}

/// Bound for noisy measurements; zero when `sigma_w2 = 0`.
pub fn bound_noisy(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let c1 = c1(inputs.k, inputs.mu, inputs.sigma_w2);
    Ok(inputs.k as f64 * c1 + c1 * c2(inputs.k) * inputs.rate_term())
}

/// Bound for noiseless measurements with perfect recovery.
pub fn bound_noiseless(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(c2(inputs.k) * inputs.rate_term())
}
