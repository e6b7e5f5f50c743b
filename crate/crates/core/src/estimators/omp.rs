//! Orthogonal matching pursuit.

use nalgebra::{DMatrix, DVector};

use crate::error::{config, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub x: Vec<f64>,
    /// Atoms in selection order.
    pub support: Vec<usize>,
    /// Set when a least-squares step fell back to the pseudo-inverse.
    pub rank_deficient: bool,
    /// Residual after each iteration.
    pub residuals: Vec<Vec<f64>>,
}

/// Greedy sparse recovery with at most `k` atoms. Ties in atom selection
/// go to the lowest column index. Stops early only if the residual is
/// exactly zero.
pub fn omp(y: &[f64], phi: &DMatrix<f64>, k: usize) -> Result<OmpResult> {
    let (m, n) = phi.shape();
    if y.len() != m {
        return Err(Error::Dimension {
            expected: m,
            actual: y.len(),
        });
    }
    if k > m {
        return config(format!("OMP sparsity {k} exceeds measurement count {m}"));
    }
    let y = DVector::from_column_slice(y);
    let mut residual = y.clone();
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut coef = DVector::zeros(0);
    let mut rank_deficient = false;
    let mut residuals = Vec::with_capacity(k);
    for _ in 0..k {
        if residual.iter().all(|&r| r == 0.0) {
            break;
        }
        let corr = phi.tr_mul(&residual);
        let mut best = None;
        let mut best_val = -1.0;
        for (c, v) in corr.iter().enumerate() {
            if support.contains(&c) {
                continue;
            }
            if v.abs() > best_val {
                best_val = v.abs();
                best = Some(c);
            }
        }
        let Some(atom) = best else { break };
        support.push(atom);
        let sub = phi.select_columns(support.iter());
        let (solution, deficient) = least_squares(&sub, &y)?;
        rank_deficient |= deficient;
        residual = &y - &sub * &solution;
        coef = solution;
        residuals.push(residual.iter().copied().collect());
    }
    let mut x = vec![0.0; n];
    for (&s, c) in support.iter().zip(coef.iter()) {
        x[s] = *c;
    }
    Ok(OmpResult {
        x,
        support,
        rank_deficient,
        residuals,
    })
}

fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let gram = a.tr_mul(a);
    let rhs = a.tr_mul(y);
    if let Some(chol) = gram.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
        if lo > 1e-7 * hi {
            let mut sol = chol.solve(&rhs);
            // one refinement step keeps the residual orthogonal to ~1e-15
            let r = y - a * &sol;
            sol += chol.solve(&a.tr_mul(&r));
            return Ok((sol, false));
        }
    }
    let pinv = a
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Numerical(format!("pseudo-inverse failed: {e}")))?;
    Ok((pinv * y, true))
}
