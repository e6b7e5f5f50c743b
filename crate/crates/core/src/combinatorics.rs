//! K-subsets of {0..N}: counting, lexicographic ranking, enumeration.

use crate::error::{config, Result};

/// C(n, k), or `None` on u64 overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// log2 C(n, k) accumulated as a sum of logs, so it never overflows.
pub fn log2_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "log2_binomial: k > n");
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).log2())
        .sum()
}

/// Lexicographic rank of a sorted K-subset of {0..n}.
pub fn rank(support: &[usize], n: usize) -> Result<u64> {
    let k = support.len();
    if support.windows(2).any(|w| w[0] >= w[1]) || support.last().is_some_and(|&s| s >= n) {
        return config("support must be strictly increasing and inside 0..n");
    }
    let mut r = 0u64;
    let mut prev = 0usize;
    for (pos, &s) in support.iter().enumerate() {
        // count subsets that agree so far but place a smaller element here
        for v in prev..s {
            r += binomial(n - v - 1, k - pos - 1).unwrap_or(u64::MAX);
        }
        prev = s + 1;
    }
    Ok(r)
}

/// Inverse of [`rank`].
pub fn unrank(mut r: u64, n: usize, k: usize) -> Result<Vec<usize>> {
    let total = binomial(n, k).ok_or_else(|| crate::Error::Config("C(n,k) overflows".into()))?;
    if r >= total {
        return config(format!("rank {r} out of range for C({n},{k}) = {total}"));
    }
    let mut out = Vec::with_capacity(k);
    let mut v = 0usize;
    for pos in 0..k {
        loop {
            let block = binomial(n - v - 1, k - pos - 1).unwrap_or(u64::MAX);
            if r < block {
                break;
            }
            r -= block;
            v += 1;
        }
        out.push(v);
        v += 1;
    }
    Ok(out)
}

/// All K-subsets in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Subsets {
    Subsets {
        n,
        current: if k <= n { Some((0..k).collect()) } else { None },
    }
}

pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}
