//! Score kernels of the encoder.
//!
//! Candidates are scored in chunks of `LANES`. A score is
//! `A_i + sum_k a_k e_ik` accumulated in the listed coordinate order with a
//! separate multiply and add per term, so the AVX2 and portable versions
//! agree bit for bit. Sparse rows read coordinate columns (`e_k` for all
//! candidates, contiguous); dense rows read the chunk-major layout, where
//! each chunk of `LANES` candidates stores `dim` runs of `LANES` values.

pub(crate) const LANES: usize = 8;
/// Dense rows scored together per chunk.
pub(crate) const TILE: usize = 4;

/// `(argmin_i, min)` of `base_i + sum_{(col, a) in terms} a col_i` over
/// one block; first index on ties, NaN when no score is below +inf.
pub(crate) fn sparse_argmin(base: &[f64], terms: &[(&[f64], f64)]) -> (usize, f64) {
    assert!(base.len().is_multiple_of(LANES) && terms.iter().all(|(col, _)| col.len() == base.len()));
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512f") {
        // SAFETY: AVX-512F is available and the slice lengths were checked.
        return unsafe { avx512::sparse_argmin(base, terms) };
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: AVX2 is available and the slice lengths were checked.
        return unsafe { avx2::sparse_argmin(base, terms) };
    }
    portable::sparse_argmin(base, terms)
}

/// Scores of `TILE` dense rows; `coefs[k][s]` multiplies coordinate `k`
/// for row `s`, and row `s` lands in `out[s * n..(s + 1) * n]`.
pub(crate) fn tile_scores(base: &[f64], chunked: &[f64], dim: usize, coefs: &[[f64; TILE]], out: &mut [f64]) {
    let n = base.len();
    assert!(n.is_multiple_of(LANES) && chunked.len() == n * dim && coefs.len() == dim && out.len() >= TILE * n);
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512f") {
        // SAFETY: AVX-512F is available and the slice lengths were checked.
        return unsafe { avx512::tile_scores(base, chunked, dim, coefs, out) };
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: AVX2 is available and the slice lengths were checked.
        return unsafe { avx2::tile_scores(base, chunked, dim, coefs, out) };
    }
    portable::tile_scores(base, chunked, dim, coefs, out)
}

/// `(argmin, min)` of precomputed scores, with the conventions of
/// [`sparse_argmin`].
pub(crate) fn argmin(values: &[f64]) -> (usize, f64) {
    assert!(values.len().is_multiple_of(LANES));
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512f") {
        // SAFETY: AVX-512F is available and the length was checked.
        return unsafe { avx512::sparse_argmin(values, &[]) };
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: AVX2 is available and the length was checked.
        return unsafe { avx2::sparse_argmin(values, &[]) };
    }
    portable::sparse_argmin(values, &[])
}

/// Smallest value over `(index, value)` candidates, lowest index on ties.
fn reduce(candidates: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    let (mut bi, mut bv) = (0usize, f64::INFINITY);
    for (i, v) in candidates {
        if v < bv || (v == bv && i < bi) {
            (bi, bv) = (i, v);
        }
    }
    if bv == f64::INFINITY {
        (0, f64::NAN)
    } else {
        (bi, bv)
    }
}

mod portable {
    use super::{reduce, LANES, TILE};

    pub(super) fn sparse_argmin(base: &[f64], terms: &[(&[f64], f64)]) -> (usize, f64) {
        let mut scan = Scan::new();
        for (c, b) in base.chunks_exact(LANES).enumerate() {
            let mut s: [f64; LANES] = b.try_into().unwrap();
            for &(col, a) in terms {
                for (l, v) in s.iter_mut().enumerate() {
                    *v += a * col[c * LANES + l];
                }
            }
            scan.push(c, &s);
        }
        scan.finish()
    }

    pub(super) fn tile_scores(base: &[f64], chunked: &[f64], dim: usize, coefs: &[[f64; TILE]], out: &mut [f64]) {
        let n = base.len();
        for (c, (b, e)) in base
            .chunks_exact(LANES)
            .zip(chunked.chunks_exact(dim * LANES))
            .enumerate()
        {
            for (s, row) in out.chunks_exact_mut(n).take(TILE).enumerate() {
                let dst = &mut row[c * LANES..(c + 1) * LANES];
                dst.copy_from_slice(b);
                for (col, a) in e.chunks_exact(LANES).zip(coefs) {
                    for (v, x) in dst.iter_mut().zip(col) {
                        *v += a[s] * x;
                    }
                }
            }
        }
    }

    /// Per-lane running minimum with the chunk where it occurred.
    struct Scan {
        value: [f64; LANES],
        chunk: [usize; LANES],
    }

    impl Scan {
        fn new() -> Self {
            Self {
                value: [f64::INFINITY; LANES],
                chunk: [0; LANES],
            }
        }

        fn push(&mut self, c: usize, s: &[f64; LANES]) {
            for l in 0..LANES {
                if s[l] < self.value[l] {
                    self.value[l] = s[l];
                    self.chunk[l] = c;
                }
            }
        }

        fn finish(&self) -> (usize, f64) {
            reduce((0..LANES).map(|l| (self.chunk[l] * LANES + l, self.value[l])))
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use super::{reduce, LANES, TILE};
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn sparse_argmin(base: &[f64], terms: &[(&[f64], f64)]) -> (usize, f64) {
        let chunks = base.len() / LANES;
        let bp = base.as_ptr();
        let mut best0 = _mm256_set1_pd(f64::INFINITY);
        let mut best1 = best0;
        let mut at0 = _mm256_setzero_pd();
        let mut at1 = at0;
        for c in 0..chunks {
            let mut s0 = _mm256_loadu_pd(bp.add(c * LANES));
            let mut s1 = _mm256_loadu_pd(bp.add(c * LANES + 4));
            for &(col, a) in terms {
                let av = _mm256_set1_pd(a);
                let e = col.as_ptr().add(c * LANES);
                s0 = _mm256_add_pd(s0, _mm256_mul_pd(av, _mm256_loadu_pd(e)));
                s1 = _mm256_add_pd(s1, _mm256_mul_pd(av, _mm256_loadu_pd(e.add(4))));
            }
            let cv = _mm256_set1_pd(c as f64);
            let m0 = _mm256_cmp_pd::<_CMP_LT_OQ>(s0, best0);
            let m1 = _mm256_cmp_pd::<_CMP_LT_OQ>(s1, best1);
            best0 = _mm256_blendv_pd(best0, s0, m0);
            best1 = _mm256_blendv_pd(best1, s1, m1);
            at0 = _mm256_blendv_pd(at0, cv, m0);
            at1 = _mm256_blendv_pd(at1, cv, m1);
        }
        let mut value = [0.0; LANES];
        let mut chunk = [0.0; LANES];
        _mm256_storeu_pd(value.as_mut_ptr(), best0);
        _mm256_storeu_pd(value.as_mut_ptr().add(4), best1);
        _mm256_storeu_pd(chunk.as_mut_ptr(), at0);
        _mm256_storeu_pd(chunk.as_mut_ptr().add(4), at1);
        reduce((0..LANES).map(|l| (chunk[l] as usize * LANES + l, value[l])))
    }

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn tile_scores(base: &[f64], chunked: &[f64], dim: usize, coefs: &[[f64; TILE]], out: &mut [f64]) {
        let n = base.len();
        let bp = base.as_ptr();
        let ep = chunked.as_ptr();
        let op = out.as_mut_ptr();
        for c in 0..n / LANES {
            let b0 = _mm256_loadu_pd(bp.add(c * LANES));
            let b1 = _mm256_loadu_pd(bp.add(c * LANES + 4));
            let mut acc = [[b0, b1]; TILE];
            let e = ep.add(c * dim * LANES);
            for (k, a) in coefs.iter().enumerate() {
                let x0 = _mm256_loadu_pd(e.add(k * LANES));
                let x1 = _mm256_loadu_pd(e.add(k * LANES + 4));
                for s in 0..TILE {
                    let av = _mm256_set1_pd(a[s]);
                    acc[s][0] = _mm256_add_pd(acc[s][0], _mm256_mul_pd(av, x0));
                    acc[s][1] = _mm256_add_pd(acc[s][1], _mm256_mul_pd(av, x1));
                }
            }
            for (s, pair) in acc.iter().enumerate() {
                let dst = op.add(s * n + c * LANES);
                _mm256_storeu_pd(dst, pair[0]);
                _mm256_storeu_pd(dst.add(4), pair[1]);
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use super::{reduce, LANES, TILE};
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn sparse_argmin(base: &[f64], terms: &[(&[f64], f64)]) -> (usize, f64) {
        match terms {
            [] => scan::<0>(base, []),
            [t0] => scan::<1>(base, [*t0]),
            [t0, t1] => scan::<2>(base, [*t0, *t1]),
            [t0, t1, t2] => scan::<3>(base, [*t0, *t1, *t2]),
            _ => scan_any(base, terms),
        }
    }

    /// Fixed term count, so the terms stay in registers. Chunks are taken
    /// in pairs to keep two compare-and-blend chains in flight.
    #[target_feature(enable = "avx512f")]
    unsafe fn scan<const T: usize>(base: &[f64], terms: [(&[f64], f64); T]) -> (usize, f64) {
        let chunks = base.len() / LANES;
        let bp = base.as_ptr();
        let cols: [*const f64; T] = std::array::from_fn(|k| terms[k].0.as_ptr());
        let coefs: [__m512d; T] = std::array::from_fn(|k| _mm512_set1_pd(terms[k].1));
        let score = |c: usize| {
            let mut s = _mm512_loadu_pd(bp.add(c * LANES));
            for k in 0..T {
                s = _mm512_add_pd(s, _mm512_mul_pd(coefs[k], _mm512_loadu_pd(cols[k].add(c * LANES))));
            }
            s
        };
        let inf = _mm512_set1_pd(f64::INFINITY);
        let (mut best0, mut best1) = (inf, inf);
        let (mut at0, mut at1) = (_mm512_setzero_pd(), _mm512_setzero_pd());
        let mut cv0 = _mm512_setzero_pd();
        let mut cv1 = _mm512_set1_pd(1.0);
        let two = _mm512_set1_pd(2.0);
        let mut c = 0;
        while c + 2 <= chunks {
            let s0 = score(c);
            let s1 = score(c + 1);
            let m0 = _mm512_cmp_pd_mask::<_CMP_LT_OQ>(s0, best0);
            let m1 = _mm512_cmp_pd_mask::<_CMP_LT_OQ>(s1, best1);
            best0 = _mm512_mask_blend_pd(m0, best0, s0);
            best1 = _mm512_mask_blend_pd(m1, best1, s1);
            at0 = _mm512_mask_blend_pd(m0, at0, cv0);
            at1 = _mm512_mask_blend_pd(m1, at1, cv1);
            cv0 = _mm512_add_pd(cv0, two);
            cv1 = _mm512_add_pd(cv1, two);
            c += 2;
        }
        if c < chunks {
            let s0 = score(c);
            let m0 = _mm512_cmp_pd_mask::<_CMP_LT_OQ>(s0, best0);
            best0 = _mm512_mask_blend_pd(m0, best0, s0);
            at0 = _mm512_mask_blend_pd(m0, at0, cv0);
        }
        finish(best0, best1, at0, at1)
    }

    #[target_feature(enable = "avx512f")]
    unsafe fn scan_any(base: &[f64], terms: &[(&[f64], f64)]) -> (usize, f64) {
        let bp = base.as_ptr();
        let mut best0 = _mm512_set1_pd(f64::INFINITY);
        let mut at0 = _mm512_setzero_pd();
        for c in 0..base.len() / LANES {
            let mut s = _mm512_loadu_pd(bp.add(c * LANES));
            for &(col, a) in terms {
                s = _mm512_add_pd(s, _mm512_mul_pd(_mm512_set1_pd(a), _mm512_loadu_pd(col.as_ptr().add(c * LANES))));
            }
            let m = _mm512_cmp_pd_mask::<_CMP_LT_OQ>(s, best0);
            best0 = _mm512_mask_blend_pd(m, best0, s);
            at0 = _mm512_mask_blend_pd(m, at0, _mm512_set1_pd(c as f64));
        }
        let inf = _mm512_set1_pd(f64::INFINITY);
        finish(best0, inf, at0, _mm512_setzero_pd())
    }

    #[target_feature(enable = "avx512f")]
    unsafe fn finish(best0: __m512d, best1: __m512d, at0: __m512d, at1: __m512d) -> (usize, f64) {
        let mut value = [0.0; 2 * LANES];
        let mut chunk = [0.0; 2 * LANES];
        _mm512_storeu_pd(value.as_mut_ptr(), best0);
        _mm512_storeu_pd(value.as_mut_ptr().add(LANES), best1);
        _mm512_storeu_pd(chunk.as_mut_ptr(), at0);
        _mm512_storeu_pd(chunk.as_mut_ptr().add(LANES), at1);
        reduce((0..2 * LANES).map(|j| (chunk[j] as usize * LANES + j % LANES, value[j])))
    }

    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn tile_scores(base: &[f64], chunked: &[f64], dim: usize, coefs: &[[f64; TILE]], out: &mut [f64]) {
        let n = base.len();
        let chunks = n / LANES;
        let bp = base.as_ptr();
        let ep = chunked.as_ptr();
        let op = out.as_mut_ptr();
        let mut c = 0;
        // two chunks per pass: 2 * TILE independent accumulators
        while c + 2 <= chunks {
            let b0 = _mm512_loadu_pd(bp.add(c * LANES));
            let b1 = _mm512_loadu_pd(bp.add((c + 1) * LANES));
            let mut acc = [[b0, b1]; TILE];
            let e0 = ep.add(c * dim * LANES);
            let e1 = e0.add(dim * LANES);
            for (k, a) in coefs.iter().enumerate() {
                let x0 = _mm512_loadu_pd(e0.add(k * LANES));
                let x1 = _mm512_loadu_pd(e1.add(k * LANES));
                for s in 0..TILE {
                    let av = _mm512_set1_pd(a[s]);
                    acc[s][0] = _mm512_add_pd(acc[s][0], _mm512_mul_pd(av, x0));
                    acc[s][1] = _mm512_add_pd(acc[s][1], _mm512_mul_pd(av, x1));
                }
            }
            for (s, pair) in acc.iter().enumerate() {
                let dst = op.add(s * n + c * LANES);
                _mm512_storeu_pd(dst, pair[0]);
                _mm512_storeu_pd(dst.add(LANES), pair[1]);
            }
            c += 2;
        }
        if c < chunks {
            let mut acc = [_mm512_loadu_pd(bp.add(c * LANES)); TILE];
            let e = ep.add(c * dim * LANES);
            for (k, a) in coefs.iter().enumerate() {
                let x = _mm512_loadu_pd(e.add(k * LANES));
                for s in 0..TILE {
                    acc[s] = _mm512_add_pd(acc[s], _mm512_mul_pd(_mm512_set1_pd(a[s]), x));
                }
            }
            for (s, v) in acc.iter().enumerate() {
                _mm512_storeu_pd(op.add(s * n + c * LANES), *v);
            }
        }
    }
}
