//! Deterministic statistics helpers.
//!
//! Monte Carlo reductions here are built from a fixed-shape pairwise
//! summation tree keyed by path index, so estimates are bit-identical for
//! any worker count and across repeated runs.

use rayon::prelude::*;

/// Pairwise (cascade) summation over a slice, in index order.
///
/// The reduction tree depends only on the slice length, never on thread
/// scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
///
/// Returns `(0, 0)` on an empty slice and `(x, 0)` on a singleton.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut sq = vec![0.0; n];
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        sq[i] = d * d;
    }
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Fold a vector of partial accumulators with a fixed pairwise tree.
pub fn fold_pairwise<A, C: Fn(A, A) -> A>(mut parts: Vec<A>, combine: &C) -> Option<A> {
    if parts.is_empty() {
        return None;
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Number of paths each block of the deterministic reduction covers.
pub const BLOCK: usize = 256;

/// Run `per_block` over `0..n` in fixed blocks of [`BLOCK`] indices, in
/// parallel, and combine the block results.
///
/// With `deterministic` set, blocks are collected in block order and folded
/// with a fixed pairwise tree, so the result does not depend on the rayon
/// pool size. Without it, blocks are combined in whatever order they finish.
pub fn parallel_blocks<A, F, C>(n: usize, per_block: F, combine: C, deterministic: bool) -> Option<A>
where
    A: Send,
    F: Fn(std::ops::Range<usize>) -> A + Sync,
    C: Fn(A, A) -> A + Sync + Send,
{
    if n == 0 {
        return None;
    }
    let n_blocks = n.div_ceil(BLOCK);
    let block_range = |b: usize| (b * BLOCK)..(((b + 1) * BLOCK).min(n));
    if deterministic {
        let parts: Vec<A> = (0..n_blocks)
            .into_par_iter()
            .map(|b| per_block(block_range(b)))
            .collect();
        fold_pairwise(parts, &combine)
    } else {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| per_block(block_range(b)))
            .reduce_with(combine)
    }
}

/// Ordinary least squares fit of `y = a + slope * x`.
///
/// Returns `(slope, slope_standard_error)`; the standard error is zero when
/// the fit is exact or there are only two points.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    assert_eq!(n, y.len());
    assert!(n >= 2, "need at least two points for a slope");
    let xm = pairwise_sum(x) / n as f64;
    let ym = pairwise_sum(y) / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - xm;
        sxx += dx * dx;
        sxy += dx * (y[i] - ym);
    }
    let slope = sxy / sxx;
    if n == 2 {
        return (slope, 0.0);
    }
    let intercept = ym - slope * xm;
    let mut ss_res = 0.0;
    for i in 0..n {
        let r = y[i] - intercept - slope * x[i];
        ss_res += r * r;
    }
    let se = (ss_res / (n - 2) as f64 / sxx).sqrt();
    (slope, se)
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic Kolmogorov–Smirnov critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((-0.5 * (alpha / 2.0).ln()) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_abs_diff_eq!(pairwise_sum(&xs), 4950.0);
    }

    #[test]
    fn mean_se_of_two_numbers() {
        // Mean 0.2, sample sd sqrt(0.02), se 0.1.
        let (m, se) = mean_se(&[0.1, 0.3]);
        assert_abs_diff_eq!(m, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(se, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn parallel_blocks_is_thread_count_independent() {
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|i| ((i * 2654435761) % 1000) as f64 / 997.0).collect();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                parallel_blocks(
                    n,
                    |r| pairwise_sum(&xs[r]),
                    |a, b| a + b,
                    true,
                )
                .unwrap()
            })
        };
        let s1 = run(1);
        let s8 = run(8);
        assert_eq!(s1.to_bits(), s8.to_bits());
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (slope, se) = ols_slope(&x, &y);
        assert_abs_diff_eq!(slope, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(se, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ks_detects_wrong_law() {
        // Uniform samples tested against an exponential CDF must reject.
        let mut samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut samples, |x| 1.0 - (-x).exp());
        assert!(d > ks_critical(1000, 1e-3));
    }

    #[test]
    fn ks_accepts_matching_law() {
        let mut samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut samples, |x| x.clamp(0.0, 1.0));
        assert!(d < ks_critical(1000, 1e-3));
    }
}
