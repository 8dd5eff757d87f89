//! Independent recomputation of the closed-form quantities by definitional
//! routes: matrix series for `Z`, visit-count differences for the limiting
//! distance, and trajectory sampling for expected visit counts.
//!
//! Nothing in here calls the LU-based code paths it is meant to check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::StochasticMatrix;
use crate::linalg::DenseMatrix;

/// A matrix series evaluated to a fixed number of terms.
#[derive(Debug, Clone)]
pub struct SeriesEstimate {
    pub value: DenseMatrix,
    pub terms_used: usize,
    /// Max-norm of the last change applied to `value`.
    pub last_increment_norm: f64,
}

/// `sum_{k=0}^{K} (P - W)^k` by running accumulation. Converges only for
/// aperiodic irreducible chains.
pub fn z_series_truncated(p: &StochasticMatrix, w: &DenseMatrix, terms: usize) -> SeriesEstimate {
    let d = p.matrix().add_scaled(w, -1.0);
    let mut term = DenseMatrix::identity(p.dim());
    let mut sum = term.clone();
    let mut last = term.max_abs();
    for _ in 0..terms {
        term = &term * &d;
        sum.add_assign(&term);
        last = term.max_abs();
    }
    SeriesEstimate {
        value: sum,
        terms_used: terms + 1,
        last_increment_norm: last,
    }
}

/// Cesàro sum of the same series: the mean of the partial sums
/// `S_1, ..., S_K`, where `S_m` has `m` terms. Converges for every
/// irreducible chain, periodic ones included, at rate roughly `1/K`.
pub fn z_series_cesaro(p: &StochasticMatrix, w: &DenseMatrix, terms: usize) -> SeriesEstimate {
    let terms = terms.max(1);
    let n = p.dim();
    let d = p.matrix().add_scaled(w, -1.0);
    let mut term = DenseMatrix::identity(n);
    let mut partial = DenseMatrix::zeros(n, n);
    let mut total = DenseMatrix::zeros(n, n);
    let mut prev_mean = DenseMatrix::zeros(n, n);
    let mut last = 0.0;
    for m in 1..=terms {
        partial.add_assign(&term);
        total.add_assign(&partial);
        term = &term * &d;
        if m + 1 >= terms {
            let mean = total.scale(1.0 / m as f64);
            last = mean.max_abs_diff(&prev_mean);
            prev_mean = mean;
        }
    }
    SeriesEstimate {
        value: prev_mean,
        terms_used: terms,
        last_increment_norm: last,
    }
}

/// `(1/K) sum_{k<K} P^k`, which tends to `W` for every irreducible chain.
pub(crate) fn cesaro_power_average(p: &StochasticMatrix, terms: usize) -> DenseMatrix {
    let n = p.dim();
    let mut power = DenseMatrix::identity(n);
    let mut sum = DenseMatrix::zeros(n, n);
    for _ in 0..terms {
        sum.add_assign(&power);
        power = &power * p.matrix();
    }
    sum.scale(1.0 / terms as f64)
}

/// `He^(k)(u, w) - He^(k)(v, w)` for `k = 0..=k_max`, propagating the two
/// start distributions one step at a time.
pub fn he_difference_limit(
    p: &StochasticMatrix,
    u: usize,
    v: usize,
    w: usize,
    k_max: usize,
) -> Vec<f64> {
    he_difference_rows(p, u, v, k_max)
        .into_iter()
        .map(|row| row[w])
        .collect()
}

/// Like [`he_difference_limit`] but for every target state at once; element
/// `k` of the result is the difference of rows `u` and `v` of `N^(k)`.
pub fn he_difference_rows(p: &StochasticMatrix, u: usize, v: usize, k_max: usize) -> Vec<Vec<f64>> {
    let n = p.dim();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    x[u] = 1.0;
    y[v] = 1.0;
    let mut acc: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(acc.clone());
    for _ in 0..k_max {
        x = p.matrix().left_mul_vec(&x);
        y = p.matrix().left_mul_vec(&y);
        for ((a, xi), yi) in acc.iter_mut().zip(&x).zip(&y) {
            *a += xi - yi;
        }
        out.push(acc.clone());
    }
    out
}

/// Sample statistics of visit counts over simulated trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryStats {
    pub start: usize,
    pub k: usize,
    pub trials: usize,
    pub mean_visits: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub seed: u64,
}

/// One cell of a Monte Carlo comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellCheck {
    pub state: usize,
    pub expected: f64,
    pub mean: f64,
    pub standard_error: f64,
    /// `|mean - expected| / standard_error`; zero-variance cells report 0
    /// on exact agreement and infinity otherwise.
    pub z_score: f64,
}

impl CellCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score <= sigmas
    }
}

impl TrajectoryStats {
    /// Compares against exact expected visits (row `start` of `N^(k)`).
    pub fn compare(&self, expected: &[f64]) -> Vec<CellCheck> {
        expected
            .iter()
            .enumerate()
            .map(|(state, &e)| {
                let mean = self.mean_visits[state];
                let se = self.standard_error[state];
                let gap = (mean - e).abs();
                let z_score = if se > 0.0 {
                    gap / se
                } else if gap <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                };
                CellCheck {
                    state,
                    expected: e,
                    mean,
                    standard_error: se,
                    z_score,
                }
            })
            .collect()
    }
}

/// Trials per block; blocks are the unit of parallel work.
const BLOCK: usize = 4096;

/// Simulates `trials` trajectories of `k` steps from `start` and counts
/// visits over steps `0..=k`.
///
/// Trial `t` draws from a ChaCha8 stream selected by `t` under the given
/// seed, and visit counts are summed as integers, so the result does not
/// depend on how many threads run.
pub fn monte_carlo_he(
    p: &StochasticMatrix,
    start: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> TrajectoryStats {
    assert!(trials >= 1, "need at least one trial");
    assert!(start < p.dim(), "start state out of range");
    let n = p.dim();
    let cumulative: Vec<Vec<f64>> = p
        .matrix()
        .row_iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |s, &x| {
                    *s += x;
                    Some(*s)
                })
                .collect()
        })
        .collect();

    let blocks: Vec<(Vec<u64>, Vec<u64>)> = (0..trials.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut sum = vec![0u64; n];
            let mut sum_sq = vec![0u64; n];
            let mut counts = vec![0u64; n];
            for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                counts.fill(0);
                let mut state = start;
                counts[state] += 1;
                for _ in 0..k {
                    state = sample_next(&cumulative[state], &mut rng);
                    counts[state] += 1;
                }
                debug_assert_eq!(counts.iter().sum::<u64>(), k as u64 + 1);
                for ((s, sq), &c) in sum.iter_mut().zip(&mut sum_sq).zip(&counts) {
                    *s += c;
                    *sq += c * c;
                }
            }
            (sum, sum_sq)
        })
        .collect();

    let mut sum = vec![0u64; n];
    let mut sum_sq = vec![0u64; n];
    for (s, sq) in blocks {
        for i in 0..n {
            sum[i] += s[i];
            sum_sq[i] += sq[i];
        }
    }
    assert_eq!(
        sum.iter().sum::<u64>(),
        (k as u64 + 1) * trials as u64,
        "every step visits exactly one state"
    );

    let t = trials as f64;
    let mean_visits: Vec<f64> = sum.iter().map(|&s| s as f64 / t).collect();
    let standard_error = sum_sq
        .iter()
        .zip(&mean_visits)
        .map(|(&sq, &m)| {
            if trials < 2 {
                return 0.0;
            }
            let var = ((sq as f64 - t * m * m) / (t - 1.0)).max(0.0);
            (var / t).sqrt()
        })
        .collect();

    TrajectoryStats {
        start,
        k,
        trials,
        mean_visits,
        standard_error,
        seed,
    }
}

fn sample_next<R: Rng>(cumulative: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    let i = cumulative.partition_point(|&c| c <= r);
    // guard against r landing past the last positive entry by rounding
    let mut i = i.min(cumulative.len() - 1);
    while i > 0 && cumulative[i] == cumulative[i - 1] {
        i -= 1;
    }
    i
}
