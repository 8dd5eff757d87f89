//! Small named chains with hand-checkable answers, and seeded generators of
//! random chains for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::chain::StochasticMatrix;
use crate::linalg::DenseMatrix;

fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> StochasticMatrix {
    StochasticMatrix::new(DenseMatrix::from_rows(&rows).expect("fixture shape"))
        .expect("fixture is stochastic")
}

fn normalize(mut w: DenseMatrix) -> StochasticMatrix {
    for i in 0..w.rows() {
        let s: f64 = w.row(i).iter().sum();
        w.row_mut(i).iter_mut().for_each(|x| *x /= s);
    }
    StochasticMatrix::new(w).expect("generated weights are normalizable")
}

/// Deterministic two-cycle `[[0, 1], [1, 0]]`; period 2.
pub fn flip_chain() -> StochasticMatrix {
    from_rows([[0.0, 1.0], [1.0, 0.0]])
}

/// `[[.5, .5], [.5, .5]]`, which equals its own limit matrix.
pub fn uniform_two_state() -> StochasticMatrix {
    from_rows([[0.5, 0.5], [0.5, 0.5]])
}

/// Four states, `1 -> {2, 3}` with probability one half each, `2 -> 4`,
/// `3 -> 4`, `4 -> 1`. Irreducible with period 3; rows 1 and 4 of
/// `I + P + P^2` coincide, so the horizon-2 distance is only a pseudometric.
pub fn period_three_counterexample() -> StochasticMatrix {
    from_rows([
        [0.0, 0.5, 0.5, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
}

/// Default `1..=n` labels.
pub fn numeric_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.1..1.0)
}

/// Irreducible aperiodic chain: a directed ring, a self-loop at state 0, and
/// each remaining entry present with probability one half.
pub fn random_aperiodic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StochasticMatrix {
    assert!(n >= 1);
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.5) {
                b[(i, j)] = weight(rng);
            }
        }
        b[(i, (i + 1) % n)] = weight(rng);
    }
    b[(0, 0)] = weight(rng);
    normalize(b)
}

/// Irreducible chain whose states split into `d` classes visited cyclically
/// (state `i` is in class `i mod d`). The period is a multiple of `d`.
///
/// # Panics
/// Panics unless `d >= 1` and `n` is a positive multiple of `d`.
pub fn random_periodic<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> StochasticMatrix {
    assert!(d >= 1 && n >= d && n % d == 0, "n must be a multiple of d");
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if j % d == (i + 1) % d && rng.random_bool(0.5) {
                b[(i, j)] = weight(rng);
            }
        }
        b[(i, (i + 1) % n)] = weight(rng);
    }
    normalize(b)
}

/// Arbitrary chain, usually reducible: every state gets one random
/// out-edge, plus each entry with probability `density`.
pub fn random_sparse<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> StochasticMatrix {
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(density) {
                b[(i, j)] = weight(rng);
            }
        }
        let j = rng.random_range(0..n);
        b[(i, j)] = weight(rng);
    }
    normalize(b)
}

/// Deterministic chain: each state moves to one uniformly chosen state.
pub fn random_functional<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StochasticMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, rng.random_range(0..n))] = 1.0;
    }
    StochasticMatrix::new(m).expect("0/1 rows are stochastic")
}

/// Permutation matrix of a uniformly random permutation.
pub fn random_permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StochasticMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut m = DenseMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        m[(i, j)] = 1.0;
    }
    StochasticMatrix::new(m).expect("permutation matrix is stochastic")
}

/// One of the generators above, chosen at random; covers aperiodic,
/// periodic, reducible and deterministic chains.
pub fn random_any<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StochasticMatrix {
    match rng.random_range(0..5) {
        0 => random_aperiodic(rng, n),
        1 => {
            let d = rng.random_range(1..=n.min(4));
            random_periodic(rng, n / d * d, d)
        }
        2 => {
            let density = rng.random_range(0.0..0.3);
            random_sparse(rng, n, density)
        }
        3 => random_functional(rng, n),
        _ => random_permutation(rng, n),
    }
}
