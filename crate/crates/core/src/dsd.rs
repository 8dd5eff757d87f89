//! Diffusion state distance.
//!
//! The finite-horizon distance compares rows of the expected-visit matrix
//! `N^(k) = I + P + ... + P^k`; the limiting distance compares rows of the
//! fundamental matrix `Z`. Both use an l_q norm of the row difference.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{FundamentalData, StochasticMatrix};
use crate::error::{DsdError, Result};
use crate::fixtures::numeric_labels;
use crate::graph::{positive_adjacency, reachable_in_one_or_more};
use crate::linalg::{row_lq_distance, DenseMatrix, LqOrder};

/// Largest accepted finite horizon. Cost is `O(k n^3)`.
pub const MAX_HORIZON: u64 = 1_000_000;

/// An off-diagonal distance below this counts as zero.
pub const ZERO_DISTANCE_TOL: f64 = 1e-9;

/// `p^(k+1)_ii` within this of one counts as a certain return.
pub const RETURN_PROBABILITY_TOL: f64 = 1e-9;

/// Expected visit counts `N^(k)_uw` over steps `0..=k`.
#[derive(Debug, Clone)]
pub struct VisitExpectationMatrix {
    pub k: u64,
    pub n: DenseMatrix,
}

fn check_horizon(k: u64) -> Result<()> {
    if k > MAX_HORIZON {
        return Err(DsdError::Parameter(format!(
            "horizon {k} exceeds the maximum of {MAX_HORIZON}"
        )));
    }
    Ok(())
}

/// Running accumulation of `I + P + ... + P^k`.
pub fn visit_expectations(p: &StochasticMatrix, k: u64) -> Result<VisitExpectationMatrix> {
    check_horizon(k)?;
    let mut power = DenseMatrix::identity(p.dim());
    let mut n = power.clone();
    for _ in 0..k {
        power = &power * p.matrix();
        n.add_assign(&power);
    }
    Ok(VisitExpectationMatrix { k, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(k) => write!(f, "{k}"),
            Horizon::Infinite => write!(f, "infinite"),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(k) => s.serialize_u64(*k),
            Horizon::Infinite => s.serialize_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricStatus {
    Metric,
    Pseudometric,
    Unverified,
}

impl fmt::Display for MetricStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricStatus::Metric => "metric",
            MetricStatus::Pseudometric => "pseudometric",
            MetricStatus::Unverified => "unverified",
        })
    }
}

/// Pairwise distances between states, with the parameters that produced them.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    pub d: DenseMatrix,
    pub horizon: Horizon,
    pub q: LqOrder,
    pub alpha: f64,
    pub metric_status: MetricStatus,
    pub labels: Vec<String>,
}

/// Worst-case violations of the metric axioms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    pub max_asymmetry: f64,
    pub max_abs_diagonal: f64,
    pub min_entry: f64,
    pub min_off_diagonal: f64,
    /// `max(d_uw - d_uv - d_vw)` over all triples.
    pub max_triangle_excess: f64,
}

impl AxiomReport {
    /// Pseudometric axioms within `tol`.
    pub fn is_pseudometric(&self, tol: f64) -> bool {
        self.max_asymmetry <= tol
            && self.max_abs_diagonal <= tol
            && self.min_entry >= -tol
            && self.max_triangle_excess <= tol
    }
}

impl DistanceMatrix {
    pub fn dim(&self) -> usize {
        self.d.rows()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(DsdError::Dimension(format!(
                "{} labels for {} states",
                labels.len(),
                self.dim()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Exhaustive check over all triples; `O(n^3)`.
    pub fn axioms(&self) -> AxiomReport {
        let n = self.dim();
        let d = &self.d;
        let mut r = AxiomReport {
            max_asymmetry: 0.0,
            max_abs_diagonal: 0.0,
            min_entry: f64::INFINITY,
            min_off_diagonal: f64::INFINITY,
            max_triangle_excess: f64::NEG_INFINITY,
        };
        for u in 0..n {
            r.max_abs_diagonal = r.max_abs_diagonal.max(d[(u, u)].abs());
            for v in 0..n {
                r.min_entry = r.min_entry.min(d[(u, v)]);
                if u != v {
                    r.min_off_diagonal = r.min_off_diagonal.min(d[(u, v)]);
                }
                r.max_asymmetry = r.max_asymmetry.max((d[(u, v)] - d[(v, u)]).abs());
                for w in 0..n {
                    r.max_triangle_excess =
                        r.max_triangle_excess.max(d[(u, w)] - d[(u, v)] - d[(v, w)]);
                }
            }
        }
        r
    }

    fn min_off_diagonal(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
            .map(|(u, v)| self.d[(u, v)])
            .fold(f64::INFINITY, f64::min)
    }
}

/// All pairwise row distances of `m`, rows computed in parallel.
pub fn pairwise_row_distances(m: &DenseMatrix, q: LqOrder) -> DenseMatrix {
    let n = m.rows();
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|u| (0..n).map(move |v| row_lq_distance(m, u, v, q)))
        .collect();
    DenseMatrix::from_vec(n, n, data).expect("distances are finite")
}

/// Horizon-`k` distance: l_q distance between rows of `N^(k)`.
pub fn dsd_finite(p: &StochasticMatrix, k: u64, q: LqOrder) -> Result<DistanceMatrix> {
    let visits = visit_expectations(p, k)?;
    let mut dm = DistanceMatrix {
        d: pairwise_row_distances(&visits.n, q),
        horizon: Horizon::Finite(k),
        q,
        alpha: 0.0,
        metric_status: MetricStatus::Metric,
        labels: numeric_labels(p.dim()),
    };
    if !check_metric_hypothesis(p, k)?.holds && dm.min_off_diagonal() < ZERO_DISTANCE_TOL {
        dm.metric_status = MetricStatus::Pseudometric;
    }
    Ok(dm)
}

/// Limiting distance: l_q distance between rows of `Z`. Always a metric,
/// since `Z` is invertible and therefore has distinct rows.
pub fn dsd_infinite(fd: &FundamentalData, q: LqOrder) -> DistanceMatrix {
    DistanceMatrix {
        d: pairwise_row_distances(&fd.z, q),
        horizon: Horizon::Infinite,
        q,
        alpha: fd.alpha,
        metric_status: MetricStatus::Metric,
        labels: numeric_labels(fd.dim()),
    }
}

/// Limiting distance of the lazy chain `P_a`, obtained by scaling the
/// `alpha = 0` distances by `1 / (1 - alpha)`.
pub fn dsd_infinite_lazy(fd0: &FundamentalData, alpha: f64, q: LqOrder) -> Result<DistanceMatrix> {
    if fd0.alpha != 0.0 {
        return Err(DsdError::Parameter(format!(
            "expected fundamental data at alpha = 0, got alpha = {}",
            fd0.alpha
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(DsdError::Parameter(format!(
            "laziness alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let mut dm = dsd_infinite(fd0, q);
    if alpha != 0.0 {
        dm.d = dm.d.scale(1.0 / (1.0 - alpha));
        dm.alpha = alpha;
    }
    Ok(dm)
}

/// Outcome of testing the sufficient condition for the horizon-`k`
/// distance to be a metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricHypothesisReport {
    pub k: u64,
    pub holds: bool,
    /// Distinct states `(i, j)` with `p^(k+1)_ii = p^(k+1)_jj = 1` and `j`
    /// reachable from `i`.
    pub witness: Option<(usize, usize)>,
}

/// The horizon-`k` distance is a metric unless two distinct states `i`, `j`
/// both return with certainty after `k + 1` steps and `j` is reachable from
/// `i`. Works for reducible chains too.
pub fn check_metric_hypothesis(p: &StochasticMatrix, k: u64) -> Result<MetricHypothesisReport> {
    check_horizon(k)?;
    let pk1 = p.power(k + 1);
    let certain: Vec<usize> = (0..p.dim())
        .filter(|&i| 1.0 - pk1[(i, i)] <= RETURN_PROBABILITY_TOL)
        .collect();
    let mut witness = None;
    if certain.len() >= 2 {
        let adj = positive_adjacency(p.matrix());
        'outer: for &i in &certain {
            let reach = reachable_in_one_or_more(&adj, i);
            for &j in &certain {
                if j != i && reach[j] {
                    witness = Some((i, j));
                    break 'outer;
                }
            }
        }
    }
    Ok(MetricHypothesisReport {
        k,
        holds: witness.is_none(),
        witness,
    })
}
