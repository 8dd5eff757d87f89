//! Oracle suite for a single chain: every closed-form quantity is recomputed
//! by an independent route and compared.
//!
//! Exact algebraic identities are hard checks. Checks that depend on a
//! series having converged within the configured horizon, or on sampling,
//! are soft: they are reported but never fail the run. A series check is
//! promoted to hard once its tail has actually decayed.

use serde::Serialize;

use crate::chain::{FundamentalData, StochasticMatrix, DEFAULT_IDENTITY_TOL};
use crate::dsd::{dsd_finite, dsd_infinite, dsd_infinite_lazy, visit_expectations};
use crate::error::Result;
use crate::linalg::{DenseMatrix, LqOrder};
use crate::oracle::{
    cesaro_power_average, he_difference_rows, monte_carlo_he, z_series_cesaro, z_series_truncated,
};

/// Series tails below this count as converged.
const CONVERGED_TAIL: f64 = 1e-12;

/// Horizon used for the finite-horizon identity checks.
const IDENTITY_HORIZON: u64 = 32;

/// Longest trajectories sampled by the Monte Carlo check.
const MONTE_CARLO_HORIZON: usize = 20;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Number of series terms / steps for the convergence oracles.
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            horizon: 10_000,
            trials: 10_000,
            seed: 0,
            tol: DEFAULT_IDENTITY_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub hard: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.bound
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub period: Option<usize>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn hard_failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.hard && !c.passed())
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().next().is_none()
    }
}

/// Runs the full oracle suite. Fails only when the chain is not irreducible
/// or a matrix turns out numerically singular.
pub fn run_verification(p: &StochasticMatrix, cfg: &VerifyConfig) -> Result<VerifyReport> {
    p.require_irreducible()?;
    let n = p.dim();
    let tol = cfg.tol;
    let aperiodic = p.structure().is_aperiodic();
    let fd = FundamentalData::new(p)?;
    let mut checks = Vec::new();
    let mut push = |name: String, residual: f64, bound: f64, hard: bool| {
        checks.push(Check {
            name,
            residual,
            bound,
            hard,
        })
    };

    for (name, r, b) in fd.residuals(p)?.checks(tol) {
        push(name.to_string(), r, b, true);
    }

    let d0 = dsd_infinite(&fd, LqOrder::L1);
    for alpha in [0.1, 0.5, 0.9] {
        let direct = FundamentalData::direct(p, alpha)?;
        push(
            format!("Z_a closed form vs direct inverse (alpha={alpha})"),
            fd.with_alpha(alpha)?.z.max_abs_diff(&direct.z),
            tol,
            true,
        );
        let scaled = dsd_infinite_lazy(&fd, alpha, LqOrder::L1)?;
        let direct_d = dsd_infinite(&direct, LqOrder::L1);
        push(
            format!("DSD(inf; a) scaling vs direct (alpha={alpha})"),
            scaled.d.max_abs_diff(&direct_d.d),
            tol,
            true,
        );
    }

    let k = IDENTITY_HORIZON.min(cfg.horizon as u64);
    let nk = visit_expectations(p, k)?.n;
    let mut lhs = &nk * p.matrix();
    lhs.add_assign(&DenseMatrix::identity(n));
    push(
        format!("N^(k) P + I = N^(k) + P^(k+1) (k={k})"),
        lhs.max_abs_diff(&(&nk + &p.power(k + 1))),
        tol,
        true,
    );

    for (label, dm) in [
        ("DSD(inf)".to_string(), d0.clone()),
        (format!("DSD({k})"), dsd_finite(p, k, LqOrder::L1)?),
    ] {
        let ax = dm.axioms();
        let worst = ax
            .max_asymmetry
            .max(ax.max_abs_diagonal)
            .max(-ax.min_entry)
            .max(ax.max_triangle_excess);
        push(
            format!("{label} pseudometric axioms"),
            worst.max(0.0),
            tol,
            true,
        );
    }

    let horizon = cfg.horizon.max(1);
    if aperiodic {
        let series = z_series_truncated(p, &fd.w, horizon);
        push(
            format!("truncated series vs inverse (K={horizon})"),
            series.value.max_abs_diff(&fd.z),
            1e-8,
            series.last_increment_norm <= CONVERGED_TAIL,
        );

        let rows = he_difference_rows(p, 0, n - 1, horizon);
        let last = &rows[horizon];
        let gap = (0..n)
            .map(|w| (last[w] - (fd.z[(0, w)] - fd.z[(n - 1, w)])).abs())
            .fold(0.0, f64::max);
        let prev = &rows[horizon - 1];
        let settled = last
            .iter()
            .zip(prev)
            .all(|(a, b)| (a - b).abs() <= CONVERGED_TAIL);
        push(
            format!("He difference limit vs Z rows (k={horizon})"),
            gap,
            1e-6,
            settled,
        );
    }

    push(
        format!("Cesaro series vs inverse (K={horizon})"),
        z_series_cesaro(p, &fd.w, horizon).value.max_abs_diff(&fd.z),
        10.0 / horizon as f64,
        false,
    );
    push(
        format!("Cesaro power average vs W (K={horizon})"),
        cesaro_power_average(p, horizon).max_abs_diff(&fd.w),
        10.0 / horizon as f64,
        false,
    );

    if cfg.trials > 0 {
        let k = MONTE_CARLO_HORIZON.min(cfg.horizon);
        let exact = visit_expectations(p, k as u64)?.n;
        let stats = monte_carlo_he(p, 0, k, cfg.trials, cfg.seed);
        let worst = stats
            .compare(exact.row(0))
            .iter()
            .map(|c| c.z_score)
            .fold(0.0, f64::max);
        push(
            format!(
                "Monte Carlo visits, max z-score (k={k}, trials={}, seed={})",
                cfg.trials, cfg.seed
            ),
            worst,
            4.0,
            false,
        );
    }

    Ok(VerifyReport {
        n,
        period: p.structure().period,
        checks,
    })
}
