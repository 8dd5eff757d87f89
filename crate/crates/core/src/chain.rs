//! Potential theory for finite irreducible chains: the stationary
//! distribution, the limit matrix `W = 1 pi`, the fundamental matrix
//! `Z = (I - P + W)^-1`, and lazy chains `P_a = aI + (1 - a)P`.
//!
//! Everything here works for periodic chains as well. `I - P + W` is
//! invertible for every irreducible chain, and its inverse is the Cesàro sum
//! of `sum_k (P - W)^k` when the ordinary series diverges.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{DsdError, Result};
use crate::graph::{analyze_structure, ChainStructure};
use crate::linalg::{default_tolerance, invert, lu_factor, DenseMatrix};

/// Row sums of a stochastic matrix must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Default residual budget for identity checks; residuals involving an
/// inverse are additionally scaled by `n`.
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-9;

/// Square row-stochastic matrix with a lazily computed structure summary.
#[derive(Debug, Clone)]
pub struct StochasticMatrix {
    p: DenseMatrix,
    structure: OnceLock<ChainStructure>,
}

impl PartialEq for StochasticMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl StochasticMatrix {
    /// Validates squareness, entries in `[0, 1]`, and unit row sums within [`ROW_SUM_TOL`].
    pub fn new(p: DenseMatrix) -> Result<Self> {
        Self::validate(&p, ROW_SUM_TOL)?;
        Ok(StochasticMatrix {
            p,
            structure: OnceLock::new(),
        })
    }

    /// Accepts row sums within `tol` of one, then divides each row by its sum.
    pub fn from_approximate(mut p: DenseMatrix, tol: f64) -> Result<Self> {
        Self::validate(&p, tol)?;
        for i in 0..p.rows() {
            let s: f64 = p.row(i).iter().sum();
            for x in p.row_mut(i) {
                *x /= s;
            }
        }
        Self::new(p)
    }

    fn validate(p: &DenseMatrix, tol: f64) -> Result<()> {
        if !p.is_square() {
            return Err(DsdError::Dimension(format!(
                "transition matrix must be square, got {}x{}",
                p.rows(),
                p.cols()
            )));
        }
        for (i, row) in p.row_iter().enumerate() {
            if let Some(j) = row.iter().position(|&x| !(0.0..=1.0 + tol).contains(&x)) {
                return Err(DsdError::NotStochastic(format!(
                    "entry ({i}, {j}) = {} outside [0, 1]",
                    row[j]
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(DsdError::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn structure(&self) -> &ChainStructure {
        self.structure.get_or_init(|| analyze_structure(self))
    }

    pub fn is_irreducible(&self) -> bool {
        self.structure().irreducible
    }

    pub fn require_irreducible(&self) -> Result<()> {
        let s = self.structure();
        if s.irreducible {
            Ok(())
        } else {
            Err(DsdError::NotIrreducible {
                scc_count: s.scc_count,
            })
        }
    }

    /// `P^l` by repeated squaring.
    pub fn power(&self, mut l: u64) -> DenseMatrix {
        let mut result = DenseMatrix::identity(self.dim());
        let mut base = self.p.clone();
        while l > 0 {
            if l & 1 == 1 {
                result = &result * &base;
            }
            l >>= 1;
            if l > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

/// Solves `pi P = pi`, `sum(pi) = 1` directly: the transposed system
/// `(P^T - I) x = 0` with its last equation replaced by `sum(x) = 1`.
pub fn stationary_distribution(p: &StochasticMatrix) -> Result<Vec<f64>> {
    p.require_irreducible()?;
    let n = p.dim();
    let mut a = p.matrix().transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    a.row_mut(n - 1).fill(1.0);
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut pi = lu_factor(&a, default_tolerance(&a))?.solve(&b)?;
    let total: f64 = pi.iter().sum();
    for x in &mut pi {
        *x /= total;
    }
    if let Some(i) = pi.iter().position(|&x| x <= 0.0) {
        return Err(DsdError::Tolerance(format!(
            "stationary probability of state {i} is {} for an irreducible chain",
            pi[i]
        )));
    }
    Ok(pi)
}

/// `W = 1 pi`: every row equals `pi`.
pub fn limit_matrix(pi: &[f64]) -> Result<DenseMatrix> {
    if pi.is_empty() {
        return Err(DsdError::Parameter("empty distribution".into()));
    }
    if pi.iter().any(|&x| x.is_nan() || x < 0.0) {
        return Err(DsdError::Parameter(
            "distribution has a negative entry".into(),
        ));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > DEFAULT_IDENTITY_TOL {
        return Err(DsdError::Parameter(format!(
            "distribution sums to {total}, not 1"
        )));
    }
    DenseMatrix::outer(&vec![1.0; pi.len()], pi)
}

/// `Z = (I - P + W)^-1`.
pub fn fundamental_matrix(p: &StochasticMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    p.require_irreducible()?;
    if w.rows() != p.dim() || w.cols() != p.dim() {
        return Err(DsdError::Dimension(format!(
            "limit matrix is {}x{}, chain has {} states",
            w.rows(),
            w.cols(),
            p.dim()
        )));
    }
    let mut a = w.add_scaled(p.matrix(), -1.0);
    for i in 0..p.dim() {
        a[(i, i)] += 1.0;
    }
    invert(&a, default_tolerance(&a))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(DsdError::Parameter(format!(
            "laziness alpha must lie in [0, 1), got {alpha}"
        )))
    }
}

/// `P_a = aI + (1 - a)P`.
pub fn lazy_chain(p: &StochasticMatrix, alpha: f64) -> Result<StochasticMatrix> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(p.clone());
    }
    let mut m = p.matrix().scale(1.0 - alpha);
    for i in 0..p.dim() {
        m[(i, i)] += alpha;
    }
    StochasticMatrix::from_approximate(m, ROW_SUM_TOL)
}

/// Fundamental matrix of the lazy chain from that of the original chain:
/// `Z_a = (Z_0 - aW) / (1 - a)`.
pub fn z_alpha_from_z0(z0: &DenseMatrix, w: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    check_alpha(alpha)?;
    if z0.rows() != w.rows() || z0.cols() != w.cols() || !z0.is_square() {
        return Err(DsdError::Dimension(format!(
            "Z0 is {}x{} but W is {}x{}",
            z0.rows(),
            z0.cols(),
            w.rows(),
            w.cols()
        )));
    }
    if alpha == 0.0 {
        return Ok(z0.clone());
    }
    Ok(z0.add_scaled(w, -alpha).scale(1.0 / (1.0 - alpha)))
}

/// The triple `(pi, W, Z)` of one (possibly lazy) chain.
#[derive(Debug, Clone)]
pub struct FundamentalData {
    pub pi: Vec<f64>,
    pub w: DenseMatrix,
    pub z: DenseMatrix,
    /// Laziness of the chain `z` belongs to.
    pub alpha: f64,
}

impl FundamentalData {
    /// Computes `pi`, `W` and `Z` for `p` itself (`alpha = 0`).
    pub fn new(p: &StochasticMatrix) -> Result<Self> {
        let pi = stationary_distribution(p)?;
        let w = limit_matrix(&pi)?;
        let z = fundamental_matrix(p, &w)?;
        Ok(FundamentalData {
            pi,
            w,
            z,
            alpha: 0.0,
        })
    }

    /// Builds the lazy chain explicitly and inverts `I - P_a + W` from scratch.
    pub fn direct(p: &StochasticMatrix, alpha: f64) -> Result<Self> {
        let lazy = lazy_chain(p, alpha)?;
        let mut fd = Self::new(&lazy)?;
        fd.alpha = alpha;
        Ok(fd)
    }

    /// `Z_0`, recovered from whatever laziness this data describes.
    pub fn z0(&self) -> DenseMatrix {
        if self.alpha == 0.0 {
            self.z.clone()
        } else {
            self.z
                .scale(1.0 - self.alpha)
                .add_scaled(&self.w, self.alpha)
        }
    }

    /// Data for another laziness level, by the closed-form `Z_a` update.
    /// `pi` and `W` do not depend on `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let z = z_alpha_from_z0(&self.z0(), &self.w, alpha)?;
        Ok(FundamentalData {
            pi: self.pi.clone(),
            w: self.w.clone(),
            z,
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    /// Residuals of the defining identities of `(pi, W, Z)` against the base
    /// chain `p` (made lazy with this data's `alpha`).
    pub fn residuals(&self, p: &StochasticMatrix) -> Result<IdentityResiduals> {
        let lazy = lazy_chain(p, self.alpha)?;
        let n = self.dim();
        let id = DenseMatrix::identity(n);
        let mut a = self.w.add_scaled(lazy.matrix(), -1.0);
        a.add_assign(&id);
        let ones = vec![1.0; n];
        let max_vec_diff = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        Ok(IdentityResiduals {
            n,
            inverse: (&a * &self.z).max_abs_diff(&id),
            stationarity: max_vec_diff(&lazy.matrix().left_mul_vec(&self.pi), &self.pi),
            pi_sum: (self.pi.iter().sum::<f64>() - 1.0).abs(),
            z_row_sums: max_vec_diff(&self.z.mul_vec(&ones), &ones),
            pi_z: max_vec_diff(&self.z.left_mul_vec(&self.pi), &self.pi),
            zw: (&self.z * &self.w).max_abs_diff(&self.w),
            wz: (&self.w * &self.z).max_abs_diff(&self.w),
        })
    }
}

/// Max-norm residuals of the identities satisfied by `(pi, W, Z)`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityResiduals {
    pub n: usize,
    /// `(I - P + W) Z - I`
    pub inverse: f64,
    /// `pi P - pi`
    pub stationarity: f64,
    pub pi_sum: f64,
    /// `Z 1 - 1`
    pub z_row_sums: f64,
    /// `pi Z - pi`
    pub pi_z: f64,
    /// `Z W - W`
    pub zw: f64,
    /// `W Z - W`
    pub wz: f64,
}

impl IdentityResiduals {
    /// `(name, residual, bound)` for every identity at tolerance `tol`.
    pub fn checks(&self, tol: f64) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("(I-P+W)Z = I", self.inverse, tol * self.n as f64),
            ("pi P = pi", self.stationarity, tol),
            ("sum pi = 1", self.pi_sum, tol),
            ("Z 1 = 1", self.z_row_sums, tol),
            ("pi Z = pi", self.pi_z, tol),
            ("Z W = W", self.zw, tol),
            ("W Z = W", self.wz, tol),
        ]
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.checks(tol).iter().all(|(_, r, b)| r <= b)
    }
}
