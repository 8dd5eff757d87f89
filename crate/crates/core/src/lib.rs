//! Diffusion state distance (DSD) on finite Markov chains.
//!
//! A weighted directed graph induces a chain by row-normalizing its edge
//! weights. Two states are compared by how differently the chain spreads
//! from them: the finite-horizon distance uses expected visit counts
//! `I + P + ... + P^k`, the limiting distance uses the fundamental matrix
//! `Z = (I - P + W)^-1`. Neither requires reversibility, and periodic chains
//! are handled through `Z` directly.
//!
//! ```
//! use dsdkit::{dsd_infinite, fixtures, FundamentalData, LqOrder};
//!
//! let p = fixtures::flip_chain();
//! let fd = FundamentalData::new(&p).unwrap();
//! let d = dsd_infinite(&fd, LqOrder::L1);
//! assert!((d.d[(0, 1)] - 1.0).abs() < 1e-12);
//! ```

pub mod chain;
pub mod dsd;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod verify;

pub use chain::{
    fundamental_matrix, lazy_chain, limit_matrix, stationary_distribution, z_alpha_from_z0,
    FundamentalData, IdentityResiduals, StochasticMatrix,
};
pub use dsd::{
    check_metric_hypothesis, dsd_finite, dsd_infinite, dsd_infinite_lazy, visit_expectations,
    DistanceMatrix, Horizon, MetricHypothesisReport, MetricStatus, VisitExpectationMatrix,
};
pub use error::{DsdError, Result};
pub use graph::{
    analyze_structure, build_transition_matrix, ChainStructure, Edge, WeightedDigraph,
};
pub use io::{parse_edge_list, write_matrix, EdgeListDocument, MatrixFormat};
pub use linalg::{
    invert, lu_factor, row_lq_distance, solve, DenseMatrix, LqOrder, LuFactorization,
};
pub use oracle::{
    he_difference_limit, monte_carlo_he, z_series_cesaro, z_series_truncated, SeriesEstimate,
    TrajectoryStats,
};
