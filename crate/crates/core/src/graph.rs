//! Weighted directed graphs, the transition matrix they induce, and
//! structural classification of chains (strong connectivity and period).

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::chain::StochasticMatrix;
use crate::error::{DsdError, Result};
use crate::linalg::DenseMatrix;

/// A directed edge `source -> target` with a nonnegative weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Vertex set with nonnegative directed edge weights.
///
/// Labels are unique and map to dense indices in insertion order. Duplicate
/// `(source, target)` pairs are rejected; sum them before construction if
/// that is what you want.
#[derive(Debug, Clone)]
pub struct WeightedDigraph {
    labels: Vec<String>,
    edges: Vec<Edge>,
}

impl WeightedDigraph {
    pub fn new(labels: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(DsdError::Dimension("graph has no nodes".into()));
        }
        let mut seen = HashSet::with_capacity(n);
        for label in &labels {
            if label.is_empty() {
                return Err(DsdError::Parameter("empty node label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(DsdError::Parameter(format!(
                    "duplicate node label '{label}'"
                )));
            }
        }
        let mut pairs = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(DsdError::Parameter(format!(
                    "edge ({}, {}) references a node outside 0..{n}",
                    e.source, e.target
                )));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(DsdError::Parameter(format!(
                    "edge '{}' -> '{}' has invalid weight {}",
                    labels[e.source], labels[e.target], e.weight
                )));
            }
            if !pairs.insert((e.source, e.target)) {
                return Err(DsdError::DuplicateEdge {
                    source_label: labels[e.source].clone(),
                    target_label: labels[e.target].clone(),
                });
            }
        }
        Ok(WeightedDigraph { labels, edges })
    }

    /// Builds a graph from labelled `(source, target, weight)` triples, assigning
    /// node indices in order of first appearance.
    pub fn from_labeled_edges<'a, I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let mut labels = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut intern = |s: &'a str, labels: &mut Vec<String>| {
            *index.entry(s).or_insert_with(|| {
                labels.push(s.to_string());
                labels.len() - 1
            })
        };
        let mut edges = Vec::new();
        for (s, t, w) in triples {
            let source = intern(s, &mut labels);
            let target = intern(t, &mut labels);
            edges.push(Edge {
                source,
                target,
                weight: w,
            });
        }
        Self::new(labels, edges)
    }

    /// Uses the entries of a nonnegative square matrix as edge weights; zero
    /// entries produce no edge.
    pub fn from_weight_matrix(labels: Vec<String>, weights: &DenseMatrix) -> Result<Self> {
        if !weights.is_square() || weights.rows() != labels.len() {
            return Err(DsdError::Dimension(format!(
                "{} labels for a {}x{} weight matrix",
                labels.len(),
                weights.rows(),
                weights.cols()
            )));
        }
        let mut edges = Vec::new();
        for (i, row) in weights.row_iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    edges.push(Edge {
                        source: i,
                        target: j,
                        weight: w,
                    });
                }
            }
        }
        Self::new(labels, edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Dense `n x n` weight matrix.
    pub fn weight_matrix(&self) -> DenseMatrix {
        let n = self.node_count();
        let mut b = DenseMatrix::zeros(n, n);
        for e in &self.edges {
            b[(e.source, e.target)] = e.weight;
        }
        b
    }
}

/// Row-normalizes the edge weights: `p_ij = w_ij / sum_k w_ik`.
pub fn build_transition_matrix(g: &WeightedDigraph) -> Result<StochasticMatrix> {
    let mut p = g.weight_matrix();
    for i in 0..p.rows() {
        let total: f64 = p.row(i).iter().sum();
        if total <= 0.0 {
            return Err(DsdError::ZeroOutWeight {
                label: g.labels[i].clone(),
            });
        }
        for x in p.row_mut(i) {
            *x /= total;
        }
    }
    StochasticMatrix::new(p)
}

/// Strong-connectivity and periodicity summary of a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainStructure {
    pub irreducible: bool,
    /// Defined only for irreducible chains; 1 means aperiodic.
    pub period: Option<usize>,
    pub scc_count: usize,
    /// Component id of each state. Ids are assigned in reverse topological
    /// order of the condensation (sink components first).
    pub scc_assignment: Vec<usize>,
}

impl ChainStructure {
    pub fn is_aperiodic(&self) -> bool {
        self.period == Some(1)
    }
}

/// Adjacency lists of the positive-entry digraph of `p`.
pub(crate) fn positive_adjacency(p: &DenseMatrix) -> Vec<Vec<usize>> {
    p.row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// States reachable from `start` along paths of length at least one.
pub(crate) fn reachable_in_one_or_more(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack: Vec<usize> = adj[start].clone();
    while let Some(u) = stack.pop() {
        if seen[u] {
            continue;
        }
        seen[u] = true;
        stack.extend(adj[u].iter().copied().filter(|&v| !seen[v]));
    }
    seen
}

/// Iterative Tarjan. Returns (component count, assignment).
fn strongly_connected_components(adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNVISITED; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut count = 0;
    // (node, next child position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (u, ref mut child)) = call.last_mut() {
            if *child == 0 && index[u] == UNVISITED {
                index[u] = next_index;
                low[u] = next_index;
                next_index += 1;
                stack.push(u);
                on_stack[u] = true;
            }
            if let Some(&v) = adj[u].get(*child) {
                *child += 1;
                if index[v] == UNVISITED {
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[u]);
            }
            if low[u] == index[u] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = count;
                    if w == u {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    (count, comp)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period of a strongly connected digraph: gcd over all edges `u -> v` of
/// `level(u) + 1 - level(v)`, where levels are BFS distances from state 0.
fn period_of_strongly_connected(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut d = 0;
    for (u, targets) in adj.iter().enumerate() {
        for &v in targets {
            // BFS guarantees level[v] <= level[u] + 1.
            d = gcd(d, level[u] + 1 - level[v]);
        }
    }
    d
}

/// Classifies the chain by strong connectivity of its positive-entry digraph
/// and, when irreducible, by its period.
pub fn analyze_structure(p: &StochasticMatrix) -> ChainStructure {
    let adj = positive_adjacency(p.matrix());
    let (scc_count, scc_assignment) = strongly_connected_components(&adj);
    let irreducible = scc_count == 1;
    let period = irreducible.then(|| period_of_strongly_connected(&adj));
    ChainStructure {
        irreducible,
        period,
        scc_count,
        scc_assignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stochastic(rows: &[&[f64]]) -> StochasticMatrix {
        StochasticMatrix::new(DenseMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn equal_weights_give_uniform_rows() {
        let g = WeightedDigraph::from_labeled_edges([
            ("a", "b", 1.0),
            ("b", "a", 1.0),
            ("a", "a", 1.0),
            ("b", "b", 1.0),
        ])
        .unwrap();
        let p = build_transition_matrix(&g).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn rows_are_normalized_independently() {
        let g = WeightedDigraph::from_labeled_edges([
            ("a", "b", 2.0),
            ("a", "a", 2.0),
            ("b", "a", 1.0),
            ("b", "b", 3.0),
        ])
        .unwrap();
        let p = build_transition_matrix(&g).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![0.5, 0.5], vec![0.25, 0.75]]);
    }

    #[test]
    fn counterexample_weights() {
        let g = WeightedDigraph::from_labeled_edges([
            ("1", "2", 1.0),
            ("1", "3", 1.0),
            ("2", "4", 1.0),
            ("3", "4", 1.0),
            ("4", "1", 1.0),
        ])
        .unwrap();
        let p = build_transition_matrix(&g).unwrap();
        assert_eq!(&p, &fixtures::period_three_counterexample());
    }

    #[test]
    fn zero_out_weight_names_node() {
        let g = WeightedDigraph::from_labeled_edges([("a", "b", 1.0), ("b", "c", 0.0)]).unwrap();
        let err = build_transition_matrix(&g).unwrap_err();
        assert_eq!(err, DsdError::ZeroOutWeight { label: "b".into() });
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(matches!(
            WeightedDigraph::from_labeled_edges([("a", "b", 1.0), ("a", "b", 2.0)]),
            Err(DsdError::DuplicateEdge { .. })
        ));
        assert!(WeightedDigraph::from_labeled_edges([("a", "b", -1.0)]).is_err());
        assert!(WeightedDigraph::new(vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(WeightedDigraph::new(
            vec!["a".into()],
            vec![Edge {
                source: 0,
                target: 1,
                weight: 1.0
            }]
        )
        .is_err());
    }

    #[test]
    fn structure_examples() {
        let s = analyze_structure(&stochastic(&[&[0.5, 0.5], &[0.5, 0.5]]));
        assert!(s.irreducible);
        assert_eq!(s.period, Some(1));

        let s = analyze_structure(&fixtures::flip_chain());
        assert!(s.irreducible);
        assert_eq!(s.period, Some(2));

        let s = analyze_structure(&fixtures::period_three_counterexample());
        assert!(s.irreducible);
        assert_eq!(s.period, Some(3));
    }

    #[test]
    fn reducible_chain_has_no_period() {
        // 0 <-> 1, 2 absorbing, 1 leaks to 2
        let p = stochastic(&[&[0.0, 1.0, 0.0], &[0.5, 0.0, 0.5], &[0.0, 0.0, 1.0]]);
        let s = analyze_structure(&p);
        assert!(!s.irreducible);
        assert_eq!(s.period, None);
        assert_eq!(s.scc_count, 2);
        assert_eq!(s.scc_assignment[0], s.scc_assignment[1]);
        assert_ne!(s.scc_assignment[0], s.scc_assignment[2]);
    }

    #[test]
    fn period_is_gcd_of_cycle_lengths() {
        // cycles of length 4 and 6 through state 0 -> period 2
        let n = 6;
        let mut b = DenseMatrix::zeros(n, n);
        for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 5), (5, 1)] {
            b[(u, v)] = 1.0;
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        let g = WeightedDigraph::from_weight_matrix(labels, &b).unwrap();
        let s = analyze_structure(&build_transition_matrix(&g).unwrap());
        assert!(s.irreducible);
        assert_eq!(s.period, Some(2));
    }

    #[test]
    fn period_divides_every_return_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut chains = vec![
            fixtures::flip_chain(),
            fixtures::period_three_counterexample(),
        ];
        for _ in 0..10 {
            let n = rng.random_range(2..9);
            let d = rng.random_range(1..4);
            chains.push(fixtures::random_periodic(&mut rng, n * d, d));
            chains.push(fixtures::random_sparse(&mut rng, n, 0.3));
        }
        for p in chains {
            let s = p.structure();
            let Some(d) = s.period else { continue };
            let n = p.dim();
            let mut power = p.matrix().clone();
            for l in 1..=3 * n {
                if power[(0, 0)] > 0.0 {
                    assert_eq!(l % d, 0, "return at step {l} with period {d}");
                }
                power = &power * p.matrix();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn transition_rows_sum_to_one(seed in any::<u64>(), n in 1usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if rng.random_bool(0.2) || j == (i + 1) % n {
                        b[(i, j)] = rng.random_range(1e-3..1e3);
                    }
                }
            }
            let g = WeightedDigraph::from_weight_matrix((0..n).map(|i| format!("v{i}")).collect(), &b).unwrap();
            let p = build_transition_matrix(&g).unwrap();
            for s in p.matrix().row_sums() {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(p.matrix()[(i, j)] == 0.0, b[(i, j)] == 0.0);
                }
            }
        }

        #[test]
        fn rebuilding_from_probabilities_is_exact(seed in any::<u64>(), n in 1usize..20) {
            // dyadic entries so every row sums to exactly 1.0
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = DenseMatrix::zeros(n, n);
            for i in 0..n {
                let mut remaining = 1024u32;
                for j in 0..n - 1 {
                    let take = rng.random_range(0..=remaining);
                    p[(i, j)] = f64::from(take) / 1024.0;
                    remaining -= take;
                }
                p[(i, n - 1)] = f64::from(remaining) / 1024.0;
            }
            let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let g = WeightedDigraph::from_weight_matrix(labels, &p).unwrap();
            let rebuilt = build_transition_matrix(&g).unwrap();
            prop_assert_eq!(rebuilt.matrix(), &p);
        }

        #[test]
        fn scaling_one_nodes_weights_leaves_p_unchanged(seed in any::<u64>(), n in 2usize..30, c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = fixtures::random_aperiodic(&mut rng, n);
            let b = p.matrix().clone();
            let node = rng.random_range(0..n);
            let mut scaled = b.clone();
            for x in scaled.row_mut(node) {
                *x *= c;
            }
            let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let p1 = build_transition_matrix(&WeightedDigraph::from_weight_matrix(labels.clone(), &b).unwrap()).unwrap();
            let p2 = build_transition_matrix(&WeightedDigraph::from_weight_matrix(labels, &scaled).unwrap()).unwrap();
            prop_assert!(p1.matrix().max_abs_diff(p2.matrix()) <= 1e-15);
        }
    }
}
