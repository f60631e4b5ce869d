//! Greedy best-first graph walk shared by query answering and index
//! construction.
//!
//! The walk keeps a bounded candidate pool ordered by score. Each round it
//! expands the best not-yet-expanded candidate, scores that vertex's unvisited
//! out-neighbors, and truncates the pool back to its capacity; it stops when
//! every retained candidate has been expanded. Every score evaluation is
//! counted and its target id recorded, which is what the bias diagnostics
//! consume.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::pool::CandidatePool;
use crate::similarity::{dot_f32, SimilarityKind};

/// Counters collected while answering one query. For two-stage searches the
/// same value accumulates across stages, with per-kind splits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Total score evaluations (both stages combined).
    pub eval_count: u64,
    /// Number of pool candidates expanded.
    pub hop_count: u64,
    /// Score evaluations performed under the angular measure.
    pub angular_evals: u64,
    /// Score evaluations performed under the inner-product measure.
    pub inner_product_evals: u64,
    /// Ids of every item scored, in evaluation order.
    pub eval_ids: Vec<u32>,
}

impl SearchStats {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, kind: SimilarityKind, id: u32) {
        self.eval_count += 1;
        match kind {
            SimilarityKind::Angular => self.angular_evals += 1,
            SimilarityKind::InnerProduct => self.inner_product_evals += 1,
        }
        self.eval_ids.push(id);
    }
}

/// Scores dataset items against one query under a fixed similarity measure.
///
/// Inner products accumulate in `f32`; angular scores divide an `f32` dot by
/// the product of precomputed `f64` norms.
pub struct Scorer<'a> {
    dataset: &'a Dataset,
    kind: SimilarityKind,
    query: &'a [f32],
    query_norm: f64,
}

impl<'a> Scorer<'a> {
    pub fn new(dataset: &'a Dataset, kind: SimilarityKind, query: &'a [f32]) -> Result<Self> {
        if query.len() != dataset.dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.dim(),
                got: query.len(),
            });
        }
        let query_norm = query
            .iter()
            .map(|&x| (x as f64) * (x as f64))
            .sum::<f64>()
            .sqrt();
        if kind == SimilarityKind::Angular {
            if query_norm == 0.0 {
                return Err(Error::ZeroNorm("query has zero norm".into()));
            }
            if dataset.has_zero_norm() {
                return Err(Error::ZeroNorm(
                    "dataset contains a zero-norm item; angular scores are undefined".into(),
                ));
            }
        }
        Ok(Scorer {
            dataset,
            kind,
            query,
            query_norm,
        })
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    /// Scores one item without touching the counters.
    pub fn score(&self, id: u32) -> f32 {
        let dot = dot_f32(self.query, self.dataset.vector(id));
        match self.kind {
            SimilarityKind::InnerProduct => dot,
            SimilarityKind::Angular => {
                (dot as f64 / (self.query_norm * self.dataset.norm(id))) as f32
            }
        }
    }

    fn score_counted(&self, id: u32, stats: &mut SearchStats) -> f32 {
        stats.record(self.kind, id);
        self.score(id)
    }
}

/// Membership marker reusable across many searches without re-zeroing.
#[derive(Debug, Clone)]
pub struct VisitedSet {
    generation: Vec<u32>,
    current: u32,
}

impl VisitedSet {
    pub fn new(len: usize) -> Self {
        VisitedSet {
            generation: vec![0; len],
            current: 1,
        }
    }

    /// Forgets all marks in O(1).
    pub fn clear(&mut self) {
        if self.current == u32::MAX {
            self.generation.fill(0);
            self.current = 1;
        } else {
            self.current += 1;
        }
    }

    /// Marks `id`; returns `true` the first time, `false` if already marked.
    pub fn mark(&mut self, id: u32) -> bool {
        let slot = &mut self.generation[id as usize];
        if *slot == self.current {
            false
        } else {
            *slot = self.current;
            true
        }
    }

    pub fn contains(&self, id: u32) -> bool {
        self.generation[id as usize] == self.current
    }
}

/// Anything the walk can pull out-neighbor lists from: a finished graph or the
/// partial adjacency of an index still under construction.
pub trait NeighborSource {
    fn out_neighbors(&self, v: u32) -> &[u32];
    /// Number of vertices currently present.
    fn num_vertices(&self) -> usize;
}

impl NeighborSource for ProximityGraph {
    fn out_neighbors(&self, v: u32) -> &[u32] {
        self.neighbors(v)
    }

    fn num_vertices(&self) -> usize {
        ProximityGraph::num_vertices(self)
    }
}

impl NeighborSource for [Vec<u32>] {
    fn out_neighbors(&self, v: u32) -> &[u32] {
        &self[v as usize]
    }

    fn num_vertices(&self) -> usize {
        self.len()
    }
}

/// Runs the greedy walk from the given seed vertices and returns the final
/// pool. Seeds are deduplicated, scored, and count as evaluations; the pool
/// keeps at most `pool_size` candidates at any point.
pub fn run_walk<N: NeighborSource + ?Sized>(
    graph: &N,
    scorer: &Scorer,
    seeds: &[u32],
    pool_size: usize,
    visited: &mut VisitedSet,
    stats: &mut SearchStats,
) -> CandidatePool {
    let mut pool = CandidatePool::new(pool_size);
    for &s in seeds {
        if visited.mark(s) {
            let score = scorer.score_counted(s, stats);
            pool.insert(s, score);
        }
    }
    while let Some(idx) = pool.first_unchecked() {
        let v = pool.mark_checked(idx);
        stats.hop_count += 1;
        for &u in graph.out_neighbors(v) {
            if visited.mark(u) {
                let score = scorer.score_counted(u, stats);
                pool.insert(u, score);
            }
        }
    }
    pool
}

/// Single-graph query: walk from the given entry vertices and return the top
/// `k` ids by score (descending, ties by id) together with the counters.
pub fn graph_search(
    graph: &ProximityGraph,
    dataset: &Dataset,
    query: &[f32],
    entry_set: &[u32],
    pool_size: usize,
    k: usize,
) -> Result<(Vec<u32>, SearchStats)> {
    if dataset.len() != graph.num_vertices() {
        return Err(Error::InvalidParameter(format!(
            "dataset has {} items but the graph has {} vertices",
            dataset.len(),
            graph.num_vertices()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if pool_size < k {
        return Err(Error::InvalidParameter(format!(
            "pool size {pool_size} must be at least k = {k}"
        )));
    }
    if entry_set.is_empty() {
        return Err(Error::InvalidParameter(
            "entry set must be non-empty".into(),
        ));
    }
    for &e in entry_set {
        if e as usize >= graph.num_vertices() {
            return Err(Error::InvalidId {
                id: e,
                len: graph.num_vertices(),
            });
        }
    }
    let scorer = Scorer::new(dataset, graph.kind(), query)?;
    let mut visited = VisitedSet::new(dataset.len());
    let mut stats = SearchStats::new();
    let pool = run_walk(
        graph,
        &scorer,
        entry_set,
        pool_size,
        &mut visited,
        &mut stats,
    );
    Ok((pool.top_ids(k), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    fn line_dataset() -> Dataset {
        // One-dimensional items 1..=5; inner product with a positive query
        // ranks them by value.
        Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]]).unwrap()
    }

    fn complete_graph(n: usize, kind: SimilarityKind) -> ProximityGraph {
        let adjacency = (0..n as u32)
            .map(|v| (0..n as u32).filter(|&u| u != v).collect())
            .collect();
        ProximityGraph::new(kind, (n - 1) as u32, (n - 1) as u32, adjacency).unwrap()
    }

    #[test]
    fn complete_graph_walk_is_exact_for_any_pool_at_least_k() {
        let ds = line_dataset();
        let g = complete_graph(5, SimilarityKind::InnerProduct);
        for l in 2..=5 {
            let (ids, _) = graph_search(&g, &ds, &[1.0], &[g.entry_vertex()], l, 2).unwrap();
            assert_eq!(ids, vec![4, 3], "pool size {l}");
        }
    }

    #[test]
    fn each_item_is_scored_at_most_once() {
        let ds = line_dataset();
        let g = complete_graph(5, SimilarityKind::InnerProduct);
        let (_, stats) = graph_search(&g, &ds, &[1.0], &[g.entry_vertex()], 3, 1).unwrap();
        let mut ids = stats.eval_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len() as u64, stats.eval_count);
        assert_eq!(stats.inner_product_evals, stats.eval_count);
        assert_eq!(stats.angular_evals, 0);
    }

    #[test]
    fn pool_truncation_can_miss_items_on_sparse_graphs() {
        // A chain 2 -> 1 -> 0 walked with pool size 1 from vertex 2 keeps only
        // the best candidate each round, so it still reaches vertex 0 by
        // expanding whichever single candidate it holds.
        let ds = line_dataset();
        let adjacency = vec![vec![], vec![0], vec![1], vec![], vec![]];
        let g = ProximityGraph::new(SimilarityKind::InnerProduct, 2, 2, adjacency).unwrap();
        let (ids, stats) = graph_search(&g, &ds, &[-1.0], &[2], 1, 1).unwrap();
        assert_eq!(ids, vec![0]);
        assert_eq!(stats.hop_count, 3);
    }

    #[test]
    fn pool_of_one_stops_at_a_better_seed() {
        // Vertex 1 points at vertex 0; with pool size 1 and a query favoring
        // vertex 1, the worse neighbor never enters the pool and nothing past
        // one hop is explored.
        let ds = Dataset::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let adjacency = vec![vec![], vec![0]];
        let g = ProximityGraph::new(SimilarityKind::InnerProduct, 1, 1, adjacency).unwrap();
        let (ids, stats) = graph_search(&g, &ds, &[1.0], &[1], 1, 1).unwrap();
        assert_eq!(ids, vec![1]);
        assert_eq!(stats.eval_count, 2);
        assert_eq!(stats.hop_count, 1);
    }

    #[test]
    fn angular_walk_normalizes_scores() {
        // Item 1 has the larger inner product, item 0 the better direction.
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![10.0, 10.0]]).unwrap();
        let g = complete_graph(2, SimilarityKind::Angular);
        let (ids, _) = graph_search(&g, &ds, &[1.0, 0.0], &[1], 2, 1).unwrap();
        assert_eq!(ids, vec![0]);
    }

    #[test]
    fn entry_set_is_validated() {
        let ds = line_dataset();
        let g = complete_graph(5, SimilarityKind::InnerProduct);
        assert!(graph_search(&g, &ds, &[1.0], &[], 2, 1).is_err());
        assert!(graph_search(&g, &ds, &[1.0], &[9], 2, 1).is_err());
        assert!(
            graph_search(&g, &ds, &[1.0], &[0], 1, 2).is_err(),
            "k above pool size"
        );
    }

    #[test]
    fn scorer_rejects_zero_norms_for_angular() {
        let ds = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(Scorer::new(&ds, SimilarityKind::Angular, &[1.0, 0.0]).is_err());
        assert!(Scorer::new(&ds, SimilarityKind::InnerProduct, &[1.0, 0.0]).is_ok());
        let ok = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(Scorer::new(&ok, SimilarityKind::Angular, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn visited_set_survives_generation_wraparound() {
        let mut v = VisitedSet::new(3);
        assert!(v.mark(1));
        assert!(!v.mark(1));
        v.clear();
        assert!(v.mark(1));
        v.current = u32::MAX;
        assert!(v.mark(2));
        v.clear();
        assert!(!v.contains(2));
        assert!(v.mark(2));
    }
}
