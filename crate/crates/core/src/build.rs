//! Sequential graph construction.
//!
//! Items are inserted in id order. Each new item runs the greedy walk over the
//! graph built so far — starting from the most recently inserted vertex — and
//! receives directed out-edges to its best `M` candidates. Edges therefore
//! always point from newer to older items, and the finished graph's entry
//! vertex is the last insertion. While the graph still has at most `M`
//! vertices the new item simply links to every predecessor, ranked by score.
//!
//! Neighbor location during construction treats the partial graph's edges as
//! traversable in both directions. Stored edges only ever point backward in
//! insertion order, so a one-way walk could never reach items inserted after
//! its current position and the graph would degenerate into a dead end around
//! the earliest insertions; two-way exploration is what makes each new item
//! find its genuinely best predecessors. Finished-graph searches walk the
//! stored out-edges only.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::search::{run_walk, NeighborSource, Scorer, SearchStats, VisitedSet};
use crate::similarity::SimilarityKind;

/// Two-way view of a one-way graph: vertex `v`'s list holds both its
/// out-neighbors and every later vertex that chose `v`. Maintained
/// incrementally during construction and derivable from any finished
/// adjacency; never serialized.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SymmetricAdjacency {
    lists: Vec<Vec<u32>>,
}

impl SymmetricAdjacency {
    pub(crate) fn with_capacity(n: usize) -> Self {
        SymmetricAdjacency {
            lists: Vec::with_capacity(n),
        }
    }

    /// Appends the next vertex (id = current length) with its out-neighbors,
    /// registering the reverse direction on each target.
    pub(crate) fn push(&mut self, neighbors: &[u32]) {
        let id = self.lists.len() as u32;
        self.lists.push(neighbors.to_vec());
        for &u in neighbors {
            self.lists[u as usize].push(id);
        }
    }

    /// Derives the view from a finished adjacency, producing exactly the
    /// structure incremental maintenance would have built.
    pub(crate) fn from_adjacency(adjacency: &[Vec<u32>]) -> Self {
        let mut sym = SymmetricAdjacency::with_capacity(adjacency.len());
        for list in adjacency {
            sym.push(list);
        }
        sym
    }
}

impl NeighborSource for SymmetricAdjacency {
    fn out_neighbors(&self, v: u32) -> &[u32] {
        &self.lists[v as usize]
    }

    fn num_vertices(&self) -> usize {
        self.lists.len()
    }
}

/// Builds a navigable graph by sequential insertion.
///
/// `max_degree` is the out-degree bound `M`; `build_pool_size` is the walk
/// pool width used when locating each new item's neighbors.
pub fn build_nsw(
    dataset: &Dataset,
    kind: SimilarityKind,
    max_degree: u32,
    build_pool_size: usize,
) -> Result<ProximityGraph> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot build a graph over an empty dataset".into(),
        ));
    }
    if max_degree == 0 {
        return Err(Error::InvalidParameter(
            "max degree must be at least 1".into(),
        ));
    }
    if build_pool_size < max_degree as usize {
        return Err(Error::InvalidParameter(format!(
            "build pool size {build_pool_size} must be at least the degree bound {max_degree}"
        )));
    }
    if kind == SimilarityKind::Angular && dataset.has_zero_norm() {
        return Err(Error::ZeroNorm(
            "dataset contains a zero-norm item; angular graphs are undefined".into(),
        ));
    }

    let mut adjacency: Vec<Vec<u32>> = Vec::with_capacity(n);
    adjacency.push(Vec::new());
    let mut sym = SymmetricAdjacency::with_capacity(n);
    sym.push(&[]);
    let mut visited = VisitedSet::new(n);
    for v in 1..n as u32 {
        let scorer = Scorer::new(dataset, kind, dataset.vector(v))?;
        let neighbors = if (v as usize) <= max_degree as usize {
            // Fewer predecessors than the degree bound: link to all of them.
            let mut scored: Vec<(u32, f32)> = (0..v).map(|u| (u, scorer.score(u))).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored.into_iter().map(|(u, _)| u).collect()
        } else {
            visited.clear();
            let mut stats = SearchStats::new();
            let entry = v - 1;
            let pool = run_walk(
                &sym,
                &scorer,
                &[entry],
                build_pool_size,
                &mut visited,
                &mut stats,
            );
            pool.top_ids(max_degree as usize)
        };
        sym.push(&neighbors);
        adjacency.push(neighbors);
    }
    ProximityGraph::new(kind, max_degree, (n - 1) as u32, adjacency)
}
