//! The two query indexes and their on-disk form.
//!
//! `IpNswIndex` is a single inner-product graph searched from its entry
//! vertex. `IpNswPlusIndex` pairs an angular graph with an inner-product
//! graph: a walk on the angular graph picks direction anchors, the anchors'
//! inner-product out-neighbors (plus the inner-product entry vertex) seed the
//! pool, and the walk finishes on the inner-product graph. Construction runs
//! the same two-stage procedure over the partial graphs, with one difference:
//! while locating neighbors for a new item the partial graphs' edges are
//! traversable in both directions (see `build_nsw`), whereas finished-graph
//! queries walk the stored out-edges only.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::build::{build_nsw, SymmetricAdjacency};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::pool::CandidatePool;
use crate::search::{run_walk, NeighborSource, Scorer, SearchStats, VisitedSet};
use crate::similarity::SimilarityKind;

const INDEX_MAGIC: &[u8; 4] = b"NSWI";
const INDEX_VERSION: u32 = 1;

/// Build parameters for the single-graph index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpNswParams {
    /// Out-degree bound `M` of the inner-product graph.
    pub max_degree: u32,
    /// Pool width used for neighbor location during construction.
    pub build_pool: usize,
}

impl Default for IpNswParams {
    fn default() -> Self {
        IpNswParams {
            max_degree: 16,
            build_pool: 100,
        }
    }
}

/// Build parameters for the two-graph index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpNswPlusParams {
    /// Out-degree bound of the angular graph.
    pub angular_degree: u32,
    /// Pool width for angular walks (both construction and stage 1).
    pub angular_pool: usize,
    /// Number of angular anchors whose out-neighbors seed the second stage.
    pub seed_count: usize,
    /// Out-degree bound `M` of the inner-product graph.
    pub max_degree: u32,
    /// Pool width for inner-product neighbor location during construction.
    pub build_pool: usize,
}

impl Default for IpNswPlusParams {
    fn default() -> Self {
        IpNswPlusParams {
            angular_degree: 10,
            angular_pool: 10,
            seed_count: 10,
            max_degree: 16,
            build_pool: 100,
        }
    }
}

impl IpNswPlusParams {
    fn validate(&self) -> Result<()> {
        if self.seed_count == 0 {
            return Err(Error::InvalidParameter(
                "seed count must be at least 1".into(),
            ));
        }
        if self.seed_count > self.angular_pool {
            return Err(Error::InvalidParameter(format!(
                "seed count {} exceeds the angular pool width {}",
                self.seed_count, self.angular_pool
            )));
        }
        if self.angular_degree == 0 {
            return Err(Error::InvalidParameter(
                "angular degree must be at least 1".into(),
            ));
        }
        if self.angular_pool < self.angular_degree as usize {
            return Err(Error::InvalidParameter(format!(
                "angular pool {} must be at least the angular degree {}",
                self.angular_pool, self.angular_degree
            )));
        }
        Ok(())
    }
}

/// Metadata embedded in index files and exposed to callers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub kind: String,
    pub dataset_checksum: String,
    pub num_items: u64,
    pub dim: u32,
    pub max_degree: u32,
    pub build_pool: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_pool: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_count: Option<u32>,
    /// Items are inserted in id order; a shuffled insertion would record its
    /// seed here.
    #[serde(default)]
    pub insertion_seed: Option<u64>,
}

/// Single inner-product graph index.
#[derive(Debug, Clone, PartialEq)]
pub struct IpNswIndex {
    params: IpNswParams,
    dataset_checksum: String,
    dim: u32,
    graph: ProximityGraph,
}

impl IpNswIndex {
    pub fn build(dataset: &Dataset, params: IpNswParams) -> Result<Self> {
        let graph = build_nsw(
            dataset,
            SimilarityKind::InnerProduct,
            params.max_degree,
            params.build_pool,
        )?;
        Ok(IpNswIndex {
            params,
            dataset_checksum: dataset.checksum(),
            dim: dataset.dim() as u32,
            graph,
        })
    }

    pub fn params(&self) -> IpNswParams {
        self.params
    }

    pub fn graph(&self) -> &ProximityGraph {
        &self.graph
    }

    pub fn dataset_checksum(&self) -> &str {
        &self.dataset_checksum
    }

    pub fn len(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Walks the graph from its entry vertex and returns the top `k` ids.
    pub fn query(
        &self,
        dataset: &Dataset,
        query: &[f32],
        k: usize,
        pool_size: usize,
    ) -> Result<(Vec<u32>, SearchStats)> {
        crate::search::graph_search(
            &self.graph,
            dataset,
            query,
            &[self.graph.entry_vertex()],
            pool_size,
            k,
        )
    }

    pub fn meta(&self) -> IndexMeta {
        IndexMeta {
            kind: "ipnsw".into(),
            dataset_checksum: self.dataset_checksum.clone(),
            num_items: self.len() as u64,
            dim: self.dim,
            max_degree: self.params.max_degree,
            build_pool: self.params.build_pool as u32,
            angular_degree: None,
            angular_pool: None,
            seed_count: None,
            insertion_seed: None,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_index(path.as_ref(), 0, &self.meta(), &[&self.graph])
    }
}

/// Query-time knobs for the two-stage search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlusQueryOptions {
    /// Anchors taken from the angular stage.
    pub seed_count: usize,
    /// Pool width of the angular stage.
    pub angular_pool: usize,
    /// Also seed the refinement pool with the anchors themselves.
    pub include_anchors: bool,
}

/// Two-graph index: angular stage seeds an inner-product walk.
///
/// The angular stage walks its graph's edges in both directions: angular
/// similarity has no large-norm hubs, so a one-way walk from a fixed entry
/// stalls near the entry instead of following the query direction. The
/// inner-product walks use stored out-edges only. The two-way view is derived
/// from the angular adjacency whenever the index is built or loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct IpNswPlusIndex {
    params: IpNswPlusParams,
    dataset_checksum: String,
    dim: u32,
    angular_graph: ProximityGraph,
    angular_two_way: SymmetricAdjacency,
    ip_graph: ProximityGraph,
}

impl IpNswPlusIndex {
    /// Builds both graphs in one sequential pass. Each item is first inserted
    /// into the angular graph, then its inner-product neighbors are located
    /// with the same two-stage search queries use, over the partial graphs.
    pub fn build(dataset: &Dataset, params: IpNswPlusParams) -> Result<Self> {
        params.validate()?;
        let n = dataset.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "cannot build an index over an empty dataset".into(),
            ));
        }
        if params.max_degree == 0 {
            return Err(Error::InvalidParameter(
                "max degree must be at least 1".into(),
            ));
        }
        if params.build_pool < params.max_degree as usize {
            return Err(Error::InvalidParameter(format!(
                "build pool size {} must be at least the degree bound {}",
                params.build_pool, params.max_degree
            )));
        }
        if dataset.has_zero_norm() {
            return Err(Error::ZeroNorm(
                "dataset contains a zero-norm item; angular graphs are undefined".into(),
            ));
        }

        let mut angular: Vec<Vec<u32>> = Vec::with_capacity(n);
        let mut ip: Vec<Vec<u32>> = Vec::with_capacity(n);
        let mut sym_a = SymmetricAdjacency::with_capacity(n);
        let mut sym_g = SymmetricAdjacency::with_capacity(n);
        angular.push(Vec::new());
        ip.push(Vec::new());
        sym_a.push(&[]);
        sym_g.push(&[]);
        let mut visited_a = VisitedSet::new(n);
        let mut visited_g = VisitedSet::new(n);
        for v in 1..n as u32 {
            let vector = dataset.vector(v);
            // Angular insertion; afterwards the angular entry vertex is v.
            // Neighbor location uses the construction pool width: the angular
            // pool is a query-stage knob, far too narrow to find good edges.
            let angular_scorer = Scorer::new(dataset, SimilarityKind::Angular, vector)?;
            let a_neighbors = if (v as usize) <= params.angular_degree as usize {
                connect_all(&angular_scorer, v)
            } else {
                visited_a.clear();
                let mut stats = SearchStats::new();
                let pool = run_walk(
                    &sym_a,
                    &angular_scorer,
                    &[v - 1],
                    params.build_pool,
                    &mut visited_a,
                    &mut stats,
                );
                pool.top_ids(params.angular_degree as usize)
            };
            sym_a.push(&a_neighbors);
            angular.push(a_neighbors);

            // Inner-product insertion via the two-stage search. Anchor
            // out-neighbors come from the stored one-way lists; the walks
            // themselves explore the partial graphs in both directions.
            let ip_scorer = Scorer::new(dataset, SimilarityKind::InnerProduct, vector)?;
            let ip_neighbors = if (v as usize) <= params.max_degree as usize {
                connect_all(&ip_scorer, v)
            } else {
                let mut stats = SearchStats::new();
                let pool = two_stage_walk(
                    &sym_a,
                    v, // the angular entry is now v itself
                    &sym_g,
                    &ip[..],
                    v - 1,
                    &angular_scorer,
                    &ip_scorer,
                    PlusQueryOptions {
                        seed_count: params.seed_count,
                        angular_pool: params.angular_pool,
                        include_anchors: false,
                    },
                    params.build_pool,
                    &mut visited_a,
                    &mut visited_g,
                    &mut stats,
                );
                pool.top_ids(params.max_degree as usize)
            };
            sym_g.push(&ip_neighbors);
            ip.push(ip_neighbors);
        }
        let entry = (n - 1) as u32;
        Ok(IpNswPlusIndex {
            params,
            dataset_checksum: dataset.checksum(),
            dim: dataset.dim() as u32,
            angular_graph: ProximityGraph::new(
                SimilarityKind::Angular,
                params.angular_degree,
                entry,
                angular,
            )?,
            angular_two_way: sym_a,
            ip_graph: ProximityGraph::new(
                SimilarityKind::InnerProduct,
                params.max_degree,
                entry,
                ip,
            )?,
        })
    }

    pub fn params(&self) -> IpNswPlusParams {
        self.params
    }

    pub fn angular_graph(&self) -> &ProximityGraph {
        &self.angular_graph
    }

    pub fn ip_graph(&self) -> &ProximityGraph {
        &self.ip_graph
    }

    pub fn dataset_checksum(&self) -> &str {
        &self.dataset_checksum
    }

    pub fn len(&self) -> usize {
        self.ip_graph.num_vertices()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Two-stage query with the index's stored stage-1 parameters.
    pub fn query(
        &self,
        dataset: &Dataset,
        query: &[f32],
        k: usize,
        pool_size: usize,
    ) -> Result<(Vec<u32>, SearchStats)> {
        let opts = PlusQueryOptions {
            seed_count: self.params.seed_count,
            angular_pool: self.params.angular_pool,
            include_anchors: false,
        };
        self.query_with(dataset, query, k, pool_size, opts)
    }

    /// Two-stage query with explicit stage-1 parameters.
    pub fn query_with(
        &self,
        dataset: &Dataset,
        query: &[f32],
        k: usize,
        pool_size: usize,
        opts: PlusQueryOptions,
    ) -> Result<(Vec<u32>, SearchStats)> {
        if dataset.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "dataset has {} items but the index covers {}",
                dataset.len(),
                self.len()
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
        if opts.seed_count == 0 {
            return Err(Error::InvalidParameter(
                "seed count must be at least 1".into(),
            ));
        }
        if opts.seed_count > opts.angular_pool {
            return Err(Error::InvalidParameter(format!(
                "seed count {} exceeds the angular pool width {}",
                opts.seed_count, opts.angular_pool
            )));
        }
        let angular_scorer = Scorer::new(dataset, SimilarityKind::Angular, query)?;
        let ip_scorer = Scorer::new(dataset, SimilarityKind::InnerProduct, query)?;
        let mut visited_a = VisitedSet::new(dataset.len());
        let mut visited_g = VisitedSet::new(dataset.len());
        let mut stats = SearchStats::new();
        let pool = two_stage_walk(
            &self.angular_two_way,
            self.angular_graph.entry_vertex(),
            &self.ip_graph,
            &self.ip_graph,
            self.ip_graph.entry_vertex(),
            &angular_scorer,
            &ip_scorer,
            opts,
            pool_size,
            &mut visited_a,
            &mut visited_g,
            &mut stats,
        );
        Ok((pool.top_ids(k), stats))
    }

    pub fn meta(&self) -> IndexMeta {
        IndexMeta {
            kind: "ipnswplus".into(),
            dataset_checksum: self.dataset_checksum.clone(),
            num_items: self.len() as u64,
            dim: self.dim,
            max_degree: self.params.max_degree,
            build_pool: self.params.build_pool as u32,
            angular_degree: Some(self.params.angular_degree),
            angular_pool: Some(self.params.angular_pool as u32),
            seed_count: Some(self.params.seed_count as u32),
            insertion_seed: None,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_index(
            path.as_ref(),
            1,
            &self.meta(),
            &[&self.angular_graph, &self.ip_graph],
        )
    }
}

/// Ranks all predecessors of `v` by score; used while the graph is smaller
/// than the degree bound.
fn connect_all(scorer: &Scorer, v: u32) -> Vec<u32> {
    let mut scored: Vec<(u32, f32)> = (0..v).map(|u| (u, scorer.score(u))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(u, _)| u).collect()
}

/// The shared two-stage procedure.
///
/// Stage 1 walks the angular graph from its entry vertex and keeps the top
/// anchors. Stage 2 seeds an inner-product pool with the anchors'
/// inner-product out-neighbors — always including the inner-product entry
/// vertex, which also covers the case of anchors with no out-edges. Stage 3
/// continues the ordinary walk on the inner-product graph from that pool.
/// The angular stage has its own visited set; stages 2 and 3 share one, so no
/// item is scored twice under the same measure.
///
/// `ip_walk` is the neighbor structure the stage-3 walk expands; `ip_seeds`
/// holds the stored one-way out-lists used for anchor seeding. At query time
/// both are the finished inner-product graph; during construction the walk
/// runs over the two-way view of the partial graph while seeds still come
/// from the one-way lists.
#[allow(clippy::too_many_arguments)]
fn two_stage_walk<A, GW, GS>(
    angular_graph: &A,
    angular_entry: u32,
    ip_walk: &GW,
    ip_seeds: &GS,
    ip_entry: u32,
    angular_scorer: &Scorer,
    ip_scorer: &Scorer,
    opts: PlusQueryOptions,
    pool_size: usize,
    visited_a: &mut VisitedSet,
    visited_g: &mut VisitedSet,
    stats: &mut SearchStats,
) -> CandidatePool
where
    A: NeighborSource + ?Sized,
    GW: NeighborSource + ?Sized,
    GS: NeighborSource + ?Sized,
{
    visited_a.clear();
    let anchor_pool = run_walk(
        angular_graph,
        angular_scorer,
        &[angular_entry],
        opts.angular_pool,
        visited_a,
        stats,
    );
    let anchors = anchor_pool.top_ids(opts.seed_count);

    let ip_len = ip_seeds.num_vertices();
    let mut seeds: Vec<u32> = vec![ip_entry];
    for &a in &anchors {
        if (a as usize) >= ip_len {
            // During construction the new item anchors itself before it has
            // an inner-product adjacency; it cannot contribute seeds.
            continue;
        }
        if opts.include_anchors {
            seeds.push(a);
        }
        seeds.extend_from_slice(ip_seeds.out_neighbors(a));
    }
    visited_g.clear();
    run_walk(ip_walk, ip_scorer, &seeds, pool_size, visited_g, stats)
}

fn save_index(
    path: &Path,
    kind_tag: u8,
    meta: &IndexMeta,
    graphs: &[&ProximityGraph],
) -> Result<()> {
    let meta_json = serde_json::to_vec(meta)
        .map_err(|e| Error::InvalidParameter(format!("cannot encode index meta: {e}")))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(INDEX_MAGIC)?;
    w.write_all(&INDEX_VERSION.to_le_bytes())?;
    w.write_all(&[kind_tag])?;
    w.write_all(&(meta_json.len() as u32).to_le_bytes())?;
    w.write_all(&meta_json)?;
    for g in graphs {
        g.write_to(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// An index file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyIndex {
    IpNsw(IpNswIndex),
    IpNswPlus(IpNswPlusIndex),
}

impl AnyIndex {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format(path, 0, "truncated index header"))?;
        if &magic != INDEX_MAGIC {
            return Err(Error::format(path, 0, "bad index magic"));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)
            .map_err(|_| Error::format(path, 4, "truncated index header"))?;
        let version = u32::from_le_bytes(buf4);
        if version != INDEX_VERSION {
            return Err(Error::format(
                path,
                4,
                format!("unsupported index version {version}"),
            ));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)
            .map_err(|_| Error::format(path, 8, "truncated index header"))?;
        r.read_exact(&mut buf4)
            .map_err(|_| Error::format(path, 9, "truncated index header"))?;
        let meta_len = u32::from_le_bytes(buf4) as usize;
        let mut meta_json = vec![0u8; meta_len];
        r.read_exact(&mut meta_json)
            .map_err(|_| Error::format(path, 13, "truncated index metadata"))?;
        let meta: IndexMeta = serde_json::from_slice(&meta_json)
            .map_err(|e| Error::format(path, 13, format!("invalid index metadata: {e}")))?;
        match tag[0] {
            0 => {
                if meta.kind != "ipnsw" {
                    return Err(Error::format(
                        path,
                        8,
                        format!("kind tag ipnsw but metadata says {}", meta.kind),
                    ));
                }
                let graph = ProximityGraph::read_from(path, &mut r)?;
                if graph.kind() != SimilarityKind::InnerProduct {
                    return Err(Error::format(path, 13, "expected an inner-product graph"));
                }
                if graph.num_vertices() as u64 != meta.num_items
                    || graph.max_degree() != meta.max_degree
                {
                    return Err(Error::format(path, 13, "graph disagrees with metadata"));
                }
                Ok(AnyIndex::IpNsw(IpNswIndex {
                    params: IpNswParams {
                        max_degree: meta.max_degree,
                        build_pool: meta.build_pool as usize,
                    },
                    dataset_checksum: meta.dataset_checksum,
                    dim: meta.dim,
                    graph,
                }))
            }
            1 => {
                if meta.kind != "ipnswplus" {
                    return Err(Error::format(
                        path,
                        8,
                        format!("kind tag ipnswplus but metadata says {}", meta.kind),
                    ));
                }
                let (Some(angular_degree), Some(angular_pool), Some(seed_count)) =
                    (meta.angular_degree, meta.angular_pool, meta.seed_count)
                else {
                    return Err(Error::format(path, 13, "metadata lacks angular parameters"));
                };
                let angular_graph = ProximityGraph::read_from(path, &mut r)?;
                let ip_graph = ProximityGraph::read_from(path, &mut r)?;
                if angular_graph.kind() != SimilarityKind::Angular
                    || ip_graph.kind() != SimilarityKind::InnerProduct
                {
                    return Err(Error::format(path, 13, "graph kinds out of order"));
                }
                if angular_graph.num_vertices() != ip_graph.num_vertices()
                    || ip_graph.num_vertices() as u64 != meta.num_items
                    || angular_graph.max_degree() != angular_degree
                    || ip_graph.max_degree() != meta.max_degree
                {
                    return Err(Error::format(path, 13, "graphs disagree with metadata"));
                }
                let angular_two_way = SymmetricAdjacency::from_adjacency(angular_graph.adjacency());
                Ok(AnyIndex::IpNswPlus(IpNswPlusIndex {
                    params: IpNswPlusParams {
                        angular_degree,
                        angular_pool: angular_pool as usize,
                        seed_count: seed_count as usize,
                        max_degree: meta.max_degree,
                        build_pool: meta.build_pool as usize,
                    },
                    dataset_checksum: meta.dataset_checksum,
                    dim: meta.dim,
                    angular_graph,
                    angular_two_way,
                    ip_graph,
                }))
            }
            t => Err(Error::format(
                path,
                8,
                format!("unknown index kind tag {t}"),
            )),
        }
    }

    pub fn meta(&self) -> IndexMeta {
        match self {
            AnyIndex::IpNsw(i) => i.meta(),
            AnyIndex::IpNswPlus(i) => i.meta(),
        }
    }

    pub fn dataset_checksum(&self) -> &str {
        match self {
            AnyIndex::IpNsw(i) => i.dataset_checksum(),
            AnyIndex::IpNswPlus(i) => i.dataset_checksum(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyIndex::IpNsw(i) => i.len(),
            AnyIndex::IpNswPlus(i) => i.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn query(
        &self,
        dataset: &Dataset,
        query: &[f32],
        k: usize,
        pool_size: usize,
    ) -> Result<(Vec<u32>, SearchStats)> {
        match self {
            AnyIndex::IpNsw(i) => i.query(dataset, query, k, pool_size),
            AnyIndex::IpNswPlus(i) => i.query(dataset, query, k, pool_size),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NormModel;
    use crate::oracle::brute_topk;

    fn small_dataset() -> Dataset {
        Dataset::synth_gaussian(
            60,
            6,
            &NormModel::ScaledTop {
                fraction: 0.1,
                factor: 3.0,
            },
            21,
        )
        .unwrap()
    }

    #[test]
    fn ipnsw_build_matches_the_generic_builder() {
        let ds = small_dataset();
        let params = IpNswParams {
            max_degree: 4,
            build_pool: 12,
        };
        let index = IpNswIndex::build(&ds, params).unwrap();
        let direct = build_nsw(&ds, SimilarityKind::InnerProduct, 4, 12).unwrap();
        assert_eq!(index.graph(), &direct);
    }

    #[test]
    fn second_item_links_to_the_first_in_both_graphs() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let index = IpNswPlusIndex::build(&ds, IpNswPlusParams::default()).unwrap();
        assert_eq!(index.angular_graph().adjacency(), &[vec![], vec![0]]);
        assert_eq!(index.ip_graph().adjacency(), &[vec![], vec![0]]);
    }

    #[test]
    fn tiny_plus_builds_are_complete_prefix_digraphs() {
        let ds = Dataset::synth_gaussian(8, 4, &NormModel::Iid, 3).unwrap();
        let params = IpNswPlusParams {
            angular_degree: 8,
            angular_pool: 10,
            seed_count: 2,
            max_degree: 8,
            build_pool: 10,
        };
        let index = IpNswPlusIndex::build(&ds, params).unwrap();
        for v in 0..8u32 {
            let mut expect: Vec<u32> = (0..v).collect();
            let mut got_a = index.angular_graph().neighbors(v).to_vec();
            let mut got_i = index.ip_graph().neighbors(v).to_vec();
            got_a.sort_unstable();
            got_i.sort_unstable();
            expect.sort_unstable();
            assert_eq!(got_a, expect);
            assert_eq!(got_i, expect);
        }
    }

    #[test]
    fn plus_query_falls_back_to_the_entry_when_seeds_are_missing() {
        // Inner-product graph with edges only out of the entry vertex: the
        // two-stage query must behave exactly like the single-graph search.
        let ds = Dataset::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![1.0, 1.0],
            vec![3.0, 0.5],
        ])
        .unwrap();
        let angular = ProximityGraph::new(
            SimilarityKind::Angular,
            3,
            3,
            vec![vec![], vec![0], vec![0, 1], vec![0, 1, 2]],
        )
        .unwrap();
        let ip = ProximityGraph::new(
            SimilarityKind::InnerProduct,
            3,
            3,
            vec![vec![], vec![], vec![], vec![0, 1, 2]],
        )
        .unwrap();
        let params = IpNswPlusParams {
            angular_degree: 3,
            angular_pool: 4,
            seed_count: 2,
            max_degree: 3,
            build_pool: 4,
        };
        let index = IpNswPlusIndex {
            params,
            dataset_checksum: ds.checksum(),
            dim: 2,
            angular_two_way: SymmetricAdjacency::from_adjacency(angular.adjacency()),
            angular_graph: angular,
            ip_graph: ip.clone(),
        };
        let single = IpNswIndex {
            params: IpNswParams {
                max_degree: 3,
                build_pool: 4,
            },
            dataset_checksum: ds.checksum(),
            dim: 2,
            graph: ip,
        };
        for q in [[1.0f32, 0.3], [0.2, 1.0], [-1.0, 0.0]] {
            let (plus_ids, _) = index.query(&ds, &q, 2, 4).unwrap();
            let (single_ids, _) = single.query(&ds, &q, 2, 4).unwrap();
            assert_eq!(plus_ids, single_ids, "query {q:?}");
        }
    }

    #[test]
    fn fully_connected_plus_index_is_exact() {
        let ds = small_dataset();
        let n = ds.len();
        let params = IpNswPlusParams {
            angular_degree: (n - 1) as u32,
            angular_pool: n,
            seed_count: 3,
            max_degree: (n - 1) as u32,
            build_pool: n,
        };
        let index = IpNswPlusIndex::build(&ds, params).unwrap();
        let queries = Dataset::synth_gaussian(20, 6, &NormModel::Iid, 22).unwrap();
        for q in 0..queries.len() as u32 {
            let query = queries.vector(q);
            let (ids, _) = index.query(&ds, query, 5, n).unwrap();
            let truth = brute_topk(&ds, query, 5, SimilarityKind::InnerProduct).unwrap();
            assert_eq!(ids, truth.ids);
        }
    }

    #[test]
    fn refinement_keeps_the_best_seed() {
        // The returned best score can never be worse than the best seed.
        let ds = small_dataset();
        let index = IpNswPlusIndex::build(
            &ds,
            IpNswPlusParams {
                angular_degree: 4,
                angular_pool: 8,
                seed_count: 4,
                max_degree: 4,
                build_pool: 8,
            },
        )
        .unwrap();
        let queries = Dataset::synth_gaussian(10, 6, &NormModel::Iid, 23).unwrap();
        for q in 0..queries.len() as u32 {
            let query = queries.vector(q);
            let scorer = Scorer::new(&ds, SimilarityKind::InnerProduct, query).unwrap();
            let (ids, _) = index.query(&ds, query, 1, 8).unwrap();
            // Recompute the seed set the query must have started from,
            // walking the same two-way angular view the query stage uses.
            let angular_scorer = Scorer::new(&ds, SimilarityKind::Angular, query).unwrap();
            let mut visited = VisitedSet::new(ds.len());
            let mut stats = SearchStats::new();
            let anchor_pool = run_walk(
                &index.angular_two_way,
                &angular_scorer,
                &[index.angular_graph().entry_vertex()],
                index.params().angular_pool,
                &mut visited,
                &mut stats,
            );
            let anchors = anchor_pool.top_ids(index.params().seed_count);
            let mut seeds = vec![index.ip_graph().entry_vertex()];
            for &a in &anchors {
                seeds.extend_from_slice(index.ip_graph().neighbors(a));
            }
            let best_seed = seeds
                .iter()
                .map(|&s| scorer.score(s))
                .fold(f32::NEG_INFINITY, f32::max);
            assert!(scorer.score(ids[0]) >= best_seed, "query {q}");
        }
    }

    #[test]
    fn eval_accounting_splits_by_stage_kind() {
        let ds = small_dataset();
        let index = IpNswPlusIndex::build(
            &ds,
            IpNswPlusParams {
                angular_degree: 4,
                angular_pool: 8,
                seed_count: 4,
                max_degree: 4,
                build_pool: 8,
            },
        )
        .unwrap();
        let (_, stats) = index.query(&ds, ds.vector(0), 3, 10).unwrap();
        assert_eq!(
            stats.eval_count,
            stats.angular_evals + stats.inner_product_evals
        );
        assert_eq!(stats.eval_count as usize, stats.eval_ids.len());
        assert!(stats.angular_evals > 0);
        assert!(stats.inner_product_evals > 0);
        // Each item at most once per stage, so at most twice overall.
        let mut counts = std::collections::HashMap::new();
        for &id in &stats.eval_ids {
            *counts.entry(id).or_insert(0u32) += 1;
        }
        assert!(counts.values().all(|&c| c <= 2));
    }

    #[test]
    fn index_files_round_trip() {
        let ds = small_dataset();
        let dir = tempfile::tempdir().unwrap();

        let single = IpNswIndex::build(
            &ds,
            IpNswParams {
                max_degree: 4,
                build_pool: 12,
            },
        )
        .unwrap();
        let p1 = dir.path().join("single.nswi");
        single.save(&p1).unwrap();
        match AnyIndex::load(&p1).unwrap() {
            AnyIndex::IpNsw(back) => assert_eq!(back, single),
            _ => panic!("wrong kind"),
        }

        let plus = IpNswPlusIndex::build(
            &ds,
            IpNswPlusParams {
                angular_degree: 4,
                angular_pool: 8,
                seed_count: 4,
                max_degree: 4,
                build_pool: 8,
            },
        )
        .unwrap();
        let p2 = dir.path().join("plus.nswi");
        plus.save(&p2).unwrap();
        match AnyIndex::load(&p2).unwrap() {
            AnyIndex::IpNswPlus(back) => assert_eq!(back, plus),
            _ => panic!("wrong kind"),
        }

        // Saving the same index twice is byte-identical.
        let p3 = dir.path().join("again.nswi");
        plus.save(&p3).unwrap();
        assert_eq!(std::fs::read(&p2).unwrap(), std::fs::read(&p3).unwrap());
    }

    #[test]
    fn plus_params_are_validated() {
        let ds = small_dataset();
        let bad = IpNswPlusParams {
            seed_count: 20,
            angular_pool: 10,
            ..Default::default()
        };
        assert!(IpNswPlusIndex::build(&ds, bad).is_err());
        let zero = Dataset::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(IpNswPlusIndex::build(&zero, IpNswPlusParams::default()).is_err());
    }
}
