//! Exact baselines: linear-scan top-k, recall, candidate-aggregation
//! experiments, and ground-truth files.
//!
//! Oracle scores accumulate in `f64` (graph search uses `f32`), so
//! agreement checks compare id sets under the shared tie rule rather than
//! floating-point scores.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::similarity::{dot_f64, SimilarityKind};

/// Exact top-k result: ids ordered by descending score, ties by id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult {
    pub ids: Vec<u32>,
    pub scores: Vec<f64>,
}

impl TopKResult {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn brute_scores(dataset: &Dataset, query: &[f32], kind: SimilarityKind) -> Result<Vec<f64>> {
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
    Ok((0..dataset.len() as u32)
        .map(|id| {
            let dot = dot_f64(query, dataset.vector(id));
            match kind {
                SimilarityKind::InnerProduct => dot,
                SimilarityKind::Angular => dot / (query_norm * dataset.norm(id)),
            }
        })
        .collect())
}

/// Exact top-k by full scan with `f64` accumulation.
pub fn brute_topk(
    dataset: &Dataset,
    query: &[f32],
    k: usize,
    kind: SimilarityKind,
) -> Result<TopKResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > dataset.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the dataset size {}",
            dataset.len()
        )));
    }
    let scores = brute_scores(dataset, query, kind)?;
    let mut order: Vec<u32> = (0..dataset.len() as u32).collect();
    order.sort_by(|&a, &b| {
        scores[b as usize]
            .total_cmp(&scores[a as usize])
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let top_scores = order.iter().map(|&id| scores[id as usize]).collect();
    Ok(TopKResult {
        ids: order,
        scores: top_scores,
    })
}

/// Fraction of the truth set recovered: `|result ∩ truth| / |truth|`.
/// Order within either set is irrelevant.
pub fn recall(result: &[u32], truth: &[u32]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("truth set is empty".into()));
    }
    let truth_set: HashSet<u32> = truth.iter().copied().collect();
    let result_set: HashSet<u32> = result.iter().copied().collect();
    if result_set.len() > truth_set.len() {
        return Err(Error::InvalidParameter(format!(
            "result has {} distinct ids but truth only {}",
            result_set.len(),
            truth_set.len()
        )));
    }
    let hits = result_set
        .iter()
        .filter(|id| truth_set.contains(id))
        .count();
    Ok(hits as f64 / truth_set.len() as f64)
}

fn staged_oracle_recall(
    dataset: &Dataset,
    queries: &Dataset,
    k: usize,
    stage1_kind: SimilarityKind,
) -> Result<f64> {
    if queries.len() == 0 {
        return Err(Error::InvalidParameter("no queries supplied".into()));
    }
    let mut total = 0.0;
    for q in 0..queries.len() as u32 {
        let query = queries.vector(q);
        let truth = brute_topk(dataset, query, k, SimilarityKind::InnerProduct)?;
        let stage1 = brute_topk(dataset, query, k, stage1_kind)?;
        let mut candidates: HashSet<u32> = HashSet::new();
        for &a in &stage1.ids {
            let neighbors =
                brute_topk(dataset, dataset.vector(a), k, SimilarityKind::InnerProduct)?;
            candidates.extend(neighbors.ids);
        }
        let hits = truth
            .ids
            .iter()
            .filter(|id| candidates.contains(id))
            .count();
        total += hits as f64 / k as f64;
    }
    Ok(total / queries.len() as f64)
}

/// Candidate-aggregation experiment: per query, take the exact top-k angular
/// neighbors, pool each one's exact top-k inner-product neighbors, and measure
/// how much of the true inner-product top-k that candidate set covers.
/// Returns the mean over queries.
pub fn two_stage_oracle_recall(dataset: &Dataset, queries: &Dataset, k: usize) -> Result<f64> {
    staged_oracle_recall(dataset, queries, k, SimilarityKind::Angular)
}

/// Same aggregation with inner-product neighbors in the first stage: pools the
/// top-k inner-product neighbors of the query's own top-k inner-product
/// neighbors.
pub fn mips_of_mips_oracle_recall(dataset: &Dataset, queries: &Dataset, k: usize) -> Result<f64> {
    staged_oracle_recall(dataset, queries, k, SimilarityKind::InnerProduct)
}

/// Exact top-k ids for a batch of queries, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    k: usize,
    ids: Vec<u32>,
}

impl GroundTruth {
    /// Runs the linear-scan oracle for every query.
    pub fn compute(
        dataset: &Dataset,
        queries: &Dataset,
        k: usize,
        kind: SimilarityKind,
    ) -> Result<Self> {
        if queries.dim() != dataset.dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.dim(),
                got: queries.dim(),
            });
        }
        let mut ids = Vec::with_capacity(queries.len() * k);
        for q in 0..queries.len() as u32 {
            ids.extend(brute_topk(dataset, queries.vector(q), k, kind)?.ids);
        }
        Ok(GroundTruth { k, ids })
    }

    pub fn from_rows(k: usize, rows: &[Vec<u32>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let mut ids = Vec::with_capacity(rows.len() * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "ground-truth row has {} ids, expected {k}",
                    row.len()
                )));
            }
            ids.extend_from_slice(row);
        }
        Ok(GroundTruth { k, ids })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_queries(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn row(&self, query: usize) -> &[u32] {
        &self.ids[query * self.k..(query + 1) * self.k]
    }

    /// File layout: `u64` query count, `u64` k, then row-major `u32` ids, all
    /// little-endian.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path.as_ref())?);
        w.write_all(&(self.num_queries() as u64).to_le_bytes())?;
        w.write_all(&(self.k as u64).to_le_bytes())?;
        for &id in &self.ids {
            w.write_all(&id.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::format(path, 0, "truncated ground-truth header"))?;
        let num_queries = u64::from_le_bytes(header[0..8].try_into().unwrap());
        let k = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if k == 0 {
            return Err(Error::format(path, 8, "ground-truth k is zero"));
        }
        let total = num_queries
            .checked_mul(k)
            .filter(|&t| t <= (u32::MAX as u64) * (u32::MAX as u64))
            .ok_or_else(|| Error::format(path, 0, "implausible ground-truth size"))?;
        let mut ids = Vec::with_capacity(total as usize);
        let mut buf = [0u8; 4];
        for i in 0..total {
            r.read_exact(&mut buf)
                .map_err(|_| Error::format(path, 16 + i * 4, "truncated ground-truth ids"))?;
            ids.push(u32::from_le_bytes(buf));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::format(
                path,
                16 + total * 4,
                "unexpected trailing bytes",
            ));
        }
        Ok(GroundTruth { k: k as usize, ids })
    }
}

/// Sidecar describing how a ground-truth file was produced; used for cache
/// hits and for refusing mismatched dataset/query pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthMeta {
    pub dataset_checksum: String,
    pub query_checksum: String,
    pub k: usize,
    pub kind: SimilarityKind,
    pub num_queries: usize,
}

impl GroundTruthMeta {
    /// Path of the sidecar next to a ground-truth file.
    pub fn path_for(gt_path: &Path) -> PathBuf {
        let mut name = gt_path.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        gt_path.with_file_name(name)
    }

    pub fn save(&self, gt_path: &Path) -> Result<()> {
        let file = File::create(Self::path_for(gt_path))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self).map_err(|e| {
            Error::InvalidParameter(format!("cannot encode ground-truth meta: {e}"))
        })?;
        Ok(())
    }

    pub fn load(gt_path: &Path) -> Result<Self> {
        let path = Self::path_for(gt_path);
        let file = File::open(&path)?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::format(&path, 0, format!("invalid ground-truth meta: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NormModel;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn brute_topk_on_a_three_item_example() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let top = brute_topk(&ds, &[1.0, 0.0], 2, SimilarityKind::InnerProduct).unwrap();
        assert_eq!(top.ids, vec![2, 0]);
        assert_eq!(top.scores, vec![2.0, 1.0]);
    }

    #[test]
    fn k_equals_n_returns_everything_sorted() {
        let ds = Dataset::from_rows(&[vec![1.0], vec![3.0], vec![2.0]]).unwrap();
        let top = brute_topk(&ds, &[1.0], 3, SimilarityKind::InnerProduct).unwrap();
        assert_eq!(top.ids, vec![1, 2, 0]);
        assert!(brute_topk(&ds, &[1.0], 4, SimilarityKind::InnerProduct).is_err());
    }

    #[test]
    fn ties_break_by_id_ascending() {
        let ds = Dataset::from_rows(&[vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]]).unwrap();
        // Orthogonal query: every score is 0.
        let top = brute_topk(&ds, &[1.0, 0.0], 2, SimilarityKind::InnerProduct).unwrap();
        assert_eq!(top.ids, vec![0, 1]);
    }

    #[test]
    fn agrees_with_repeated_max_extraction() {
        let ds = Dataset::synth_gaussian(120, 8, &NormModel::Iid, 11).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..100 {
            let q: Vec<f32> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let top = brute_topk(&ds, &q, 5, SimilarityKind::InnerProduct).unwrap();
            // Independent path: pull the maximum five times by linear scan.
            let mut remaining: Vec<(u32, f64)> = (0..ds.len() as u32)
                .map(|id| (id, dot_f64(&q, ds.vector(id))))
                .collect();
            let mut ids = Vec::new();
            for _ in 0..5 {
                let best = remaining
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap();
                ids.push(remaining.swap_remove(best).0);
            }
            assert_eq!(ids, top.ids);
        }
    }

    #[test]
    fn topk_prefix_property_holds() {
        let ds = Dataset::synth_gaussian(40, 6, &NormModel::Iid, 3).unwrap();
        let q = vec![0.3, -1.0, 0.5, 0.0, 2.0, -0.2];
        for k in 1..10 {
            let a = brute_topk(&ds, &q, k, SimilarityKind::InnerProduct).unwrap();
            let b = brute_topk(&ds, &q, k + 1, SimilarityKind::InnerProduct).unwrap();
            assert_eq!(a.ids[..], b.ids[..k]);
        }
    }

    #[test]
    fn recall_basic_cases() {
        assert_eq!(recall(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(recall(&[4, 5, 6], &[1, 2, 3]).unwrap(), 0.0);
        let result: Vec<u32> = (0..9).collect();
        let truth: Vec<u32> = (0..8).chain([20, 21]).collect();
        assert_eq!(recall(&result, &truth).unwrap(), 0.8);
        assert!(recall(&[1], &[]).is_err());
        assert!(recall(&[1, 2], &[1]).is_err());
    }

    #[test]
    fn recall_is_symmetric_at_equal_sizes_and_order_free() {
        let a = [3u32, 1, 2];
        let b = [2u32, 9, 1];
        assert_eq!(recall(&a, &b).unwrap(), recall(&b, &a).unwrap());
        assert_eq!(recall(&[1, 2, 3], &b).unwrap(), recall(&a, &b).unwrap());
    }

    #[test]
    fn two_stage_recall_is_one_when_the_top_item_dominates() {
        // Item 0 is both the best direction and the best inner product for
        // the query, and its own best inner-product neighbor.
        let ds = Dataset::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let queries = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(two_stage_oracle_recall(&ds, &queries, 1).unwrap(), 1.0);
    }

    #[test]
    fn stage_kinds_coincide_when_all_norms_are_equal() {
        // Unit-magnitude components: every item norm is sqrt(d), so angular
        // and inner-product orders agree for every query.
        let mut rng = StdRng::seed_from_u64(77);
        let rows: Vec<Vec<f32>> = (0..30)
            .map(|_| {
                (0..8)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let queries = Dataset::synth_gaussian(10, 8, &NormModel::Iid, 5).unwrap();
        let a = two_stage_oracle_recall(&ds, &queries, 3).unwrap();
        let b = mips_of_mips_oracle_recall(&ds, &queries, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ground_truth_round_trip_and_meta() {
        let ds = Dataset::synth_gaussian(30, 4, &NormModel::Iid, 9).unwrap();
        let queries = Dataset::synth_gaussian(7, 4, &NormModel::Iid, 10).unwrap();
        let gt = GroundTruth::compute(&ds, &queries, 3, SimilarityKind::InnerProduct).unwrap();
        assert_eq!(gt.num_queries(), 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.gt");
        gt.save(&path).unwrap();
        let back = GroundTruth::load(&path).unwrap();
        assert_eq!(gt, back);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 7 * 3 * 4);

        let meta = GroundTruthMeta {
            dataset_checksum: ds.checksum(),
            query_checksum: queries.checksum(),
            k: 3,
            kind: SimilarityKind::InnerProduct,
            num_queries: 7,
        };
        meta.save(&path).unwrap();
        assert_eq!(GroundTruthMeta::load(&path).unwrap(), meta);
    }

    #[test]
    fn truncated_ground_truth_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.gt");
        let gt = GroundTruth::from_rows(2, &[vec![0, 1], vec![2, 3]]).unwrap();
        gt.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            GroundTruth::load(&path),
            Err(Error::Format { .. })
        ));
    }
}
