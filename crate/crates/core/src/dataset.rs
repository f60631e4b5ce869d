//! In-memory vector datasets: file IO, synthetic generation, norm statistics,
//! and the norm transforms used by the bias experiments.
//!
//! Items are dense `f32` vectors with ids `0..n-1`. Euclidean norms are computed
//! once at construction with 64-bit accumulation and cached; everything that
//! ranks items by norm (percentiles, partitions, transforms) reads the cache.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// On-disk dataset layouts understood by [`Dataset::load`] and [`Dataset::save`].
///
/// * `Fvecs`: repeated records of `int32` dimension (little-endian) followed by
///   that many `float32` components. The dimension must match across records.
/// * `RawF32`: a `uint64` item count and `uint64` dimension header followed by
///   `n * d` little-endian `float32` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Fvecs,
    RawF32,
}

/// Norm profile for synthetic Gaussian data.
#[derive(Debug, Clone, PartialEq)]
pub enum NormModel {
    /// Independent standard-normal components; norms concentrate near `sqrt(d)`.
    Iid,
    /// Each item is rescaled so its norm is drawn from `LogNormal(0, sigma)`.
    Lognormal { sigma: f64 },
    /// A uniformly chosen `fraction` of items is multiplied by `factor`.
    ScaledTop { fraction: f64, factor: f64 },
}

/// A dense collection of `f32` vectors with cached `f64` norms.
#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    data: Vec<f32>,
    norms: Vec<f64>,
    min_norm: f64,
}

impl Dataset {
    /// Builds a dataset from row-major storage. Fails on empty input or a
    /// length that is not a multiple of `dim`.
    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if data.is_empty() {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "data length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        let (norms, min_norm) = compute_norms(dim, &data);
        Ok(Dataset {
            dim,
            data,
            norms,
            min_norm,
        })
    }

    /// Convenience constructor from per-item rows of equal length.
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        let dim = rows[0].len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        Dataset::from_flat(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The components of item `id`. Panics if `id` is out of range.
    pub fn vector(&self, id: u32) -> &[f32] {
        let i = id as usize * self.dim;
        &self.data[i..i + self.dim]
    }

    /// Cached Euclidean norm of item `id` (64-bit accumulation).
    pub fn norm(&self, id: u32) -> f64 {
        self.norms[id as usize]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn min_norm(&self) -> f64 {
        self.min_norm
    }

    pub fn has_zero_norm(&self) -> bool {
        self.min_norm == 0.0
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// SHA-256 over the canonical raw-f32 serialization (`n`, `d`, payload),
    /// so the digest is the same no matter which file format supplied the data.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.dim as u64).to_le_bytes());
        let mut buf = Vec::with_capacity(4 * 16384);
        for chunk in self.data.chunks(16384) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            hasher.update(&buf);
        }
        hex::encode(hasher.finalize())
    }

    /// Reads a dataset from `path` in the given format.
    pub fn load(path: impl AsRef<Path>, format: FileFormat) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = BufReader::new(File::open(path)?);
        match format {
            FileFormat::Fvecs => load_fvecs(path, &mut reader),
            FileFormat::RawF32 => load_raw_f32(path, &mut reader),
        }
    }

    /// Writes the dataset to `path`; a load of the written file round-trips
    /// byte-identically.
    pub fn save(&self, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
        let mut w = BufWriter::new(File::create(path.as_ref())?);
        match format {
            FileFormat::Fvecs => {
                let dim_bytes = (self.dim as i32).to_le_bytes();
                for row in self.rows() {
                    w.write_all(&dim_bytes)?;
                    for v in row {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
            }
            FileFormat::RawF32 => {
                w.write_all(&(self.len() as u64).to_le_bytes())?;
                w.write_all(&(self.dim as u64).to_le_bytes())?;
                for v in &self.data {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Generates `n` Gaussian vectors under the given norm model, deterministic
    /// per seed.
    pub fn synth_gaussian(n: usize, dim: usize, model: &NormModel, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let data = match model {
            NormModel::Iid => gaussian_matrix(&mut rng, n, dim),
            NormModel::Lognormal { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "lognormal sigma must be positive, got {sigma}"
                    )));
                }
                let lognorm = LogNormal::new(0.0, *sigma)
                    .map_err(|e| Error::InvalidParameter(format!("lognormal: {e}")))?;
                let mut data = Vec::with_capacity(n * dim);
                let mut row = vec![0.0f64; dim];
                for _ in 0..n {
                    loop {
                        let mut sq = 0.0f64;
                        for r in row.iter_mut() {
                            *r = rng.sample(StandardNormal);
                            sq += *r * *r;
                        }
                        if sq > 0.0 {
                            let scale = lognorm.sample(&mut rng) / sq.sqrt();
                            data.extend(row.iter().map(|r| (r * scale) as f32));
                            break;
                        }
                    }
                }
                data
            }
            NormModel::ScaledTop { fraction, factor } => {
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "scaled-top fraction must be in (0, 1], got {fraction}"
                    )));
                }
                if !(*factor > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "scaled-top factor must be positive, got {factor}"
                    )));
                }
                let mut data = gaussian_matrix(&mut rng, n, dim);
                let m = ceil_count(*fraction, n);
                let mut ids: Vec<u32> = (0..n as u32).collect();
                ids.shuffle(&mut rng);
                for &id in &ids[..m] {
                    let start = id as usize * dim;
                    for v in &mut data[start..start + dim] {
                        *v = (*v as f64 * factor) as f32;
                    }
                }
                data
            }
        };
        Dataset::from_flat(dim, data)
    }

    /// The `t`-th norm percentile, `t` in `(0, 100]`: the smallest cached norm
    /// `h` such that at least `ceil(t * n / 100)` items have norm `<= h`.
    /// Counting convention with a ceiling index; no interpolation.
    pub fn norm_percentile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 100.0) {
            return Err(Error::InvalidParameter(format!(
                "percentile must be in (0, 100], got {t}"
            )));
        }
        let mut sorted = self.norms.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let need = ((t * self.len() as f64) / 100.0).ceil() as usize;
        Ok(sorted[need.clamp(1, self.len()) - 1])
    }

    /// Tailing factor: the 95th norm percentile over the median. Fails when the
    /// median norm is zero.
    pub fn tailing_factor(&self) -> Result<f64> {
        let median = self.norm_percentile(50.0)?;
        if median == 0.0 {
            return Err(Error::InvalidParameter("median norm is zero".into()));
        }
        Ok(self.norm_percentile(95.0)? / median)
    }

    /// Shifts every norm by `delta` while keeping directions: each item is
    /// multiplied by `(norm + delta) / norm`. Requires strictly positive norms
    /// and `delta > -min_norm` so the result stays positive.
    pub fn scale_additive(&self, delta: f64) -> Result<Dataset> {
        if self.has_zero_norm() {
            return Err(Error::ZeroNorm("dataset contains a zero-norm item".into()));
        }
        if !(delta > -self.min_norm) {
            return Err(Error::InvalidParameter(format!(
                "delta must exceed -min_norm = {:.6}, got {delta}",
                -self.min_norm
            )));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for (row, &norm) in self.rows().zip(&self.norms) {
            let factor = (norm + delta) / norm;
            data.extend(row.iter().map(|v| (*v as f64 * factor) as f32));
        }
        Dataset::from_flat(self.dim, data)
    }

    /// Stretches (`beta > 1`) or shrinks (`beta < 1`) norm deviations around a
    /// reference point `t_mode`: a norm `y` becomes `t - beta*(t - y)` below the
    /// mode and `t + beta*(y - t)` above it, directions unchanged. Fails if any
    /// transformed norm would be nonpositive.
    pub fn scale_about_mode(&self, beta: f64, t_mode: f64) -> Result<Dataset> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(t_mode > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_mode must be positive, got {t_mode}"
            )));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for (id, (row, &y)) in self.rows().zip(&self.norms).enumerate() {
            if y == 0.0 {
                return Err(Error::ZeroNorm(format!("item {id}")));
            }
            let scaled = if y <= t_mode {
                t_mode - beta * (t_mode - y)
            } else {
                t_mode + beta * (y - t_mode)
            };
            if !(scaled > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "beta {beta} about {t_mode} maps the norm of item {id} to {scaled}"
                )));
            }
            let factor = scaled / y;
            data.extend(row.iter().map(|v| (*v as f64 * factor) as f32));
        }
        Dataset::from_flat(self.dim, data)
    }

    /// Keeps exactly `ceil(rate * n)` items chosen uniformly without
    /// replacement (a seeded permutation prefix), re-densifies ids in ascending
    /// source order, and returns the kept source ids alongside the subset.
    pub fn uniform_sample(&self, rate: f64, seed: u64) -> Result<(Dataset, Vec<u32>)> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be in (0, 1], got {rate}"
            )));
        }
        let m = ceil_count(rate, self.len());
        let mut ids: Vec<u32> = (0..self.len() as u32).collect();
        ids.shuffle(&mut ChaCha12Rng::seed_from_u64(seed));
        let mut kept = ids[..m].to_vec();
        kept.sort_unstable();
        let mut data = Vec::with_capacity(m * self.dim);
        for &id in &kept {
            data.extend_from_slice(self.vector(id));
        }
        Ok((Dataset::from_flat(self.dim, data)?, kept))
    }

    /// Rank-based norm groups of `group_width_pct` percent each (must divide
    /// 100). Group 0 holds the largest norms; ties break by ascending id; group
    /// sizes differ by at most one.
    pub fn partition_by_norm(&self, group_width_pct: u32) -> Result<NormGroupPartition> {
        if group_width_pct == 0 || group_width_pct > 100 || 100 % group_width_pct != 0 {
            return Err(Error::InvalidParameter(format!(
                "group width must divide 100, got {group_width_pct}"
            )));
        }
        let num_groups = (100 / group_width_pct) as usize;
        let mut order: Vec<u32> = (0..self.len() as u32).collect();
        order.sort_unstable_by(|a, b| {
            self.norms[*b as usize]
                .total_cmp(&self.norms[*a as usize])
                .then(a.cmp(b))
        });
        let base = self.len() / num_groups;
        let rem = self.len() % num_groups;
        let mut sizes = vec![0usize; num_groups];
        for (g, size) in sizes.iter_mut().enumerate() {
            *size = base + usize::from(g < rem);
        }
        let mut assignment = vec![0u32; self.len()];
        let mut cursor = 0usize;
        for (g, &size) in sizes.iter().enumerate() {
            for &id in &order[cursor..cursor + size] {
                assignment[id as usize] = g as u32;
            }
            cursor += size;
        }
        Ok(NormGroupPartition {
            group_width_pct,
            assignment,
            sizes,
        })
    }
}

/// Assignment of every item to a rank-based norm group (group 0 = largest
/// norms).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormGroupPartition {
    group_width_pct: u32,
    assignment: Vec<u32>,
    sizes: Vec<usize>,
}

impl NormGroupPartition {
    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn group_width_pct(&self) -> u32 {
        self.group_width_pct
    }

    /// Number of items covered by the partition.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn group_of(&self, id: u32) -> u32 {
        self.assignment[id as usize]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Percent bounds `(low, high)` of a group; group 0 is the top `(0, width)`
    /// percent by norm.
    pub fn bounds(&self, group: usize) -> (u32, u32) {
        let g = group as u32;
        (g * self.group_width_pct, (g + 1) * self.group_width_pct)
    }

    /// Fraction of the dataset held by `group`.
    pub fn fraction(&self, group: usize) -> f64 {
        self.sizes[group] as f64 / self.len() as f64
    }
}

fn compute_norms(dim: usize, data: &[f32]) -> (Vec<f64>, f64) {
    let mut norms = Vec::with_capacity(data.len() / dim);
    let mut min_norm = f64::INFINITY;
    for row in data.chunks_exact(dim) {
        let sq: f64 = row.iter().map(|v| *v as f64 * *v as f64).sum();
        let norm = sq.sqrt();
        min_norm = min_norm.min(norm);
        norms.push(norm);
    }
    (norms, min_norm)
}

fn gaussian_matrix(rng: &mut ChaCha12Rng, n: usize, dim: usize) -> Vec<f32> {
    (0..n * dim)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            v as f32
        })
        .collect()
}

/// `ceil(rate * n)` clamped to `[1, n]`.
fn ceil_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).ceil() as usize).clamp(1, n)
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

fn load_fvecs(path: &Path, r: &mut impl Read) -> Result<Dataset> {
    let mut offset = 0u64;
    let mut dim: Option<usize> = None;
    let mut data = Vec::new();
    loop {
        let mut head = [0u8; 4];
        let got = read_full(r, &mut head)?;
        if got == 0 {
            break;
        }
        if got < 4 {
            return Err(Error::format(
                path,
                offset + got as u64,
                "truncated record header",
            ));
        }
        let d = i32::from_le_bytes(head);
        if d < 1 {
            return Err(Error::format(
                path,
                offset,
                format!("invalid vector dimension {d}"),
            ));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(d0) if d0 != d => {
                return Err(Error::format(
                    path,
                    offset,
                    format!("inconsistent record dimension: expected {d0}, got {d}"),
                ));
            }
            Some(_) => {}
        }
        offset += 4;
        let mut payload = vec![0u8; d * 4];
        let got = read_full(r, &mut payload)?;
        if got < payload.len() {
            return Err(Error::format(
                path,
                offset + got as u64,
                "truncated record payload",
            ));
        }
        data.extend(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
        );
        offset += payload.len() as u64;
    }
    match dim {
        None => Err(Error::format(path, 0, "empty dataset")),
        Some(d) => Dataset::from_flat(d, data),
    }
}

fn load_raw_f32(path: &Path, r: &mut impl Read) -> Result<Dataset> {
    let mut head = [0u8; 16];
    let got = read_full(r, &mut head)?;
    if got < 16 {
        return Err(Error::format(path, got as u64, "truncated header"));
    }
    let n = u64::from_le_bytes(head[..8].try_into().unwrap());
    let d = u64::from_le_bytes(head[8..].try_into().unwrap());
    if n == 0 {
        return Err(Error::format(path, 0, "empty dataset (n = 0)"));
    }
    if d == 0 {
        return Err(Error::format(path, 8, "invalid dimension 0"));
    }
    let payload_len = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .filter(|c| *c <= usize::MAX as u64)
        .ok_or_else(|| Error::format(path, 0, format!("implausible size {n} x {d}")))?
        as usize;
    let mut payload = vec![0u8; payload_len];
    let got = read_full(r, &mut payload)?;
    if got < payload_len {
        return Err(Error::format(path, 16 + got as u64, "truncated payload"));
    }
    let mut probe = [0u8; 1];
    if read_full(r, &mut probe)? > 0 {
        return Err(Error::format(
            path,
            16 + payload_len as u64,
            "unexpected trailing bytes",
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dataset::from_flat(d as usize, data)
}
