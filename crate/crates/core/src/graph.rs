//! Directed proximity graphs: adjacency storage, binary serialization, and
//! in-degree summaries.
//!
//! Construction adds edges only from a new vertex to already-inserted ones, so
//! out-degrees are bounded by the build parameter `M` while in-degrees are
//! unbounded — the in-degree profile is one of the bias diagnostics.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::NormGroupPartition;
use crate::error::{Error, Result};
use crate::similarity::SimilarityKind;

const GRAPH_MAGIC: &[u8; 4] = b"NSWG";
const GRAPH_VERSION: u32 = 1;

/// A directed graph over dataset ids with bounded out-degree and a fixed entry
/// vertex for walks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProximityGraph {
    kind: SimilarityKind,
    max_degree: u32,
    entry: u32,
    adjacency: Vec<Vec<u32>>,
}

impl ProximityGraph {
    /// Validates and wraps an adjacency list: at least one vertex, entry in
    /// range, every out-list within the degree bound, ids valid, no self-loops
    /// or duplicate edges.
    pub fn new(
        kind: SimilarityKind,
        max_degree: u32,
        entry: u32,
        adjacency: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "graph must have at least one vertex".into(),
            ));
        }
        if max_degree == 0 {
            return Err(Error::InvalidParameter(
                "max degree must be at least 1".into(),
            ));
        }
        if entry as usize >= n {
            return Err(Error::InvalidId { id: entry, len: n });
        }
        let mut seen = vec![u32::MAX; n];
        for (v, list) in adjacency.iter().enumerate() {
            if list.len() > max_degree as usize {
                return Err(Error::InvalidParameter(format!(
                    "vertex {v} has out-degree {} above the bound {max_degree}",
                    list.len()
                )));
            }
            for &u in list {
                if u as usize >= n {
                    return Err(Error::InvalidId { id: u, len: n });
                }
                if u as usize == v {
                    return Err(Error::InvalidParameter(format!("self-loop at vertex {v}")));
                }
                if seen[u as usize] == v as u32 {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate edge {v} -> {u}"
                    )));
                }
                seen[u as usize] = v as u32;
            }
        }
        Ok(ProximityGraph {
            kind,
            max_degree,
            entry,
            adjacency,
        })
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// The fixed start vertex for walks: the most recently inserted item.
    pub fn entry_vertex(&self) -> u32 {
        self.entry
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adjacency
    }

    /// Number of directed edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// In-degree of every vertex.
    pub fn in_degrees(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.adjacency.len()];
        for list in &self.adjacency {
            for &u in list {
                counts[u as usize] += 1;
            }
        }
        counts
    }

    /// Serializes with a fixed little-endian layout: magic, version, kind tag,
    /// `M`, vertex count, entry vertex, then per-vertex degree + neighbor ids.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(GRAPH_MAGIC)?;
        w.write_all(&GRAPH_VERSION.to_le_bytes())?;
        let tag: u8 = match self.kind {
            SimilarityKind::InnerProduct => 0,
            SimilarityKind::Angular => 1,
        };
        w.write_all(&[tag])?;
        w.write_all(&self.max_degree.to_le_bytes())?;
        w.write_all(&(self.adjacency.len() as u64).to_le_bytes())?;
        w.write_all(&self.entry.to_le_bytes())?;
        for list in &self.adjacency {
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for &u in list {
                w.write_all(&u.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a graph previously written by [`ProximityGraph::write_to`],
    /// re-running the structural validation.
    pub fn read_from(path_label: &Path, r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format(path_label, 0, "truncated graph header"))?;
        if &magic != GRAPH_MAGIC {
            return Err(Error::format(path_label, 0, "bad graph magic"));
        }
        let version = read_u32(path_label, r, 4)?;
        if version != GRAPH_VERSION {
            return Err(Error::format(
                path_label,
                4,
                format!("unsupported graph version {version}"),
            ));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)
            .map_err(|_| Error::format(path_label, 8, "truncated graph header"))?;
        let kind = match tag[0] {
            0 => SimilarityKind::InnerProduct,
            1 => SimilarityKind::Angular,
            t => {
                return Err(Error::format(
                    path_label,
                    8,
                    format!("unknown similarity tag {t}"),
                ))
            }
        };
        let max_degree = read_u32(path_label, r, 9)?;
        let n = {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)
                .map_err(|_| Error::format(path_label, 13, "truncated graph header"))?;
            u64::from_le_bytes(buf)
        };
        if n == 0 || n > u32::MAX as u64 {
            return Err(Error::format(
                path_label,
                13,
                format!("implausible vertex count {n}"),
            ));
        }
        let entry = read_u32(path_label, r, 21)?;
        let mut adjacency = Vec::with_capacity(n as usize);
        let mut offset = 25u64;
        for v in 0..n {
            let degree = read_u32(path_label, r, offset)?;
            offset += 4;
            if degree > max_degree {
                return Err(Error::format(
                    path_label,
                    offset - 4,
                    format!("vertex {v} degree {degree} above bound {max_degree}"),
                ));
            }
            let mut list = Vec::with_capacity(degree as usize);
            for _ in 0..degree {
                list.push(read_u32(path_label, r, offset)?);
                offset += 4;
            }
            adjacency.push(list);
        }
        ProximityGraph::new(kind, max_degree, entry, adjacency)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path.as_ref())?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(path, &mut r)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }
}

fn read_u32(path: &Path, r: &mut impl Read, offset: u64) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format(path, offset, "truncated graph data"))?;
    Ok(u32::from_le_bytes(buf))
}

/// Mean in-degree per norm group plus the global mean.
#[derive(Debug, Clone, PartialEq)]
pub struct InDegreeStats {
    pub per_group_mean: Vec<f64>,
    pub global_mean: f64,
}

/// Summarizes in-degrees by norm group. Empty groups report a mean of zero.
pub fn in_degree_stats(
    graph: &ProximityGraph,
    partition: &NormGroupPartition,
) -> Result<InDegreeStats> {
    if partition.len() != graph.num_vertices() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} items but the graph has {} vertices",
            partition.len(),
            graph.num_vertices()
        )));
    }
    let degrees = graph.in_degrees();
    let mut totals = vec![0u64; partition.num_groups()];
    for (id, &d) in degrees.iter().enumerate() {
        totals[partition.group_of(id as u32) as usize] += d as u64;
    }
    let per_group_mean = totals
        .iter()
        .zip(partition.sizes())
        .map(|(&t, &s)| if s == 0 { 0.0 } else { t as f64 / s as f64 })
        .collect();
    let global_mean =
        degrees.iter().map(|&d| d as u64).sum::<u64>() as f64 / graph.num_vertices() as f64;
    Ok(InDegreeStats {
        per_group_mean,
        global_mean,
    })
}
