//! Argument types shared across subcommands and the bench run configuration.
//!
//! A bench run can be described entirely by flags, entirely by a JSON config
//! file, or by a config file with individual flags overriding single fields.
//! The provenance hash printed on every output is computed from the *resolved*
//! configuration, so two invocations that resolve to the same run carry the
//! same hash regardless of how the values were supplied.

use std::path::PathBuf;

use clap::ValueEnum;
use ipnsw::{FileFormat, NormModel, SimilarityKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Dataset file format flag (`FileFormat` with CLI/serde faces).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    /// Per-vector `u32` dimension prefix followed by `f32` components.
    #[default]
    Fvecs,
    /// Flat header (`u64` count, `u64` dimension) followed by `f32` rows.
    Raw,
}

impl From<FormatArg> for FileFormat {
    fn from(f: FormatArg) -> FileFormat {
        match f {
            FormatArg::Fvecs => FileFormat::Fvecs,
            FormatArg::Raw => FileFormat::RawF32,
        }
    }
}

/// Similarity measure flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityArg {
    #[default]
    InnerProduct,
    Angular,
}

impl From<SimilarityArg> for SimilarityKind {
    fn from(s: SimilarityArg) -> SimilarityKind {
        match s {
            SimilarityArg::InnerProduct => SimilarityKind::InnerProduct,
            SimilarityArg::Angular => SimilarityKind::Angular,
        }
    }
}

/// Which engine answers the queries in a bench run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKindArg {
    /// Single inner-product graph.
    Ipnsw,
    /// Angular stage seeding an inner-product graph.
    Ipnswplus,
    /// Exact linear scan (the baseline; every query evaluates all n items).
    Brute,
}

impl IndexKindArg {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexKindArg::Ipnsw => "ipnsw",
            IndexKindArg::Ipnswplus => "ipnswplus",
            IndexKindArg::Brute => "brute",
        }
    }
}

/// Parses a norm model spec: `iid`, `lognormal:<sigma>`, or
/// `scaled-top:<fraction>:<factor>`.
pub fn parse_norm_model(spec: &str) -> Result<NormModel, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["iid"] => Ok(NormModel::Iid),
        ["lognormal", sigma] => {
            let sigma: f64 = sigma
                .parse()
                .map_err(|_| format!("invalid lognormal sigma {sigma:?}"))?;
            Ok(NormModel::Lognormal { sigma })
        }
        ["scaled-top", fraction, factor] => {
            let fraction: f64 = fraction
                .parse()
                .map_err(|_| format!("invalid scaled-top fraction {fraction:?}"))?;
            let factor: f64 = factor
                .parse()
                .map_err(|_| format!("invalid scaled-top factor {factor:?}"))?;
            Ok(NormModel::ScaledTop { fraction, factor })
        }
        _ => Err(format!(
            "unrecognized norm model {spec:?}; expected `iid`, `lognormal:<sigma>`, \
             or `scaled-top:<fraction>:<factor>`"
        )),
    }
}

fn default_max_degree() -> u32 {
    16
}
fn default_build_pool() -> usize {
    100
}
fn default_angular_degree() -> u32 {
    10
}
fn default_angular_pool() -> usize {
    10
}
fn default_seed_count() -> usize {
    10
}

/// One fully described bench run: dataset, queries, engine, sweep, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Dataset file path.
    pub dataset: PathBuf,
    #[serde(default)]
    pub dataset_format: FormatArg,
    /// Query file path; mutually exclusive with `synth_queries`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<PathBuf>,
    #[serde(default)]
    pub query_format: FormatArg,
    /// Synthetic query spec (norm model string); requires `num_queries`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth_queries: Option<String>,
    /// Engine kind: `ipnsw`, `ipnswplus`, or `brute`.
    pub kind: IndexKindArg,
    /// Optional prebuilt index file; when absent the index is built in-process
    /// from the parameters below. Not allowed for `brute`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
    /// Out-degree bound of the inner-product graph (M).
    #[serde(default = "default_max_degree")]
    pub max_degree: u32,
    /// Construction pool width (l_build).
    #[serde(default = "default_build_pool")]
    pub build_pool: usize,
    /// Angular graph out-degree bound (two-graph engine only).
    #[serde(default = "default_angular_degree")]
    pub angular_degree: u32,
    /// Angular stage pool width (two-graph engine only).
    #[serde(default = "default_angular_pool")]
    pub angular_pool: usize,
    /// Number of angular anchors whose neighbors seed the refinement stage.
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    /// Query-time pool widths, strictly increasing.
    pub sweep: Vec<usize>,
    /// Result size; must not exceed the smallest sweep value.
    pub k: usize,
    /// Number of queries: truncates a query file, sizes a synthetic set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_queries: Option<usize>,
    /// Seed for synthetic queries and any in-process sampling.
    #[serde(default)]
    pub seed: u64,
    /// Optional precomputed ground-truth file (with its meta sidecar); when
    /// absent the exact answers are computed in-process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groundtruth: Option<PathBuf>,
    /// Answer queries on a thread pool. Recall and evaluation columns are
    /// unaffected; the output header is labeled `mode=parallel`.
    #[serde(default)]
    pub parallel: bool,
    /// Also seed the refinement pool with the anchors themselves.
    #[serde(default)]
    pub include_anchors: bool,
    /// Output CSV path.
    pub out: PathBuf,
}

impl BenchConfig {
    /// Structural checks that do not require touching the filesystem.
    pub fn validate(&self) -> Result<(), String> {
        if self.sweep.is_empty() {
            return Err("sweep must list at least one pool width".into());
        }
        if !self.sweep.windows(2).all(|w| w[0] < w[1]) {
            return Err(format!(
                "sweep {:?} must be strictly increasing",
                self.sweep
            ));
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if self.k > self.sweep[0] {
            return Err(format!(
                "k = {} exceeds the smallest sweep pool width {}",
                self.k, self.sweep[0]
            ));
        }
        match (&self.queries, &self.synth_queries) {
            (Some(_), Some(_)) => {
                return Err("give either a query file or a synthetic query spec, not both".into())
            }
            (None, None) => {
                return Err(
                    "queries are required: set a query file or a synthetic query spec".into(),
                )
            }
            (None, Some(spec)) => {
                parse_norm_model(spec)?;
                if self.num_queries.is_none() {
                    return Err("synthetic queries require num_queries".into());
                }
            }
            (Some(_), None) => {}
        }
        if let Some(nq) = self.num_queries {
            if nq == 0 {
                return Err("num_queries must be at least 1".into());
            }
        }
        if self.kind == IndexKindArg::Brute && self.index.is_some() {
            return Err("the brute-force baseline does not take an index file".into());
        }
        Ok(())
    }
}

/// First 16 hex characters of the SHA-256 of a value's canonical JSON. Every
/// command hashes its resolved parameters this way for the provenance header.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serialization cannot fail");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> BenchConfig {
        BenchConfig {
            dataset: "data.fvecs".into(),
            dataset_format: FormatArg::Fvecs,
            queries: Some("q.fvecs".into()),
            query_format: FormatArg::Fvecs,
            synth_queries: None,
            kind: IndexKindArg::Ipnsw,
            index: None,
            max_degree: 16,
            build_pool: 100,
            angular_degree: 10,
            angular_pool: 10,
            seed_count: 10,
            sweep: vec![10, 20, 50],
            k: 10,
            num_queries: None,
            seed: 0,
            groundtruth: None,
            parallel: false,
            include_anchors: false,
            out: "curve.csv".into(),
        }
    }

    #[test]
    fn valid_config_passes() {
        base_config().validate().unwrap();
    }

    #[test]
    fn sweep_must_increase_strictly() {
        let mut c = base_config();
        c.sweep = vec![10, 10, 20];
        assert!(c.validate().is_err());
        c.sweep = vec![20, 10];
        assert!(c.validate().is_err());
        c.sweep = vec![];
        assert!(c.validate().is_err());
    }

    #[test]
    fn k_bounded_by_smallest_sweep_entry() {
        let mut c = base_config();
        c.k = 11;
        assert!(c.validate().is_err());
        c.k = 10;
        c.validate().unwrap();
    }

    #[test]
    fn queries_are_exclusive_and_required() {
        let mut c = base_config();
        c.synth_queries = Some("iid".into());
        assert!(c.validate().is_err());
        c.queries = None;
        assert!(c.validate().is_err(), "synthetic queries need num_queries");
        c.num_queries = Some(50);
        c.validate().unwrap();
        c.synth_queries = None;
        assert!(c.validate().is_err(), "no query source at all");
    }

    #[test]
    fn brute_rejects_an_index_file() {
        let mut c = base_config();
        c.kind = IndexKindArg::Brute;
        c.index = Some("x.nswi".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn norm_model_specs_parse() {
        assert_eq!(parse_norm_model("iid").unwrap(), NormModel::Iid);
        assert_eq!(
            parse_norm_model("lognormal:0.5").unwrap(),
            NormModel::Lognormal { sigma: 0.5 }
        );
        assert_eq!(
            parse_norm_model("scaled-top:0.05:3.0").unwrap(),
            NormModel::ScaledTop {
                fraction: 0.05,
                factor: 3.0
            }
        );
        assert!(parse_norm_model("uniform").is_err());
        assert!(parse_norm_model("lognormal:abc").is_err());
        assert!(parse_norm_model("scaled-top:0.05").is_err());
    }

    #[test]
    fn config_hash_is_stable_and_order_sensitive() {
        let a = base_config();
        let b = base_config();
        assert_eq!(config_hash(&a), config_hash(&b));
        let mut c = base_config();
        c.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 16);
    }
}
