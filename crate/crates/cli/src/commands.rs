//! One function per subcommand. Each resolves its arguments, hashes them for
//! the provenance header, delegates the actual work to the library, and writes
//! artifacts through the helpers in [`crate::output`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use ipnsw::{
    brute_topk, cardinality_bias_curve, computation_distribution, group_value_rows,
    in_degree_stats, recall, result_norm_occupancy, rows_to_csv, theorem1_probability,
    theorem2_conditional, theorem2_regression, AnyIndex, Dataset, Error as CoreError, GroundTruth,
    GroundTruthMeta, IpNswIndex, IpNswParams, IpNswPlusIndex, IpNswPlusParams, PlusQueryOptions,
    SearchStats, SimilarityKind,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cli::{
    AnalyzeCommand, BenchArgs, BuildArgs, CardinalityArgs, ComputationArgs, GroundtruthArgs,
    IndegreeArgs, OccupancyArgs, SynthArgs, Theorem1Args, Theorem2Args,
};
use crate::config::{config_hash, parse_norm_model, BenchConfig, FormatArg, IndexKindArg};
use crate::output::{
    announce_binary, percentile_sorted, resolve_out_path, write_json, write_text, Provenance,
};

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    CoreError::InvalidParameter(msg.into()).into()
}

fn checksum_error(msg: impl Into<String>) -> anyhow::Error {
    CoreError::ChecksumMismatch(msg.into()).into()
}

fn load_dataset(path: &Path, format: FormatArg) -> Result<Dataset> {
    Dataset::load(path, format.into())
        .with_context(|| format!("cannot load dataset {}", path.display()))
}

/// Appends `.meta.json` to a file name, keeping the original extension.
fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let model = parse_norm_model(&args.model).map_err(config_error)?;
    let resolved = json!({
        "command": "synth",
        "n": args.n,
        "dim": args.dim,
        "model": args.model,
        "seed": args.seed,
        "format": args.format,
        "out": args.out,
    });
    let dataset = Dataset::synth_gaussian(args.n, args.dim, &model, args.seed)?;
    let checksum = dataset.checksum();
    let provenance = Provenance::new(config_hash(&resolved), Some(&checksum));
    let out = resolve_out_path(&args.out);
    announce_binary(&out, &provenance)?;
    dataset.save(&out, args.format.into())?;
    let sidecar = json!({
        "n": args.n,
        "dim": args.dim,
        "model": args.model,
        "seed": args.seed,
        "format": args.format,
        "checksum": checksum,
    });
    write_json(&sidecar_path(&out), &provenance, &sidecar)?;
    println!(
        "synthesized {} vectors of dimension {} (norm model {}) into {}",
        args.n,
        args.dim,
        args.model,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct BuildSidecar {
    kind: String,
    dataset_checksum: String,
    num_items: u64,
    dim: u32,
    max_degree: u32,
    build_pool: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    angular_degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angular_pool: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_count: Option<u32>,
    build_wall_time_ms: f64,
}

pub fn cmd_build(args: &BuildArgs) -> Result<()> {
    if args.kind == IndexKindArg::Brute {
        return Err(config_error(
            "the brute-force baseline has no index to build",
        ));
    }
    let resolved = json!({
        "command": "build",
        "dataset": args.dataset,
        "format": args.format,
        "kind": args.kind,
        "max_degree": args.max_degree,
        "build_pool": args.build_pool,
        "angular_degree": args.angular_degree,
        "angular_pool": args.angular_pool,
        "seed_count": args.seed_count,
        "out": args.out,
    });
    let dataset = load_dataset(&args.dataset, args.format)?;
    let provenance = Provenance::new(config_hash(&resolved), Some(&dataset.checksum()));
    let out = resolve_out_path(&args.out);
    announce_binary(&out, &provenance)?;

    let start = Instant::now();
    let meta = match args.kind {
        IndexKindArg::Ipnsw => {
            let params = IpNswParams {
                max_degree: args.max_degree,
                build_pool: args.build_pool,
            };
            let index = IpNswIndex::build(&dataset, params)?;
            index.save(&out)?;
            index.meta()
        }
        IndexKindArg::Ipnswplus => {
            let params = IpNswPlusParams {
                angular_degree: args.angular_degree,
                angular_pool: args.angular_pool,
                seed_count: args.seed_count,
                max_degree: args.max_degree,
                build_pool: args.build_pool,
            };
            let index = IpNswPlusIndex::build(&dataset, params)?;
            index.save(&out)?;
            index.meta()
        }
        IndexKindArg::Brute => unreachable!("rejected above"),
    };
    let wall = start.elapsed();

    let sidecar = BuildSidecar {
        kind: meta.kind.clone(),
        dataset_checksum: meta.dataset_checksum.clone(),
        num_items: meta.num_items,
        dim: meta.dim,
        max_degree: meta.max_degree,
        build_pool: meta.build_pool,
        angular_degree: meta.angular_degree,
        angular_pool: meta.angular_pool,
        seed_count: meta.seed_count,
        build_wall_time_ms: wall.as_secs_f64() * 1e3,
    };
    write_json(&sidecar_path(&out), &provenance, &sidecar)?;
    println!(
        "built {} index over {} items in {:.1} ms -> {}",
        meta.kind,
        meta.num_items,
        sidecar.build_wall_time_ms,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// groundtruth
// ---------------------------------------------------------------------------

pub fn cmd_groundtruth(args: &GroundtruthArgs) -> Result<()> {
    let resolved = json!({
        "command": "groundtruth",
        "dataset": args.dataset,
        "format": args.format,
        "queries": args.queries,
        "query_format": args.query_format,
        "k": args.k,
        "kind": args.kind,
        "out": args.out,
    });
    let dataset = load_dataset(&args.dataset, args.format)?;
    let queries = load_dataset(&args.queries, args.query_format)?;
    let provenance = Provenance::new(config_hash(&resolved), Some(&dataset.checksum()));
    let out = resolve_out_path(&args.out);
    let expected = GroundTruthMeta {
        dataset_checksum: dataset.checksum(),
        query_checksum: queries.checksum(),
        k: args.k,
        kind: SimilarityKind::from(args.kind),
        num_queries: queries.len(),
    };
    if out.exists() {
        if let Ok(found) = GroundTruthMeta::load(&out) {
            if found == expected {
                println!("{}", provenance.header_line(&[]));
                println!(
                    "cache hit: {} already matches, skipping recompute",
                    out.display()
                );
                return Ok(());
            }
        }
    }
    announce_binary(&out, &provenance)?;
    let truth = GroundTruth::compute(&dataset, &queries, args.k, expected.kind)?;
    truth.save(&out)?;
    expected.save(&out)?;
    println!(
        "computed exact top-{} ids for {} queries -> {}",
        args.k,
        queries.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

/// The engine answering bench queries: a graph index or the exact scan.
enum Engine {
    IpNsw(IpNswIndex),
    Plus(IpNswPlusIndex, PlusQueryOptions),
    Brute,
}

impl Engine {
    fn run(
        &self,
        dataset: &Dataset,
        query: &[f32],
        k: usize,
        pool: usize,
    ) -> ipnsw::Result<(Vec<u32>, SearchStats)> {
        match self {
            Engine::IpNsw(index) => index.query(dataset, query, k, pool),
            Engine::Plus(index, opts) => index.query_with(dataset, query, k, pool, *opts),
            Engine::Brute => {
                let top = brute_topk(dataset, query, k, SimilarityKind::InnerProduct)?;
                let mut stats = SearchStats::new();
                stats.eval_count = dataset.len() as u64;
                stats.inner_product_evals = dataset.len() as u64;
                Ok((top.ids, stats))
            }
        }
    }
}

/// Merges an optional JSON config file with single-field flag overrides into
/// one resolved [`BenchConfig`].
fn resolve_bench_config(args: &BenchArgs) -> Result<BenchConfig> {
    let mut base: Option<BenchConfig> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("invalid bench config: {e}")))?,
            )
        }
        None => None,
    };

    macro_rules! take {
        ($field:ident, $flag:expr, $what:expr) => {
            match (&mut base, $flag) {
                (Some(cfg), Some(v)) => {
                    cfg.$field = v;
                    cfg.$field.clone()
                }
                (Some(cfg), None) => cfg.$field.clone(),
                (None, Some(v)) => v,
                (None, None) => return Err(config_error(concat!($what, " is required"))),
            }
        };
    }
    macro_rules! take_opt {
        ($field:ident, $flag:expr) => {
            match (&mut base, $flag) {
                (Some(cfg), Some(v)) => {
                    cfg.$field = Some(v);
                    cfg.$field.clone()
                }
                (Some(cfg), None) => cfg.$field.clone(),
                (None, flag) => flag,
            }
        };
    }
    macro_rules! take_default {
        ($field:ident, $flag:expr, $default:expr) => {
            match (&mut base, $flag) {
                (Some(cfg), Some(v)) => {
                    cfg.$field = v;
                    cfg.$field
                }
                (Some(cfg), None) => cfg.$field,
                (None, Some(v)) => v,
                (None, None) => $default,
            }
        };
    }

    let dataset = take!(dataset, args.dataset.clone(), "dataset");
    let dataset_format = take_default!(dataset_format, args.format, FormatArg::Fvecs);
    let queries = take_opt!(queries, args.queries.clone());
    let query_format = take_default!(query_format, args.query_format, FormatArg::Fvecs);
    let synth_queries = take_opt!(synth_queries, args.synth_queries.clone());
    let kind = take!(kind, args.kind, "index kind");
    let index = take_opt!(index, args.index.clone());
    let max_degree = take_default!(max_degree, args.max_degree, 16);
    let build_pool = take_default!(build_pool, args.build_pool, 100);
    let angular_degree = take_default!(angular_degree, args.angular_degree, 10);
    let angular_pool = take_default!(angular_pool, args.angular_pool, 10);
    let seed_count = take_default!(seed_count, args.seed_count, 10);
    let sweep = take!(sweep, args.sweep.clone(), "sweep");
    let k = take!(k, args.k, "k");
    let num_queries = take_opt!(num_queries, args.num_queries);
    let seed = take_default!(seed, args.seed, 0);
    let groundtruth = take_opt!(groundtruth, args.groundtruth.clone());
    let parallel = match &base {
        Some(cfg) => cfg.parallel || args.parallel,
        None => args.parallel,
    };
    let include_anchors = match &base {
        Some(cfg) => cfg.include_anchors || args.include_anchors,
        None => args.include_anchors,
    };
    let out = take!(out, args.out.clone(), "out");

    let cfg = BenchConfig {
        dataset,
        dataset_format,
        queries,
        query_format,
        synth_queries,
        kind,
        index,
        max_degree,
        build_pool,
        angular_degree,
        angular_pool,
        seed_count,
        sweep,
        k,
        num_queries,
        seed,
        groundtruth,
        parallel,
        include_anchors,
        out,
    };
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

fn resolve_queries(cfg: &BenchConfig, dataset: &Dataset) -> Result<Dataset> {
    match (&cfg.queries, &cfg.synth_queries) {
        (Some(path), None) => {
            let queries = load_dataset(path, cfg.query_format)?;
            match cfg.num_queries {
                None => Ok(queries),
                Some(nq) => {
                    if nq > queries.len() {
                        return Err(config_error(format!(
                            "num_queries = {nq} exceeds the {} queries in the file",
                            queries.len()
                        )));
                    }
                    let rows: Vec<Vec<f32>> = queries.rows().take(nq).map(|r| r.to_vec()).collect();
                    Ok(Dataset::from_rows(&rows)?)
                }
            }
        }
        (None, Some(spec)) => {
            let model = parse_norm_model(spec).map_err(config_error)?;
            let nq = cfg.num_queries.expect("validated");
            Ok(Dataset::synth_gaussian(
                nq,
                dataset.dim(),
                &model,
                cfg.seed,
            )?)
        }
        _ => unreachable!("validated"),
    }
}

fn resolve_engine(cfg: &BenchConfig, dataset: &Dataset) -> Result<Engine> {
    let plus_opts = PlusQueryOptions {
        seed_count: cfg.seed_count,
        angular_pool: cfg.angular_pool,
        include_anchors: cfg.include_anchors,
    };
    match (cfg.kind, &cfg.index) {
        (IndexKindArg::Brute, _) => Ok(Engine::Brute),
        (kind, Some(path)) => {
            let index = AnyIndex::load(path)?;
            if index.meta().kind != kind.as_str() {
                return Err(config_error(format!(
                    "index {} is `{}` but the config asks for `{}`",
                    path.display(),
                    index.meta().kind,
                    kind.as_str()
                )));
            }
            if index.dataset_checksum() != dataset.checksum() {
                return Err(checksum_error(format!(
                    "index {} was built over a dataset with checksum {}, \
                     but {} has checksum {}",
                    path.display(),
                    index.dataset_checksum(),
                    cfg.dataset.display(),
                    dataset.checksum()
                )));
            }
            Ok(match index {
                AnyIndex::IpNsw(i) => Engine::IpNsw(i),
                AnyIndex::IpNswPlus(i) => Engine::Plus(i, plus_opts),
            })
        }
        (IndexKindArg::Ipnsw, None) => {
            let params = IpNswParams {
                max_degree: cfg.max_degree,
                build_pool: cfg.build_pool,
            };
            Ok(Engine::IpNsw(IpNswIndex::build(dataset, params)?))
        }
        (IndexKindArg::Ipnswplus, None) => {
            let params = IpNswPlusParams {
                angular_degree: cfg.angular_degree,
                angular_pool: cfg.angular_pool,
                seed_count: cfg.seed_count,
                max_degree: cfg.max_degree,
                build_pool: cfg.build_pool,
            };
            Ok(Engine::Plus(
                IpNswPlusIndex::build(dataset, params)?,
                plus_opts,
            ))
        }
    }
}

fn resolve_groundtruth(
    cfg: &BenchConfig,
    dataset: &Dataset,
    queries: &Dataset,
) -> Result<GroundTruth> {
    match &cfg.groundtruth {
        Some(path) => {
            let meta = GroundTruthMeta::load(path)?;
            if meta.dataset_checksum != dataset.checksum() {
                return Err(checksum_error(format!(
                    "ground truth {} was computed over a dataset with checksum {}, \
                     but {} has checksum {}",
                    path.display(),
                    meta.dataset_checksum,
                    cfg.dataset.display(),
                    dataset.checksum()
                )));
            }
            if meta.query_checksum != queries.checksum() {
                return Err(checksum_error(format!(
                    "ground truth {} covers a query set with checksum {}, \
                     but the resolved queries have checksum {}",
                    path.display(),
                    meta.query_checksum,
                    queries.checksum()
                )));
            }
            if meta.kind != SimilarityKind::InnerProduct {
                return Err(config_error(format!(
                    "ground truth {} ranks by {}, bench requires inner-product truth",
                    path.display(),
                    meta.kind
                )));
            }
            if meta.k < cfg.k {
                return Err(config_error(format!(
                    "ground truth {} stores top-{} ids, k = {} asks for more",
                    path.display(),
                    meta.k,
                    cfg.k
                )));
            }
            Ok(GroundTruth::load(path)?)
        }
        None => Ok(GroundTruth::compute(
            dataset,
            queries,
            cfg.k,
            SimilarityKind::InnerProduct,
        )?),
    }
}

struct SweepRow {
    pool: usize,
    mean_recall: f64,
    mean_eval_count: f64,
    mean_latency_ns: f64,
    p50_latency_ns: u64,
    p95_latency_ns: u64,
    mean_angular_evals: f64,
    mean_ip_evals: f64,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let cfg = resolve_bench_config(args)?;
    let dataset = load_dataset(&cfg.dataset, cfg.dataset_format)?;
    let queries = resolve_queries(&cfg, &dataset)?;
    if queries.dim() != dataset.dim() {
        return Err(config_error(format!(
            "queries have dimension {} but the dataset has {}",
            queries.dim(),
            dataset.dim()
        )));
    }
    let engine = resolve_engine(&cfg, &dataset)?;
    let truth = resolve_groundtruth(&cfg, &dataset, &queries)?;
    if truth.num_queries() != queries.len() {
        return Err(config_error(format!(
            "ground truth covers {} queries but {} were resolved",
            truth.num_queries(),
            queries.len()
        )));
    }

    let provenance = Provenance::new(config_hash(&cfg), Some(&dataset.checksum()));
    let mode = if cfg.parallel { "parallel" } else { "single" };
    let nq = queries.len();

    let mut rows = Vec::with_capacity(cfg.sweep.len());
    for &pool in &cfg.sweep {
        // Recall/eval columns are pure functions of (engine, query, pool);
        // only the latency columns depend on the execution mode.
        let per_query: Vec<(f64, SearchStats, u64)> = if cfg.parallel {
            (0..nq as u32)
                .into_par_iter()
                .map(|q| run_bench_query(&engine, &dataset, &queries, &truth, &cfg, q, pool))
                .collect::<Result<_>>()?
        } else {
            (0..nq as u32)
                .map(|q| run_bench_query(&engine, &dataset, &queries, &truth, &cfg, q, pool))
                .collect::<Result<_>>()?
        };
        let n = nq as f64;
        let mut latencies: Vec<u64> = per_query.iter().map(|r| r.2).collect();
        latencies.sort_unstable();
        let row = SweepRow {
            pool,
            mean_recall: per_query.iter().map(|r| r.0).sum::<f64>() / n,
            mean_eval_count: per_query.iter().map(|r| r.1.eval_count as f64).sum::<f64>() / n,
            mean_latency_ns: latencies.iter().map(|&l| l as f64).sum::<f64>() / n,
            p50_latency_ns: percentile_sorted(&latencies, 50.0),
            p95_latency_ns: percentile_sorted(&latencies, 95.0),
            mean_angular_evals: per_query
                .iter()
                .map(|r| r.1.angular_evals as f64)
                .sum::<f64>()
                / n,
            mean_ip_evals: per_query
                .iter()
                .map(|r| r.1.inner_product_evals as f64)
                .sum::<f64>()
                / n,
        };
        println!(
            "l={} recall={:.4} evals={:.1} latency_ns={:.0}",
            row.pool, row.mean_recall, row.mean_eval_count, row.mean_latency_ns
        );
        rows.push(row);
    }

    let mut body = String::from(
        "l,mean_recall,mean_eval_count,mean_latency_ns,p50_latency_ns,p95_latency_ns,\
         mean_angular_evals,mean_ip_evals\n",
    );
    for r in &rows {
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.pool,
            r.mean_recall,
            r.mean_eval_count,
            r.mean_latency_ns,
            r.p50_latency_ns,
            r.p95_latency_ns,
            r.mean_angular_evals,
            r.mean_ip_evals
        ));
    }
    let out = resolve_out_path(&cfg.out);
    write_text(&out, &provenance, &[("mode", mode)], &body)?;
    Ok(())
}

fn run_bench_query(
    engine: &Engine,
    dataset: &Dataset,
    queries: &Dataset,
    truth: &GroundTruth,
    cfg: &BenchConfig,
    q: u32,
    pool: usize,
) -> Result<(f64, SearchStats, u64)> {
    let started = Instant::now();
    let (ids, stats) = engine.run(dataset, queries.vector(q), cfg.k, pool)?;
    let elapsed_ns = started.elapsed().as_nanos() as u64;
    // Stored truth may hold more than k ids per query; ranked order makes the
    // first k of a row the exact top-k.
    let row = &truth.row(q as usize)[..cfg.k];
    let r = recall(&ids, row)?;
    Ok((r, stats, elapsed_ns))
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

pub fn cmd_analyze(command: &AnalyzeCommand) -> Result<()> {
    match command {
        AnalyzeCommand::Occupancy(a) => analyze_occupancy(a),
        AnalyzeCommand::Indegree(a) => analyze_indegree(a),
        AnalyzeCommand::Computation(a) => analyze_computation(a),
        AnalyzeCommand::Cardinality(a) => analyze_cardinality(a),
        AnalyzeCommand::Theorem1(a) => analyze_theorem1(a),
        AnalyzeCommand::Theorem2(a) => analyze_theorem2(a),
    }
}

fn analyze_occupancy(args: &OccupancyArgs) -> Result<()> {
    let resolved = json!({
        "command": "analyze occupancy",
        "dataset": args.dataset,
        "format": args.format,
        "queries": args.queries,
        "query_format": args.query_format,
        "k": args.k,
        "group_width": args.group_width,
        "out": args.out,
    });
    let dataset = load_dataset(&args.dataset, args.format)?;
    let queries = load_dataset(&args.queries, args.query_format)?;
    let partition = dataset.partition_by_norm(args.group_width)?;
    let occupancy = result_norm_occupancy(&dataset, &queries, args.k, &partition)?;
    let rows = group_value_rows(&partition, &occupancy)?;
    let provenance = Provenance::new(config_hash(&resolved), Some(&dataset.checksum()));
    let out = resolve_out_path(&args.out);
    write_text(&out, &provenance, &[], &rows_to_csv(&rows))?;
    println!(
        "top {}% norm group holds {:.4} of the pooled exact top-{} results",
        args.group_width, occupancy[0], args.k
    );
    Ok(())
}

/// The graph whose in-degrees and traversal evaluations carry the norm bias:
/// the inner-product graph (the only graph of the single index, the second
/// graph of the two-graph index).
fn inner_product_graph(index: &AnyIndex) -> &ipnsw::ProximityGraph {
    match index {
        AnyIndex::IpNsw(i) => i.graph(),
        AnyIndex::IpNswPlus(i) => i.ip_graph(),
    }
}

fn check_index_dataset(index: &AnyIndex, dataset: &Dataset, index_path: &Path) -> Result<()> {
    if index.dataset_checksum() != dataset.checksum() {
        return Err(checksum_error(format!(
            "index {} was built over a dataset with checksum {}, given checksum {}",
            index_path.display(),
            index.dataset_checksum(),
            dataset.checksum()
        )));
    }
    Ok(())
}

fn analyze_indegree(args: &IndegreeArgs) -> Result<()> {
    let resolved = json!({
        "command": "analyze indegree",
        "index": args.index,
        "dataset": args.dataset,
        "format": args.format,
        "group_width": args.group_width,
        "out": args.out,
    });
    let dataset = load_dataset(&args.dataset, args.format)?;
    let index = AnyIndex::load(&args.index)?;
    check_index_dataset(&index, &dataset, &args.index)?;
    let partition = dataset.partition_by_norm(args.group_width)?;
    let stats = in_degree_stats(inner_product_graph(&index), &partition)?;
    let rows = group_value_rows(&partition, &stats.per_group_mean)?;
    let provenance = Provenance::new(config_hash(&resolved), Some(&dataset.checksum()));
    let out = resolve_out_path(&args.out);
    write_text(&out, &provenance, &[], &rows_to_csv(&rows))?;
    let payload = json!({
        "global_mean": stats.global_mean,
        "per_group_mean": stats.per_group_mean,
        "top_group_ratio": stats.per_group_mean[0] / stats.global_mean,
    });
    write_json(&sidecar_path(&out), &provenance, &payload)?;
    println!(
        "top {}% norm group mean in-degree {:.2} vs global mean {:.2} ({:.1}x)",
        args.group_width,
        stats.per_group_mean[0],
        stats.global_mean,
        stats.per_group_mean[0] / stats.global_mean
    );
    Ok(())
}

fn analyze_computation(args: &ComputationArgs) -> Result<()> {
    let resolved = json!({
        "command": "analyze computation",
        "index": args.index,
        "dataset": args.dataset,
        "format": args.format,
        "queries": args.queries,
        "query_format": args.query_format,
        "pool": args.pool,
        "k": args.k,
        "num_queries": args.num_queries,
        "group_width": args.group_width,
        "out": args.out,
    });
    let dataset = load_dataset(&args.dataset, args.format)?;
    let queries = load_dataset(&args.queries, args.query_format)?;
    let index = AnyIndex::load(&args.index)?;
    check_index_dataset(&index, &dataset, &args.index)?;
    let nq = match args.num_queries {
        None => queries.len(),
        Some(nq) if nq <= queries.len() => nq,
        Some(nq) => {
            return Err(config_error(format!(
                "num_queries = {nq} exceeds the {} queries in the file",
                queries.len()
            )))
        }
    };
    let mut stats_list = Vec::with_capacity(nq);
    for q in 0..nq as u32 {
        let (_ids, stats) = index.query(&dataset, queries.vector(q), args.k, args.pool)?;
        stats_list.push(stats);
    }
    let partition = dataset.partition_by_norm(args.group_width)?;
    let shares = computation_distribution(&stats_list, &partition)?;
    let rows = group_value_rows(&partition, &shares)?;
    let provenance = Provenance::new(config_hash(&resolved), Some(&dataset.checksum()));
    let out = resolve_out_path(&args.out);
    write_text(&out, &provenance, &[], &rows_to_csv(&rows))?;
    println!(
        "top {}% norm group receives {:.4} of all score evaluations over {} queries at l={}",
        args.group_width, shares[0], nq, args.pool
    );
    Ok(())
}

fn analyze_cardinality(args: &CardinalityArgs) -> Result<()> {
    let resolved = json!({
        "command": "analyze cardinality",
        "dataset": args.dataset,
        "format": args.format,
        "queries": args.queries,
        "query_format": args.query_format,
        "rates": args.rates,
        "k": args.k,
        "group_width": args.group_width,
        "seed": args.seed,
        "out": args.out,
    });
    if args.rates.is_empty() {
        return Err(config_error("at least one sampling rate is required"));
    }
    let dataset = load_dataset(&args.dataset, args.format)?;
    let queries = load_dataset(&args.queries, args.query_format)?;
    let curve = cardinality_bias_curve(
        &dataset,
        &args.rates,
        &queries,
        args.k,
        args.group_width,
        args.seed,
    )?;
    let mut body = String::from("rate,top_group_occupancy\n");
    for (rate, occupancy) in &curve {
        body.push_str(&format!("{rate},{occupancy}\n"));
    }
    let provenance = Provenance::new(config_hash(&resolved), Some(&dataset.checksum()));
    let out = resolve_out_path(&args.out);
    write_text(&out, &provenance, &[], &body)?;
    for (rate, occupancy) in &curve {
        println!("rate={rate} top_group_occupancy={occupancy:.4}");
    }
    Ok(())
}

fn analyze_theorem1(args: &Theorem1Args) -> Result<()> {
    let resolved = json!({
        "command": "analyze theorem1",
        "alphas": args.alphas,
        "out": args.out,
    });
    if args.alphas.is_empty() {
        return Err(config_error("at least one variance ratio is required"));
    }
    let mut body = String::from("alpha,win_probability\n");
    for &alpha in &args.alphas {
        let p = theorem1_probability(alpha)?;
        body.push_str(&format!("{alpha},{p}\n"));
        println!("alpha={alpha} win_probability={p:.6}");
    }
    let provenance = Provenance::new(config_hash(&resolved), None);
    let out = resolve_out_path(&args.out);
    write_text(&out, &provenance, &[], &body)?;
    Ok(())
}

fn analyze_theorem2(args: &Theorem2Args) -> Result<()> {
    let resolved = json!({
        "command": "analyze theorem2",
        "x_norm": args.x_norm,
        "y_norm": args.y_norm,
        "beta": args.beta,
        "gamma": args.gamma,
        "dim": args.dim,
        "samples": args.samples,
        "seed": args.seed,
        "out": args.out,
    });
    if args.dim < 2 {
        return Err(config_error(
            "dimension must be at least 2 to realize the angle",
        ));
    }
    let (mean, variance) = theorem2_conditional(args.x_norm, args.y_norm, args.beta, args.gamma)?;
    // Realize the configured geometry in the first two coordinates:
    // x along e1, y at angle beta to it.
    let mut x = vec![0.0f64; args.dim];
    let mut y = vec![0.0f64; args.dim];
    x[0] = args.x_norm;
    y[0] = args.y_norm * args.beta;
    y[1] = args.y_norm * (1.0 - args.beta * args.beta).max(0.0).sqrt();
    let fit = theorem2_regression(&x, &y, args.samples, args.seed)?;
    let expected_slope = args.beta * args.x_norm / args.y_norm;
    let expected_residual_variance = args.x_norm * args.x_norm * (1.0 - args.beta * args.beta);

    let mut body = String::from("quantity,value\n");
    for (name, value) in [
        ("conditional_mean", mean),
        ("conditional_variance", variance),
        ("regression_slope", fit.slope),
        ("regression_intercept", fit.intercept),
        ("regression_residual_variance", fit.residual_variance),
        ("expected_slope", expected_slope),
        ("expected_residual_variance", expected_residual_variance),
    ] {
        body.push_str(&format!("{name},{value}\n"));
    }
    let provenance = Provenance::new(config_hash(&resolved), None);
    let out = resolve_out_path(&args.out);
    write_text(&out, &provenance, &[], &body)?;
    let payload = json!({
        "conditional": { "mean": mean, "variance": variance },
        "regression": {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual_variance": fit.residual_variance,
        },
        "expected": {
            "slope": expected_slope,
            "residual_variance": expected_residual_variance,
        },
    });
    write_json(&sidecar_path(&out), &provenance, &payload)?;
    println!(
        "slope {:.4} (expected {:.4}), residual variance {:.4} (expected {:.4})",
        fit.slope, expected_slope, fit.residual_variance, expected_residual_variance
    );
    Ok(())
}
