//! Statistical diagnostics: the probability that one Gaussian inner product
//! beats another as norms grow, the conditional distribution underlying
//! angular seeding, and the norm-bias pipelines (result occupancy, evaluation
//! shares, sample-size trends).

use libm::erf;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dataset::{Dataset, NormGroupPartition};
use crate::error::{Error, Result};
use crate::graph::InDegreeStats;
use crate::oracle::brute_topk;
use crate::search::SearchStats;
use crate::similarity::SimilarityKind;

/// Probability that `u ≥ v` for independent centered Gaussians with
/// `Var(u)/Var(v) = alpha ≥ 1`, conditioned on both being nonnegative:
/// the chance that the larger-variance coordinate wins.
///
/// Computed as `√(2/(πα)) ∫₀^∞ exp(−a²/(2α)) √(π/2) erf(a/√2) da` with the
/// outer integral truncated at `12√α` (the integrand decays like a Gaussian
/// tail, so the truncation error is far below the tolerance) and evaluated by
/// adaptive Simpson refinement to an absolute tolerance of 1e-8.
pub fn theorem1_probability(alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance ratio must be at least 1, got {alpha}"
        )));
    }
    // The inner Gaussian integral reduces to `√(π/2)·erf(a/√2)`; combining
    // its constant with the outer `2/(π√α)` prefactor leaves `√(2/(πα))`.
    let integrand = |a: f64| (-a * a / (2.0 * alpha)).exp() * erf(a / std::f64::consts::SQRT_2);
    let upper = 12.0 * alpha.sqrt();
    let integral = adaptive_simpson(&integrand, 0.0, upper, 1e-8);
    Ok((2.0 / (std::f64::consts::PI * alpha)).sqrt() * integral)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Conditional distribution of `xᵀz` given `yᵀz = gamma` for standard normal
/// `z`, where `beta` is the angular similarity of `x` and `y`:
/// mean `γβ‖x‖/‖y‖`, variance `‖x‖²(1−β²)`.
pub fn theorem2_conditional(x_norm: f64, y_norm: f64, beta: f64, gamma: f64) -> Result<(f64, f64)> {
    if x_norm <= 0.0 || y_norm <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "norms must be positive, got {x_norm} and {y_norm}"
        )));
    }
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "angular similarity must lie in [-1, 1], got {beta}"
        )));
    }
    let mean = gamma * beta * x_norm / y_norm;
    let variance = x_norm * x_norm * (1.0 - beta * beta);
    Ok((mean, variance))
}

/// Least-squares fit of `xᵀz` against `yᵀz` over random standard-normal `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_variance: f64,
}

/// Simulates the conditional distribution: draws `samples` standard-normal
/// vectors `z`, regresses `xᵀz` on `yᵀz`, and reports slope, intercept, and
/// residual variance. The slope should approach `β‖x‖/‖y‖` and the residual
/// variance `‖x‖²(1−β²)`.
pub fn theorem2_regression(
    x: &[f64],
    y: &[f64],
    samples: usize,
    seed: u64,
) -> Result<RegressionFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidParameter("vectors must be non-empty".into()));
    }
    if samples < 3 {
        return Err(Error::InvalidParameter("need at least 3 samples".into()));
    }
    if x.iter().all(|&v| v == 0.0) || y.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroNorm("regression vectors must be nonzero".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut us = Vec::with_capacity(samples);
    let mut ws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut u = 0.0;
        let mut w = 0.0;
        for i in 0..x.len() {
            let z: f64 = normal.sample(&mut rng);
            u += y[i] * z;
            w += x[i] * z;
        }
        us.push(u);
        ws.push(w);
    }
    let n = samples as f64;
    let u_mean = us.iter().sum::<f64>() / n;
    let w_mean = ws.iter().sum::<f64>() / n;
    let mut suu = 0.0;
    let mut suw = 0.0;
    for i in 0..samples {
        let du = us[i] - u_mean;
        suu += du * du;
        suw += du * (ws[i] - w_mean);
    }
    if suu == 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate regressor with zero variance".into(),
        ));
    }
    let slope = suw / suu;
    let intercept = w_mean - slope * u_mean;
    let sse: f64 = (0..samples)
        .map(|i| {
            let r = ws[i] - intercept - slope * us[i];
            r * r
        })
        .sum();
    Ok(RegressionFit {
        slope,
        intercept,
        residual_variance: sse / (n - 2.0),
    })
}

/// Probability that an item survives every one of `m` independent
/// comparisons: the plain product of the per-comparison probabilities.
pub fn product_survival(p_list: &[f64]) -> f64 {
    p_list.iter().product()
}

/// For each norm group, the fraction of the pooled exact top-k results (over
/// all queries, with multiplicity) that falls in the group.
pub fn result_norm_occupancy(
    dataset: &Dataset,
    queries: &Dataset,
    k: usize,
    partition: &NormGroupPartition,
) -> Result<Vec<f64>> {
    if partition.len() != dataset.len() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} items but the dataset has {}",
            partition.len(),
            dataset.len()
        )));
    }
    if queries.len() == 0 {
        return Err(Error::InvalidParameter("no queries supplied".into()));
    }
    let mut counts = vec![0u64; partition.num_groups()];
    for q in 0..queries.len() as u32 {
        let top = brute_topk(dataset, queries.vector(q), k, SimilarityKind::InnerProduct)?;
        for id in top.ids {
            counts[partition.group_of(id) as usize] += 1;
        }
    }
    let total = (queries.len() * k) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// For each norm group, the fraction of all recorded score evaluations that
/// landed on items in the group, pooled over the given searches.
pub fn computation_distribution(
    stats_list: &[SearchStats],
    partition: &NormGroupPartition,
) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; partition.num_groups()];
    let mut total = 0u64;
    for stats in stats_list {
        for &id in &stats.eval_ids {
            if id as usize >= partition.len() {
                return Err(Error::InvalidId {
                    id,
                    len: partition.len(),
                });
            }
            counts[partition.group_of(id) as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidParameter("no evaluations recorded".into()));
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / total as f64)
        .collect())
}

/// Occupancy of the top norm group as the dataset is subsampled at several
/// rates. All rates share one seeded permutation, so smaller samples are
/// prefixes of larger ones; the norm partition is recomputed per sample.
/// Returns `(rate, top-group occupancy)` pairs in the order given.
pub fn cardinality_bias_curve(
    dataset: &Dataset,
    rates: &[f64],
    queries: &Dataset,
    k: usize,
    group_width_pct: u32,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(rates.len());
    for &rate in rates {
        let (sample, _kept) = dataset.uniform_sample(rate, seed)?;
        let partition = sample.partition_by_norm(group_width_pct)?;
        let occupancy = result_norm_occupancy(&sample, queries, k, &partition)?;
        out.push((rate, occupancy[0]));
    }
    Ok(out)
}

/// The three per-norm-group diagnostics side by side: share of pooled
/// results, share of score evaluations, and mean in-degree relative to the
/// global mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBiasReport {
    pub occupancy: Vec<f64>,
    pub computation_share: Vec<f64>,
    pub in_degree_ratio: Vec<f64>,
}

impl NormBiasReport {
    pub fn new(
        occupancy: Vec<f64>,
        computation_share: Vec<f64>,
        in_degree: &InDegreeStats,
    ) -> Result<Self> {
        if occupancy.len() != computation_share.len()
            || occupancy.len() != in_degree.per_group_mean.len()
        {
            return Err(Error::InvalidParameter(
                "group counts disagree across diagnostics".into(),
            ));
        }
        for (name, v) in [
            ("occupancy", &occupancy),
            ("computation share", &computation_share),
        ] {
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{name} fractions sum to {sum}, expected 1"
                )));
            }
        }
        if in_degree.global_mean <= 0.0 {
            return Err(Error::InvalidParameter(
                "global mean in-degree must be positive".into(),
            ));
        }
        let in_degree_ratio = in_degree
            .per_group_mean
            .iter()
            .map(|&m| m / in_degree.global_mean)
            .collect();
        Ok(NormBiasReport {
            occupancy,
            computation_share,
            in_degree_ratio,
        })
    }
}

/// One per-group value with the group's norm-rank percentile bounds;
/// `group_low_pct = 0` is the largest-norm group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupValueRow {
    pub group_low_pct: u32,
    pub group_high_pct: u32,
    pub value: f64,
}

/// Pairs per-group values with their percentile bounds.
pub fn group_value_rows(
    partition: &NormGroupPartition,
    values: &[f64],
) -> Result<Vec<GroupValueRow>> {
    if values.len() != partition.num_groups() {
        return Err(Error::InvalidParameter(format!(
            "{} values for {} groups",
            values.len(),
            partition.num_groups()
        )));
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(g, &value)| {
            let (lo, hi) = partition.bounds(g);
            GroupValueRow {
                group_low_pct: lo,
                group_high_pct: hi,
                value,
            }
        })
        .collect())
}

/// Flat CSV with a `group_low_pct,group_high_pct,value` header.
pub fn rows_to_csv(rows: &[GroupValueRow]) -> String {
    let mut out = String::from("group_low_pct,group_high_pct,value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.group_low_pct, r.group_high_pct, r.value
        ));
    }
    out
}
