//! Timing runs over built indices and the reports derived from them.

mod report;

pub use report::{emit_report, mean_of_means, parse_records, ReportFormat};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist_sq, distances_match, Dataset, ResultSet};
use crate::index::{BuildParams, IndexKind, SpatialIndex};
use crate::tree::FullScanIndex;
use crate::workload::{KnnWorkload, RangeWorkload};

pub const CSV_HEADER: &str =
    "index,dist,n,d,op,param,mean_ns,p50_ns,p99_ns,result_count,metadata_bytes";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Build,
    Range,
    Knn,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Build => "build",
            Op::Range => "range",
            Op::Knn => "knn",
        })
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "build" => Ok(Op::Build),
            "range" => Ok(Op::Range),
            "knn" => Ok(Op::Knn),
            _ => Err(Error::InvalidArgument(format!("unknown op '{s}'"))),
        }
    }
}

/// One row of benchmark output. `param` is epsilon for builds, the
/// selectivity bucket for range queries and `k` for kNN queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub index: String,
    pub dist: String,
    pub n: usize,
    pub d: usize,
    pub op: Op,
    pub param: f64,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub result_count: u64,
    pub metadata_bytes: u64,
}

impl BenchRecord {
    /// The record with timing fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            mean_ns: 0.0,
            p50_ns: 0,
            p99_ns: 0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
}

/// Mean and nearest-rank percentiles of a nonempty sample.
pub fn latency_stats(samples: &[u64]) -> LatencyStats {
    assert!(!samples.is_empty(), "no latency samples");
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let rank =
        |p: f64| sorted[((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
    LatencyStats {
        mean_ns: sorted.iter().map(|&s| s as f64).sum::<f64>() / sorted.len() as f64,
        p50_ns: rank(0.5),
        p99_ns: rank(0.99),
    }
}

/// Power of ten nearest to `s` in log scale; 0 for an empty query.
pub fn selectivity_bucket(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        let e = s.log10().round() as i32;
        format!("1e{e}").parse().expect("valid float literal")
    }
}

/// Names the dataset in every record.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetInfo {
    pub dist: String,
    pub n: usize,
    pub d: usize,
}

impl DatasetInfo {
    pub fn new(dist: impl Into<String>, ds: &Dataset) -> Self {
        Self {
            dist: dist.into(),
            n: ds.len(),
            d: ds.dim(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Workload {
    Range(RangeWorkload),
    Knn(KnnWorkload),
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub indices: Vec<IndexKind>,
    pub epsilons: Vec<usize>,
    pub repeat: usize,
    pub verify: bool,
    /// Shared build settings; `epsilon` is overridden from `epsilons`.
    pub params: BuildParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            indices: IndexKind::ALL.to_vec(),
            epsilons: vec![64],
            repeat: 1,
            verify: false,
            params: BuildParams::default(),
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::InvalidArgument("no index selected".into()));
        }
        if self.epsilons.is_empty() || self.epsilons.contains(&0) {
            return Err(Error::InvalidArgument(
                "epsilon values must be at least 1".into(),
            ));
        }
        if self.repeat == 0 {
            return Err(Error::InvalidArgument("repeat must be at least 1".into()));
        }
        Ok(())
    }
}

/// Whether the index kind has a learned component tuned by epsilon.
pub fn uses_epsilon(kind: IndexKind) -> bool {
    matches!(
        kind,
        IndexKind::Zmi | IndexKind::Mli | IndexKind::Lisa | IndexKind::Flood
    )
}

/// A built index with the label its records carry.
pub struct BuiltIndex {
    pub label: String,
    pub kind: IndexKind,
    pub epsilon: Option<usize>,
    pub index: Box<dyn SpatialIndex>,
}

/// Builds every configured index (once per epsilon for learned ones),
/// timing each build. Dataset loading is outside the timed region.
pub fn run_build_bench(
    ds: &Dataset,
    info: &DatasetInfo,
    config: &BenchConfig,
) -> Result<(Vec<BenchRecord>, Vec<BuiltIndex>)> {
    config.validate()?;
    let mut records = Vec::new();
    let mut built = Vec::new();
    for &kind in &config.indices {
        let eps_list: Vec<Option<usize>> = if uses_epsilon(kind) {
            config.epsilons.iter().map(|&e| Some(e)).collect()
        } else {
            vec![None]
        };
        for eps in eps_list {
            let mut params = config.params.clone();
            if let Some(e) = eps {
                params.epsilon = e;
            }
            let mut samples = Vec::with_capacity(config.repeat);
            let mut last = None;
            for _ in 0..config.repeat {
                let start = Instant::now();
                let index = kind.build(ds, &params)?;
                samples.push(start.elapsed().as_nanos() as u64);
                last = Some(index);
            }
            let index = last.expect("repeat is at least 1");
            let label = match eps {
                Some(e) if config.epsilons.len() > 1 => format!("{kind}@{e}"),
                _ => kind.to_string(),
            };
            let stats = latency_stats(&samples);
            records.push(BenchRecord {
                index: label.clone(),
                dist: info.dist.clone(),
                n: info.n,
                d: info.d,
                op: Op::Build,
                param: eps.unwrap_or(0) as f64,
                mean_ns: stats.mean_ns,
                p50_ns: stats.p50_ns,
                p99_ns: stats.p99_ns,
                result_count: index.len() as u64,
                metadata_bytes: index.metadata_bytes() as u64,
            });
            built.push(BuiltIndex {
                label,
                kind,
                epsilon: eps,
                index,
            });
        }
    }
    Ok((records, built))
}

/// Checks every query of `workload` against `oracle`.
pub fn verify_index(
    index: &dyn SpatialIndex,
    label: &str,
    oracle: &dyn SpatialIndex,
    workload: &Workload,
) -> Result<()> {
    let mismatch = |query: usize, expected: usize, actual: usize| Error::Verification {
        index: label.to_string(),
        query,
        expected,
        actual,
    };
    match workload {
        Workload::Range(wl) => {
            for (i, q) in wl.queries().iter().enumerate() {
                let got = index.range(&q.range)?;
                let want = oracle.range(&q.range)?;
                if !got.same_ids(&want) {
                    return Err(mismatch(i, want.len(), got.len()));
                }
            }
        }
        Workload::Knn(wl) => {
            for (i, q) in wl.queries().iter().enumerate() {
                let got = index.knn(q)?;
                let want = oracle.knn(q)?;
                let dists = |r: &ResultSet| {
                    let mut v: Vec<f64> = r
                        .ids
                        .iter()
                        .map(|&id| dist_sq(oracle.store().point_by_id(id), q.point()).sqrt())
                        .collect();
                    v.sort_by(f64::total_cmp);
                    v
                };
                if !distances_match(&dists(&got), &dists(&want), 1e-9) {
                    return Err(mismatch(i, want.len(), got.len()));
                }
            }
        }
    }
    Ok(())
}

/// Runs each query once per repetition in workload order and groups the
/// latencies by selectivity bucket (range) or `k` (kNN).
pub fn run_query_bench(
    built: &BuiltIndex,
    info: &DatasetInfo,
    workload: &Workload,
    repeat: usize,
) -> Result<Vec<BenchRecord>> {
    let index = built.index.as_ref();
    let mut groups: BTreeMap<u64, (Vec<u64>, u64)> = BTreeMap::new();
    let (op, params): (Op, Vec<f64>) = match workload {
        Workload::Range(wl) => (
            Op::Range,
            wl.queries()
                .iter()
                .map(|q| selectivity_bucket(q.selectivity))
                .collect(),
        ),
        Workload::Knn(wl) => (Op::Knn, wl.queries().iter().map(|q| q.k() as f64).collect()),
    };
    for _ in 0..repeat.max(1) {
        for (i, param) in params.iter().enumerate() {
            let start = Instant::now();
            let found = match workload {
                Workload::Range(wl) => index.range(&wl.queries()[i].range)?.len(),
                Workload::Knn(wl) => index.knn(&wl.queries()[i])?.len(),
            };
            let ns = start.elapsed().as_nanos() as u64;
            let g = groups.entry(param.to_bits()).or_default();
            g.0.push(ns);
            g.1 += found as u64;
        }
    }
    let mut records: Vec<BenchRecord> = groups
        .into_iter()
        .map(|(bits, (samples, found))| {
            let stats = latency_stats(&samples);
            BenchRecord {
                index: built.label.clone(),
                dist: info.dist.clone(),
                n: info.n,
                d: info.d,
                op,
                param: f64::from_bits(bits),
                mean_ns: stats.mean_ns,
                p50_ns: stats.p50_ns,
                p99_ns: stats.p99_ns,
                result_count: found / repeat.max(1) as u64,
                metadata_bytes: index.metadata_bytes() as u64,
            }
        })
        .collect();
    records.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(records)
}

/// Builds, optionally verifies, and times every index on every workload.
/// Verification finishes for all indices before any query is timed.
pub fn run_bench(
    ds: &Dataset,
    info: &DatasetInfo,
    workloads: &[Workload],
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>> {
    let (mut records, built) = run_build_bench(ds, info, config)?;
    if config.verify {
        let oracle = FullScanIndex::build(ds)?;
        for b in &built {
            for wl in workloads {
                verify_index(b.index.as_ref(), &b.label, &oracle, wl)?;
            }
        }
    }
    for b in &built {
        for wl in workloads {
            records.extend(run_query_bench(b, info, wl, config.repeat)?);
        }
    }
    Ok(records)
}
