//! Synthetic datasets, query workloads and their on-disk formats.

mod io;

pub use io::{
    load_csv_dataset, load_dataset, read_dataset, read_knn_workload, read_range_workload,
    save_dataset, write_dataset, write_knn_workload, write_range_workload, DATASET_HEADER_BYTES,
    DATASET_MAGIC,
};

use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::geom::{selectivity, Dataset, KnnQuery, Point, RangeBox};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    Uniform,
    Normal,
    Lognormal,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [
        Distribution::Uniform,
        Distribution::Normal,
        Distribution::Lognormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Normal => "normal",
            Distribution::Lognormal => "lognormal",
        }
    }

    /// Default `(a, b)`: the `[a, b)` interval for uniform, `(mean, std)` for
    /// normal and `(mu, sigma)` of the underlying normal for lognormal.
    pub fn default_params(self) -> (f64, f64) {
        match self {
            Distribution::Uniform => (0.0, 1.0),
            Distribution::Normal => (0.5, 0.15),
            Distribution::Lognormal => (0.0, 0.6),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown distribution '{s}'")))
    }
}

/// Recipe for a synthetic dataset; coordinates are i.i.d. per dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub distribution: Distribution,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub params: (f64, f64),
}

impl DatasetSpec {
    pub fn new(distribution: Distribution, n: usize, d: usize, seed: u64) -> Self {
        Self {
            distribution,
            n,
            d,
            seed,
            params: distribution.default_params(),
        }
    }

    pub fn with_params(mut self, a: f64, b: f64) -> Self {
        self.params = (a, b);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.d < 2 {
            return Err(Error::InvalidArgument("d must be at least 2".into()));
        }
        if self.n.checked_mul(self.d).is_none() {
            return Err(Error::InvalidArgument("n * d overflows".into()));
        }
        let (a, b) = self.params;
        let ok = a.is_finite()
            && b.is_finite()
            && match self.distribution {
                Distribution::Uniform => a < b,
                Distribution::Normal | Distribution::Lognormal => b > 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "bad {} parameters ({a}, {b})",
                self.distribution
            )))
        }
    }
}

pub fn gen_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = spec.n * spec.d;
    let (a, b) = spec.params;
    let coords: Vec<f64> = match spec.distribution {
        Distribution::Uniform => (0..len)
            .map(|_| a + (b - a) * rng.random::<f64>())
            .collect(),
        Distribution::Normal => {
            let dist = Normal::new(a, b).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        }
        Distribution::Lognormal => {
            let dist = LogNormal::new(a, b).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        }
    };
    Dataset::from_flat(spec.d, coords)
}

/// A range query with its selectivity over the dataset it was drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeQuery {
    pub range: RangeBox,
    pub selectivity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeWorkload {
    dim: usize,
    queries: Vec<RangeQuery>,
}

impl RangeWorkload {
    pub fn new(dim: usize, queries: Vec<RangeQuery>) -> Result<Self> {
        for q in &queries {
            crate::error::check_dim(dim, q.range.dim())?;
        }
        Ok(Self { dim, queries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn queries(&self) -> &[RangeQuery] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// `s` boxes whose lower corners are dataset points. Targets are used in
/// turn; for target `t` each side is `t^(1/d)` times the data extent,
/// scaled by an independent factor drawn from `[0.5, 2]`.
pub fn gen_range_queries(
    ds: &Dataset,
    s: usize,
    targets: &[f64],
    seed: u64,
) -> Result<RangeWorkload> {
    if s == 0 {
        return Err(Error::InvalidArgument("need at least one query".into()));
    }
    if targets.is_empty() || targets.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::InvalidArgument(
            "selectivity targets must lie in (0, 1]".into(),
        ));
    }
    let d = ds.dim();
    let bounds = ds.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::with_capacity(s);
    for i in 0..s {
        let base = targets[i % targets.len()].powf(1.0 / d as f64);
        let lo = ds.point(rng.random_range(0..ds.len())).to_vec();
        let hi: Vec<f64> = (0..d)
            .map(|j| {
                let extent = bounds.hi()[j] - bounds.lo()[j];
                lo[j] + base * extent * rng.random_range(0.5..=2.0)
            })
            .collect();
        let range = RangeBox::new(Point::new(lo)?, Point::new(hi)?)?;
        let selectivity = selectivity(ds, &range)?;
        queries.push(RangeQuery { range, selectivity });
    }
    RangeWorkload::new(d, queries)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnWorkload {
    dim: usize,
    queries: Vec<KnnQuery>,
}

impl KnnWorkload {
    pub fn new(dim: usize, queries: Vec<KnnQuery>) -> Result<Self> {
        for q in &queries {
            crate::error::check_dim(dim, q.point().len())?;
        }
        Ok(Self { dim, queries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn queries(&self) -> &[KnnQuery] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// `s` dataset points for each `k` in `ks`, grouped by `k`.
pub fn gen_knn_queries(ds: &Dataset, s: usize, ks: &[usize], seed: u64) -> Result<KnnWorkload> {
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > ds.len()) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            ds.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::with_capacity(s * ks.len());
    for &k in ks {
        for _ in 0..s {
            let p = ds.point(rng.random_range(0..ds.len())).to_vec();
            queries.push(KnnQuery::new(Point::new(p)?, k)?);
        }
    }
    KnnWorkload::new(ds.dim(), queries)
}
