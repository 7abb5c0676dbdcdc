//! Common interface of every index plus shared storage and kNN helpers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::geom::{dist_sq, Dataset, KnnQuery, PointId, RangeBox, ResultSet};
use crate::grid::{FloodIndex, GridIndex, GridMode};
use crate::projection::{LisaIndex, MliIndex, ZmiIndex};
use crate::tree::{FullScanIndex, IfiIndex, KdTree, StrTree};

/// Fixed bytes charged to every index for its own descriptor.
pub const INDEX_HEADER_BYTES: usize = 16;

/// A built, immutable index over a point set.
pub trait SpatialIndex: Send + Sync {
    fn name(&self) -> &'static str;

    /// Points held by the index, in layout order.
    fn store(&self) -> &PointStore;

    /// Appends ids of points inside `b`; `b` has the index's dimensionality.
    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>);

    /// Structural bytes, excluding the stored points and their ids.
    fn metadata_bytes(&self) -> usize;

    fn dim(&self) -> usize {
        self.store().dim()
    }

    fn len(&self) -> usize {
        self.store().len()
    }

    fn is_empty(&self) -> bool {
        self.store().len() == 0
    }

    fn range(&self, b: &RangeBox) -> Result<ResultSet> {
        check_dim(self.dim(), b.dim())?;
        let mut ids = Vec::new();
        self.range_into(b, &mut ids);
        Ok(ResultSet::new(ids))
    }

    /// Exact k nearest neighbours; ties at equal distance go to the lower id.
    fn knn(&self, q: &KnnQuery) -> Result<ResultSet> {
        knn_progressive(self, q)
    }
}

/// Point coordinates and ids copied into an index's own layout order.
#[derive(Clone)]
pub struct PointStore {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<PointId>,
    // Inverse of `ids`: layout position of each point id.
    positions: Vec<u32>,
    bounds: RangeBox,
}

impl fmt::Debug for PointStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointStore")
            .field("n", &self.len())
            .field("dim", &self.dim)
            .finish()
    }
}

impl PointStore {
    /// Copies `ds` in the order given by `order` (a permutation of ids).
    pub fn permuted(ds: &Dataset, order: &[usize]) -> Self {
        debug_assert_eq!(order.len(), ds.len());
        let dim = ds.dim();
        let mut coords = Vec::with_capacity(ds.len() * dim);
        for &id in order {
            coords.extend_from_slice(ds.point(id));
        }
        let mut positions = vec![0u32; order.len()];
        for (pos, &id) in order.iter().enumerate() {
            positions[id] = pos as u32;
        }
        Self {
            dim,
            coords,
            ids: order.iter().map(|&i| i as PointId).collect(),
            positions,
            bounds: ds.bounds(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Tight bounding box of the stored points.
    pub fn bounds(&self) -> &RangeBox {
        &self.bounds
    }

    #[inline]
    pub fn point(&self, pos: usize) -> &[f64] {
        &self.coords[pos * self.dim..(pos + 1) * self.dim]
    }

    #[inline]
    pub fn coord(&self, pos: usize, dim: usize) -> f64 {
        self.coords[pos * self.dim + dim]
    }

    #[inline]
    pub fn id(&self, pos: usize) -> PointId {
        self.ids[pos]
    }

    /// Coordinates of the point with the given id.
    #[inline]
    pub fn point_by_id(&self, id: PointId) -> &[f64] {
        self.point(self.positions[id as usize] as usize)
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    /// Filters positions `range` by `b`.
    #[inline]
    pub fn scan(&self, range: Range<usize>, b: &RangeBox, out: &mut Vec<PointId>) {
        let dim = self.dim;
        let chunk = &self.coords[range.start * dim..range.end * dim];
        let ids = &self.ids[range];
        let (lo, hi) = (b.lo(), b.hi());
        // Non-short-circuiting tests keep the loop free of data-dependent branches.
        if dim == 2 {
            let (l0, l1, h0, h1) = (lo[0], lo[1], hi[0], hi[1]);
            out.extend(
                chunk
                    .chunks_exact(2)
                    .zip(ids)
                    .filter(|(p, _)| (l0 <= p[0]) & (p[0] <= h0) & (l1 <= p[1]) & (p[1] <= h1))
                    .map(|(_, &id)| id),
            );
        } else {
            out.extend(
                chunk
                    .chunks_exact(dim)
                    .zip(ids)
                    .filter(|(p, _)| {
                        p.iter()
                            .zip(lo.iter().zip(hi))
                            .fold(true, |acc, (x, (l, h))| acc & (l <= x) & (x <= h))
                    })
                    .map(|(_, &id)| id),
            );
        }
    }

    /// Emits every id in `range` without testing coordinates.
    #[inline]
    pub fn emit_all(&self, range: Range<usize>, out: &mut Vec<PointId>) {
        out.extend_from_slice(&self.ids[range]);
    }
}

/// A candidate neighbour ordered by `(distance², id)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub dist_sq: f64,
    pub id: PointId,
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

/// Keeps the `k` smallest neighbours of `cands`, sorted ascending.
pub fn smallest_k(mut cands: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    if cands.len() > k {
        cands.select_nth_unstable(k - 1);
        cands.truncate(k);
    }
    cands.sort_unstable();
    cands
}

/// Exact kNN by a linear pass over the whole store.
pub fn brute_force_knn(store: &PointStore, q: &KnnQuery) -> Result<ResultSet> {
    check_knn(store, q)?;
    let cands = (0..store.len())
        .map(|pos| Neighbor {
            dist_sq: dist_sq(store.point(pos), q.point()),
            id: store.id(pos),
        })
        .collect();
    Ok(ResultSet::new(
        smallest_k(cands, q.k()).into_iter().map(|n| n.id).collect(),
    ))
}

pub(crate) fn check_knn(store: &PointStore, q: &KnnQuery) -> Result<()> {
    check_dim(store.dim(), q.point().len())?;
    if q.k() > store.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {} exceeds the {} indexed points",
            q.k(),
            store.len()
        )));
    }
    Ok(())
}

/// Initial search radius: the side of a box expected to hold k points under
/// uniform density, floored so doubling always makes progress.
pub fn initial_radius(bounds: &RangeBox, n: usize, k: usize) -> f64 {
    let d = bounds.dim();
    let extent = (0..d).map(|j| bounds.hi()[j] - bounds.lo()[j]).sum::<f64>() / d as f64;
    let floor = f64::EPSILON * extent.max(1.0);
    ((k as f64 / n as f64).powf(1.0 / d as f64) * extent).max(floor)
}

/// kNN through repeated range queries of doubling radius. A round is final
/// once the k-th candidate lies within the radius, which guarantees every
/// closer point was inside the probed box.
pub fn knn_progressive<I: SpatialIndex + ?Sized>(index: &I, q: &KnnQuery) -> Result<ResultSet> {
    let store = index.store();
    check_knn(store, q)?;
    let k = q.k();
    let bounds = store.bounds();
    let mut radius = initial_radius(bounds, store.len(), k);
    let mut ids = Vec::new();
    loop {
        let probe = RangeBox::around(q.point(), radius)?;
        let covers_all = probe.covers(bounds.lo(), bounds.hi());
        ids.clear();
        index.range_into(&probe, &mut ids);
        if ids.len() >= k {
            let cands = ids
                .iter()
                .map(|&id| Neighbor {
                    dist_sq: dist_sq(store.point_by_id(id), q.point()),
                    id,
                })
                .collect();
            let best = smallest_k(cands, k);
            let kth = best[k - 1].dist_sq.sqrt();
            if covers_all || kth <= radius * (1.0 - 1e-12) {
                return Ok(ResultSet::new(best.into_iter().map(|n| n.id).collect()));
            }
        }
        radius *= 2.0;
    }
}

/// Build-time knobs shared by all index kinds.
#[derive(Clone, Debug)]
pub struct BuildParams {
    pub epsilon: usize,
    /// Target points per grid cell for LISA, Flood and the grid baselines.
    pub cell_points: usize,
    /// ML-Index partition count; `None` picks 20 below 20M points, else 40.
    pub mli_partitions: Option<usize>,
    /// Flood sort dimension; `None` means the last dimension.
    pub flood_sort_dim: Option<usize>,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            epsilon: 64,
            cell_points: 2000,
            mli_partitions: None,
            flood_sort_dim: None,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexKind {
    Zmi,
    Mli,
    Lisa,
    Flood,
    Ifi,
    Str,
    Kd,
    Ug,
    Edg,
    FullScan,
}

impl IndexKind {
    pub const ALL: [IndexKind; 10] = [
        IndexKind::Zmi,
        IndexKind::Mli,
        IndexKind::Lisa,
        IndexKind::Flood,
        IndexKind::Ifi,
        IndexKind::Str,
        IndexKind::Kd,
        IndexKind::Ug,
        IndexKind::Edg,
        IndexKind::FullScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Zmi => "zmi",
            IndexKind::Mli => "mli",
            IndexKind::Lisa => "lisa",
            IndexKind::Flood => "flood",
            IndexKind::Ifi => "ifi",
            IndexKind::Str => "str",
            IndexKind::Kd => "kd",
            IndexKind::Ug => "ug",
            IndexKind::Edg => "edg",
            IndexKind::FullScan => "fullscan",
        }
    }

    pub fn build(self, ds: &Dataset, params: &BuildParams) -> Result<Box<dyn SpatialIndex>> {
        let built: Result<Box<dyn SpatialIndex>> = match self {
            IndexKind::Zmi => ZmiIndex::build(ds, params.epsilon).map(|i| Box::new(i) as _),
            IndexKind::Mli => {
                MliIndex::build(ds, params.epsilon, params.mli_partitions, params.seed)
                    .map(|i| Box::new(i) as _)
            }
            IndexKind::Lisa => {
                LisaIndex::build(ds, params.epsilon, params.cell_points).map(|i| Box::new(i) as _)
            }
            IndexKind::Flood => FloodIndex::build(
                ds,
                params.epsilon,
                params.cell_points,
                params.flood_sort_dim,
            )
            .map(|i| Box::new(i) as _),
            IndexKind::Ifi => IfiIndex::build(ds).map(|i| Box::new(i) as _),
            IndexKind::Str => StrTree::build(ds).map(|i| Box::new(i) as _),
            IndexKind::Kd => KdTree::build(ds).map(|i| Box::new(i) as _),
            IndexKind::Ug => GridIndex::build(ds, GridMode::EqualWidth, params.cell_points)
                .map(|i| Box::new(i) as _),
            IndexKind::Edg => GridIndex::build(ds, GridMode::EqualDepth, params.cell_points)
                .map(|i| Box::new(i) as _),
            IndexKind::FullScan => FullScanIndex::build(ds).map(|i| Box::new(i) as _),
        };
        built.map_err(|e| Error::Build {
            index: self.name().to_string(),
            source: Box::new(e),
        })
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown index '{s}'")))
    }
}

/// Smallest integer `r >= 1` with `r^k >= x`.
pub(crate) fn ceil_root(x: f64, k: usize) -> usize {
    if x <= 1.0 {
        return 1;
    }
    let pow = |r: usize| (r as f64).powi(k as i32);
    let mut r = x.powf(1.0 / k as f64).round().max(1.0) as usize;
    while pow(r) < x {
        r += 1;
    }
    while r > 1 && pow(r - 1) >= x {
        r -= 1;
    }
    r
}
