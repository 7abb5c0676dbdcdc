//! Points, datasets and query descriptors shared by every index.
//!
//! Boxes are closed on both ends. Point ids are offsets into the owning
//! [`Dataset`]; result sets compare as multisets of ids.

use std::fmt;

use crate::error::{check_dim, Error, Result};

pub type PointId = u64;

/// A point in d-dimensional space. All coordinates are finite.
#[derive(Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(dim) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { point: 0, dim });
        }
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "point must have at least one coordinate".into(),
            ));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

/// Immutable collection of N points of dimension d, stored row-major.
#[derive(Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
}

impl fmt::Debug for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dataset")
            .field("n", &self.len())
            .field("dim", &self.dim)
            .finish()
    }
}

impl Dataset {
    /// Builds a dataset from a row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "coordinate buffer of length {} is not a nonempty multiple of {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                point: pos / dim,
                dim: pos % dim,
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let dim = points.first().map(Point::dim).ok_or_else(|| {
            Error::InvalidArgument("dataset must contain at least one point".into())
        })?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dim(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Values of one dimension, in id order.
    pub fn column(&self, dim: usize) -> Vec<f64> {
        self.points().map(|p| p[dim]).collect()
    }

    /// Tight bounding box of all points.
    pub fn bounds(&self) -> RangeBox {
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.points() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        RangeBox {
            lo: Point(lo),
            hi: Point(hi),
        }
    }
}

/// Closed axis-aligned hyper-rectangle.
#[derive(Clone, PartialEq)]
pub struct RangeBox {
    lo: Point,
    hi: Point,
}

impl fmt::Debug for RangeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RangeBox({:?} .. {:?})", self.lo, self.hi)
    }
}

impl RangeBox {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        check_dim(lo.dim(), hi.dim())?;
        if let Some(j) = (0..lo.dim()).find(|&j| lo.0[j] > hi.0[j]) {
            return Err(Error::InvalidArgument(format!(
                "box lower corner exceeds upper corner on dimension {j}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_corners(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(Point::new(lo.to_vec())?, Point::new(hi.to_vec())?)
    }

    /// Axis-aligned box `center ± radius`.
    pub fn around(center: &[f64], radius: f64) -> Result<Self> {
        let lo = center.iter().map(|c| c - radius).collect();
        let hi = center.iter().map(|c| c + radius).collect();
        Self::new(Point::new(lo)?, Point::new(hi)?)
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &[f64] {
        self.lo.coords()
    }

    pub fn hi(&self) -> &[f64] {
        self.hi.coords()
    }

    /// Unchecked containment used in scan loops; `p` must have `self.dim()` coordinates.
    #[inline]
    pub fn contains_slice(&self, p: &[f64]) -> bool {
        let lo = self.lo.coords();
        let hi = self.hi.coords();
        p.iter()
            .zip(lo.iter().zip(hi))
            .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    /// Whether two closed boxes share at least one point.
    pub fn intersects(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|j| self.lo()[j] <= hi[j] && lo[j] <= self.hi()[j])
    }

    /// Whether the closed box `[lo, hi]` lies entirely inside `self`.
    pub fn covers(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|j| self.lo()[j] <= lo[j] && hi[j] <= self.hi()[j])
    }

    /// Intersection with another box, or `None` when disjoint.
    pub fn intersection(&self, other: &RangeBox) -> Option<RangeBox> {
        if !self.intersects(other.lo(), other.hi()) {
            return None;
        }
        let lo = (0..self.dim())
            .map(|j| self.lo()[j].max(other.lo()[j]))
            .collect();
        let hi = (0..self.dim())
            .map(|j| self.hi()[j].min(other.hi()[j]))
            .collect();
        Some(RangeBox {
            lo: Point(lo),
            hi: Point(hi),
        })
    }
}

/// Checked containment test.
pub fn contains(b: &RangeBox, p: &[f64]) -> Result<bool> {
    check_dim(b.dim(), p.len())?;
    Ok(b.contains_slice(p))
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two points of equal dimensionality.
pub fn dist_l2(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(dist_sq(a, b).sqrt())
}

/// Squared distance from `p` to the nearest point of the closed box `[lo, hi]`.
#[inline]
pub fn min_dist_sq_to_box(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..p.len() {
        let d = if p[j] < lo[j] {
            lo[j] - p[j]
        } else if p[j] > hi[j] {
            p[j] - hi[j]
        } else {
            0.0
        };
        acc += d * d;
    }
    acc
}

/// Squared distance from `p` to the farthest corner of `[lo, hi]`.
#[inline]
pub fn max_dist_sq_to_box(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..p.len() {
        let d = (p[j] - lo[j]).abs().max((hi[j] - p[j]).abs());
        acc += d * d;
    }
    acc
}

/// Fraction of the dataset contained in `b`.
pub fn selectivity(ds: &Dataset, b: &RangeBox) -> Result<f64> {
    check_dim(ds.dim(), b.dim())?;
    let hits = ds.points().filter(|p| b.contains_slice(p)).count();
    Ok(hits as f64 / ds.len() as f64)
}

#[derive(Clone, PartialEq)]
pub struct KnnQuery {
    q: Point,
    k: usize,
}

impl fmt::Debug for KnnQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KnnQuery({:?}, k={})", self.q, self.k)
    }
}

impl KnnQuery {
    pub fn new(q: Point, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        Ok(Self { q, k })
    }

    pub fn point(&self) -> &[f64] {
        self.q.coords()
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Unordered multiset of point ids returned by a query.
#[derive(Clone, Debug, Default)]
pub struct ResultSet {
    pub ids: Vec<PointId>,
}

impl ResultSet {
    pub fn new(ids: Vec<PointId>) -> Self {
        Self { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn sorted_ids(&self) -> Vec<PointId> {
        let mut ids = self.ids.clone();
        ids.sort_unstable();
        ids
    }

    /// Multiset equality of ids.
    pub fn same_ids(&self, other: &ResultSet) -> bool {
        self.len() == other.len() && self.sorted_ids() == other.sorted_ids()
    }

    /// Sorted distances of the result points to `q`.
    pub fn sorted_distances(&self, ds: &Dataset, q: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .ids
            .iter()
            .map(|&id| dist_sq(ds.point(id as usize), q).sqrt())
            .collect();
        d.sort_by(f64::total_cmp);
        d
    }
}

/// Compares two sorted distance lists with a relative tolerance.
pub fn distances_match(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= rel_tol * x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
}
