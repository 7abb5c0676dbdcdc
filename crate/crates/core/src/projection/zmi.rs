use crate::error::{Error, Result};
use crate::geom::{Dataset, PointId, RangeBox};
use crate::index::{ceil_root, PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::pla::PlaModel;
use crate::zorder::{ZCurve, ZValue};

/// Equal-width bucketing of each dimension's `[min, max]` into `2^bits` cells.
#[derive(Clone, Debug)]
pub(crate) struct UniformCells {
    lo: Vec<f64>,
    // Cells per coordinate unit, zero for a flat dimension.
    scale: Vec<f64>,
    side: u64,
}

impl UniformCells {
    pub(crate) fn new(bounds: &RangeBox, bits: u32) -> Self {
        let side = 1u64 << bits;
        let scale = (0..bounds.dim())
            .map(|j| {
                let extent = bounds.hi()[j] - bounds.lo()[j];
                if extent > 0.0 {
                    side as f64 / extent
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            lo: bounds.lo().to_vec(),
            scale,
            side,
        }
    }

    /// Cell along one dimension; clamps values outside the data range.
    #[inline]
    pub(crate) fn cell(&self, dim: usize, x: f64) -> u64 {
        let c = ((x - self.lo[dim]) * self.scale[dim]).floor();
        if c <= 0.0 {
            0
        } else {
            (c as u64).min(self.side - 1)
        }
    }

    pub(crate) fn cells_into(&self, p: &[f64], out: &mut [u64]) {
        for (j, c) in out.iter_mut().enumerate() {
            *c = self.cell(j, p[j]);
        }
    }

    pub(crate) fn metadata_bytes(&self) -> usize {
        (self.lo.len() + self.scale.len()) * 8
    }
}

/// Bits per dimension giving at least `N^(1/d)` buckets, rounded up to a
/// power of two and capped so the interleaved key fits in 64 bits.
pub(crate) fn grid_bits(n: usize, dim: usize) -> u32 {
    let buckets = ceil_root(n as f64, dim) as u64;
    let bits = (64 - (buckets.max(2) - 1).leading_zeros()).max(1);
    bits.min((64 / dim) as u32)
}

/// Sorts the dataset along the Z-order curve of its equal-width grid.
pub(crate) fn z_sorted(ds: &Dataset, curve: &ZCurve, cells: &UniformCells) -> Vec<(ZValue, u32)> {
    let mut buf = vec![0u64; ds.dim()];
    let mut pairs: Vec<(ZValue, u32)> = ds
        .points()
        .enumerate()
        .map(|(id, p)| {
            cells.cells_into(p, &mut buf);
            (curve.encode_unchecked(&buf), id as u32)
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

/// ZM-Index: points ordered by the Z-value of their grid cell, with a PLA
/// model over the Z-values.
#[derive(Debug)]
pub struct ZmiIndex {
    curve: ZCurve,
    cells: UniformCells,
    zs: Vec<ZValue>,
    model: PlaModel,
    store: PointStore,
}

impl ZmiIndex {
    pub fn build(ds: &Dataset, epsilon: usize) -> Result<Self> {
        if ds.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("too many points".into()));
        }
        let bits = grid_bits(ds.len(), ds.dim());
        let curve = ZCurve::new(ds.dim(), bits)?;
        let cells = UniformCells::new(&ds.bounds(), bits);
        let pairs = z_sorted(ds, &curve, &cells);
        let zs: Vec<ZValue> = pairs.iter().map(|p| p.0).collect();
        let keys: Vec<f64> = zs.iter().map(|&z| z as f64).collect();
        let model = PlaModel::build(&keys, epsilon)?;
        let order: Vec<usize> = pairs.iter().map(|p| p.1 as usize).collect();
        Ok(Self {
            curve,
            cells,
            zs,
            model,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn bits(&self) -> u32 {
        self.curve.bits()
    }

    pub fn model(&self) -> &PlaModel {
        &self.model
    }

    /// Z-values in layout order.
    pub fn keys(&self) -> &[ZValue] {
        &self.zs
    }

    /// Z-value of an arbitrary point under this index's grid.
    pub fn key_of(&self, p: &[f64]) -> ZValue {
        let mut buf = vec![0u64; self.curve.dim()];
        self.cells.cells_into(p, &mut buf);
        self.curve.encode_unchecked(&buf)
    }

    /// First layout position whose Z-value is at least `z`.
    pub fn lower_bound(&self, z: ZValue) -> usize {
        let zs = &self.zs;
        let mut pos = self.model.search_by(zs.len(), |i| zs[i] as f64, z as f64);
        // Keys above 2^53 may collide as f64; settle on the exact bound.
        while pos > 0 && zs[pos - 1] >= z {
            pos -= 1;
        }
        while pos < zs.len() && zs[pos] < z {
            pos += 1;
        }
        pos
    }
}

impl SpatialIndex for ZmiIndex {
    fn name(&self) -> &'static str {
        "zmi"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        let Some(clipped) = b.intersection(self.store.bounds()) else {
            return;
        };
        let z_lo = self.key_of(clipped.lo());
        let z_hi = self.key_of(clipped.hi());
        let n = self.zs.len();
        self.curve.for_each_interval(z_lo, z_hi, |start, end| {
            let mut pos = self.lower_bound(start);
            let from = pos;
            while pos < n && self.zs[pos] <= end {
                pos += 1;
            }
            self.store.scan(from..pos, b, out);
        });
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES + self.cells.metadata_bytes() + self.model.metadata_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::FullScanIndex;
    use crate::workload::{gen_dataset, gen_range_queries, DatasetSpec, Distribution};

    #[test]
    fn single_point() {
        let ds = Dataset::from_flat(2, vec![0.3, 0.7]).unwrap();
        let idx = ZmiIndex::build(&ds, 64).unwrap();
        assert_eq!(idx.keys().len(), 1);
        assert_eq!(idx.model().segments().len(), 1);
        let all = idx.range(&ds.bounds()).unwrap();
        assert_eq!(all.ids, vec![0]);
    }

    #[test]
    fn unit_square_corners_follow_z_order() {
        // ids: (1,1), (0,0), (0,1), (1,0)
        let ds = Dataset::from_flat(2, vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let idx = ZmiIndex::build(&ds, 64).unwrap();
        assert_eq!(idx.bits(), 1);
        assert_eq!(idx.keys(), &[0, 1, 2, 3]);
        assert_eq!(idx.store().ids(), &[1, 3, 2, 0]);
    }

    #[test]
    fn grid_bits_examples() {
        assert_eq!(grid_bits(4, 2), 1);
        assert_eq!(grid_bits(100_000, 2), 9);
        assert_eq!(grid_bits(1_000_000, 2), 10);
        assert_eq!(grid_bits(100_000, 4), 5);
        assert_eq!(grid_bits(1, 2), 1);
    }

    #[test]
    fn every_point_is_found_by_its_key() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Uniform, 100_000, 2, 5)).unwrap();
        let idx = ZmiIndex::build(&ds, 64).unwrap();
        let mut positions: Vec<usize> = Vec::new();
        for id in 0..ds.len() {
            let z = idx.key_of(ds.point(id));
            let mut pos = idx.lower_bound(z);
            while idx.store().id(pos) != id as PointId {
                assert_eq!(idx.keys()[pos], z, "point {id} not in its key run");
                pos += 1;
            }
            positions.push(pos);
        }
        positions.sort_unstable();
        positions.dedup();
        assert_eq!(positions.len(), ds.len());
    }

    #[test]
    fn range_matches_full_scan() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Uniform, 100_000, 2, 9)).unwrap();
        let idx = ZmiIndex::build(&ds, 64).unwrap();
        let oracle = FullScanIndex::build(&ds).unwrap();
        let wl = gen_range_queries(&ds, 100, &[1e-4, 1e-3, 1e-2, 1e-1], 3).unwrap();
        for q in wl.queries() {
            let got = idx.range(&q.range).unwrap();
            assert!(got.same_ids(&oracle.range(&q.range).unwrap()));
        }
        let outside = RangeBox::from_corners(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(idx.range(&outside).unwrap().is_empty());
        assert_eq!(idx.range(&ds.bounds()).unwrap().len(), ds.len());
    }
}
