use crate::error::Result;
use crate::geom::{Dataset, KnnQuery, PointId, RangeBox, ResultSet};
use crate::index::{brute_force_knn, PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::projection::{grid_bits, z_sorted, UniformCells};
use crate::zorder::ZCurve;

/// Sequential scan over points kept in Z-order of an equal-width grid.
#[derive(Debug)]
pub struct FullScanIndex {
    store: PointStore,
}

impl FullScanIndex {
    pub fn build(ds: &Dataset) -> Result<Self> {
        let bits = grid_bits(ds.len(), ds.dim());
        let curve = ZCurve::new(ds.dim(), bits)?;
        let cells = UniformCells::new(&ds.bounds(), bits);
        let order: Vec<usize> = z_sorted(ds, &curve, &cells)
            .into_iter()
            .map(|p| p.1 as usize)
            .collect();
        Ok(Self {
            store: PointStore::permuted(ds, &order),
        })
    }
}

impl SpatialIndex for FullScanIndex {
    fn name(&self) -> &'static str {
        "fullscan"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        self.store.scan(0..self.store.len(), b, out);
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES
    }

    fn knn(&self, q: &KnnQuery) -> Result<ResultSet> {
        brute_force_knn(&self.store, q)
    }
}
