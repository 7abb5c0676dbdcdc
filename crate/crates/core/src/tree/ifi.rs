use crate::error::Result;
use crate::geom::{Dataset, KnnQuery, PointId, RangeBox, ResultSet};
use crate::index::{PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::tree::{best_first_knn, walk_range, Hierarchy, PackedTree};

pub const IFI_LEAF_CAPACITY: usize = 1000;
pub const IFI_NODE_CAPACITY: usize = 64;
/// Leaf points are ordered and searched along this dimension.
pub const IFI_SORT_DIM: usize = 0;

/// Least-squares line from a coordinate to its rank within a leaf, with the
/// largest residual rounded up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafModel {
    pub slope: f64,
    pub intercept: f64,
    pub max_error: u64,
}

impl LeafModel {
    /// Fits ranks `0..xs.len()` against the sorted `xs`.
    pub fn fit(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean_x = xs.iter().sum::<f64>() / m;
        let mean_r = (m - 1.0) / 2.0;
        let (mut sxx, mut sxr) = (0.0, 0.0);
        for (r, &x) in xs.iter().enumerate() {
            let dx = x - mean_x;
            sxx += dx * dx;
            sxr += dx * (r as f64 - mean_r);
        }
        let slope = if sxx > 0.0 { (sxr / sxx).max(0.0) } else { 0.0 };
        let mut model = Self {
            slope,
            intercept: mean_r - slope * mean_x,
            max_error: 0,
        };
        let worst = xs
            .iter()
            .enumerate()
            .map(|(r, &x)| (model.eval(x) - r as f64).abs())
            .fold(0.0, f64::max);
        model.max_error = worst.ceil() as u64;
        model
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Positions that may hold coordinates in `[lo, hi]`, out of `len`.
    #[inline]
    pub fn window(&self, lo: f64, hi: f64, len: usize) -> std::ops::Range<usize> {
        let err = self.max_error as f64;
        let from = (self.eval(lo) - err).floor().max(0.0);
        let to = (self.eval(hi) + err).ceil() + 1.0;
        let from = (from as usize).min(len);
        let to = if to <= 0.0 { 0 } else { (to as usize).min(len) };
        from..to.max(from)
    }
}

/// R-tree whose leaves are searched through a per-leaf linear model.
#[derive(Debug)]
pub struct IfiIndex {
    tree: PackedTree,
    models: Vec<LeafModel>,
    store: PointStore,
}

impl IfiIndex {
    pub fn build(ds: &Dataset) -> Result<Self> {
        Self::with_capacities(ds, IFI_LEAF_CAPACITY, IFI_NODE_CAPACITY)
    }

    pub fn with_capacities(ds: &Dataset, leaf_cap: usize, node_cap: usize) -> Result<Self> {
        let (tree, mut order) = PackedTree::pack(ds, leaf_cap.max(1), node_cap.max(2));
        let mut models = Vec::with_capacity(tree.leaf_count());
        for leaf in 0..tree.leaf_count() {
            let super::Children::Points(r) = tree.children(leaf) else {
                unreachable!("leaves come first")
            };
            let run = &mut order[r];
            run.sort_unstable_by(|&a, &b| {
                ds.point(a)[IFI_SORT_DIM]
                    .total_cmp(&ds.point(b)[IFI_SORT_DIM])
                    .then(a.cmp(&b))
            });
            let xs: Vec<f64> = run.iter().map(|&id| ds.point(id)[IFI_SORT_DIM]).collect();
            models.push(LeafModel::fit(&xs));
        }
        Ok(Self {
            tree,
            models,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    pub fn leaf_model(&self, leaf: usize) -> &LeafModel {
        &self.models[leaf]
    }

    pub fn leaf_range(&self, leaf: usize) -> std::ops::Range<usize> {
        match self.tree.children(leaf) {
            super::Children::Points(r) => r,
            super::Children::Nodes(_) => unreachable!("leaves come first"),
        }
    }
}

impl SpatialIndex for IfiIndex {
    fn name(&self) -> &'static str {
        "ifi"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        let (lo, hi) = (b.lo()[IFI_SORT_DIM], b.hi()[IFI_SORT_DIM]);
        walk_range(&self.tree, b, |leaf, points, covered| {
            if covered {
                self.store.emit_all(points, out);
                return;
            }
            let w = self.models[leaf].window(lo, hi, points.len());
            self.store
                .scan(points.start + w.start..points.start + w.end, b, out);
        });
    }

    /// Node boxes and headers, one point-sized entry per leaf slot, and the
    /// leaf models.
    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES
            + self.tree.node_count() * (self.tree.box_bytes() + 8)
            + self.store.len() * self.store.dim() * 8
            + self.models.len() * 24
    }

    fn knn(&self, q: &KnnQuery) -> Result<ResultSet> {
        best_first_knn(&self.tree, &self.store, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::FullScanIndex;
    use crate::workload::{gen_dataset, gen_range_queries, DatasetSpec, Distribution};

    #[test]
    fn evenly_spaced_leaf_is_exact() {
        let xs: Vec<f64> = (0..50).map(|i| 3.0 + 0.5 * i as f64).collect();
        let m = LeafModel::fit(&xs);
        assert_eq!(m.max_error, 0);
        assert!((m.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_leaf_uses_the_mean_rank() {
        let m = LeafModel::fit(&[4.0; 11]);
        assert_eq!((m.slope, m.intercept, m.max_error), (0.0, 5.0, 5));
        assert_eq!(m.window(4.0, 4.0, 11), 0..11);
    }

    #[test]
    fn leaf_bound_holds_as_stored() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Normal, 100_000, 2, 1)).unwrap();
        let idx = IfiIndex::build(&ds).unwrap();
        assert_eq!(idx.leaf_count(), 100);
        for leaf in 0..idx.leaf_count() {
            let m = idx.leaf_model(leaf);
            let r = idx.leaf_range(leaf);
            for (rank, pos) in r.enumerate() {
                let x = idx.store().coord(pos, IFI_SORT_DIM);
                assert!((m.eval(x) - rank as f64).abs() <= m.max_error as f64);
            }
        }
    }

    #[test]
    fn range_matches_full_scan() {
        for d in [2, 3] {
            let ds =
                gen_dataset(&DatasetSpec::new(Distribution::Lognormal, 100_000, d, 2)).unwrap();
            let idx = IfiIndex::build(&ds).unwrap();
            let oracle = FullScanIndex::build(&ds).unwrap();
            let wl = gen_range_queries(&ds, 100, &[1e-4, 1e-3, 1e-2, 1e-1], 3).unwrap();
            for q in wl.queries() {
                assert!(idx
                    .range(&q.range)
                    .unwrap()
                    .same_ids(&oracle.range(&q.range).unwrap()));
            }
            let far = RangeBox::from_corners(&vec![-2.0; d], &vec![-1.0; d]).unwrap();
            assert!(idx.range(&far).unwrap().is_empty());
            assert_eq!(idx.range(&ds.bounds()).unwrap().len(), ds.len());
        }
    }
}
