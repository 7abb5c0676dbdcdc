use crate::error::Result;
use crate::geom::{Dataset, KnnQuery, PointId, RangeBox, ResultSet};
use crate::index::{PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::tree::{best_first_knn, walk_range, Hierarchy, PackedTree};

pub const STR_FANOUT: usize = 128;

/// R-tree bulk loaded with sort-tile-recursive packing.
#[derive(Debug)]
pub struct StrTree {
    tree: PackedTree,
    store: PointStore,
}

impl StrTree {
    pub fn build(ds: &Dataset) -> Result<Self> {
        Self::with_fanout(ds, STR_FANOUT)
    }

    pub fn with_fanout(ds: &Dataset, fanout: usize) -> Result<Self> {
        let fanout = fanout.max(2);
        let (tree, order) = PackedTree::pack(ds, fanout, fanout);
        Ok(Self {
            tree,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    /// Bounding box and layout positions of leaf `i`.
    pub fn leaf(&self, i: usize) -> (RangeBox, std::ops::Range<usize>) {
        let b = RangeBox::from_corners(self.tree.node_lo(i), self.tree.node_hi(i))
            .expect("leaf box is valid");
        match self.tree.children(i) {
            super::Children::Points(r) => (b, r),
            super::Children::Nodes(_) => unreachable!("leaves come first"),
        }
    }
}

impl SpatialIndex for StrTree {
    fn name(&self) -> &'static str {
        "str"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        walk_range(&self.tree, b, |_, points, covered| {
            if covered {
                self.store.emit_all(points, out);
            } else {
                self.store.scan(points, b, out);
            }
        });
    }

    /// Node boxes and headers plus one point-sized entry per leaf slot.
    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES
            + self.tree.node_count() * (self.tree.box_bytes() + 8)
            + self.store.len() * self.store.dim() * 8
    }

    fn knn(&self, q: &KnnQuery) -> Result<ResultSet> {
        best_first_knn(&self.tree, &self.store, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{distances_match, Point};
    use crate::index::brute_force_knn;
    use crate::tree::FullScanIndex;
    use crate::workload::{gen_dataset, gen_range_queries, DatasetSpec, Distribution};

    #[test]
    fn small_input_is_a_single_leaf() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Uniform, 100, 2, 1)).unwrap();
        let t = StrTree::build(&ds).unwrap();
        assert_eq!((t.node_count(), t.height()), (1, 1));
        assert_eq!(t.leaf(0).1, 0..100);
    }

    #[test]
    fn height_matches_packing_arithmetic() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Uniform, 100_000, 2, 2)).unwrap();
        let t = StrTree::build(&ds).unwrap();
        // ceil(log_128 100000) = 3
        assert_eq!(t.height(), 3);
        assert_eq!(t.leaf_count(), 100_000usize.div_ceil(128));
    }

    #[test]
    fn leaf_runs_cover_every_point_once() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Normal, 30_000, 3, 3)).unwrap();
        let t = StrTree::build(&ds).unwrap();
        let mut runs: Vec<_> = (0..t.leaf_count()).map(|i| t.leaf(i).1).collect();
        runs.sort_by_key(|r| r.start);
        let mut next = 0;
        for r in runs {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, ds.len());
        for i in 0..t.leaf_count() {
            let (b, r) = t.leaf(i);
            assert!(r
                .into_iter()
                .all(|pos| b.contains_slice(t.store().point(pos))));
        }
    }

    #[test]
    fn leaf_boxes_do_not_overlap() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Uniform, 50_000, 2, 4)).unwrap();
        let t = StrTree::build(&ds).unwrap();
        let boxes: Vec<RangeBox> = (0..t.leaf_count()).map(|i| t.leaf(i).0).collect();
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                if let Some(x) = a.intersection(b) {
                    let area: f64 = (0..2).map(|j| x.hi()[j] - x.lo()[j]).product();
                    assert_eq!(area, 0.0);
                }
            }
        }
    }

    #[test]
    fn range_matches_full_scan() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Lognormal, 100_000, 2, 5)).unwrap();
        let t = StrTree::build(&ds).unwrap();
        let oracle = FullScanIndex::build(&ds).unwrap();
        let wl = gen_range_queries(&ds, 100, &[1e-4, 1e-3, 1e-2, 1e-1], 5).unwrap();
        for q in wl.queries() {
            assert!(t
                .range(&q.range)
                .unwrap()
                .same_ids(&oracle.range(&q.range).unwrap()));
        }
        let far = RangeBox::from_corners(&[-3.0, -3.0], &[-2.0, -2.0]).unwrap();
        assert!(t.range(&far).unwrap().is_empty());
        assert_eq!(t.range(&ds.bounds()).unwrap().len(), ds.len());
    }

    #[test]
    fn knn_matches_brute_force() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Normal, 50_000, 2, 6)).unwrap();
        let t = StrTree::build(&ds).unwrap();
        for (i, k) in [1, 10, 100, 1000, 10_000].into_iter().enumerate() {
            let q = KnnQuery::new(Point::new(ds.point(i * 97).to_vec()).unwrap(), k).unwrap();
            let got = t.knn(&q).unwrap();
            let want = brute_force_knn(t.store(), &q).unwrap();
            assert_eq!(got.ids, want.ids);
            assert!(distances_match(
                &got.sorted_distances(&ds, q.point()),
                &want.sorted_distances(&ds, q.point()),
                1e-9
            ));
        }
        let q = KnnQuery::new(Point::new(ds.point(7).to_vec()).unwrap(), 1).unwrap();
        assert_eq!(t.knn(&q).unwrap().ids, vec![7]);
        let all = KnnQuery::new(Point::new(vec![0.0, 0.0]).unwrap(), ds.len()).unwrap();
        assert_eq!(t.knn(&all).unwrap().len(), ds.len());
    }
}
