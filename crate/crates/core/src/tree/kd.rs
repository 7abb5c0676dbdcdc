use crate::error::Result;
use crate::geom::{Dataset, KnnQuery, PointId, RangeBox, ResultSet};
use crate::index::{PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::tree::{best_first_knn, Children, Hierarchy};

pub const KD_LEAF_SIZE: usize = 16;

#[derive(Clone, Copy, Debug)]
struct KdNode {
    // Layout positions covered by the subtree.
    start: u32,
    end: u32,
    // Children sit at `left` and `left + 1`; zero marks a leaf.
    left: u32,
    split_dim: u32,
    split: f64,
}

/// kd-tree splitting at the lower median, cycling through dimensions.
#[derive(Debug)]
pub struct KdTree {
    dim: usize,
    nodes: Vec<KdNode>,
    boxes: Vec<f64>,
    store: PointStore,
}

impl KdTree {
    pub fn build(ds: &Dataset) -> Result<Self> {
        Self::with_leaf_size(ds, KD_LEAF_SIZE)
    }

    pub fn with_leaf_size(ds: &Dataset, leaf_size: usize) -> Result<Self> {
        let dim = ds.dim();
        let leaf_size = leaf_size.max(1);
        let mut order: Vec<u32> = (0..ds.len() as u32).collect();
        let mut nodes = vec![KdNode {
            start: 0,
            end: ds.len() as u32,
            left: 0,
            split_dim: 0,
            split: 0.0,
        }];
        let mut boxes = vec![0.0; 2 * dim];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            let (start, end) = (nodes[node].start as usize, nodes[node].end as usize);
            let run = &mut order[start..end];
            let (lo, hi) = boxes[node * 2 * dim..(node + 1) * 2 * dim].split_at_mut(dim);
            lo.fill(f64::INFINITY);
            hi.fill(f64::NEG_INFINITY);
            for &id in run.iter() {
                for (j, &x) in ds.point(id as usize).iter().enumerate() {
                    lo[j] = lo[j].min(x);
                    hi[j] = hi[j].max(x);
                }
            }
            if run.len() <= leaf_size {
                continue;
            }
            let sd = depth % dim;
            let m = (run.len() - 1) / 2;
            run.select_nth_unstable_by(m, |&a, &b| {
                ds.point(a as usize)[sd]
                    .total_cmp(&ds.point(b as usize)[sd])
                    .then(a.cmp(&b))
            });
            let split = ds.point(run[m] as usize)[sd];
            let left = nodes.len();
            let mid = (start + m + 1) as u32;
            nodes[node].left = left as u32;
            nodes[node].split_dim = sd as u32;
            nodes[node].split = split;
            for (s, e) in [(start as u32, mid), (mid, end as u32)] {
                nodes.push(KdNode {
                    start: s,
                    end: e,
                    left: 0,
                    split_dim: 0,
                    split: 0.0,
                });
                boxes.extend(std::iter::repeat_n(0.0, 2 * dim));
            }
            stack.push((left + 1, depth + 1));
            stack.push((left, depth + 1));
        }
        let order: Vec<usize> = order.into_iter().map(|i| i as usize).collect();
        Ok(Self {
            dim,
            nodes,
            boxes,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Max points in any leaf.
    pub fn max_leaf_len(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.left == 0)
            .map(|n| (n.end - n.start) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Checks the split invariant for every internal node.
    pub fn splits_are_ordered(&self) -> bool {
        self.nodes.iter().filter(|n| n.left != 0).all(|n| {
            let l = &self.nodes[n.left as usize];
            let r = &self.nodes[n.left as usize + 1];
            let sd = n.split_dim as usize;
            (l.start..l.end).all(|p| self.store.coord(p as usize, sd) <= n.split)
                && (r.start..r.end).all(|p| self.store.coord(p as usize, sd) >= n.split)
        })
    }
}

impl Hierarchy for KdTree {
    fn root(&self) -> usize {
        0
    }

    #[inline]
    fn node_lo(&self, node: usize) -> &[f64] {
        &self.boxes[node * 2 * self.dim..node * 2 * self.dim + self.dim]
    }

    #[inline]
    fn node_hi(&self, node: usize) -> &[f64] {
        &self.boxes[node * 2 * self.dim + self.dim..(node + 1) * 2 * self.dim]
    }

    #[inline]
    fn children(&self, node: usize) -> Children {
        let n = &self.nodes[node];
        if n.left == 0 {
            Children::Points(n.start as usize..n.end as usize)
        } else {
            Children::Nodes(n.left as usize..n.left as usize + 2)
        }
    }
}

impl SpatialIndex for KdTree {
    fn name(&self) -> &'static str {
        "kd"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            let (lo, hi) = (self.node_lo(node), self.node_hi(node));
            if !b.intersects(lo, hi) {
                continue;
            }
            let n = &self.nodes[node];
            let span = n.start as usize..n.end as usize;
            if b.covers(lo, hi) {
                self.store.emit_all(span, out);
            } else if n.left == 0 {
                self.store.scan(span, b, out);
            } else {
                stack.push(n.left as usize + 1);
                stack.push(n.left as usize);
            }
        }
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES + self.nodes.len() * (2 * self.dim * 8 + 24)
    }

    fn knn(&self, q: &KnnQuery) -> Result<ResultSet> {
        best_first_knn(self, &self.store, q)
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
    fn structure_invariants() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Lognormal, 20_000, 3, 1)).unwrap();
        let t = KdTree::build(&ds).unwrap();
        assert!(t.max_leaf_len() <= KD_LEAF_SIZE);
        assert!(t.splits_are_ordered());
    }

    #[test]
    fn lower_median_on_even_counts() {
        let ds = Dataset::from_flat(1, (0..4).map(f64::from).collect()).unwrap();
        let t = KdTree::with_leaf_size(&ds, 2).unwrap();
        assert_eq!(t.nodes[0].split, 1.0);
        assert_eq!(t.node_count(), 3);
    }

    #[test]
    fn duplicates_keep_the_split_invariant() {
        let coords: Vec<f64> = (0..500).flat_map(|i| [(i % 3) as f64, 1.0]).collect();
        let ds = Dataset::from_flat(2, coords).unwrap();
        let t = KdTree::build(&ds).unwrap();
        assert!(t.splits_are_ordered());
        assert_eq!(t.range(&ds.bounds()).unwrap().len(), 500);
    }

    #[test]
    fn range_matches_full_scan() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Normal, 100_000, 2, 2)).unwrap();
        let t = KdTree::build(&ds).unwrap();
        let oracle = FullScanIndex::build(&ds).unwrap();
        let wl = gen_range_queries(&ds, 100, &[1e-4, 1e-3, 1e-2, 1e-1], 2).unwrap();
        for q in wl.queries() {
            assert!(t
                .range(&q.range)
                .unwrap()
                .same_ids(&oracle.range(&q.range).unwrap()));
        }
        let far = RangeBox::from_corners(&[5.0, 5.0], &[6.0, 6.0]).unwrap();
        assert!(t.range(&far).unwrap().is_empty());
    }

    #[test]
    fn knn_matches_brute_force() {
        let ds = gen_dataset(&DatasetSpec::new(Distribution::Uniform, 50_000, 3, 3)).unwrap();
        let t = KdTree::build(&ds).unwrap();
        for (i, k) in [1, 10, 100, 1000, 10_000].into_iter().enumerate() {
            let q = KnnQuery::new(Point::new(ds.point(i * 31).to_vec()).unwrap(), k).unwrap();
            let got = t.knn(&q).unwrap();
            let want = brute_force_knn(t.store(), &q).unwrap();
            assert_eq!(got.ids, want.ids);
            assert!(distances_match(
                &got.sorted_distances(&ds, q.point()),
                &want.sorted_distances(&ds, q.point()),
                1e-9
            ));
        }
    }
}
