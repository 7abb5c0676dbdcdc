//! Tree indices and the full-scan oracle.

mod fullscan;
mod ifi;
mod kd;
mod str_tree;

pub use fullscan::FullScanIndex;
pub use ifi::{IfiIndex, LeafModel};
pub use kd::KdTree;
pub use str_tree::StrTree;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::Range;

use crate::error::Result;
use crate::geom::{dist_sq, min_dist_sq_to_box, Dataset, KnnQuery, PointId, RangeBox, ResultSet};
use crate::index::{ceil_root, check_knn, PointStore};

/// What a node points at: child nodes or a run of stored points.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Children {
    Nodes(Range<usize>),
    Points(Range<usize>),
}

/// Read access shared by the tree layouts.
pub(crate) trait Hierarchy {
    fn root(&self) -> usize;
    fn node_lo(&self, node: usize) -> &[f64];
    fn node_hi(&self, node: usize) -> &[f64];
    fn children(&self, node: usize) -> Children;
}

/// Depth-first walk of every node whose box meets `b`. Leaves are handed to
/// `leaf(node, points, covered)`, where `covered` means `b` contains the
/// whole leaf box.
pub(crate) fn walk_range<H: Hierarchy>(
    tree: &H,
    b: &RangeBox,
    mut leaf: impl FnMut(usize, Range<usize>, bool),
) {
    let mut stack = vec![tree.root()];
    while let Some(node) = stack.pop() {
        let (lo, hi) = (tree.node_lo(node), tree.node_hi(node));
        if !b.intersects(lo, hi) {
            continue;
        }
        match tree.children(node) {
            Children::Nodes(r) => stack.extend(r.rev()),
            Children::Points(r) => leaf(node, r, b.covers(lo, hi)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct HeapItem {
    dist_sq: f64,
    // Nodes sort ahead of points at equal distance so that every point at
    // that distance is in the heap before any of them is emitted.
    is_point: bool,
    key: u64,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.is_point.cmp(&other.is_point))
            .then(self.key.cmp(&other.key))
    }
}

/// Exact best-first kNN; ties at equal distance go to the lower id.
pub(crate) fn best_first_knn<H: Hierarchy>(
    tree: &H,
    store: &PointStore,
    q: &KnnQuery,
) -> Result<ResultSet> {
    check_knn(store, q)?;
    let p = q.point();
    let mut heap = BinaryHeap::new();
    let node_item = |node: usize| HeapItem {
        dist_sq: min_dist_sq_to_box(p, tree.node_lo(node), tree.node_hi(node)),
        is_point: false,
        key: node as u64,
    };
    heap.push(Reverse(node_item(tree.root())));
    let mut ids = Vec::with_capacity(q.k());
    while let Some(Reverse(item)) = heap.pop() {
        if item.is_point {
            ids.push(item.key as PointId);
            if ids.len() == q.k() {
                break;
            }
            continue;
        }
        match tree.children(item.key as usize) {
            Children::Nodes(r) => heap.extend(r.map(|c| Reverse(node_item(c)))),
            Children::Points(r) => heap.extend(r.map(|pos| {
                Reverse(HeapItem {
                    dist_sq: dist_sq(store.point(pos), p),
                    is_point: true,
                    key: store.id(pos),
                })
            })),
        }
    }
    Ok(ResultSet::new(ids))
}

/// Sort-tile-recursive ordering of `items` by their centers (row-major,
/// `dim` values each) into pages of `cap`.
pub(crate) fn str_tile(centers: &[f64], dim: usize, items: &mut [u32], cap: usize) {
    tile_axis(centers, dim, items, cap, 0);
}

fn tile_axis(centers: &[f64], dim: usize, items: &mut [u32], cap: usize, axis: usize) {
    let n = items.len();
    if n <= cap && axis + 1 < dim {
        return;
    }
    items.sort_unstable_by(|&a, &b| {
        centers[a as usize * dim + axis]
            .total_cmp(&centers[b as usize * dim + axis])
            .then(a.cmp(&b))
    });
    if axis + 1 == dim {
        return;
    }
    let pages = n.div_ceil(cap);
    let slices = ceil_root(pages as f64, dim - axis);
    let per_slice = cap * pages.div_ceil(slices);
    for chunk in items.chunks_mut(per_slice) {
        tile_axis(centers, dim, chunk, cap, axis + 1);
    }
}

/// STR-packed tree stored as one node array: leaves first, the root last.
/// Each level is ordered so a parent's children are contiguous.
#[derive(Clone, Debug)]
pub(crate) struct PackedTree {
    dim: usize,
    // Per node: lo corner then hi corner.
    boxes: Vec<f64>,
    spans: Vec<(u32, u32)>,
    leaves: usize,
}

impl PackedTree {
    /// Packs `ds`; returns the tree and the point layout order (ids).
    pub(crate) fn pack(ds: &Dataset, leaf_cap: usize, node_cap: usize) -> (Self, Vec<usize>) {
        let dim = ds.dim();
        let n = ds.len();
        let mut items: Vec<u32> = (0..n as u32).collect();
        str_tile(ds.as_flat(), dim, &mut items, leaf_cap);
        let order: Vec<usize> = items.iter().map(|&i| i as usize).collect();

        let mut tree = Self {
            dim,
            boxes: Vec::new(),
            spans: Vec::new(),
            leaves: 0,
        };
        for start in (0..n).step_by(leaf_cap) {
            let end = (start + leaf_cap).min(n);
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for &id in &order[start..end] {
                for (j, &x) in ds.point(id).iter().enumerate() {
                    lo[j] = lo[j].min(x);
                    hi[j] = hi[j].max(x);
                }
            }
            tree.push(&lo, &hi, (start as u32, end as u32));
        }
        tree.leaves = tree.spans.len();

        let mut level = 0..tree.spans.len();
        while level.len() > 1 {
            tree.tile_level(level.clone(), node_cap);
            let first = tree.spans.len();
            for start in level.clone().step_by(node_cap) {
                let end = (start + node_cap).min(level.end);
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for c in start..end {
                    for j in 0..dim {
                        lo[j] = lo[j].min(tree.node_lo(c)[j]);
                        hi[j] = hi[j].max(tree.node_hi(c)[j]);
                    }
                }
                tree.push(&lo, &hi, (start as u32, end as u32));
            }
            level = first..tree.spans.len();
        }
        (tree, order)
    }

    fn push(&mut self, lo: &[f64], hi: &[f64], span: (u32, u32)) {
        self.boxes.extend_from_slice(lo);
        self.boxes.extend_from_slice(hi);
        self.spans.push(span);
    }

    /// Reorders the nodes of one level along an STR tiling of their centers.
    fn tile_level(&mut self, level: Range<usize>, cap: usize) {
        let dim = self.dim;
        let centers: Vec<f64> = level
            .clone()
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| 0.5 * (self.node_lo(i)[j] + self.node_hi(i)[j]))
            .collect();
        let mut items: Vec<u32> = (0..level.len() as u32).collect();
        str_tile(&centers, dim, &mut items, cap);
        let w = 2 * dim;
        let old_boxes = self.boxes[level.start * w..level.end * w].to_vec();
        let old_spans = self.spans[level.clone()].to_vec();
        for (slot, &from) in items.iter().enumerate() {
            let from = from as usize;
            let to = level.start + slot;
            self.boxes[to * w..(to + 1) * w].copy_from_slice(&old_boxes[from * w..(from + 1) * w]);
            self.spans[to] = old_spans[from];
        }
    }

    pub(crate) fn node_count(&self) -> usize {
        self.spans.len()
    }

    pub(crate) fn leaf_count(&self) -> usize {
        self.leaves
    }

    /// Levels from the leaves up to the root, inclusive.
    pub(crate) fn height(&self) -> usize {
        let mut h = 1;
        let mut node = self.root();
        while let Children::Nodes(r) = self.children(node) {
            node = r.start;
            h += 1;
        }
        h
    }

    pub(crate) fn box_bytes(&self) -> usize {
        2 * self.dim * 8
    }
}

impl Hierarchy for PackedTree {
    fn root(&self) -> usize {
        self.spans.len() - 1
    }

    #[inline]
    fn node_lo(&self, node: usize) -> &[f64] {
        let w = 2 * self.dim;
        &self.boxes[node * w..node * w + self.dim]
    }

    #[inline]
    fn node_hi(&self, node: usize) -> &[f64] {
        let w = 2 * self.dim;
        &self.boxes[node * w + self.dim..(node + 1) * w]
    }

    #[inline]
    fn children(&self, node: usize) -> Children {
        let (s, e) = self.spans[node];
        if node < self.leaves {
            Children::Points(s as usize..e as usize)
        } else {
            Children::Nodes(s as usize..e as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiling_groups_pages_spatially() {
        // 4x4 lattice, pages of 4: STR gives the four 2x2 quadrants.
        let mut coords = Vec::new();
        for y in 0..4 {
            for x in 0..4 {
                coords.extend_from_slice(&[x as f64, y as f64]);
            }
        }
        let mut items: Vec<u32> = (0..16).collect();
        str_tile(&coords, 2, &mut items, 4);
        for page in items.chunks(4) {
            let xs: Vec<f64> = page.iter().map(|&i| coords[i as usize * 2]).collect();
            let ys: Vec<f64> = page.iter().map(|&i| coords[i as usize * 2 + 1]).collect();
            let spread = |v: &[f64]| {
                v.iter().cloned().fold(f64::MIN, f64::max)
                    - v.iter().cloned().fold(f64::MAX, f64::min)
            };
            assert_eq!(spread(&xs), 1.0);
            assert_eq!(spread(&ys), 1.0);
        }
    }

    #[test]
    fn heap_prefers_nodes_then_lower_ids() {
        let a = HeapItem {
            dist_sq: 1.0,
            is_point: true,
            key: 3,
        };
        let b = HeapItem {
            dist_sq: 1.0,
            is_point: false,
            key: 9,
        };
        let c = HeapItem {
            dist_sq: 1.0,
            is_point: true,
            key: 2,
        };
        assert!(b < c && c < a);
    }
}
