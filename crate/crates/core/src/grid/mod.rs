//! Grid layouts: the learned Flood grid and the equal-width / equal-depth
//! baselines.

mod baseline;
mod flood;

pub use baseline::{GridIndex, GridMode};
pub use flood::FloodIndex;

/// Partition of one axis into consecutive cells `[b_i, b_{i+1})`, the last
/// one closed. Values outside the outer boundaries clamp to the edge cells.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisPartition {
    bounds: Vec<f64>,
    equal_width: bool,
}

impl AxisPartition {
    /// `parts` cells of equal width over `[lo, hi]`.
    pub fn equal_width(lo: f64, hi: f64, parts: usize) -> Self {
        let parts = parts.max(1);
        let step = (hi - lo) / parts as f64;
        let mut bounds: Vec<f64> = (0..parts).map(|i| lo + step * i as f64).collect();
        bounds.push(hi);
        Self {
            bounds,
            equal_width: true,
        }
    }

    /// `parts` cells holding roughly equal counts of `sorted` values.
    pub fn equal_depth(sorted: &[f64], parts: usize) -> Self {
        let n = sorted.len();
        let parts = parts.clamp(1, n.max(1));
        let mut bounds = Vec::with_capacity(parts + 1);
        bounds.push(sorted[0]);
        for i in 1..parts {
            bounds.push(sorted[i * n / parts]);
        }
        bounds.push(sorted[n - 1]);
        Self {
            bounds,
            equal_width: false,
        }
    }

    /// Explicit nondecreasing boundaries, located by binary search.
    pub fn from_boundaries(bounds: Vec<f64>) -> Self {
        assert!(bounds.len() >= 2, "an axis needs at least one cell");
        debug_assert!(bounds.windows(2).all(|w| w[0] <= w[1]));
        Self {
            bounds,
            equal_width: false,
        }
    }

    pub fn parts(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.bounds
    }

    #[inline]
    pub fn lower(&self, cell: usize) -> f64 {
        self.bounds[cell]
    }

    #[inline]
    pub fn upper(&self, cell: usize) -> f64 {
        self.bounds[cell + 1]
    }

    #[inline]
    pub fn cell(&self, x: f64) -> usize {
        let parts = self.parts();
        if self.equal_width {
            let lo = self.bounds[0];
            let extent = self.bounds[parts] - lo;
            if extent <= 0.0 {
                return 0;
            }
            let c = ((x - lo) / extent * parts as f64).floor();
            if c <= 0.0 {
                0
            } else {
                (c as usize).min(parts - 1)
            }
        } else {
            self.bounds[1..parts].partition_point(|&b| b <= x)
        }
    }

    /// Position of `x` inside `cell` as a fraction of its width, in `[0, 1]`;
    /// zero for a zero-width cell.
    #[inline]
    pub fn fraction(&self, cell: usize, x: f64) -> f64 {
        let (lo, hi) = (self.lower(cell), self.upper(cell));
        if hi > lo {
            ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn metadata_bytes(&self) -> usize {
        self.bounds.len() * 8
    }

    /// Number of `values` falling in each cell.
    pub fn slab_counts(&self, values: impl IntoIterator<Item = f64>) -> Vec<usize> {
        let mut counts = vec![0; self.parts()];
        for v in values {
            counts[self.cell(v)] += 1;
        }
        counts
    }
}

/// Row-major id of a cell; the first coordinate is the most significant.
#[inline]
pub(crate) fn flatten(coords: &[usize], radices: &[usize]) -> usize {
    coords
        .iter()
        .zip(radices)
        .fold(0, |acc, (&c, &r)| acc * r + c)
}

/// Calls `f(cell_id, coords)` for every cell of the sub-grid `lo..=hi`, in
/// increasing cell-id order.
pub(crate) fn for_each_cell(
    lo: &[usize],
    hi: &[usize],
    radices: &[usize],
    mut f: impl FnMut(usize, &[usize]),
) {
    let mut cur = lo.to_vec();
    loop {
        f(flatten(&cur, radices), &cur);
        let mut j = cur.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if cur[j] < hi[j] {
                cur[j] += 1;
                break;
            }
            cur[j] = lo[j];
        }
    }
}
