use crate::error::{Error, Result};
use crate::geom::{Dataset, PointId, RangeBox};
use crate::grid::{flatten, for_each_cell};
use crate::index::{ceil_root, PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::pla::PlaModel;

/// Flood: a grid over every dimension but the sort dimension, with cell
/// boundaries taken from learned per-dimension CDFs. Each cell is a run
/// sorted by the sort dimension and searched through its own PLA model.
#[derive(Debug)]
pub struct FloodIndex {
    sort_dim: usize,
    grid: CdfGrid,
    // Layout positions of cell c are cell_start[c]..cell_start[c+1].
    cell_start: Vec<usize>,
    cell_models: Vec<Option<PlaModel>>,
    // Sort-dimension value of each stored point.
    keys: Vec<f64>,
    store: PointStore,
}

impl FloodIndex {
    /// `sort_dim: None` sorts by the last dimension.
    pub fn build(
        ds: &Dataset,
        epsilon: usize,
        cell_points: usize,
        sort_dim: Option<usize>,
    ) -> Result<Self> {
        let d = ds.dim();
        if d < 2 {
            return Err(Error::InvalidArgument(
                "flood needs at least two dimensions".into(),
            ));
        }
        let sort_dim = sort_dim.unwrap_or(d - 1);
        if sort_dim >= d {
            return Err(Error::InvalidArgument(format!(
                "sort dimension {sort_dim} out of range for {d} dimensions"
            )));
        }
        let n = ds.len();
        let k = ceil_root(n as f64 / cell_points.max(1) as f64, d - 1);
        let dims: Vec<usize> = (0..d).filter(|&j| j != sort_dim).collect();
        let cdfs = dims
            .iter()
            .map(|&j| {
                let mut col = ds.column(j);
                col.sort_unstable_by(f64::total_cmp);
                PlaModel::build(&col, epsilon)
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = CdfGrid {
            parts: vec![k; dims.len()],
            dims,
            cdfs,
        };
        let mut tagged: Vec<(usize, f64, u32)> = ds
            .points()
            .enumerate()
            .map(|(id, p)| (grid.cell_of(p), p[sort_dim], id as u32))
            .collect();
        tagged.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let cells = grid.cell_count();
        let mut cell_start = vec![0usize; cells + 1];
        for t in &tagged {
            cell_start[t.0 + 1] += 1;
        }
        for c in 0..cells {
            cell_start[c + 1] += cell_start[c];
        }
        let keys: Vec<f64> = tagged.iter().map(|t| t.1).collect();
        let cell_models = (0..cells)
            .map(|c| {
                let run = &keys[cell_start[c]..cell_start[c + 1]];
                (!run.is_empty())
                    .then(|| PlaModel::build(run, epsilon))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        let order: Vec<usize> = tagged.iter().map(|t| t.2 as usize).collect();
        Ok(Self {
            sort_dim,
            grid,
            cell_start,
            cell_models,
            keys,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn sort_dim(&self) -> usize {
        self.sort_dim
    }

    /// Slabs per grid dimension, in the order of [`FloodIndex::grid_dims`].
    pub fn parts(&self) -> &[usize] {
        &self.grid.parts
    }

    pub fn grid_dims(&self) -> &[usize] {
        &self.grid.dims
    }

    pub fn cell_count(&self) -> usize {
        self.grid.cell_count()
    }

    /// Slab of `x` along the `i`-th grid dimension.
    pub fn slab(&self, i: usize, x: f64) -> usize {
        self.grid.slab(i, x)
    }

    /// Row-major cell of a point.
    pub fn cell_of(&self, p: &[f64]) -> usize {
        self.grid.cell_of(p)
    }

    /// Layout positions of cell `c`.
    pub fn cell_range(&self, c: usize) -> std::ops::Range<usize> {
        self.cell_start[c]..self.cell_start[c + 1]
    }

    pub fn cell_sizes(&self) -> Vec<usize> {
        self.cell_start.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Points per slab along the `i`-th grid dimension.
    pub fn slab_counts(&self, i: usize) -> Vec<usize> {
        let parts = &self.grid.parts;
        let inner: usize = parts[i + 1..].iter().product();
        let mut counts = vec![0; parts[i]];
        for (c, size) in self.cell_sizes().into_iter().enumerate() {
            counts[(c / inner) % parts[i]] += size;
        }
        counts
    }
}

/// Grid over the non-sort dimensions, sliced by learned CDFs.
#[derive(Debug)]
struct CdfGrid {
    // Grid dimensions in cell-id order, paired with their CDF and slab count.
    dims: Vec<usize>,
    cdfs: Vec<PlaModel>,
    parts: Vec<usize>,
}

impl CdfGrid {
    fn cell_count(&self) -> usize {
        self.parts.iter().product()
    }

    #[inline]
    fn slab(&self, i: usize, x: f64) -> usize {
        let cdf = &self.cdfs[i];
        let k = self.parts[i];
        let c = (cdf.predict(x) / cdf.len() as f64 * k as f64).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(k - 1)
        }
    }

    fn slabs(&self, p: &[f64]) -> Vec<usize> {
        self.dims
            .iter()
            .enumerate()
            .map(|(i, &j)| self.slab(i, p[j]))
            .collect()
    }

    fn cell_of(&self, p: &[f64]) -> usize {
        flatten(&self.slabs(p), &self.parts)
    }
}

impl SpatialIndex for FloodIndex {
    fn name(&self) -> &'static str {
        "flood"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        let Some(clipped) = b.intersection(self.store.bounds()) else {
            return;
        };
        let lo = self.grid.slabs(clipped.lo());
        let hi = self.grid.slabs(clipped.hi());
        let (s_lo, s_hi) = (clipped.lo()[self.sort_dim], clipped.hi()[self.sort_dim]);
        for_each_cell(&lo, &hi, &self.grid.parts, |c, coords| {
            let Some(model) = &self.cell_models[c] else {
                return;
            };
            let run = self.cell_range(c);
            let keys = &self.keys[run.clone()];
            let mut to = model.search(keys, s_lo);
            let from = to;
            while to < keys.len() && keys[to] <= s_hi {
                to += 1;
            }
            let span = run.start + from..run.start + to;
            // Slabs are monotone in the coordinate, so a cell strictly inside
            // the slab range on every grid dimension lies inside the box there,
            // and the sort-dimension search already bounds the rest exactly.
            if coords
                .iter()
                .zip(lo.iter().zip(&hi))
                .all(|(c, (l, h))| l < c && c < h)
            {
                self.store.emit_all(span, out);
            } else {
                self.store.scan(span, b, out);
            }
        });
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES
            + self.grid.parts.len() * 8
            + self
                .grid
                .cdfs
                .iter()
                .map(PlaModel::metadata_bytes)
                .sum::<usize>()
            + self
                .cell_models
                .iter()
                .flatten()
                .map(PlaModel::metadata_bytes)
                .sum::<usize>()
    }
}
