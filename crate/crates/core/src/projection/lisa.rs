use crate::error::Result;
use crate::geom::{Dataset, PointId, RangeBox};
use crate::grid::{flatten, for_each_cell, AxisPartition};
use crate::index::{ceil_root, PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::pla::PlaModel;

/// Equal-depth grid whose cells are numbered row-major.
#[derive(Clone, Debug)]
pub struct LisaGrid {
    axes: Vec<AxisPartition>,
    radices: Vec<usize>,
}

impl LisaGrid {
    pub fn new(axes: Vec<AxisPartition>) -> Self {
        let radices = axes.iter().map(AxisPartition::parts).collect();
        Self { axes, radices }
    }

    /// `parts[j]` equal-depth slabs along each dimension.
    pub fn equal_depth(ds: &Dataset, parts: &[usize]) -> Self {
        let axes = parts
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let mut col = ds.column(j);
                col.sort_unstable_by(f64::total_cmp);
                AxisPartition::equal_depth(&col, t)
            })
            .collect();
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, j: usize) -> &AxisPartition {
        &self.axes[j]
    }

    /// Cells per dimension.
    pub fn parts(&self) -> &[usize] {
        &self.radices
    }

    pub fn cell_count(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn cell_coords(&self, p: &[f64]) -> Vec<usize> {
        self.axes.iter().zip(p).map(|(a, &x)| a.cell(x)).collect()
    }

    pub fn cell_id(&self, coords: &[usize]) -> usize {
        flatten(coords, &self.radices)
    }

    /// Key of `p` taken relative to cell `coords`, whose id is `t`.
    #[inline]
    fn key_in_cell(&self, t: usize, coords: &[usize], p: &[f64]) -> f64 {
        let frac: f64 = self
            .axes
            .iter()
            .zip(coords)
            .zip(p)
            .map(|((a, &c), &x)| a.fraction(c, x))
            .product();
        let t = t as f64;
        let key = t + frac;
        // A full fraction would land on the next cell's id.
        if key >= t + 1.0 {
            (t + 1.0).next_down()
        } else {
            key
        }
    }

    /// Cell id plus the volume fraction of the cell below `p`.
    pub fn key(&self, p: &[f64]) -> f64 {
        let coords = self.cell_coords(p);
        self.key_in_cell(self.cell_id(&coords), &coords, p)
    }

    pub fn metadata_bytes(&self) -> usize {
        self.axes
            .iter()
            .map(AxisPartition::metadata_bytes)
            .sum::<usize>()
            + self.radices.len() * 8
    }
}

/// LISA: points ordered by cell id plus intra-cell volume fraction, with a
/// PLA model over the keys.
#[derive(Debug)]
pub struct LisaIndex {
    grid: LisaGrid,
    keys: Vec<f64>,
    model: PlaModel,
    store: PointStore,
}

impl LisaIndex {
    /// Roughly `cell_points` points per cell.
    pub fn build(ds: &Dataset, epsilon: usize, cell_points: usize) -> Result<Self> {
        let t = ceil_root(ds.len() as f64 / cell_points.max(1) as f64, ds.dim());
        let grid = LisaGrid::equal_depth(ds, &vec![t; ds.dim()]);
        Self::with_grid(ds, epsilon, grid)
    }

    pub fn with_grid(ds: &Dataset, epsilon: usize, grid: LisaGrid) -> Result<Self> {
        let mut pairs: Vec<(f64, u32)> = ds
            .points()
            .enumerate()
            .map(|(id, p)| (grid.key(p), id as u32))
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let keys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let model = PlaModel::build(&keys, epsilon)?;
        let order: Vec<usize> = pairs.iter().map(|p| p.1 as usize).collect();
        Ok(Self {
            grid,
            keys,
            model,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn grid(&self) -> &LisaGrid {
        &self.grid
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    pub fn model(&self) -> &PlaModel {
        &self.model
    }

    fn scan_keys(&self, lo: f64, hi: f64, b: &RangeBox, out: &mut Vec<PointId>) {
        let n = self.keys.len();
        let from = self.model.search(&self.keys, lo);
        let mut to = from;
        while to < n && self.keys[to] <= hi {
            to += 1;
        }
        self.store.scan(from..to, b, out);
    }
}

impl SpatialIndex for LisaIndex {
    fn name(&self) -> &'static str {
        "lisa"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        let Some(clipped) = b.intersection(self.store.bounds()) else {
            return;
        };
        let g = &self.grid;
        let lo_cell = g.cell_coords(clipped.lo());
        let hi_cell = g.cell_coords(clipped.hi());
        let d = g.dim();
        let mut sub_lo = vec![0.0; d];
        let mut sub_hi = vec![0.0; d];
        for_each_cell(&lo_cell, &hi_cell, g.parts(), |t, coords| {
            // Cell assignment is monotone per dimension, so a cell strictly
            // inside the cell range on every dimension lies inside the box.
            if coords
                .iter()
                .zip(lo_cell.iter().zip(&hi_cell))
                .all(|(c, (l, h))| l < c && c < h)
            {
                let from = self.model.search(&self.keys, t as f64);
                let to = self.model.search(&self.keys, (t + 1) as f64);
                self.store.emit_all(from..to, out);
                return;
            }
            for j in 0..d {
                let axis = g.axis(j);
                sub_lo[j] = clipped.lo()[j].max(axis.lower(coords[j]));
                sub_hi[j] = clipped.hi()[j].min(axis.upper(coords[j]));
            }
            // Each fraction is monotone in its coordinate, so the clipped
            // corners bound every key of the box inside this cell.
            let lo_key = g.key_in_cell(t, coords, &sub_lo);
            let hi_key = g.key_in_cell(t, coords, &sub_hi);
            self.scan_keys(lo_key, hi_key, b, out);
        });
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES + self.grid.metadata_bytes() + self.model.metadata_bytes()
    }
}
