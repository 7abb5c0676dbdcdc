use std::fmt;

use crate::error::Result;
use crate::geom::{Dataset, PointId, RangeBox};
use crate::grid::{flatten, for_each_cell, AxisPartition};
use crate::index::{ceil_root, PointStore, SpatialIndex, INDEX_HEADER_BYTES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMode {
    EqualWidth,
    EqualDepth,
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridMode::EqualWidth => "equal-width",
            GridMode::EqualDepth => "equal-depth",
        })
    }
}

/// Non-learned grid: points bucketed by cell, cells scanned whole.
#[derive(Debug)]
pub struct GridIndex {
    mode: GridMode,
    axes: Vec<AxisPartition>,
    parts: Vec<usize>,
    cell_start: Vec<usize>,
    store: PointStore,
}

impl GridIndex {
    /// About `cell_points` points per cell on uniform data.
    pub fn build(ds: &Dataset, mode: GridMode, cell_points: usize) -> Result<Self> {
        let d = ds.dim();
        let k = ceil_root(ds.len() as f64 / cell_points.max(1) as f64, d);
        let bounds = ds.bounds();
        let axes: Vec<AxisPartition> = (0..d)
            .map(|j| match mode {
                GridMode::EqualWidth => {
                    AxisPartition::equal_width(bounds.lo()[j], bounds.hi()[j], k)
                }
                GridMode::EqualDepth => {
                    let mut col = ds.column(j);
                    col.sort_unstable_by(f64::total_cmp);
                    AxisPartition::equal_depth(&col, k)
                }
            })
            .collect();
        let parts: Vec<usize> = axes.iter().map(AxisPartition::parts).collect();
        let mut coords = vec![0; d];
        let mut tagged: Vec<(usize, u32)> = ds
            .points()
            .enumerate()
            .map(|(id, p)| {
                for (c, (a, &x)) in coords.iter_mut().zip(axes.iter().zip(p)) {
                    *c = a.cell(x);
                }
                (flatten(&coords, &parts), id as u32)
            })
            .collect();
        tagged.sort_unstable();
        let cells: usize = parts.iter().product();
        let mut cell_start = vec![0usize; cells + 1];
        for t in &tagged {
            cell_start[t.0 + 1] += 1;
        }
        for c in 0..cells {
            cell_start[c + 1] += cell_start[c];
        }
        let order: Vec<usize> = tagged.iter().map(|t| t.1 as usize).collect();
        Ok(Self {
            mode,
            axes,
            parts,
            cell_start,
            store: PointStore::permuted(ds, &order),
        })
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn axis(&self, j: usize) -> &AxisPartition {
        &self.axes[j]
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn cell_of(&self, p: &[f64]) -> usize {
        let coords: Vec<usize> = self.axes.iter().zip(p).map(|(a, &x)| a.cell(x)).collect();
        flatten(&coords, &self.parts)
    }

    pub fn cell_range(&self, c: usize) -> std::ops::Range<usize> {
        self.cell_start[c]..self.cell_start[c + 1]
    }

    pub fn cell_sizes(&self) -> Vec<usize> {
        self.cell_start.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Points per slab along dimension `j`.
    pub fn slab_counts(&self, j: usize) -> Vec<usize> {
        let inner: usize = self.parts[j + 1..].iter().product();
        let mut counts = vec![0; self.parts[j]];
        for (c, size) in self.cell_sizes().into_iter().enumerate() {
            counts[(c / inner) % self.parts[j]] += size;
        }
        counts
    }
}

impl SpatialIndex for GridIndex {
    fn name(&self) -> &'static str {
        match self.mode {
            GridMode::EqualWidth => "ug",
            GridMode::EqualDepth => "edg",
        }
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        let Some(clipped) = b.intersection(self.store.bounds()) else {
            return;
        };
        let lo: Vec<usize> = self
            .axes
            .iter()
            .zip(clipped.lo())
            .map(|(a, &x)| a.cell(x))
            .collect();
        let hi: Vec<usize> = self
            .axes
            .iter()
            .zip(clipped.hi())
            .map(|(a, &x)| a.cell(x))
            .collect();
        for_each_cell(&lo, &hi, &self.parts, |c, _| {
            self.store.scan(self.cell_range(c), b, out);
        });
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES
            + self
                .axes
                .iter()
                .map(AxisPartition::metadata_bytes)
                .sum::<usize>()
    }
}
