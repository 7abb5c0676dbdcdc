use crate::error::{Error, Result};
use crate::geom::{max_dist_sq_to_box, min_dist_sq_to_box, Dataset, PointId, RangeBox};
use crate::index::{PointStore, SpatialIndex, INDEX_HEADER_BYTES};
use crate::pla::PlaModel;
use crate::projection::kmeans::{kmeans, nearest};

/// Partition count picked when none is given.
pub fn auto_partitions(n: usize) -> usize {
    if n < 20_000_000 {
        20
    } else {
        40
    }
}

/// ML-Index: each point is keyed by `offset_i + dist(p, ref_i)` for its
/// nearest reference point `ref_i`, where `offset_i` is the sum of the radii
/// of all earlier partitions. Key ranges of partitions never overlap.
#[derive(Debug)]
pub struct MliIndex {
    dim: usize,
    refs: Vec<f64>,
    offsets: Vec<f64>,
    radii: Vec<f64>,
    // Layout positions of each partition; partition i is part_start[i]..part_start[i+1].
    part_start: Vec<usize>,
    keys: Vec<f64>,
    model: PlaModel,
    store: PointStore,
}

impl MliIndex {
    /// `partitions: None` uses [`auto_partitions`], capped at the point count.
    pub fn build(
        ds: &Dataset,
        epsilon: usize,
        partitions: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        let n = ds.len();
        let p = match partitions {
            Some(p) if p > n => {
                return Err(Error::InvalidArgument(format!(
                    "{p} partitions requested for {n} points"
                )))
            }
            Some(p) => p,
            None => auto_partitions(n).min(n),
        };
        let km = kmeans(ds, p, seed)?;
        Ok(Self::from_reference_points(ds, epsilon, km.centers))
    }

    /// Builds over explicit reference points (row-major).
    pub fn from_reference_points(ds: &Dataset, epsilon: usize, refs: Vec<f64>) -> Self {
        let dim = ds.dim();
        let p = refs.len() / dim;
        let mut assigned: Vec<(u32, f64, u32)> = Vec::with_capacity(ds.len());
        let mut radii = vec![0.0f64; p];
        let mut counts = vec![0usize; p];
        for (id, pt) in ds.points().enumerate() {
            let (part, d2) = nearest(&refs, dim, pt);
            let d = d2.sqrt();
            radii[part] = radii[part].max(d);
            counts[part] += 1;
            assigned.push((part as u32, d, id as u32));
        }
        let mut offsets = Vec::with_capacity(p);
        let mut acc = 0.0;
        for r in &radii {
            offsets.push(acc);
            acc += r;
        }
        assigned
            .sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut part_start = Vec::with_capacity(p + 1);
        part_start.push(0);
        for c in &counts {
            part_start.push(part_start.last().unwrap() + c);
        }
        let keys: Vec<f64> = assigned
            .iter()
            .map(|&(part, d, _)| offsets[part as usize] + d)
            .collect();
        let model = PlaModel::build(&keys, epsilon).expect("keys are sorted and nonempty");
        let order: Vec<usize> = assigned.iter().map(|a| a.2 as usize).collect();
        Self {
            dim,
            refs,
            offsets,
            radii,
            part_start,
            keys,
            model,
            store: PointStore::permuted(ds, &order),
        }
    }

    pub fn partitions(&self) -> usize {
        self.offsets.len()
    }

    pub fn reference_point(&self, i: usize) -> &[f64] {
        &self.refs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn model(&self) -> &PlaModel {
        &self.model
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    /// Layout positions of partition `i`.
    pub fn partition_range(&self, i: usize) -> std::ops::Range<usize> {
        self.part_start[i]..self.part_start[i + 1]
    }

    /// `(partition, key)` of a point.
    pub fn project(&self, p: &[f64]) -> (usize, f64) {
        let (part, d2) = nearest(&self.refs, self.dim, p);
        (part, self.offsets[part] + d2.sqrt())
    }
}

impl SpatialIndex for MliIndex {
    fn name(&self) -> &'static str {
        "mli"
    }

    fn store(&self) -> &PointStore {
        &self.store
    }

    fn range_into(&self, b: &RangeBox, out: &mut Vec<PointId>) {
        for i in 0..self.partitions() {
            let part = self.partition_range(i);
            if part.is_empty() {
                continue;
            }
            let rp = self.reference_point(i);
            let min_d = min_dist_sq_to_box(rp, b.lo(), b.hi()).sqrt();
            let radius = self.radii[i];
            // Slack covers rounding between the two distance formulas.
            let slack = 1e-9 * (1.0 + self.offsets[i] + radius);
            if min_d > radius + slack {
                continue;
            }
            let max_d = max_dist_sq_to_box(rp, b.lo(), b.hi()).sqrt().min(radius);
            let lo_key = self.offsets[i] + min_d - slack;
            let hi_key = self.offsets[i] + max_d + slack;
            let from = self.model.search(&self.keys, lo_key).max(part.start);
            let mut to = from;
            while to < part.end && self.keys[to] <= hi_key {
                to += 1;
            }
            self.store.scan(from..to, b, out);
        }
    }

    fn metadata_bytes(&self) -> usize {
        INDEX_HEADER_BYTES
            + self.refs.len() * 8
            + (self.offsets.len() + self.radii.len()) * 8
            + self.model.metadata_bytes()
    }
}
