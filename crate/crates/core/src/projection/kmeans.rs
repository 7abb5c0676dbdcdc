//! Lloyd's k-means with k-means++ seeding, deterministic for a given seed.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{dist_sq, Dataset};

pub const DEFAULT_MAX_ITER: usize = 300;
/// Stop once inertia improves by less than this fraction between rounds.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct KMeans {
    dim: usize,
    /// Row-major centers.
    pub centers: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

impl KMeans {
    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Index of the nearest center; ties go to the lowest index.
#[inline]
pub fn nearest(centers: &[f64], dim: usize, p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.chunks_exact(dim).enumerate() {
        let d = dist_sq(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn kmeans(ds: &Dataset, k: usize, seed: u64) -> Result<KMeans> {
    kmeans_with(ds, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE)
}

pub fn kmeans_with(ds: &Dataset, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeans> {
    let n = ds.len();
    let dim = ds.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {k} centers from {n} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(ds, k, &mut rng);

    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    let mut prev_inertia = f64::INFINITY;
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        sums.fill(0.0);
        counts.fill(0);
        inertia = 0.0;
        for p in ds.points() {
            let (c, d) = nearest(&centers, dim, p);
            inertia += d;
            counts[c] += 1;
            for j in 0..dim {
                sums[c * dim + j] += p[j];
            }
        }
        // Empty clusters keep their previous center.
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centers[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                }
            }
        }
        if inertia == 0.0
            || (prev_inertia.is_finite() && (prev_inertia - inertia).abs() <= tol * prev_inertia)
        {
            break;
        }
        prev_inertia = inertia;
    }
    // Inertia of the returned centers.
    let final_inertia = ds
        .points()
        .map(|p| nearest(&centers, dim, p).1)
        .sum::<f64>();
    Ok(KMeans {
        dim,
        centers,
        inertia: final_inertia.min(inertia),
        iterations,
    })
}

fn plus_plus_init(ds: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = ds.len();
    let dim = ds.dim();
    let mut centers = Vec::with_capacity(k * dim);
    centers.extend_from_slice(ds.point(rng.random_range(0..n)));
    let mut d2: Vec<f64> = ds.points().map(|p| dist_sq(p, &centers[..dim])).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            // Rounding can leave the tail pick on an existing center.
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // Every point coincides with a center; duplicates are all that is left.
            rng.random_range(0..n)
        };
        let c = ds.point(next).to_vec();
        for (i, p) in ds.points().enumerate() {
            d2[i] = d2[i].min(dist_sq(p, &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}
