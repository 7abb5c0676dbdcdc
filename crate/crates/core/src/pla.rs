//! Error-bounded piecewise-linear CDF over sorted `f64` keys.
//!
//! Fitting is the one-pass optimal PLA: for each segment we keep the upper
//! and lower convex hulls of the `rank ± ε` constraints and the rectangle of
//! extreme feasible lines, closing the segment as soon as a new key cannot
//! be covered. The result has the minimum number of segments for the bound.
//!
//! Duplicate keys are collapsed onto the rank of their first occurrence, so
//! [`PlaModel::search`] returns lower bounds.

use crate::error::{Error, Result};

/// Bytes accounted per stored segment (three `f64` fields).
pub const SEGMENT_BYTES: usize = 24;
/// Fixed per-model bytes (epsilon and key count).
pub const MODEL_HEADER_BYTES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub first_key: f64,
    /// Rank units per key unit.
    pub slope: f64,
    /// Predicted rank at `first_key`.
    pub intercept: f64,
}

impl Segment {
    #[inline]
    fn eval(&self, key: f64) -> f64 {
        self.slope * (key - self.first_key) + self.intercept
    }
}

#[derive(Clone, Debug)]
pub struct PlaModel {
    segments: Vec<Segment>,
    // Suffix minimum of the following segments' intercepts. Capping each
    // segment with it keeps predict nondecreasing across segment borders.
    caps: Vec<f64>,
    epsilon: usize,
    n: usize,
}

impl PlaModel {
    /// Fits a model to `keys` (sorted nondecreasing) with max rank error `epsilon`.
    pub fn build(keys: &[f64], epsilon: usize) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit a model to zero keys".into(),
            ));
        }
        if epsilon == 0 {
            return Err(Error::InvalidArgument("epsilon must be at least 1".into()));
        }
        // The fitted lines touch the ε band exactly; shrinking the band by a
        // hair absorbs rounding so the stored model honours ε on every key.
        let eps = epsilon as f64 - (1e-6f64).max(keys.len() as f64 * 1e-13);
        let mut fit = HullFit::default();
        let mut segments = Vec::new();
        for (i, &key) in keys.iter().enumerate() {
            if !key.is_finite() {
                return Err(Error::NonFinite { point: i, dim: 0 });
            }
            if i > 0 {
                let prev = keys[i - 1];
                if key < prev {
                    return Err(Error::Unsorted { position: i });
                }
                if key == prev {
                    continue;
                }
            }
            if !fit.add(key, i as f64, eps) {
                segments.push(fit.segment());
                let fresh = fit.add(key, i as f64, eps);
                debug_assert!(fresh);
            }
        }
        segments.push(fit.segment());

        let mut caps = vec![f64::INFINITY; segments.len()];
        for i in (0..segments.len().saturating_sub(1)).rev() {
            caps[i] = caps[i + 1].min(segments[i + 1].intercept);
        }
        Ok(Self {
            segments,
            caps,
            epsilon,
            n: keys.len(),
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn epsilon(&self) -> usize {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn metadata_bytes(&self) -> usize {
        MODEL_HEADER_BYTES + SEGMENT_BYTES * self.segments.len()
    }

    /// Approximate rank of `key`, clamped to `[0, n-1]`.
    #[inline]
    pub fn predict(&self, key: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.first_key <= key);
        if idx == 0 {
            return 0.0;
        }
        let pos = self.segments[idx - 1].eval(key).min(self.caps[idx - 1]);
        pos.clamp(0.0, (self.n - 1) as f64)
    }

    /// Lower-bound position of `key` in `keys`, which must be the array the
    /// model was built on.
    pub fn search(&self, keys: &[f64], key: f64) -> usize {
        debug_assert_eq!(keys.len(), self.n);
        self.search_by(keys.len(), |i| keys[i], key)
    }

    /// [`search`](Self::search) over keys reachable through an accessor, for
    /// callers that keep keys inside a larger record.
    #[inline]
    pub fn search_by(&self, n: usize, key_at: impl Fn(usize) -> f64, key: f64) -> usize {
        if n == 0 || key <= key_at(0) {
            return 0;
        }
        if key > key_at(n - 1) {
            return n;
        }
        let pred = self.predict(key);
        let eps = self.epsilon as f64;
        let mut lo = ((pred - eps).floor().max(0.0) as usize).min(n);
        let mut hi = (((pred + eps).ceil().max(0.0) as usize) + 1).min(n);
        // Widen when the window misses the answer (probes that are not
        // indexed keys may fall outside the ε band).
        let mut step = self.epsilon.max(1);
        while lo > 0 && key_at(lo - 1) >= key {
            lo = lo.saturating_sub(step);
            step *= 2;
        }
        step = self.epsilon.max(1);
        while hi < n && key_at(hi - 1) < key {
            hi = (hi + step).min(n);
            step *= 2;
        }
        let (mut a, mut b) = (lo, hi);
        while a < b {
            let mid = a + (b - a) / 2;
            if key_at(mid) < key {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        a
    }
}

/// Convenience wrapper over [`PlaModel::build`].
pub fn build_pla(keys: &[f64], epsilon: usize) -> Result<PlaModel> {
    PlaModel::build(keys, epsilon)
}

#[derive(Clone, Copy, Debug, Default)]
struct Pt {
    x: f64,
    y: f64,
}

#[derive(Clone, Copy, Debug)]
struct Slope {
    dx: f64,
    dy: f64,
}

impl Slope {
    fn between(to: Pt, from: Pt) -> Self {
        Self {
            dx: to.x - from.x,
            dy: to.y - from.y,
        }
    }

    fn lt(self, o: Slope) -> bool {
        self.dy * o.dx < self.dx * o.dy
    }

    fn gt(self, o: Slope) -> bool {
        self.dy * o.dx > self.dx * o.dy
    }

    fn value(self) -> f64 {
        self.dy / self.dx
    }
}

fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    let oa = Slope::between(a, o);
    let ob = Slope::between(b, o);
    oa.dx * ob.dy - oa.dy * ob.dx
}

/// Streaming state for one segment. Key coordinates are stored relative to
/// the segment's first key.
#[derive(Default)]
struct HullFit {
    first_x: f64,
    count: usize,
    // [0] upper at first x, [1] lower at first x; [2]/[3] the opposite
    // corners defining the min-slope (0→2) and max-slope (1→3) lines.
    rect: [Pt; 4],
    upper: Vec<Pt>,
    lower: Vec<Pt>,
    upper_start: usize,
    lower_start: usize,
}

impl HullFit {
    fn add(&mut self, key: f64, rank: f64, eps: f64) -> bool {
        if self.count == 0 {
            self.first_x = key;
        }
        let x = key - self.first_x;
        let p1 = Pt { x, y: rank + eps };
        let p2 = Pt { x, y: rank - eps };

        if self.count == 0 {
            self.rect[0] = p1;
            self.rect[1] = p2;
            self.upper.clear();
            self.lower.clear();
            self.upper.push(p1);
            self.lower.push(p2);
            self.upper_start = 0;
            self.lower_start = 0;
            self.count = 1;
            return true;
        }
        if self.count == 1 {
            self.rect[2] = p2;
            self.rect[3] = p1;
            self.upper.push(p1);
            self.lower.push(p2);
            self.count = 2;
            return true;
        }

        let slope1 = Slope::between(self.rect[2], self.rect[0]);
        let slope2 = Slope::between(self.rect[3], self.rect[1]);
        let outside1 = Slope::between(p1, self.rect[2]).lt(slope1);
        let outside2 = Slope::between(p2, self.rect[3]).gt(slope2);
        if outside1 || outside2 {
            self.count = 0;
            return false;
        }

        if Slope::between(p1, self.rect[1]).lt(slope2) {
            let mut min = Slope::between(self.lower[self.lower_start], p1);
            let mut min_i = self.lower_start;
            for i in self.lower_start + 1..self.lower.len() {
                let val = Slope::between(self.lower[i], p1);
                if val.gt(min) {
                    break;
                }
                min = val;
                min_i = i;
            }
            self.rect[1] = self.lower[min_i];
            self.rect[3] = p1;
            self.lower_start = min_i;

            let mut end = self.upper.len();
            while end >= self.upper_start + 2
                && cross(self.upper[end - 2], self.upper[end - 1], p1) <= 0.0
            {
                end -= 1;
            }
            self.upper.truncate(end);
            self.upper.push(p1);
        }

        if Slope::between(p2, self.rect[0]).gt(slope1) {
            let mut max = Slope::between(self.upper[self.upper_start], p2);
            let mut max_i = self.upper_start;
            for i in self.upper_start + 1..self.upper.len() {
                let val = Slope::between(self.upper[i], p2);
                if val.lt(max) {
                    break;
                }
                max = val;
                max_i = i;
            }
            self.rect[0] = self.upper[max_i];
            self.rect[2] = p2;
            self.upper_start = max_i;

            let mut end = self.lower.len();
            while end >= self.lower_start + 2
                && cross(self.lower[end - 2], self.lower[end - 1], p2) >= 0.0
            {
                end -= 1;
            }
            self.lower.truncate(end);
            self.lower.push(p2);
        }

        self.count += 1;
        true
    }

    fn segment(&self) -> Segment {
        let [p0, p1, p2, p3] = self.rect;
        if self.count == 1 {
            return Segment {
                first_key: self.first_x,
                slope: 0.0,
                intercept: (p0.y + p1.y) / 2.0,
            };
        }
        let slope1 = Slope::between(p2, p0);
        let slope2 = Slope::between(p3, p1);
        let (ix, iy) = {
            let a = slope1.dx * slope2.dy - slope1.dy * slope2.dx;
            if a == 0.0 {
                (p0.x, p0.y)
            } else {
                let b = ((p1.x - p0.x) * (p3.y - p1.y) - (p1.y - p0.y) * (p3.x - p1.x)) / a;
                (p0.x + b * slope1.dx, p0.y + b * slope1.dy)
            }
        };
        let (min_slope, max_slope) = (slope1.value(), slope2.value());
        // Every line through the intersection with a slope in
        // [min_slope, max_slope] is feasible; on nondecreasing ranks the max
        // slope is never negative.
        let slope = ((min_slope + max_slope) / 2.0).clamp(min_slope.max(0.0), max_slope.max(0.0));
        Segment {
            first_key: self.first_x,
            slope,
            intercept: iy - ix * slope,
        }
    }
}
