//! Morton (Z-order) keys over a `2^bits`-per-dimension cell grid.
//!
//! Bit `j` of dimension `m` lands at output bit `j * dim + m`, so dimension 0
//! is the least significant bit of each interleaved group.

use crate::error::{Error, Result};

pub type ZValue = u64;

/// Interleaving layout for a fixed dimensionality and per-dimension bit width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZCurve {
    dim: usize,
    bits: u32,
    // Positions owned by each dimension.
    masks: Vec<u64>,
}

impl ZCurve {
    pub fn new(dim: usize, bits: u32) -> Result<Self> {
        if dim == 0 || bits == 0 || dim as u64 * bits as u64 > 64 {
            return Err(Error::InvalidArgument(format!(
                "z-curve needs 1 <= dim * bits <= 64 (dim {dim}, bits {bits})"
            )));
        }
        let masks = (0..dim)
            .map(|m| (0..bits).fold(0u64, |acc, j| acc | 1u64 << (j as usize * dim + m)))
            .collect();
        Ok(Self { dim, bits, masks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn total_bits(&self) -> u32 {
        self.dim as u32 * self.bits
    }

    /// Largest representable Z-value.
    pub fn max_value(&self) -> ZValue {
        low_mask(self.total_bits())
    }

    /// Cells per dimension.
    pub fn side(&self) -> u64 {
        1u64 << self.bits
    }

    /// Interleaves cell coordinates, rejecting out-of-range input.
    pub fn encode(&self, cell: &[u64]) -> Result<ZValue> {
        if cell.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: cell.len(),
            });
        }
        if let Some(&value) = cell.iter().find(|&&c| c >= self.side()) {
            return Err(Error::CoordinateOverflow {
                value,
                bits: self.bits,
            });
        }
        Ok(self.encode_unchecked(cell))
    }

    #[inline]
    pub fn encode_unchecked(&self, cell: &[u64]) -> ZValue {
        let mut z = 0u64;
        for (m, &c) in cell.iter().enumerate() {
            z |= spread(c, self.dim, self.bits) << m;
        }
        z
    }

    pub fn decode(&self, z: ZValue) -> Result<Vec<u64>> {
        if z & !self.max_value() != 0 {
            return Err(Error::InvalidArgument(format!(
                "z-value {z:#x} has bits above position {}",
                self.total_bits()
            )));
        }
        Ok(self.decode_unchecked(z))
    }

    pub fn decode_unchecked(&self, z: ZValue) -> Vec<u64> {
        (0..self.dim)
            .map(|m| compact(z >> m, self.dim, self.bits))
            .collect()
    }

    /// Whether the cell of `z` lies in the box spanned by the cells of
    /// `z_lo` and `z_hi`. Masked bits of one dimension order the same way as
    /// that dimension's coordinate.
    #[inline]
    pub fn in_box(&self, z: ZValue, z_lo: ZValue, z_hi: ZValue) -> bool {
        self.masks
            .iter()
            .all(|&m| (z_lo & m) <= (z & m) && (z & m) <= (z_hi & m))
    }

    /// Smallest Z-value `>= z` whose cell lies in the box `[z_lo, z_hi]`, if any.
    pub fn bigmin(&self, z: ZValue, z_lo: ZValue, z_hi: ZValue) -> Option<ZValue> {
        if z > z_hi {
            return None;
        }
        let mut min = z_lo;
        let mut max = z_hi;
        let mut best = None;
        for p in (0..self.total_bits()).rev() {
            let bit = 1u64 << p;
            let below = self.masks[p as usize % self.dim] & (bit - 1);
            match (z & bit != 0, min & bit != 0, max & bit != 0) {
                (false, false, false) | (true, true, true) => {}
                (false, false, true) => {
                    best = Some((min & !below) | bit);
                    max = (max & !bit) | below;
                }
                (false, true, true) => return Some(min),
                (true, false, false) => return best,
                (true, false, true) => min = (min & !below) | bit,
                // min > max on this dimension: the box is empty here.
                (_, true, false) => return best,
            }
        }
        Some(z)
    }

    /// Sorted, disjoint, maximal Z intervals covering exactly the cells of
    /// the box `[lo_cell, hi_cell]`.
    pub fn decompose_box(&self, lo_cell: &[u64], hi_cell: &[u64]) -> Result<Vec<(ZValue, ZValue)>> {
        let z_lo = self.encode(lo_cell)?;
        let z_hi = self.encode(hi_cell)?;
        if lo_cell.iter().zip(hi_cell).any(|(l, h)| l > h) {
            return Err(Error::InvalidArgument(
                "box lower cell exceeds upper cell".into(),
            ));
        }
        let mut out = Vec::new();
        self.for_each_interval(z_lo, z_hi, |a, b| out.push((a, b)));
        Ok(out)
    }

    /// Streams the intervals of [`decompose_box`](Self::decompose_box) for
    /// corners that are already encoded.
    pub fn for_each_interval(
        &self,
        z_lo: ZValue,
        z_hi: ZValue,
        mut emit: impl FnMut(ZValue, ZValue),
    ) {
        let total = self.total_bits();
        let mut z = z_lo;
        loop {
            let start = z;
            let end = loop {
                // Largest aligned block at z that stays inside the box.
                let mut k = z.trailing_zeros().min(total);
                while k > 0 {
                    let block_end = z | low_mask(k);
                    if block_end <= z_hi && self.in_box(block_end, z_lo, z_hi) {
                        break;
                    }
                    k -= 1;
                }
                let block_end = z | low_mask(k);
                match block_end.checked_add(1) {
                    Some(next) if next <= z_hi && self.in_box(next, z_lo, z_hi) => z = next,
                    _ => break block_end,
                }
            };
            emit(start, end);
            match end
                .checked_add(1)
                .and_then(|next| self.bigmin(next, z_lo, z_hi))
            {
                Some(next) if next <= z_hi => z = next,
                _ => return,
            }
        }
    }
}

#[inline]
fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[inline]
fn spread(v: u64, dim: usize, bits: u32) -> u64 {
    if dim == 2 {
        let mut x = v & 0xFFFF_FFFF;
        x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
        x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
        x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
        x = (x | (x << 2)) & 0x3333_3333_3333_3333;
        return (x | (x << 1)) & 0x5555_5555_5555_5555;
    }
    let mut out = 0;
    for j in 0..bits as usize {
        out |= ((v >> j) & 1) << (j * dim);
    }
    out
}

#[inline]
fn compact(z: u64, dim: usize, bits: u32) -> u64 {
    let mut out = 0;
    for j in 0..bits as usize {
        out |= ((z >> (j * dim)) & 1) << j;
    }
    out
}

/// Checked encode for a one-off cell.
pub fn z_encode(cell: &[u64], bits: u32) -> Result<ZValue> {
    ZCurve::new(cell.len(), bits)?.encode(cell)
}

pub fn z_decode(z: ZValue, dim: usize, bits: u32) -> Result<Vec<u64>> {
    ZCurve::new(dim, bits)?.decode(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bit_convention() {
        assert_eq!(z_encode(&[0, 0], 1).unwrap(), 0);
        assert_eq!(z_encode(&[1, 0], 1).unwrap(), 1);
        assert_eq!(z_encode(&[0, 1], 1).unwrap(), 2);
        assert_eq!(z_encode(&[1, 1], 1).unwrap(), 3);
        assert_eq!(z_decode(3, 2, 1).unwrap(), vec![1, 1]);
        assert_eq!(z_decode(0, 3, 4).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn encode_rejects_overflow_and_decode_rejects_stray_bits() {
        assert!(matches!(
            z_encode(&[4, 0], 2),
            Err(Error::CoordinateOverflow { value: 4, bits: 2 })
        ));
        assert!(z_decode(1 << 8, 2, 4).is_err());
        assert!(ZCurve::new(9, 8).is_err());
    }

    #[test]
    fn exhaustive_roundtrip_16x16() {
        let curve = ZCurve::new(2, 4).unwrap();
        let mut seen = [false; 256];
        for x in 0..16 {
            for y in 0..16 {
                let z = curve.encode(&[x, y]).unwrap();
                assert!(!seen[z as usize]);
                seen[z as usize] = true;
                assert_eq!(curve.decode(z).unwrap(), vec![x, y]);
            }
        }
    }

    #[test]
    fn full_width_curve() {
        let curve = ZCurve::new(2, 32).unwrap();
        let cell = [u32::MAX as u64, 12345];
        assert_eq!(curve.decode(curve.encode(&cell).unwrap()).unwrap(), cell);
        assert_eq!(
            curve
                .decompose_box(&[0, 0], &[u32::MAX as u64, u32::MAX as u64])
                .unwrap(),
            vec![(0, u64::MAX)]
        );
    }

    #[test]
    fn single_cell_and_whole_grid() {
        let curve = ZCurve::new(2, 3).unwrap();
        let z = curve.encode(&[5, 2]).unwrap();
        assert_eq!(curve.decompose_box(&[5, 2], &[5, 2]).unwrap(), vec![(z, z)]);
        assert_eq!(
            curve.decompose_box(&[0, 0], &[7, 7]).unwrap(),
            vec![(0, 63)]
        );
    }

    #[test]
    fn bigmin_simple_cases() {
        let curve = ZCurve::new(2, 3).unwrap();
        let lo = curve.encode(&[2, 2]).unwrap();
        let hi = curve.encode(&[5, 4]).unwrap();
        assert_eq!(curve.bigmin(0, lo, hi), Some(lo));
        assert_eq!(curve.bigmin(hi + 1, lo, hi), None);
    }

    /// All in-box Z-values, by enumerating every cell of the grid.
    fn brute_in_box(curve: &ZCurve, lo: &[u64], hi: &[u64]) -> Vec<ZValue> {
        let mut zs: Vec<ZValue> = (0..=curve.max_value())
            .filter(|&z| {
                let c = curve.decode(z).unwrap();
                c.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (l, h))| l <= v && v <= h)
            })
            .collect();
        zs.sort_unstable();
        zs
    }

    fn all_boxes(dim: usize, side: u64) -> Vec<(Vec<u64>, Vec<u64>)> {
        let mut ranges: Vec<Vec<(u64, u64)>> = vec![vec![]];
        for _ in 0..dim {
            let mut next = Vec::new();
            for prefix in &ranges {
                for l in 0..side {
                    for h in l..side {
                        let mut p = prefix.clone();
                        p.push((l, h));
                        next.push(p);
                    }
                }
            }
            ranges = next;
        }
        ranges
            .into_iter()
            .map(|r| r.iter().copied().unzip())
            .collect()
    }

    fn check_exhaustive(dim: usize, bits: u32) {
        let curve = ZCurve::new(dim, bits).unwrap();
        for (lo, hi) in all_boxes(dim, curve.side()) {
            let expected = brute_in_box(&curve, &lo, &hi);
            let intervals = curve.decompose_box(&lo, &hi).unwrap();
            let flat: Vec<ZValue> = intervals.iter().flat_map(|&(a, b)| a..=b).collect();
            assert_eq!(flat, expected, "box {lo:?}..{hi:?}");
            // Maximal: consecutive intervals never touch.
            assert!(intervals.windows(2).all(|w| w[0].1 + 1 < w[1].0));

            let (z_lo, z_hi) = (curve.encode(&lo).unwrap(), curve.encode(&hi).unwrap());
            for start in 0..=curve.max_value() + 1 {
                let want = expected.iter().copied().find(|&z| z >= start);
                assert_eq!(
                    curve.bigmin(start, z_lo, z_hi),
                    want,
                    "start {start} box {lo:?}..{hi:?}"
                );
            }
        }
    }

    #[test]
    fn exhaustive_8x8() {
        check_exhaustive(2, 3);
    }

    #[test]
    fn exhaustive_4x4x4() {
        check_exhaustive(3, 2);
    }

    proptest! {
        #[test]
        fn roundtrip(d in 1usize..6, bits in 1u32..10, seed in any::<u64>()) {
            let curve = ZCurve::new(d, bits).unwrap();
            let cell: Vec<u64> = (0..d).map(|m| (seed >> (m * 7)) % curve.side()).collect();
            prop_assert_eq!(curve.decode(curve.encode(&cell).unwrap()).unwrap(), cell);
        }

        #[test]
        fn dominance_is_monotone(a in prop::collection::vec(0u64..1024, 3),
                                 bump in prop::collection::vec(0u64..1024, 3)) {
            let curve = ZCurve::new(3, 11).unwrap();
            let b: Vec<u64> = a.iter().zip(&bump).map(|(x, y)| x + y).collect();
            prop_assert!(curve.encode(&b).unwrap() >= curve.encode(&a).unwrap());
        }
    }
}
