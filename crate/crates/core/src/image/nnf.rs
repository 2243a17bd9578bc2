//! Exact Euclidean distance transform with nearest-pixel labels.
//!
//! Two passes of the 1-D lower-envelope-of-parabolas algorithm (columns,
//! then rows). All arithmetic is on integers and envelope breakpoints are
//! kept as exact rationals, so distances are exact and ties between equally
//! near edge pixels resolve deterministically toward the smaller linear index.

use crate::error::{Error, Result};

/// A rational breakpoint `num / den` with `den > 0`, or ±infinity.
#[derive(Debug, Clone, Copy)]
enum Bound {
    NegInf,
    At(i64, i64),
    PosInf,
}

impl Bound {
    /// `self < x` for an integer `x`.
    fn lt_int(self, x: i64) -> bool {
        match self {
            Bound::NegInf => true,
            Bound::At(n, d) => n < x * d,
            Bound::PosInf => false,
        }
    }

    /// `self <= x` for an integer `x`.
    fn le_int(self, x: i64) -> bool {
        match self {
            Bound::NegInf => true,
            Bound::At(n, d) => n <= x * d,
            Bound::PosInf => false,
        }
    }

    /// `a < self` for a finite rational `a`.
    fn gt_rational(self, n: i64, d: i64) -> bool {
        match self {
            Bound::NegInf => false,
            Bound::At(bn, bd) => n * bd < bn * d,
            Bound::PosInf => true,
        }
    }
}

/// Returns `(labels, distances)` where `labels[p]` is the linear index of the
/// nearest mask pixel to `p`.
pub fn build_nnf(mask: &[bool], width: usize, height: usize) -> Result<(Vec<u32>, Vec<f64>)> {
    if mask.len() != width * height {
        return Err(Error::InvalidParameter(format!(
            "mask of {} entries for {width}x{height}",
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let n = width * height;
    // Column pass: nearest edge row in the same column (ties to the upper row).
    const NONE: i64 = -1;
    let mut col_row = vec![NONE; n];
    for x in 0..width {
        let mut last = NONE;
        for y in 0..height {
            if mask[y * width + x] {
                last = y as i64;
            }
            col_row[y * width + x] = last;
        }
        let mut next = NONE;
        for y in (0..height).rev() {
            if mask[y * width + x] {
                next = y as i64;
            }
            let i = y * width + x;
            let above = col_row[i];
            if next != NONE {
                let take_below = above == NONE || (next - y as i64) < (y as i64 - above);
                if take_below {
                    col_row[i] = next;
                }
            }
        }
    }

    let mut labels = vec![0u32; n];
    let mut dist = vec![0.0; n];
    let mut cols: Vec<i64> = Vec::with_capacity(width);
    let mut z: Vec<Bound> = Vec::with_capacity(width + 1);
    let mut f = vec![0i64; width];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            let r = col_row[row + x];
            f[x] = if r == NONE {
                i64::MAX
            } else {
                (r - y as i64) * (r - y as i64)
            };
        }
        cols.clear();
        z.clear();
        for q in 0..width as i64 {
            let fq = f[q as usize];
            if fq == i64::MAX {
                continue;
            }
            if cols.is_empty() {
                cols.push(q);
                z.push(Bound::NegInf);
                z.push(Bound::PosInf);
                continue;
            }
            loop {
                let p = *cols.last().unwrap();
                let fp = f[p as usize];
                let num = (fq + q * q) - (fp + p * p);
                let den = 2 * (q - p);
                let k = cols.len() - 1;
                // pop only when the old parabola is strictly hidden, keeping
                // zero-width intervals where three parabolas tie
                if z[k].gt_rational(num, den) {
                    cols.pop();
                    z.pop();
                    continue;
                }
                let last = z.len() - 1;
                z[last] = Bound::At(num, den);
                z.push(Bound::PosInf);
                cols.push(q);
                break;
            }
        }
        let mut k = 0usize;
        for x in 0..width as i64 {
            while z[k + 1].lt_int(x) {
                k += 1;
            }
            let mut best_val = i64::MAX;
            let mut best_idx = usize::MAX;
            let mut j = k;
            loop {
                let q = cols[j];
                let val = (x - q) * (x - q) + f[q as usize];
                let idx = col_row[row + q as usize] as usize * width + q as usize;
                if val < best_val || (val == best_val && idx < best_idx) {
                    best_val = val;
                    best_idx = idx;
                }
                if j + 1 < cols.len() && z[j + 1].le_int(x) {
                    j += 1;
                } else {
                    break;
                }
            }
            labels[row + x as usize] = best_idx as u32;
            dist[row + x as usize] = (best_val as f64).sqrt();
        }
    }
    Ok((labels, dist))
}
