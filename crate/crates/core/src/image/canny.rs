use std::collections::VecDeque;

use super::{compute_gradients, EdgeMap, GradientField, GrayImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Hysteresis thresholds as fractions of the maximum gradient magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannyParams {
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 0.1,
            high: 0.2,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if self.low > 0.0 && self.low < self.high && self.high <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "canny thresholds must satisfy 0 < low < high <= 1, got {self:?}"
            )))
        }
    }
}

/// Edge mask with gradient directions, before the nearest-edge field is built.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMask {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub gradient_dir: Vec<Vec2>,
    /// Sub-pixel edge location of each edge pixel (its own coordinates elsewhere).
    pub subpixel: Vec<Vec2>,
}

/// Source of edge masks for each pyramid level.
pub trait EdgeDetector: Send + Sync {
    fn detect(&self, image: &GrayImage, level: usize) -> Result<EdgeMask>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CannyDetector {
    pub params: CannyParams,
}

impl EdgeDetector for CannyDetector {
    fn detect(&self, image: &GrayImage, _level: usize) -> Result<EdgeMask> {
        canny_edges(image, self.params)
    }
}

/// Externally supplied level-0 mask (e.g. from a learned detector).
/// Coarser levels are OR-pooled; directions come from the smoothed image.
#[derive(Debug, Clone)]
pub struct ExternalMaskDetector {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

impl EdgeDetector for ExternalMaskDetector {
    fn detect(&self, image: &GrayImage, level: usize) -> Result<EdgeMask> {
        let (mut w, mut h, mut mask) = (self.width, self.height, self.mask.clone());
        for _ in 0..level {
            let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
            let mut next = vec![false; nw * nh];
            for y in 0..h {
                for x in 0..w {
                    if mask[y * w + x] {
                        next[(y / 2) * nw + x / 2] = true;
                    }
                }
            }
            (w, h, mask) = (nw, nh, next);
        }
        if (w, h) != (image.width, image.height) {
            return Err(Error::InvalidParameter(format!(
                "external mask {w}x{h} does not match image {}x{}",
                image.width, image.height
            )));
        }
        let grad = compute_gradients(&gaussian_blur(image))?;
        let gradient_dir = directions(&grad, &mask);
        let subpixel = subpixel_positions(&grad, &mask, &gradient_dir);
        Ok(EdgeMask {
            width: w,
            height: h,
            mask,
            gradient_dir,
            subpixel,
        })
    }
}

fn gaussian_kernel() -> [f64; 5] {
    let sigma: f64 = 1.4;
    let mut k = [0.0; 5];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - 2.0;
        *v = (-x * x / (2.0 * sigma * sigma)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable 5×5 Gaussian (σ = 1.4) with replicated borders.
pub(crate) fn gaussian_blur(image: &GrayImage) -> GrayImage {
    let k = gaussian_kernel();
    let (w, h) = (image.width, image.height);
    let mut tmp = GrayImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                s += kv * image.get_clamped(x as isize + i as isize - 2, y as isize);
            }
            tmp.set(x, y, s);
        }
    }
    let mut out = GrayImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                s += kv * tmp.get_clamped(x as isize, y as isize + i as isize - 2);
            }
            out.set(x, y, s);
        }
    }
    out
}

fn directions(grad: &GradientField, mask: &[bool]) -> Vec<Vec2> {
    mask.iter()
        .enumerate()
        .map(|(i, &m)| {
            let mag = grad.magnitude[i];
            if m && mag > 0.0 {
                Vec2::new(grad.gx[i] / mag, grad.gy[i] / mag)
            } else if m {
                Vec2::new(1.0, 0.0)
            } else {
                Vec2::zeros()
            }
        })
        .collect()
}

/// Peak of a parabola through the gradient magnitude one pixel behind, at
/// and one pixel ahead of each edge pixel along its gradient direction.
fn subpixel_positions(grad: &GradientField, mask: &[bool], dirs: &[Vec2]) -> Vec<Vec2> {
    let (w, h) = (grad.width, grad.height);
    (0..w * h)
        .map(|i| {
            let p = Vec2::new((i % w) as f64, (i / w) as f64);
            if !mask[i] {
                return p;
            }
            let g = dirs[i];
            let m0 = grad.magnitude[i];
            let (Some(mm), Some(mp)) = (
                super::bilinear(&grad.magnitude, w, h, &(p - g)),
                super::bilinear(&grad.magnitude, w, h, &(p + g)),
            ) else {
                return p;
            };
            let curvature = mm - 2.0 * m0 + mp;
            if curvature >= 0.0 {
                return p;
            }
            let offset = (0.5 * (mm - mp) / curvature).clamp(-0.5, 0.5);
            p + g * offset
        })
        .collect()
}

/// Neighbour offsets along the quantised gradient direction.
fn nms_offsets(gx: f64, gy: f64) -> (isize, isize) {
    // angle folded to [0, 180)
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Canny edge detector: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression along the quantised gradient direction and 8-connected
/// double-threshold hysteresis.
pub fn canny_edges(image: &GrayImage, params: CannyParams) -> Result<EdgeMask> {
    params.validate()?;
    let smoothed = gaussian_blur(image);
    let grad = compute_gradients(&smoothed)?;
    let (w, h) = (image.width, image.height);
    let max_mag = grad.magnitude.iter().cloned().fold(0.0, f64::max);
    let mut mask = vec![false; w * h];
    if max_mag <= 1e-12 {
        return Ok(EdgeMask {
            width: w,
            height: h,
            mask,
            gradient_dir: vec![Vec2::zeros(); w * h],
            subpixel: (0..w * h).map(|i| Vec2::new((i % w) as f64, (i / w) as f64)).collect(),
        });
    }
    let low = params.low * max_mag;
    let high = params.high * max_mag;

    // 0 = suppressed, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = grad.magnitude[i];
            if m < low {
                continue;
            }
            let (dx, dy) = nms_offsets(grad.gx[i], grad.gy[i]);
            let fwd = grad.magnitude[((y as isize + dy) as usize) * w + (x as isize + dx) as usize];
            let bwd = grad.magnitude[((y as isize - dy) as usize) * w + (x as isize - dx) as usize];
            // strict on one side so plateaus of width two keep one pixel
            if m > bwd && m >= fwd {
                class[i] = if m >= high { 2 } else { 1 };
            }
        }
    }

    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &c) in class.iter().enumerate() {
        if c == 2 {
            mask[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 && !mask[j] {
                    mask[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }

    let gradient_dir = directions(&grad, &mask);
    let subpixel = subpixel_positions(&grad, &mask, &gradient_dir);
    Ok(EdgeMask {
        width: w,
        height: h,
        mask,
        gradient_dir,
        subpixel,
    })
}

impl EdgeMap {
    pub fn from_mask(mask: EdgeMask) -> Result<Self> {
        let mut map = EdgeMap::new(mask.width, mask.height, mask.mask, mask.gradient_dir)?;
        map.subpixel = mask.subpixel;
        Ok(map)
    }
}
