//! Grayscale images, gradients, edges, nearest-edge fields and pyramids.

mod canny;
mod gradient;
mod nnf;
mod pyramid;

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub use canny::{canny_edges, CannyDetector, CannyParams, EdgeDetector, EdgeMask, ExternalMaskDetector};
pub use gradient::{compute_gradients, GradientField};
pub use nnf::build_nnf;
pub use pyramid::{build_pyramid, build_pyramid_with, downsample, Pyramid, PyramidLevel};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Row-major grayscale image with intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "buffer of {} values for a {width}x{height} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite intensity".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel access with replicated borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn bilinear(&self, p: &Vec2) -> Option<f64> {
        bilinear(&self.data, self.width, self.height, p)
    }
}

/// Bilinear interpolation of a row-major scalar field; `None` outside
/// `[0, w-1] × [0, h-1]`.
#[inline]
pub fn bilinear(data: &[f64], width: usize, height: usize, p: &Vec2) -> Option<f64> {
    if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= (width - 1) as f64 && p.y <= (height - 1) as f64) {
        return None;
    }
    let x0 = (p.x.floor() as usize).min(width.saturating_sub(2));
    let y0 = (p.y.floor() as usize).min(height.saturating_sub(2));
    let ax = p.x - x0 as f64;
    let ay = p.y - y0 as f64;
    let i = y0 * width + x0;
    let (v00, v01) = (data[i], data[i + 1]);
    let (v10, v11) = (data[i + width], data[i + width + 1]);
    Some((1.0 - ay) * ((1.0 - ax) * v00 + ax * v01) + ay * ((1.0 - ax) * v10 + ax * v11))
}

/// Reads a binary (P5) PGM, scaling intensities to `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::Parse(format!("{}: truncated PGM header", path.display())));
        }
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    if tokens[0] != "P5" {
        return Err(Error::Parse(format!("{}: not a binary PGM", path.display())));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("{}: bad header field {s:?}", path.display())))
    };
    let (width, height, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("{}: bad maxval {maxval}", path.display())));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let mut raw = vec![0u8; width * height * bytes_per];
    reader
        .read_exact(&mut raw)
        .map_err(|e| Error::io(path, e))?;
    let scale = 1.0 / maxval as f64;
    let data = if bytes_per == 1 {
        raw.iter().map(|&b| b as f64 * scale).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    GrayImage::from_vec(width, height, data)
}

/// Writes an 8-bit binary PGM, clamping to `[0, 1]`.
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(image.data.len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.width, image.height).expect("write to vec");
    out.extend(
        image
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Binary edge mask together with per-edge-pixel gradient directions and
/// the exact nearest-edge field.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    /// Unit gradient direction on edge pixels, zero elsewhere.
    pub gradient_dir: Vec<Vec2>,
    /// Linear index of the nearest edge pixel.
    pub nnf: Vec<u32>,
    /// Euclidean distance to the nearest edge pixel.
    pub dist: Vec<f64>,
    /// Sub-pixel location of each edge pixel.
    pub subpixel: Vec<Vec2>,
}

impl EdgeMap {
    /// Attaches the nearest-edge field to a mask.
    /// An empty mask yields an empty field (infinite distances, no labels).
    pub fn new(width: usize, height: usize, mask: Vec<bool>, gradient_dir: Vec<Vec2>) -> Result<Self> {
        let (nnf, dist) = match build_nnf(&mask, width, height) {
            Ok(field) => field,
            Err(Error::EmptyMask) => (vec![u32::MAX; width * height], vec![f64::INFINITY; width * height]),
            Err(e) => return Err(e),
        };
        Ok(Self {
            width,
            height,
            mask,
            gradient_dir,
            nnf,
            dist,
            subpixel: (0..width * height)
                .map(|i| Vec2::new((i % width) as f64, (i / width) as f64))
                .collect(),
        })
    }

    pub fn edge_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    #[inline]
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    /// Nearest edge pixel to a continuous location (looked up at the
    /// rounded pixel); `None` outside the image.
    pub fn nearest(&self, p: &Vec2) -> Option<(usize, usize)> {
        let x = p.x.round();
        let y = p.y.round();
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            return None;
        }
        let idx = self.nnf[y as usize * self.width + x as usize];
        if idx == u32::MAX {
            return None;
        }
        let idx = idx as usize;
        Some((idx % self.width, idx / self.width))
    }

    pub fn direction(&self, x: usize, y: usize) -> Vec2 {
        self.gradient_dir[y * self.width + x]
    }

    pub fn subpixel_at(&self, x: usize, y: usize) -> Vec2 {
        self.subpixel[y * self.width + x]
    }

    /// Edge pixel coordinates in raster order.
    pub fn edge_pixels(&self) -> Vec<(usize, usize)> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }
}
