use super::{compute_gradients, CannyDetector, CannyParams, EdgeDetector, EdgeMap, GradientField, GrayImage};
use crate::error::{Error, Result};

/// Smallest side allowed at the coarsest pyramid level.
pub const MIN_LEVEL_SIZE: usize = 16;

#[derive(Debug, Clone)]
pub struct PyramidLevel {
    pub image: GrayImage,
    pub gradients: GradientField,
    pub edges: EdgeMap,
}

/// Coarse-to-fine image pyramid; level 0 is full resolution.
#[derive(Debug, Clone)]
pub struct Pyramid {
    pub levels: Vec<PyramidLevel>,
}

impl Pyramid {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &PyramidLevel {
        &self.levels[0]
    }
}

/// 2×2 box-filter downsampling to `ceil(w/2) × ceil(h/2)`, replicating the
/// last row/column for odd sizes.
pub fn downsample(image: &GrayImage) -> GrayImage {
    let (w, h) = (image.width.div_ceil(2), image.height.div_ceil(2));
    GrayImage::from_fn(w, h, |x, y| {
        let (x0, y0) = (2 * x as isize, 2 * y as isize);
        0.25 * (image.get_clamped(x0, y0)
            + image.get_clamped(x0 + 1, y0)
            + image.get_clamped(x0, y0 + 1)
            + image.get_clamped(x0 + 1, y0 + 1))
    })
}

pub fn build_pyramid(image: &GrayImage, n_levels: usize, canny: CannyParams) -> Result<Pyramid> {
    build_pyramid_with(image, n_levels, &CannyDetector { params: canny })
}

pub fn build_pyramid_with(
    image: &GrayImage,
    n_levels: usize,
    detector: &dyn EdgeDetector,
) -> Result<Pyramid> {
    if n_levels == 0 {
        return Err(Error::InvalidParameter("pyramid needs at least one level".into()));
    }
    let (mut cw, mut ch) = (image.width, image.height);
    for _ in 1..n_levels {
        cw = cw.div_ceil(2);
        ch = ch.div_ceil(2);
    }
    if cw < MIN_LEVEL_SIZE || ch < MIN_LEVEL_SIZE {
        return Err(Error::InvalidParameter(format!(
            "{n_levels} levels leave a {cw}x{ch} coarsest level (minimum {MIN_LEVEL_SIZE})"
        )));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut current = image.clone();
    for level in 0..n_levels {
        if level > 0 {
            current = downsample(&current);
        }
        let gradients = compute_gradients(&current)?;
        let edges = EdgeMap::from_mask(detector.detect(&current, level)?)?;
        levels.push(PyramidLevel {
            image: current.clone(),
            gradients,
            edges,
        });
    }
    Ok(Pyramid { levels })
}
