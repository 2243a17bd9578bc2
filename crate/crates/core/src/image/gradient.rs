use super::GrayImage;
use crate::error::{Error, Result};

/// Per-pixel image derivatives in intensity per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

/// 3×3 Sobel derivatives normalised by 1/8 (so a unit ramp yields a unit
/// derivative), with replicated borders.
pub fn compute_gradients(image: &GrayImage) -> Result<GradientField> {
    let (w, h) = (image.width, image.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let n = w * h;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut magnitude = vec![0.0; n];
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        let (rm, r0, rp) = (ym * w, y * w, yp * w);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let d = &image.data;
            let dx = (d[rm + xp] - d[rm + xm])
                + 2.0 * (d[r0 + xp] - d[r0 + xm])
                + (d[rp + xp] - d[rp + xm]);
            let dy = (d[rp + xm] - d[rm + xm])
                + 2.0 * (d[rp + x] - d[rm + x])
                + (d[rp + xp] - d[rm + xp]);
            let i = r0 + x;
            gx[i] = dx * 0.125;
            gy[i] = dy * 0.125;
            magnitude[i] = gx[i].hypot(gy[i]);
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    })
}
