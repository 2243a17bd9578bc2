use std::sync::Arc;

use crate::geometry::{CameraIntrinsics, InverseDepthPoint, Pose, Vec2};
use crate::image::Pyramid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostedPoint {
    pub point: InverseDepthPoint,
    /// Unit gradient direction of the host edge pixel.
    pub gradient: Vec2,
    pub active: bool,
    /// Depth is held constant by bundle adjustment.
    pub depth_fixed: bool,
}

impl HostedPoint {
    pub fn new(point: InverseDepthPoint, gradient: Vec2) -> Self {
        Self {
            point,
            gradient,
            active: true,
            depth_fixed: false,
        }
    }
}

/// A frame selected to host landmarks. `pose` maps world to camera.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub id: u64,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
    pub pyramid: Arc<Pyramid>,
    pub points: Vec<HostedPoint>,
    /// Point-to-tangent residual variance of the tracking that created it (px²).
    pub residual_variance: f64,
}

impl Keyframe {
    pub fn new(id: u64, pose: Pose, intrinsics: CameraIntrinsics, pyramid: Arc<Pyramid>) -> Self {
        Self {
            id,
            pose,
            intrinsics,
            pyramid,
            points: Vec::new(),
            residual_variance: 0.0,
        }
    }

    /// Hosts every listed pixel at the given inverse depth; gradient
    /// directions are read from the finest edge map.
    pub fn with_points(mut self, points: impl IntoIterator<Item = InverseDepthPoint>) -> Self {
        let edges = &self.pyramid.finest().edges;
        for p in points {
            let (x, y) = (p.pixel.x.round() as usize, p.pixel.y.round() as usize);
            let g = if x < edges.width && y < edges.height {
                edges.direction(x, y)
            } else {
                Vec2::zeros()
            };
            self.points.push(HostedPoint::new(p, g));
        }
        self
    }

    pub fn active_points(&self) -> impl Iterator<Item = (usize, &HostedPoint)> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.active && p.point.inv_depth > 0.0 && p.point.inv_depth.is_finite())
    }
}

/// Pixel coordinate at pyramid level `level`, for pixel centres at integer
/// coordinates and 2×2 box downsampling.
pub fn pixel_at_level(p: &Vec2, level: usize) -> Vec2 {
    let s = 0.5f64.powi(level as i32);
    Vec2::new((p.x + 0.5) * s - 0.5, (p.y + 0.5) * s - 0.5)
}
