//! Synthetic edge-rich scenes rendered by ray casting textured planar quads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, InverseDepthPoint, Mat3, Pose, Vec2, Vec3};
use crate::image::GrayImage;

/// Albedo primitive in quad texture coordinates (metres from the quad origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Rect {
        center: Vec2,
        half: Vec2,
        angle: f64,
        albedo: f64,
    },
    Disc {
        center: Vec2,
        radius: f64,
        albedo: f64,
    },
}

impl Primitive {
    /// Radius of a disc around the centre containing the primitive.
    fn bound(&self) -> (Vec2, f64) {
        match *self {
            Primitive::Rect { center, half, .. } => (center, half.norm()),
            Primitive::Disc { center, radius, .. } => (center, radius),
        }
    }

    fn covers(&self, uv: &Vec2) -> Option<f64> {
        match *self {
            Primitive::Rect {
                center,
                half,
                angle,
                albedo,
            } => {
                let d = uv - center;
                let (s, c) = angle.sin_cos();
                let local = Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y);
                (local.x.abs() <= half.x && local.y.abs() <= half.y).then_some(albedo)
            }
            Primitive::Disc {
                center,
                radius,
                albedo,
            } => ((uv - center).norm() <= radius).then_some(albedo),
        }
    }
}

/// Rectangle `origin + a·u + b·v`, `a, b ∈ [0, 1]`, with `u ⊥ v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturedQuad {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub albedo: f64,
    /// Later primitives paint over earlier ones.
    pub primitives: Vec<Primitive>,
}

impl TexturedQuad {
    pub fn new(origin: Vec3, u: Vec3, v: Vec3, albedo: f64) -> Result<Self> {
        if u.norm() == 0.0 || v.norm() == 0.0 || u.dot(&v).abs() > 1e-9 * u.norm() * v.norm() {
            return Err(Error::InvalidParameter("quad edges must be nonzero and orthogonal".into()));
        }
        Ok(Self {
            origin,
            u,
            v,
            albedo,
            primitives: Vec::new(),
        })
    }

    pub fn normal(&self) -> Vec3 {
        self.u.cross(&self.v).normalize()
    }

    /// Ray parameter and texture coordinate of the hit, if any.
    fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Vec2)> {
        let n = self.u.cross(&self.v);
        let denom = n.dot(dir);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = n.dot(&(self.origin - origin)) / denom;
        if t <= 0.0 {
            return None;
        }
        let rel = origin + dir * t - self.origin;
        let (lu, lv) = (self.u.norm_squared(), self.v.norm_squared());
        let a = rel.dot(&self.u) / lu;
        let b = rel.dot(&self.v) / lv;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return None;
        }
        Some((t, Vec2::new(a * lu.sqrt(), b * lv.sqrt())))
    }

    fn albedo_at(&self, uv: &Vec2) -> f64 {
        self.primitives
            .iter()
            .rev()
            .find_map(|p| p.covers(uv))
            .unwrap_or(self.albedo)
    }
}

/// Uniform grid over a quad's texture listing, per cell, the primitives
/// that may cover it in painting order.
struct PrimitiveGrid {
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl PrimitiveGrid {
    const CELL: f64 = 0.25;

    fn new(q: &TexturedQuad) -> Self {
        let cell = Self::CELL;
        let nx = (q.u.norm() / cell).ceil().max(1.0) as usize;
        let ny = (q.v.norm() / cell).ceil().max(1.0) as usize;
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, p) in q.primitives.iter().enumerate() {
            let (c, r) = p.bound();
            let span = |lo: f64, hi: f64, n: usize| {
                let a = ((lo / cell).floor().max(0.0) as usize).min(n - 1);
                let b = ((hi / cell).floor().max(0.0) as usize).min(n - 1);
                a..=b
            };
            if c.x + r < 0.0 || c.y + r < 0.0 {
                continue;
            }
            for y in span(c.y - r, c.y + r, ny) {
                for x in span(c.x - r, c.x + r, nx) {
                    cells[y * nx + x].push(i as u32);
                }
            }
        }
        Self { cell, nx, ny, cells }
    }

    fn albedo_at(&self, q: &TexturedQuad, uv: &Vec2) -> f64 {
        let x = ((uv.x / self.cell) as usize).min(self.nx - 1);
        let y = ((uv.y / self.cell) as usize).min(self.ny - 1);
        self.cells[y * self.nx + x]
            .iter()
            .rev()
            .find_map(|&i| q.primitives[i as usize].covers(uv))
            .unwrap_or(q.albedo)
    }
}

/// Quad constants hoisted out of the intersection test.
struct QuadFrame {
    origin: Vec3,
    normal: Vec3,
    /// `u / |u|²` and `v / |v|²`.
    u_dual: Vec3,
    v_dual: Vec3,
    size: Vec2,
}

impl QuadFrame {
    fn new(q: &TexturedQuad) -> Self {
        Self {
            origin: q.origin,
            normal: q.u.cross(&q.v),
            u_dual: q.u / q.u.norm_squared(),
            v_dual: q.v / q.v.norm_squared(),
            size: Vec2::new(q.u.norm(), q.v.norm()),
        }
    }

    #[inline]
    fn intersect(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<(f64, Vec2)> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = self.normal.dot(&(self.origin - origin)) / denom;
        if t <= 0.0 || t >= t_max {
            return None;
        }
        let rel = origin + dir * t - self.origin;
        let a = rel.dot(&self.u_dual);
        let b = rel.dot(&self.v_dual);
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return None;
        }
        Some((t, Vec2::new(a * self.size.x, b * self.size.y)))
    }
}

/// A scene with per-quad primitive grids for repeated casting.
struct PreparedScene<'a> {
    scene: &'a SyntheticScene,
    frames: Vec<QuadFrame>,
    grids: Vec<PrimitiveGrid>,
}

impl<'a> PreparedScene<'a> {
    fn new(scene: &'a SyntheticScene) -> Self {
        Self {
            scene,
            frames: scene.quads.iter().map(QuadFrame::new).collect(),
            grids: scene.quads.iter().map(PrimitiveGrid::new).collect(),
        }
    }

    fn hit(&self, origin: &Vec3, dir: &Vec3) -> Option<(usize, f64, Vec2)> {
        let mut best: Option<(usize, f64, Vec2)> = None;
        for (i, f) in self.frames.iter().enumerate() {
            let t_max = best.map_or(f64::INFINITY, |b| b.1);
            if let Some((t, uv)) = f.intersect(origin, dir, t_max) {
                best = Some((i, t, uv));
            }
        }
        best
    }

    fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let (i, t, uv) = self.hit(origin, dir)?;
        Some((t, self.grids[i].albedo_at(&self.scene.quads[i], &uv)))
    }
}

fn nearest_hit(quads: &[TexturedQuad], origin: &Vec3, dir: &Vec3) -> Option<(usize, f64, Vec2)> {
    let mut best: Option<(usize, f64, Vec2)> = None;
    for (i, q) in quads.iter().enumerate() {
        if let Some((t, uv)) = q.intersect(origin, dir) {
            if best.is_none_or(|(_, bt, _)| t < bt) {
                best = Some((i, t, uv));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub quads: Vec<TexturedQuad>,
    /// Axis-aligned solid boxes (min, max) the camera must stay outside of.
    pub solids: Vec<(Vec3, Vec3)>,
    pub background: f64,
}

impl SyntheticScene {
    pub fn new(background: f64) -> Self {
        Self {
            quads: Vec::new(),
            solids: Vec::new(),
            background,
        }
    }

    /// Adds an axis-aligned box as six quads with per-face albedos.
    pub fn add_box(&mut self, min: Vec3, max: Vec3, albedos: [f64; 6]) -> Result<()> {
        let d = max - min;
        let (ex, ey, ez) = (Vec3::new(d.x, 0.0, 0.0), Vec3::new(0.0, d.y, 0.0), Vec3::new(0.0, 0.0, d.z));
        let faces = [
            (min, ey, ez),
            (min + ex, ey, ez),
            (min, ex, ez),
            (min + ey, ex, ez),
            (min, ex, ey),
            (min + ez, ex, ey),
        ];
        for ((o, u, v), a) in faces.into_iter().zip(albedos) {
            self.quads.push(TexturedQuad::new(o, u, v, a)?);
        }
        self.solids.push((min, max));
        Ok(())
    }

    /// Nearest hit along a world ray: (distance parameter, albedo).
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let (i, t, uv) = nearest_hit(&self.quads, origin, dir)?;
        Some((t, self.quads[i].albedo_at(&uv)))
    }

    fn check_camera(&self, frame: usize, center: &Vec3) -> Result<()> {
        let inside_solid = self.solids.iter().any(|(lo, hi)| {
            (0..3).all(|i| center[i] > lo[i] - 1e-6 && center[i] < hi[i] + 1e-6)
        });
        let on_quad = self.quads.iter().any(|q| {
            let rel = center - q.origin;
            let a = rel.dot(&q.u) / q.u.norm_squared();
            let b = rel.dot(&q.v) / q.v.norm_squared();
            rel.dot(&q.normal()).abs() < 1e-6 && (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
        });
        if inside_solid || on_quad {
            Err(Error::CameraInsideGeometry(frame))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Glare {
    /// Image position in pixels.
    pub center: Vec2,
    pub radius: f64,
    pub intensity: f64,
}

/// Per-frame photometric disturbance applied after shading:
/// `I' = gain·I + bias + glare`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Illumination {
    pub gain: f64,
    pub bias: f64,
    pub glare: Option<Glare>,
}

impl Default for Illumination {
    fn default() -> Self {
        Self {
            gain: 1.0,
            bias: 0.0,
            glare: None,
        }
    }
}

/// Gain drawn uniformly from `1 ± gain_jitter`; a glare blob sweeps across
/// the image once over the sequence.
pub fn illumination_schedule(frames: usize, gain_jitter: f64, glare_intensity: f64, k: &CameraIntrinsics, seed: u64) -> Vec<Illumination> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..frames)
        .map(|i| {
            let s = if frames > 1 { i as f64 / (frames - 1) as f64 } else { 0.0 };
            let gain = if gain_jitter > 0.0 {
                1.0 + rng.random_range(-gain_jitter..=gain_jitter)
            } else {
                1.0
            };
            let glare = (glare_intensity > 0.0).then(|| Glare {
                center: Vec2::new(k.width as f64 * (0.15 + 0.7 * s), k.height as f64 * (0.3 + 0.2 * (6.0 * s).sin())),
                radius: k.width as f64 * 0.15,
                intensity: glare_intensity,
            });
            Illumination { gain, bias: 0.0, glare }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSettings {
    pub noise_sigma: f64,
    pub seed: u64,
    /// Samples per pixel along each axis.
    pub supersampling: usize,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            seed: 0,
            supersampling: 2,
        }
    }
}

/// Rendered frames with exact ground truth.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<GrayImage>,
    /// Per-pixel depth along the optical axis; infinite where nothing is hit.
    pub depths: Vec<Vec<f64>>,
    /// World → camera.
    pub poses: Vec<Pose>,
    pub timestamps: Vec<f64>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn depth_at(&self, frame: usize, x: usize, y: usize) -> f64 {
        self.depths[frame][y * self.intrinsics.width + x]
    }

    /// Inverse depth at a sub-pixel location; see [`inverse_depth_at`].
    pub fn inv_depth_at(&self, frame: usize, p: &Vec2) -> Option<f64> {
        inverse_depth_at(&self.depths[frame], self.intrinsics.width, self.intrinsics.height, p)
    }

    /// Ground-truth location in frame `b` of pixel `(x, y)` of frame `a`.
    pub fn correspondence(&self, a: usize, b: usize, x: usize, y: usize) -> Option<Vec2> {
        let z = self.depth_at(a, x, y);
        if !z.is_finite() {
            return None;
        }
        let rel = self.poses[b].compose(&self.poses[a].inverse());
        let pt = InverseDepthPoint::new(Vec2::new(x as f64, y as f64), 1.0 / z, 0.0);
        let pr = crate::geometry::project(&pt, &self.intrinsics, &rel);
        pr.valid.then_some(pr.pixel)
    }

    pub fn subsample(&self, rate: usize) -> Result<Sequence> {
        subsample(self, rate)
    }
}

/// Inverse depth of a depth map at a sub-pixel location. Bilinear when the
/// four surrounding pixels lie on one surface (inverse depth is affine in
/// the pixel on a plane), otherwise the nearest foreground value.
pub fn inverse_depth_at(depth: &[f64], width: usize, height: usize, p: &Vec2) -> Option<f64> {
    if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= (width - 1) as f64 && p.y <= (height - 1) as f64) {
        return None;
    }
    let (x0, y0) = (p.x.floor() as usize, p.y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(width - 1), (y0 + 1).min(height - 1));
    let (fx, fy) = (p.x - x0 as f64, p.y - y0 as f64);
    let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
    let inv = corners.map(|(x, y)| 1.0 / depth[y * width + x]);
    let hi = inv.iter().cloned().fold(0.0, f64::max);
    let lo = inv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(hi > 0.0 && hi.is_finite()) {
        return None;
    }
    if lo > 0.98 * hi {
        let top = inv[0] * (1.0 - fx) + inv[1] * fx;
        let bottom = inv[2] * (1.0 - fx) + inv[3] * fx;
        return Some(top * (1.0 - fy) + bottom * fy);
    }
    corners
        .iter()
        .zip(inv)
        .filter(|(_, d)| *d > 0.5 * hi)
        .map(|(&(x, y), d)| ((Vec2::new(x as f64, y as f64) - p).norm(), d))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, d)| d)
}

/// Renders every pose of a trajectory.
pub fn render_sequence(
    scene: &SyntheticScene,
    poses: &[Pose],
    k: &CameraIntrinsics,
    illumination: &[Illumination],
    settings: &RenderSettings,
) -> Result<Sequence> {
    k.validate()?;
    if !illumination.is_empty() && illumination.len() != poses.len() {
        return Err(Error::LengthMismatch(illumination.len(), poses.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let normal = Normal::new(0.0, settings.noise_sigma.max(0.0))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let ss = settings.supersampling.max(1);
    let prepared = PreparedScene::new(scene);
    let mut frames = Vec::with_capacity(poses.len());
    let mut depths = Vec::with_capacity(poses.len());
    for (i, pose) in poses.iter().enumerate() {
        let center = pose.center();
        scene.check_camera(i, &center)?;
        let rt: Mat3 = pose.rotation.transpose();
        let mut image = GrayImage::new(k.width, k.height);
        let mut depth = vec![f64::INFINITY; k.width * k.height];
        let light = illumination.get(i).copied().unwrap_or_default();
        for y in 0..k.height {
            for x in 0..k.width {
                let mut acc = 0.0;
                for sy in 0..ss {
                    for sx in 0..ss {
                        let px = Vec2::new(
                            x as f64 + (sx as f64 + 0.5) / ss as f64 - 0.5,
                            y as f64 + (sy as f64 + 0.5) / ss as f64 - 0.5,
                        );
                        let dir = rt * k.bearing(&px);
                        acc += prepared.cast(&center, &dir).map_or(scene.background, |(_, a)| a);
                    }
                }
                let albedo = acc / (ss * ss) as f64;
                // bearing has unit z, so the ray parameter is the depth
                let dir = rt * k.bearing(&Vec2::new(x as f64, y as f64));
                if let Some((_, t, _)) = prepared.hit(&center, &dir) {
                    depth[y * k.width + x] = t;
                }
                let mut v = light.gain * albedo + light.bias;
                if let Some(g) = light.glare {
                    let r2 = (x as f64 - g.center.x).powi(2) + (y as f64 - g.center.y).powi(2);
                    v += g.intensity * (-r2 / (2.0 * g.radius * g.radius)).exp();
                }
                if settings.noise_sigma > 0.0 {
                    v += normal.sample(&mut rng);
                }
                image.set(x, y, v.clamp(0.0, 1.0));
            }
        }
        frames.push(image);
        depths.push(depth);
    }
    Ok(Sequence {
        intrinsics: *k,
        frames,
        depths,
        poses: poses.to_vec(),
        timestamps: (0..poses.len()).map(|i| i as f64 * 0.1).collect(),
    })
}

/// Keeps every `rate`-th frame.
pub fn subsample(seq: &Sequence, rate: usize) -> Result<Sequence> {
    if rate == 0 {
        return Err(Error::InvalidParameter("subsample rate must be at least 1".into()));
    }
    fn pick<T: Clone>(v: &[T], rate: usize) -> Vec<T> {
        v.iter().step_by(rate).cloned().collect()
    }
    Ok(Sequence {
        intrinsics: seq.intrinsics,
        frames: pick(&seq.frames, rate),
        depths: pick(&seq.depths, rate),
        poses: pick(&seq.poses, rate),
        timestamps: pick(&seq.timestamps, rate),
    })
}

/// World → camera pose of a camera at `center` with yaw (about +y) and
/// pitch (about +x). Camera axes: x right, y down, z forward.
pub fn camera_pose(center: Vec3, yaw: f64, pitch: f64) -> Pose {
    let ry = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), yaw);
    let rx = nalgebra::Rotation3::from_axis_angle(&Vec3::x_axis(), pitch);
    let r_wc = (ry * rx).into_inner();
    let r_cw = r_wc.transpose();
    Pose::new(r_cw, -(r_cw * center))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Forward motion down a corridor of textured walls with boxes.
    Corridor,
    /// A wall of horizontal stripes with a few short vertical bars, camera
    /// translating horizontally (baseline parallel to most edges).
    FlatEdges,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corridor" => Ok(Preset::Corridor),
            "flat_edges" | "flat-edges" => Ok(Preset::FlatEdges),
            _ => Err(Error::Parse(format!("unknown preset {s:?}"))),
        }
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Corridor => "corridor",
            Preset::FlatEdges => "flat_edges",
        }
    }
}

pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 260.0,
        fy: 260.0,
        cx: 159.5,
        cy: 119.5,
        width: 320,
        height: 240,
    }
}

fn scatter_primitives(rng: &mut ChaCha8Rng, size: Vec2, count: usize, base: f64) -> Vec<Primitive> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let center = Vec2::new(rng.random_range(0.0..size.x), rng.random_range(0.0..size.y));
        // keep strong contrast against the base
        let albedo = if base > 0.5 {
            rng.random_range(0.05..0.35)
        } else {
            rng.random_range(0.65..0.95)
        };
        if rng.random_bool(0.3) {
            out.push(Primitive::Disc {
                center,
                radius: rng.random_range(0.08..0.25),
                albedo,
            });
        } else {
            out.push(Primitive::Rect {
                center,
                half: Vec2::new(rng.random_range(0.06..0.3), rng.random_range(0.06..0.3)),
                angle: rng.random_range(0.0..std::f64::consts::PI),
                albedo,
            });
        }
    }
    out
}

fn corridor_scene() -> Result<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut scene = SyntheticScene::new(0.5);
    let (half_w, half_h, z0, z1) = (1.2, 0.9, -1.0, 9.0);
    let len = z1 - z0;
    let walls = [
        // left, right (u along z, v along y)
        (Vec3::new(-half_w, -half_h, z0), Vec3::new(0.0, 0.0, len), Vec3::new(0.0, 2.0 * half_h, 0.0), 0.75),
        (Vec3::new(half_w, -half_h, z0), Vec3::new(0.0, 0.0, len), Vec3::new(0.0, 2.0 * half_h, 0.0), 0.3),
        // floor, ceiling (u along z, v along x)
        (Vec3::new(-half_w, half_h, z0), Vec3::new(0.0, 0.0, len), Vec3::new(2.0 * half_w, 0.0, 0.0), 0.25),
        (Vec3::new(-half_w, -half_h, z0), Vec3::new(0.0, 0.0, len), Vec3::new(2.0 * half_w, 0.0, 0.0), 0.8),
        // far wall
        (Vec3::new(-half_w, -half_h, z1), Vec3::new(2.0 * half_w, 0.0, 0.0), Vec3::new(0.0, 2.0 * half_h, 0.0), 0.6),
    ];
    for (o, u, v, a) in walls {
        let mut q = TexturedQuad::new(o, u, v, a)?;
        let size = Vec2::new(u.norm(), v.norm());
        let count = (size.x * size.y * 9.0) as usize;
        q.primitives = scatter_primitives(&mut rng, size, count, a);
        scene.quads.push(q);
    }
    scene.add_box(Vec3::new(0.35, 0.35, 5.0), Vec3::new(0.85, 0.9, 5.6), [0.1, 0.15, 0.9, 0.2, 0.95, 0.05])?;
    scene.add_box(Vec3::new(-0.9, 0.5, 6.5), Vec3::new(-0.4, 0.9, 7.1), [0.9, 0.85, 0.1, 0.95, 0.15, 0.9])?;
    scene.add_box(Vec3::new(-0.3, -0.9, 7.5), Vec3::new(0.3, -0.5, 8.0), [0.1, 0.15, 0.05, 0.2, 0.1, 0.2])?;
    Ok(scene)
}

fn flat_edges_scene() -> Result<SyntheticScene> {
    let mut scene = SyntheticScene::new(0.5);
    let (w, h, z) = (8.0, 3.0, 3.0);
    let mut q = TexturedQuad::new(Vec3::new(-w / 2.0, -h / 2.0, z), Vec3::new(w, 0.0, 0.0), Vec3::new(0.0, h, 0.0), 0.2)?;
    let mut y = 0.1;
    let mut i = 0;
    while y < h - 0.1 {
        let thick = 0.05 + 0.03 * (i % 3) as f64;
        q.primitives.push(Primitive::Rect {
            center: Vec2::new(w / 2.0, y + thick / 2.0),
            half: Vec2::new(w, thick / 2.0),
            angle: 0.0,
            albedo: if i % 2 == 0 { 0.85 } else { 0.65 },
        });
        y += thick + 0.09 + 0.02 * (i % 4) as f64;
        i += 1;
    }
    // short vertical bars keep the horizontal motion observable for tracking
    for j in 0..14 {
        let x = 0.35 + j as f64 * 0.55;
        let yc = 0.4 + (j % 5) as f64 * 0.5;
        q.primitives.push(Primitive::Rect {
            center: Vec2::new(x, yc),
            half: Vec2::new(0.025, 0.12),
            angle: 0.0,
            albedo: 0.95,
        });
    }
    scene.quads.push(q);
    Ok(scene)
}

/// Scene and `frames` ground-truth poses for a preset. `seed` perturbs the
/// trajectory slightly; geometry is fixed per preset.
pub fn preset(preset: Preset, frames: usize, seed: u64) -> Result<(SyntheticScene, Vec<Pose>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(1));
    let phase: f64 = if seed == 0 { 0.0 } else { rng.random_range(0.0..std::f64::consts::TAU) };
    let amp = if seed == 0 { 1.0 } else { rng.random_range(0.7..1.3) };
    match preset {
        Preset::Corridor => {
            let scene = corridor_scene()?;
            let poses = (0..frames)
                .map(|i| {
                    let s = i as f64;
                    let c = Vec3::new(
                        0.12 * amp * (std::f64::consts::TAU * s / 120.0 + phase).sin(),
                        0.05 * (std::f64::consts::TAU * s / 90.0 + phase).sin(),
                        0.03 * s,
                    );
                    let yaw = 0.06 * amp * (std::f64::consts::TAU * s / 150.0 + phase).sin();
                    let pitch = 0.02 * (std::f64::consts::TAU * s / 110.0).sin();
                    camera_pose(c, yaw, pitch)
                })
                .collect();
            Ok((scene, poses))
        }
        Preset::FlatEdges => {
            let scene = flat_edges_scene()?;
            let poses = (0..frames)
                .map(|i| camera_pose(Vec3::new(-0.3 + 0.015 * i as f64, 0.0, phase * 0.01), 0.0, 0.0))
                .collect();
            Ok((scene, poses))
        }
    }
}

/// Renders a preset with default intrinsics.
pub fn render_preset(
    which: Preset,
    frames: usize,
    seed: u64,
    illumination: &[Illumination],
    noise_sigma: f64,
) -> Result<Sequence> {
    let (scene, poses) = preset(which, frames, seed)?;
    render_sequence(
        &scene,
        &poses,
        &default_intrinsics(),
        illumination,
        &RenderSettings {
            noise_sigma,
            seed,
            supersampling: 2,
        },
    )
}
