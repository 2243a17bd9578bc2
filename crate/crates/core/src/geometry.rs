//! Camera model, rigid transforms and the inverse-depth projection.
//!
//! Tangent vectors are ordered `(translation, rotation)`, i.e. `ξ = (ρ, ω)`,
//! and every Jacobian in the crate is taken with respect to a *left*
//! perturbation `T ← exp(δ) · T`.

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector2, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat6 = Matrix6<f64>;
pub type Mat2x6 = SMatrix<f64, 2, 6>;

/// Below this rotation angle the exp/log maps use Taylor expansions.
const SMALL_ANGLE: f64 = 1e-8;
/// Rotation angles closer than this to pi are rejected by `log`.
const LOG_PI_MARGIN: f64 = 1e-6;

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rigid body transform `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Mat3::identity(), t)
    }

    /// Exponential map from a `(ρ, ω)` tangent vector.
    pub fn exp(xi: &Vec6) -> Self {
        let rho = Vec3::new(xi[0], xi[1], xi[2]);
        let omega = Vec3::new(xi[3], xi[4], xi[5]);
        let theta2 = omega.norm_squared();
        let theta = theta2.sqrt();
        let (a, b, c) = if theta < SMALL_ANGLE {
            (
                1.0 - theta2 / 6.0,
                0.5 - theta2 / 24.0,
                1.0 / 6.0 - theta2 / 120.0,
            )
        } else {
            (
                theta.sin() / theta,
                (1.0 - theta.cos()) / theta2,
                (theta - theta.sin()) / (theta2 * theta),
            )
        };
        let w = skew(&omega);
        let w2 = w * w;
        let rotation = Mat3::identity() + w * a + w2 * b;
        let v = Mat3::identity() + w * b + w2 * c;
        Self::new(rotation, v * rho)
    }

    /// Rotation vector of `R` (axis times angle).
    pub fn rotation_log(&self) -> Result<Vec3> {
        let r = &self.rotation;
        let skew_part = vee(&(r - r.transpose())) * 0.5;
        let sin_theta = skew_part.norm();
        let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let theta = sin_theta.atan2(cos_theta);
        if theta >= std::f64::consts::PI - LOG_PI_MARGIN {
            return Err(Error::NearSingularLog { angle: theta });
        }
        if theta < SMALL_ANGLE {
            return Ok(skew_part * (1.0 + theta * theta / 6.0));
        }
        if theta < 3.0 {
            return Ok(skew_part * (theta / sin_theta));
        }
        // Near pi the antisymmetric part vanishes; recover the axis from the
        // symmetric part and take its sign from the antisymmetric one.
        let sym = (r + r.transpose()) * 0.5 - Mat3::identity() * cos_theta;
        let scale = 1.0 - cos_theta;
        let mut best = 0;
        for i in 1..3 {
            if sym[(i, i)] > sym[(best, best)] {
                best = i;
            }
        }
        let mut axis = sym.column(best).into_owned() / scale;
        axis /= axis.norm();
        if axis.dot(&skew_part) < 0.0 {
            axis = -axis;
        }
        Ok(axis * theta)
    }

    /// Logarithm map to a `(ρ, ω)` tangent vector.
    pub fn log(&self) -> Result<Vec6> {
        let omega = self.rotation_log()?;
        let theta2 = omega.norm_squared();
        let theta = theta2.sqrt();
        let w = skew(&omega);
        let w2 = w * w;
        let coeff = if theta < SMALL_ANGLE {
            1.0 / 12.0 + theta2 / 720.0
        } else {
            let a = theta.sin() / theta;
            let b = (1.0 - theta.cos()) / theta2;
            (1.0 - a / (2.0 * b)) / theta2
        };
        let v_inv = Mat3::identity() - w * 0.5 + w2 * coeff;
        let rho = v_inv * self.translation;
        Ok(Vec6::new(rho.x, rho.y, rho.z, omega.x, omega.y, omega.z))
    }

    /// `self ∘ other`, applying `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    pub fn transform(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Left update `exp(δ) · self`, re-orthonormalised.
    pub fn retract(&self, delta: &Vec6) -> Pose {
        Pose::exp(delta).compose(self).orthonormalized()
    }

    /// Projects the rotation back onto SO(3) via SVD.
    pub fn orthonormalized(&self) -> Pose {
        let svd = self.rotation.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u2 = u;
            u2.column_mut(2).neg_mut();
            r = u2 * vt;
        }
        Pose::new(r, self.translation)
    }

    /// Adjoint for `(ρ, ω)` ordering: `T exp(δ) T⁻¹ = exp(Ad_T δ)`.
    pub fn adjoint(&self) -> Mat6 {
        let mut ad = Mat6::zeros();
        let r = self.rotation;
        let tr = skew(&self.translation) * r;
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&tr);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad
    }

    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Mat3::identity()).norm()
    }

    /// Camera centre in the frame this pose maps *from* (for world→camera
    /// poses, the camera position in world coordinates).
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    /// Unit quaternion `(x, y, z, w)` of the rotation.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.rotation);
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
        [q.i, q.j, q.k, q.w]
    }

    pub fn from_quaternion(translation: Vec3, q: [f64; 4]) -> Pose {
        let uq = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
            q[3], q[0], q[1], q[2],
        ));
        Pose::new(uq.to_rotation_matrix().into_inner(), translation)
    }
}

/// Pinhole camera without lens distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad intrinsics {self:?}")))
        }
    }

    /// Intrinsics of pyramid level `level` produced by repeated 2×2 box
    /// downsampling (pixel centres at integer coordinates).
    pub fn at_level(&self, level: usize) -> Self {
        let mut k = *self;
        for _ in 0..level {
            k.fx *= 0.5;
            k.fy *= 0.5;
            k.cx = (k.cx - 0.5) * 0.5;
            k.cy = (k.cy - 0.5) * 0.5;
            k.width = k.width.div_ceil(2);
            k.height = k.height.div_ceil(2);
        }
        k
    }

    /// Bearing `(x/z, y/z, 1)` of a pixel.
    pub fn bearing(&self, pixel: &Vec2) -> Vec3 {
        Vec3::new(
            (pixel.x - self.cx) / self.fx,
            (pixel.y - self.cy) / self.fy,
            1.0,
        )
    }

    /// `π⁻¹(p, d)`: the 3-D point at inverse depth `d` along the pixel ray.
    pub fn backproject(&self, pixel: &Vec2, inv_depth: f64) -> Vec3 {
        self.bearing(pixel) / inv_depth
    }

    /// `π(P)`; `None` when the point is not in front of the camera.
    pub fn project(&self, p: &Vec3) -> Option<Vec2> {
        if p.z <= 0.0 {
            return None;
        }
        Some(Vec2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    pub fn in_bounds(&self, pixel: &Vec2) -> bool {
        self.in_bounds_margin(pixel, 0.0)
    }

    pub fn in_bounds_margin(&self, pixel: &Vec2, margin: f64) -> bool {
        pixel.x >= margin
            && pixel.y >= margin
            && pixel.x <= self.width as f64 - 1.0 - margin
            && pixel.y <= self.height as f64 - 1.0 - margin
    }

    /// Derivative of `π` at the (possibly unnormalised) point `q`.
    fn projection_derivative(&self, q: &Vec3) -> SMatrix<f64, 2, 3> {
        let iz = 1.0 / q.z;
        SMatrix::<f64, 2, 3>::new(
            self.fx * iz,
            0.0,
            -self.fx * q.x * iz * iz,
            0.0,
            self.fy * iz,
            -self.fy * q.y * iz * iz,
        )
    }
}

/// A landmark anchored at a host-frame pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseDepthPoint {
    pub pixel: Vec2,
    pub inv_depth: f64,
    pub inv_depth_sigma: f64,
}

impl InverseDepthPoint {
    pub fn new(pixel: Vec2, inv_depth: f64, inv_depth_sigma: f64) -> Self {
        Self {
            pixel,
            inv_depth,
            inv_depth_sigma,
        }
    }

    pub fn with_inv_depth(&self, inv_depth: f64) -> Self {
        Self { inv_depth, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vec2,
    /// Depth of the point in the target camera.
    pub depth: f64,
    /// False when behind the camera or outside the image.
    pub valid: bool,
}

/// The scale-free transformed ray `R·f + d·t`, whose projection equals the
/// projection of `R·π⁻¹(p, d) + t`.
fn warped_ray(point: &InverseDepthPoint, k: &CameraIntrinsics, pose: &Pose) -> Vec3 {
    pose.rotation * k.bearing(&point.pixel) + pose.translation * point.inv_depth
}

/// Warps a host-frame point into the target frame: `π(R π⁻¹(p, d) + t)`.
pub fn project(point: &InverseDepthPoint, k: &CameraIntrinsics, relative_pose: &Pose) -> Projection {
    let q = warped_ray(point, k, relative_pose);
    if q.z <= 0.0 || point.inv_depth <= 0.0 {
        return Projection {
            pixel: Vec2::new(f64::NAN, f64::NAN),
            depth: f64::NAN,
            valid: false,
        };
    }
    let pixel = Vec2::new(k.fx * q.x / q.z + k.cx, k.fy * q.y / q.z + k.cy);
    Projection {
        pixel,
        depth: q.z / point.inv_depth,
        valid: k.in_bounds(&pixel),
    }
}

/// Analytic Jacobians of [`project`]: 2×6 w.r.t. a left pose perturbation
/// and 2-vector w.r.t. the inverse depth.
pub fn projection_jacobians(
    point: &InverseDepthPoint,
    k: &CameraIntrinsics,
    relative_pose: &Pose,
) -> Result<(Mat2x6, Vec2)> {
    let q = warped_ray(point, k, relative_pose);
    if q.z <= 0.0 || point.inv_depth <= 0.0 {
        return Err(Error::InvalidProjection);
    }
    let dpi = k.projection_derivative(&q);
    // Camera-frame point P' = q / d.
    let p_cam = q / point.inv_depth;
    let mut dp = SMatrix::<f64, 3, 6>::zeros();
    dp.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
    dp.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(&p_cam)));
    // dπ(P')/dP' = d · dπ(q)/dq
    let j_pose = (dpi * point.inv_depth) * dp;
    let j_depth = dpi * relative_pose.translation;
    Ok((j_pose, j_depth))
}
