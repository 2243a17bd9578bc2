//! Frame-to-keyframe tracking by point-to-tangent edge alignment.
//!
//! Host points are warped into the frame, each is paired with the nearest
//! frame edge pixel `n`, and the residual `gᵀ(p' − n)` along that pixel's
//! gradient direction is minimised by Gauss-Newton over a coarse-to-fine
//! pyramid. Associations are refreshed after every pose update.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, projection_jacobians, CameraIntrinsics, InverseDepthPoint, Mat2x6, Mat6, Pose, Vec2, Vec6};
use crate::image::{bilinear, EdgeMap, Pyramid, PyramidLevel};
use crate::keyframe::{pixel_at_level, Keyframe};

pub const MIN_TRACKED_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub levels: usize,
    pub max_iterations: usize,
    /// Huber threshold (px of the level being aligned).
    pub huber: f64,
    /// Stop when the step norm falls below this.
    pub convergence: f64,
    /// Mean absolute residual (px) above which tracking is declared failed.
    pub divergence_cap: f64,
    /// Points whose nearest edge is farther than this (finest-level px) are outliers.
    pub max_nn_distance: f64,
    pub min_valid_fraction: f64,
    pub max_halvings: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            max_iterations: 30,
            huber: 1.0,
            convergence: 1e-7,
            divergence_cap: 3.0,
            max_nn_distance: 20.0,
            min_valid_fraction: 0.3,
            max_halvings: 5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.levels > 0
            && self.max_iterations > 0
            && self.huber > 0.0
            && self.convergence > 0.0
            && self.divergence_cap > 0.0
            && self.max_nn_distance > 0.0
            && (0.0..=1.0).contains(&self.min_valid_fraction);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("tracker config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTrack {
    /// Index into the keyframe's hosted points.
    pub id: usize,
    pub projected: Vec2,
    /// Nearest frame edge pixel, if within the association gate.
    pub nearest: Option<Vec2>,
    /// Gradient direction at `nearest`.
    pub gradient: Vec2,
    pub residual: f64,
    pub weight: f64,
    /// Pixel Jacobian w.r.t. a left pose perturbation.
    pub jacobian: Mat2x6,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    /// Keyframe → frame.
    pub pose: Pose,
    pub pose_covariance: Mat6,
    /// Weighted normal matrix `Σ w jᵀj` at the solution.
    pub normal_matrix: Mat6,
    pub residual_variance: f64,
    pub inlier_fraction: f64,
    /// Fraction of points with a nearest edge inside the gate.
    pub valid_fraction: f64,
    pub mean_abs_residual: f64,
    /// Mean pixel displacement of tracked points from their host pixels.
    pub mean_flow: f64,
    pub cost: f64,
    pub iterations: usize,
    pub failed: bool,
    pub per_point: Vec<PointTrack>,
}

/// Pose estimate with first-order covariance (left perturbation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEstimate {
    pub pose: Pose,
    pub covariance: Mat6,
}

impl TrackingResult {
    pub fn motion(&self) -> MotionEstimate {
        MotionEstimate {
            pose: self.pose,
            covariance: self.pose_covariance,
        }
    }
}

#[inline]
pub fn huber_cost(r: f64, gamma: f64) -> f64 {
    let a = r.abs();
    if a <= gamma {
        0.5 * r * r
    } else {
        gamma * (a - 0.5 * gamma)
    }
}

#[inline]
pub fn huber_weight(r: f64, gamma: f64) -> f64 {
    let a = r.abs();
    if a <= gamma {
        1.0
    } else {
        gamma / a
    }
}

struct LevelSetup<'a> {
    k: CameraIntrinsics,
    edges: &'a EdgeMap,
    points: Vec<(usize, InverseDepthPoint)>,
    gamma: f64,
    gate: f64,
}

struct Evaluation {
    cost: f64,
    tracks: Vec<PointTrack>,
    valid: usize,
}

/// Point-to-tangent residual of one point; `None` outside the gate.
fn point_residual(
    point: &InverseDepthPoint,
    k: &CameraIntrinsics,
    edges: &EdgeMap,
    pose: &Pose,
    gate: f64,
) -> (Vec2, Option<(Vec2, Vec2, f64)>) {
    let pr = project(point, k, pose);
    if !pr.pixel.x.is_finite() || !k.in_bounds(&pr.pixel) {
        return (pr.pixel, None);
    }
    let Some((nx, ny)) = edges.nearest(&pr.pixel) else {
        return (pr.pixel, None);
    };
    let n = edges.subpixel_at(nx, ny);
    if (pr.pixel - n).norm() > gate {
        return (pr.pixel, None);
    }
    let g = edges.direction(nx, ny);
    (pr.pixel, Some((n, g, g.dot(&(pr.pixel - n)))))
}

fn evaluate(setup: &LevelSetup, pose: &Pose, with_jacobians: bool) -> Evaluation {
    let outlier_cost = huber_cost(setup.gate, setup.gamma);
    let mut cost = 0.0;
    let mut valid = 0;
    let mut tracks = Vec::with_capacity(setup.points.len());
    for (id, pt) in &setup.points {
        let (projected, assoc) = point_residual(pt, &setup.k, setup.edges, pose, setup.gate);
        let mut track = PointTrack {
            id: *id,
            projected,
            nearest: None,
            gradient: Vec2::zeros(),
            residual: 0.0,
            weight: 0.0,
            jacobian: Mat2x6::zeros(),
        };
        match assoc {
            Some((n, g, r)) => {
                valid += 1;
                cost += huber_cost(r, setup.gamma);
                track.nearest = Some(n);
                track.gradient = g;
                track.residual = r;
                track.weight = huber_weight(r, setup.gamma);
                if with_jacobians {
                    if let Ok((j, _)) = projection_jacobians(pt, &setup.k, pose) {
                        track.jacobian = j;
                    }
                }
            }
            None => cost += outlier_cost,
        }
        tracks.push(track);
    }
    Evaluation { cost, tracks, valid }
}

/// Costs of two evaluations over the points valid in both, so that points
/// entering or leaving the gate do not bias step acceptance.
fn shared_cost(a: &Evaluation, b: &Evaluation, gamma: f64) -> (f64, f64) {
    let mut ca = 0.0;
    let mut cb = 0.0;
    for (ta, tb) in a.tracks.iter().zip(&b.tracks) {
        if ta.nearest.is_some() && tb.nearest.is_some() {
            ca += huber_cost(ta.residual, gamma);
            cb += huber_cost(tb.residual, gamma);
        }
    }
    (ca, cb)
}

fn normal_equations(tracks: &[PointTrack]) -> (Mat6, Vec6) {
    let mut h = Mat6::zeros();
    let mut b = Vec6::zeros();
    for t in tracks.iter().filter(|t| t.nearest.is_some()) {
        let j: Vec6 = (t.gradient.transpose() * t.jacobian).transpose();
        h += j * j.transpose() * t.weight;
        b += j * (t.weight * t.residual);
    }
    (h, b)
}

/// Moore-Penrose inverse of a symmetric PSD matrix.
pub fn psd_pseudo_inverse(m: &Mat6) -> (Mat6, usize) {
    let eig = SymmetricEigen::new(*m);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut inv = Mat6::zeros();
    let mut rank = 0;
    for i in 0..6 {
        let l = eig.eigenvalues[i];
        if l > max * 1e-12 && l > 0.0 {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            inv += v * v.transpose() / l;
        }
    }
    (inv, rank)
}

/// Estimates the keyframe → frame pose.
pub fn align(keyframe: &Keyframe, frame: &Pyramid, init_pose: Pose, config: &TrackerConfig) -> Result<TrackingResult> {
    config.validate()?;
    let points: Vec<(usize, InverseDepthPoint)> =
        keyframe.active_points().map(|(i, p)| (i, p.point)).collect();
    if points.len() < MIN_TRACKED_POINTS {
        return Err(Error::InsufficientPoints {
            have: points.len(),
            need: MIN_TRACKED_POINTS,
        });
    }
    if frame.num_levels() < config.levels {
        return Err(Error::InvalidParameter(format!(
            "frame pyramid has {} levels, tracker needs {}",
            frame.num_levels(),
            config.levels
        )));
    }
    let levels = config.levels.min(keyframe.pyramid.num_levels());
    let mut pose = init_pose;
    let mut iterations = 0;
    for level in (0..levels).rev() {
        let scale = 0.5f64.powi(level as i32);
        let setup = LevelSetup {
            k: keyframe.intrinsics.at_level(level),
            edges: &frame.levels[level].edges,
            points: points
                .iter()
                .map(|(i, p)| {
                    (
                        *i,
                        InverseDepthPoint::new(pixel_at_level(&p.pixel, level), p.inv_depth, p.inv_depth_sigma),
                    )
                })
                .collect(),
            gamma: config.huber,
            gate: (config.max_nn_distance * scale).max(4.0),
        };
        let mut current = evaluate(&setup, &pose, true);
        // coarse levels can pull a good initial guess into a wrong basin
        if level + 1 < levels {
            let from_init = evaluate(&setup, &init_pose, true);
            if from_init.cost < current.cost {
                pose = init_pose;
                current = from_init;
            }
        }
        for _ in 0..config.max_iterations {
            iterations += 1;
            let (h, b) = normal_equations(&current.tracks);
            let Some(chol) = (h + Mat6::identity() * 1e-9 * h.trace().max(1e-12)).cholesky() else {
                break;
            };
            let mut step = -chol.solve(&b);
            let mut accepted = false;
            for _ in 0..=config.max_halvings {
                let candidate = pose.retract(&step);
                let trial = evaluate(&setup, &candidate, true);
                let (before, after) = shared_cost(&current, &trial, setup.gamma);
                if after <= before {
                    pose = candidate;
                    current = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.norm() < config.convergence {
                break;
            }
        }
    }
    Ok(summarize(keyframe, frame, &points, pose, iterations, config))
}

/// Residual statistics and covariance of `pose` without optimizing it.
pub fn evaluate_pose(keyframe: &Keyframe, frame: &Pyramid, pose: Pose, config: &TrackerConfig) -> Result<TrackingResult> {
    config.validate()?;
    let points: Vec<(usize, InverseDepthPoint)> =
        keyframe.active_points().map(|(i, p)| (i, p.point)).collect();
    Ok(summarize(keyframe, frame, &points, pose, 0, config))
}

fn summarize(
    keyframe: &Keyframe,
    frame: &Pyramid,
    points: &[(usize, InverseDepthPoint)],
    pose: Pose,
    iterations: usize,
    config: &TrackerConfig,
) -> TrackingResult {
    let setup = LevelSetup {
        k: keyframe.intrinsics,
        edges: &frame.levels[0].edges,
        points: points.to_vec(),
        gamma: config.huber,
        gate: config.max_nn_distance,
    };
    let eval = evaluate(&setup, &pose, true);
    let (h, _) = normal_equations(&eval.tracks);
    let n = points.len();
    let assoc: Vec<&PointTrack> = eval.tracks.iter().filter(|t| t.nearest.is_some()).collect();
    let wrss: f64 = assoc.iter().map(|t| t.weight * t.residual * t.residual).sum();
    let dof = assoc.len().saturating_sub(6).max(1);
    let residual_variance = wrss / dof as f64;
    let (h_inv, _) = psd_pseudo_inverse(&h);
    let mut cov = h_inv * residual_variance;
    cov = (cov + cov.transpose()) * 0.5;
    let inliers = assoc.iter().filter(|t| t.residual.abs() <= config.huber).count();
    let mean_abs_residual = if assoc.is_empty() {
        f64::INFINITY
    } else {
        assoc.iter().map(|t| t.residual.abs()).sum::<f64>() / assoc.len() as f64
    };
    let valid_fraction = eval.valid as f64 / n as f64;
    let flow: Vec<f64> = eval
        .tracks
        .iter()
        .zip(points)
        .filter(|(t, _)| t.projected.x.is_finite())
        .map(|(t, (_, p))| (t.projected - p.pixel).norm())
        .collect();
    let mean_flow = if flow.is_empty() {
        f64::INFINITY
    } else {
        flow.iter().sum::<f64>() / flow.len() as f64
    };
    let failed = valid_fraction < config.min_valid_fraction || mean_abs_residual > config.divergence_cap;
    TrackingResult {
        pose,
        pose_covariance: cov,
        normal_matrix: h,
        residual_variance,
        inlier_fraction: inliers as f64 / n as f64,
        valid_fraction,
        mean_abs_residual,
        mean_flow,
        cost: eval.cost,
        iterations,
        failed,
        per_point: eval.tracks,
    }
}

/// Reprojection covariance of a tracked point: `J Σ_ξ Jᵀ` with the tracking
/// pose covariance `Σ_ξ = (Σ w jᵀj)⁻¹ σ_r²`.
pub fn point_covariance(tracking: &TrackingResult, point_id: usize) -> Result<nalgebra::Matrix2<f64>> {
    let track = tracking
        .per_point
        .iter()
        .find(|t| t.id == point_id && t.nearest.is_some())
        .ok_or_else(|| Error::InvalidParameter(format!("point {point_id} was not tracked")))?;
    if tracking.residual_variance == 0.0 {
        return Ok(nalgebra::Matrix2::zeros());
    }
    let (_, rank) = psd_pseudo_inverse(&tracking.normal_matrix);
    if rank < 6 {
        return Err(Error::Degenerate(format!(
            "tracking normal matrix has rank {rank}"
        )));
    }
    let s = track.jacobian * tracking.pose_covariance * track.jacobian.transpose();
    Ok((s + s.transpose()) * 0.5)
}

/// Pixel covariance induced by a pose covariance at a given point.
pub fn propagate_pose_covariance(
    point: &InverseDepthPoint,
    k: &CameraIntrinsics,
    motion: &MotionEstimate,
) -> Result<nalgebra::Matrix2<f64>> {
    let (j, _) = projection_jacobians(point, k, &motion.pose)?;
    let s = j * motion.covariance * j.transpose();
    Ok((s + s.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Intensity,
    GradientMagnitude,
    Census,
}

impl std::str::FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intensity" => Ok(Self::Intensity),
            "gradient-magnitude" | "gradient" => Ok(Self::GradientMagnitude),
            "census" => Ok(Self::Census),
            _ => Err(Error::Parse(format!("unknown representation {s:?}"))),
        }
    }
}

/// Per-point photometric residuals `F_frame(p') − F_key(p)`; `None` where a
/// point leaves the image. Census residuals carry no Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotometricResiduals {
    pub residuals: Vec<Option<f64>>,
    pub jacobians: Vec<Option<Vec6>>,
}

const CENSUS_OFFSETS: [(f64, f64); 8] = [
    (-1.0, -1.0),
    (0.0, -1.0),
    (1.0, -1.0),
    (-1.0, 0.0),
    (1.0, 0.0),
    (-1.0, 1.0),
    (0.0, 1.0),
    (1.0, 1.0),
];

fn census_code(level: &PyramidLevel, p: &Vec2) -> Option<u8> {
    let img = &level.image;
    let c = img.bilinear(p)?;
    let mut code = 0u8;
    for (bit, (dx, dy)) in CENSUS_OFFSETS.iter().enumerate() {
        let v = img.bilinear(&Vec2::new(p.x + dx, p.y + dy))?;
        if v < c {
            code |= 1 << bit;
        }
    }
    Some(code)
}

/// Samples the chosen representation at a sub-pixel location.
pub fn sample_representation(level: &PyramidLevel, repr: Representation, p: &Vec2) -> Option<f64> {
    let (w, h) = (level.image.width, level.image.height);
    match repr {
        Representation::Intensity => level.image.bilinear(p),
        Representation::GradientMagnitude => bilinear(&level.gradients.magnitude, w, h, p),
        Representation::Census => census_code(level, p).map(|c| c as f64),
    }
}

fn representation_gradient(level: &PyramidLevel, repr: Representation, p: &Vec2) -> Option<Vec2> {
    let (w, h) = (level.image.width, level.image.height);
    match repr {
        Representation::Intensity => Some(Vec2::new(
            bilinear(&level.gradients.gx, w, h, p)?,
            bilinear(&level.gradients.gy, w, h, p)?,
        )),
        Representation::GradientMagnitude => {
            let f = |dx: f64, dy: f64| bilinear(&level.gradients.magnitude, w, h, &Vec2::new(p.x + dx, p.y + dy));
            Some(Vec2::new(f(0.5, 0.0)? - f(-0.5, 0.0)?, f(0.0, 0.5)? - f(0.0, -0.5)?))
        }
        Representation::Census => None,
    }
}

pub fn photometric_residuals(
    key: &PyramidLevel,
    frame: &PyramidLevel,
    k: &CameraIntrinsics,
    pose: &Pose,
    points: &[InverseDepthPoint],
    repr: Representation,
) -> Result<PhotometricResiduals> {
    let mut residuals = Vec::with_capacity(points.len());
    let mut jacobians = Vec::with_capacity(points.len());
    for pt in points {
        let pr = project(pt, k, pose);
        let r = if pr.valid {
            match repr {
                Representation::Census => census_code(frame, &pr.pixel)
                    .zip(census_code(key, &pt.pixel))
                    .map(|(a, b)| (a ^ b).count_ones() as f64),
                _ => sample_representation(frame, repr, &pr.pixel)
                    .zip(sample_representation(key, repr, &pt.pixel))
                    .map(|(a, b)| a - b),
            }
        } else {
            None
        };
        let jac = match (r, repr) {
            (Some(_), Representation::Intensity | Representation::GradientMagnitude) => {
                let grad = representation_gradient(frame, repr, &pr.pixel);
                match (grad, projection_jacobians(pt, k, pose)) {
                    (Some(g), Ok((j, _))) => Some((g.transpose() * j).transpose()),
                    _ => None,
                }
            }
            _ => None,
        };
        residuals.push(r);
        jacobians.push(jac);
    }
    if residuals.iter().all(Option::is_none) {
        return Err(Error::InvalidProjection);
    }
    Ok(PhotometricResiduals { residuals, jacobians })
}
