//! Point-to-edge uncertainty: how far along an edge the true correspondence
//! of a reprojected point can lie, and how well a match on that edge can
//! constrain the point's depth.
//!
//! Geometry: a point reprojects to `p`; its nearest target edge pixel has unit
//! gradient `g` (edge normal) and tangent `g⊥`; varying the point's inverse
//! depth moves `p` along the epipolar direction `l`; `θ` is the angle between
//! `g` and `l`, folded into `[0, π/2]`.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{project, CameraIntrinsics, InverseDepthPoint, Pose, Vec2};

/// Below this `|cos θ|` a disparity cannot be recovered from an edge match.
pub const MIN_COS_THETA: f64 = 1e-3;

/// `(−y, x)`: the 90° counter-clockwise rotation.
pub fn rot90(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub p: Vec2,
    pub g: Vec2,
    pub g_perp: Vec2,
    pub l: Vec2,
    pub theta: f64,
}

impl EdgeGeometry {
    pub fn new(p: Vec2, g: Vec2, l: Vec2) -> Result<Self> {
        let (gn, ln) = (g.norm(), l.norm());
        if !(gn > 0.0 && ln > 0.0 && gn.is_finite() && ln.is_finite()) {
            return Err(Error::InvalidParameter(
                "edge geometry needs nonzero directions".into(),
            ));
        }
        let g = g / gn;
        let l = l / ln;
        let theta = g.dot(&l).abs().min(1.0).acos();
        Ok(Self {
            p,
            g,
            g_perp: rot90(&g),
            l,
            theta,
        })
    }

    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }

    pub fn sin_theta(&self) -> f64 {
        self.theta.sin()
    }
}

/// Principal standard deviations and axes of a 2×2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEigen {
    pub sigma1: f64,
    pub sigma2: f64,
    pub v1: Vec2,
    pub v2: Vec2,
}

impl CovarianceEigen {
    pub fn reconstruct(&self) -> Matrix2<f64> {
        self.v1 * self.v1.transpose() * self.sigma1.powi(2)
            + self.v2 * self.v2.transpose() * self.sigma2.powi(2)
    }
}

/// Closed-form eigendecomposition of a symmetric PSD 2×2 matrix.
/// Eigenvalues down to `-1e-12` are clamped to zero.
pub fn eigen_decompose(sigma_p: &Matrix2<f64>) -> Result<CovarianceEigen> {
    let (a, b, c) = (sigma_p[(0, 0)], sigma_p[(0, 1)], sigma_p[(1, 1)]);
    let asym = (b - sigma_p[(1, 0)]).abs();
    if asym > 1e-9 || !asym.is_finite() {
        return Err(Error::NotSymmetric(asym));
    }
    let b = 0.5 * (b + sigma_p[(1, 0)]);
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = (mean + radius, mean - radius);
    if l2 < -1e-12 {
        return Err(Error::NotPositiveSemiDefinite(l2));
    }
    // Eigenvector of l1 from whichever row of (M - l1 I) is better conditioned.
    let v1 = if radius == 0.0 {
        Vec2::new(1.0, 0.0)
    } else {
        let r1 = Vec2::new(b, l1 - a);
        let r2 = Vec2::new(l1 - c, b);
        let v = if r1.norm_squared() >= r2.norm_squared() { r1 } else { r2 };
        v / v.norm()
    };
    Ok(CovarianceEigen {
        sigma1: l1.max(0.0).sqrt(),
        sigma2: l2.max(0.0).sqrt(),
        v1,
        v2: rot90(&v1),
    })
}

/// Along-edge spread of the reprojection uncertainty:
/// `max(σ1 |⟨v1, g⊥⟩|, σ2 |⟨v2, g⊥⟩|)`. With equal eigenvalues any basis is
/// an eigenbasis; the one containing `g⊥` is used, giving `σ`.
pub fn sigma_perp(eigen: &CovarianceEigen, g_perp: &Vec2) -> f64 {
    if eigen.sigma1 - eigen.sigma2 <= 1e-12 * eigen.sigma1 {
        return eigen.sigma1 * g_perp.norm();
    }
    (eigen.sigma1 * eigen.v1.dot(g_perp).abs()).max(eigen.sigma2 * eigen.v2.dot(g_perp).abs())
}

/// Across-edge spread: as [`sigma_perp`] with the edge normal `g`.
pub fn sigma_parallel(eigen: &CovarianceEigen, g: &Vec2) -> f64 {
    sigma_perp(eigen, g)
}

/// Largest reprojection displacement caused by moving the inverse depth by
/// `±σ_d`. A non-positive lower perturbation is clamped to `d/10`.
pub fn sigma_mu(point: &InverseDepthPoint, pose: &Pose, k: &CameraIntrinsics) -> Result<f64> {
    if point.inv_depth_sigma == 0.0 {
        return Ok(0.0);
    }
    let center = project(point, k, pose);
    if !center.depth.is_finite() || center.depth <= 0.0 {
        return Err(Error::InvalidProjection);
    }
    let d = point.inv_depth;
    let lower = if d - point.inv_depth_sigma > 0.0 {
        d - point.inv_depth_sigma
    } else {
        d / 10.0
    };
    let mut best: Option<f64> = None;
    for dd in [d + point.inv_depth_sigma, lower] {
        let pr = project(&point.with_inv_depth(dd), k, pose);
        if pr.depth.is_finite() && pr.depth > 0.0 {
            let disp = (pr.pixel - center.pixel).norm();
            best = Some(best.map_or(disp, |b: f64| b.max(disp)));
        }
    }
    best.ok_or(Error::InvalidProjection)
}

/// Half-width of the 1-D search along the edge and the terms it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub sigma_p_perp_g: f64,
    pub sigma_mu: f64,
    pub radius: f64,
    pub k_p: f64,
    pub k_mu: f64,
}

/// `λ½ = k_p σ_{p⊥g} + k_μ σ_μ |sin θ|`.
pub fn search_radius(geom: &EdgeGeometry, sigma_p_perp_g: f64, sigma_mu: f64, k_p: f64, k_mu: f64) -> f64 {
    k_p * sigma_p_perp_g + k_mu * sigma_mu * geom.sin_theta().abs()
}

pub fn search_budget(geom: &EdgeGeometry, sigma_p_perp_g: f64, sigma_mu: f64, k_p: f64, k_mu: f64) -> SearchBudget {
    SearchBudget {
        sigma_p_perp_g,
        sigma_mu,
        radius: search_radius(geom, sigma_p_perp_g, sigma_mu, k_p, k_mu),
        k_p,
        k_mu,
    }
}

/// Exact along-edge standard deviation `√(σ²_{p⊥g} + σ²_μ sin²θ)`.
pub fn search_sigma(geom: &EdgeGeometry, sigma_p_perp_g: f64, sigma_mu: f64) -> f64 {
    (sigma_p_perp_g.powi(2) + (sigma_mu * geom.sin_theta()).powi(2)).sqrt()
}

/// Disparity along the epipolar line implied by an across-edge offset, and
/// its variance: `μ = e/cos θ`, `σ²_μ = σ²/cos² θ`.
pub fn disparity_and_variance(geom: &EdgeGeometry, e_p_parallel_g: f64, sigma_p_parallel_g: f64) -> Result<(f64, f64)> {
    let c = geom.cos_theta();
    if c.abs() <= MIN_COS_THETA {
        return Err(Error::PoorlyObservable { cos_theta: c });
    }
    Ok((e_p_parallel_g / c, sigma_p_parallel_g.powi(2) / (c * c)))
}

/// `C_d = cos θ / σ_{p∥g}`; infinite when `σ_{p∥g} = 0`.
pub fn depth_confidence(geom: &EdgeGeometry, sigma_p_parallel_g: f64) -> f64 {
    if sigma_p_parallel_g <= 0.0 {
        return f64::INFINITY;
    }
    geom.cos_theta().max(0.0) / sigma_p_parallel_g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthObservability {
    Observable,
    /// The edge runs (nearly) along the epipolar line: a match on it says
    /// little about depth.
    PoorlyObservable,
}

/// Flags a match as poorly observable when its depth confidence is below
/// `tau_d` or `|cos θ|` is numerically zero.
pub fn depth_observability(geom: &EdgeGeometry, sigma_p_parallel_g: f64, tau_d: f64) -> DepthObservability {
    if geom.cos_theta().abs() <= MIN_COS_THETA || depth_confidence(geom, sigma_p_parallel_g) < tau_d {
        DepthObservability::PoorlyObservable
    } else {
        DepthObservability::Observable
    }
}

/// Unit image direction in which the projection moves as the inverse depth
/// grows (rotation uncertainty ignored).
pub fn epipolar_direction(pose: &Pose, k: &CameraIntrinsics, point: &InverseDepthPoint) -> Result<Vec2> {
    if pose.translation.norm() < 1e-12 {
        return Err(Error::NoEpipolarDirection);
    }
    let (_, jd) = crate::geometry::projection_jacobians(point, k, pose)?;
    let n = jd.norm();
    if !(n > 1e-12) {
        return Err(Error::NoEpipolarDirection);
    }
    Ok(jd / n)
}
