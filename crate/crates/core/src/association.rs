//! Keyframe-to-keyframe edge correspondence refinement.
//!
//! Each host point is projected into the target keyframe and snapped to its
//! nearest edge pixel. Pose and depth uncertainty bound how far along that
//! edge the true correspondence can be. Candidates inside the bound are
//! ranked by a template cost, and the ranking's ambiguity decides whether
//! the photometric match is trusted. Otherwise the edge-alignment match is
//! kept and, when depth is poorly observable, frozen.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, CameraIntrinsics, InverseDepthPoint, Pose, Vec2};
use crate::image::EdgeMap;
use crate::image::PyramidLevel;
use crate::keyframe::Keyframe;
use crate::tracker::{propagate_pose_covariance, MotionEstimate, Representation};
use crate::uncertainty::{
    depth_confidence, depth_observability, eigen_decompose, epipolar_direction, rot90, search_radius, sigma_mu, sigma_parallel, sigma_perp,
    DepthObservability, EdgeGeometry,
};

/// How the ambiguity of a candidate cost profile is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfidenceMeasure {
    /// `1 / Σ (c − c*)²` over all candidates.
    InverseGapSum,
    /// `1 / Σ exp(−(c − c*)² / 2σ²)` over candidates not adjacent to the best.
    Likelihood,
}

impl std::str::FromStr for ConfidenceMeasure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-gap-sum" => Ok(Self::InverseGapSum),
            "likelihood" => Ok(Self::Likelihood),
            _ => Err(Error::Parse(format!("unknown confidence measure {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    pub k_p: f64,
    pub k_mu: f64,
    pub patch_size: usize,
    /// Largest patch size tried.
    pub tau_s: usize,
    /// Match confidence below which a photometric match is ambiguous.
    pub tau_m: f64,
    /// Search half-widths at or below this (px) skip the confidence check.
    pub tau_lambda: f64,
    /// Depth confidence below which depth is frozen (px⁻¹).
    pub tau_d: f64,
    /// Re-association ratio for the in-optimisation update check.
    pub k_m: f64,
    pub confidence: ConfidenceMeasure,
    /// Cost scale of the likelihood confidence.
    pub cost_sigma: f64,
    pub representation: Representation,
    /// Freeze depths of ambiguous, poorly observable matches.
    pub conditioning: bool,
    /// Lower bound (px) on the nearest-edge gate.
    pub nn_floor: f64,
    /// Edge localisation noise (px) added in quadrature to the
    /// pose-propagated across-edge spread before it enters the depth
    /// confidence and triangulation.
    pub match_sigma: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            k_p: 1.0,
            k_mu: 1.0,
            patch_size: 5,
            tau_s: 13,
            tau_m: 10.0,
            tau_lambda: 2.0,
            tau_d: 0.5,
            k_m: 0.5,
            confidence: ConfidenceMeasure::Likelihood,
            cost_sigma: 2e-4,
            representation: Representation::GradientMagnitude,
            conditioning: true,
            nn_floor: 2.0,
            match_sigma: 0.25,
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k_p > 0.0
            && self.k_mu > 0.0
            && self.patch_size % 2 == 1
            && self.patch_size >= 3
            && self.tau_s % 2 == 1
            && self.tau_s >= self.patch_size
            && self.tau_m > 0.0
            && self.tau_lambda >= 0.0
            && self.tau_d >= 0.0
            && self.k_m > 0.0
            && self.k_m <= 1.0
            && self.cost_sigma > 0.0
            && self.nn_floor >= 0.0
            && self.match_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("association config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchSource {
    EdgeAlignment,
    TemplateMatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchCandidate {
    pub pixel: (usize, usize),
    pub cost: f64,
    /// Signed steps along the edge chain from the search centre.
    pub arc_offset: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRecord {
    pub host_keyframe: u64,
    pub host_point: usize,
    pub target_keyframe: u64,
    pub target_pixel: Vec2,
    /// Gradient direction of the target edge at `target_pixel`.
    pub target_gradient: Vec2,
    pub search_radius: f64,
    pub match_confidence: f64,
    pub depth_confidence: f64,
    pub depth_fixed: bool,
    pub patch_size: usize,
    pub source: MatchSource,
    pub cost: f64,
    /// Across-edge reprojection spread σ_{p∥g} (px).
    pub sigma_parallel: f64,
    pub cos_theta: f64,
}

/// One step of the chain walk: an edge pixel and its signed arc offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainNode {
    pub pixel: (usize, usize),
    pub arc_offset: i32,
}

const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn edge_at(edges: &EdgeMap, x: i64, y: i64) -> bool {
    x >= 0 && y >= 0 && (x as usize) < edges.width && (y as usize) < edges.height && edges.is_edge(x as usize, y as usize)
}

/// Number of separate edge runs around the 8-neighbourhood ring.
fn crossing_number(edges: &EdgeMap, x: usize, y: usize) -> usize {
    let on: Vec<bool> = RING
        .iter()
        .map(|(dx, dy)| edge_at(edges, x as i64 + dx, y as i64 + dy))
        .collect();
    (0..8).filter(|&i| !on[i] && on[(i + 1) % 8]).count()
}

/// Walks the edge through `center` in both directions, up to `radius` steps,
/// stopping at gaps, visited pixels and junctions (junction pixels are kept).
pub fn grow_search_chain(edges: &EdgeMap, center: (usize, usize), radius: f64) -> Result<Vec<ChainNode>> {
    let (cx, cy) = center;
    if cx >= edges.width || cy >= edges.height || !edges.is_edge(cx, cy) {
        return Err(Error::NotOnEdge(cx, cy));
    }
    let max_steps = if radius.is_finite() && radius > 0.0 { radius.floor() as i32 } else { 0 };
    let mut chain = vec![ChainNode {
        pixel: center,
        arc_offset: 0,
    }];
    if max_steps == 0 || crossing_number(edges, cx, cy) > 2 {
        return Ok(chain);
    }
    let mut visited = std::collections::HashSet::new();
    visited.insert(center);
    let next_from = |p: (usize, usize), visited: &std::collections::HashSet<(usize, usize)>| -> Option<(usize, usize)> {
        // 4-neighbours first so staircases are followed pixel by pixel
        let order = [0usize, 2, 4, 6, 1, 3, 5, 7];
        order.iter().find_map(|&i| {
            let (dx, dy) = RING[i];
            let (nx, ny) = (p.0 as i64 + dx, p.1 as i64 + dy);
            if edge_at(edges, nx, ny) && !visited.contains(&(nx as usize, ny as usize)) {
                Some((nx as usize, ny as usize))
            } else {
                None
            }
        })
    };
    for sign in [1i32, -1] {
        let mut cur = center;
        for step in 1..=max_steps {
            let Some(nxt) = next_from(cur, &visited) else { break };
            visited.insert(nxt);
            chain.push(ChainNode {
                pixel: nxt,
                arc_offset: sign * step,
            });
            if crossing_number(edges, nxt.0, nxt.1) > 2 {
                break;
            }
            cur = nxt;
        }
    }
    chain.sort_by_key(|n| n.arc_offset);
    Ok(chain)
}

/// Local affine map of pixel offsets from the host to the target image,
/// assuming a fronto-parallel plane at the point's depth.
pub fn patch_warp(point: &InverseDepthPoint, k: &CameraIntrinsics, pose: &Pose, half: f64) -> Option<Matrix2<f64>> {
    let h = half.max(1.0);
    let at = |dx: f64, dy: f64| {
        let p = InverseDepthPoint::new(point.pixel + Vec2::new(dx, dy), point.inv_depth, 0.0);
        let pr = project(&p, k, pose);
        pr.pixel.x.is_finite().then_some(pr.pixel)
    };
    let (xp, xm, yp, ym) = (at(h, 0.0)?, at(-h, 0.0)?, at(0.0, h)?, at(0.0, -h)?);
    let cx = (xp - xm) / (2.0 * h);
    let cy = (yp - ym) / (2.0 * h);
    Some(Matrix2::new(cx.x, cy.x, cx.y, cy.y))
}

fn sample(level: &PyramidLevel, repr: Representation, p: &Vec2) -> Option<f64> {
    crate::tracker::sample_representation(level, repr, p)
}

/// Samples an `size × size` patch around `center`, offsets mapped by `warp`.
pub fn sample_patch(
    level: &PyramidLevel,
    repr: Representation,
    center: &Vec2,
    warp: &Matrix2<f64>,
    size: usize,
) -> Option<Vec<f64>> {
    let h = (size / 2) as i64;
    let mut out = Vec::with_capacity(size * size);
    for dy in -h..=h {
        for dx in -h..=h {
            let off = warp * Vec2::new(dx as f64, dy as f64);
            out.push(sample(level, repr, &(center + off))?);
        }
    }
    Some(out)
}

/// Mean squared difference of two equally sized patches (mean Hamming
/// distance for census codes).
pub fn template_cost(host: &[f64], target: &[f64], repr: Representation) -> f64 {
    if host.len() != target.len() || host.is_empty() {
        return f64::INFINITY;
    }
    let n = host.len() as f64;
    match repr {
        Representation::Census => {
            host.iter()
                .zip(target)
                .map(|(a, b)| ((*a as u8) ^ (*b as u8)).count_ones() as f64)
                .sum::<f64>()
                / n
        }
        _ => host.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n,
    }
}

/// `C = 1 / Σ (c − c*)²` over all candidates; 0 when every cost equals the best.
pub fn aml_confidence(costs: &[f64], best: f64) -> f64 {
    let denom: f64 = costs
        .iter()
        .filter(|c| c.is_finite())
        .map(|c| (c - best) * (c - best))
        .sum();
    if denom > 0.0 {
        1.0 / denom
    } else {
        0.0
    }
}

/// `C = 1 / Σ exp(−(c − c*)² / 2σ²)` over candidates more than one step
/// from the best along the chain; infinite when there are none.
pub fn likelihood_confidence(candidates: &[MatchCandidate], best: usize, sigma: f64) -> f64 {
    let b = candidates[best];
    let denom: f64 = candidates
        .iter()
        .filter(|c| (c.arc_offset - b.arc_offset).abs() > 1 && c.cost.is_finite())
        .map(|c| (-(c.cost - b.cost).powi(2) / (2.0 * sigma * sigma)).exp())
        .sum();
    if denom > 0.0 {
        1.0 / denom
    } else {
        f64::INFINITY
    }
}

/// Index of the cheapest candidate, ties toward the smaller `|arc_offset|`.
pub fn best_candidate(candidates: &[MatchCandidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if !c.cost.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(j) => {
                let b = &candidates[j];
                if c.cost < b.cost || (c.cost == b.cost && c.arc_offset.abs() < b.arc_offset.abs()) {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    best
}

/// Whether a point's residual along the edge has outgrown its search interval.
pub fn match_update_check(residual: &Vec2, g_perp: &Vec2, lambda_max: f64, k_m: f64) -> bool {
    residual.dot(g_perp).abs() > k_m * lambda_max
}

/// Candidate costs at a given patch size.
fn score_chain(
    chain: &[ChainNode],
    host_patch: &[f64],
    target: &PyramidLevel,
    warp: &Matrix2<f64>,
    size: usize,
    repr: Representation,
) -> Vec<MatchCandidate> {
    chain
        .iter()
        .map(|n| {
            let c = target.edges.subpixel_at(n.pixel.0, n.pixel.1);
            let cost = sample_patch(target, repr, &c, warp, size).map_or(f64::INFINITY, |t| template_cost(host_patch, &t, repr));
            MatchCandidate {
                pixel: n.pixel,
                cost,
                arc_offset: n.arc_offset,
            }
        })
        .collect()
}

/// Sub-pixel match location: the vertex of a parabola through the costs of
/// the best candidate and its chain neighbours, placed on the segment
/// towards the cheaper neighbour.
pub fn refine_along_chain(candidates: &[MatchCandidate], best: usize, edges: &EdgeMap) -> Vec2 {
    let b = candidates[best];
    let at = |c: &MatchCandidate| edges.subpixel_at(c.pixel.0, c.pixel.1);
    let p0 = at(&b);
    let neighbour = |step: i32| {
        candidates
            .iter()
            .find(|c| c.arc_offset == b.arc_offset + step && c.cost.is_finite())
    };
    let (Some(lo), Some(hi)) = (neighbour(-1), neighbour(1)) else {
        return p0;
    };
    let curvature = lo.cost - 2.0 * b.cost + hi.cost;
    if curvature <= 0.0 {
        return p0;
    }
    let t = (0.5 * (lo.cost - hi.cost) / curvature).clamp(-0.5, 0.5);
    if t >= 0.0 {
        p0 + (at(hi) - p0) * t
    } else {
        p0 + (at(lo) - p0) * (-t)
    }
}

fn confidence(config: &AssociationConfig, candidates: &[MatchCandidate], best: usize) -> f64 {
    match config.confidence {
        ConfidenceMeasure::InverseGapSum => {
            let costs: Vec<f64> = candidates.iter().map(|c| c.cost).collect();
            aml_confidence(&costs, candidates[best].cost)
        }
        ConfidenceMeasure::Likelihood => likelihood_confidence(candidates, best, config.cost_sigma),
    }
}

/// Associates one host point; `None` when it is dropped.
pub fn associate_point(
    host: &Keyframe,
    target: &Keyframe,
    motion: &MotionEstimate,
    config: &AssociationConfig,
    point_id: usize,
) -> Option<MatchRecord> {
    let hp = host.points.get(point_id)?;
    if !hp.active || !(hp.point.inv_depth > 0.0) {
        return None;
    }
    let point = hp.point;
    let k = &host.intrinsics;
    let edges = &target.pyramid.finest().edges;
    let pr = project(&point, k, &motion.pose);
    if !pr.valid {
        return None;
    }
    let (nx, ny) = edges.nearest(&pr.pixel)?;
    let n = edges.subpixel_at(nx, ny);
    let g = edges.direction(nx, ny);
    if g.norm() == 0.0 {
        return None;
    }
    let sigma_p = propagate_pose_covariance(&point, k, motion).ok()?;
    let eig = eigen_decompose(&sigma_p).ok()?;
    let s_mu = sigma_mu(&point, &motion.pose, k).unwrap_or(0.0);
    // without a baseline the projection ignores depth: treat l as along the edge
    let l = epipolar_direction(&motion.pose, k, &point).unwrap_or_else(|_| rot90(&g));
    let geom = EdgeGeometry::new(pr.pixel, g, l).ok()?;
    let s_perp = sigma_perp(&eig, &geom.g_perp);
    let s_par = sigma_parallel(&eig, &geom.g).hypot(config.match_sigma);
    let lambda = search_radius(&geom, s_perp, s_mu, config.k_p, config.k_mu);
    if (pr.pixel - n).norm() > (2.0 * lambda).max(config.nn_floor) {
        return None;
    }
    let c_d = depth_confidence(&geom, s_par);
    let mut record = MatchRecord {
        host_keyframe: host.id,
        host_point: point_id,
        target_keyframe: target.id,
        target_pixel: n,
        target_gradient: g,
        search_radius: lambda,
        match_confidence: f64::INFINITY,
        depth_confidence: c_d,
        depth_fixed: false,
        patch_size: config.patch_size,
        source: MatchSource::TemplateMatch,
        cost: 0.0,
        sigma_parallel: s_par,
        cos_theta: geom.cos_theta(),
    };

    let chain = grow_search_chain(edges, (nx, ny), lambda).ok()?;
    let host_level = host.pyramid.finest();
    let target_level = target.pyramid.finest();
    let identity = Matrix2::identity();
    let mut size = config.patch_size;
    let naive = lambda <= config.tau_lambda;
    loop {
        let warp = patch_warp(&point, k, &motion.pose, (size / 2) as f64)?;
        let host_patch = sample_patch(host_level, config.representation, &point.pixel, &identity, size)?;
        let cands = score_chain(&chain, &host_patch, target_level, &warp, size, config.representation);
        let best = best_candidate(&cands)?;
        let b = cands[best];
        record.target_pixel = refine_along_chain(&cands, best, edges);
        record.target_gradient = edges.direction(b.pixel.0, b.pixel.1);
        record.cost = b.cost;
        record.patch_size = size;
        if naive {
            return Some(record);
        }
        record.match_confidence = confidence(config, &cands, best);
        if record.match_confidence >= config.tau_m || !config.conditioning {
            return Some(record);
        }
        if size + 2 > config.tau_s {
            break;
        }
        size += 2;
    }
    record.source = MatchSource::EdgeAlignment;
    record.target_pixel = n;
    record.target_gradient = g;
    record.depth_fixed = depth_observability(&geom, s_par, config.tau_d) == DepthObservability::PoorlyObservable;
    Some(record)
}

/// Refines correspondences of every active host point in the target
/// keyframe; `motion` maps host to target.
pub fn associate(host: &Keyframe, target: &Keyframe, motion: &MotionEstimate, config: &AssociationConfig) -> Vec<MatchRecord> {
    (0..host.points.len())
        .filter_map(|i| associate_point(host, target, motion, config, i))
        .collect()
}
