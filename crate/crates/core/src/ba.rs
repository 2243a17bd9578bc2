//! Sliding-window bundle adjustment over keyframe poses and inverse depths.
//!
//! Levenberg-Marquardt on Huber-weighted reprojection residuals with the
//! depths eliminated by a dense Schur complement. The oldest keyframe pose
//! and the median-depth point it hosts are held fixed to pin the gauge.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::association::{match_update_check, MatchRecord, MatchSource};
use crate::error::{Error, Result};
use crate::geometry::{project, projection_jacobians, CameraIntrinsics, InverseDepthPoint, Mat2x6, Pose, Vec2, Vec6};
use crate::image::bilinear;
use crate::keyframe::Keyframe;
use crate::tracker::{huber_cost, huber_weight};
use crate::uncertainty::{disparity_and_variance, rot90, EdgeGeometry, MIN_COS_THETA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaConfig {
    pub window_size: usize,
    pub max_outer_iterations: usize,
    pub max_iterations: usize,
    /// Huber threshold on the reprojection residual norm (px).
    pub huber: f64,
    pub initial_damping: f64,
    pub damping_scale: f64,
    /// Stop when the update norm falls below this.
    pub tolerance: f64,
    /// Floor on the per-keyframe residual variance used as weight (px²).
    pub min_residual_variance: f64,
    /// Relative weight of the gradient-magnitude photometric term; 0 disables it.
    pub photometric_weight: f64,
    /// Re-association ratio of the match update check.
    pub k_m: f64,
    /// Floor (px) on the search length used by the match update check.
    pub min_search_length: f64,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self {
            window_size: 7,
            max_outer_iterations: 3,
            max_iterations: 10,
            huber: 2.0,
            initial_damping: 1e-4,
            damping_scale: 10.0,
            tolerance: 1e-6,
            min_residual_variance: 0.01,
            photometric_weight: 0.0,
            k_m: 0.5,
            min_search_length: 2.0,
        }
    }
}

impl BaConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.window_size >= 2
            && self.huber > 0.0
            && self.initial_damping >= 0.0
            && self.damping_scale > 1.0
            && self.tolerance > 0.0
            && self.min_residual_variance > 0.0
            && self.photometric_weight >= 0.0
            && self.k_m > 0.0
            && self.min_search_length >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("BA config {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Window {
    pub capacity: usize,
    pub keyframes: Vec<Keyframe>,
    pub observations: Vec<MatchRecord>,
}

impl Window {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            keyframes: Vec::new(),
            observations: Vec::new(),
        }
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.keyframes.iter().position(|k| k.id == id)
    }

    pub fn keyframe(&self, id: u64) -> Option<&Keyframe> {
        self.keyframes.iter().find(|k| k.id == id)
    }

    /// Appends a keyframe and its observations, dropping the oldest keyframe
    /// (with every observation that touches it) when over capacity. Returns
    /// the dropped keyframes.
    pub fn add_keyframe(&mut self, keyframe: Keyframe, records: Vec<MatchRecord>) -> Result<Vec<Keyframe>> {
        if self.index_of(keyframe.id).is_some() {
            return Err(Error::DuplicateKeyframe(keyframe.id));
        }
        self.keyframes.push(keyframe);
        let ids: Vec<u64> = self.keyframes.iter().map(|k| k.id).collect();
        self.observations
            .extend(records.into_iter().filter(|r| ids.contains(&r.host_keyframe) && ids.contains(&r.target_keyframe)));
        let mut dropped = Vec::new();
        while self.keyframes.len() > self.capacity.max(1) {
            let old = self.keyframes.remove(0);
            self.observations
                .retain(|r| r.host_keyframe != old.id && r.target_keyframe != old.id);
            dropped.push(old);
        }
        Ok(dropped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaReport {
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub reassociated: usize,
    /// Observations still failing the update check at exit.
    pub pending: Vec<usize>,
    pub converged: bool,
}

/// Linearised residual of one observation. One-dimensional residuals use
/// only the first row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualBlock {
    pub observation: usize,
    pub host: usize,
    pub target: usize,
    pub dim: usize,
    pub residual: Vec2,
    pub j_host: Mat2x6,
    pub j_target: Mat2x6,
    pub j_depth: Vec2,
    /// Residual variance weight (without the robust factor).
    pub weight: f64,
    pub photometric: bool,
}

impl ResidualBlock {
    fn value(&self) -> Vec2 {
        if self.dim == 1 {
            Vec2::new(self.residual.x, 0.0)
        } else {
            self.residual
        }
    }
}

fn relative_pose(window: &Window, host: usize, target: usize) -> Pose {
    window.keyframes[target]
        .pose
        .compose(&window.keyframes[host].pose.inverse())
}

/// Gradient of the finest gradient-magnitude field by central differences.
fn magnitude_gradient(kf: &Keyframe, p: &Vec2) -> Option<(f64, Vec2)> {
    let lvl = kf.pyramid.finest();
    let (w, h) = (lvl.image.width, lvl.image.height);
    let f = |dx: f64, dy: f64| bilinear(&lvl.gradients.magnitude, w, h, &Vec2::new(p.x + dx, p.y + dy));
    let v = f(0.0, 0.0)?;
    Some((v, Vec2::new(f(0.5, 0.0)? - f(-0.5, 0.0)?, f(0.0, 0.5)? - f(0.0, -0.5)?)))
}

/// Residuals and Jacobians of every observation at the current estimate.
pub fn residual_blocks(window: &Window, config: &BaConfig) -> Vec<ResidualBlock> {
    let mut out = Vec::with_capacity(window.observations.len());
    for (oi, obs) in window.observations.iter().enumerate() {
        let (Some(h), Some(t)) = (window.index_of(obs.host_keyframe), window.index_of(obs.target_keyframe)) else {
            continue;
        };
        let host = &window.keyframes[h];
        let Some(hp) = host.points.get(obs.host_point) else { continue };
        if !hp.active {
            continue;
        }
        let rel = relative_pose(window, h, t);
        let k = &host.intrinsics;
        let pr = project(&hp.point, k, &rel);
        if !pr.pixel.x.is_finite() {
            continue;
        }
        let Ok((j, jd)) = projection_jacobians(&hp.point, k, &rel) else { continue };
        let ad = rel.adjoint();
        let j_host = -(j * ad);
        let weight = 1.0 / host.residual_variance.max(config.min_residual_variance);
        let e = pr.pixel - obs.target_pixel;
        let block = match obs.source {
            MatchSource::TemplateMatch => ResidualBlock {
                observation: oi,
                host: h,
                target: t,
                dim: 2,
                residual: e,
                j_host,
                j_target: j,
                j_depth: jd,
                weight,
                photometric: false,
            },
            MatchSource::EdgeAlignment => {
                let g = obs.target_gradient;
                let row = |m: &Mat2x6| {
                    let mut r = Mat2x6::zeros();
                    r.set_row(0, &(g.transpose() * m));
                    r
                };
                ResidualBlock {
                    observation: oi,
                    host: h,
                    target: t,
                    dim: 1,
                    residual: Vec2::new(g.dot(&e), 0.0),
                    j_host: row(&j_host),
                    j_target: row(&j),
                    j_depth: Vec2::new(g.dot(&jd), 0.0),
                    weight,
                    photometric: false,
                }
            }
        };
        out.push(block);
        if config.photometric_weight > 0.0 {
            let target = &window.keyframes[t];
            if let (Some((ft, grad)), Some((fh, _))) = (magnitude_gradient(target, &pr.pixel), magnitude_gradient(host, &hp.point.pixel)) {
                let row = |m: &Mat2x6| {
                    let mut r = Mat2x6::zeros();
                    r.set_row(0, &(grad.transpose() * m));
                    r
                };
                out.push(ResidualBlock {
                    observation: oi,
                    host: h,
                    target: t,
                    dim: 1,
                    residual: Vec2::new(ft - fh, 0.0),
                    j_host: row(&j_host),
                    j_target: row(&j),
                    j_depth: Vec2::new(grad.dot(&jd), 0.0),
                    weight: config.photometric_weight,
                    photometric: true,
                });
            }
        }
    }
    out
}

fn block_cost(b: &ResidualBlock, gamma: f64) -> f64 {
    if b.photometric {
        0.5 * b.weight * b.residual.x * b.residual.x
    } else {
        b.weight * huber_cost(b.value().norm(), gamma)
    }
}

pub fn total_cost(window: &Window, config: &BaConfig) -> f64 {
    residual_blocks(window, config)
        .iter()
        .map(|b| block_cost(b, config.huber))
        .sum()
}

/// Point whose depth pins the scale: the median-inverse-depth observed
/// point of the oldest keyframe.
fn gauge_point(window: &Window) -> Option<usize> {
    let oldest = window.keyframes.first()?;
    let mut observed: Vec<usize> = window
        .observations
        .iter()
        .filter(|o| o.host_keyframe == oldest.id && !o.depth_fixed)
        .map(|o| o.host_point)
        .filter(|&i| oldest.points[i].active && !oldest.points[i].depth_fixed)
        .collect();
    observed.sort_unstable();
    observed.dedup();
    if observed.is_empty() {
        return None;
    }
    observed.sort_by(|a, b| {
        oldest.points[*a]
            .point
            .inv_depth
            .total_cmp(&oldest.points[*b].point.inv_depth)
            .then(a.cmp(b))
    });
    Some(observed[observed.len() / 2])
}

struct Variables {
    /// Window index → pose variable slot.
    poses: Vec<Option<usize>>,
    n_poses: usize,
    /// (window index, point index) → depth variable slot.
    depths: HashMap<(usize, usize), usize>,
    depth_keys: Vec<(usize, usize)>,
}

fn variables(window: &Window) -> Variables {
    let mut poses = vec![None; window.keyframes.len()];
    for (i, slot) in poses.iter_mut().enumerate().skip(1) {
        *slot = Some(i - 1);
    }
    let gauge = gauge_point(window);
    let mut depths = HashMap::new();
    let mut depth_keys = Vec::new();
    for obs in &window.observations {
        if obs.depth_fixed {
            continue;
        }
        let Some(h) = window.index_of(obs.host_keyframe) else { continue };
        let hp = &window.keyframes[h].points[obs.host_point];
        if hp.depth_fixed || !hp.active || (h == 0 && Some(obs.host_point) == gauge) {
            continue;
        }
        let key = (h, obs.host_point);
        if let std::collections::hash_map::Entry::Vacant(e) = depths.entry(key) {
            e.insert(depth_keys.len());
            depth_keys.push(key);
        }
    }
    Variables {
        n_poses: window.keyframes.len().saturating_sub(1),
        poses,
        depths,
        depth_keys,
    }
}

struct NormalEquations {
    hpp: DMatrix<f64>,
    bp: DVector<f64>,
    hdd: Vec<f64>,
    bd: Vec<f64>,
    /// Per depth variable: (pose slot, coupling block).
    hpd: Vec<Vec<(usize, Vec6)>>,
}

fn build_normal_equations(window: &Window, vars: &Variables, blocks: &[ResidualBlock], config: &BaConfig) -> NormalEquations {
    let np = vars.n_poses * 6;
    let nd = vars.depth_keys.len();
    let mut ne = NormalEquations {
        hpp: DMatrix::zeros(np, np),
        bp: DVector::zeros(np),
        hdd: vec![0.0; nd],
        bd: vec![0.0; nd],
        hpd: vec![Vec::new(); nd],
    };
    for b in blocks {
        let obs = &window.observations[b.observation];
        let robust = if b.photometric {
            1.0
        } else {
            huber_weight(b.value().norm(), config.huber)
        };
        let w = b.weight * robust;
        let r = b.value();
        let jac = [(b.host, b.j_host), (b.target, b.j_target)];
        let depth_slot = if obs.depth_fixed {
            None
        } else {
            vars.depths.get(&(b.host, obs.host_point)).copied()
        };
        for (ka, ja) in &jac {
            let Some(sa) = vars.poses[*ka] else { continue };
            let jta = ja.transpose();
            let g = jta * r * w;
            for i in 0..6 {
                ne.bp[sa * 6 + i] += g[i];
            }
            for (kb, jb) in &jac {
                let Some(sb) = vars.poses[*kb] else { continue };
                let hab = jta * jb * w;
                let mut view = ne.hpp.view_mut((sa * 6, sb * 6), (6, 6));
                view += hab;
            }
            if let Some(d) = depth_slot {
                let c: Vec6 = jta * b.j_depth * w;
                match ne.hpd[d].iter_mut().find(|(s, _)| *s == sa) {
                    Some((_, acc)) => *acc += c,
                    None => ne.hpd[d].push((sa, c)),
                }
            }
        }
        if let Some(d) = depth_slot {
            ne.hdd[d] += b.j_depth.dot(&b.j_depth) * w;
            ne.bd[d] += b.j_depth.dot(&r) * w;
        }
    }
    ne
}

const POSE_AXES: [&str; 6] = ["tx", "ty", "tz", "rx", "ry", "rz"];

fn rank_check(window: &Window, vars: &Variables, ne: &NormalEquations) -> Result<()> {
    let s = schur(ne, 0.0, 0.0).0;
    if s.nrows() == 0 {
        return Ok(());
    }
    let eig = SymmetricEigen::new(s);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut names = Vec::new();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= max * 1e-12 {
            let v = eig.eigenvectors.column(i);
            let (idx, _) = v.iter().enumerate().fold((0, 0.0), |acc, (j, x)| if x.abs() > acc.1 { (j, x.abs()) } else { acc });
            let kf = window.keyframes[vars.poses.iter().position(|s| *s == Some(idx / 6)).unwrap_or(0)].id;
            names.push(format!("keyframe {kf} {}", POSE_AXES[idx % 6]));
        }
    }
    if names.is_empty() {
        Ok(())
    } else {
        Err(Error::RankDeficient(names))
    }
}

/// Reduced pose system `S δp = −g` with Marquardt damping `mu`.
fn schur(ne: &NormalEquations, mu: f64, floor: f64) -> (DMatrix<f64>, DVector<f64>, Vec<f64>) {
    let mut s = ne.hpp.clone();
    for i in 0..s.nrows() {
        s[(i, i)] += mu * s[(i, i)] + floor;
    }
    let mut g = ne.bp.clone();
    let hdd: Vec<f64> = ne.hdd.iter().map(|h| h + mu * h + floor).collect();
    for (d, coupling) in ne.hpd.iter().enumerate() {
        if hdd[d] <= 0.0 {
            continue;
        }
        let inv = 1.0 / hdd[d];
        for (sa, ca) in coupling {
            for i in 0..6 {
                g[sa * 6 + i] -= ca[i] * ne.bd[d] * inv;
            }
            for (sb, cb) in coupling {
                let m = ca * cb.transpose() * inv;
                let mut view = s.view_mut((sa * 6, sb * 6), (6, 6));
                view -= m;
            }
        }
    }
    (s, g, hdd)
}

fn apply_update(window: &mut Window, vars: &Variables, dp: &DVector<f64>, dd: &[f64]) {
    for (i, slot) in vars.poses.iter().enumerate() {
        if let Some(s) = slot {
            let delta = Vec6::from_fn(|r, _| dp[s * 6 + r]);
            window.keyframes[i].pose = window.keyframes[i].pose.retract(&delta);
        }
    }
    for (j, &(h, p)) in vars.depth_keys.iter().enumerate() {
        let pt = &mut window.keyframes[h].points[p].point;
        pt.inv_depth = (pt.inv_depth + dd[j]).max(0.1 * pt.inv_depth);
    }
}

fn snapshot(window: &Window, vars: &Variables) -> (Vec<Pose>, Vec<f64>) {
    (
        window.keyframes.iter().map(|k| k.pose).collect(),
        vars.depth_keys
            .iter()
            .map(|&(h, p)| window.keyframes[h].points[p].point.inv_depth)
            .collect(),
    )
}

fn restore(window: &mut Window, vars: &Variables, saved: &(Vec<Pose>, Vec<f64>)) {
    for (k, p) in window.keyframes.iter_mut().zip(&saved.0) {
        k.pose = *p;
    }
    for (&(h, p), &d) in vars.depth_keys.iter().zip(&saved.1) {
        window.keyframes[h].points[p].point.inv_depth = d;
    }
}

/// Runs Levenberg-Marquardt to convergence on the current observations.
fn optimize(window: &mut Window, config: &BaConfig, check_rank: bool) -> Result<(usize, bool)> {
    let vars = variables(window);
    let mut blocks = residual_blocks(window, config);
    let mut cost: f64 = blocks.iter().map(|b| block_cost(b, config.huber)).sum();
    let mut mu = config.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut first = check_rank;
    while iterations < config.max_iterations {
        iterations += 1;
        let ne = build_normal_equations(window, &vars, &blocks, config);
        if first {
            rank_check(window, &vars, &ne)?;
            first = false;
        }
        let mut accepted = false;
        for _ in 0..10 {
            let (s, g, hdd) = schur(&ne, mu, 1e-12);
            let dp = if s.nrows() > 0 {
                match s.clone().cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        mu *= config.damping_scale;
                        continue;
                    }
                }
            } else {
                DVector::zeros(0)
            };
            let dd: Vec<f64> = (0..hdd.len())
                .map(|d| {
                    if hdd[d] <= 0.0 {
                        return 0.0;
                    }
                    let mut rhs = ne.bd[d];
                    for (sa, c) in &ne.hpd[d] {
                        for i in 0..6 {
                            rhs += c[i] * dp[sa * 6 + i];
                        }
                    }
                    -rhs / hdd[d]
                })
                .collect();
            let step = (dp.norm_squared() + dd.iter().map(|v| v * v).sum::<f64>()).sqrt();
            if step < config.tolerance {
                converged = true;
                break;
            }
            let saved = snapshot(window, &vars);
            apply_update(window, &vars, &dp, &dd);
            let new_blocks = residual_blocks(window, config);
            let new_cost: f64 = new_blocks.iter().map(|b| block_cost(b, config.huber)).sum();
            if new_cost <= cost {
                cost = new_cost;
                blocks = new_blocks;
                mu = (mu / config.damping_scale).max(1e-12);
                accepted = true;
                break;
            }
            restore(window, &vars, &saved);
            mu *= config.damping_scale;
        }
        if converged || !accepted {
            converged = converged || !accepted;
            break;
        }
    }
    Ok((iterations, converged))
}

/// Observations whose along-edge residual exceeds `k_m` times their search
/// half-width (floored at `min_search_length`).
pub fn flagged_observations(window: &Window, config: &BaConfig) -> Vec<usize> {
    let mut out = Vec::new();
    for (oi, obs) in window.observations.iter().enumerate() {
        let (Some(h), Some(t)) = (window.index_of(obs.host_keyframe), window.index_of(obs.target_keyframe)) else {
            continue;
        };
        let host = &window.keyframes[h];
        let rel = relative_pose(window, h, t);
        let pr = project(&host.points[obs.host_point].point, &host.intrinsics, &rel);
        if !pr.pixel.x.is_finite() {
            continue;
        }
        let lambda = obs.search_radius.max(config.min_search_length);
        if match_update_check(&(pr.pixel - obs.target_pixel), &rot90(&obs.target_gradient), lambda, config.k_m) {
            out.push(oi);
        }
    }
    out
}

/// Re-association callback: given the window and flagged observation
/// indices, returns a replacement (or `None` to drop) for each.
pub type Reassociate<'a> = dyn FnMut(&Window, &[usize]) -> Vec<Option<MatchRecord>> + 'a;

pub fn local_ba(window: &mut Window, config: &BaConfig, mut reassociate: Option<&mut Reassociate>) -> Result<BaReport> {
    config.validate()?;
    if window.keyframes.len() < 2 {
        return Err(Error::InsufficientPoints {
            have: window.keyframes.len(),
            need: 2,
        });
    }
    if window.observations.len() < 10 {
        return Err(Error::InsufficientPoints {
            have: window.observations.len(),
            need: 10,
        });
    }
    let initial_cost = total_cost(window, config);
    let mut report = BaReport {
        initial_cost,
        final_cost: initial_cost,
        iterations: 0,
        outer_iterations: 0,
        reassociated: 0,
        pending: Vec::new(),
        converged: false,
    };
    for outer in 0..config.max_outer_iterations.max(1) {
        report.outer_iterations = outer + 1;
        let (it, conv) = optimize(window, config, outer == 0)?;
        report.iterations += it;
        report.converged = conv;
        let flagged = flagged_observations(window, config);
        report.pending = flagged.clone();
        if flagged.is_empty() || outer + 1 == config.max_outer_iterations.max(1) {
            break;
        }
        let Some(cb) = reassociate.as_deref_mut() else { break };
        let replacements = cb(window, &flagged);
        report.reassociated += flagged.len();
        let mut remove = Vec::new();
        for (&oi, rep) in flagged.iter().zip(replacements) {
            match rep {
                Some(r) => window.observations[oi] = r,
                None => remove.push(oi),
            }
        }
        for oi in remove.into_iter().rev() {
            window.observations.remove(oi);
        }
        if window.observations.len() < 10 {
            break;
        }
    }
    report.final_cost = total_cost(window, config);
    report.pending = flagged_observations(window, config);
    Ok(report)
}

/// Inverse depth of a host point from its match in another keyframe, and
/// its standard deviation propagated from the disparity variance.
pub fn triangulate_depth(
    record: &MatchRecord,
    point: &InverseDepthPoint,
    host_pose: &Pose,
    target_pose: &Pose,
    k: &CameraIntrinsics,
) -> Result<(f64, f64)> {
    let rel = target_pose.compose(&host_pose.inverse());
    let t = rel.translation;
    if t.norm() < 1e-12 {
        return Err(Error::NoEpipolarDirection);
    }
    if record.cos_theta.abs() <= MIN_COS_THETA {
        return Err(Error::PoorlyObservable {
            cos_theta: record.cos_theta,
        });
    }
    let a = rel.rotation * k.bearing(&point.pixel);
    let m = k.bearing(&record.target_pixel);
    // algebraic solution of m × (a + d t) = 0 (x and y rows)
    let rows = [(m.x * t.z - t.x, a.x - m.x * a.z), (m.y * t.z - t.y, a.y - m.y * a.z)];
    let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), (ai, bi)| (n + ai * bi, d + ai * ai));
    if den <= 0.0 {
        return Err(Error::Degenerate("match lies on the epipole".into()));
    }
    let mut d = if num / den > 0.0 { num / den } else { point.inv_depth };
    let g = record.target_gradient;
    let use_normal = record.source == MatchSource::EdgeAlignment && g.norm() > 0.0;
    // geometric refinement on the reprojection error
    for _ in 0..10 {
        let cand = point.with_inv_depth(d);
        let pr = project(&cand, k, &rel);
        let Ok((_, jd)) = projection_jacobians(&cand, k, &rel) else { break };
        let e = pr.pixel - record.target_pixel;
        let (r, j) = if use_normal { (Vec2::new(g.dot(&e), 0.0), Vec2::new(g.dot(&jd), 0.0)) } else { (e, jd) };
        let jj = j.dot(&j);
        if jj <= 0.0 {
            break;
        }
        let step = -j.dot(&r) / jj;
        d = (d + step).max(0.1 * d);
        if step.abs() < 1e-14 * d.max(1.0) {
            break;
        }
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Degenerate("non-positive triangulated depth".into()));
    }
    let (_, jd) = projection_jacobians(&point.with_inv_depth(d), k, &rel)?;
    let l = jd.normalize();
    let geom = EdgeGeometry::new(record.target_pixel, if g.norm() > 0.0 { g } else { l }, l)?;
    let cos = if g.norm() > 0.0 { geom.cos_theta() } else { record.cos_theta };
    if cos.abs() <= MIN_COS_THETA {
        return Err(Error::PoorlyObservable { cos_theta: cos });
    }
    let (_, var_mu) = disparity_and_variance(&geom, 0.0, record.sigma_parallel)?;
    Ok((d, var_mu.sqrt() / jd.norm()))
}
