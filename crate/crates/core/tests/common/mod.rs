#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;

use edgevo::association::{MatchRecord, MatchSource};
use edgevo::ba::Window;
use edgevo::geometry::{InverseDepthPoint, Pose, Vec2};
use edgevo::image::{build_pyramid, CannyParams, Pyramid};
use edgevo::keyframe::Keyframe;
use edgevo::sim::Sequence;

pub fn pyramid(seq: &Sequence, i: usize, levels: usize) -> Arc<Pyramid> {
    Arc::new(build_pyramid(&seq.frames[i], levels, CannyParams::default()).unwrap())
}

/// Keyframe at frame `i` hosting up to `budget` edge pixels at their true depth.
pub fn gt_keyframe(seq: &Sequence, i: usize, levels: usize, budget: usize) -> Keyframe {
    let pyr = pyramid(seq, i, levels);
    let k = seq.intrinsics;
    let edges = &pyr.finest().edges;
    let candidates: Vec<(Vec2, f64)> = edges
        .edge_pixels()
        .into_iter()
        .filter(|&(x, y)| x >= 8 && y >= 8 && x + 8 < k.width && y + 8 < k.height)
        .filter_map(|(x, y)| {
            let p = edges.subpixel_at(x, y);
            seq.inv_depth_at(i, &p).map(|d| (p, d))
        })
        .collect();
    let stride = (candidates.len() as f64 / budget as f64).max(1.0);
    let mut pts = Vec::new();
    let mut s = 0.0;
    while (s as usize) < candidates.len() && pts.len() < budget {
        let (p, d) = candidates[s as usize];
        pts.push(InverseDepthPoint::new(p, d, 0.2 * d));
        s += stride;
    }
    Keyframe::new(i as u64, seq.poses[i], k, pyr).with_points(pts)
}

/// Ground-truth pose of frame `b` relative to frame `a`.
pub fn relative(seq: &Sequence, a: usize, b: usize) -> Pose {
    seq.poses[b].compose(&seq.poses[a].inverse())
}

/// Mean reprojection distance between two relative poses over the
/// keyframe's points.
pub fn reprojection_rmse(kf: &Keyframe, a: &Pose, b: &Pose) -> f64 {
    let mut acc = 0.0;
    let mut n = 0;
    for p in &kf.points {
        let pa = edgevo::geometry::project(&p.point, &kf.intrinsics, a);
        let pb = edgevo::geometry::project(&p.point, &kf.intrinsics, b);
        if pa.valid && pb.valid {
            acc += (pa.pixel - pb.pixel).norm_squared();
            n += 1;
        }
    }
    (acc / n.max(1) as f64).sqrt()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut impl rand::Rng) -> Vec2 {
    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Vec2::new(a.cos(), a.sin())
}

pub fn small_pose(rng: &mut impl rand::Rng, rot: f64, trans: f64) -> Pose {
    let mut xi = edgevo::geometry::Vec6::zeros();
    for i in 0..3 {
        xi[i] = rng.random_range(-trans..trans);
        xi[i + 3] = rng.random_range(-rot..rot);
    }
    Pose::exp(&xi)
}

/// A small textured pyramid shared by synthetic keyframes whose images do
/// not matter.
pub fn dummy_pyramid() -> Arc<Pyramid> {
    let k = edgevo::sim::default_intrinsics();
    let img = edgevo::image::GrayImage::from_fn(k.width, k.height, |x, y| {
        if (60..260).contains(&x) && (40..200).contains(&y) { 0.8 } else { 0.2 }
    });
    Arc::new(build_pyramid(&img, 1, CannyParams::default()).unwrap())
}

pub fn record(host: u64, point: usize, target: u64, pixel: Vec2, gradient: Vec2, template: bool) -> MatchRecord {
    MatchRecord {
        host_keyframe: host,
        host_point: point,
        target_keyframe: target,
        target_pixel: pixel,
        target_gradient: gradient,
        search_radius: 1.0,
        match_confidence: f64::INFINITY,
        depth_confidence: f64::INFINITY,
        depth_fixed: false,
        patch_size: 5,
        source: if template { MatchSource::TemplateMatch } else { MatchSource::EdgeAlignment },
        cost: 0.0,
        sigma_parallel: 0.1,
        cos_theta: 1.0,
    }
}

/// Window of `n_kf` keyframes along a gently curving path, each hosting
/// `n_pts` points at 2–6 m, with exact matches into every other keyframe
/// that sees them. Every third match is one-dimensional.
pub fn exact_window(rng: &mut impl rand::Rng, n_kf: usize, n_pts: usize) -> Window {
    let k = edgevo::sim::default_intrinsics();
    let pyr = dummy_pyramid();
    let mut w = Window::new(n_kf);
    for i in 0..n_kf {
        let jitter = small_pose(rng, 0.02, 0.02);
        let c = Pose::from_translation(-edgevo::geometry::Vec3::new(0.15 * i as f64, 0.03 * i as f64, 0.1 * i as f64));
        let pts = (0..n_pts).map(|_| {
            let p = Vec2::new(rng.random_range(20.0..300.0), rng.random_range(20.0..220.0));
            let d: f64 = rng.random_range(1.0 / 6.0..0.5);
            InverseDepthPoint::new(p, d, 0.2 * d)
        });
        let mut kf = Keyframe::new(i as u64, jitter.compose(&c), k, pyr.clone()).with_points(pts);
        kf.residual_variance = 0.04;
        w.keyframes.push(kf);
    }
    let mut n = 0;
    for h in 0..n_kf {
        for t in 0..n_kf {
            if h == t {
                continue;
            }
            let rel = w.keyframes[t].pose.compose(&w.keyframes[h].pose.inverse());
            for (pi, hp) in w.keyframes[h].points.iter().enumerate() {
                let pr = edgevo::geometry::project(&hp.point, &k, &rel);
                if pr.valid {
                    w.observations.push(record(h as u64, pi, t as u64, pr.pixel, unit(rng), n % 3 != 0));
                    n += 1;
                }
            }
        }
    }
    w
}

fn perturbed(pose: &Pose, i: usize, h: f64) -> Pose {
    let mut xi = edgevo::geometry::Vec6::zeros();
    xi[i] = h;
    Pose::exp(&xi).compose(pose)
}

const FD_STEP: f64 = 1e-6;

/// Worst relative finite-difference error of the projection Jacobians over
/// `n` random points and poses.
pub fn projection_jacobian_error(seed: u64, n: usize) -> f64 {
    use edgevo::geometry::{project, projection_jacobians};
    let mut rng = rng(seed);
    let k = edgevo::sim::default_intrinsics();
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n {
        let p = Vec2::new(rng.random_range(0.0..320.0), rng.random_range(0.0..240.0));
        let d: f64 = rng.random_range(0.1..2.0);
        let pt = InverseDepthPoint::new(p, d, 0.0);
        let pose = small_pose(&mut rng, 0.3, 0.5);
        let Ok((jp, jd)) = projection_jacobians(&pt, &k, &pose) else { continue };
        let f = |pose: &Pose, pt: &InverseDepthPoint| project(pt, &k, pose).pixel;
        let mut fd = edgevo::geometry::Mat2x6::zeros();
        for i in 0..6 {
            let diff = f(&perturbed(&pose, i, FD_STEP), &pt) - f(&perturbed(&pose, i, -FD_STEP), &pt);
            fd.set_column(i, &(diff / (2.0 * FD_STEP)));
        }
        let fdd = (f(&pose, &pt.with_inv_depth(d + FD_STEP)) - f(&pose, &pt.with_inv_depth(d - FD_STEP))) / (2.0 * FD_STEP);
        let err = ((fd - jp).norm_squared() + (fdd - jd).norm_squared()).sqrt();
        let scale = (jp.norm_squared() + jd.norm_squared()).sqrt().max(1e-9);
        worst = worst.max(err / scale);
        done += 1;
    }
    worst
}

/// Worst relative finite-difference error of the point-to-tangent residual
/// Jacobian over `n` random poses around the true motion of a rendered
/// corridor pair; the nearest edge is held fixed, as in one Gauss-Newton step.
pub fn alignment_jacobian_error(seed: u64, n: usize) -> f64 {
    use edgevo::geometry::project;
    use edgevo::tracker::{evaluate_pose, TrackerConfig};
    let mut rng = rng(seed);
    let seq = edgevo::sim::render_preset(edgevo::sim::Preset::Corridor, 4, 0, &[], 0.0).unwrap();
    let kf = gt_keyframe(&seq, 0, 4, 800);
    let frame = pyramid(&seq, 3, 4);
    let truth = relative(&seq, 0, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let pose = small_pose(&mut rng, 0.005, 0.02).compose(&truth);
        let res = evaluate_pose(&kf, &frame, pose, &TrackerConfig::default()).unwrap();
        let valid: Vec<_> = res.per_point.iter().filter(|t| t.nearest.is_some()).collect();
        let t = valid[rng.random_range(0..valid.len())];
        let n_px = t.nearest.unwrap();
        let pt = kf.points[t.id].point;
        let r = |pose: &Pose| t.gradient.dot(&(project(&pt, &kf.intrinsics, pose).pixel - n_px));
        let analytic = t.gradient.transpose() * t.jacobian;
        let mut err = 0.0;
        for i in 0..6 {
            let fd = (r(&perturbed(&pose, i, FD_STEP)) - r(&perturbed(&pose, i, -FD_STEP))) / (2.0 * FD_STEP);
            err += (fd - analytic[i]).powi(2);
        }
        worst = worst.max(err.sqrt() / analytic.norm().max(1e-9));
    }
    worst
}

/// Worst relative finite-difference error of the stacked bundle-adjustment
/// Jacobian over `n` random windows.
pub fn ba_jacobian_error(seed: u64, n: usize) -> f64 {
    use edgevo::ba::{residual_blocks, BaConfig};
    use nalgebra::DMatrix;
    let mut rng = rng(seed);
    let cfg = BaConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let mut w = exact_window(&mut rng, 3, 6);
        // move off the exact solution so residuals are generic
        for kf in w.keyframes.iter_mut().skip(1) {
            kf.pose = small_pose(&mut rng, 0.01, 0.03).compose(&kf.pose);
        }
        let depth_cols: Vec<(usize, usize)> =
            (0..w.keyframes.len()).flat_map(|h| (0..w.keyframes[h].points.len()).map(move |p| (h, p))).collect();
        let cols = 6 * w.keyframes.len() + depth_cols.len();
        let stack = |w: &Window| -> Vec<f64> {
            residual_blocks(w, &cfg).iter().flat_map(|b| (0..b.dim).map(move |r| b.residual[r])).collect()
        };
        let blocks = residual_blocks(&w, &cfg);
        let rows: usize = blocks.iter().map(|b| b.dim).sum();
        let mut analytic = DMatrix::<f64>::zeros(rows, cols);
        let mut row = 0;
        for b in &blocks {
            let obs = &w.observations[b.observation];
            let dc = depth_cols.iter().position(|&c| c == (b.host, obs.host_point)).unwrap();
            for r in 0..b.dim {
                for i in 0..6 {
                    analytic[(row, 6 * b.host + i)] += b.j_host[(r, i)];
                    analytic[(row, 6 * b.target + i)] += b.j_target[(r, i)];
                }
                analytic[(row, 6 * w.keyframes.len() + dc)] = b.j_depth[r];
                row += 1;
            }
        }
        let mut numeric = DMatrix::<f64>::zeros(rows, cols);
        for c in 0..cols {
            let mut plus = w.clone();
            let mut minus = w.clone();
            if c < 6 * w.keyframes.len() {
                let (kf, i) = (c / 6, c % 6);
                plus.keyframes[kf].pose = perturbed(&w.keyframes[kf].pose, i, FD_STEP);
                minus.keyframes[kf].pose = perturbed(&w.keyframes[kf].pose, i, -FD_STEP);
            } else {
                let (h, p) = depth_cols[c - 6 * w.keyframes.len()];
                plus.keyframes[h].points[p].point.inv_depth += FD_STEP;
                minus.keyframes[h].points[p].point.inv_depth -= FD_STEP;
            }
            let (sp, sm) = (stack(&plus), stack(&minus));
            assert_eq!(sp.len(), rows, "finite-difference step changed the residual set");
            for r in 0..rows {
                numeric[(r, c)] = (sp[r] - sm[r]) / (2.0 * FD_STEP);
            }
        }
        worst = worst.max((numeric - &analytic).norm() / analytic.norm().max(1e-9));
    }
    worst
}

/// Two-view setup for depth triangulation: host at the origin, target
/// translated sideways, one point seen at inverse depth 0.4.
pub struct TwoView {
    pub k: edgevo::geometry::CameraIntrinsics,
    pub host: Pose,
    pub target: Pose,
    pub point: InverseDepthPoint,
    pub pixel: Vec2,
    /// Epipolar direction at the target pixel.
    pub l: Vec2,
}

pub fn two_view() -> TwoView {
    let k = edgevo::sim::default_intrinsics();
    let host = Pose::identity();
    let target = Pose::from_translation(edgevo::geometry::Vec3::new(-0.2, 0.05, 0.01));
    let point = InverseDepthPoint::new(Vec2::new(200.0, 130.0), 0.4, 0.1);
    let pixel = edgevo::geometry::project(&point, &k, &target).pixel;
    let l = edgevo::uncertainty::epipolar_direction(&target, &k, &point).unwrap();
    TwoView { k, host, target, point, pixel, l }
}

/// Edge-alignment record whose gradient makes angle `theta` with the
/// epipolar direction.
pub fn two_view_record(tv: &TwoView, theta: f64, sigma_parallel: f64, pixel: Vec2) -> MatchRecord {
    let g = nalgebra::Rotation2::new(theta) * tv.l;
    let mut r = record(0, 0, 1, pixel, g, false);
    r.sigma_parallel = sigma_parallel;
    r.cos_theta = theta.cos();
    r
}

/// Empirical over predicted standard deviation of the triangulated inverse
/// depth, with match noise of `sigma` across and `2 sigma` along the edge.
pub fn triangulation_std_ratio(seed: u64, theta: f64, sigma: f64, draws: usize) -> f64 {
    use edgevo::ba::triangulate_depth;
    use rand_distr::{Distribution, Normal};
    let mut rng = rng(seed);
    let tv = two_view();
    let across = Normal::new(0.0, sigma).unwrap();
    let along = Normal::new(0.0, 2.0 * sigma).unwrap();
    let exact = two_view_record(&tv, theta, sigma, tv.pixel);
    let g = exact.target_gradient;
    let (_, predicted) = triangulate_depth(&exact, &tv.point, &tv.host, &tv.target, &tv.k).unwrap();
    let mut sq = 0.0;
    for _ in 0..draws {
        let noisy = tv.pixel + g * across.sample(&mut rng) + edgevo::uncertainty::rot90(&g) * along.sample(&mut rng);
        let r = two_view_record(&tv, theta, sigma, noisy);
        let (d, _) = triangulate_depth(&r, &tv.point, &tv.host, &tv.target, &tv.k).unwrap();
        sq += (d - tv.point.inv_depth).powi(2);
    }
    (sq / draws as f64).sqrt() / predicted
}
