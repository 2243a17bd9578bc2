//! End-to-end odometry: tracking, keyframe creation, association and
//! windowed bundle adjustment over a sequence.
//!
//! Tracking runs on the calling thread; the window is owned by a mapping
//! worker that receives keyframes and publishes optimised snapshots. The
//! tracker collects each snapshot at a fixed point (before tracking the frame
//! after a keyframe) so runs are deterministic whether or not the worker
//! runs on its own thread.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::association::{associate, associate_point, MatchRecord};
use crate::ba::{local_ba, triangulate_depth, Window};
use crate::config::Config;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{project, InverseDepthPoint, Mat6, Pose, Vec2};
use crate::image::{build_pyramid_with, CannyDetector, CannyParams, EdgeDetector, ExternalMaskDetector, Pyramid};
use crate::keyframe::Keyframe;
use crate::metrics::{align_trajectory, ate, position_errors, rpe_drift, MetricReport, Trajectory};
use crate::sim::{default_intrinsics, illumination_schedule, render_preset, Preset};
use crate::tracker::{align, MotionEstimate, TrackingResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Edge points hosted per keyframe.
    pub points: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    /// Mean point displacement (px) that triggers a new keyframe.
    pub keyframe_flow: f64,
    /// Inlier fraction below which a new keyframe is created.
    pub keyframe_inliers: f64,
    /// Hosted points keep this many pixels from the image border.
    pub border: usize,
    /// Initial inverse-depth standard deviation relative to the inverse depth.
    pub depth_prior_ratio: f64,
    /// Radius (px) within which a transferred depth supports a new point.
    pub transfer_radius: f64,
    /// Depth assumed at start-up when the source has no depth maps.
    pub initial_depth: f64,
    /// Run the mapping worker on its own thread.
    pub threaded: bool,
    /// Frames per similarity-alignment block in evaluation.
    pub scale_interval: usize,
    /// Ground-truth travel (m) per drift segment in evaluation.
    pub drift_segment: f64,
    /// Length of rendered synthetic sequences.
    pub synthetic_frames: usize,
    pub seed: u64,
    /// Keep every n-th frame of the input.
    pub subsample: usize,
    /// Per-frame relative gain jitter of synthetic sequences.
    pub gain_jitter: f64,
    /// Peak intensity of the moving glare blob of synthetic sequences.
    pub glare: f64,
    /// Additive pixel noise of synthetic sequences.
    pub noise_sigma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            points: 800,
            canny_low: CannyParams::default().low,
            canny_high: CannyParams::default().high,
            keyframe_flow: 12.0,
            keyframe_inliers: 0.6,
            border: 8,
            depth_prior_ratio: 0.2,
            transfer_radius: 2.0,
            initial_depth: 3.0,
            threaded: true,
            scale_interval: 200,
            drift_segment: 1.0,
            synthetic_frames: 100,
            seed: 0,
            subsample: 1,
            gain_jitter: 0.0,
            glare: 0.0,
            noise_sigma: 0.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.points >= crate::tracker::MIN_TRACKED_POINTS
            && self.keyframe_flow > 0.0
            && (0.0..=1.0).contains(&self.keyframe_inliers)
            && self.depth_prior_ratio > 0.0
            && self.transfer_radius >= 0.0
            && self.initial_depth > 0.0
            && self.scale_interval >= 2
            && self.drift_segment > 0.0
            && self.synthetic_frames >= 2
            && self.subsample >= 1
            && self.gain_jitter >= 0.0
            && self.glare >= 0.0
            && self.noise_sigma >= 0.0;
        if ok {
            self.canny().validate()
        } else {
            Err(Error::InvalidParameter(format!("pipeline config {self:?}")))
        }
    }

    pub fn canny(&self) -> CannyParams {
        CannyParams {
            low: self.canny_low,
            high: self.canny_high,
        }
    }
}

/// A hosted point as it left the window.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    /// Frame index of the host keyframe.
    pub keyframe: u64,
    pub pixel: Vec2,
    pub inv_depth: f64,
    pub inv_depth_sigma: f64,
    /// Match records ever created for this point.
    pub observations: usize,
    pub depth_fixed_observations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MatchStats {
    pub records: usize,
    pub depth_fixed: usize,
    pub template_matches: usize,
    pub triangulated: usize,
    pub reassociated: usize,
    pub ba_runs: usize,
    /// Windows left unoptimised because the system was rank deficient.
    pub ba_skipped: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Estimated world → camera pose of every frame.
    pub trajectory: Trajectory,
    pub keyframes: Vec<usize>,
    /// Frames at which tracking failed and the map was re-initialised.
    pub failures: Vec<usize>,
    pub frame_ms: Vec<f64>,
    pub wall_seconds: f64,
    pub matches: MatchStats,
    pub map: Vec<MapPoint>,
}

impl RunOutput {
    /// Metrics against ground truth, if the source had any.
    pub fn report(&self, truth: &Trajectory, config: &PipelineConfig) -> Result<MetricReport> {
        let interval = Some(config.scale_interval);
        let aligned = align_trajectory(&self.trajectory, truth, interval)?;
        let drift = rpe_drift(&aligned, truth, config.drift_segment)?;
        let failed = drift.failure || !self.failures.is_empty();
        let n = self.trajectory.len();
        Ok(MetricReport {
            frames: n,
            keyframes: self.keyframes.len(),
            ate_rmse: ate(&self.trajectory, truth, interval)?,
            drift_cm_per_m: drift.drift_cm_per_m,
            failure_rate: if failed { 1.0 } else { 0.0 },
            tracking_failures: self.failures.len(),
            mean_frame_ms: self.frame_ms.iter().sum::<f64>() / n.max(1) as f64,
            frames_per_second: n as f64 / self.wall_seconds.max(1e-9),
            per_frame_errors: position_errors(&self.trajectory, truth, interval)?,
            per_frame_ms: self.frame_ms.clone(),
        })
    }
}

enum Job {
    /// Start a fresh window at this keyframe.
    Reset(Keyframe),
    /// Associate the window into this keyframe, then optimise.
    Add { keyframe: Keyframe, covariance: Mat6 },
    Finish,
}

struct Snapshot {
    window: Window,
    dropped: Vec<MapPoint>,
    stats: MatchStats,
}

enum Reply {
    Snapshot(Box<Snapshot>),
    Finished(Vec<MapPoint>),
    Failed(Error),
}

/// Owner of the keyframe window.
struct Mapper {
    config: Config,
    window: Window,
    /// Tracking covariance of each keyframe relative to its predecessor.
    covariances: BTreeMap<u64, Mat6>,
    /// (keyframe, point) → (records, depth-fixed records).
    counts: BTreeMap<(u64, usize), (usize, usize)>,
}

impl Mapper {
    fn new(config: Config) -> Self {
        Self {
            window: Window::new(config.ba.window_size),
            config,
            covariances: BTreeMap::new(),
            counts: BTreeMap::new(),
        }
    }

    fn handle(&mut self, job: Job) -> Result<Reply> {
        let mut stats = MatchStats::default();
        let mut dropped = Vec::new();
        match job {
            Job::Finish => {
                let all: Vec<Keyframe> = std::mem::take(&mut self.window.keyframes);
                return Ok(Reply::Finished(all.iter().flat_map(|k| self.map_points(k)).collect()));
            }
            Job::Reset(kf) => {
                let old = std::mem::replace(&mut self.window, Window::new(self.config.ba.window_size));
                dropped.extend(old.keyframes.iter().flat_map(|k| self.map_points(k)));
                self.window.add_keyframe(kf, Vec::new())?;
            }
            Job::Add { keyframe, covariance } => {
                self.covariances.insert(keyframe.id, covariance);
                let mut records = Vec::new();
                for host in &mut self.window.keyframes {
                    let motion = MotionEstimate {
                        pose: keyframe.pose.compose(&host.pose.inverse()),
                        covariance,
                    };
                    let found = associate(host, &keyframe, &motion, &self.config.association);
                    for r in &found {
                        if r.depth_fixed {
                            continue;
                        }
                        let hp = &mut host.points[r.host_point];
                        if let Ok((d, sigma)) = triangulate_depth(r, &hp.point, &host.pose, &keyframe.pose, &host.intrinsics) {
                            hp.point = fuse_depth(&hp.point, d, sigma);
                            stats.triangulated += 1;
                        }
                    }
                    records.extend(found);
                }
                self.count(&records, &mut stats);
                for old in self.window.add_keyframe(keyframe, records)? {
                    dropped.extend(self.map_points(&old));
                }
                self.optimize(&mut stats)?;
            }
        }
        Ok(Reply::Snapshot(Box::new(Snapshot {
            window: self.window.clone(),
            dropped,
            stats,
        })))
    }

    fn count(&mut self, records: &[MatchRecord], stats: &mut MatchStats) {
        for r in records {
            stats.records += 1;
            let c = self.counts.entry((r.host_keyframe, r.host_point)).or_default();
            c.0 += 1;
            if r.depth_fixed {
                stats.depth_fixed += 1;
                c.1 += 1;
            }
            if r.source == crate::association::MatchSource::TemplateMatch {
                stats.template_matches += 1;
            }
        }
    }

    fn optimize(&mut self, stats: &mut MatchStats) -> Result<()> {
        if self.window.keyframes.len() < 2 || self.window.observations.len() < 10 {
            return Ok(());
        }
        let assoc = self.config.association;
        let covariances = self.covariances.clone();
        let mut fresh = Vec::new();
        let mut reassociate = |w: &Window, flagged: &[usize]| -> Vec<Option<MatchRecord>> {
            flagged
                .iter()
                .map(|&oi| {
                    let obs = &w.observations[oi];
                    let host = w.keyframe(obs.host_keyframe)?;
                    let target = w.keyframe(obs.target_keyframe)?;
                    let motion = MotionEstimate {
                        pose: target.pose.compose(&host.pose.inverse()),
                        covariance: covariances.get(&target.id).copied().unwrap_or_else(Mat6::zeros),
                    };
                    let r = associate_point(host, target, &motion, &assoc, obs.host_point);
                    if let Some(r) = &r {
                        fresh.push(*r);
                    }
                    r
                })
                .collect()
        };
        let before = self.window.clone();
        match local_ba(&mut self.window, &self.config.ba, Some(&mut reassociate)) {
            Ok(report) => {
                stats.ba_runs += 1;
                stats.reassociated += report.reassociated;
                self.count(&fresh, stats);
                Ok(())
            }
            // a degenerate window keeps its tracked poses and depths
            Err(Error::RankDeficient(dirs)) => {
                log::warn!("skipping bundle adjustment, unobservable: {}", dirs.join(", "));
                self.window = before;
                stats.ba_skipped += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn map_points(&self, kf: &Keyframe) -> Vec<MapPoint> {
        kf.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (n, fixed) = self.counts.get(&(kf.id, i)).copied().unwrap_or((0, 0));
                MapPoint {
                    keyframe: kf.id,
                    pixel: p.point.pixel,
                    inv_depth: p.point.inv_depth,
                    inv_depth_sigma: p.point.inv_depth_sigma,
                    observations: n,
                    depth_fixed_observations: fixed,
                }
            })
            .collect()
    }
}

/// Inverse-variance fusion of a triangulated inverse depth into a point.
fn fuse_depth(point: &InverseDepthPoint, d: f64, sigma: f64) -> InverseDepthPoint {
    let s0 = point.inv_depth_sigma;
    if !(sigma > 0.0 && sigma.is_finite()) || !(s0 > 0.0) {
        return *point;
    }
    let (w0, w1) = (1.0 / (s0 * s0), 1.0 / (sigma * sigma));
    let fused = (point.inv_depth * w0 + d * w1) / (w0 + w1);
    InverseDepthPoint::new(point.pixel, fused, (1.0 / (w0 + w1)).sqrt())
}

/// Mapping worker, inline or on its own thread. At most one job is in flight.
enum Worker {
    Inline { mapper: Box<Mapper>, reply: Option<Reply> },
    Threaded {
        jobs: Option<mpsc::Sender<Job>>,
        replies: mpsc::Receiver<Reply>,
        handle: Option<std::thread::JoinHandle<()>>,
    },
}

impl Worker {
    fn new(config: &Config) -> Self {
        let mapper = Mapper::new(config.clone());
        if !config.pipeline.threaded {
            return Worker::Inline {
                mapper: Box::new(mapper),
                reply: None,
            };
        }
        let (jobs, job_rx) = mpsc::channel::<Job>();
        let (reply_tx, replies) = mpsc::channel();
        let handle = std::thread::spawn(move || {
            let mut mapper = mapper;
            for job in job_rx {
                let finish = matches!(job, Job::Finish);
                let reply = mapper.handle(job).unwrap_or_else(Reply::Failed);
                if reply_tx.send(reply).is_err() || finish {
                    break;
                }
            }
        });
        Worker::Threaded {
            jobs: Some(jobs),
            replies,
            handle: Some(handle),
        }
    }

    fn submit(&mut self, job: Job) -> Result<()> {
        match self {
            Worker::Inline { mapper, reply } => {
                *reply = Some(mapper.handle(job).unwrap_or_else(Reply::Failed));
                Ok(())
            }
            Worker::Threaded { jobs, .. } => jobs
                .as_ref()
                .and_then(|j| j.send(job).ok())
                .ok_or_else(|| Error::InvalidParameter("mapping worker stopped".into())),
        }
    }

    fn collect(&mut self) -> Result<Reply> {
        let reply = match self {
            Worker::Inline { reply, .. } => reply.take(),
            Worker::Threaded { replies, .. } => replies.recv().ok(),
        };
        match reply {
            Some(Reply::Failed(e)) => Err(e),
            Some(r) => Ok(r),
            None => Err(Error::InvalidParameter("mapping worker stopped".into())),
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        if let Worker::Threaded { jobs, handle, .. } = self {
            // closing the channel ends the worker loop
            jobs.take();
            if let Some(h) = handle.take() {
                let _ = h.join();
            }
        }
    }
}

/// Hosted points for a new keyframe: sub-pixel edge locations at least
/// `border` px inside the image for which `depth` supplies an inverse depth
/// and its standard deviation, stride-sampled down to the point budget.
fn host_points(
    pyramid: &Pyramid,
    cfg: &PipelineConfig,
    mut depth: impl FnMut(&Vec2) -> Option<(f64, f64)>,
) -> Vec<InverseDepthPoint> {
    let edges = &pyramid.finest().edges;
    let b = cfg.border;
    let candidates: Vec<(Vec2, (f64, f64))> = edges
        .edge_pixels()
        .into_iter()
        .filter(|&(x, y)| x >= b && y >= b && x + b < edges.width && y + b < edges.height)
        .filter_map(|(x, y)| {
            let p = edges.subpixel_at(x, y);
            depth(&p).filter(|(d, _)| *d > 0.0 && d.is_finite()).map(|d| (p, d))
        })
        .collect();
    let stride = (candidates.len() as f64 / cfg.points as f64).max(1.0);
    let mut out = Vec::with_capacity(cfg.points);
    let mut s = 0.0;
    while (s as usize) < candidates.len() && out.len() < cfg.points {
        let (p, (d, sigma)) = candidates[s as usize];
        out.push(InverseDepthPoint::new(p, d, sigma));
        s += stride;
    }
    out
}

/// Window points seen from `pose` as (pixel, inverse depth, its standard
/// deviation), splatted to the nearest pixel; the closest surface wins.
type Splat = Option<(Vec2, f64, f64)>;

fn transfer_depths(window: &Window, pose: &Pose, width: usize, height: usize) -> Vec<Splat> {
    let mut grid: Vec<Splat> = vec![None; width * height];
    for kf in &window.keyframes {
        let rel = pose.compose(&kf.pose.inverse());
        for (_, hp) in kf.active_points() {
            let pr = project(&hp.point, &kf.intrinsics, &rel);
            if !pr.valid || !(pr.depth > 0.0) {
                continue;
            }
            let (x, y) = (pr.pixel.x.round(), pr.pixel.y.round());
            if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
                continue;
            }
            let cell = &mut grid[y as usize * width + x as usize];
            let inv = 1.0 / pr.depth;
            // first order: the relative spread of inverse depth is preserved
            let sigma = hp.point.inv_depth_sigma * inv / hp.point.inv_depth;
            if cell.is_none_or(|(_, d, _)| inv > d) {
                *cell = Some((pr.pixel, inv, sigma));
            }
        }
    }
    grid
}

fn nearest_transfer(grid: &[Splat], width: usize, height: usize, p: &Vec2, radius: f64) -> Option<(f64, f64)> {
    let r = radius.ceil() as i64;
    let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
    let mut best: Option<(f64, (f64, f64))> = None;
    for y in (cy - r).max(0)..=(cy + r).min(height as i64 - 1) {
        for x in (cx - r).max(0)..=(cx + r).min(width as i64 - 1) {
            if let Some((q, d, sigma)) = grid[y as usize * width + x as usize] {
                let dist = (q - p).norm();
                if dist <= radius && best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, (d, sigma)));
                }
            }
        }
    }
    best.map(|(_, d)| d)
}

/// Tracking state between frames.
struct Frontend<'a> {
    data: &'a Dataset,
    config: &'a Config,
    worker: Worker,
    /// Latest optimised window.
    snapshot: Window,
    /// Keyframe the tracker aligns against.
    reference: Keyframe,
    /// A submitted job whose snapshot has not been collected.
    pending: bool,
    /// Latest pose of every keyframe, by id.
    keyframe_poses: BTreeMap<u64, Pose>,
    /// Per frame: reference keyframe id and frame pose relative to it.
    relative: Vec<(u64, Pose)>,
    world: Vec<Pose>,
    stats: MatchStats,
    map: Vec<MapPoint>,
    keyframes: Vec<usize>,
    failures: Vec<usize>,
    /// Previous frame when it was tracked with an acceptable inlier fraction
    /// and did not become a keyframe.
    previous: Option<(usize, Arc<Pyramid>, TrackingResult)>,
}

impl Frontend<'_> {
    fn pyramid(&self, i: usize) -> Result<Pyramid> {
        let levels = self.config.tracker.levels;
        let frame = &self.data.frames[i];
        match &self.data.masks {
            Some(masks) => build_pyramid_with(
                frame,
                levels,
                &ExternalMaskDetector {
                    width: frame.width,
                    height: frame.height,
                    mask: masks[i].clone(),
                } as &dyn EdgeDetector,
            ),
            None => build_pyramid_with(frame, levels, &CannyDetector { params: self.config.pipeline.canny() }),
        }
    }

    fn absorb(&mut self, reply: Reply) {
        match reply {
            Reply::Snapshot(s) => {
                let s = *s;
                for kf in &s.window.keyframes {
                    self.keyframe_poses.insert(kf.id, kf.pose);
                }
                if let Some(kf) = s.window.keyframe(self.reference.id) {
                    self.reference = kf.clone();
                }
                self.map.extend(s.dropped);
                let t = &mut self.stats;
                t.records += s.stats.records;
                t.depth_fixed += s.stats.depth_fixed;
                t.template_matches += s.stats.template_matches;
                t.triangulated += s.stats.triangulated;
                t.reassociated += s.stats.reassociated;
                t.ba_runs += s.stats.ba_runs;
                t.ba_skipped += s.stats.ba_skipped;
                self.snapshot = s.window;
            }
            Reply::Finished(points) => self.map.extend(points),
            Reply::Failed(_) => {}
        }
    }

    fn sync(&mut self) -> Result<()> {
        if self.pending {
            self.pending = false;
            let reply = self.worker.collect()?;
            self.absorb(reply);
        }
        Ok(())
    }

    /// Keyframe from ground-truth pose and depth when available.
    fn start_keyframe(&mut self, i: usize, pyramid: Arc<Pyramid>, fallback: Pose) -> Result<Keyframe> {
        let pose = self.data.truth.as_ref().map_or(fallback, |t| t[i]);
        let cfg = &self.config.pipeline;
        let prior = |d: f64| (d, cfg.depth_prior_ratio * d);
        let points = match &self.data.depths {
            Some(_) => host_points(&pyramid, cfg, |p| self.data.inv_depth_at(i, p).map(prior)),
            None => host_points(&pyramid, cfg, |_| Some(prior(1.0 / cfg.initial_depth))),
        };
        Ok(Keyframe::new(i as u64, pose, self.data.intrinsics, pyramid).with_points(points))
    }

    fn reset(&mut self, i: usize, pyramid: Arc<Pyramid>, fallback: Pose) -> Result<()> {
        self.sync()?;
        let kf = self.start_keyframe(i, pyramid, fallback)?;
        self.keyframe_poses.insert(kf.id, kf.pose);
        self.reference = kf.clone();
        self.keyframes.push(i);
        self.worker.submit(Job::Reset(kf))?;
        self.pending = true;
        self.sync()?;
        Ok(())
    }

    fn new_keyframe(&mut self, i: usize, pyramid: Arc<Pyramid>, tracking: &TrackingResult) -> Result<()> {
        self.sync()?;
        let ref_pose = self.keyframe_poses[&self.reference.id];
        let pose = tracking.pose.compose(&ref_pose);
        let k = self.data.intrinsics;
        let grid = transfer_depths(&self.snapshot, &pose, k.width, k.height);
        let radius = self.config.pipeline.transfer_radius;
        let points = host_points(&pyramid, &self.config.pipeline, |p| {
            nearest_transfer(&grid, k.width, k.height, p, radius)
        });
        let mut kf = Keyframe::new(i as u64, pose, k, pyramid).with_points(points);
        kf.residual_variance = tracking.residual_variance;
        self.keyframe_poses.insert(kf.id, pose);
        self.reference = kf.clone();
        self.keyframes.push(i);
        self.worker.submit(Job::Add {
            keyframe: kf,
            covariance: tracking.pose_covariance,
        })?;
        self.pending = true;
        Ok(())
    }

    fn predicted(&self, i: usize) -> Pose {
        match i {
            0 => Pose::identity(),
            1 => self.world[0],
            _ => {
                let velocity = self.world[i - 1].compose(&self.world[i - 2].inverse());
                velocity.compose(&self.world[i - 1])
            }
        }
    }

    fn step(&mut self, i: usize) -> Result<()> {
        let pyramid = Arc::new(self.pyramid(i)?);
        if i == 0 {
            self.reset(0, pyramid, Pose::identity())?;
            self.relative.push((0, Pose::identity()));
            self.world.push(self.keyframe_poses[&0]);
            return Ok(());
        }
        self.sync()?;
        let ref_pose = self.keyframe_poses[&self.reference.id];
        let init = self.predicted(i).compose(&ref_pose.inverse());
        let tracked = align(&self.reference, &pyramid, init, &self.config.tracker);
        let tracking = match tracked {
            Ok(t) if !t.failed => t,
            other => {
                log::warn!(
                    "frame {i}: tracking failed ({}), re-initialising",
                    other.err().map_or("divergence".to_string(), |e| e.to_string())
                );
                self.failures.push(i);
                let fallback = self.predicted(i);
                self.reset(i, pyramid, fallback)?;
                self.relative.push((i as u64, Pose::identity()));
                self.world.push(self.keyframe_poses[&(i as u64)]);
                return Ok(());
            }
        };
        let min_inliers = self.config.pipeline.keyframe_inliers;
        let previous = self.previous.take();
        let (tracking, ref_pose) = match previous {
            // A sharp quality drop is usually a wrong basin, not a bad frame:
            // the last good frame becomes the keyframe and this one is re-tracked
            // against it.
            Some((j, prev_pyramid, prev)) if tracking.inlier_fraction < min_inliers && j + 1 == i => {
                self.new_keyframe(j, prev_pyramid, &prev)?;
                self.relative[j] = (j as u64, Pose::identity());
                let kf_pose = self.keyframe_poses[&(j as u64)];
                let init = self.predicted(i).compose(&kf_pose.inverse());
                match align(&self.reference, &pyramid, init, &self.config.tracker) {
                    Ok(t) if !t.failed && t.inlier_fraction > tracking.inlier_fraction => (t, kf_pose),
                    _ => {
                        let world = tracking.pose.compose(&ref_pose);
                        let mut t = tracking;
                        t.pose = world.compose(&kf_pose.inverse());
                        (t, kf_pose)
                    }
                }
            }
            _ => (tracking, ref_pose),
        };
        let pc = &self.config.pipeline;
        if tracking.mean_flow > pc.keyframe_flow || tracking.inlier_fraction < pc.keyframe_inliers {
            self.new_keyframe(i, pyramid, &tracking)?;
            self.relative.push((i as u64, Pose::identity()));
        } else {
            self.relative.push((self.reference.id, tracking.pose));
            self.previous = Some((i, pyramid, tracking.clone()));
        }
        self.world.push(tracking.pose.compose(&ref_pose));
        Ok(())
    }
}

/// Renders a preset under the synthetic-sequence settings of `config`:
/// `synthetic_frames` frames with the configured disturbances, then every
/// `subsample`-th frame kept.
pub fn synthetic_dataset(which: Preset, config: &PipelineConfig) -> Result<Dataset> {
    config.validate()?;
    let k = default_intrinsics();
    let n = config.synthetic_frames;
    let light = illumination_schedule(n, config.gain_jitter, config.glare, &k, config.seed);
    let seq = render_preset(which, n, config.seed, &light, config.noise_sigma)?;
    Ok(Dataset::from(seq.subsample(config.subsample)?))
}

/// Runs odometry over every frame of `data`.
pub fn run_pipeline(data: &Dataset, config: &Config) -> Result<RunOutput> {
    config.validate()?;
    data.validate()?;
    let start = Instant::now();
    let placeholder = Keyframe::new(u64::MAX, Pose::identity(), data.intrinsics, Arc::new(Pyramid { levels: Vec::new() }));
    let mut fe = Frontend {
        data,
        config,
        worker: Worker::new(config),
        snapshot: Window::new(config.ba.window_size),
        reference: placeholder,
        pending: false,
        keyframe_poses: BTreeMap::new(),
        relative: Vec::with_capacity(data.len()),
        world: Vec::with_capacity(data.len()),
        stats: MatchStats::default(),
        map: Vec::new(),
        keyframes: Vec::new(),
        failures: Vec::new(),
        previous: None,
    };
    let mut frame_ms = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let t0 = Instant::now();
        fe.step(i)?;
        frame_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        log::debug!("frame {i}: {:.1} ms", frame_ms[i]);
    }
    fe.sync()?;
    fe.worker.submit(Job::Finish)?;
    let reply = fe.worker.collect()?;
    fe.absorb(reply);
    let poses: Vec<Pose> = fe
        .relative
        .iter()
        .map(|(id, rel)| rel.compose(&fe.keyframe_poses[id]))
        .collect();
    let trajectory = Trajectory::new(data.timestamps.clone(), poses)?;
    Ok(RunOutput {
        trajectory,
        keyframes: fe.keyframes.clone(),
        failures: fe.failures.clone(),
        frame_ms,
        wall_seconds: start.elapsed().as_secs_f64(),
        matches: fe.stats,
        map: std::mem::take(&mut fe.map),
    })
}
