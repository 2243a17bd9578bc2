//! Trajectories, alignment and error metrics.

use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Pose, Vec3};

/// Drift (cm/m) beyond which a run counts as failed.
pub const FAILURE_CAP_CM_PER_M: f64 = 30.0;

/// Timestamped world → camera poses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub timestamps: Vec<f64>,
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(timestamps: Vec<f64>, poses: Vec<Pose>) -> Result<Self> {
        if timestamps.len() != poses.len() {
            return Err(Error::LengthMismatch(timestamps.len(), poses.len()));
        }
        Ok(Self { timestamps, poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn centers(&self) -> Vec<Vec3> {
        self.poses.iter().map(Pose::center).collect()
    }

    /// Cumulative camera path length at every pose.
    pub fn path_lengths(&self) -> Vec<f64> {
        let c = self.centers();
        let mut acc = vec![0.0; c.len()];
        for i in 1..c.len() {
            acc[i] = acc[i - 1] + (c[i] - c[i - 1]).norm();
        }
        acc
    }

    /// TUM format: `timestamp tx ty tz qx qy qz qw`, camera → world.
    pub fn write_tum(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        for (t, p) in self.timestamps.iter().zip(&self.poses) {
            let inv = p.inverse();
            let q = inv.quaternion();
            let c = inv.translation;
            s.push_str(&format!(
                "{t:.6} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}\n",
                c.x, c.y, c.z, q[0], q[1], q[2], q[3]
            ));
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read_tum(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_tum(&text)
    }

    /// KITTI odometry poses: twelve numbers per line, a row-major 3×4
    /// camera → world matrix. Timestamps are frame indices.
    pub fn read_kitti(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut traj = Trajectory::default();
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let v = parse_numbers(line)?;
            if v.len() != 12 {
                return Err(Error::Parse(format!("KITTI pose line {} has {} values", i + 1, v.len())));
            }
            let r = Mat3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
            let t = Vec3::new(v[3], v[7], v[11]);
            traj.timestamps.push(i as f64);
            traj.poses.push(Pose::new(r, t).orthonormalized().inverse());
        }
        Ok(traj)
    }
}

fn parse_numbers(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))))
        .collect()
}

pub fn parse_tum(text: &str) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = parse_numbers(line)?;
        if v.len() != 8 {
            return Err(Error::Parse(format!("TUM line has {} values: {line:?}", v.len())));
        }
        let cam_to_world = Pose::from_quaternion(Vec3::new(v[1], v[2], v[3]), [v[4], v[5], v[6], v[7]]);
        traj.timestamps.push(v[0]);
        traj.poses.push(cam_to_world.inverse());
    }
    Ok(traj)
}

/// Similarity `dst ≈ s·R·src + t` minimising squared error (Umeyama).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }

    /// Maps a world → camera pose into the aligned world frame.
    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        let c = self.apply(&pose.center());
        let r_wc = self.rotation * pose.rotation.transpose();
        let r_cw = r_wc.transpose();
        Pose::new(r_cw, -(r_cw * c))
    }
}

pub fn umeyama(src: &[Vec3], dst: &[Vec3], with_scale: bool) -> Result<Similarity> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch(src.len(), dst.len()));
    }
    let n = src.len();
    if n == 0 {
        return Err(Error::InsufficientPoints { have: 0, need: 1 });
    }
    let mean = |v: &[Vec3]| v.iter().fold(Vec3::zeros(), |a, b| a + b) / n as f64;
    let (ms, md) = (mean(src), mean(dst));
    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s - ms, d - md);
        cov += b * a.transpose();
        var_s += a.norm_squared();
    }
    cov /= n as f64;
    var_s /= n as f64;
    if var_s < 1e-18 {
        // all source points coincide: translation only
        return Ok(Similarity {
            scale: 1.0,
            rotation: Mat3::identity(),
            translation: md - ms,
        });
    }
    let svd = cov.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut s_mat = Mat3::identity();
    if (u.determinant() * vt.determinant()) < 0.0 {
        s_mat[(2, 2)] = -1.0;
    }
    let rotation = u * s_mat * vt;
    let scale = if with_scale {
        (svd.singular_values.component_mul(&s_mat.diagonal())).sum() / var_s
    } else {
        1.0
    };
    Ok(Similarity {
        scale,
        rotation,
        translation: md - rotation * ms * scale,
    })
}

/// Aligns each block of `interval` poses to the truth with its own
/// similarity transform. `None` leaves the estimate untouched.
pub fn align_trajectory(estimated: &Trajectory, truth: &Trajectory, interval: Option<usize>) -> Result<Trajectory> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch(estimated.len(), truth.len()));
    }
    let Some(interval) = interval else {
        return Ok(estimated.clone());
    };
    let interval = interval.max(3);
    let n = estimated.len();
    let (ce, ct) = (estimated.centers(), truth.centers());
    let mut out = estimated.clone();
    let mut start = 0;
    while start < n {
        let mut end = (start + interval).min(n);
        // fold a short tail into this block
        if n - end < 3 {
            end = n;
        }
        let sim = umeyama(&ce[start..end], &ct[start..end], true)?;
        for i in start..end {
            out.poses[i] = sim.apply_pose(&estimated.poses[i]);
        }
        start = end;
    }
    Ok(out)
}

/// Per-pose translation errors after alignment.
pub fn position_errors(estimated: &Trajectory, truth: &Trajectory, interval: Option<usize>) -> Result<Vec<f64>> {
    let aligned = align_trajectory(estimated, truth, interval)?;
    Ok(aligned
        .centers()
        .iter()
        .zip(truth.centers())
        .map(|(a, b)| (a - b).norm())
        .collect())
}

/// Absolute trajectory error (RMSE of camera positions) after per-interval
/// similarity alignment; `None` disables alignment.
pub fn ate(estimated: &Trajectory, truth: &Trajectory, scale_correction_interval: Option<usize>) -> Result<f64> {
    let e = position_errors(estimated, truth, scale_correction_interval)?;
    if e.is_empty() {
        return Ok(0.0);
    }
    Ok((e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Mean relative translation error per travelled distance (cm/m), with
    /// each segment capped at the failure threshold.
    pub drift_cm_per_m: f64,
    pub failure: bool,
    pub segments: Vec<f64>,
}

/// Relative translation drift over segments of `segment_length` metres of
/// ground-truth travel starting at every pose.
pub fn rpe_drift(estimated: &Trajectory, truth: &Trajectory, segment_length: f64) -> Result<DriftReport> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch(estimated.len(), truth.len()));
    }
    if segment_length <= 0.0 {
        return Err(Error::InvalidParameter("segment length must be positive".into()));
    }
    let n = truth.len();
    let path = truth.path_lengths();
    let mut pairs = Vec::new();
    for i in 0..n {
        if let Some(j) = (i + 1..n).find(|&j| path[j] - path[i] >= segment_length) {
            pairs.push((i, j));
        }
    }
    if pairs.is_empty() && n >= 2 && path[n - 1] > 0.0 {
        pairs.push((0, n - 1));
    }
    let mut segments = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        // displacement of camera j expressed in camera i
        let rel_est = estimated.poses[i].rotation * (estimated.poses[j].center() - estimated.poses[i].center());
        let rel_gt = truth.poses[i].rotation * (truth.poses[j].center() - truth.poses[i].center());
        let dist = path[j] - path[i];
        let err = (rel_est - rel_gt).norm() / dist * 100.0;
        segments.push(if err.is_finite() { err } else { f64::INFINITY });
    }
    let failure = segments.iter().any(|&s| s > FAILURE_CAP_CM_PER_M);
    let drift = if segments.is_empty() {
        0.0
    } else {
        segments.iter().map(|s| s.min(FAILURE_CAP_CM_PER_M)).sum::<f64>() / segments.len() as f64
    };
    Ok(DriftReport {
        drift_cm_per_m: drift,
        failure,
        segments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricReport {
    pub frames: usize,
    pub keyframes: usize,
    pub ate_rmse: f64,
    pub drift_cm_per_m: f64,
    /// Failed runs over runs (0 or 1 for a single run).
    pub failure_rate: f64,
    pub tracking_failures: usize,
    pub mean_frame_ms: f64,
    pub frames_per_second: f64,
    pub per_frame_errors: Vec<f64>,
    pub per_frame_ms: Vec<f64>,
}
