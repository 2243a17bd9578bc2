//! Image sequences on disk.
//!
//! A dataset directory holds:
//!
//! ```text
//! intrinsics.txt      fx fy cx cy width height
//! frames/NNNNNN.pgm   8- or 16-bit grayscale frames, in name order
//! groundtruth.txt     optional, TUM trajectory (camera → world), one line per frame
//! depth/NNNNNN.pfm    optional, per-pixel depth along the optical axis
//! masks/NNNNNN.pgm    optional, edge masks (non-zero = edge) replacing Canny
//! ```

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose, Vec2};
use crate::image::{read_pgm, write_pgm, GrayImage};
use crate::metrics::Trajectory;
use crate::sim::{inverse_depth_at, Sequence};

/// Frames plus whatever ground truth is available.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<GrayImage>,
    pub timestamps: Vec<f64>,
    /// World → camera, one per frame.
    pub truth: Option<Vec<Pose>>,
    pub depths: Option<Vec<Vec<f64>>>,
    pub masks: Option<Vec<Vec<bool>>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn inv_depth_at(&self, frame: usize, p: &Vec2) -> Option<f64> {
        let depths = self.depths.as_ref()?;
        inverse_depth_at(&depths[frame], self.intrinsics.width, self.intrinsics.height, p)
    }

    pub fn truth_trajectory(&self) -> Option<Trajectory> {
        let poses = self.truth.clone()?;
        Trajectory::new(self.timestamps.clone(), poses).ok()
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        let n = self.frames.len();
        if n == 0 {
            return Err(Error::InvalidParameter("dataset has no frames".into()));
        }
        let (w, h) = (self.intrinsics.width, self.intrinsics.height);
        if let Some(bad) = self.frames.iter().position(|f| (f.width, f.height) != (w, h)) {
            return Err(Error::InvalidParameter(format!(
                "frame {bad} is {}x{}, intrinsics say {w}x{h}",
                self.frames[bad].width, self.frames[bad].height
            )));
        }
        let lens = [
            Some(self.timestamps.len()),
            self.truth.as_ref().map(Vec::len),
            self.depths.as_ref().map(Vec::len),
            self.masks.as_ref().map(Vec::len),
        ];
        for len in lens.into_iter().flatten() {
            if len != n {
                return Err(Error::LengthMismatch(len, n));
            }
        }
        if self.depths.iter().flatten().any(|d| d.len() != w * h) {
            return Err(Error::InvalidParameter("depth map size differs from the frames".into()));
        }
        if self.masks.iter().flatten().any(|m| m.len() != w * h) {
            return Err(Error::InvalidParameter("edge mask size differs from the frames".into()));
        }
        Ok(())
    }
}

impl From<Sequence> for Dataset {
    fn from(seq: Sequence) -> Self {
        Self {
            intrinsics: seq.intrinsics,
            frames: seq.frames,
            timestamps: seq.timestamps,
            truth: Some(seq.poses),
            depths: Some(seq.depths),
            masks: None,
        }
    }
}

fn numbered(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn frame_name(i: usize, ext: &str) -> String {
    format!("{i:06}.{ext}")
}

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: Vec<f64> = text
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad intrinsics value {s:?}"))))
        .collect::<Result<_>>()?;
    if v.len() != 6 || v[4].fract() != 0.0 || v[5].fract() != 0.0 {
        return Err(Error::Parse("intrinsics must be: fx fy cx cy width height".into()));
    }
    CameraIntrinsics::new(v[0], v[1], v[2], v[3], v[4] as usize, v[5] as usize)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let intrinsics = read_intrinsics(&dir.join("intrinsics.txt"))?;
    let frames = numbered(&dir.join("frames"), "pgm")?
        .iter()
        .map(|p| read_pgm(p))
        .collect::<Result<Vec<_>>>()?;
    let gt_path = dir.join("groundtruth.txt");
    let (timestamps, truth) = if gt_path.exists() {
        let traj = Trajectory::read_tum(&gt_path)?;
        (traj.timestamps, Some(traj.poses))
    } else {
        ((0..frames.len()).map(|i| i as f64 / 30.0).collect(), None)
    };
    let depth_dir = dir.join("depth");
    let depths = if depth_dir.is_dir() {
        Some(numbered(&depth_dir, "pfm")?.iter().map(|p| read_pfm(p).map(|(_, _, d)| d)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let mask_dir = dir.join("masks");
    let masks = if mask_dir.is_dir() {
        Some(
            numbered(&mask_dir, "pgm")?
                .iter()
                .map(|p| read_pgm(p).map(|m| m.data.iter().map(|&v| v > 0.0).collect()))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let ds = Dataset {
        intrinsics,
        frames,
        timestamps,
        truth,
        depths,
        masks,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    ds.validate()?;
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    mkdir(&dir.join("frames"))?;
    let k = &ds.intrinsics;
    let intr = format!("{} {} {} {} {} {}\n", k.fx, k.fy, k.cx, k.cy, k.width, k.height);
    let path = dir.join("intrinsics.txt");
    std::fs::write(&path, intr).map_err(|e| Error::io(&path, e))?;
    for (i, f) in ds.frames.iter().enumerate() {
        write_pgm(&dir.join("frames").join(frame_name(i, "pgm")), f)?;
    }
    if let Some(traj) = ds.truth_trajectory() {
        traj.write_tum(&dir.join("groundtruth.txt"))?;
    }
    if let Some(depths) = &ds.depths {
        mkdir(&dir.join("depth"))?;
        for (i, d) in depths.iter().enumerate() {
            write_pfm(&dir.join("depth").join(frame_name(i, "pfm")), k.width, k.height, d)?;
        }
    }
    if let Some(masks) = &ds.masks {
        mkdir(&dir.join("masks"))?;
        for (i, m) in masks.iter().enumerate() {
            let img = GrayImage::from_fn(k.width, k.height, |x, y| if m[y * k.width + x] { 1.0 } else { 0.0 });
            write_pgm(&dir.join("masks").join(frame_name(i, "pgm")), &img)?;
        }
    }
    Ok(())
}

/// Single-channel PFM, little endian. Rows are stored bottom to top.
pub fn write_pfm(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<()> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for y in (0..height).rev() {
        for x in 0..width {
            out.extend_from_slice(&(data[y * width + x] as f32).to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Parse(format!("{}: {m}", path.display()));
    // three whitespace-terminated header tokens, then raw floats
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "Pf" {
        return Err(bad("not a single-channel PFM"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("bad scale"))?;
    if bytes.len() < pos + 4 * width * height {
        return Err(bad("truncated data"));
    }
    let mut data = vec![0.0; width * height];
    for (i, chunk) in bytes[pos..pos + 4 * width * height].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if scale < 0.0 { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, y) = (i % width, height - 1 - i / width);
        data[y * width + x] = v as f64;
    }
    Ok((width, height, data))
}
