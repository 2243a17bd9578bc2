use std::path::PathBuf;

/// Errors produced anywhere in the odometry engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge mask contains no edge pixels")]
    EmptyMask,
    #[error("rotation angle {angle} is too close to pi for a stable logarithm")]
    NearSingularLog { angle: f64 },
    #[error("projection is invalid (behind camera or outside the image)")]
    InvalidProjection,
    #[error("not enough points: have {have}, need {need}")]
    InsufficientPoints { have: usize, need: usize },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPositiveSemiDefinite(f64),
    #[error("depth is poorly observable (|cos theta| = {cos_theta:.3e})")]
    PoorlyObservable { cos_theta: f64 },
    #[error("no epipolar direction: zero baseline or point at the epipole")]
    NoEpipolarDirection,
    #[error("pixel ({0}, {1}) is not on the edge mask")]
    NotOnEdge(usize, usize),
    #[error("keyframe id {0} already present in the window")]
    DuplicateKeyframe(u64),
    #[error("rank-deficient system after gauge fixing; deficient directions: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("trajectory length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("camera center lies inside scene geometry at frame {0}")]
    CameraInsideGeometry(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
