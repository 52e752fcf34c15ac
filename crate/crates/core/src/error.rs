use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("duplicate team `{0}`")]
    DuplicateTeam(String),

    #[error("kit {kit} of team `{team}` is assigned to both `{first}` and `{second}`")]
    DuplicateKit {
        team: String,
        kit: u8,
        first: String,
        second: String,
    },

    #[error("duplicate ground-truth entry for track {0}")]
    DuplicateTrack(u32),

    #[error("duplicate record for frame {frame}, track {track_id}")]
    DuplicateRecord { frame: u32, track_id: u32 },

    #[error("frame {index} out of range (source has {count} frames)")]
    FrameOutOfRange { index: u32, count: u32 },

    #[error("frame {index} ({}): {message}", path.display())]
    FrameDecode {
        index: u32,
        path: PathBuf,
        message: String,
    },

    #[error("frame {index}: expected {expected_w}x{expected_h}, got {w}x{h}")]
    FrameDimensions {
        index: u32,
        expected_w: u32,
        expected_h: u32,
        w: u32,
        h: u32,
    },

    #[error("no frame source available")]
    NoFrames,

    #[error("bounding box lies entirely outside the frame")]
    OutOfFrame,

    #[error("insufficient sample base: {0} samples, need at least 2")]
    InsufficientSamples(usize),

    #[error("degenerate data: all samples are identical")]
    DegenerateSamples,

    #[error("team `{0}` not found in team db")]
    UnknownTeam(String),

    #[error("no player #{kit} rostered for team `{team}`; rostered: {roster}")]
    UnknownPlayer {
        team: String,
        kit: u32,
        roster: String,
    },

    #[error("OCR engine `{0}` is not available")]
    EngineMissing(String),

    #[error("OCR engine `{engine}` failed: {message}")]
    Engine { engine: String, message: String },

    #[error("synthetic spec: {0}")]
    Synthetic(String),

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("schema validation failed for {kind}: {message}")]
    Schema { kind: String, message: String },

    #[error("{}: {source}", path.display())]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn path(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Path {
            path: path.into(),
            source,
        }
    }
}
