use crate::map::VoxelKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate ray: origin and endpoint coincide")]
    DegenerateRay,

    #[error("ray rejected: {0}")]
    InvalidRay(&'static str),

    #[error("{what}: bad magic bytes (expected {expected:?})")]
    BadMagic {
        what: &'static str,
        expected: &'static str,
    },

    #[error("{what}: unsupported version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: u16,
        expected: u16,
    },

    #[error("{0}: truncated record")]
    Truncated(&'static str),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("conflicting hand labels for {} voxel(s): {:?}", .0.len(), .0)]
    LabelConflict(Vec<VoxelKey>),

    #[error("collision layer must be empty before hand-label initialization")]
    LayerNotEmpty,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Maps an I/O error raised while decoding `what`, turning an early EOF into
    /// [`Error::Truncated`].
    pub fn decoding(what: &'static str, err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated(what)
        } else {
            Error::Io(err)
        }
    }
}
