use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("user index {index} out of range ({n_users} users)")]
    IndexOutOfRange { index: usize, n_users: usize },

    /// The composite channel of a user is exactly zero, so channel-matched
    /// beamforming and the SINR ratios are undefined.
    #[error("user {0} has a zero composite channel")]
    DegenerateUser(usize),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("user {0} is unreachable: both direct and reflected links are blocked")]
    UnreachableUser(usize),

    /// The objective is -inf because a user has zero transmit power.
    #[error("objective is -inf (user {0} has zero power); gradient undefined")]
    ZeroPower(usize),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
