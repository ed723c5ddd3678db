use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate odds: p_w + p_l = 0, combat never ends")]
    DegenerateOdds,

    #[error("hypergeometric series does not converge at z = {0}")]
    NonConvergence(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unknown heuristic strategy id {0} (expected 0..=8)")]
    UnknownStrategy(u8),

    #[error("invalid solver config: {0}")]
    InvalidConfig(String),

    #[error("state (s_h={s_h}, s_o={s_o}, l={l}) is outside the table bounds")]
    OutOfBounds { s_h: i32, s_o: i32, l: i32 },

    #[error("successor (s_h={s_h}, s_o={s_o}, l={l}) has not been computed yet")]
    MissingSuccessor { s_h: i32, s_o: i32, l: i32 },

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    #[error("table format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
