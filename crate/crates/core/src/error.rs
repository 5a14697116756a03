//! Error type shared across the crate.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::{LinkId, UserId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("duplicate user id {user}")]
    DuplicateUser { user: UserId },

    #[error("link {link} appears more than once in the instance")]
    DuplicateLink { link: LinkId },

    #[error("allocation references unknown pair (user {user}, link {link})")]
    UnknownLink { user: UserId, link: LinkId },

    #[error("power {power} mW outside [0, {p_max}] mW on link {link}")]
    PowerOutOfRange {
        link: LinkId,
        power: f64,
        p_max: f64,
    },

    #[error("efficiency guess must be positive, got {ee}")]
    NonPositiveEeGuess { ee: f64 },

    #[error("active link set is empty")]
    EmptyActiveSet,

    #[error("link {link} of user {user} has zero gain; exclude it before solving")]
    ZeroGainLink { user: UserId, link: LinkId },

    #[error("fixed circuit power must be positive for the efficiency ratio to attain a maximum")]
    NonPositiveCircuitPower,

    #[error("user {user} has no links")]
    NoLinks { user: UserId },

    #[error("no user has a positive-gain link; nothing to schedule")]
    NoViableLinks,

    #[error("{count} candidate links exceed the {limit}-link enumeration limit")]
    TooManyLinks { count: usize, limit: usize },

    #[error("standby unit for link {link} admitted before user {user} itself")]
    StandbyBeforeSource { user: UserId, link: LinkId },

    #[error("admitted link {link} of user {user} solved to zero power")]
    ClippedActiveLink { user: UserId, link: LinkId },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("no sweep rows to emit")]
    EmptyRows,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
