use thiserror::Error;

use crate::expr::ExprError;

/// Problems found while building or loading a [`crate::Game`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("malformed game file: {0}")]
    Json(String),
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("{field}: unknown variable {name}")]
    UnknownVariable { field: String, name: String },
    #[error("{field}: delta out of range: {value}")]
    DeltaOutOfRange { field: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("player index {index} out of range for a {players}-player game")]
    PlayerIndex { index: usize, players: usize },
    #[error("profile has {got} entries, expected {expected}")]
    ProfileLength { got: usize, expected: usize },
    #[error("no corner certified")]
    NoCornerCertified,
    #[error("ambiguous tie: {count} corners certify distinct replies")]
    AmbiguousTie { count: usize },
    #[error("profile is not a robust-optimization equilibrium (residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },
    #[error("profile is not an {eps}-Nash equilibrium of the nominal game")]
    NotEpsilonNash { eps: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("path has no Nash equilibrium counterpart")]
    NoCounterpart,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
