use alloc::string::String;

use crate::netlist::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("netlist is sequential; unroll it first")]
    Sequential,
    #[error("netlist is combinational; nothing to unroll")]
    NotSequential,
    #[error("vector width {found} does not match {expected} primary inputs")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no rare nodes at this threshold")]
    NoRareNodes,
    #[error("need {needed} rare nodes for a trigger, found {available}")]
    NotEnoughRareNodes { needed: usize, available: usize },
    #[error("no jointly satisfiable trigger found after {attempts} attempts")]
    TriggerSearchExhausted { attempts: usize },
    #[error("inserting the Trojan would create a combinational cycle through `{0}`")]
    TrojanCycle(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
