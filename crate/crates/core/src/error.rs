use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Param {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("cannot schedule event at t={time} before current time t={now}")]
    ScheduleInPast { time: f64, now: f64 },

    #[error("inter-cluster request between leaf {src_leaf} and leaf {dst_leaf} but the topology has no spine")]
    NoSpine { src_leaf: usize, dst_leaf: usize },

    #[error("host {0} is not part of the topology")]
    UnknownHost(String),

    #[error("birth-death chain has no stationary distribution: {0}")]
    NoStationary(String),

    #[error("cannot validate against the Markov oracle: {0}")]
    NotValidatable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Param { name, value, reason }
}
