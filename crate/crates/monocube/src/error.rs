//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mask length {found} does not match 2^{n} = {expected}")]
    MaskLength {
        n: u32,
        expected: usize,
        found: usize,
    },

    #[error("dimension {0} is outside the supported range 1..=24")]
    Dimension(u32),

    #[error("set is not upward closed: {from} is a member but {to} is not")]
    NotMonotone { from: String, to: String },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("operation needs at least 2 vertices, set has {0}")]
    TooSmall(usize),

    #[error("the set is empty")]
    EmptySet,

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("function is not defined on the full hypercube of dimension {n}")]
    WrongDomain { n: u32 },

    #[error("f is monotone, the ratio is undefined")]
    ZeroEnergy,

    #[error("graph has no edges with positive weight")]
    NoEdges,

    #[error("comparison function has an antimonotone edge {0} -> {1}")]
    GNotMonotone(usize, usize),

    #[error("function is constant on the domain")]
    ConstantInput,

    #[error("c = {0} is outside [0, 1)")]
    BadC(f64),

    #[error("random variable has empty support")]
    EmptySupport,

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("a marginal is degenerate (zero variance)")]
    DegenerateMarginal,

    #[error("subset is not an up-set inside the base set")]
    NotUpset,

    #[error("start vertex {0} is not in the set")]
    StartNotInA(u32),

    #[error("set has {size} vertices, exact mode supports at most {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("poset edges contain a cycle")]
    Cyclic,

    #[error("search degenerated: witness difference is constant")]
    SearchDegenerate,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-finite value in input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, Error>;
