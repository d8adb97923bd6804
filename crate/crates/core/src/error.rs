use thiserror::Error;

use crate::lattice::{MultiIndex, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid array spec: {0}")]
    InvalidSpec(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("value count {got} does not match shape {shape:?} ({expected} entries)")]
    ShapeLength {
        shape: Shape,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Shape, right: Shape },

    #[error("degree {degree} needs at least {needed} samples along dimension {dim}, shape has {available}")]
    DegreeTooHigh {
        degree: usize,
        dim: usize,
        needed: usize,
        available: usize,
    },

    #[error("multi-index {m:?} is not contained in lattice {shape:?}")]
    NotContained { m: MultiIndex, shape: Shape },

    #[error("dimension {dim} has a single sample and cannot be differenced")]
    DimensionExhausted { dim: usize },

    #[error("signal is zero where a phase is required")]
    ZeroSignal,

    #[error("unsupported truncation degree {0} (expected 1, 2 or 3)")]
    UnsupportedDegree(usize),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
