// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated its documented precondition.
    InvalidArgument(String),
    /// A matrix expected to be unitary deviates from `U†U = I`.
    NonUnitary { deviation: f64 },
    /// The signal slope at the sensing working point vanished.
    DegenerateWorkingPoint { slope: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonUnitary { deviation } => {
                write!(f, "matrix is not unitary (max |U†U - I| = {deviation:e})")
            }
            Error::DegenerateWorkingPoint { slope } => {
                write!(f, "degenerate working point: signal slope {slope:e} per μT")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
