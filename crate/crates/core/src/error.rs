// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (‖m − m†‖ = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("state is not normalized (trace {trace})")]
    NotNormalized { trace: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("code basis is not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("state is not supported on the code space (leakage {leakage:e})")]
    NotInCode { leakage: f64 },

    #[error("channel is not completely positive (Choi minimum eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("negative Λ eigenvalue {value:e} below cutoff; Λ is inconsistent")]
    NegativeEigenvalue { value: f64 },

    #[error("correctable part leaves span{{F_α P_C}}: kraus {kraus}, slice ({k},{l}), residual {residual:e}")]
    SpanViolation {
        kraus: usize,
        k: usize,
        l: usize,
        residual: f64,
    },

    #[error("bound violated: {quantity} = {value:e}, limit {limit:e}")]
    BoundViolated {
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
