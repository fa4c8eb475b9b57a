// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

pub mod approx;
pub mod channels;
pub mod codes;
pub mod perfect;
pub mod error;
pub mod fidelity;
pub mod fit;
pub mod instances;
pub mod io;
pub mod matcore;
pub mod random;

pub use channels::{KrausChannel, TpClass};
pub use codes::CodeSpace;
pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, SchmidtState, StateVector, C64};
