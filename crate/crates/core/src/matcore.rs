// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra used throughout the crate.
//!
//! Every operator, state and channel is carried as a [`ComplexMatrix`]
//! (an `nalgebra` dense matrix of `Complex64`). System–bath operators use the
//! Kronecker layout `H_S ⊗ H_B`: row index `i * d_b + k` addresses system
//! basis state `i` and bath basis state `k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Schmidt coefficients below this value are treated as zero and dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

/// Default relative tolerance for Hermiticity and positivity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Scale a tolerance by a matrix norm: relative for norms above one,
/// absolute below.
#[inline]
pub fn scaled_tol(tol: f64, norm: f64) -> f64 {
    tol * norm.max(1.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `|v⟩⟨v|`
pub fn outer(v: &StateVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// `|a⟩⟨b|`
pub fn ket_bra(a: &StateVector, b: &StateVector) -> ComplexMatrix {
    a * b.adjoint()
}

/// Computational basis vector `|i⟩` in dimension `n`.
pub fn basis_vector(n: usize, i: usize) -> StateVector {
    let mut v = StateVector::zeros(n);
    v[i] = ONE;
    v
}

/// A state vector as a one-column matrix.
pub fn column(v: &StateVector) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .fold(identity(1), |acc, f| tensor(&acc, f))
}

pub fn tensor_vec(a: &StateVector, b: &StateVector) -> StateVector {
    a.kronecker(b)
}

fn check_square(m: &ComplexMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `Tr_B{m}` for `m` acting on `H_S ⊗ H_B`.
pub fn partial_trace_bath(m: &ComplexMatrix, d_s: usize, d_b: usize) -> Result<ComplexMatrix> {
    check_square(m, d_s * d_b, "partial_trace_bath")?;
    Ok(ComplexMatrix::from_fn(d_s, d_s, |i, j| {
        (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()
    }))
}

/// `Tr_B{|ψ⟩⟨ψ|}` straight from the state vector.
pub fn reduced_system_state(psi: &StateVector, d_s: usize, d_b: usize) -> ComplexMatrix {
    let a = reshape_state(psi, d_s, d_b);
    &a * a.adjoint()
}

/// Reshape a vector on `H_S ⊗ H_B` into its `d_s × d_b` coefficient matrix.
pub fn reshape_state(psi: &StateVector, d_s: usize, d_b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_s, d_b, |i, k| psi[i * d_b + k])
}

/// `⟨k|O|ℓ⟩` for a system–bath operator `O`: a `d_s × d_s` system operator.
pub fn bath_slice(op: &ComplexMatrix, d_s: usize, d_b: usize, k: usize, l: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_s, d_s, |i, j| op[(i * d_b + k, j * d_b + l)])
}

/// Inverse of [`bath_slice`]: `Σ_{kℓ} S_{kℓ} ⊗ |k⟩⟨ℓ|` from a `d_b × d_b`
/// grid of system blocks, indexed `[k * d_b + l]`.
pub fn from_bath_slices(slices: &[ComplexMatrix], d_s: usize, d_b: usize) -> ComplexMatrix {
    debug_assert_eq!(slices.len(), d_b * d_b);
    ComplexMatrix::from_fn(d_s * d_b, d_s * d_b, |r, c| {
        let (i, k) = (r / d_b, r % d_b);
        let (j, l) = (c / d_b, c % d_b);
        slices[k * d_b + l][(i, j)]
    })
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Operator norm of a Hermitian matrix via its spectrum.
pub fn hermitian_op_norm(m: &ComplexMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `Σ |σ_i|`: the trace norm.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    m.singular_values().sum()
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending, with the
/// eigenvectors as the matching columns. Only the Hermitian part of `m` is
/// used.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// `U diag(f(λ)) U†` for Hermitian `m`.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vecs.adjoint()
}

/// Hermitian PSD square root. Eigenvalues in `[-tol, 0)` (relative to the
/// matrix norm) are clipped to zero.
pub fn psd_sqrt(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "psd_sqrt: matrix is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let norm = op_norm(m);
    let thresh = scaled_tol(tol, norm);
    let defect = hermiticity_defect(m);
    if defect > thresh {
        return Err(Error::NotHermitian { defect });
    }
    let (vals, _) = hermitian_eigen(m);
    if let Some(&lo) = vals.first() {
        if lo < -thresh {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
    }
    Ok(hermitian_function(m, |v| v.max(0.0).sqrt()))
}

/// Pure bipartite state in Schmidt form `Σ_k μ_k |ψ_k⟩|k⟩`.
///
/// Only coefficients above [`SCHMIDT_CUTOFF`] are retained, so the column
/// counts of `system_vectors` and `bath_vectors` equal the Schmidt rank.
#[derive(Debug, Clone)]
pub struct SchmidtState {
    pub coefficients: Vec<f64>,
    /// `d_s × r`, orthonormal columns.
    pub system_vectors: ComplexMatrix,
    /// `d_b × r`, orthonormal columns.
    pub bath_vectors: ComplexMatrix,
    pub d_s: usize,
    pub d_b: usize,
}

impl SchmidtState {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn system_vector(&self, k: usize) -> StateVector {
        self.system_vectors.column(k).into_owned()
    }

    pub fn bath_vector(&self, k: usize) -> StateVector {
        self.bath_vectors.column(k).into_owned()
    }

    /// `|Ψ_{kℓ}⟩ = |ψ_k⟩|ℓ⟩`.
    pub fn product_vector(&self, k: usize, l: usize) -> StateVector {
        tensor_vec(&self.system_vector(k), &self.bath_vector(l))
    }

    /// `Q_{kℓ} = |ψ_k⟩⟨ψ_ℓ|`.
    pub fn q(&self, k: usize, l: usize) -> ComplexMatrix {
        ket_bra(&self.system_vector(k), &self.system_vector(l))
    }

    pub fn reconstruct(&self) -> StateVector {
        let mut psi = StateVector::zeros(self.d_s * self.d_b);
        for (k, &mu) in self.coefficients.iter().enumerate() {
            psi += self.product_vector(k, k) * C64::from(mu);
        }
        psi
    }

    /// `√ρ_S = Σ_k μ_k Q_{kk}`.
    pub fn sqrt_rho(&self) -> ComplexMatrix {
        let mut out = zeros(self.d_s, self.d_s);
        for (k, &mu) in self.coefficients.iter().enumerate() {
            out += self.q(k, k) * C64::from(mu);
        }
        out
    }

    /// Matrix elements `⟨ψ_k|op|ψ_ℓ⟩` over the retained Schmidt vectors.
    pub fn to_schmidt_basis(&self, op: &ComplexMatrix) -> ComplexMatrix {
        self.system_vectors.adjoint() * op * &self.system_vectors
    }
}

/// Schmidt decomposition of a normalized vector on `H_S ⊗ H_B`.
pub fn schmidt_decompose(psi: &StateVector, d_s: usize, d_b: usize) -> Result<SchmidtState> {
    if psi.len() != d_s * d_b {
        return Err(Error::DimensionMismatch(format!(
            "schmidt_decompose: vector length {} != {d_s}*{d_b}",
            psi.len()
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { trace: norm * norm });
    }
    let coeffs = reshape_state(psi, d_s, d_b);
    let svd = coeffs.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > SCHMIDT_CUTOFF)
        .collect();
    let r = keep.len();
    let coefficients = keep.iter().map(|&k| svd.singular_values[k]).collect();
    let system_vectors = ComplexMatrix::from_fn(d_s, r, |i, j| u[(i, keep[j])]);
    // coeffs = U Σ V†, so ψ = Σ_k μ_k u_k ⊗ (row k of V†)ᵀ.
    let bath_vectors = ComplexMatrix::from_fn(d_b, r, |i, j| v_t[(keep[j], i)]);
    Ok(SchmidtState {
        coefficients,
        system_vectors,
        bath_vectors,
        d_s,
        d_b,
    })
}

pub mod pauli {
    //! Single-qubit Paulis and their generalizations to dimension `d`.
    use super::*;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
    }

    /// Cyclic shift `|j⟩ → |j+1 mod d⟩`.
    pub fn shift(d: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO })
    }

    /// Clock `diag(ω^j)` with `ω = e^{2πi/d}`.
    pub fn clock(d: usize) -> ComplexMatrix {
        let w = 2.0 * std::f64::consts::PI / d as f64;
        ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::from_polar(1.0, w * i as f64)
            } else {
                ZERO
            }
        })
    }

    /// Unitary discrete Fourier transform.
    pub fn fourier(d: usize) -> ComplexMatrix {
        let w = 2.0 * std::f64::consts::PI / d as f64;
        let s = 1.0 / (d as f64).sqrt();
        ComplexMatrix::from_fn(d, d, |i, j| C64::from_polar(s, w * (i * j) as f64))
    }

    /// Single-qubit `op` on qubit `which` of an `n`-qubit register
    /// (qubit 0 is the most significant).
    pub fn on_qubit(op: &ComplexMatrix, which: usize, n: usize) -> ComplexMatrix {
        let id = identity(2);
        let factors: Vec<&ComplexMatrix> = (0..n).map(|q| if q == which { op } else { &id }).collect();
        tensor_all(&factors)
    }
}
