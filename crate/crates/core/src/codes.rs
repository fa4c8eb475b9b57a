// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Code subspaces `C ⊆ H_S` and their system–bath extension `C ⊗ H_B`.

use crate::error::{Error, Result};
use crate::matcore::{identity, op_norm, tensor, C64, ComplexMatrix, StateVector};
use crate::random::{random_unit_vector, rng_from_seed};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// A `d`-dimensional code inside a `d_s`-dimensional system, stored as a
/// `d_s × d` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpace {
    basis: ComplexMatrix,
}

impl CodeSpace {
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        let (d_s, d) = basis.shape();
        if d == 0 || d > d_s {
            return Err(Error::DimensionMismatch(format!(
                "code of dimension {d} in a system of dimension {d_s}"
            )));
        }
        let defect = op_norm(&(basis.adjoint() * &basis - identity(d)));
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(Self { basis })
    }

    /// Span of computational basis states.
    pub fn computational(d_s: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= d_s) {
            return Err(Error::IndexOutOfRange(format!(
                "basis index {bad} in dimension {d_s}"
            )));
        }
        let basis = ComplexMatrix::from_fn(d_s, indices.len(), |r, c| {
            if r == indices[c] {
                C64::from(1.0)
            } else {
                C64::from(0.0)
            }
        });
        Self::new(basis)
    }

    /// The whole system space.
    pub fn full(d_s: usize) -> Self {
        Self {
            basis: identity(d_s),
        }
    }

    pub fn d_s(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn basis_vector(&self, i: usize) -> StateVector {
        self.basis.column(i).into_owned()
    }

    /// `P_C`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `P = P_C ⊗ 1_B`.
    pub fn full_projector(&self, d_b: usize) -> ComplexMatrix {
        tensor(&self.projector(), &identity(d_b))
    }

    /// Map coordinates `z ∈ C^{d·d_b}` on `C ⊗ H_B` into `H_S ⊗ H_B`.
    pub fn embed(&self, coords: &StateVector, d_b: usize) -> Result<StateVector> {
        if coords.len() != self.dim() * d_b {
            return Err(Error::DimensionMismatch(format!(
                "coordinate vector of length {} for code dimension {} and d_b = {d_b}",
                coords.len(),
                self.dim()
            )));
        }
        Ok(tensor(&self.basis, &identity(d_b)) * coords)
    }

    /// Haar-random pure state on `C ⊗ H_B`, embedded in `H_S ⊗ H_B`.
    pub fn sample_code_state(&self, d_b: usize, seed: u64) -> StateVector {
        let mut rng = rng_from_seed(seed);
        self.sample_with(d_b, &mut rng)
    }

    pub fn sample_with<R: rand::Rng + ?Sized>(&self, d_b: usize, rng: &mut R) -> StateVector {
        let coords = random_unit_vector(self.dim() * d_b, rng);
        self.embed(&coords, d_b).expect("coordinate length matches by construction")
    }

    /// `‖P|ψ⟩ − |ψ⟩‖`.
    pub fn leakage(&self, psi: &StateVector, d_b: usize) -> f64 {
        (self.full_projector(d_b) * psi - psi).norm()
    }

    /// Computational basis vector of the code's first basis state, used to
    /// anchor recovery completions.
    pub fn anchor(&self) -> StateVector {
        self.basis_vector(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{outer, trace, zeros};
    use crate::random::haar_unitary;

    fn max_abs(m: &ComplexMatrix) -> f64 {
        m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    #[test]
    fn full_code_projector_is_identity() {
        assert_eq!(CodeSpace::full(4).projector(), identity(4));
    }

    #[test]
    fn repetition_code_projector() {
        let code = CodeSpace::computational(8, &[0, 7]).unwrap();
        let mut expected = zeros(8, 8);
        expected[(0, 0)] = C64::from(1.0);
        expected[(7, 7)] = C64::from(1.0);
        assert_eq!(code.projector(), expected);
    }

    #[test]
    fn random_isometry_projector() {
        let mut rng = rng_from_seed(3);
        let u = haar_unitary(5, &mut rng);
        let code = CodeSpace::new(u.columns(0, 2).into_owned()).unwrap();
        let p = code.projector();
        assert!(max_abs(&(&p * &p - &p)) < 1e-12);
        assert!((trace(&p).re - 2.0).abs() < 1e-12);
        assert!(max_abs(&(&p - p.adjoint())) < 1e-12);
    }

    #[test]
    fn full_projector_cases() {
        let code = CodeSpace::computational(4, &[1, 2]).unwrap();
        assert_eq!(code.full_projector(1), code.projector());
        assert!((trace(&code.full_projector(3)).re - 6.0).abs() < 1e-14);
        let oracle = tensor(&code.projector(), &identity(3));
        assert!(max_abs(&(code.full_projector(3) - oracle)) < 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let b = ComplexMatrix::from_element(2, 2, C64::from(1.0));
        assert!(matches!(CodeSpace::new(b), Err(Error::NotOrthonormal { .. })));
        assert!(CodeSpace::computational(2, &[3]).is_err());
    }

    #[test]
    fn one_dimensional_code_state_is_unique_up_to_phase() {
        let code = CodeSpace::computational(3, &[2]).unwrap();
        let psi = code.sample_code_state(1, 5);
        let overlap = psi.dotc(&code.basis_vector(0));
        assert!((overlap.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampled_states_live_in_the_code() {
        let mut rng = rng_from_seed(12);
        let u = haar_unitary(4, &mut rng);
        let code = CodeSpace::new(u.columns(0, 2).into_owned()).unwrap();
        let p = code.full_projector(3);
        for seed in 0..50 {
            let psi = code.sample_code_state(3, seed);
            assert!(code.leakage(&psi, 3) <= 1e-12);
            let rho = outer(&psi);
            assert!(max_abs(&(&p * &rho * &p - &rho)) <= 1e-12);
        }
    }

    #[test]
    fn haar_second_moment() {
        // E|⟨φ|Ψ⟩|² = 1/(d·d_B) for a fixed unit φ in C ⊗ H_B.
        let code = CodeSpace::computational(4, &[0, 3]).unwrap();
        let d_b = 3;
        let phi = code
            .embed(&StateVector::from_fn(6, |i, _| C64::from(if i == 1 { 1.0 } else { 0.0 })), d_b)
            .unwrap();
        let mut rng = rng_from_seed(77);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| code.sample_with(d_b, &mut rng).dotc(&phi).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let expected = 1.0 / 6.0;
        assert!(((mean - expected) / expected).abs() < 0.05, "mean {mean}");
    }
}
