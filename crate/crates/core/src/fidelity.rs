// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Uhlmann fidelity and the fidelity loss `η_R(ρ) = 1 − F²(Tr_B ρ, Tr_B (R∘E)(ρ))`
//! together with a sampled worst case over pure code states.

use crate::channels::KrausChannel;
use crate::codes::CodeSpace;
use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eigen, hermitian_part, hermiticity_defect, op_norm, reduced_system_state, trace,
    C64, ComplexMatrix, StateVector,
};
use crate::perfect::RecoveryMap;
use crate::random::{random_unit_vector, rng_from_seed};

/// Tolerance on Hermiticity, positivity and unit trace of fidelity inputs.
pub const STATE_TOL: f64 = 1e-8;

/// Eigenvalues of `ρ` at or below this fraction of the largest one are
/// treated as exact zeros.
const SUPPORT_CUTOFF: f64 = 1e-13;

fn validate_state(m: &ComplexMatrix) -> Result<()> {
    let defect = hermiticity_defect(m);
    if defect > STATE_TOL * op_norm(m).max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let (vals, _) = hermitian_eigen(&hermitian_part(m));
    if let Some(&lo) = vals.first() {
        if lo < -STATE_TOL {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
    }
    let tr = trace(m);
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::NotNormalized { trace: tr.re });
    }
    Ok(())
}

/// `F(ρ, σ) = Tr √(√ρ σ √ρ)`.
pub fn uhlmann_fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of {:?} and {:?} matrices",
            rho.shape(),
            sigma.shape()
        )));
    }
    validate_state(rho)?;
    validate_state(sigma)?;
    Ok(fidelity_unchecked(rho, sigma))
}

/// The fidelity formula without input validation. `√ρ σ √ρ` is formed on the
/// support of `ρ` only.
pub fn fidelity_unchecked(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    let (vals, vecs) = hermitian_eigen(&hermitian_part(rho));
    let top = vals.iter().fold(0.0_f64, |a, &v| a.max(v));
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > SUPPORT_CUTOFF * top)
        .collect();
    let r = keep.len();
    let v = ComplexMatrix::from_fn(rho.nrows(), r, |i, j| vecs[(i, keep[j])]);
    let inner = v.adjoint() * sigma * &v;
    let m = ComplexMatrix::from_fn(r, r, |k, l| {
        inner[(k, l)] * C64::from((vals[keep[k]] * vals[keep[l]]).sqrt())
    });
    let (ev, _) = hermitian_eigen(&hermitian_part(&m));
    ev.iter().map(|&x| x.max(0.0).sqrt()).sum()
}

/// `η_R(ψ)` for a pure system–bath code state.
pub fn eta_of_state(ch: &KrausChannel, rec: &RecoveryMap, psi: &StateVector) -> Result<f64> {
    let rho_s = reduced_system_state(psi, ch.d_s(), ch.d_b());
    let f = uhlmann_fidelity(&rho_s, &rec.recover(ch, psi))?;
    Ok(1.0 - f * f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseResult {
    pub eta_max: f64,
    /// Maximizing state, embedded in `H_S ⊗ H_B`.
    pub argmax_state: StateVector,
    /// Best value among the Haar samples, before refinement.
    pub eta_sampled: f64,
    pub samples_used: usize,
    pub refinement_iterations: usize,
    /// The ascent stopped on its improvement or step criterion rather than
    /// the iteration limit.
    pub converged: bool,
}

const FD_STEP: f64 = 1e-4;
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-12;
const MIN_IMPROVEMENT: f64 = 1e-10;

struct Objective<'a> {
    ch: &'a KrausChannel,
    rec: &'a RecoveryMap,
    code: &'a CodeSpace,
}

impl Objective<'_> {
    fn eval(&self, z: &StateVector) -> Result<f64> {
        let psi = self.code.embed(&(z / C64::from(z.norm())), self.ch.d_b())?;
        eta_of_state(self.ch, self.rec, &psi)
    }

    /// Central-difference gradient in the real coordinates of `z`, projected
    /// onto the tangent space of the unit sphere.
    fn gradient(&self, z: &StateVector) -> Result<StateVector> {
        let mut g = StateVector::zeros(z.len());
        for j in 0..z.len() {
            for (unit, part) in [(C64::from(1.0), 0), (C64::new(0.0, 1.0), 1)] {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += unit * FD_STEP;
                zm[j] -= unit * FD_STEP;
                let d = (self.eval(&zp)? - self.eval(&zm)?) / (2.0 * FD_STEP);
                if part == 0 {
                    g[j].re = d;
                } else {
                    g[j].im = d;
                }
            }
        }
        let radial = z.dotc(&g).re;
        Ok(g - z * C64::from(radial))
    }
}

/// Sampled worst-case fidelity loss over pure code states: `n_samples`
/// seeded Haar states, then projected finite-difference ascent from the best
/// one. The result is a lower bound on the true maximum.
pub fn worst_case_eta(
    ch: &KrausChannel,
    rec: &RecoveryMap,
    code: &CodeSpace,
    n_samples: usize,
    n_refine: usize,
    seed: u64,
) -> Result<WorstCaseResult> {
    if n_samples == 0 {
        return Err(Error::Invalid("worst_case_eta needs at least one sample".into()));
    }
    if ch.d_s() != code.d_s() || rec.d_s() != code.d_s() {
        return Err(Error::DimensionMismatch(
            "channel, recovery and code disagree on the system dimension".into(),
        ));
    }
    let obj = Objective { ch, rec, code };
    let n = code.dim() * ch.d_b();
    let mut rng = rng_from_seed(seed);
    let mut best_z = random_unit_vector(n, &mut rng);
    let mut best = obj.eval(&best_z)?;
    for _ in 1..n_samples {
        let z = random_unit_vector(n, &mut rng);
        let eta = obj.eval(&z)?;
        if eta > best {
            best = eta;
            best_z = z;
        }
    }
    let eta_sampled = best;

    let mut step = INITIAL_STEP;
    let mut iterations = 0;
    let mut converged = n == 1;
    while !converged && iterations < n_refine {
        iterations += 1;
        let g = obj.gradient(&best_z)?;
        let gn = g.norm();
        if gn == 0.0 {
            converged = true;
            break;
        }
        let dir = g / C64::from(gn);
        loop {
            let cand = &best_z + &dir * C64::from(step);
            let cand = &cand / C64::from(cand.norm());
            let eta = obj.eval(&cand)?;
            if eta > best {
                let gain = eta - best;
                best = eta;
                best_z = cand;
                step = (2.0 * step).min(INITIAL_STEP);
                if gain < MIN_IMPROVEMENT {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                converged = true;
                break;
            }
        }
    }

    Ok(WorstCaseResult {
        eta_max: best,
        argmax_state: code.embed(&best_z, ch.d_b())?,
        eta_sampled,
        samples_used: n_samples,
        refinement_iterations: iterations,
        converged,
    })
}

/// Plain Haar sampling without refinement.
pub fn sampled_eta(
    ch: &KrausChannel,
    rec: &RecoveryMap,
    code: &CodeSpace,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    Ok(worst_case_eta(ch, rec, code, n_samples, 0, seed)?.eta_max)
}
