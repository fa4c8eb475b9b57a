// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Approximate correction: noise splitting `E_a P = Ẽ_a P + B_a P`, the
//! `Θ`/`Δ` bound, the exact recovered-state identity and the second-order
//! fidelity expansion `ρ_S + δ₁ + δ₂` with its trace inequalities.
//!
//! Every quantity here is built from the primary recovery `{P_C F_α†}` of the
//! reference basis. Splits only record the action on `P = P_C ⊗ 1_B`.

use crate::codes::CodeSpace;
use crate::error::{Error, Result};
use crate::matcore::{
    bath_slice, from_bath_slices, hermitian_eigen, hermitian_part, hermiticity_defect,
    min_eigenvalue, op_norm, outer, partial_trace_bath, schmidt_decompose, trace,
    zeros, C64, ComplexMatrix, SchmidtState, StateVector,
};
use crate::perfect::{CorrectableBasis, RecoveryMap};
use crate::KrausChannel;

/// Coefficient of `‖Θ†Θ‖` in `ε`.
pub const THETA_COEFF: f64 = (1.0 + std::f64::consts::SQRT_2) / 8.0;

/// Absolute slack for the trace inequalities; exact zeros come out as
/// `±1e-17`.
pub const TRACE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum SplitMode {
    /// Orthogonal projection of each slice onto `span{F_α P_C}`.
    AutoProject,
    /// Caller-supplied `Ẽ_a P`, one full system–bath operator per Kraus term.
    UserProvided(Vec<ComplexMatrix>),
}

#[derive(Debug, Clone)]
pub struct NoiseSplit {
    /// `Ẽ_a P`.
    pub correctable: Vec<ComplexMatrix>,
    /// `B_a P`.
    pub uncorrectable: Vec<ComplexMatrix>,
    pub reference_basis: CorrectableBasis,
    pub code: CodeSpace,
    pub d_b: usize,
    pub automatic: bool,
}

impl NoiseSplit {
    pub fn d_s(&self) -> usize {
        self.code.d_s()
    }

    pub fn dim(&self) -> usize {
        self.d_s() * self.d_b
    }

    /// `max ‖B_a P‖`.
    pub fn uncorrectable_norm(&self) -> f64 {
        self.uncorrectable.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// `max |Tr[P_C F_α† B_{a;kℓ} P_C]|`; zero for automatic splits.
    pub fn orthogonality_defect(&self) -> f64 {
        let pc = self.code.projector();
        let mut worst = 0.0_f64;
        for b in &self.uncorrectable {
            for k in 0..self.d_b {
                for l in 0..self.d_b {
                    let s = bath_slice(b, self.d_s(), self.d_b, k, l);
                    for f in &self.reference_basis.f_ops {
                        worst = worst.max(trace(&(&pc * f.adjoint() * &s * &pc)).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest relative residual of a `Ẽ` slice outside `span{F_α P_C}`.
    pub fn span_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for e in &self.correctable {
            for k in 0..self.d_b {
                for l in 0..self.d_b {
                    let s = bath_slice(e, self.d_s(), self.d_b, k, l);
                    let proj = self.reference_basis.project(&self.code, &s);
                    worst = worst.max(proj.residual / proj.norm.max(1.0));
                }
            }
        }
        worst
    }

    /// `Σ_a (E_a P)|ψ⟩⟨ψ|(E_a P)†` traced over the bath.
    pub fn reduced_output(&self, psi: &StateVector) -> ComplexMatrix {
        let mut out = zeros(self.dim(), self.dim());
        for (e, b) in self.correctable.iter().zip(&self.uncorrectable) {
            let v = (e + b) * psi;
            out += outer(&v);
        }
        partial_trace_bath(&out, self.d_s(), self.d_b).expect("square by construction")
    }
}

fn check_split_inputs(ch: &KrausChannel, basis: &CorrectableBasis, code: &CodeSpace) -> Result<()> {
    if ch.d_s() != code.d_s() {
        return Err(Error::DimensionMismatch(format!(
            "channel system dimension {} vs code system dimension {}",
            ch.d_s(),
            code.d_s()
        )));
    }
    if let Some(f) = basis.f_ops.first() {
        if f.nrows() != code.d_s() {
            return Err(Error::DimensionMismatch(format!(
                "reference operators act on dimension {}, code on {}",
                f.nrows(),
                code.d_s()
            )));
        }
    }
    Ok(())
}

/// Split every Kraus operator into a part correctable by the reference basis
/// and a remainder.
pub fn split_noise(
    ch: &KrausChannel,
    basis: &CorrectableBasis,
    code: &CodeSpace,
    mode: SplitMode,
    tol: f64,
) -> Result<NoiseSplit> {
    check_split_inputs(ch, basis, code)?;
    let (d_s, d_b) = (ch.d_s(), ch.d_b());
    let p = code.full_projector(d_b);
    let ep: Vec<ComplexMatrix> = ch.kraus().iter().map(|e| e * &p).collect();
    let (correctable, automatic) = match mode {
        SplitMode::AutoProject => {
            let list = ch
                .kraus()
                .iter()
                .map(|e| {
                    let blocks: Vec<ComplexMatrix> = (0..d_b * d_b)
                        .map(|i| {
                            let s = bath_slice(e, d_s, d_b, i / d_b, i % d_b);
                            basis.project(code, &s).projected
                        })
                        .collect();
                    from_bath_slices(&blocks, d_s, d_b)
                })
                .collect();
            (list, true)
        }
        SplitMode::UserProvided(list) => {
            if list.len() != ch.len() {
                return Err(Error::DimensionMismatch(format!(
                    "split has {} operators, channel has {}",
                    list.len(),
                    ch.len()
                )));
            }
            let dim = ch.dim();
            if let Some(bad) = list.iter().find(|m| m.nrows() != dim || m.ncols() != dim) {
                return Err(Error::DimensionMismatch(format!(
                    "split operator is {}x{}, expected {dim}x{dim}",
                    bad.nrows(),
                    bad.ncols()
                )));
            }
            let list: Vec<ComplexMatrix> = list.into_iter().map(|m| m * &p).collect();
            for (a, e) in list.iter().enumerate() {
                for k in 0..d_b {
                    for l in 0..d_b {
                        let proj = basis.project(code, &bath_slice(e, d_s, d_b, k, l));
                        let residual = proj.residual / proj.norm.max(1.0);
                        if residual > tol {
                            return Err(Error::SpanViolation {
                                kraus: a,
                                k,
                                l,
                                residual,
                            });
                        }
                    }
                }
            }
            (list, false)
        }
    };
    let uncorrectable = ep.iter().zip(&correctable).map(|(e, t)| e - t).collect();
    Ok(NoiseSplit {
        correctable,
        uncorrectable,
        reference_basis: basis.clone(),
        code: code.clone(),
        d_b,
        automatic,
    })
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    /// `Σ_a P(B_a†Ẽ_a − Ẽ_a†B_a)P`, anti-Hermitian.
    pub theta: ComplexMatrix,
    /// `Σ_a P B_a†B_a P`, positive semidefinite.
    pub delta: ComplexMatrix,
    pub theta_norm_sq: f64,
    pub delta_norm: f64,
    pub epsilon: f64,
}

impl BoundReport {
    pub fn antihermiticity_defect(&self) -> f64 {
        op_norm(&(&self.theta + self.theta.adjoint()))
    }

    pub fn delta_min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&hermitian_part(&self.delta))
    }
}

/// `ε = (1+√2)/8 · ‖Θ†Θ‖ + ‖Δ‖`.
pub fn epsilon_from_norms(theta_norm_sq: f64, delta_norm: f64) -> f64 {
    THETA_COEFF * theta_norm_sq + delta_norm
}

pub fn compute_bound(split: &NoiseSplit) -> BoundReport {
    let n = split.dim();
    let mut theta = zeros(n, n);
    let mut delta = zeros(n, n);
    for (e, b) in split.correctable.iter().zip(&split.uncorrectable) {
        let bd = b.adjoint();
        theta += &bd * e - e.adjoint() * b;
        delta += &bd * b;
    }
    let theta_norm_sq = op_norm(&(theta.adjoint() * &theta));
    let delta_norm = op_norm(&delta);
    BoundReport {
        epsilon: epsilon_from_norms(theta_norm_sq, delta_norm),
        theta,
        delta,
        theta_norm_sq,
        delta_norm,
    }
}

/// `ρ_S`, `σ₁`, `σ₂` for one pure code state together with the directly
/// computed output of the primary recovery.
#[derive(Debug, Clone)]
pub struct RecoveredState {
    pub rho_s: ComplexMatrix,
    pub sigma1: ComplexMatrix,
    pub sigma2: ComplexMatrix,
    /// `Tr_B{(R∘E)(ψ)}` with `R` the primary recovery.
    pub recovered: ComplexMatrix,
}

impl RecoveredState {
    /// `‖Tr_B{(R∘E)(ψ)} − (ρ_S + σ₁ + σ₂)‖`.
    pub fn residual(&self) -> f64 {
        op_norm(&(&self.recovered - (&self.rho_s + &self.sigma1 + &self.sigma2)))
    }
}

fn check_code_state(split: &NoiseSplit, psi: &StateVector) -> Result<()> {
    if psi.len() != split.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} for system–bath dimension {}",
            psi.len(),
            split.dim()
        )));
    }
    let leakage = split.code.leakage(psi, split.d_b);
    if leakage > 1e-9 {
        return Err(Error::NotInCode { leakage });
    }
    Ok(())
}

/// `σ₁ = ½ Σ_{ℓm} [ρ_{ℓm}, Θ_{mℓ}]` and
/// `σ₂ = −½ Σ_{ℓm} {ρ_{ℓm}, Δ_{mℓ}} + Σ D_{αa;kℓ} ρ_{ℓm} D_{αa;km}†`.
fn sigmas(
    split: &NoiseSplit,
    bound: &BoundReport,
    psi: &StateVector,
) -> (ComplexMatrix, ComplexMatrix) {
    let (d_s, d_b) = (split.d_s(), split.d_b);
    let rho = outer(psi);
    let rho_blocks: Vec<ComplexMatrix> = (0..d_b * d_b)
        .map(|i| bath_slice(&rho, d_s, d_b, i / d_b, i % d_b))
        .collect();
    let half = C64::from(0.5);
    let mut sigma1 = zeros(d_s, d_s);
    let mut sigma2 = zeros(d_s, d_s);
    for l in 0..d_b {
        for m in 0..d_b {
            let r = &rho_blocks[l * d_b + m];
            let th = bath_slice(&bound.theta, d_s, d_b, m, l);
            let de = bath_slice(&bound.delta, d_s, d_b, m, l);
            sigma1 += (r * &th - &th * r) * half;
            sigma2 -= (r * &de + &de * r) * half;
        }
    }
    let pc = split.code.projector();
    for b in &split.uncorrectable {
        let b_slices: Vec<ComplexMatrix> = (0..d_b * d_b)
            .map(|i| bath_slice(b, d_s, d_b, i / d_b, i % d_b))
            .collect();
        for f in &split.reference_basis.f_ops {
            let left = &pc * f.adjoint();
            let d_ops: Vec<ComplexMatrix> = b_slices.iter().map(|s| &left * s * &pc).collect();
            for k in 0..d_b {
                for l in 0..d_b {
                    for m in 0..d_b {
                        sigma2 += &d_ops[k * d_b + l]
                            * &rho_blocks[l * d_b + m]
                            * d_ops[k * d_b + m].adjoint();
                    }
                }
            }
        }
    }
    (sigma1, sigma2)
}

/// `ρ_S + σ₁ + σ₂` next to the direct output of the primary recovery.
pub fn recovered_state_exact(
    split: &NoiseSplit,
    rec: &RecoveryMap,
    psi: &StateVector,
) -> Result<RecoveredState> {
    check_code_state(split, psi)?;
    let bound = compute_bound(split);
    let (sigma1, sigma2) = sigmas(split, &bound, psi);
    Ok(RecoveredState {
        rho_s: partial_trace_bath(&outer(psi), split.d_s(), split.d_b)?,
        sigma1,
        sigma2,
        recovered: rec.apply_primary(&split.reduced_output(psi)),
    })
}

/// Expansion `√(√ρ_S ρ_S' √ρ_S) = ρ_S + δ₁ + δ₂ + …` for one pure code
/// state, with `δ₂ = V + W`.
#[derive(Debug, Clone)]
pub struct ExpansionTerms {
    pub rho_s: ComplexMatrix,
    pub sigma1: ComplexMatrix,
    pub sigma2: ComplexMatrix,
    pub delta1: ComplexMatrix,
    pub delta2: ComplexMatrix,
    pub v: ComplexMatrix,
    pub w: ComplexMatrix,
    /// `V₁, V₂, V₃` with `V = ¼(V₁ + V₂ + V₃)`.
    pub v_parts: [ComplexMatrix; 3],
    /// `W₁, W₂` with `W = W₁ + W₂`.
    pub w_parts: [ComplexMatrix; 2],
    pub schmidt: SchmidtState,
}

impl ExpansionTerms {
    pub fn sigma_hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.sigma1).max(hermiticity_defect(&self.sigma2))
    }

    /// `ρ_S + δ₁ + δ₂`.
    pub fn expanded_root(&self) -> ComplexMatrix {
        &self.rho_s + &self.delta1 + &self.delta2
    }
}

fn adj_h(m: ComplexMatrix) -> ComplexMatrix {
    let a = m.adjoint();
    m + a
}

/// All expansion terms for the pure code state `psi`. Sums run over the
/// retained Schmidt indices only.
pub fn expansion_terms(split: &NoiseSplit, psi: &StateVector) -> Result<ExpansionTerms> {
    check_code_state(split, psi)?;
    let (d_s, d_b) = (split.d_s(), split.d_b);
    let bound = compute_bound(split);
    let (sigma1, sigma2) = sigmas(split, &bound, psi);
    let sch = schmidt_decompose(psi, d_s, d_b)?;
    let mu = &sch.coefficients;
    let r = sch.rank();
    let s = |k: usize, l: usize| mu[k] * mu[k] + mu[l] * mu[l];
    let prod: Vec<Vec<StateVector>> = (0..r)
        .map(|k| (0..r).map(|l| sch.product_vector(k, l)).collect())
        .collect();
    let q: Vec<Vec<ComplexMatrix>> = (0..r).map(|k| (0..r).map(|l| sch.q(k, l)).collect()).collect();
    let theta_psi = &bound.theta * psi;
    let theta_adj_psi = bound.theta.adjoint() * psi;
    let delta_psi = &bound.delta * psi;
    // ⟨Ψ|Θ|Ψ_kℓ⟩, ⟨Ψ_kℓ|Θ|Ψ⟩ and ⟨Ψ_kℓ|Δ|Ψ⟩.
    let bra_theta = |k: usize, l: usize| theta_adj_psi.dotc(&prod[k][l]);
    let theta_ket = |k: usize, l: usize| prod[k][l].dotc(&theta_psi);
    let delta_ket = |k: usize, l: usize| prod[k][l].dotc(&delta_psi);
    let re = C64::from;

    let mut delta1 = zeros(d_s, d_s);
    let mut w1 = zeros(d_s, d_s);
    for k in 0..r {
        for l in 0..r {
            let t = &q[k][l] * (re(mu[k] * mu[k] * mu[l] / s(k, l)) * bra_theta(l, k));
            delta1 += adj_h(t) * re(0.5);
            let t = &q[k][l] * (re(-mu[k] * mu[l] * mu[l] / s(k, l)) * delta_ket(k, l));
            w1 += adj_h(t) * re(0.5);
        }
    }

    let mut v1 = zeros(d_s, d_s);
    let mut v2 = zeros(d_s, d_s);
    let mut v3 = zeros(d_s, d_s);
    for k in 0..r {
        for l in 0..r {
            for m in 0..r {
                let den = s(k, l) * s(l, m) * s(m, k);
                let c1 = -mu[k].powi(3) * mu[l].powi(2) * mu[m] / den;
                v1 += adj_h(&q[l][m] * (re(c1) * bra_theta(k, l) * bra_theta(m, k)));
                let c2 = (mu[k] * mu[l] * mu[m]).powi(2) / den;
                v2 += &q[l][m] * (re(c2) * bra_theta(k, l) * theta_ket(k, m));
                let c3 = mu[k] * mu[l] * mu[m].powi(4) / den;
                v3 += &q[k][l] * (re(c3) * theta_ket(k, m) * bra_theta(l, m));
            }
        }
    }
    let v = (&v1 + &v2 + &v3) * re(0.25);

    let mut w2 = zeros(d_s, d_s);
    for b in &split.uncorrectable {
        let bpsi = b * psi;
        let tr_b = partial_trace_bath(&outer(&bpsi), d_s, d_b)?;
        for f in &split.reference_basis.f_ops {
            let x = f.adjoint() * &tr_b * f;
            for l in 0..r {
                let left = &q[l][l] * &x;
                for m in 0..r {
                    w2 += &left * &q[m][m] * re(mu[l] * mu[m] / s(l, m));
                }
            }
        }
    }
    let w = &w1 + &w2;
    let delta2 = &v + &w;

    Ok(ExpansionTerms {
        rho_s: partial_trace_bath(&outer(psi), d_s, d_b)?,
        sigma1,
        sigma2,
        delta1,
        delta2,
        v,
        w,
        v_parts: [v1, v2, v3],
        w_parts: [w1, w2],
        schmidt: sch,
    })
}

/// Residuals of the relations tying `δ₁`, `V`, `W` to `σ₁`, `σ₂`. The
/// Schmidt-basis ones are maximal entrywise deviations; the operator ones
/// are operator norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `(δ₁)_{kℓ} = μ_kμ_ℓ/s_{kℓ} · (σ₁)_{kℓ}`.
    pub delta1_relation: f64,
    /// `V_{kℓ} = −μ_kμ_ℓ/s_{kℓ} · Σ_m μ_m²/(s_{km}s_{ℓm}) (σ₁)_{km}(σ₁)_{mℓ}`.
    pub v_relation: f64,
    /// `W_{kℓ} = μ_kμ_ℓ/s_{kℓ} · (σ₂)_{kℓ}`.
    pub w_relation: f64,
    /// `ρ_Sδ₁ + δ₁ρ_S − √ρ_S σ₁ √ρ_S`.
    pub first_order: f64,
    /// `δ₁² + ρ_Sδ₂ + δ₂ρ_S − √ρ_S σ₂ √ρ_S`.
    pub second_order: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.delta1_relation,
            self.v_relation,
            self.w_relation,
            self.first_order,
            self.second_order,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn identity_residuals(terms: &ExpansionTerms) -> IdentityResiduals {
    let sch = &terms.schmidt;
    let mu = &sch.coefficients;
    let r = sch.rank();
    let s = |k: usize, l: usize| mu[k] * mu[k] + mu[l] * mu[l];
    let s1 = sch.to_schmidt_basis(&terms.sigma1);
    let s2 = sch.to_schmidt_basis(&terms.sigma2);
    let d1 = sch.to_schmidt_basis(&terms.delta1);
    let vb = sch.to_schmidt_basis(&terms.v);
    let wb = sch.to_schmidt_basis(&terms.w);
    let ratio = |k: usize, l: usize| C64::from(mu[k] * mu[l] / s(k, l));
    let d1_pred = ComplexMatrix::from_fn(r, r, |k, l| ratio(k, l) * s1[(k, l)]);
    let w_pred = ComplexMatrix::from_fn(r, r, |k, l| ratio(k, l) * s2[(k, l)]);
    let v_pred = ComplexMatrix::from_fn(r, r, |k, l| {
        let sum: C64 = (0..r)
            .map(|m| s1[(k, m)] * s1[(m, l)] * (mu[m] * mu[m] / (s(k, m) * s(l, m))))
            .sum();
        -ratio(k, l) * sum
    });
    let sq = sch.sqrt_rho();
    let rho = &terms.rho_s;
    let first = rho * &terms.delta1 + &terms.delta1 * rho - &sq * &terms.sigma1 * &sq;
    let second = &terms.delta1 * &terms.delta1 + rho * &terms.delta2 + &terms.delta2 * rho
        - &sq * &terms.sigma2 * &sq;
    IdentityResiduals {
        delta1_relation: max_abs(&(d1 - d1_pred)),
        v_relation: max_abs(&(vb - v_pred)),
        w_relation: max_abs(&(wb - w_pred)),
        first_order: op_norm(&first),
        second_order: op_norm(&second),
    }
}

/// One failed trace inequality: `value` exceeded `limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub quantity: &'static str,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone)]
pub struct TraceBounds {
    pub tr_delta1: f64,
    pub tr_v: f64,
    pub tr_w: f64,
    pub tr_delta2: f64,
    /// `(1+√2)/16 · ‖Θ†Θ‖`.
    pub v_limit: f64,
    /// `½‖Δ‖`.
    pub w_limit: f64,
    /// `v_limit + w_limit`.
    pub delta2_limit: f64,
    pub violations: Vec<BoundViolation>,
}

impl TraceBounds {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// First violation as an error, if any.
    pub fn check(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::BoundViolated {
                quantity: v.quantity,
                value: v.value,
                limit: v.limit,
            }),
        }
    }

    /// Smallest distance to any of the limits; negative on violation.
    pub fn margin(&self) -> f64 {
        [
            -self.tr_delta2,
            self.tr_delta2 + self.delta2_limit,
            -self.tr_v,
            self.v_limit + self.tr_v,
            self.tr_w + self.w_limit,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluate the trace inequalities with absolute slack `slack`.
pub fn trace_bounds(terms: &ExpansionTerms, report: &BoundReport, slack: f64) -> TraceBounds {
    let tr_delta1 = trace(&terms.delta1).re;
    let tr_v = trace(&terms.v).re;
    let tr_w = trace(&terms.w).re;
    let tr_delta2 = trace(&terms.delta2).re;
    let v_limit = THETA_COEFF / 2.0 * report.theta_norm_sq;
    let w_limit = 0.5 * report.delta_norm;
    let delta2_limit = v_limit + w_limit;
    let mut violations = Vec::new();
    let mut need = |ok: bool, quantity: &'static str, value: f64, limit: f64| {
        if !ok {
            violations.push(BoundViolation {
                quantity,
                value,
                limit,
            });
        }
    };
    need(tr_delta1.abs() <= 1e-10, "|Tr δ1|", tr_delta1.abs(), 1e-10);
    need(tr_delta2 <= slack, "Tr δ2", tr_delta2, 0.0);
    need(tr_delta2 >= -delta2_limit - slack, "-Tr δ2", -tr_delta2, delta2_limit);
    need(tr_v <= slack, "Tr V", tr_v, 0.0);
    need(tr_v.abs() <= v_limit + slack, "|Tr V|", tr_v.abs(), v_limit);
    need(tr_w >= -w_limit - slack, "-Tr W", -tr_w, w_limit);
    TraceBounds {
        tr_delta1,
        tr_v,
        tr_w,
        tr_delta2,
        v_limit,
        w_limit,
        delta2_limit,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityExpansion {
    /// `Tr √(√ρ_S ρ_S' √ρ_S)` with `ρ_S'` the primary-recovery output.
    pub exact: f64,
    /// `1 + Tr δ₁ + Tr δ₂`.
    pub expanded: f64,
    pub gap: f64,
    /// Smallest eigenvalue of `ρ_S + δ₁ + δ₂`.
    pub min_eigenvalue: f64,
}

/// Exact fidelity against its second-order expansion for one code state.
pub fn fidelity_expansion_check(
    split: &NoiseSplit,
    rec: &RecoveryMap,
    psi: &StateVector,
) -> Result<FidelityExpansion> {
    let terms = expansion_terms(split, psi)?;
    let out = rec.apply_primary(&split.reduced_output(psi));
    Ok(fidelity_from_terms(&terms, &out))
}

/// As [`fidelity_expansion_check`] from precomputed terms and output.
pub fn fidelity_from_terms(terms: &ExpansionTerms, recovered: &ComplexMatrix) -> FidelityExpansion {
    // √ρ_S ρ_S' √ρ_S lives on the Schmidt support; restricting to it keeps
    // round-off in the null space out of the square roots.
    let sch = &terms.schmidt;
    let r = sch.rank();
    let inner = sch.to_schmidt_basis(recovered);
    let m = ComplexMatrix::from_fn(r, r, |k, l| {
        inner[(k, l)] * C64::from(sch.coefficients[k] * sch.coefficients[l])
    });
    let (vals, _) = hermitian_eigen(&hermitian_part(&m));
    let exact: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    let expanded = 1.0 + trace(&terms.delta1).re + trace(&terms.delta2).re;
    FidelityExpansion {
        exact,
        expanded,
        gap: (exact - expanded).abs(),
        min_eigenvalue: min_eigenvalue(&hermitian_part(&terms.expanded_root())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{loglog_slope, median};
    use crate::instances::{perturbed_families, repetition_code, repetition_instance};
    use crate::matcore::{psd_sqrt, tensor, identity};
    use crate::perfect::{correctable_basis, universal_recovery};
    use crate::random::rng_from_seed;
    use proptest::prelude::*;

    struct Fixture {
        channel: KrausChannel,
        split: NoiseSplit,
        rec: RecoveryMap,
    }

    fn fixture(family: usize, t: f64) -> Fixture {
        let fam = &perturbed_families()[family];
        let basis = correctable_basis(&fam.base, &fam.code, 1e-9).unwrap();
        let rec = universal_recovery(&basis, &fam.code);
        let channel = fam.at(t).unwrap();
        let split = split_noise(&channel, &basis, &fam.code, SplitMode::AutoProject, 1e-9).unwrap();
        Fixture {
            channel,
            split,
            rec,
        }
    }

    fn states(split: &NoiseSplit, n: usize, seed: u64) -> Vec<StateVector> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| split.code.sample_with(split.d_b, &mut rng)).collect()
    }

    /// Output of the primary recovery from the channel itself.
    fn direct_output(f: &Fixture, psi: &StateVector) -> ComplexMatrix {
        let out = f.channel.apply(&outer(psi)).unwrap();
        let reduced = partial_trace_bath(&out, f.channel.d_s(), f.channel.d_b()).unwrap();
        f.rec.apply_primary(&reduced)
    }

    #[test]
    fn epsilon_arithmetic() {
        let eps = epsilon_from_norms(0.01, 0.02);
        assert!((eps - 0.023_017_766_952_966_37).abs() < 1e-15, "{eps}");
    }

    #[test]
    fn correctable_channel_has_no_remainder() {
        let f = fixture(1, 0.0);
        assert!(f.split.uncorrectable_norm() < 1e-12);
        let b = compute_bound(&f.split);
        assert!(b.epsilon < 1e-20);
        for psi in states(&f.split, 5, 1) {
            let r = recovered_state_exact(&f.split, &f.rec, &psi).unwrap();
            assert!(max_abs(&r.sigma1) < 1e-12 && max_abs(&r.sigma2) < 1e-12);
            assert!(r.residual() < 1e-12);
            let terms = expansion_terms(&f.split, &psi).unwrap();
            assert!(max_abs(&terms.delta1) < 1e-12 && max_abs(&terms.delta2) < 1e-12);
            let fe = fidelity_expansion_check(&f.split, &f.rec, &psi).unwrap();
            assert!((fe.exact - 1.0).abs() < 1e-9 && (fe.expanded - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn remainder_is_linear_in_raw_perturbation() {
        let fam = &perturbed_families()[1];
        let basis = correctable_basis(&fam.base, &fam.code, 1e-9).unwrap();
        let norms: Vec<f64> = [0.05, 0.1]
            .iter()
            .map(|&t| {
                let kraus = fam
                    .base
                    .kraus()
                    .iter()
                    .zip(&fam.direction)
                    .map(|(e, g)| e + g * C64::from(t))
                    .collect();
                let raw = KrausChannel::new(8, 2, kraus).unwrap();
                split_noise(&raw, &basis, &fam.code, SplitMode::AutoProject, 1e-9)
                    .unwrap()
                    .uncorrectable_norm()
            })
            .collect();
        assert!(norms[0] > 1e-3);
        assert!((norms[1] / norms[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn automatic_split_is_orthogonal() {
        for family in 0..4 {
            let f = fixture(family, 0.1);
            assert!(f.split.orthogonality_defect() <= 1e-10);
            assert!(f.split.span_residual() <= 1e-9);
            let p = f.split.code.full_projector(f.split.d_b);
            for ((e, t), b) in f.channel.kraus().iter().zip(&f.split.correctable).zip(&f.split.uncorrectable) {
                assert!(max_abs(&(e * &p - t - b)) <= 1e-12);
            }
        }
    }

    #[test]
    fn bound_scales_quadratically() {
        let f = fixture(2, 0.1);
        let base = compute_bound(&f.split);
        assert!(base.antihermiticity_defect() <= 1e-10);
        assert!(base.delta_min_eigenvalue() >= -1e-10);
        for &t in &[0.5, 2.0, 3.0] {
            let mut scaled = f.split.clone();
            scaled.uncorrectable.iter_mut().for_each(|b| *b *= C64::from(t));
            let r = compute_bound(&scaled);
            assert!(max_abs(&(&r.theta - &base.theta * C64::from(t))) < 1e-12);
            assert!(max_abs(&(&r.delta - &base.delta * C64::from(t * t))) < 1e-12);
            assert!((r.epsilon - t * t * base.epsilon).abs() < 1e-12 * r.epsilon.max(1.0));
        }
    }

    #[test]
    fn recovered_state_matches_channel_application() {
        for family in 0..4 {
            let f = fixture(family, 0.1);
            let mut samples = states(&f.split, 10, 9);
            let d = f.split.d_b;
            let product = tensor(
                &ComplexMatrix::from_column_slice(8, 1, f.split.code.sample_code_state(1, 4).as_slice()),
                &ComplexMatrix::from_fn(d, 1, |i, _| C64::from(if i == 0 { 1.0 } else { 0.0 })),
            );
            samples.push(StateVector::from_column_slice(product.as_slice()));
            for psi in samples {
                let r = recovered_state_exact(&f.split, &f.rec, &psi).unwrap();
                assert!(op_norm(&(direct_output(&f, &psi) - &r.recovered)) < 1e-12);
                assert!(r.residual() <= 1e-11, "{}", r.residual());
                assert!(hermiticity_defect(&r.sigma1) < 1e-10);
                assert!(hermiticity_defect(&r.sigma2) < 1e-10);
            }
        }
    }

    #[test]
    fn non_orthogonal_split_keeps_the_identity() {
        let f = fixture(1, 0.1);
        let p = f.split.code.full_projector(2);
        let shift = tensor(&f.split.reference_basis.f_ops[0], &identity(2)) * &p;
        let user: Vec<ComplexMatrix> = f
            .split
            .correctable
            .iter()
            .enumerate()
            .map(|(a, e)| e + &shift * C64::new(0.02 * a as f64, -0.01))
            .collect();
        let basis = f.split.reference_basis.clone();
        let split = split_noise(&f.channel, &basis, &f.split.code, SplitMode::UserProvided(user), 1e-9).unwrap();
        assert!(split.orthogonality_defect() > 1e-3);
        for psi in states(&split, 10, 2) {
            assert!(recovered_state_exact(&split, &f.rec, &psi).unwrap().residual() <= 1e-11);
        }
    }

    #[test]
    fn out_of_span_user_split_is_rejected() {
        let f = fixture(1, 0.1);
        let p = f.split.code.full_projector(2);
        let user = f.channel.kraus().iter().map(|e| e * &p).collect();
        let err = split_noise(&f.channel, &f.split.reference_basis, &f.split.code, SplitMode::UserProvided(user), 1e-9)
            .unwrap_err();
        assert!(matches!(err, Error::SpanViolation { .. }));
    }

    #[test]
    fn states_outside_the_code_are_rejected() {
        let f = fixture(1, 0.1);
        let psi = StateVector::from_fn(16, |i, _| C64::from(if i == 3 { 1.0 } else { 0.0 }));
        assert!(matches!(
            recovered_state_exact(&f.split, &f.rec, &psi),
            Err(Error::NotInCode { .. })
        ));
    }

    #[test]
    fn vanishing_theta_kills_first_order_and_v() {
        let mut f = fixture(1, 0.1);
        // Ẽ = 0 on the code makes Θ vanish while Δ stays.
        for (e, b) in f.split.correctable.iter_mut().zip(f.split.uncorrectable.iter_mut()) {
            *b += &*e;
            *e *= C64::from(0.0);
        }
        assert!(max_abs(&compute_bound(&f.split).theta) < 1e-15);
        for psi in states(&f.split, 5, 3) {
            let terms = expansion_terms(&f.split, &psi).unwrap();
            assert!(max_abs(&terms.delta1) < 1e-14);
            assert!(max_abs(&terms.v) < 1e-14);
        }
    }

    #[test]
    fn identities_hold_on_all_families() {
        for family in 0..4 {
            let f = fixture(family, 0.1);
            let bound = compute_bound(&f.split);
            for psi in states(&f.split, 10, 21) {
                let terms = expansion_terms(&f.split, &psi).unwrap();
                let res = identity_residuals(&terms);
                assert!(res.max() <= 1e-9, "family {family}: {res:?}");
                assert!(trace(&terms.delta1).norm() <= 1e-10);
                assert!(max_abs(&(&terms.delta2 - &terms.v - &terms.w)) <= 1e-10);
                let tb = trace_bounds(&terms, &bound, TRACE_SLACK);
                assert!(tb.holds(), "{:?}", tb.violations);
                tb.check().unwrap();
            }
        }
    }

    #[test]
    fn maximally_entangled_state() {
        let f = fixture(1, 0.1);
        let v = f.split.code.basis();
        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let mut psi = StateVector::zeros(16);
        for j in 0..2 {
            for i in 0..8 {
                psi[i * 2 + j] += v[(i, j)] * s;
            }
        }
        let terms = expansion_terms(&f.split, &psi).unwrap();
        let mu = &terms.schmidt.coefficients;
        assert!(mu.iter().all(|m| (m - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12));
        assert!(identity_residuals(&terms).max() <= 1e-9);
    }

    #[test]
    fn rank_deficient_marginal() {
        let f = fixture(1, 0.1);
        let psi = f.split.code.embed(
            &StateVector::from_fn(4, |i, _| C64::from([0.6, 0.0, 0.8, 0.0][i])),
            2,
        ).unwrap();
        let terms = expansion_terms(&f.split, &psi).unwrap();
        assert_eq!(terms.schmidt.rank(), 1);
        assert!(terms.delta1.iter().chain(terms.delta2.iter()).all(|z| z.re.is_finite() && z.im.is_finite()));
        let fe = fidelity_expansion_check(&f.split, &f.rec, &psi).unwrap();
        assert!(fe.gap < 1e-2);
    }

    #[test]
    fn schmidt_root_matches_generic_root() {
        let f = fixture(2, 0.1);
        for psi in states(&f.split, 3, 8) {
            let terms = expansion_terms(&f.split, &psi).unwrap();
            let generic = psd_sqrt(&terms.rho_s, 1e-9).unwrap();
            assert!(max_abs(&(generic - terms.schmidt.sqrt_rho())) < 1e-7);
        }
    }

    #[test]
    fn second_order_trace_is_quadratic_in_remainder() {
        let f = fixture(1, 0.1);
        let psi = &states(&f.split, 1, 5)[0];
        let ts = [0.1, 0.05, 0.025];
        let traces: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let mut s = f.split.clone();
                s.uncorrectable.iter_mut().for_each(|b| *b *= C64::from(t));
                -trace(&expansion_terms(&s, psi).unwrap().delta2).re
            })
            .collect();
        let slope = loglog_slope(&ts, &traces).unwrap();
        assert!((slope - 2.0).abs() <= 0.02, "{slope}");
    }

    #[test]
    fn expansion_gap_shrinks_cubically() {
        // With a trivial bath the marginal is pure and the gap is quartic.
        let fam = 1;
        let samples = states(&fixture(fam, 0.0).split, 15, 31);
        let ratios: Vec<f64> = samples
            .iter()
            .map(|psi| {
                let g = |t: f64| {
                    let f = fixture(fam, t);
                    fidelity_expansion_check(&f.split, &f.rec, psi).unwrap().gap
                };
                g(0.05) / g(0.025)
            })
            .collect();
        let m = median(&ratios).unwrap();
        assert!((6.0..=10.0).contains(&m), "{ratios:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn theta_antihermitian_and_delta_psd(t in 0.01f64..0.3, family in 0usize..4) {
            let f = fixture(family, t);
            let b = compute_bound(&f.split);
            prop_assert!(b.antihermiticity_defect() <= 1e-10);
            prop_assert!(b.delta_min_eigenvalue() >= -1e-10);
            prop_assert!((b.epsilon - epsilon_from_norms(b.theta_norm_sq, b.delta_norm)).abs() == 0.0);
        }

        #[test]
        fn exact_identity_on_random_states(seed in 0u64..10_000, p in 0.01f64..0.3) {
            let code = repetition_code();
            let base = repetition_instance(p, 2);
            let basis = correctable_basis(&base, &code, 1e-9).unwrap();
            let rec = universal_recovery(&basis, &code);
            let dir = crate::instances::perturbation(2, 4);
            let ch = base.perturbed(&dir, 0.1).unwrap();
            let split = split_noise(&ch, &basis, &code, SplitMode::AutoProject, 1e-9).unwrap();
            let psi = code.sample_code_state(2, seed);
            prop_assert!(recovered_state_exact(&split, &rec, &psi).unwrap().residual() <= 1e-10);
            let terms = expansion_terms(&split, &psi).unwrap();
            prop_assert!(trace_bounds(&terms, &compute_bound(&split), TRACE_SLACK).holds());
        }
    }
}
