// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Perfect correctability of system–bath noise under recoveries of the form
//! `R_S ⊗ id_B`.
//!
//! The central object is the triple-indexed matrix
//! `Λ_{akℓ,bmn} = Tr[P_C E_{a;kℓ}† E_{b;mn} P_C] / d`. The channel is
//! correctable exactly when every product `P_C E_{a;kℓ}† E_{b;mn} P_C` equals
//! `Λ_{akℓ,bmn} P_C`. Diagonalizing `Λ` yields operators `F_α` that are
//! orthonormal on the code, and the universal recovery `{P_C F_α†}` built from
//! them corrects every channel whose slices stay in `span{F_α P_C}`.

use crate::channels::KrausChannel;
use crate::codes::CodeSpace;
use crate::error::{Error, Result};
use crate::matcore::{
    basis_vector, column, hermitian_eigen, identity, ket_bra, op_norm, partial_trace_bath, reduced_system_state,
    scaled_tol, tensor, trace, zeros, C64, ComplexMatrix, StateVector,
};
use crate::random::rng_from_seed;

/// Default relative tolerance for the proportionality conditions.
pub const DEFAULT_CONDITION_TOL: f64 = 1e-9;

/// Eigenvalues of `Λ` at or below `cutoff · max λ` are discarded.
pub const DEFAULT_EIGEN_CUTOFF: f64 = 1e-10;

/// `(a, k, ℓ)`: Kraus index plus the bath matrix element `⟨k|·|ℓ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TripleIndex {
    pub kraus: usize,
    pub k: usize,
    pub l: usize,
}

impl TripleIndex {
    fn from_flat(i: usize, d_b: usize) -> Self {
        Self {
            kraus: i / (d_b * d_b),
            k: (i / d_b) % d_b,
            l: i % d_b,
        }
    }
}

impl std::fmt::Display for TripleIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(a={}, k={}, l={})", self.kraus, self.k, self.l)
    }
}

#[derive(Debug, Clone)]
pub struct LambdaMatrix {
    /// Hermitian, of size `N·d_B²`, indexed by flattened `(a, k, ℓ)`.
    pub matrix: ComplexMatrix,
    pub n_kraus: usize,
    pub d_b: usize,
    /// Largest `‖P_C E†E P_C − Λ P_C‖` over all index pairs.
    pub residual: f64,
}

impl LambdaMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn triple(&self, i: usize) -> TripleIndex {
        TripleIndex::from_flat(i, self.d_b)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        crate::matcore::hermiticity_defect(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Largest off-diagonal magnitude; zero when `Λ` is diagonal.
    pub fn off_diagonal_max(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct ConditionsViolated {
    pub residual: f64,
    pub threshold: f64,
    pub worst: (TripleIndex, TripleIndex),
    /// Best-fit `Λ` (trace estimate) for diagnostics.
    pub lambda: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub enum LambdaVerdict {
    Correctable(LambdaMatrix),
    Violated(ConditionsViolated),
}

impl LambdaVerdict {
    pub fn is_correctable(&self) -> bool {
        matches!(self, LambdaVerdict::Correctable(_))
    }

    pub fn residual(&self) -> f64 {
        match self {
            LambdaVerdict::Correctable(l) => l.residual,
            LambdaVerdict::Violated(v) => v.residual,
        }
    }

    pub fn lambda(&self) -> Option<&LambdaMatrix> {
        match self {
            LambdaVerdict::Correctable(l) => Some(l),
            LambdaVerdict::Violated(_) => None,
        }
    }
}

struct GramFit {
    lambda: ComplexMatrix,
    residual: f64,
    worst: (usize, usize),
}

/// For code-restricted operators `W_i = A_i V` (with `V` the code isometry)
/// compute `Λ_ij = Tr[W_i† W_j]/d` and the largest deviation
/// `‖W_i† W_j − Λ_ij 1_d‖`.
fn gram_fit(restricted: &[ComplexMatrix], d: usize) -> GramFit {
    let n = restricted.len();
    let mut lambda = zeros(n, n);
    let mut residual = 0.0_f64;
    let mut worst = (0, 0);
    let id = identity(d);
    let adj: Vec<ComplexMatrix> = restricted.iter().map(|w| w.adjoint()).collect();
    for i in 0..n {
        for j in i..n {
            let m = &adj[i] * &restricted[j];
            let lam = trace(&m) / C64::from(d as f64);
            let dev = op_norm(&(m - &id * lam));
            if dev > residual {
                residual = dev;
                worst = (i, j);
            }
            lambda[(i, j)] = lam;
            lambda[(j, i)] = lam.conj();
        }
    }
    GramFit {
        lambda,
        residual,
        worst,
    }
}

fn max_abs_entry(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn check_code(ch: &KrausChannel, code: &CodeSpace) -> Result<()> {
    if ch.d_s() != code.d_s() {
        return Err(Error::DimensionMismatch(format!(
            "channel system dimension {} vs code system dimension {}",
            ch.d_s(),
            code.d_s()
        )));
    }
    Ok(())
}

/// Extract `Λ` and decide whether the perfect-correction conditions hold.
pub fn extract_lambda(ch: &KrausChannel, code: &CodeSpace, tol: f64) -> Result<LambdaVerdict> {
    check_code(ch, code)?;
    let v = code.basis();
    let restricted: Vec<ComplexMatrix> = ch.all_slices().iter().map(|s| s * v).collect();
    let fit = gram_fit(&restricted, code.dim());
    let threshold = scaled_tol(tol, max_abs_entry(&fit.lambda));
    let d_b = ch.d_b();
    if fit.residual <= threshold {
        Ok(LambdaVerdict::Correctable(LambdaMatrix {
            matrix: fit.lambda,
            n_kraus: ch.len(),
            d_b,
            residual: fit.residual,
        }))
    } else {
        Ok(LambdaVerdict::Violated(ConditionsViolated {
            residual: fit.residual,
            threshold,
            worst: (
                TripleIndex::from_flat(fit.worst.0, d_b),
                TripleIndex::from_flat(fit.worst.1, d_b),
            ),
            lambda: fit.lambda,
        }))
    }
}

/// Standard Knill–Laflamme check for a system-only channel.
pub fn kl_check(ch_sys: &KrausChannel, code: &CodeSpace, tol: f64) -> Result<LambdaVerdict> {
    if ch_sys.d_b() != 1 {
        return Err(Error::Invalid(format!(
            "kl_check expects a system-only channel, got d_b = {}",
            ch_sys.d_b()
        )));
    }
    extract_lambda(ch_sys, code, tol)
}

/// Operators `F_α` orthonormal on the code: `P_C F_α† F_β P_C = δ_{αβ} P_C`.
#[derive(Debug, Clone)]
pub struct CorrectableBasis {
    /// Already scaled by `1/√λ_α`.
    pub f_ops: Vec<ComplexMatrix>,
    /// Retained eigenvalues of `Λ`, ascending.
    pub eigvals: Vec<f64>,
    /// Full eigenvector matrix `v` of `Λ = v λ v†`.
    pub mixer: ComplexMatrix,
}

impl CorrectableBasis {
    pub fn len(&self) -> usize {
        self.f_ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_ops.is_empty()
    }

    /// `max_{αβ} ‖P_C F_α† F_β P_C − δ_{αβ} P_C‖`.
    pub fn orthonormality_defect(&self, code: &CodeSpace) -> f64 {
        let v = code.basis();
        let restricted: Vec<ComplexMatrix> = self.f_ops.iter().map(|f| f * v).collect();
        let id = identity(code.dim());
        let mut worst = 0.0_f64;
        for (a, fa) in restricted.iter().enumerate() {
            for (b, fb) in restricted.iter().enumerate() {
                let m = fa.adjoint() * fb;
                let target = if a == b { id.clone() } else { zeros(id.nrows(), id.ncols()) };
                worst = worst.max(op_norm(&(m - target)));
            }
        }
        worst
    }

    /// Coefficients `c_α = Tr[P_C F_α† S P_C]/d` of the orthogonal projection
    /// of `S P_C` onto `span{F_α P_C}`, together with the projected operator
    /// `Σ_α c_α F_α P_C` and the residual `‖S P_C − Σ_α c_α F_α P_C‖`.
    pub fn project(&self, code: &CodeSpace, s: &ComplexMatrix) -> SpanProjection {
        let pc = code.projector();
        let d = code.dim() as f64;
        let sp = s * &pc;
        let mut projected = zeros(sp.nrows(), sp.ncols());
        let mut coeffs = Vec::with_capacity(self.f_ops.len());
        for f in &self.f_ops {
            let fp = f * &pc;
            let coeff = trace(&(fp.adjoint() * &sp)) / C64::from(d);
            projected += fp * coeff;
            coeffs.push(coeff);
        }
        let residual = op_norm(&(&sp - &projected));
        SpanProjection {
            coeffs,
            projected,
            residual,
            norm: op_norm(&sp),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpanProjection {
    pub coeffs: Vec<C64>,
    /// `Σ_α c_α F_α P_C`.
    pub projected: ComplexMatrix,
    pub residual: f64,
    /// `‖S P_C‖`.
    pub norm: f64,
}

/// Diagonalize `Λ = v λ v†` and build `F_α = Σ_i v_{iα} E_i / √λ_α` over the
/// eigenvalues above `cutoff · max λ`.
pub fn diagonalize(
    lam: &LambdaMatrix,
    ch: &KrausChannel,
    code: &CodeSpace,
    cutoff: f64,
) -> Result<CorrectableBasis> {
    check_code(ch, code)?;
    let slices = ch.all_slices();
    if slices.len() != lam.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Λ has dimension {} but the channel has {} slices",
            lam.dim(),
            slices.len()
        )));
    }
    let (vals, vecs) = hermitian_eigen(&lam.matrix);
    let max = vals.iter().fold(0.0_f64, |acc, &v| acc.max(v));
    let threshold = cutoff * max;
    if let Some(&lo) = vals.first() {
        if lo < -threshold.max(1e-14) {
            return Err(Error::NegativeEigenvalue { value: lo });
        }
    }
    let d_s = ch.d_s();
    let mut f_ops = Vec::new();
    let mut eigvals = Vec::new();
    for (c_idx, &lambda) in vals.iter().enumerate() {
        if lambda <= threshold || lambda <= 0.0 {
            continue;
        }
        let scale = C64::from(1.0 / lambda.sqrt());
        let mut f = zeros(d_s, d_s);
        for (i, s) in slices.iter().enumerate() {
            f += s * (vecs[(i, c_idx)] * scale);
        }
        f_ops.push(f);
        eigvals.push(lambda);
    }
    Ok(CorrectableBasis {
        f_ops,
        eigvals,
        mixer: vecs,
    })
}

/// Recovery `R_S` acting on the system only; the system–bath recovery is
/// `R_S ⊗ id_B`.
#[derive(Debug, Clone)]
pub struct RecoveryMap {
    d_s: usize,
    /// `{P_C F_α†}`.
    pub system_kraus: Vec<ComplexMatrix>,
    /// Operators completing the map to a TP map on all of `H_S`.
    pub completion_kraus: Vec<ComplexMatrix>,
}

impl RecoveryMap {
    pub fn d_s(&self) -> usize {
        self.d_s
    }

    fn apply_list(list: &[ComplexMatrix], rho_s: &ComplexMatrix, out: &mut ComplexMatrix) {
        for r in list {
            *out += r * rho_s * r.adjoint();
        }
    }

    /// `Σ_α R_α ρ_S R_α†` over the primary operators only.
    pub fn apply_primary(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.d_s, self.d_s);
        Self::apply_list(&self.system_kraus, rho_s, &mut out);
        out
    }

    /// Contribution of the completion operators alone.
    pub fn apply_completion(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.d_s, self.d_s);
        Self::apply_list(&self.completion_kraus, rho_s, &mut out);
        out
    }

    /// The full TP recovery on a system operator.
    pub fn apply(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        self.apply_primary(rho_s) + self.apply_completion(rho_s)
    }

    /// `Tr_B{(R ∘ E)(|ψ⟩⟨ψ|)}`. Since `R = R_S ⊗ id_B` this equals
    /// `R_S(Tr_B{E(|ψ⟩⟨ψ|)})`.
    pub fn recover(&self, ch: &KrausChannel, psi: &StateVector) -> ComplexMatrix {
        self.apply(&ch.reduced_output(psi))
    }

    /// As [`recover`](Self::recover) with the primary operators only.
    pub fn recover_primary(&self, ch: &KrausChannel, psi: &StateVector) -> ComplexMatrix {
        self.apply_primary(&ch.reduced_output(psi))
    }

    /// `Tr_B{(R ∘ E)(ρ)}` for a general system–bath state.
    pub fn recover_density(&self, ch: &KrausChannel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let out = ch.apply(rho)?;
        Ok(self.apply(&partial_trace_bath(&out, ch.d_s(), ch.d_b())?))
    }

    pub fn all_kraus(&self) -> Vec<ComplexMatrix> {
        self.system_kraus
            .iter()
            .chain(&self.completion_kraus)
            .cloned()
            .collect()
    }

    pub fn completeness_defect(&self) -> f64 {
        let s = self
            .all_kraus()
            .iter()
            .fold(zeros(self.d_s, self.d_s), |acc, r| acc + r.adjoint() * r);
        op_norm(&(s - identity(self.d_s)))
    }

    /// `max ‖P_C R − R‖` over the primary operators.
    pub fn range_defect(&self, code: &CodeSpace) -> f64 {
        let pc = code.projector();
        self.system_kraus
            .iter()
            .map(|r| op_norm(&(&pc * r - r)))
            .fold(0.0, f64::max)
    }

    /// System–bath Kraus operators `{R ⊗ 1_B}`.
    pub fn system_bath_kraus(&self, d_b: usize) -> Vec<ComplexMatrix> {
        self.all_kraus()
            .iter()
            .map(|r| tensor(r, &identity(d_b)))
            .collect()
    }
}

/// Universal recovery `{P_C F_α†}`, completed to a TP map.
///
/// The deficiency `K = 1 − Σ_α F_α P_C F_α†` is routed to the first code
/// basis vector through operators `√κ_j |c₀⟩⟨v_j|`.
pub fn universal_recovery(basis: &CorrectableBasis, code: &CodeSpace) -> RecoveryMap {
    let pc = code.projector();
    let d_s = code.d_s();
    let system_kraus: Vec<ComplexMatrix> = basis.f_ops.iter().map(|f| &pc * f.adjoint()).collect();
    let used = system_kraus
        .iter()
        .fold(zeros(d_s, d_s), |acc, r| acc + r.adjoint() * r);
    let deficiency = identity(d_s) - used;
    let (vals, vecs) = hermitian_eigen(&deficiency);
    let anchor = code.anchor();
    let completion_kraus = vals
        .iter()
        .enumerate()
        .filter(|(_, &kappa)| kappa > DEFAULT_EIGEN_CUTOFF)
        .map(|(j, &kappa)| {
            let v: StateVector = vecs.column(j).into_owned();
            ket_bra(&anchor, &v) * C64::from(kappa.sqrt())
        })
        .collect();
    RecoveryMap {
        d_s,
        system_kraus,
        completion_kraus,
    }
}

/// `max_ψ ‖Tr_B{(R∘E)(ψ)} − γ² Tr_B{ψ}‖` over `n_states` seeded pure code
/// states. With `γ² = 1` this is the perfect-recovery round trip.
pub fn recovery_residual(
    ch: &KrausChannel,
    code: &CodeSpace,
    rec: &RecoveryMap,
    gamma2: f64,
    n_states: usize,
    seed: u64,
) -> f64 {
    let mut rng = rng_from_seed(seed);
    let (d_s, d_b) = (ch.d_s(), ch.d_b());
    (0..n_states)
        .map(|_| {
            let psi = code.sample_with(d_b, &mut rng);
            let rho_s = reduced_system_state(&psi, d_s, d_b);
            op_norm(&(rec.recover(ch, &psi) - rho_s * C64::from(gamma2)))
        })
        .fold(0.0, f64::max)
}

/// Sub-TP recovery check: the recovery reproduces `γ² Tr_B{ρ}`.
pub fn subtp_verify(
    ch: &KrausChannel,
    code: &CodeSpace,
    rec: &RecoveryMap,
    gamma2: f64,
    n_states: usize,
    seed: u64,
) -> f64 {
    recovery_residual(ch, code, rec, gamma2, n_states, seed)
}

/// Largest contribution of the completion operators on noisy code states.
pub fn completion_leakage(
    ch: &KrausChannel,
    code: &CodeSpace,
    rec: &RecoveryMap,
    n_states: usize,
    seed: u64,
) -> f64 {
    let mut rng = rng_from_seed(seed);
    (0..n_states)
        .map(|_| {
            let psi = code.sample_with(ch.d_b(), &mut rng);
            op_norm(&rec.apply_completion(&ch.reduced_output(&psi)))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SpanCheck {
    pub within: bool,
    /// Largest relative complement norm over all slices.
    pub residual: f64,
    pub worst: TripleIndex,
}

/// Whether every slice `Ẽ_{b;mn} P_C` lies in `span{F_α P_C}`.
pub fn span_correctable(
    new_ch: &KrausChannel,
    basis: &CorrectableBasis,
    code: &CodeSpace,
    tol: f64,
) -> Result<SpanCheck> {
    check_code(new_ch, code)?;
    let d_b = new_ch.d_b();
    let mut residual = 0.0_f64;
    let mut worst = TripleIndex::from_flat(0, d_b);
    for (i, s) in new_ch.all_slices().iter().enumerate() {
        let proj = basis.project(code, s);
        let rel = proj.residual / proj.norm.max(1.0);
        if rel > residual {
            residual = rel;
            worst = TripleIndex::from_flat(i, d_b);
        }
    }
    Ok(SpanCheck {
        within: residual <= tol,
        residual,
        worst,
    })
}

#[derive(Debug, Clone)]
pub struct OqecCheck {
    pub passes: bool,
    pub residual: f64,
    pub threshold: f64,
}

/// Subsystem-code conditions `P_A ⟨ℓ|E_i† E_j|k⟩ P_A = Λ_{iℓ,jk} P_A` with
/// `H_A` the code and the subsystem factor the stored bath.
pub fn oqec_check(ch: &KrausChannel, code: &CodeSpace, tol: f64) -> Result<OqecCheck> {
    check_code(ch, code)?;
    let d_b = ch.d_b();
    let v = code.basis();
    let mut restricted = Vec::with_capacity(ch.len() * d_b);
    for e in ch.kraus() {
        for l in 0..d_b {
            let ket_l = column(&basis_vector(d_b, l));
            restricted.push(e * tensor(v, &ket_l));
        }
    }
    let fit = gram_fit(&restricted, code.dim());
    let threshold = scaled_tol(tol, max_abs_entry(&fit.lambda));
    Ok(OqecCheck {
        passes: fit.residual <= threshold,
        residual: fit.residual,
        threshold,
    })
}

/// Outcome of the full perfect-correction pipeline.
#[derive(Debug, Clone)]
pub struct PerfectAnalysis {
    pub lambda: LambdaMatrix,
    pub basis: CorrectableBasis,
    pub recovery: RecoveryMap,
    pub orthonormality_defect: f64,
    pub round_trip_residual: f64,
}

/// `extract_lambda → diagonalize → universal_recovery → round trip`.
/// Returns the violation verdict unchanged when the conditions fail.
pub fn analyze_perfect(
    ch: &KrausChannel,
    code: &CodeSpace,
    tol: f64,
    n_states: usize,
    seed: u64,
) -> Result<std::result::Result<PerfectAnalysis, ConditionsViolated>> {
    let lambda = match extract_lambda(ch, code, tol)? {
        LambdaVerdict::Correctable(l) => l,
        LambdaVerdict::Violated(v) => return Ok(Err(v)),
    };
    let basis = diagonalize(&lambda, ch, code, DEFAULT_EIGEN_CUTOFF)?;
    let recovery = universal_recovery(&basis, code);
    let gamma2 = match ch.classify_tp(&code.full_projector(ch.d_b()), tol) {
        crate::channels::TpClass::SubTp { gamma2 } => gamma2,
        _ => 1.0,
    };
    let round_trip_residual = recovery_residual(ch, code, &recovery, gamma2, n_states, seed);
    let orthonormality_defect = basis.orthonormality_defect(code);
    Ok(Ok(PerfectAnalysis {
        lambda,
        basis,
        recovery,
        orthonormality_defect,
        round_trip_residual,
    }))
}

/// Correctable basis of a channel already known to satisfy the conditions.
pub fn correctable_basis(ch: &KrausChannel, code: &CodeSpace, tol: f64) -> Result<CorrectableBasis> {
    match extract_lambda(ch, code, tol)? {
        LambdaVerdict::Correctable(l) => diagonalize(&l, ch, code, DEFAULT_EIGEN_CUTOFF),
        LambdaVerdict::Violated(v) => Err(Error::Invalid(format!(
            "reference channel is not correctable (residual {:e} at {} / {})",
            v.residual, v.worst.0, v.worst.1
        ))),
    }
}
