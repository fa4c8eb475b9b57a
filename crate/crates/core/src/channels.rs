// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Kraus-form channels on `H_S ⊗ H_B`.

use crate::error::{Error, Result};
use crate::matcore::{
    bath_slice, hermitian_function, identity, is_finite, min_eigenvalue, op_norm,
    partial_trace_bath, scaled_tol, tensor, trace, zeros, C64, ComplexMatrix, StateVector,
};

/// Tolerance used when verifying complete positivity of loaded channels.
pub const CP_TOL: f64 = 1e-9;

/// A CP map `ρ ↦ Σ_a E_a ρ E_a†` on a system of dimension `d_s` coupled to a
/// bath of dimension `d_b` (`d_b = 1` for system-only channels).
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d_s: usize,
    d_b: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Trace-preservation class of a channel relative to a code projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TpClass {
    Tp,
    /// `P(Σ E†E)P = γ² P`.
    SubTp { gamma2: f64 },
    Neither,
}

impl KrausChannel {
    pub fn new(d_s: usize, d_b: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if d_s == 0 || d_b == 0 {
            return Err(Error::Invalid("channel dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::Invalid("channel has no Kraus operators".into()));
        }
        let n = d_s * d_b;
        for (a, k) in kraus.iter().enumerate() {
            if k.nrows() != n || k.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "kraus[{a}] is {}x{}, expected {n}x{n}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if !is_finite(k) {
                return Err(Error::Invalid(format!("kraus[{a}] has non-finite entries")));
            }
        }
        Ok(Self { d_s, d_b, kraus })
    }

    pub fn system_only(d_s: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(d_s, 1, kraus)
    }

    /// `{E_S,a ⊗ U_a}`: a system channel decorated with one bath operator per
    /// Kraus term.
    pub fn decorated(system: &KrausChannel, bath_ops: &[ComplexMatrix]) -> Result<Self> {
        if system.d_b != 1 {
            return Err(Error::Invalid("decorated() expects a system-only channel".into()));
        }
        if bath_ops.len() != system.kraus.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bath operators for {} Kraus operators",
                bath_ops.len(),
                system.kraus.len()
            )));
        }
        let d_b = bath_ops[0].nrows();
        let kraus = system
            .kraus
            .iter()
            .zip(bath_ops)
            .map(|(k, u)| tensor(k, u))
            .collect();
        Self::new(system.d_s, d_b, kraus)
    }

    pub fn identity(d_s: usize, d_b: usize) -> Self {
        Self {
            d_s,
            d_b,
            kraus: vec![identity(d_s * d_b)],
        }
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dim(&self) -> usize {
        self.d_s * self.d_b
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, channel acts on dimension {n}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let mut out = zeros(n, n);
        for e in &self.kraus {
            out += e * rho * e.adjoint();
        }
        Ok(out)
    }

    /// `Tr_B{E(|ψ⟩⟨ψ|)}` without forming the system–bath density matrix.
    pub fn reduced_output(&self, psi: &StateVector) -> ComplexMatrix {
        let mut out = zeros(self.d_s, self.d_s);
        for e in &self.kraus {
            let phi = crate::matcore::reshape_state(&(e * psi), self.d_s, self.d_b);
            out += &phi * phi.adjoint();
        }
        out
    }

    /// `Σ_a E_a† E_a`.
    pub fn completeness(&self) -> ComplexMatrix {
        let n = self.dim();
        self.kraus
            .iter()
            .fold(zeros(n, n), |acc, e| acc + e.adjoint() * e)
    }

    pub fn tp_defect(&self) -> f64 {
        op_norm(&(self.completeness() - identity(self.dim())))
    }

    /// Classify trace preservation relative to a projector `P` on the full
    /// system–bath space.
    pub fn classify_tp(&self, code_proj: &ComplexMatrix, tol: f64) -> TpClass {
        let s = self.completeness();
        let n = self.dim();
        if code_proj.nrows() != n {
            return TpClass::Neither;
        }
        if op_norm(&(&s - identity(n))) <= tol {
            return TpClass::Tp;
        }
        let restricted = code_proj * &s * code_proj;
        let rank = trace(code_proj).re;
        if rank <= 0.0 {
            return TpClass::Neither;
        }
        let gamma2 = trace(&restricted).re / rank;
        let defect = op_norm(&(restricted - code_proj * C64::from(gamma2)));
        if gamma2 > 0.0 && defect <= scaled_tol(tol, gamma2) {
            TpClass::SubTp { gamma2 }
        } else {
            TpClass::Neither
        }
    }

    /// `{E_{a;kℓ}} = {⟨k|E_a|ℓ⟩}` as system operators.
    pub fn slice(&self, k: usize, l: usize) -> Result<Vec<ComplexMatrix>> {
        if k >= self.d_b || l >= self.d_b {
            return Err(Error::IndexOutOfRange(format!(
                "bath indices ({k},{l}) with d_b = {}",
                self.d_b
            )));
        }
        Ok(self
            .kraus
            .iter()
            .map(|e| bath_slice(e, self.d_s, self.d_b, k, l))
            .collect())
    }

    /// All slices ordered by the triple index `(a, k, ℓ)`, i.e. position
    /// `a * d_b² + k * d_b + ℓ`.
    pub fn all_slices(&self) -> Vec<ComplexMatrix> {
        let mut out = Vec::with_capacity(self.kraus.len() * self.d_b * self.d_b);
        for e in &self.kraus {
            for k in 0..self.d_b {
                for l in 0..self.d_b {
                    out.push(bath_slice(e, self.d_s, self.d_b, k, l));
                }
            }
        }
        out
    }

    /// System-only channel `(Tr_B ∘ E)(· ⊗ 1_B/d_B)` with Kraus operators
    /// `E_{a;kℓ}/√d_B`.
    pub fn g_map(&self) -> KrausChannel {
        let scale = C64::from(1.0 / (self.d_b as f64).sqrt());
        let kraus = self.all_slices().into_iter().map(|s| s * scale).collect();
        KrausChannel {
            d_s: self.d_s,
            d_b: 1,
            kraus,
        }
    }

    /// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ E(|i⟩⟨j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                // E(|i⟩⟨j|) = Σ_a E_a[:, i] E_a[:, j]†
                let mut block = zeros(n, n);
                for e in &self.kraus {
                    block += e.column(i) * e.column(j).adjoint();
                }
                out.view_mut((i * n, j * n), (n, n)).copy_from(&block);
            }
        }
        out
    }

    /// Checks complete positivity through the Choi spectrum and returns its
    /// minimum eigenvalue.
    pub fn verify_cp(&self, tol: f64) -> Result<f64> {
        let choi = self.choi();
        let lo = min_eigenvalue(&choi);
        if lo < -scaled_tol(tol, op_norm(&choi)) {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: lo });
        }
        Ok(lo)
    }

    pub fn scaled(&self, factor: f64) -> KrausChannel {
        KrausChannel {
            d_s: self.d_s,
            d_b: self.d_b,
            kraus: self.kraus.iter().map(|e| e * C64::from(factor)).collect(),
        }
    }

    /// `{Σ_b u_{ab} E_b}` for a unitary `u`: the same channel in another
    /// Kraus representation.
    pub fn remixed(&self, u: &ComplexMatrix) -> Result<KrausChannel> {
        let n = self.kraus.len();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "remix matrix is {}x{}, channel has {n} Kraus operators",
                u.nrows(),
                u.ncols()
            )));
        }
        let dim = self.dim();
        let kraus = (0..n)
            .map(|a| {
                (0..n).fold(zeros(dim, dim), |acc, b| acc + &self.kraus[b] * u[(a, b)])
            })
            .collect();
        Ok(KrausChannel {
            d_s: self.d_s,
            d_b: self.d_b,
            kraus,
        })
    }

    /// Change of bath basis: `E_a → (1_S ⊗ U) E_a (1_S ⊗ U†)`.
    pub fn bath_conjugated(&self, u: &ComplexMatrix) -> Result<KrausChannel> {
        if u.nrows() != self.d_b || u.ncols() != self.d_b {
            return Err(Error::DimensionMismatch("bath unitary has wrong size".into()));
        }
        let w = tensor(&identity(self.d_s), u);
        let wd = w.adjoint();
        Ok(KrausChannel {
            d_s: self.d_s,
            d_b: self.d_b,
            kraus: self.kraus.iter().map(|e| &w * e * &wd).collect(),
        })
    }

    /// Keep the Kraus operators at the given positions.
    pub fn subset(&self, keep: &[usize]) -> Result<KrausChannel> {
        let kraus = keep
            .iter()
            .map(|&a| {
                self.kraus
                    .get(a)
                    .cloned()
                    .ok_or_else(|| Error::IndexOutOfRange(format!("kraus index {a}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.d_s, self.d_b, kraus)
    }

    /// `{(E_a + t G_a) S^{-1/2}}` with `S = Σ (E_a + t G_a)†(E_a + t G_a)`: a
    /// trace-preserving family through this channel at `t = 0` (when it is
    /// TP) in the direction of `perturbation`.
    pub fn perturbed(&self, perturbation: &[ComplexMatrix], t: f64) -> Result<KrausChannel> {
        if perturbation.len() != self.kraus.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} perturbation operators for {} Kraus operators",
                perturbation.len(),
                self.kraus.len()
            )));
        }
        let raw = KrausChannel::new(
            self.d_s,
            self.d_b,
            self.kraus
                .iter()
                .zip(perturbation)
                .map(|(e, g)| e + g * C64::from(t))
                .collect(),
        )?;
        raw.renormalized()
    }

    /// Right-multiply every Kraus operator by `S^{-1/2}` so the result is TP.
    pub fn renormalized(&self) -> Result<KrausChannel> {
        let s = self.completeness();
        let (vals, _) = crate::matcore::hermitian_eigen(&s);
        if vals.first().is_none_or(|&v| v <= 1e-12) {
            return Err(Error::Invalid(
                "Σ E†E is singular; the channel cannot be renormalized".into(),
            ));
        }
        let inv_sqrt = hermitian_function(&s, |v| 1.0 / v.sqrt());
        Ok(KrausChannel {
            d_s: self.d_s,
            d_b: self.d_b,
            kraus: self.kraus.iter().map(|e| e * &inv_sqrt).collect(),
        })
    }
}

/// `Tr_B{E(ρ_S ⊗ 1/d_B)}` evaluated directly; agrees with `g_map` applied
/// to `ρ_S`.
pub fn g_map_direct(ch: &KrausChannel, rho_s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d_b = ch.d_b();
    let mixed_bath = identity(d_b) * C64::from(1.0 / d_b as f64);
    let out = ch.apply(&tensor(rho_s, &mixed_bath))?;
    partial_trace_bath(&out, ch.d_s(), d_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{basis_vector, c, column, outer, pauli, trace_norm, ONE, ZERO};
    use crate::random::{haar_unitary, random_density, random_matrix, rng_from_seed};

    fn max_abs(m: &ComplexMatrix) -> f64 {
        m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    fn bit_flip(p: f64) -> KrausChannel {
        KrausChannel::system_only(
            2,
            vec![identity(2) * c((1.0 - p).sqrt(), 0.0), pauli::x() * c(p.sqrt(), 0.0)],
        )
        .unwrap()
    }

    fn swap() -> KrausChannel {
        let mut s = zeros(4, 4);
        for i in 0..2 {
            for k in 0..2 {
                s[(k * 2 + i, i * 2 + k)] = ONE;
            }
        }
        KrausChannel::new(2, 2, vec![s]).unwrap()
    }

    #[test]
    fn apply_identity_and_bit_flip() {
        let mut rng = rng_from_seed(1);
        let rho = random_density(3, &mut rng);
        let id = KrausChannel::identity(3, 1);
        assert!(max_abs(&(id.apply(&rho).unwrap() - &rho)) < 1e-15);

        let zero = outer(&basis_vector(2, 0));
        let out = bit_flip(0.25).apply(&zero).unwrap();
        let expected = ComplexMatrix::from_row_slice(2, 2, &[c(0.75, 0.0), ZERO, ZERO, c(0.25, 0.0)]);
        assert!(max_abs(&(out - expected)) < 1e-15);
    }

    #[test]
    fn apply_matches_term_by_term_loop() {
        let mut rng = rng_from_seed(2);
        let kraus: Vec<_> = (0..3).map(|_| random_matrix(4, 4, &mut rng)).collect();
        let ch = KrausChannel::new(2, 2, kraus.clone()).unwrap();
        let rho = random_density(4, &mut rng);
        let got = ch.apply(&rho).unwrap();
        let mut oracle = zeros(4, 4);
        for e in &kraus {
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = ZERO;
                    for p in 0..4 {
                        for q in 0..4 {
                            acc += e[(i, p)] * rho[(p, q)] * e[(j, q)].conj();
                        }
                    }
                    oracle[(i, j)] += acc;
                }
            }
        }
        assert!(max_abs(&(got - oracle)) < 1e-12);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let ch = KrausChannel::identity(2, 2);
        assert!(matches!(ch.apply(&identity(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn classify_tp_cases() {
        let p = identity(2);
        assert_eq!(bit_flip(0.1).classify_tp(&p, 1e-10), TpClass::Tp);
        match KrausChannel::identity(2, 1).scaled(0.5f64.sqrt()).classify_tp(&p, 1e-10) {
            TpClass::SubTp { gamma2 } => assert!((gamma2 - 0.5).abs() < 1e-14),
            other => panic!("expected SubTp, got {other:?}"),
        }
        let proj0 = outer(&basis_vector(2, 0));
        let ch = KrausChannel::system_only(2, vec![proj0]).unwrap();
        assert_eq!(ch.classify_tp(&p, 1e-10), TpClass::Neither);
    }

    #[test]
    fn slice_of_product_operator() {
        let mut rng = rng_from_seed(3);
        let a = random_matrix(2, 2, &mut rng);
        // |m⟩⟨n| with m = 1, n = 2 in a 3-dim bath
        let mn = crate::matcore::ket_bra(&basis_vector(3, 1), &basis_vector(3, 2));
        let ch = KrausChannel::new(2, 3, vec![tensor(&a, &mn)]).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let s = &ch.slice(k, l).unwrap()[0];
                let expected = if (k, l) == (1, 2) { a.clone() } else { zeros(2, 2) };
                assert!(max_abs(&(s - expected)) < 1e-15);
            }
        }
        assert!(matches!(ch.slice(3, 0), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn slice_trivial_bath() {
        let ch = bit_flip(0.2);
        assert_eq!(ch.slice(0, 0).unwrap(), ch.kraus().to_vec());
    }

    #[test]
    fn slice_matches_block_extraction() {
        let mut rng = rng_from_seed(4);
        let e = random_matrix(6, 6, &mut rng);
        let ch = KrausChannel::new(3, 2, vec![e.clone()]).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                // (1 ⊗ ⟨k|) E (1 ⊗ |ℓ⟩)
                let bra = tensor(&identity(3), &column(&basis_vector(2, k)).adjoint());
                let ket = tensor(&identity(3), &column(&basis_vector(2, l)));
                let oracle = &bra * &e * &ket;
                assert!(max_abs(&(&ch.slice(k, l).unwrap()[0] - oracle)) < 1e-15);
            }
        }
    }

    #[test]
    fn g_map_trivial_bath_is_unchanged() {
        let ch = bit_flip(0.3);
        assert_eq!(ch.g_map(), ch);
    }

    #[test]
    fn g_map_of_system_only_noise() {
        let mut rng = rng_from_seed(5);
        let sys = bit_flip(0.3);
        let kraus = sys.kraus().iter().map(|k| tensor(k, &identity(3))).collect();
        let ch = KrausChannel::new(2, 3, kraus).unwrap();
        let g = ch.g_map();
        let rho = random_density(2, &mut rng);
        assert!(max_abs(&(g.apply(&rho).unwrap() - sys.apply(&rho).unwrap())) < 1e-14);
        assert!(g.tp_defect() < 1e-10);
    }

    #[test]
    fn g_map_of_swap_is_fully_mixing() {
        let mut rng = rng_from_seed(6);
        let ch = swap();
        let g = ch.g_map();
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let half = identity(2) * c(0.5, 0.0);
            assert!(max_abs(&(g.apply(&rho).unwrap() - &half)) < 1e-14);
            assert!(max_abs(&(g_map_direct(&ch, &rho).unwrap() - &half)) < 1e-14);
        }
    }

    #[test]
    fn g_map_is_not_an_effective_system_description() {
        // |0⟩⟨0| ⊗ |1⟩⟨1| through a swap: G(Tr_B ρ) = 1/2 but Tr_B E(ρ) = |1⟩⟨1|.
        let ch = swap();
        let psi = crate::matcore::tensor_vec(&basis_vector(2, 0), &basis_vector(2, 1));
        let rho = outer(&psi);
        let lhs = ch.g_map().apply(&partial_trace_bath(&rho, 2, 2).unwrap()).unwrap();
        let rhs = partial_trace_bath(&ch.apply(&rho).unwrap(), 2, 2).unwrap();
        assert!(trace_norm(&(lhs - rhs)) >= 0.01);
    }

    #[test]
    fn choi_of_identity_and_depolarizing() {
        let choi = KrausChannel::identity(2, 1).choi();
        let mut expected = zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(i, j)] = ONE;
        }
        assert!(max_abs(&(choi - expected)) < 1e-15);

        let dep = KrausChannel::system_only(
            2,
            vec![identity(2), pauli::x(), pauli::y(), pauli::z()]
                .into_iter()
                .map(|p| p * c(0.5, 0.0))
                .collect(),
        )
        .unwrap();
        assert!(max_abs(&(dep.choi() - identity(4) * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn choi_is_psd_for_kraus_channels() {
        let mut rng = rng_from_seed(7);
        let kraus: Vec<_> = (0..3).map(|_| random_matrix(4, 4, &mut rng)).collect();
        let ch = KrausChannel::new(2, 2, kraus).unwrap();
        assert!(ch.verify_cp(CP_TOL).unwrap() >= -1e-10);
    }

    #[test]
    fn remix_and_bath_conjugation_preserve_action() {
        let mut rng = rng_from_seed(8);
        let kraus: Vec<_> = (0..3).map(|_| random_matrix(4, 4, &mut rng)).collect();
        let ch = KrausChannel::new(2, 2, kraus).unwrap();
        let rho = random_density(4, &mut rng);
        let u = haar_unitary(3, &mut rng);
        let remixed = ch.remixed(&u).unwrap();
        assert!(max_abs(&(remixed.apply(&rho).unwrap() - ch.apply(&rho).unwrap())) < 1e-12);

        // bath conjugation commutes with the partial trace of a TP channel's
        // completeness relation
        let ub = haar_unitary(2, &mut rng);
        let conj = ch.bath_conjugated(&ub).unwrap();
        let w = tensor(&identity(2), &ub);
        let expected = &w * ch.completeness() * w.adjoint();
        assert!(max_abs(&(conj.completeness() - expected)) < 1e-12);
    }

    #[test]
    fn perturbed_family_is_tp() {
        let mut rng = rng_from_seed(9);
        let g: Vec<_> = (0..2).map(|_| random_matrix(2, 2, &mut rng)).collect();
        let ch = bit_flip(0.1).perturbed(&g, 0.2).unwrap();
        assert!(ch.tp_defect() < 1e-12);
        assert!(bit_flip(0.1).perturbed(&g, 0.0).unwrap().tp_defect() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn tp_channels_preserve_trace(seed in any::<u64>()) {
                let mut rng = rng_from_seed(seed);
                let raw: Vec<_> = (0..3).map(|_| random_matrix(6, 6, &mut rng)).collect();
                let ch = KrausChannel::new(3, 2, raw).unwrap().renormalized().unwrap();
                let rho = random_density(6, &mut rng);
                let out = ch.apply(&rho).unwrap();
                prop_assert!((trace(&out).re - 1.0).abs() < 1e-10);
                prop_assert!(ch.g_map().tp_defect() < 1e-10);
            }

            #[test]
            fn g_map_agrees_with_direct_evaluation(seed in any::<u64>()) {
                let mut rng = rng_from_seed(seed);
                let raw: Vec<_> = (0..2).map(|_| random_matrix(6, 6, &mut rng)).collect();
                let ch = KrausChannel::new(2, 3, raw).unwrap();
                let rho = random_density(2, &mut rng);
                let via_kraus = ch.g_map().apply(&rho).unwrap();
                let direct = g_map_direct(&ch, &rho).unwrap();
                prop_assert!(max_abs(&(via_kraus - direct)) < 1e-10);
            }
        }
    }
}
