// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Bundled channels and codes: the three-qubit repetition code under bit
//! flips, bath-decorated variants, perturbed families, and contrast cases.

use crate::channels::KrausChannel;
use crate::codes::CodeSpace;
use crate::error::Result;
use crate::matcore::pauli::{clock, fourier, on_qubit, shift, x, y, z};
use crate::matcore::{c, identity, tensor, C64, ComplexMatrix};
use crate::random::{haar_unitary, rng_from_seed};

/// Seed of the bath unitaries in the perturbed families.
pub const FAMILY_SEED: u64 = 2026;

pub const REPETITION_D_S: usize = 8;

/// `span{|000⟩, |111⟩}`.
pub fn repetition_code() -> CodeSpace {
    CodeSpace::computational(REPETITION_D_S, &[0, 7]).expect("valid indices")
}

fn q(op: &ComplexMatrix, which: usize) -> ComplexMatrix {
    on_qubit(op, which, 3)
}

/// `{√(1−3p) I, √p X₁, √p X₂, √p X₃}`.
pub fn bit_flip(p: f64) -> KrausChannel {
    assert!((0.0..=1.0 / 3.0).contains(&p), "bit-flip probability out of range");
    let mut kraus = vec![identity(8) * C64::from((1.0 - 3.0 * p).sqrt())];
    for i in 0..3 {
        kraus.push(q(&x(), i) * C64::from(p.sqrt()));
    }
    KrausChannel::system_only(8, kraus).expect("valid channel")
}

/// `{√(1−p) I, √p X₁}`.
pub fn single_flip(p: f64) -> KrausChannel {
    let kraus = vec![
        identity(8) * C64::from((1.0 - p).sqrt()),
        q(&x(), 0) * C64::from(p.sqrt()),
    ];
    KrausChannel::system_only(8, kraus).expect("valid channel")
}

/// Bath unitaries `1, shift, clock, Fourier, …` cycled to `n` entries.
pub fn bath_unitaries(d_b: usize, n: usize) -> Vec<ComplexMatrix> {
    let pool = [identity(d_b), shift(d_b), clock(d_b), fourier(d_b)];
    (0..n).map(|i| pool[i % pool.len()].clone()).collect()
}

/// `{K_a ⊗ U_a}`: correctable whenever `{K_a}` is, on any bath.
pub fn decorate(system: &KrausChannel, d_b: usize) -> KrausChannel {
    KrausChannel::decorated(system, &bath_unitaries(d_b, system.len())).expect("matching lengths")
}

/// `{K_a ⊗ U_a}` with seeded Haar-random `U_a`. Generic bath unitaries avoid
/// the symmetries of the structured ones, under which the third-order term of
/// the fidelity expansion cancels.
pub fn decorate_haar(system: &KrausChannel, d_b: usize, seed: u64) -> KrausChannel {
    let mut rng = rng_from_seed(seed);
    let ops: Vec<ComplexMatrix> = (0..system.len())
        .map(|_| if d_b == 1 { identity(1) } else { haar_unitary(d_b, &mut rng) })
        .collect();
    KrausChannel::decorated(system, &ops).expect("matching lengths")
}

pub fn repetition_instance(p: f64, d_b: usize) -> KrausChannel {
    decorate(&bit_flip(p), d_b)
}

/// A fixed system–bath direction that leaves the correctable span: it mixes
/// phase errors, two-qubit flips, and bath operators. One entry per Kraus
/// operator, truncated to `n`.
pub fn perturbation(d_b: usize, n: usize) -> Vec<ComplexMatrix> {
    let (xb, zb) = (shift(d_b), clock(d_b));
    let ib = identity(d_b);
    let pool = [
        tensor(&q(&z(), 0), &xb) + tensor(&(q(&x(), 0) * q(&x(), 1)), &ib) * c(0.0, 0.5),
        tensor(&q(&y(), 1), &zb),
        tensor(&q(&z(), 2), &xb),
        tensor(&(q(&x(), 0) * q(&x(), 2)), &ib) * c(0.5, 0.0),
    ];
    (0..n).map(|i| pool[i % pool.len()].clone()).collect()
}

/// A correctable base channel together with a perturbation direction. At
/// scale `t` the channel is `{(E_a + t G_a) S^{-1/2}}`.
#[derive(Debug, Clone)]
pub struct PerturbedFamily {
    pub name: String,
    pub base: KrausChannel,
    pub direction: Vec<ComplexMatrix>,
    pub code: CodeSpace,
}

impl PerturbedFamily {
    pub fn new(name: &str, base: KrausChannel, code: CodeSpace) -> Self {
        let direction = perturbation(base.d_b(), base.len());
        Self {
            name: name.to_string(),
            base,
            direction,
            code,
        }
    }

    pub fn at(&self, t: f64) -> Result<KrausChannel> {
        if t == 0.0 {
            return Ok(self.base.clone());
        }
        self.base.perturbed(&self.direction, t)
    }
}

/// Perturbed repetition-code families used by the approximate-correction
/// checks.
pub fn perturbed_families() -> Vec<PerturbedFamily> {
    let code = repetition_code();
    let mut out: Vec<PerturbedFamily> = [1, 2, 3]
        .iter()
        .map(|&d_b| {
            PerturbedFamily::new(
                &format!("rep3-bitflip-p0.05-db{d_b}"),
                decorate_haar(&bit_flip(0.05), d_b, FAMILY_SEED + d_b as u64),
                code.clone(),
            )
        })
        .collect();
    out.push(PerturbedFamily::new(
        "rep3-singleflip-p0.1-db2",
        decorate_haar(&single_flip(0.1), 2, FAMILY_SEED),
        code,
    ));
    out
}

/// Qubit system, qubit bath, `E = {SWAP}`. Correctable when the bath factor
/// is part of the recovery, not with system-only recoveries.
pub fn swap_witness() -> (KrausChannel, CodeSpace) {
    let mut swap = ComplexMatrix::zeros(4, 4);
    for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        swap[(r, col)] = C64::from(1.0);
    }
    (
        KrausChannel::new(2, 2, vec![swap]).expect("valid channel"),
        CodeSpace::full(2),
    )
}

/// Bit flips plus a two-qubit flip `X₁X₂` outside the correctable span.
pub fn out_of_span_channel(p: f64, q2: f64) -> KrausChannel {
    let mut kraus = bit_flip(p).kraus().to_vec();
    kraus[0] = identity(8) * C64::from((1.0 - 3.0 * p - q2).sqrt());
    kraus.push(q(&x(), 0) * q(&x(), 1) * C64::from(q2.sqrt()));
    KrausChannel::system_only(8, kraus).expect("valid channel")
}

/// Named channel and code pair, optionally carrying a perturbation direction
/// and the scale at which the channel was evaluated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub channel: KrausChannel,
    pub code: CodeSpace,
    pub perturbation: Option<Vec<ComplexMatrix>>,
    pub correctable: bool,
}

impl Scenario {
    /// Stem of the bundled code file this scenario uses.
    pub fn code_name(&self) -> &'static str {
        if self.code.d_s() == REPETITION_D_S {
            "rep3"
        } else {
            "qubit"
        }
    }

    fn new(name: &str, channel: KrausChannel, code: CodeSpace, correctable: bool) -> Self {
        Self {
            name: name.to_string(),
            channel,
            code,
            perturbation: None,
            correctable,
        }
    }
}

/// Every bundled scenario, in a fixed order.
pub fn bundled() -> Vec<Scenario> {
    let rep = repetition_code();
    let mut out = vec![Scenario::new(
        "identity",
        KrausChannel::identity(8, 1),
        rep.clone(),
        true,
    )];
    for &p in &[0.01, 0.05, 0.1] {
        for d_b in 1..=3 {
            out.push(Scenario::new(
                &format!("rep3-bitflip-p{p}-db{d_b}"),
                repetition_instance(p, d_b),
                rep.clone(),
                true,
            ));
        }
    }
    out.push(Scenario::new(
        "rep3-singleflip-p0.1-db2",
        decorate(&single_flip(0.1), 2),
        rep.clone(),
        true,
    ));
    out.push(Scenario::new(
        "rep3-x1x2-out-of-span",
        out_of_span_channel(0.05, 0.05),
        rep.clone(),
        false,
    ));
    let (swap, full) = swap_witness();
    out.push(Scenario::new("swap-witness", swap, full, false));
    for family in perturbed_families() {
        let mut s = Scenario::new(
            &format!("{}-perturbed", family.name),
            family.base.clone(),
            family.code.clone(),
            true,
        );
        s.perturbation = Some(family.direction.clone());
        out.push(s);
    }
    out
}
