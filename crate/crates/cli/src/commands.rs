// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use anyhow::{bail, Context, Result};
use osqec_core::approx::{
    compute_bound, expansion_terms, fidelity_from_terms, identity_residuals,
    recovered_state_exact, split_noise, trace_bounds, NoiseSplit, SplitMode, TRACE_SLACK,
};
use osqec_core::fidelity::worst_case_eta;
use osqec_core::fit::{loglog_slope, median};
use osqec_core::instances::{bundled, perturbed_families};
use osqec_core::io::{load_split, ChannelFile};
use osqec_core::perfect::{
    analyze_perfect, correctable_basis, oqec_check, universal_recovery, CorrectableBasis,
    RecoveryMap,
};
use osqec_core::{CodeSpace, Error, KrausChannel, TpClass};

use crate::report::{real, Report};

/// Whether the command's verdict was positive. Negative verdicts exit 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
}

impl Verdict {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Verdict::Positive
        } else {
            Verdict::Negative
        }
    }

    fn and(self, ok: bool) -> Self {
        Verdict::from_ok(self == Verdict::Positive && ok)
    }
}

pub struct Scenario {
    pub channel: ChannelFile,
    pub code: CodeSpace,
    /// Correctable channel whose basis defines the recovery. Defaults to the
    /// stored channel.
    pub reference: Option<KrausChannel>,
}

impl Scenario {
    fn reference_channel(&self) -> &KrausChannel {
        self.reference.as_ref().unwrap_or(&self.channel.channel)
    }

    fn recovery(&self, tol: f64) -> Result<(CorrectableBasis, RecoveryMap)> {
        let basis = correctable_basis(self.reference_channel(), &self.code, tol)
            .context("building the reference recovery")?;
        let rec = universal_recovery(&basis, &self.code);
        Ok((basis, rec))
    }
}

pub enum SplitSource<'a> {
    Auto,
    File(&'a Path),
}

fn tp_class(ch: &KrausChannel, code: &CodeSpace, tol: f64) -> String {
    match ch.classify_tp(&code.full_projector(ch.d_b()), tol) {
        TpClass::Tp => "trace-preserving".into(),
        TpClass::SubTp { gamma2 } => format!("sub-trace-preserving gamma2={}", real(gamma2)),
        TpClass::Neither => "neither".into(),
    }
}

fn describe(r: &mut Report, ch: &KrausChannel, code: &CodeSpace, t: f64) {
    r.field("d_s", ch.d_s());
    r.field("d_b", ch.d_b());
    r.field("kraus_operators", ch.len());
    r.field("code_dim", code.dim());
    r.real("t", t);
}

pub fn check_perfect(
    sc: &Scenario,
    t: f64,
    tol: f64,
    states: usize,
    seed: u64,
) -> Result<(Report, Verdict)> {
    let ch = sc.channel.at(t)?;
    let mut r = Report::new("check-perfect");
    describe(&mut r, &ch, &sc.code, t);
    r.real("tolerance", tol);
    r.field("tp_class", tp_class(&ch, &sc.code, tol));
    match analyze_perfect(&ch, &sc.code, tol, states, seed)? {
        Err(v) => {
            r.section("verdict");
            r.field("verdict", "violated");
            r.real("lambda_residual", v.residual);
            r.real("threshold", v.threshold);
            r.field("worst_pair", format!("{} / {}", v.worst.0, v.worst.1));
            Ok((r, Verdict::Negative))
        }
        Ok(a) => {
            let round_trip_ok = a.round_trip_residual <= tol;
            let oqec = oqec_check(&ch, &sc.code, tol)?;
            r.section("verdict");
            r.field("verdict", "correctable");
            r.field("round_trip_ok", round_trip_ok);
            r.section("lambda");
            r.field("dim", a.lambda.dim());
            r.real("residual", a.lambda.residual);
            r.real("hermiticity_defect", a.lambda.hermiticity_defect());
            r.real("off_diagonal_max", a.lambda.off_diagonal_max());
            r.field("nonzero_eigenvalues", a.basis.len());
            let rows: Vec<Vec<String>> = a
                .basis
                .eigvals
                .iter()
                .enumerate()
                .map(|(c, &l)| vec![c.to_string(), real(l)])
                .collect();
            r.csv("lambda_diagonal", &["alpha", "lambda"], &rows);
            r.section("recovery");
            r.field("primary_operators", a.recovery.system_kraus.len());
            r.field("completion_operators", a.recovery.completion_kraus.len());
            r.real("completeness_defect", a.recovery.completeness_defect());
            r.real("orthonormality_defect", a.orthonormality_defect);
            r.field("round_trip_states", states);
            r.field("seed", seed);
            r.real("round_trip_residual", a.round_trip_residual);
            r.section("subsystem");
            r.field("passes", oqec.passes);
            r.real("residual", oqec.residual);
            Ok((r, Verdict::from_ok(round_trip_ok)))
        }
    }
}

fn make_split(
    sc: &Scenario,
    ch: &KrausChannel,
    basis: &CorrectableBasis,
    source: &SplitSource,
    tol: f64,
) -> Result<std::result::Result<NoiseSplit, Error>> {
    let mode = match source {
        SplitSource::Auto => SplitMode::AutoProject,
        SplitSource::File(path) => SplitMode::UserProvided(load_split(path, ch.dim())?),
    };
    match split_noise(ch, basis, &sc.code, mode, tol) {
        Err(e @ Error::SpanViolation { .. }) => Ok(Err(e)),
        other => Ok(Ok(other?)),
    }
}

fn span_violation(r: &mut Report, e: &Error) {
    if let Error::SpanViolation {
        kraus,
        k,
        l,
        residual,
    } = e
    {
        r.section("verdict");
        r.field("verdict", "span-violation");
        r.field("kraus", kraus);
        r.field("slice", format!("({k},{l})"));
        r.real("residual", *residual);
    }
}

#[allow(clippy::too_many_arguments)]
pub fn bound(
    sc: &Scenario,
    t: f64,
    source: &SplitSource,
    tol: f64,
    samples: usize,
    refine: usize,
    seed: u64,
) -> Result<(Report, Verdict)> {
    let ch = sc.channel.at(t)?;
    let (basis, rec) = sc.recovery(tol)?;
    let mut r = Report::new("bound");
    describe(&mut r, &ch, &sc.code, t);
    r.field("split", if matches!(source, SplitSource::Auto) { "auto" } else { "file" });
    let split = match make_split(sc, &ch, &basis, source, tol)? {
        Ok(s) => s,
        Err(e) => {
            span_violation(&mut r, &e);
            return Ok((r, Verdict::Negative));
        }
    };
    let b = compute_bound(&split);
    r.section("bound");
    r.real("theta_norm_sq", b.theta_norm_sq);
    r.real("delta_norm", b.delta_norm);
    r.real("epsilon", b.epsilon);
    r.real("theta_antihermiticity_defect", b.antihermiticity_defect());
    r.real("delta_min_eigenvalue", b.delta_min_eigenvalue());
    r.real("uncorrectable_norm", split.uncorrectable_norm());
    r.real("orthogonality_defect", split.orthogonality_defect());
    let w = worst_case_eta(&ch, &rec, &sc.code, samples, refine, seed)?;
    r.section("fidelity_loss");
    r.field("samples", samples);
    r.field("refine", refine);
    r.field("seed", seed);
    r.real("eta_sampled", w.eta_sampled);
    r.real("eta", w.eta_max);
    r.real("margin", b.epsilon - w.eta_max);
    let holds = w.eta_max <= b.epsilon + tol;
    r.section("verdict");
    r.field("verdict", if holds { "bound-holds" } else { "bound-exceeded" });
    Ok((r, Verdict::from_ok(holds)))
}

pub fn worst_case(
    sc: &Scenario,
    t: f64,
    tol: f64,
    samples: usize,
    refine: usize,
    seed: u64,
) -> Result<(Report, Verdict)> {
    let ch = sc.channel.at(t)?;
    let (_, rec) = sc.recovery(tol)?;
    let w = worst_case_eta(&ch, &rec, &sc.code, samples, refine, seed)?;
    let mut r = Report::new("worst-case");
    describe(&mut r, &ch, &sc.code, t);
    r.field("samples", w.samples_used);
    r.field("refine", refine);
    r.field("seed", seed);
    r.section("fidelity_loss");
    r.real("eta_sampled", w.eta_sampled);
    r.real("eta", w.eta_max);
    r.field("refinement_iterations", w.refinement_iterations);
    r.field("converged", w.converged);
    let rows: Vec<Vec<String>> = w
        .argmax_state
        .iter()
        .enumerate()
        .map(|(i, z)| vec![i.to_string(), real(z.re), real(z.im)])
        .collect();
    r.csv("argmax_state", &["index", "re", "im"], &rows);
    Ok((r, Verdict::Positive))
}

/// Per-scale summary of the expansion checks.
struct ExpansionRow {
    t: f64,
    epsilon: f64,
    exact: f64,
    relations: [f64; 5],
    trace_margin: f64,
    violations: Vec<String>,
    gaps: Vec<f64>,
}

fn expansion_row(split: &NoiseSplit, rec: &RecoveryMap, t: f64, states: usize, seed: u64) -> Result<ExpansionRow> {
    let report = compute_bound(split);
    let mut row = ExpansionRow {
        t,
        epsilon: report.epsilon,
        exact: 0.0,
        relations: [0.0; 5],
        trace_margin: f64::INFINITY,
        violations: Vec::new(),
        gaps: Vec::new(),
    };
    let mut rng = osqec_core::random::rng_from_seed(seed);
    for i in 0..states {
        let psi = split.code.sample_with(split.d_b, &mut rng);
        let exact = recovered_state_exact(split, rec, &psi)?;
        row.exact = row.exact.max(exact.residual());
        let terms = expansion_terms(split, &psi)?;
        let ir = identity_residuals(&terms);
        let parts = [ir.delta1_relation, ir.v_relation, ir.w_relation, ir.first_order, ir.second_order];
        for (acc, v) in row.relations.iter_mut().zip(parts) {
            *acc = acc.max(v);
        }
        let tb = trace_bounds(&terms, &report, TRACE_SLACK);
        row.trace_margin = row.trace_margin.min(tb.margin());
        for v in &tb.violations {
            row.violations.push(format!(
                "t={} state={i}: {} = {} exceeds {}",
                real(t),
                v.quantity,
                real(v.value),
                real(v.limit)
            ));
        }
        row.gaps.push(fidelity_from_terms(&terms, &exact.recovered).gap);
    }
    Ok(row)
}

/// Median over states of the log-log slope of the expansion gap.
fn gap_slope(rows: &[ExpansionRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let n = rows[0].gaps.len();
    let slopes: Vec<f64> = (0..n)
        .filter_map(|i| {
            let gaps: Vec<f64> = rows.iter().map(|r| r.gaps[i]).collect();
            loglog_slope(&ts, &gaps)
        })
        .collect();
    median(&slopes)
}

fn write_rows(r: &mut Report, rows: &[ExpansionRow]) {
    let header = [
        "t",
        "epsilon",
        "exact_residual",
        "delta1_relation",
        "v_relation",
        "w_relation",
        "first_order",
        "second_order",
        "trace_margin",
        "violations",
        "median_gap",
        "max_gap",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut v = vec![real(row.t), real(row.epsilon), real(row.exact)];
            v.extend(row.relations.iter().map(|&x| real(x)));
            v.push(real(row.trace_margin));
            v.push(row.violations.len().to_string());
            v.push(real(median(&row.gaps).unwrap_or(f64::NAN)));
            v.push(real(row.gaps.iter().copied().fold(0.0, f64::max)));
            v
        })
        .collect();
    r.csv("expansion", &header, &body);
}

pub fn verify_expansion(
    sc: &Scenario,
    sweep: &[f64],
    source: &SplitSource,
    tol: f64,
    states: usize,
    seed: u64,
) -> Result<(Report, Verdict)> {
    if sweep.is_empty() {
        bail!("the t sweep is empty");
    }
    if matches!(source, SplitSource::File(_)) && sweep.len() > 1 {
        bail!("a split file describes one channel; use a single-value --t-sweep with --split");
    }
    let (basis, rec) = sc.recovery(tol)?;
    let mut r = Report::new("verify-expansion");
    describe(&mut r, &sc.channel.channel, &sc.code, 0.0);
    r.reals("t_sweep", sweep);
    r.field("states", states);
    r.field("seed", seed);
    let mut rows = Vec::new();
    for &t in sweep {
        let ch = sc.channel.at(t)?;
        match make_split(sc, &ch, &basis, source, tol)? {
            Ok(split) => rows.push(expansion_row(&split, &rec, t, states, seed)?),
            Err(e) => {
                span_violation(&mut r, &e);
                return Ok((r, Verdict::Negative));
            }
        }
    }
    r.section("expansion");
    write_rows(&mut r, &rows);
    match gap_slope(&rows) {
        Some(s) => r.real("gap_slope", s),
        None => r.field("gap_slope", "omitted"),
    }
    let violations: Vec<&String> = rows.iter().flat_map(|row| &row.violations).collect();
    r.section("verdict");
    r.field("trace_violations", violations.len());
    for v in &violations {
        r.field("violation", v);
    }
    Ok((r, Verdict::from_ok(violations.is_empty())))
}

/// Every bundled scenario plus the perturbed-family sweeps.
pub fn aggregate(tol: f64, samples: usize, refine: usize, states: usize, seed: u64) -> Result<(Report, Verdict)> {
    let mut r = Report::new("report");
    r.real("tolerance", tol);
    r.field("samples", samples);
    r.field("refine", refine);
    r.field("states", states);
    r.field("seed", seed);
    let mut verdict = Verdict::Positive;
    let mut rows = Vec::new();
    for s in bundled() {
        let analysis = analyze_perfect(&s.channel, &s.code, tol, states, seed)?;
        let oqec = oqec_check(&s.channel, &s.code, tol)?;
        let (verdict_word, residual) = match &analysis {
            Ok(a) => ("correctable", a.round_trip_residual),
            Err(_) => ("violated", f64::NAN),
        };
        verdict = verdict.and(analysis.is_ok() == s.correctable);
        rows.push(vec![
            s.name.clone(),
            s.code_name().to_string(),
            s.channel.d_b().to_string(),
            verdict_word.to_string(),
            real(residual),
            oqec.passes.to_string(),
        ]);
    }
    r.section("perfect");
    r.csv(
        "scenarios",
        &["name", "code", "d_b", "verdict", "round_trip_residual", "subsystem_check"],
        &rows,
    );
    let sweep = [0.1, 0.05, 0.025];
    for fam in perturbed_families() {
        let basis = correctable_basis(&fam.base, &fam.code, tol)?;
        let rec = universal_recovery(&basis, &fam.code);
        let mut expansion = Vec::new();
        let mut eta_rows = Vec::new();
        for &t in &sweep {
            let ch = fam.at(t)?;
            let split = split_noise(&ch, &basis, &fam.code, SplitMode::AutoProject, tol)?;
            let row = expansion_row(&split, &rec, t, states, seed)?;
            let eta = worst_case_eta(&ch, &rec, &fam.code, samples, refine, seed)?.eta_max;
            verdict = verdict.and(eta <= row.epsilon + tol && row.violations.is_empty());
            eta_rows.push(vec![real(t), real(row.epsilon), real(eta), real(row.epsilon - eta)]);
            expansion.push(row);
        }
        r.section(&fam.name);
        r.csv("bound", &["t", "epsilon", "eta", "margin"], &eta_rows);
        write_rows(&mut r, &expansion);
        match gap_slope(&expansion) {
            Some(s) => r.real("gap_slope", s),
            None => r.field("gap_slope", "omitted"),
        }
    }
    r.section("verdict");
    r.field("verdict", if verdict == Verdict::Positive { "ok" } else { "failed" });
    Ok((r, verdict))
}
