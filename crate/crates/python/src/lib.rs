// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! `complex`; numpy arrays work after `.tolist()`.

use osqec_core::approx::{
    compute_bound, expansion_terms, fidelity_from_terms, identity_residuals,
    recovered_state_exact, split_noise, trace_bounds, NoiseSplit, SplitMode, TRACE_SLACK,
};
use osqec_core::perfect::{self, LambdaVerdict, RecoveryMap};
use osqec_core::{fidelity, instances, io, CodeSpace, ComplexMatrix, KrausChannel, StateVector, C64};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(osqec, OsqecError, PyValueError);

type Rows = Vec<Vec<C64>>;

fn err(e: osqec_core::Error) -> PyErr {
    OsqecError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(OsqecError::new_err("ragged matrix rows"));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_vector(v: Vec<C64>) -> StateVector {
    StateVector::from_vec(v)
}

#[pyclass(name = "Channel", module = "osqec", frozen)]
struct PyChannel {
    inner: KrausChannel,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(d_s: usize, d_b: usize, kraus: Vec<Rows>) -> PyResult<Self> {
        let ops = kraus.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        let inner = KrausChannel::new(d_s, d_b, ops).map_err(err)?;
        Ok(Self { inner })
    }

    /// Load a channel file; returns `(channel, perturbation or None)`.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<(Self, Option<Vec<Rows>>)> {
        let file = io::load_channel(std::path::Path::new(path)).map_err(err)?;
        let g = file.perturbation.map(|g| g.iter().map(to_rows).collect());
        Ok((Self { inner: file.channel }, g))
    }

    #[getter]
    fn d_s(&self) -> usize {
        self.inner.d_s()
    }

    #[getter]
    fn d_b(&self) -> usize {
        self.inner.d_b()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(d_s={}, d_b={}, kraus={})",
            self.inner.d_s(),
            self.inner.d_b(),
            self.inner.len()
        )
    }

    fn kraus(&self) -> Vec<Rows> {
        self.inner.kraus().iter().map(to_rows).collect()
    }

    fn apply(&self, rho: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.apply(&to_matrix(&rho)?).map_err(err)?))
    }

    fn tp_defect(&self) -> f64 {
        self.inner.tp_defect()
    }

    fn g_map(&self) -> Self {
        Self {
            inner: self.inner.g_map(),
        }
    }

    fn perturbed(&self, direction: Vec<Rows>, t: f64) -> PyResult<Self> {
        let g = direction.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: self.inner.perturbed(&g, t).map_err(err)?,
        })
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scaled(factor),
        }
    }

    fn to_json(&self) -> String {
        io::channel_to_json(&self.inner, None)
    }
}

#[pyclass(name = "Code", module = "osqec", frozen)]
struct PyCode {
    inner: CodeSpace,
}

#[pymethods]
impl PyCode {
    /// Orthonormal basis vectors of the code, one list per vector.
    #[new]
    fn new(basis: Rows) -> PyResult<Self> {
        let m = to_matrix(&basis)?.transpose();
        Ok(Self {
            inner: CodeSpace::new(m).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::load_code(std::path::Path::new(path)).map_err(err)?,
        })
    }

    #[staticmethod]
    fn repetition() -> Self {
        Self {
            inner: instances::repetition_code(),
        }
    }

    #[getter]
    fn d_s(&self) -> usize {
        self.inner.d_s()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn projector(&self) -> Rows {
        to_rows(&self.inner.projector())
    }

    fn sample_state(&self, d_b: usize, seed: u64) -> Vec<C64> {
        self.inner.sample_code_state(d_b, seed).iter().copied().collect()
    }

    fn __repr__(&self) -> String {
        format!("Code(d_s={}, dim={})", self.inner.d_s(), self.inner.dim())
    }
}

#[pyclass(name = "Recovery", module = "osqec", frozen)]
struct PyRecovery {
    inner: RecoveryMap,
}

#[pymethods]
impl PyRecovery {
    fn apply(&self, rho_s: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.apply(&to_matrix(&rho_s)?)))
    }

    /// `Tr_B` of the recovered output for a pure system–bath state.
    fn recover(&self, channel: &PyChannel, psi: Vec<C64>) -> Rows {
        to_rows(&self.inner.recover(&channel.inner, &to_vector(psi)))
    }

    fn kraus(&self) -> Vec<Rows> {
        self.inner.all_kraus().iter().map(to_rows).collect()
    }

    fn completeness_defect(&self) -> f64 {
        self.inner.completeness_defect()
    }
}

/// Λ fit for a channel on a code.
#[pyfunction]
#[pyo3(signature = (channel, code, tol = perfect::DEFAULT_CONDITION_TOL))]
fn extract_lambda<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    code: &PyCode,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let verdict = perfect::extract_lambda(&channel.inner, &code.inner, tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("correctable", verdict.is_correctable())?;
    d.set_item("residual", verdict.residual())?;
    match verdict {
        LambdaVerdict::Correctable(l) => {
            d.set_item("lambda", to_rows(&l.matrix))?;
            d.set_item("eigenvalues", l.eigenvalues())?;
        }
        LambdaVerdict::Violated(v) => {
            d.set_item("threshold", v.threshold)?;
            d.set_item("worst_pair", format!("{} / {}", v.worst.0, v.worst.1))?;
        }
    }
    Ok(d)
}

/// Knill–Laflamme check for a channel without a bath.
#[pyfunction]
#[pyo3(signature = (channel, code, tol = perfect::DEFAULT_CONDITION_TOL))]
fn kl_check(channel: &PyChannel, code: &PyCode, tol: f64) -> PyResult<bool> {
    Ok(perfect::kl_check(&channel.inner, &code.inner, tol)
        .map_err(err)?
        .is_correctable())
}

#[pyfunction]
#[pyo3(signature = (channel, code, tol = perfect::DEFAULT_CONDITION_TOL))]
fn oqec_check(channel: &PyChannel, code: &PyCode, tol: f64) -> PyResult<bool> {
    Ok(perfect::oqec_check(&channel.inner, &code.inner, tol)
        .map_err(err)?
        .passes)
}

/// Universal recovery of a correctable channel.
#[pyfunction]
#[pyo3(signature = (channel, code, tol = perfect::DEFAULT_CONDITION_TOL))]
fn universal_recovery(channel: &PyChannel, code: &PyCode, tol: f64) -> PyResult<PyRecovery> {
    let basis = perfect::correctable_basis(&channel.inner, &code.inner, tol).map_err(err)?;
    Ok(PyRecovery {
        inner: perfect::universal_recovery(&basis, &code.inner),
    })
}

/// `max ‖Tr_B{(R∘E)(ψ)} − γ² Tr_B{ψ}‖` over seeded code states.
#[pyfunction]
#[pyo3(signature = (channel, code, recovery, gamma2 = 1.0, states = 100, seed = 1))]
fn recovery_residual(
    channel: &PyChannel,
    code: &PyCode,
    recovery: &PyRecovery,
    gamma2: f64,
    states: usize,
    seed: u64,
) -> f64 {
    perfect::recovery_residual(&channel.inner, &code.inner, &recovery.inner, gamma2, states, seed)
}

fn auto_split(channel: &PyChannel, reference: &PyChannel, code: &PyCode, tol: f64) -> PyResult<NoiseSplit> {
    let basis = perfect::correctable_basis(&reference.inner, &code.inner, tol).map_err(err)?;
    split_noise(&channel.inner, &basis, &code.inner, SplitMode::AutoProject, tol).map_err(err)
}

/// `ε` with its ingredients, splitting `channel` against the correctable
/// `reference`.
#[pyfunction]
#[pyo3(signature = (channel, reference, code, tol = perfect::DEFAULT_CONDITION_TOL))]
fn bound<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    reference: &PyChannel,
    code: &PyCode,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let b = compute_bound(&auto_split(channel, reference, code, tol)?);
    let d = PyDict::new(py);
    d.set_item("theta_norm_sq", b.theta_norm_sq)?;
    d.set_item("delta_norm", b.delta_norm)?;
    d.set_item("epsilon", b.epsilon)?;
    Ok(d)
}

/// Recovered-state identity, Schmidt-basis relations, trace bounds, and
/// fidelity expansion for one pure code state.
#[pyfunction]
#[pyo3(signature = (channel, reference, code, psi, tol = perfect::DEFAULT_CONDITION_TOL))]
fn expansion_check<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    reference: &PyChannel,
    code: &PyCode,
    psi: Vec<C64>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let split = auto_split(channel, reference, code, tol)?;
    let basis = perfect::correctable_basis(&reference.inner, &code.inner, tol).map_err(err)?;
    let rec = perfect::universal_recovery(&basis, &code.inner);
    let psi = to_vector(psi);
    let exact = recovered_state_exact(&split, &rec, &psi).map_err(err)?;
    let terms = expansion_terms(&split, &psi).map_err(err)?;
    let tb = trace_bounds(&terms, &compute_bound(&split), TRACE_SLACK);
    let fe = fidelity_from_terms(&terms, &exact.recovered);
    let d = PyDict::new(py);
    d.set_item("exact_residual", exact.residual())?;
    d.set_item("identity_residual", identity_residuals(&terms).max())?;
    d.set_item("tr_delta1", tb.tr_delta1)?;
    d.set_item("tr_delta2", tb.tr_delta2)?;
    d.set_item("tr_v", tb.tr_v)?;
    d.set_item("tr_w", tb.tr_w)?;
    d.set_item("trace_bounds_hold", tb.holds())?;
    d.set_item("fidelity", fe.exact)?;
    d.set_item("expanded", fe.expanded)?;
    d.set_item("gap", fe.gap)?;
    Ok(d)
}

#[pyfunction]
fn uhlmann_fidelity(rho: Rows, sigma: Rows) -> PyResult<f64> {
    fidelity::uhlmann_fidelity(&to_matrix(&rho)?, &to_matrix(&sigma)?).map_err(err)
}

/// Sampled worst-case fidelity loss; returns `(eta, eta_sampled)`.
#[pyfunction]
#[pyo3(signature = (channel, recovery, code, samples = 10_000, refine = 100, seed = 1))]
fn worst_case_eta(
    channel: &PyChannel,
    recovery: &PyRecovery,
    code: &PyCode,
    samples: usize,
    refine: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let w = fidelity::worst_case_eta(&channel.inner, &recovery.inner, &code.inner, samples, refine, seed)
        .map_err(err)?;
    Ok((w.eta_max, w.eta_sampled))
}

/// Bundled scenarios as `(name, channel, code, correctable)`.
#[pyfunction]
fn bundled() -> Vec<(String, PyChannel, PyCode, bool)> {
    instances::bundled()
        .into_iter()
        .map(|s| {
            (
                s.name,
                PyChannel { inner: s.channel },
                PyCode { inner: s.code },
                s.correctable,
            )
        })
        .collect()
}

/// Perturbed families as `(name, base, direction, code)`.
#[pyfunction]
fn perturbed_families() -> Vec<(String, PyChannel, Vec<Rows>, PyCode)> {
    instances::perturbed_families()
        .into_iter()
        .map(|f| {
            (
                f.name,
                PyChannel { inner: f.base },
                f.direction.iter().map(to_rows).collect(),
                PyCode { inner: f.code },
            )
        })
        .collect()
}

#[pymodule]
fn osqec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("OsqecError", m.py().get_type::<OsqecError>())?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyCode>()?;
    m.add_class::<PyRecovery>()?;
    m.add_function(wrap_pyfunction!(extract_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(kl_check, m)?)?;
    m.add_function(wrap_pyfunction!(oqec_check, m)?)?;
    m.add_function(wrap_pyfunction!(universal_recovery, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_residual, m)?)?;
    m.add_function(wrap_pyfunction!(bound, m)?)?;
    m.add_function(wrap_pyfunction!(expansion_check, m)?)?;
    m.add_function(wrap_pyfunction!(uhlmann_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_eta, m)?)?;
    m.add_function(wrap_pyfunction!(bundled, m)?)?;
    m.add_function(wrap_pyfunction!(perturbed_families, m)?)?;
    Ok(())
}
