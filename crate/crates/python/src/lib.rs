//! Python bindings for the `qhistory` engine.
//!
//! ```python
//! import qhistory
//! sc = qhistory.Scenario.from_text(open("wigner.qh").read())
//! hv = sc.history_vector()
//! print(hv.diagram())
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

use qhistory::cli::render_history_diagram;
use qhistory::dsl::parse_scenario;
use qhistory::histories::{
    collapse_on_outcome, conditional_distribution, enumerate_history_vector, history_amplitude,
    history_probability, marginal_probability, state_before_measurement, History, DEFAULT_PRUNE_TOL,
};
use qhistory::linalg::{CMatrix, C64};
use qhistory::oracle::sample_histories;
use qhistory::quantum::partial_trace;
use qhistory::wigner;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn labels_tuple<'py>(py: Python<'py>, h: &History) -> PyResult<Bound<'py, PyTuple>> {
    PyTuple::new(py, h.labels())
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// A schedule of evolutions and projective measurements on a qubit register.
#[pyclass(module = "qhistory", frozen)]
struct Scenario {
    inner: qhistory::Scenario,
    text: String,
}

#[pymethods]
impl Scenario {
    /// Parse a scenario description. Raises ValueError with line and column
    /// on malformed input.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let doc = parse_scenario(text).map_err(value_err)?;
        let inner = doc.to_scenario().map_err(value_err)?;
        Ok(Self {
            inner,
            text: doc.to_text(),
        })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| value_err(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Pure-state Wigner's-friend scenario for `alpha|0> + beta|1>`.
    #[staticmethod]
    fn wigner(alpha: C64, beta: C64) -> PyResult<Self> {
        let inner = wigner::build_wigner_scenario(alpha, beta).map_err(value_err)?;
        let text = format!(
            "qubits 2\ninit q0 = ({:?},{:?}),({:?},{:?})\nstep\n  measure computational on 0 1\nstep\n  gate CNOT 0 1\n  measure computational on 0 1\n",
            alpha.re, alpha.im, beta.re, beta.im
        );
        Ok(Self { inner, text })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn num_steps(&self) -> usize {
        self.inner.num_steps()
    }

    /// Canonical text form; parses back to the same scenario.
    fn to_text(&self) -> String {
        self.text.clone()
    }

    #[pyo3(signature = (prune = DEFAULT_PRUNE_TOL))]
    fn history_vector(&self, prune: f64) -> HistoryVector {
        HistoryVector {
            inner: enumerate_history_vector(&self.inner, prune),
        }
    }

    /// `Tr(C C†)` for a label sequence.
    fn probability(&self, labels: Vec<String>) -> PyResult<f64> {
        history_probability(&self.inner, &History::new(labels)).map_err(value_err)
    }

    fn amplitude(&self, labels: Vec<String>) -> PyResult<C64> {
        history_amplitude(&self.inner, &History::new(labels)).map_err(value_err)
    }

    /// Born-rule simulation; returns `{labels: count}`.
    #[pyo3(signature = (shots, seed = 0))]
    fn sample<'py>(&self, py: Python<'py>, shots: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let report = py
            .detach(|| sample_histories(&self.inner, shots, seed))
            .map_err(value_err)?;
        let out = PyDict::new(py);
        for (h, n) in report.counts() {
            out.set_item(labels_tuple(py, h)?, n)?;
        }
        Ok(out)
    }

    /// Reduced density matrix of `keep` after the evolution of `at_step`
    /// (default: the last step), as a list of rows.
    #[pyo3(signature = (keep, at_step = None))]
    fn reduced_density(&self, keep: Vec<usize>, at_step: Option<usize>) -> PyResult<Vec<Vec<C64>>> {
        let step = at_step.unwrap_or(self.inner.num_steps());
        let rho = state_before_measurement(&self.inner, step).map_err(value_err)?;
        let reduced = partial_trace(&rho, &keep).map_err(value_err)?;
        Ok(matrix_rows(reduced.matrix()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(num_qubits={}, num_steps={})",
            self.inner.num_qubits(),
            self.inner.num_steps()
        )
    }
}

/// Histories with nonvanishing amplitude, in label order.
#[pyclass(module = "qhistory", frozen)]
struct HistoryVector {
    inner: qhistory::HistoryVector,
}

#[pymethods]
impl HistoryVector {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `[(labels, amplitude), ...]`.
    fn items<'py>(&self, py: Python<'py>) -> PyResult<Vec<(Bound<'py, PyTuple>, C64)>> {
        self.inner
            .iter()
            .map(|(h, a)| Ok((labels_tuple(py, h)?, *a)))
            .collect()
    }

    fn amplitude(&self, labels: Vec<String>) -> Option<C64> {
        self.inner.amplitude(&History::new(labels))
    }

    fn probabilities<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for (h, p) in self.inner.probabilities() {
            out.set_item(labels_tuple(py, &h)?, p)?;
        }
        Ok(out)
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    /// Keep the histories with `label` at `step` (1-based) and renormalize.
    fn collapse(&self, step: usize, label: &str) -> PyResult<HistoryVector> {
        let inner = collapse_on_outcome(&self.inner, step, label).map_err(value_err)?;
        Ok(HistoryVector { inner })
    }

    fn marginal(&self, step: usize, label: &str) -> PyResult<f64> {
        marginal_probability(&self.inner, step, label).map_err(value_err)
    }

    fn conditional<'py>(&self, py: Python<'py>, step: usize, label: &str) -> PyResult<Bound<'py, PyDict>> {
        let dist = conditional_distribution(&self.inner, (step, label)).map_err(value_err)?;
        let out = PyDict::new(py);
        for (h, p) in dist {
            out.set_item(labels_tuple(py, &h)?, p)?;
        }
        Ok(out)
    }

    fn diagram(&self) -> Vec<String> {
        render_history_diagram(&self.inner).lines
    }

    fn __repr__(&self) -> String {
        format!("HistoryVector(len={})", self.inner.len())
    }
}

/// The Wigner's-friend report as a dict.
#[pyfunction]
fn wigner_report<'py>(py: Python<'py>, alpha: C64, beta: C64) -> PyResult<Bound<'py, PyDict>> {
    let r = wigner::run_wigner_report(alpha, beta).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("alpha", r.alpha)?;
    out.set_item("beta", r.beta)?;
    out.set_item("entangled_state", r.entangled_state.amplitudes().entries().to_vec())?;
    out.set_item("rho_sf", matrix_rows(r.rho_sf.matrix()))?;
    out.set_item("rho_s", matrix_rows(r.rho_s.matrix()))?;
    let friend = PyDict::new(py);
    for f in &r.friend_view {
        friend.set_item(&f.label, (f.probability, f.state.amplitudes().entries().to_vec()))?;
    }
    out.set_item("friend_view", friend)?;
    out.set_item("hv", HistoryVector { inner: r.hv })?;
    out.set_item(
        "collapsed_hv_on_f1",
        r.collapsed_hv_on_f1.map(|inner| HistoryVector { inner }),
    )?;
    out.set_item("agreement_check", r.agreement_check)?;
    Ok(out)
}

/// W measures S on the entangled lab state: `(probability, post_state)`.
#[pyfunction]
fn w_measures_s(alpha: C64, beta: C64, outcome: &str) -> PyResult<(f64, Vec<C64>)> {
    let (p, post) = wigner::w_measures_s(alpha, beta, outcome).map_err(value_err)?;
    Ok((p, post.amplitudes().entries().to_vec()))
}

/// Runs the command line tool; returns `(stdout, exit_code)`.
#[pyfunction]
fn cli(args: Vec<String>) -> PyResult<(String, i32)> {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("qhistory".to_string()).chain(args);
    let code = qhistory::cli::run(argv, &mut stdout, &mut stderr);
    let text = String::from_utf8(stdout).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((text, code))
}

#[pymodule]
#[pyo3(name = "qhistory")]
fn qhistory_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<HistoryVector>()?;
    m.add_function(wrap_pyfunction!(wigner_report, m)?)?;
    m.add_function(wrap_pyfunction!(w_measures_s, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    m.add("DEFAULT_PRUNE_TOL", DEFAULT_PRUNE_TOL)?;
    Ok(())
}
