use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use rfi_core::bounds::{self, concurrence};
use rfi_core::entropy::{self, TraceMoments};
use rfi_core::measurement::{self, SimulatedOracle};
use rfi_core::montecarlo::{self, Ensemble};
use rfi_core::report::{Analysis, AnalysisOptions};
use rfi_core::rfi::RfiReport;
use rfi_core::rng::seeded;
use rfi_core::state::{Matrix4c, PauliTable};
use rfi_core::verify::{run_suite, Formulas, SuiteConfig};
use rfi_core::{DensityMatrix, Measured, MeasuredTable};

fn err(e: rfi_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

/// A validated two-qubit density matrix.
#[pyclass(name = "DensityMatrix", module = "rfi_ent", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensityMatrix {
    inner: DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    /// Build from a 4×4 nested list of complex numbers.
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(PyValueError::new_err("density matrix must be 4x4"));
        }
        let m = Matrix4c::from_fn(|i, j| rows[i][j]);
        Ok(PyDensityMatrix {
            inner: DensityMatrix::new(m).map_err(err)?,
        })
    }

    #[staticmethod]
    fn phi_minus() -> Self {
        PyDensityMatrix {
            inner: DensityMatrix::phi_minus(),
        }
    }

    #[staticmethod]
    fn phi_plus() -> Self {
        PyDensityMatrix {
            inner: DensityMatrix::phi_plus(),
        }
    }

    #[staticmethod]
    fn maximally_mixed() -> Self {
        PyDensityMatrix {
            inner: DensityMatrix::maximally_mixed(),
        }
    }

    /// `p |Φ⁻⟩⟨Φ⁻| + (1 − p) I/4`.
    #[staticmethod]
    fn werner(p: f64) -> PyResult<Self> {
        Ok(PyDensityMatrix {
            inner: DensityMatrix::werner(p).map_err(err)?,
        })
    }

    /// Isotropic state with Bell-state fidelity `fidelity`.
    #[staticmethod]
    fn for_fidelity(fidelity: f64) -> PyResult<Self> {
        Ok(PyDensityMatrix {
            inner: measurement::state_for_fidelity(fidelity).map_err(err)?,
        })
    }

    /// Ginibre-random state of the given rank.
    #[staticmethod]
    #[pyo3(signature = (rank, seed=0))]
    fn random(rank: usize, seed: u64) -> PyResult<Self> {
        Ok(PyDensityMatrix {
            inner: DensityMatrix::random(&mut seeded(seed), rank).map_err(err)?,
        })
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.matrix();
        (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
    }

    fn pauli_table(&self) -> [[f64; 4]; 4] {
        self.inner.pauli_table().0
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn eigenvalues(&self) -> [f64; 4] {
        self.inner.eigenvalues()
    }

    fn concurrence(&self) -> f64 {
        concurrence(&self.inner)
    }

    fn trace_moment(&self, n: usize) -> PyResult<f64> {
        self.inner.trace_moment(n).map_err(err)
    }

    /// The state under a Haar-random local rotation drawn from `seed`.
    fn rotated(&self, seed: u64) -> Self {
        let rot = rfi_core::LocalRotation::haar(&mut seeded(seed));
        PyDensityMatrix {
            inner: self.inner.rotate(&rot),
        }
    }

    fn rfi<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &RfiReport::from_table(&self.inner.pauli_table()))
    }

    fn von_neumann(&self) -> PyResult<f64> {
        entropy::von_neumann(&self.inner).map_err(err)
    }

    fn renyi(&self, alpha: f64) -> PyResult<f64> {
        entropy::renyi(&self.inner, alpha).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(purity={:.6})", self.inner.purity())
    }
}

/// All rfi quantities of a 4×4 Pauli table.
#[pyfunction]
fn rfi_quantities(py: Python<'_>, table: [[f64; 4]; 4]) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &RfiReport::from_table(&PauliTable(table)))
}

#[pyfunction]
#[pyo3(signature = (q2, sigma=0.0))]
fn concurrence_interval_from_q2(py: Python<'_>, q2: f64, sigma: f64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &bounds::concurrence_interval_from_q2(Measured::new(q2, sigma).map_err(err)?).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (purity, purity_a, purity_b, sigmas=(0.0, 0.0, 0.0)))]
fn concurrence_interval_from_purities(
    py: Python<'_>,
    purity: f64,
    purity_a: f64,
    purity_b: f64,
    sigmas: (f64, f64, f64),
) -> PyResult<Bound<'_, PyAny>> {
    let iv = bounds::concurrence_interval_from_purities(
        Measured::new(purity, sigmas.0).map_err(err)?,
        Measured::new(purity_a, sigmas.1).map_err(err)?,
        Measured::new(purity_b, sigmas.2).map_err(err)?,
    )
    .map_err(err)?;
    to_py(py, &iv)
}

/// Spectrum recovered from `[tr ρ, tr ρ², tr ρ³, tr ρ⁴, …]`.
#[pyfunction]
fn eigenvalues_from_moments(moments: Vec<f64>) -> PyResult<[f64; 4]> {
    entropy::eigenvalues_from_moments(&TraceMoments::new(moments).map_err(err)?).map_err(err)
}

#[pyfunction]
fn mercator_lower_bound(moments: Vec<f64>, depth: usize) -> PyResult<f64> {
    entropy::mercator_lower_bound(&TraceMoments::new(moments).map_err(err)?, depth).map_err(err)
}

/// Upper bound on S₂ from the `k` largest-magnitude table entries.
#[pyfunction]
fn s2_upper_bound(table: [[f64; 4]; 4], k: usize) -> PyResult<f64> {
    let t = PauliTable(table);
    let pairs = entropy::largest_pairs(&t, k);
    entropy::s2_upper_bound_measured(&MeasuredTable::exact(t), &pairs)
        .map(|m| m.value)
        .map_err(err)
}

/// Counts for all nine settings of rotation `rotation` (1 = unrotated).
#[pyfunction]
#[pyo3(signature = (fidelity=measurement::DEFAULT_FIDELITY, budget=measurement::DEFAULT_BUDGET, seed=0, rotation=1))]
fn simulate(py: Python<'_>, fidelity: f64, budget: u64, seed: u64, rotation: usize) -> PyResult<Bound<'_, PyAny>> {
    let state = measurement::state_for_fidelity(fidelity).map_err(err)?;
    let model = measurement::rotation_model(&state, budget, seed, rotation).map_err(err)?;
    to_py(py, &measurement::simulate_all(&model).map_err(err)?)
}

/// Full analysis of count records (a list of `{"setting", "counts", "budget"}` dicts).
#[pyfunction]
#[pyo3(signature = (records, z=3.0, mercator_depth=3))]
fn analyze<'py>(
    py: Python<'py>,
    records: &Bound<'py, PyAny>,
    z: f64,
    mercator_depth: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let text = from_py(records)?;
    let recs = rfi_core::io::read_json(text.as_bytes()).map_err(err)?;
    let opts = AnalysisOptions {
        z,
        mercator_depth,
        ..AnalysisOptions::default()
    };
    to_py(py, &Analysis::from_records(&recs, &opts).map_err(err)?)
}

#[pyfunction]
fn read_counts<'py>(py: Python<'py>, path: std::path::PathBuf) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &rfi_core::io::read_counts(&path).map_err(err)?)
}

/// Adaptive Q₂ lower bound on a simulated source.
#[pyfunction]
#[pyo3(signature = (fidelity, budget, seed=0, rotation=1, max_settings=9, z=3.0))]
fn adaptive_q2(
    py: Python<'_>,
    fidelity: f64,
    budget: u64,
    seed: u64,
    rotation: usize,
    max_settings: usize,
    z: f64,
) -> PyResult<Bound<'_, PyAny>> {
    let state = measurement::state_for_fidelity(fidelity).map_err(err)?;
    let mut oracle = SimulatedOracle {
        model: measurement::rotation_model(&state, budget, seed, rotation).map_err(err)?,
    };
    to_py(py, &measurement::adaptive_q2_bound(&mut oracle, max_settings, z).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (samples=10_000, seed=0))]
fn verify(py: Python<'_>, samples: usize, seed: u64) -> PyResult<Bound<'_, PyAny>> {
    let report = py.detach(|| run_suite(&SuiteConfig { samples, seed }, &Formulas::default()));
    to_py(py, &report)
}

/// Violation summary of a Monte-Carlo run; `ensemble` is "mixed" or "pure".
#[pyfunction]
#[pyo3(signature = (samples=100_000, seed=0, ensemble="mixed"))]
fn montecarlo_summary<'py>(py: Python<'py>, samples: usize, seed: u64, ensemble: &str) -> PyResult<Bound<'py, PyAny>> {
    let ensemble = match ensemble {
        "mixed" => Ensemble::Mixed,
        "pure" => Ensemble::Pure,
        other => return Err(PyValueError::new_err(format!("unknown ensemble {other:?}"))),
    };
    let run = py.detach(|| montecarlo::run(samples, seed, ensemble)).map_err(err)?;
    to_py(py, &run.summary)
}

#[pymodule]
fn rfi_ent(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_function(wrap_pyfunction!(rfi_quantities, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_interval_from_q2, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_interval_from_purities, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues_from_moments, m)?)?;
    m.add_function(wrap_pyfunction!(mercator_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(s2_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(read_counts, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_q2, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(montecarlo_summary, m)?)?;
    Ok(())
}
