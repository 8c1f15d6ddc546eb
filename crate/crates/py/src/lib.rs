//! Python interface to `opa_core`.
//!
//! Matrices cross the boundary as nested lists of complex numbers and mode shapes as
//! flat lists, so the module has no runtime dependency beyond the interpreter.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use opa_core::decomposition::DEFAULT_DEGENERACY_TOLERANCE;
use opa_core::error::ExitStatus;
use opa_core::{perturbative, Field, Frame, Polarization, Scheme};

create_exception!(opa, ConfigError, PyValueError, "Invalid configuration, grid or physical input.");
create_exception!(opa, InvariantError, PyRuntimeError, "A physical invariant was violated.");
create_exception!(opa, ConvergenceError, PyRuntimeError, "A numerical procedure did not converge.");

fn to_py(e: opa_core::Error) -> PyErr {
    let msg = e.to_string();
    match e.exit_status() {
        ExitStatus::Config => ConfigError::new_err(msg),
        ExitStatus::Invariant => InvariantError::new_err(msg),
        ExitStatus::Convergence => ConvergenceError::new_err(msg),
        ExitStatus::Ok | ExitStatus::Failure => PyRuntimeError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for opa_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse_frame(s: &str) -> PyResult<Frame> {
    match s {
        "lab" => Ok(Frame::Lab),
        "moving" => Ok(Frame::Moving),
        _ => Err(ConfigError::new_err(format!("frame must be 'lab' or 'moving', got {s:?}"))),
    }
}

fn parse_scheme(s: &str) -> PyResult<Scheme> {
    match s {
        "split_step" => Ok(Scheme::SplitStep),
        "rk4" => Ok(Scheme::Rk4),
        _ => Err(ConfigError::new_err(format!("scheme must be 'split_step' or 'rk4', got {s:?}"))),
    }
}

fn parse_field(s: &str) -> PyResult<Field> {
    match s {
        "signal" => Ok(Field::Signal),
        "pump" => Ok(Field::Pump),
        _ => Err(ConfigError::new_err(format!("field must be 'signal' or 'pump', got {s:?}"))),
    }
}

fn rows(m: &opa_core::CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Sellmeier dispersion of a uniaxial crystal at a fixed propagation angle.
#[pyclass(name = "DispersionModel", module = "opa", frozen, from_py_object)]
#[derive(Clone)]
struct PyDispersionModel(opa_core::DispersionModel);

#[pymethods]
impl PyDispersionModel {
    /// BBO phase-matched for 400 nm to 800 nm down-conversion.
    #[staticmethod]
    fn bbo() -> Self {
        Self(opa_core::DispersionModel::bbo())
    }

    /// Unit index everywhere.
    #[staticmethod]
    fn vacuum() -> Self {
        Self(opa_core::DispersionModel::vacuum())
    }

    fn with_theta(&self, theta: f64) -> Self {
        Self(self.0.with_theta(theta))
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn omega_signal(&self) -> f64 {
        self.0.omega_signal()
    }

    #[getter]
    fn omega_pump(&self) -> f64 {
        self.0.omega_pump()
    }

    /// Propagation angle in radians that cancels the carrier phase mismatch.
    fn phase_matching_angle(&self) -> PyResult<f64> {
        self.0.find_phase_matching_angle().py()
    }

    #[pyo3(signature = (omega, extraordinary=false))]
    fn refractive_index(&self, omega: f64, extraordinary: bool) -> PyResult<f64> {
        let pol = if extraordinary {
            Polarization::Extraordinary
        } else {
            Polarization::Ordinary
        };
        self.0.refractive_index(omega, pol).py()
    }

    #[pyo3(signature = (omega, field="signal"))]
    fn wavevector(&self, omega: f64, field: &str) -> PyResult<f64> {
        self.0.wavevector(omega, parse_field(field)?).py()
    }

    /// d^order k / dω^order at the carrier of `field` (fs^order/mm).
    #[pyo3(signature = (order, field="signal"))]
    fn beta(&self, order: usize, field: &str) -> PyResult<f64> {
        self.0.beta(parse_field(field)?, order).py()
    }

    fn __repr__(&self) -> String {
        format!("DispersionModel(theta={:.6} rad)", self.0.theta)
    }
}

/// Uniform frequency grid of power-of-two size centred on the signal carrier.
#[pyclass(name = "FrequencyGrid", module = "opa", frozen, from_py_object)]
#[derive(Clone)]
struct PyFrequencyGrid(opa_core::FrequencyGrid);

#[pymethods]
impl PyFrequencyGrid {
    #[new]
    fn new(n_points: usize, center: f64, span: f64) -> PyResult<Self> {
        opa_core::FrequencyGrid::new(n_points, center, span).py().map(Self)
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.0.n_points
    }

    #[getter]
    fn center(&self) -> f64 {
        self.0.center
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing
    }

    fn omegas(&self) -> Vec<f64> {
        self.0.omegas()
    }

    fn times(&self) -> Vec<f64> {
        self.0.times()
    }

    fn __len__(&self) -> usize {
        self.0.n_points
    }

    fn __repr__(&self) -> String {
        format!(
            "FrequencyGrid(n_points={}, center={}, spacing={})",
            self.0.n_points, self.0.center, self.0.spacing
        )
    }
}

/// Gaussian pump pulse. `l_nl=None` switches the coupling off.
#[pyclass(name = "PumpSpec", module = "opa", frozen, from_py_object)]
#[derive(Clone)]
struct PyPumpSpec(opa_core::PumpSpec);

#[pymethods]
impl PyPumpSpec {
    #[new]
    #[pyo3(signature = (tau_p, omega_p, l_nl, length=1.0))]
    fn new(tau_p: f64, omega_p: f64, l_nl: Option<f64>, length: f64) -> PyResult<Self> {
        opa_core::PumpSpec::new(tau_p, omega_p, l_nl.unwrap_or(f64::INFINITY), length)
            .py()
            .map(Self)
    }

    #[getter]
    fn tau_p(&self) -> f64 {
        self.0.tau_p
    }

    #[getter]
    fn l_nl(&self) -> Option<f64> {
        self.0.l_nl.is_finite().then_some(self.0.l_nl)
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length
    }

    /// Analytic Gaussian-model parameters as a dict.
    fn gaussian_model<'py>(&self, py: Python<'py>, model: &PyDispersionModel) -> PyResult<Bound<'py, PyDict>> {
        let gm = opa_core::gaussian_params(&self.0, &model.0).py()?;
        let d = PyDict::new(py);
        d.set_item("delta", gm.delta)?;
        d.set_item("big_delta", gm.big_delta)?;
        d.set_item("n_photons", gm.n_photons)?;
        d.set_item("r", gm.r)?;
        d.set_item("tau_s", gm.tau_s)?;
        Ok(d)
    }

    /// Squeezing parameters of the Gaussian model for n = 0..n_max.
    fn analytic_zetas(&self, model: &PyDispersionModel, n_max: usize) -> PyResult<Vec<f64>> {
        let gm = opa_core::gaussian_params(&self.0, &model.0).py()?;
        Ok(perturbative::analytic_zetas(&gm, n_max))
    }
}

/// Bogoliubov Green functions (C, S) of one crystal pass.
#[pyclass(name = "GreenPair", module = "opa", frozen)]
struct PyGreenPair(opa_core::GreenPair);

#[pymethods]
impl PyGreenPair {
    #[getter]
    fn c(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0.c)
    }

    #[getter]
    fn s(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0.s)
    }

    #[getter]
    fn frame(&self) -> String {
        self.0.frame.to_string()
    }

    #[getter]
    fn grid(&self) -> PyFrequencyGrid {
        PyFrequencyGrid(self.0.grid)
    }

    /// (‖CC† − SS† − I‖₂, ‖CSᵀ − SCᵀ‖₂).
    fn symplectic_residuals(&self) -> (f64, f64) {
        let r = self.0.symplectic_residuals();
        (r.unitarity, r.symmetry)
    }

    fn in_frame(&self, frame: &str) -> PyResult<Self> {
        self.0.in_frame(parse_frame(frame)?).py().map(Self)
    }

    /// Output amplitudes C·a + S·a* for input amplitudes `a`.
    fn apply(&self, a: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        self.0.apply(&a).py()
    }

    /// Bloch-Messiah reduction into independent squeezed modes.
    #[pyo3(signature = (tol_degeneracy=DEFAULT_DEGENERACY_TOLERANCE))]
    fn decompose(&self, py: Python<'_>, tol_degeneracy: f64) -> PyResult<PyModes> {
        py.detach(|| opa_core::bloch_messiah(&self.0, tol_degeneracy)).py().map(PyModes)
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.0.save(&dir).py()
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        opa_core::GreenPair::load(&dir).py().map(Self)
    }
}

/// Squeezing parameters with their input (φ) and output (ψ) modes.
#[pyclass(name = "ModeDecomposition", module = "opa", frozen)]
struct PyModes(opa_core::ModeDecomposition);

#[pymethods]
impl PyModes {
    #[getter]
    fn zetas(&self) -> Vec<f64> {
        self.0.zetas.clone()
    }

    #[getter]
    fn frame(&self) -> String {
        self.0.frame.to_string()
    }

    #[getter]
    fn reconstruction_error(&self) -> f64 {
        self.0.reconstruction_error
    }

    fn psi(&self, n: usize) -> PyResult<Vec<Complex64>> {
        self.check(n)?;
        Ok(self.0.psi_column(n))
    }

    fn phi(&self, n: usize) -> PyResult<Vec<Complex64>> {
        self.check(n)?;
        Ok(self.0.phi_column(n))
    }

    fn total_photons(&self) -> f64 {
        self.0.total_photons()
    }

    /// |⟨ψ_n, φ_n*⟩| for the leading modes.
    #[pyo3(signature = (n_top=5))]
    fn verify_conjugacy(&self, n_top: usize) -> Vec<f64> {
        self.0.verify_conjugacy(n_top)
    }

    /// Least-squares Hermite-Gauss width of ψ_n, fs.
    fn fit_width(&self, n: usize) -> PyResult<f64> {
        self.check(n)?;
        opa_core::decomposition::fit_hermite_width(&self.0.psi_column(n), n, &self.0.grid).py()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

impl PyModes {
    fn check(&self, n: usize) -> PyResult<()> {
        if n >= self.0.len() {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!(
                "mode {n} out of range for {} modes",
                self.0.len()
            )));
        }
        Ok(())
    }
}

/// Normalized local-oscillator spectrum.
#[pyclass(name = "LocalOscillator", module = "opa", frozen)]
struct PyLocalOscillator(opa_core::LocalOscillator);

#[pymethods]
impl PyLocalOscillator {
    #[new]
    #[pyo3(signature = (amplitude, grid, frame="moving", label="custom"))]
    fn new(amplitude: Vec<Complex64>, grid: &PyFrequencyGrid, frame: &str, label: &str) -> PyResult<Self> {
        opa_core::LocalOscillator::new(amplitude, label, parse_frame(frame)?, grid.0)
            .py()
            .map(Self)
    }

    /// Gaussian pulse of duration `tau` fs, optionally carrying the crystal's output phase.
    #[staticmethod]
    #[pyo3(signature = (tau, model, grid, length=1.0, phase_locked=true, frame="moving"))]
    fn gaussian(
        tau: f64,
        model: &PyDispersionModel,
        grid: &PyFrequencyGrid,
        length: f64,
        phase_locked: bool,
        frame: &str,
    ) -> PyResult<Self> {
        opa_core::gaussian_lo(tau, &model.0, length, &grid.0, phase_locked, parse_frame(frame)?)
            .py()
            .map(Self)
    }

    #[getter]
    fn amplitude(&self) -> Vec<Complex64> {
        self.0.amplitude.clone()
    }

    /// Homodyne noise extrema and efficiency for the given modes, as a dict.
    fn report<'py>(&self, py: Python<'py>, modes: &PyModes) -> PyResult<Bound<'py, PyDict>> {
        let r = opa_core::homodyne_report(&self.0, &modes.0).py()?;
        let d = PyDict::new(py);
        d.set_item("q2_min", r.q2_min)?;
        d.set_item("q2_max", r.q2_max)?;
        d.set_item("q2_min_db", r.q2_min_db())?;
        d.set_item("theta_opt", r.theta_opt)?;
        d.set_item("eta", r.eta.value())?;
        d.set_item("leakage", r.leakage)?;
        d.set_item("odd_mass", r.odd_mass())?;
        d.set_item("m", r.m)?;
        d.set_item("theta", r.theta)?;
        Ok(d)
    }

    /// Quadrature variance at LO phase `phi` computed directly from the Green pair.
    fn noise(&self, green: &PyGreenPair, phi: f64) -> PyResult<f64> {
        opa_core::homodyne::direct_quadrature_noise(&self.0, &green.0, phi).py()
    }
}

/// Propagates the vacuum through the crystal and returns the Green pair in the lab frame.
#[pyfunction]
#[pyo3(signature = (pump, model, grid, scheme="split_step", n_steps=None))]
fn compute_green(
    py: Python<'_>,
    pump: &PyPumpSpec,
    model: &PyDispersionModel,
    grid: &PyFrequencyGrid,
    scheme: &str,
    n_steps: Option<usize>,
) -> PyResult<PyGreenPair> {
    let scheme = parse_scheme(scheme)?;
    let steps = n_steps.unwrap_or_else(|| scheme.default_steps(pump.0.length, pump.0.l_nl));
    let (spec, model, grid) = (pump.0, model.0, grid.0);
    py.detach(move || opa_core::compute_green(&spec, &model, &grid, scheme, steps))
        .py()
        .map(PyGreenPair)
}

/// Runs a CLI command ("dispersion", "greens", "modes", "gaussian", "homodyne" or "all").
#[pyfunction]
#[pyo3(signature = (command, out, config=None))]
fn run(py: Python<'_>, command: &str, out: PathBuf, config: Option<PathBuf>) -> PyResult<()> {
    use opa_core::Command;
    let command = match command {
        "dispersion" => Command::Dispersion,
        "greens" => Command::Greens,
        "modes" => Command::Modes,
        "gaussian" => Command::Gaussian,
        "homodyne" => Command::Homodyne,
        "all" => Command::All,
        other => return Err(ConfigError::new_err(format!("unknown command {other:?}"))),
    };
    let config = match config {
        Some(path) => opa_core::RunConfig::load(&path).py()?,
        None => opa_core::RunConfig::default(),
    };
    py.detach(move || opa_core::Pipeline::new(config, &out)?.run(command)).py()
}

#[pymodule]
fn opa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDispersionModel>()?;
    m.add_class::<PyFrequencyGrid>()?;
    m.add_class::<PyPumpSpec>()?;
    m.add_class::<PyGreenPair>()?;
    m.add_class::<PyModes>()?;
    m.add_class::<PyLocalOscillator>()?;
    m.add_function(wrap_pyfunction!(compute_green, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("InvariantError", m.py().get_type::<InvariantError>())?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add("SPEED_OF_LIGHT", opa_core::dispersion::SPEED_OF_LIGHT)?;
    Ok(())
}
