//! Python bindings: fluxes, Riemann fans, cell fields, projections, decay
//! runs and audits.

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use conslaw_core as core;
use conslaw_core::lyapunov::{TOL_ABS, TOL_REL};

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Cfl { .. } | core::Error::NonFinite(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Polynomial flux, coefficients lowest degree first.
#[pyclass(name = "PolyFlux", module = "conslaw", frozen)]
struct PyPolyFlux(core::PolyFlux);

#[pymethods]
impl PyPolyFlux {
    #[new]
    fn new(coeffs: Vec<f64>) -> PyResult<Self> {
        core::PolyFlux::new(coeffs).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn burgers() -> Self {
        Self(core::PolyFlux::burgers())
    }

    #[staticmethod]
    fn cubic() -> Self {
        Self(core::PolyFlux::cubic())
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs().to_vec()
    }

    fn eval(&self, u: f64) -> f64 {
        self.0.eval(u)
    }

    fn derivative(&self) -> Self {
        Self(self.0.derivative())
    }

    fn __repr__(&self) -> String {
        format!("PolyFlux({:?})", self.0.coeffs())
    }
}

/// Entropy solution of a Riemann problem as a function of `xi = x / t`.
#[pyclass(name = "RiemannFan", module = "conslaw", frozen)]
struct PyRiemannFan(core::RiemannFan);

#[pymethods]
impl PyRiemannFan {
    fn sample(&self, xi: f64) -> f64 {
        self.0.sample(xi)
    }

    /// Mean of the fan over `[xi_a, xi_b]`.
    fn average(&self, xi_a: f64, xi_b: f64) -> f64 {
        self.0.average(xi_a, xi_b)
    }

    /// `(kind, speed_start, speed_end, u_start, u_end)` per wave.
    #[getter]
    fn waves(&self) -> Vec<(&'static str, f64, f64, f64, f64)> {
        self.0
            .pieces
            .iter()
            .map(|p| match *p {
                core::WavePiece::Shock { speed, u_before, u_after } => ("shock", speed, speed, u_before, u_after),
                core::WavePiece::Rarefaction { speed_range: (s0, s1), u_range: (u0, u1) } => {
                    ("rarefaction", s0, s1, u0, u1)
                }
            })
            .collect()
    }
}

#[pyfunction]
fn solve_riemann(flux: PyRef<'_, PyPolyFlux>, v_minus: f64, v_plus: f64) -> PyResult<PyRiemannFan> {
    core::solve_riemann(&flux.0, v_minus, v_plus).map(PyRiemannFan).map_err(to_py)
}

#[pyfunction]
fn godunov_flux(flux: PyRef<'_, PyPolyFlux>, u_l: f64, u_r: f64) -> f64 {
    core::godunov_flux(&flux.0, u_l, u_r)
}

/// Cell averages on a uniform grid, equal to `u_minus` / `u_plus` outside.
#[pyclass(name = "CellField", module = "conslaw", frozen)]
struct PyCellField(core::CellField);

fn grid(x_left: f64, x_right: f64, n: usize) -> PyResult<core::Grid1D> {
    core::Grid1D::covering(x_left, x_right, n).map_err(to_py)
}

#[pymethods]
impl PyCellField {
    #[new]
    fn new(x_left: f64, h: f64, values: Vec<f64>, u_minus: f64, u_plus: f64) -> PyResult<Self> {
        let g = core::Grid1D::new(x_left, h, values.len()).map_err(to_py)?;
        core::CellField::new(g, values, u_minus, u_plus).map(Self).map_err(to_py)
    }

    /// Riemann data with the jump at `x = 0`.
    #[staticmethod]
    fn riemann(x_left: f64, x_right: f64, n: usize, v_minus: f64, v_plus: f64) -> PyResult<Self> {
        core::data::riemann(grid(x_left, x_right, n)?, v_minus, v_plus).map(Self).map_err(to_py)
    }

    /// Seeded random piecewise-constant data on `support`.
    #[staticmethod]
    #[pyo3(signature = (seed, x_left, x_right, n, u_minus, u_plus, amplitude = 2.0, support = None))]
    #[allow(clippy::too_many_arguments)]
    fn random_bv(
        seed: u64,
        x_left: f64,
        x_right: f64,
        n: usize,
        u_minus: f64,
        u_plus: f64,
        amplitude: f64,
        support: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        let support = support.unwrap_or((x_left, x_right));
        core::data::random_bv(seed, amplitude, support, grid(x_left, x_right, n)?, u_minus, u_plus)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn centers(&self) -> Vec<f64> {
        (0..self.0.len()).map(|j| self.0.grid().center(j)).collect()
    }

    #[getter]
    fn x_left(&self) -> f64 {
        self.0.grid().x_left
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn u_minus(&self) -> f64 {
        self.0.u_minus()
    }

    #[getter]
    fn u_plus(&self) -> f64 {
        self.0.u_plus()
    }

    fn is_monotone(&self) -> bool {
        self.0.is_monotone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyfunction]
fn project_monotone(u: PyRef<'_, PyCellField>) -> PyResult<PyCellField> {
    core::project_monotone(&u.0).map(|p| PyCellField(p.projected)).map_err(to_py)
}

/// Same projection through the inf-sup formula; used as a cross-check.
#[pyfunction]
fn project_monotone_infsup(u: PyRef<'_, PyCellField>) -> PyResult<PyCellField> {
    core::project_monotone_infsup(&u.0).map(PyCellField).map_err(to_py)
}

/// Returns `(projected_values, threshold)`.
#[pyfunction]
fn project_l1ball(values: Vec<f64>, cell_volume: f64, r: f64) -> PyResult<(Vec<f64>, f64)> {
    core::project::project_l1ball_values(&values, cell_volume, r).map(|p| (p.projected, p.threshold_s)).map_err(to_py)
}

#[pyfunction]
fn project_interval(values: Vec<f64>, lo: f64, hi: f64) -> PyResult<Vec<f64>> {
    core::project::project_interval_values(&values, lo, hi).map_err(to_py)
}

/// Sampled diagnostics of a run.
#[pyclass(name = "DecayReport", module = "conslaw", frozen)]
struct PyDecayReport(core::DecayReport);

#[pymethods]
impl PyDecayReport {
    /// Builds a report from sample times and named series of equal length.
    #[new]
    fn new(times: Vec<f64>, series: Vec<(String, Vec<f64>)>) -> PyResult<Self> {
        if series.iter().any(|(_, v)| v.len() != times.len()) {
            return Err(PyValueError::new_err("every series needs one value per time"));
        }
        let mut report = core::DecayReport::new(series.iter().map(|(n, _)| n.clone()).collect());
        for (k, &t) in times.iter().enumerate() {
            report.push(t, series.iter().map(|(_, v)| v[k]).collect()).map_err(to_py)?;
        }
        Ok(Self(report))
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    fn series(&self, name: &str) -> PyResult<Vec<f64>> {
        self.0.series(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn diagnostics(
    targets: &[String],
    entropies: &[String],
    interval: (f64, f64),
    radius: f64,
) -> PyResult<Vec<core::Diagnostic>> {
    use core::Diagnostic as D;
    let etas = || -> PyResult<Vec<core::EntropyPair>> {
        entropies.iter().map(|s| s.parse().map_err(to_py)).collect()
    };
    let mut out = Vec::new();
    for t in targets {
        match t.as_str() {
            "monotone" => out.push(D::D2Monotone),
            "interval" => out.push(D::D2Interval { lo: interval.0, hi: interval.1 }),
            "l1ball" => out.push(D::D2L1Ball { r: radius }),
            "l2ball" => out.push(D::D2L2Ball { r: radius }),
            "relative_entropy" => out.extend(etas()?.into_iter().map(|eta| D::DeltaRelativeEntropy { eta })),
            "ball_entropy" => out.extend(etas()?.into_iter().map(|eta| D::DeltaBall { r: radius, eta })),
            other => return Err(PyValueError::new_err(format!("unknown target {other:?}"))),
        }
    }
    out.push(D::Norms);
    Ok(out)
}

/// Evolves `u` to `t_end` and records the requested functionals plus norms.
#[pyfunction]
#[pyo3(signature = (
    u, flux, t_end, scheme = "godunov", cfl_ratio = 0.45, stride = 1,
    targets = vec!["monotone".to_string()], entropies = vec!["s2".to_string()],
    interval = (-1.0, 1.0), radius = 1.0
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    u: PyRef<'_, PyCellField>,
    flux: PyRef<'_, PyPolyFlux>,
    t_end: f64,
    scheme: &str,
    cfl_ratio: f64,
    stride: usize,
    targets: Vec<String>,
    entropies: Vec<String>,
    interval: (f64, f64),
    radius: f64,
) -> PyResult<(PyCellField, PyDecayReport)> {
    let scheme: core::Scheme = scheme.parse().map_err(to_py)?;
    let cfg = core::SchemeConfig::new(scheme, cfl_ratio, t_end, stride).map_err(to_py)?;
    let observers = diagnostics(&targets, &entropies, interval, radius)?;
    let (initial, f) = (u.0.clone(), flux.0.clone());
    let (end, report) = py.detach(|| core::run(initial, &f, &cfg, &observers)).map_err(to_py)?;
    Ok((PyCellField(end), PyDecayReport(report)))
}

/// Audits every Lyapunov series of `report` for increases beyond
/// `tol_abs + tol_rel * |previous|`. Returns a dict with `passed`,
/// `audited` and `violations` as `(series, k, t_from, t_to, increase)`.
#[pyfunction]
#[pyo3(signature = (report, tol_abs = TOL_ABS, tol_rel = TOL_REL))]
fn audit<'py>(
    py: Python<'py>,
    report: PyRef<'_, PyDecayReport>,
    tol_abs: f64,
    tol_rel: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let summary = core::audit_decay(&report.0, tol_abs, tol_rel);
    let out = pyo3::types::PyDict::new(py);
    out.set_item("passed", summary.passed())?;
    out.set_item("audited", summary.audited.clone())?;
    let violations: Vec<(String, usize, f64, f64, f64)> = summary
        .violations
        .into_iter()
        .map(|v| (v.series, v.index, v.t_from, v.t_to, v.increase))
        .collect();
    out.set_item("violations", violations)?;
    Ok(out)
}

#[pymodule]
fn conslaw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolyFlux>()?;
    m.add_class::<PyRiemannFan>()?;
    m.add_class::<PyCellField>()?;
    m.add_class::<PyDecayReport>()?;
    m.add_function(wrap_pyfunction!(solve_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(godunov_flux, m)?)?;
    m.add_function(wrap_pyfunction!(project_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(project_monotone_infsup, m)?)?;
    m.add_function(wrap_pyfunction!(project_l1ball, m)?)?;
    m.add_function(wrap_pyfunction!(project_interval, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    Ok(())
}
