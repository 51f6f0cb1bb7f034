//! Python bindings: parameters, the h/φ/f solution family, Weierstrass
//! evaluation, residual audits, the admissible region and split-step
//! propagation.

use ellipnls_core::physicality::{admissible_region_with, check_h};
use ellipnls_core::quartic::{
    r1_coefficients, Gamma2Convention, QuarticCoefficients, SolutionParams,
};
use ellipnls_core::residual::{self as res, ResidualReport};
use ellipnls_core::solution::{self as sol, uniform_grid};
use ellipnls_core::spectral::{self, SpectralConfig};
use ellipnls_core::weierstrass::{lattice_from_invariants, EllipticInvariants, LatticeData};
use ellipnls_core::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e {
        Error::InvalidInput(_) | Error::ConstraintViolation(_) => PyValueError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn convention(name: &str) -> PyResult<Gamma2Convention> {
    name.parse().map_err(|e: Error| py_err(e))
}

fn coeff_tuple(q: &QuarticCoefficients) -> (f64, f64, f64, f64, f64) {
    (q.alpha, q.beta, q.gamma, q.delta, q.epsilon)
}

fn report_dict<'py>(py: Python<'py>, r: &ResidualReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("equation", &r.equation)?;
    d.set_item("max_abs", r.max_abs)?;
    d.set_item("max_rel", r.max_rel)?;
    d.set_item("location", r.location)?;
    d.set_item("floor", r.construction_error_floor)?;
    d.set_item("evaluated", r.evaluated)?;
    d.set_item("skipped", r.skipped)?;
    for (k, v) in &r.details {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Parameters (a, c1, c2, c3, h0, f0, phi0).
#[pyclass(name = "SolutionParams", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: SolutionParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (a, c1, c2, c3, h0=0.0, f0=0.0, phi0=0.0))]
    fn new(a: f64, c1: f64, c2: f64, c3: f64, h0: f64, f0: f64, phi0: f64) -> PyResult<Self> {
        let inner = SolutionParams {
            a,
            c1,
            c2,
            c3,
            h0,
            f0,
            phi0,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// a = −1, c1 = −2, c2 = 0.4, c3 = 0.13, h0 = f0 = 0
    #[staticmethod]
    fn appendix() -> Self {
        Self {
            inner: SolutionParams::appendix_example(),
        }
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }
    #[getter]
    fn c1(&self) -> f64 {
        self.inner.c1
    }
    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2
    }
    #[getter]
    fn c3(&self) -> f64 {
        self.inner.c3
    }
    #[getter]
    fn h0(&self) -> f64 {
        self.inner.h0
    }
    #[getter]
    fn f0(&self) -> f64 {
        self.inner.f0
    }
    #[getter]
    fn phi0(&self) -> f64 {
        self.inner.phi0
    }

    /// Copy with f0 replaced.
    fn with_f0(&self, f0: f64) -> Self {
        Self {
            inner: SolutionParams { f0, ..self.inner },
        }
    }

    /// Coefficients (α, β, γ, δ, ε) of R₁.
    fn r1(&self) -> (f64, f64, f64, f64, f64) {
        coeff_tuple(&r1_coefficients(&self.inner))
    }

    /// (satisfied, case) of the physicality check on h.
    fn check_h(&self) -> (bool, String) {
        let r = check_h(&self.inner);
        (r.satisfied, format!("{:?}", r.case).to_lowercase())
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SolutionParams(a={}, c1={}, c2={}, c3={}, h0={}, f0={}, phi0={})",
            p.a, p.c1, p.c2, p.c3, p.h0, p.f0, p.phi0
        )
    }
}

/// Weierstrass lattice for real invariants.
#[pyclass(name = "Lattice")]
struct PyLattice {
    inner: LatticeData,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(g2: f64, g3: f64) -> PyResult<Self> {
        let inv = EllipticInvariants::new(g2, g3).map_err(py_err)?;
        Ok(Self {
            inner: lattice_from_invariants(inv).map_err(py_err)?,
        })
    }

    #[getter]
    fn discriminant(&self) -> f64 {
        self.inner.invariants.delta
    }
    #[getter]
    fn e1(&self) -> f64 {
        self.inner.e1
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }
    #[getter]
    fn real_period(&self) -> f64 {
        self.inner.real_period()
    }

    /// (℘(z), ℘′(z))
    fn wp(&self, z: Complex64) -> PyResult<(Complex64, Complex64)> {
        self.inner.wp(z).map_err(py_err)
    }

    /// (σ(z), ζ(z))
    fn sigma_zeta(&self, z: Complex64) -> PyResult<(Complex64, Complex64)> {
        self.inner.sigma_zeta(z).map_err(py_err)
    }

    fn wp_inverse(&self, w: Complex64) -> PyResult<Complex64> {
        self.inner.wp_inverse(w).map_err(py_err)
    }
}

/// h(z), φ(z) and f(t, z) for one parameter set.
#[pyclass(name = "Solution")]
struct PySolution {
    h: sol::HSolution,
    phi: Option<sol::PhiSolution>,
    f: sol::FSolution,
}

#[pymethods]
impl PySolution {
    #[new]
    #[pyo3(signature = (params, gamma2="consistent"))]
    fn new(params: PyParams, gamma2: &str) -> PyResult<Self> {
        let h = sol::HSolution::new(params.inner).map_err(py_err)?;
        let phi = sol::PhiSolution::new(&h).ok();
        let f = sol::FSolution::with_convention(h.clone(), convention(gamma2)?);
        Ok(Self { h, phi, f })
    }

    /// Real period of h in z.
    #[getter]
    fn lz(&self) -> f64 {
        self.h.period()
    }

    /// (g₂, g₃, Δ) of R₁.
    #[getter]
    fn invariants_z(&self) -> (f64, f64, f64) {
        let i = self.h.inv_z;
        (i.g2, i.g3, i.delta)
    }

    fn h(&self, z: f64) -> PyResult<f64> {
        self.h.h_eval(z).map_err(py_err)
    }

    fn h_grid(&self, zs: Vec<f64>) -> PyResult<Vec<f64>> {
        zs.iter()
            .map(|&z| self.h.h_eval(z).map_err(py_err))
            .collect()
    }

    fn phi(&self, z: f64) -> PyResult<f64> {
        let p = self
            .phi
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("φ is not available for these parameters"))?;
        p.phi_eval(z).map_err(py_err)
    }

    fn f(&self, t: f64, z: f64) -> PyResult<f64> {
        self.f.f_eval(t, z).map_err(py_err)
    }

    /// t-period of f at z (∞ when there is none).
    fn lt(&self, z: f64) -> PyResult<f64> {
        Ok(self.f.column(z).map_err(py_err)?.period())
    }

    /// Coefficients (α, β, γ, δ, ε) of R₂ at z.
    fn r2(&self, z: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
        Ok(coeff_tuple(&self.f.column(z).map_err(py_err)?.q2))
    }

    fn psi(&self, t: f64, z: f64) -> PyResult<Complex64> {
        let p = self
            .phi
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("φ is not available for these parameters"))?;
        sol::psi_eval(t, z, &self.f, p).map(|v| v.0).map_err(py_err)
    }

    fn residual_h<'py>(&self, py: Python<'py>, zs: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &res::residual_h(&self.h, &zs))
    }

    fn residual_f<'py>(
        &self,
        py: Python<'py>,
        z: f64,
        ts: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &res::residual_f(&self.f, z, &ts).map_err(py_err)?)
    }

    fn residual_phase<'py>(&self, py: Python<'py>, zs: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let p = self
            .phi
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("φ is not available for these parameters"))?;
        report_dict(py, &res::residual_phase(p, &self.h, &zs))
    }

    fn residual_riccati<'py>(
        &self,
        py: Python<'py>,
        ts: Vec<f64>,
        zs: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &res::residual_riccati(&self.f, &ts, &zs))
    }
}

/// Uniform grid of n points on [lo, hi].
#[pyfunction]
fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    uniform_grid(lo, hi, n)
}

/// (f0_grid, z_grid, mask[iz][if0]) of the admissible (f0, z) region.
#[pyfunction]
#[pyo3(signature = (params, f0_range, z_range, resolution=(400, 400), gamma2="consistent"))]
fn admissible_region(
    params: PyParams,
    f0_range: (f64, f64),
    z_range: (f64, f64),
    resolution: (usize, usize),
    gamma2: &str,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Vec<bool>>)> {
    let r = admissible_region_with(
        &params.inner,
        convention(gamma2)?,
        f0_range,
        z_range,
        resolution,
    )
    .map_err(py_err)?;
    Ok((r.f0_grid, r.z_grid, r.mask))
}

/// Integrate one t-line over `z_span` with the split-step scheme.
#[pyfunction]
#[pyo3(signature = (line, window, dz, z_span, a, forward=true))]
fn propagate_line(
    line: Vec<Complex64>,
    window: f64,
    dz: f64,
    z_span: f64,
    a: f64,
    forward: bool,
) -> PyResult<Vec<Complex64>> {
    let cfg = SpectralConfig {
        window,
        n_modes: line.len(),
        dz,
        z_span,
        snapshots: 2,
    };
    spectral::propagate_line(&line, &cfg, a, forward).map_err(py_err)
}

/// (power, hamiltonian) of a periodic t-line.
#[pyfunction]
fn conserved_quantities(line: Vec<Complex64>, window: f64, a: f64) -> PyResult<(f64, f64)> {
    spectral::conserved_quantities(&line, window, a).map_err(py_err)
}

#[pymodule]
fn ellipnls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(grid, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_region, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_line, m)?)?;
    m.add_function(wrap_pyfunction!(conserved_quantities, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
