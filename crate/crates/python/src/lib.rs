//! Python bindings for the core simulator: system parameters, the
//! effective-model analytics, steady states and their observables, spectra
//! and classical dynamics. Heavy array returns use plain lists so the
//! module has no numpy build dependency; wrap them on the Python side.

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qvdp::classical::{classify_cell, ScanOptions};
use qvdp::effective::{
    bogoliubov, classical_fixed_points, classify_regime, lyapunov_covariance,
    stable_fixed_point,
};
use qvdp::hilbert::FockSpace;
use qvdp::lindblad::{mean_amplitude, mean_occupation, Liouvillian};
use qvdp::observables::{negativity_volume, phase_distribution, wigner};
use qvdp::ode::OdeOptions;
use qvdp::spectrum::{default_omega_grid, spectrum_full, SpectrumMethod};
use qvdp::util::linspace;

fn err(e: qvdp::Error) -> PyErr {
    match &e {
        qvdp::Error::InvalidInput { .. } | qvdp::Error::DimensionMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// System rates in units of gamma1.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Params {
    inner: qvdp::SystemParams,
}

#[pymethods]
impl Params {
    #[new]
    fn new(gamma2: f64, drive: f64, detuning: f64) -> PyResult<Self> {
        Ok(Self {
            inner: qvdp::SystemParams::in_gamma1_units(gamma2, drive, detuning).map_err(err)?,
        })
    }

    #[getter]
    fn gamma2(&self) -> f64 {
        self.inner.gamma2
    }

    #[getter]
    fn drive(&self) -> f64 {
        self.inner.drive
    }

    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning
    }

    /// Free-running limit-cycle radius sqrt(gamma1 / 2 gamma2).
    fn limit_cycle_radius(&self) -> f64 {
        self.inner.limit_cycle_radius()
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(gamma2={}, drive={}, detuning={})",
            self.inner.gamma2, self.inner.drive, self.inner.detuning
        )
    }
}

fn space_for(params: &Params, n_max: usize, displaced: bool) -> PyResult<FockSpace> {
    if displaced {
        let fp = stable_fixed_point(&params.inner).ok_or_else(|| {
            PyValueError::new_err("no stable classical fixed point to anchor the displaced frame")
        })?;
        FockSpace::displaced(n_max, fp.beta_ss).map_err(err)
    } else {
        FockSpace::lab(n_max).map_err(err)
    }
}

/// Classical fixed points of the amplitude equation: list of dicts with
/// beta, |beta|^2, eigenvalues and stability.
#[pyfunction]
fn fixed_points(py: Python<'_>, params: &Params) -> PyResult<Vec<Py<PyDict>>> {
    let set = classical_fixed_points(&params.inner);
    let mut out = Vec::new();
    for fp in set.points {
        let d = PyDict::new(py);
        d.set_item("beta", (fp.beta_ss.re, fp.beta_ss.im))?;
        d.set_item("u", fp.u)?;
        d.set_item("stable", fp.stable)?;
        d.set_item(
            "eigenvalues",
            vec![
                (fp.lambda[0].re, fp.lambda[0].im),
                (fp.lambda[1].re, fp.lambda[1].im),
            ],
        )?;
        out.push(d.into());
    }
    Ok(out)
}

/// Effective-model summary at one parameter point: regime label, rates,
/// covariance eigenvalues and the coherence quality factor.
#[pyfunction]
fn classify(py: Python<'_>, params: &Params) -> PyResult<Py<PyDict>> {
    let s = classify_regime(&params.inner);
    let d = PyDict::new(py);
    d.set_item("label", s.label.to_string())?;
    if let Some(fp) = &s.fixed_point {
        d.set_item("beta_ss", (fp.beta_ss.re, fp.beta_ss.im))?;
        d.set_item("r_ss", fp.r_ss())?;
        d.set_item("phi_ss", fp.phi_ss())?;
    }
    if let Some(r) = &s.rates {
        d.set_item("gamma", r.gamma)?;
        d.set_item("omega_eff", r.omega_eff)?;
        d.set_item("gamma_up", r.gamma_up)?;
        d.set_item("gamma_down", r.gamma_down)?;
        d.set_item("gamma_deph", r.gamma_deph)?;
        d.set_item("n_eff", r.n_eff)?;
        d.set_item("n_bar", r.n_bar)?;
        d.set_item("chi", r.chi)?;
    }
    if let Some(c) = &s.covariance {
        d.set_item("cov_eigenvalues", (c.eigenvalues[0], c.eigenvalues[1]))?;
        d.set_item("cov_asymmetry", c.asymmetry)?;
        d.set_item("below_shot_noise", c.below_shot_noise)?;
        d.set_item("principal_angle", c.principal_angle)?;
    }
    d.set_item("quality", s.quality)?;
    Ok(d.into())
}

/// Bogoliubov rates around the stable fixed point.
#[pyfunction]
fn effective_rates(py: Python<'_>, params: &Params) -> PyResult<Py<PyDict>> {
    let fp = stable_fixed_point(&params.inner)
        .ok_or_else(|| PyValueError::new_err("no stable classical fixed point"))?;
    let r = bogoliubov(&params.inner, &fp).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("amp", r.amp)?;
    d.set_item("theta", r.theta)?;
    d.set_item("gamma", r.gamma)?;
    d.set_item("underdamped", r.underdamped)?;
    d.set_item("omega_eff", r.omega_eff)?;
    d.set_item("gamma_deph", r.gamma_deph)?;
    d.set_item("n_eff", r.n_eff)?;
    d.set_item("n_bar", r.n_bar)?;
    Ok(d.into())
}

/// Steady-state covariance of the linearized model:
/// (sigma, eigenvalues, below_shot_noise).
#[pyfunction]
fn covariance(params: &Params) -> PyResult<(Vec<Vec<f64>>, (f64, f64), bool)> {
    let fp = stable_fixed_point(&params.inner)
        .ok_or_else(|| PyValueError::new_err("no stable classical fixed point"))?;
    let c = lyapunov_covariance(&params.inner, &fp).map_err(err)?;
    Ok((
        vec![c.sigma[0].to_vec(), c.sigma[1].to_vec()],
        (c.eigenvalues[0], c.eigenvalues[1]),
        c.below_shot_noise,
    ))
}

/// Classical bifurcation boundaries F^2(Delta); entries are None outside
/// their validity domain.
#[pyfunction]
fn boundaries(
    py: Python<'_>,
    gamma2: f64,
    detuning: f64,
) -> PyResult<Py<PyDict>> {
    let p = qvdp::SystemParams::in_gamma1_units(gamma2, 1.0, detuning).map_err(err)?;
    let d = PyDict::new(py);
    match qvdp::classical::boundary_saddle_node(&p, detuning) {
        Ok(sn) => {
            d.set_item("saddle_node_f_sq", (sn.f_sq_lower, sn.f_sq_upper))?;
        }
        Err(_) => d.set_item("saddle_node_f_sq", py.None())?,
    }
    match qvdp::classical::boundary_belyakov_devaney(&p, detuning) {
        Ok(v) => d.set_item("belyakov_devaney_f_sq", v)?,
        Err(_) => d.set_item("belyakov_devaney_f_sq", py.None())?,
    }
    match qvdp::classical::boundary_hopf(&p, detuning) {
        Ok(v) => d.set_item("hopf_f_sq", v)?,
        Err(_) => d.set_item("hopf_f_sq", py.None())?,
    }
    Ok(d.into())
}

/// Steady-state expectation values of the full model.
#[pyfunction]
#[pyo3(signature = (params, n_max, displaced = false))]
fn steady_observables(
    py: Python<'_>,
    params: &Params,
    n_max: usize,
    displaced: bool,
) -> PyResult<Py<PyDict>> {
    let space = space_for(params, n_max, displaced)?;
    let l = Liouvillian::full(params.inner, space).map_err(err)?;
    let ss = l.steady_state().map_err(err)?;
    let b = mean_amplitude(&ss);
    let d = PyDict::new(py);
    d.set_item("mean_b", (b.re, b.im))?;
    d.set_item("occupation", mean_occupation(&ss))?;
    d.set_item("purity", ss.purity())?;
    d.set_item("edge_population", ss.edge_population())?;
    Ok(d.into())
}

/// Steady-state phase distribution (phis, values).
#[pyfunction]
#[pyo3(signature = (params, n_max, n_phi, displaced = false))]
fn steady_phase_distribution(
    params: &Params,
    n_max: usize,
    n_phi: usize,
    displaced: bool,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let space = space_for(params, n_max, displaced)?;
    let l = Liouvillian::full(params.inner, space).map_err(err)?;
    let ss = l.steady_state().map_err(err)?;
    let pd = phase_distribution(&ss, n_phi).map_err(err)?;
    Ok((pd.phis, pd.values))
}

/// Steady-state Wigner density on a square grid:
/// (xs, ps, row-major values, negativity_volume).
#[pyfunction]
#[pyo3(signature = (params, n_max, half_width, n_grid, displaced = false))]
fn steady_wigner(
    params: &Params,
    n_max: usize,
    half_width: f64,
    n_grid: usize,
    displaced: bool,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let space = space_for(params, n_max, displaced)?;
    let l = Liouvillian::full(params.inner, space).map_err(err)?;
    let ss = l.steady_state().map_err(err)?;
    let grid = linspace(-half_width, half_width, n_grid);
    let w = wigner(&ss, &grid, &grid).map_err(err)?;
    let vol = negativity_volume(&w);
    let flat: Vec<f64> = w.values.iter().cloned().collect();
    Ok((w.xs, w.ps, flat, vol))
}

/// Emission spectrum of the full model:
/// (omegas, values, coherent_weight).
#[pyfunction]
#[pyo3(signature = (params, n_max, n_omega, omega_max = 0.0, displaced = false, method = "resolvent"))]
fn spectrum(
    params: &Params,
    n_max: usize,
    n_omega: usize,
    omega_max: f64,
    displaced: bool,
    method: &str,
) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let space = space_for(params, n_max, displaced)?;
    let l = Liouvillian::full(params.inner, space).map_err(err)?;
    let ss = l.steady_state().map_err(err)?;
    let omegas = if omega_max > 0.0 {
        linspace(-omega_max, omega_max, n_omega)
    } else {
        default_omega_grid(&params.inner, n_omega)
    };
    let m = match method {
        "resolvent" => SpectrumMethod::Resolvent,
        "eigen" => SpectrumMethod::Eigen,
        other => {
            return Err(PyValueError::new_err(format!(
                "method must be \"resolvent\" or \"eigen\", got {other:?}"
            )))
        }
    };
    let tr = spectrum_full(&l, &ss, &omegas, m).map_err(err)?;
    Ok((tr.omegas, tr.values, tr.coherent_weight))
}

/// Analytic spectrum of the linearized model: (omegas, values).
#[pyfunction]
fn effective_spectrum(
    params: &Params,
    n_omega: usize,
    omega_max: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let fp = stable_fixed_point(&params.inner)
        .ok_or_else(|| PyValueError::new_err("no stable classical fixed point"))?;
    let omegas = linspace(-omega_max, omega_max, n_omega);
    let tr = qvdp::effective::effective_spectrum(&params.inner, &fp, &omegas).map_err(err)?;
    Ok((tr.omegas, tr.values))
}

/// Integrate the classical amplitude equation:
/// (times, re beta, im beta).
#[pyfunction]
fn classical_trajectory(
    params: &Params,
    beta0: (f64, f64),
    t_final: f64,
    n_samples: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if n_samples == 0 || !(t_final > 0.0) {
        return Err(PyValueError::new_err("need n_samples >= 1 and t_final > 0"));
    }
    let times: Vec<f64> = (1..=n_samples)
        .map(|k| t_final * k as f64 / n_samples as f64)
        .collect();
    let traj = qvdp::classical::integrate(
        &params.inner,
        C64::new(beta0.0, beta0.1),
        &times,
        &OdeOptions::default(),
    )
    .map_err(err)?;
    let re: Vec<f64> = traj.beta.iter().map(|b| b.re).collect();
    let im: Vec<f64> = traj.beta.iter().map(|b| b.im).collect();
    Ok((traj.times, re, im))
}

/// Classify one (F, Delta) cell of the classical diagram:
/// (label, winding).
#[pyfunction]
fn classical_cell(params: &Params) -> (String, i32) {
    let cell = classify_cell(&params.inner, &ScanOptions::default());
    (cell.label.to_string(), cell.winding)
}

#[pymodule]
fn qvdp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    qvdp::configure_blas();
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(effective_rates, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(boundaries, m)?)?;
    m.add_function(wrap_pyfunction!(steady_observables, m)?)?;
    m.add_function(wrap_pyfunction!(steady_phase_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(steady_wigner, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(effective_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(classical_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(classical_cell, m)?)?;
    Ok(())
}
