//! Python bindings: envelope algebra, samplers, tail estimation and the
//! resolvent machinery, exposed as the `conclab` module.

use ndarray::{Array1, Array2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_distr::{Distribution, StandardNormal};

use conc_lab::estimation as est;
use conc_lab::generators as gen;
use conc_lab::profile as prof;
use conc_lab::rmt;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_family(family: &str, dim: usize, lq_exponent: Option<f64>) -> PyResult<gen::VectorModel> {
    let kind = match family {
        "gaussian" => gen::Kind::Gaussian,
        "sphere" => gen::Kind::Sphere,
        "ball" => gen::Kind::Ball,
        "cube" => gen::Kind::Cube,
        "laplace" => gen::Kind::Laplace,
        "lq_ball" => gen::Kind::LqBall {
            q: lq_exponent.ok_or_else(|| err("lq_ball requires lq_exponent"))?,
        },
        other => return Err(err(format!("unknown family '{other}'"))),
    };
    gen::VectorModel::new(kind, dim).map_err(err)
}

fn consts(big_c: f64, little_c: f64) -> PyResult<prof::ProfileConstants> {
    prof::ProfileConstants::new(big_c, little_c).map_err(err)
}

/// Multi-regime concentration envelope.
#[pyclass(frozen)]
struct Profile {
    inner: prof::ConcentrationProfile,
}

#[pymethods]
impl Profile {
    /// [(exponent, scale), ...] sorted by decreasing exponent
    fn regimes(&self) -> Vec<(f64, f64)> {
        self.inner
            .regimes()
            .iter()
            .map(|r| (r.exponent, r.scale))
            .collect()
    }

    fn constants(&self) -> (f64, f64) {
        let c = self.inner.constants();
        (c.big_c, c.little_c)
    }

    fn tail_bound(&self, t: f64) -> f64 {
        self.inner.tail_bound(t)
    }

    fn moment_bound(&self, r: f64) -> PyResult<f64> {
        self.inner.moment_bound(r).map_err(err)
    }

    fn dominant_regime(&self, t: f64) -> usize {
        self.inner.dominant_regime(t)
    }

    fn scaled(&self, lipschitz: f64) -> PyResult<Profile> {
        Ok(Profile {
            inner: self.inner.scaled(lipschitz).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Profile> {
        Ok(Profile {
            inner: serde_json::from_str(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        let regs: Vec<String> = self
            .inner
            .regimes()
            .iter()
            .map(|r| format!("E_{:.4}({:.6})", r.exponent, r.scale))
            .collect();
        format!("Profile[{}]", regs.join(" + "))
    }
}

/// Product of the k largest entries of nu (empty product = 1).
#[pyfunction]
fn nu_superscript(nu: Vec<f64>, k: usize) -> PyResult<f64> {
    prof::nu_superscript(&nu, k).map_err(err)
}

/// Envelope of an m-fold generalized product with joint exponent q, joint
/// diameter sigma and per-factor norm bounds mu.
#[pyfunction]
#[pyo3(signature = (q, sigma, mu, big_c = 2.0, little_c = std::f64::consts::SQRT_2))]
fn product_profile(
    q: f64,
    sigma: f64,
    mu: Vec<f64>,
    big_c: f64,
    little_c: f64,
) -> PyResult<Profile> {
    let spec = prof::ProductSpec::new(q, sigma, mu).map_err(err)?;
    Ok(Profile {
        inner: spec.product_profile(consts(big_c, little_c)?),
    })
}

/// Regime-dominance boundaries (t_1 = 0, ..., t_{m+1} = inf).
#[pyfunction]
fn breakpoints(q: f64, sigma: f64, mu: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(prof::ProductSpec::new(q, sigma, mu)
        .map_err(err)?
        .breakpoints())
}

#[pyfunction]
#[pyo3(signature = (frobenius, spectral, k = 1.0, big_c = 2.0, little_c = std::f64::consts::SQRT_2))]
fn hanson_wright_profile(
    frobenius: f64,
    spectral: f64,
    k: f64,
    big_c: f64,
    little_c: f64,
) -> PyResult<Profile> {
    Ok(Profile {
        inner: prof::hanson_wright_profile(frobenius, spectral, k, consts(big_c, little_c)?)
            .map_err(err)?,
    })
}

/// Product envelope with every scale multiplied by kappa^m; returns the
/// profile and an optional hypothesis-violation warning message.
#[pyfunction]
#[pyo3(signature = (q, sigma, mu, kappa, big_c = 2.0, little_c = std::f64::consts::SQRT_2))]
fn high_order_profile(
    q: f64,
    sigma: f64,
    mu: Vec<f64>,
    kappa: f64,
    big_c: f64,
    little_c: f64,
) -> PyResult<(Profile, Option<String>)> {
    let spec = prof::ProductSpec::new(q, sigma, mu).map_err(err)?;
    let (profile, warning) = spec
        .high_order_profile(kappa, consts(big_c, little_c)?)
        .map_err(err)?;
    Ok((Profile { inner: profile }, warning.map(|w| w.message)))
}

/// Norm degree of the named space ("euclidean", "sup", "spectral",
/// "frobenius", "nuclear", "diag").
#[pyfunction]
#[pyo3(signature = (kind, p, n = 0))]
fn norm_degree(kind: &str, p: usize, n: usize) -> PyResult<f64> {
    let k: prof::NormKind = kind.parse().map_err(err)?;
    prof::norm_degree(k, p, n).map_err(err)
}

/// N draws of a fundamental family as a list of rows (bit-reproducible for a
/// given seed).
#[pyfunction]
#[pyo3(signature = (family, dim, n_trials, seed, lq_exponent = None))]
fn sample(
    family: &str,
    dim: usize,
    n_trials: usize,
    seed: u64,
    lq_exponent: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let model = parse_family(family, dim, lq_exponent)?;
    let ens = gen::sample(&model, n_trials, seed).map_err(err)?;
    Ok(ens.data.rows().into_iter().map(|r| r.to_vec()).collect())
}

/// Streams the first-coordinate observation of N draws.
#[pyfunction]
#[pyo3(signature = (family, dim, n_trials, seed, lq_exponent = None))]
fn observe_coordinate(
    family: &str,
    dim: usize,
    n_trials: usize,
    seed: u64,
    lq_exponent: Option<f64>,
) -> PyResult<Vec<f64>> {
    let model = parse_family(family, dim, lq_exponent)?;
    gen::observe(&model, n_trials, seed, 0, |z| z[0]).map_err(err)
}

/// DKW uniform confidence half-width sqrt(ln(2/delta) / (2 n)).
#[pyfunction]
fn dkw_band(n: usize, delta: f64) -> f64 {
    est::dkw_band(n, delta)
}

/// Fits the tail exponent of a sample; returns a dict with q_hat, scale_hat,
/// r2, theta_hat and the plain (uncorrected) slope.
#[pyfunction]
#[pyo3(signature = (values, alpha_lo = 1e-3, alpha_hi = 1e-1, prefactor_correction = true))]
fn fit_tail<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    alpha_lo: f64,
    alpha_hi: f64,
    prefactor_correction: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let tail = est::empirical_tail(
        &values,
        est::CenterKind::Median,
        est::GridSpec::default(),
        0.05,
    )
    .map_err(err)?;
    let fit = est::fit_tail_exponent(
        &tail,
        est::FitWindow { alpha_lo, alpha_hi },
        est::FitOptions {
            big_c: 1.0,
            prefactor_correction,
        },
    )
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("q_hat", fit.q_hat)?;
    out.set_item("scale_hat", fit.scale_hat)?;
    out.set_item("r2", fit.r2)?;
    out.set_item("theta_hat", fit.theta_hat)?;
    out.set_item("q_hat_plain", fit.q_hat_plain)?;
    out.set_item("points_used", fit.points_used)?;
    out.set_item("dkw_band", tail.dkw_band)?;
    Ok(out)
}

/// Observable diameter of a family (max std over random unit observations,
/// the norm observation and the normalized sum).
#[pyfunction]
#[pyo3(signature = (family, dim, n_trials, observations, seed, lq_exponent = None))]
fn observable_diameter(
    family: &str,
    dim: usize,
    n_trials: usize,
    observations: usize,
    seed: u64,
    lq_exponent: Option<f64>,
) -> PyResult<f64> {
    let model = parse_family(family, dim, lq_exponent)?;
    Ok(est::observable_diameter(&model, n_trials, observations, seed)
        .map_err(err)?
        .diameter)
}

/// Closed-form isotropic fixed point (ratio c = p/n, deterministic d).
#[pyfunction]
fn isotropic_delta(c_ratio: f64, d: f64) -> f64 {
    rmt::isotropic_delta_oracle(c_ratio, d)
}

/// Solves the delta fixed point in the isotropic reduction and returns
/// (delta, iterations, converged).
#[pyfunction]
#[pyo3(signature = (p, n, d, tol = 1e-10, max_iter = 500))]
fn solve_isotropic_delta(
    p: usize,
    n: usize,
    d: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(f64, usize, bool)> {
    let law = rmt::DiagonalLaw::Deterministic { values: vec![d; n] };
    let (state, _) = rmt::solve_delta(&law, &rmt::SigmaSpec::Isotropic { p }, n, tol, max_iter)
        .map_err(err)?;
    Ok((state.delta[0], state.iterations, state.converged))
}

/// Draws one admissible gaussian spec, picks a column, and returns the
/// relative errors of the two rank-one (leave-one-out) identities.
#[pyfunction]
#[pyo3(signature = (p, n, d, seed, column = 0))]
fn leave_one_out_errors(
    p: usize,
    n: usize,
    d: f64,
    seed: u64,
    column: usize,
) -> PyResult<(f64, f64)> {
    let mut rng = gen::stream_rng(seed, 0, 0, 0);
    let x = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut rng));
    let kappa = (1.0 + (p as f64 / n as f64).sqrt()) * 1.05;
    let epsilon = 1.0 - kappa * kappa * d;
    if epsilon <= 0.0 {
        return Err(err("inadmissible (p/n, d) combination"));
    }
    let spec = rmt::ResolventSpec::new(x.clone(), x, Array1::from_elem(n, d), kappa, d, epsilon)
        .map_err(err)?;
    let out = rmt::leave_one_out(&spec, column).map_err(err)?;
    Ok((out.schur_full_rel_err, out.schur_action_rel_err))
}

/// Robust-regression fixed point on a gaussian design; returns a dict with
/// the beta norm, iteration count and the worst leave-one-out coupling norm.
#[pyfunction]
#[pyo3(signature = (p, n, amplitude, offset, seed, tol = 1e-12, max_iter = 500))]
#[allow(clippy::too_many_arguments)]
fn robust_beta_summary<'py>(
    py: Python<'py>,
    p: usize,
    n: usize,
    amplitude: f64,
    offset: f64,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rng = gen::stream_rng(seed, 0, 0, 0);
    let x = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut rng));
    let norm = conc_lab::linalg::spectral_norm(&x.view());
    let epsilon = (1.0 - amplitude * norm * norm / n as f64) * 0.999;
    if epsilon <= 0.0 {
        return Err(err("contraction margin violated for this design"));
    }
    let spec = rmt::RobustRegressionSpec::new(
        x,
        rmt::ScalarFn::ScaledTanh { amplitude, offset },
        epsilon,
    )
    .map_err(err)?;
    let out = rmt::robust_beta(&spec, tol, max_iter).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("beta_norm", out.beta.dot(&out.beta).sqrt())?;
    dict.set_item("iterations", out.iterations)?;
    dict.set_item("max_coupling_norm", out.max_coupling_norm)?;
    dict.set_item("epsilon", spec.epsilon)?;
    Ok(dict)
}

/// Exact E||Z|| for a standard gaussian in dimension p.
#[pyfunction]
fn gaussian_norm_mean(p: usize) -> f64 {
    est::gaussian_norm_mean_exact(p)
}

#[pymodule]
fn conclab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Profile>()?;
    m.add_function(wrap_pyfunction!(nu_superscript, m)?)?;
    m.add_function(wrap_pyfunction!(product_profile, m)?)?;
    m.add_function(wrap_pyfunction!(breakpoints, m)?)?;
    m.add_function(wrap_pyfunction!(hanson_wright_profile, m)?)?;
    m.add_function(wrap_pyfunction!(high_order_profile, m)?)?;
    m.add_function(wrap_pyfunction!(norm_degree, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(observe_coordinate, m)?)?;
    m.add_function(wrap_pyfunction!(dkw_band, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tail, m)?)?;
    m.add_function(wrap_pyfunction!(observable_diameter, m)?)?;
    m.add_function(wrap_pyfunction!(isotropic_delta, m)?)?;
    m.add_function(wrap_pyfunction!(solve_isotropic_delta, m)?)?;
    m.add_function(wrap_pyfunction!(leave_one_out_errors, m)?)?;
    m.add_function(wrap_pyfunction!(robust_beta_summary, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_norm_mean, m)?)?;
    Ok(())
}
