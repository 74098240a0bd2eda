//! Robust-regression fixed point `beta = (1/n) sum_i f(x_i^T beta) x_i` and
//! its leave-one-out companions.
//!
//! The contraction margin `(1/n) ||f'||_inf ||X||^2 <= 1 - eps` makes the
//! iteration geometrically convergent and defines, for every column i, the
//! independent surrogate `beta^(i)` solving the same equation with column i
//! removed. The diagnostic of interest is how far the derivative diagonal
//! `D = diag(f'(x_j^T beta))` moves when beta is replaced by beta^(i).

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;

/// Scalar nonlinearity with certified sup bounds on f, f' and f''.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "f")]
pub enum ScalarFn {
    /// f(t) = amplitude * tanh(t + offset)
    ScaledTanh { amplitude: f64, offset: f64 },
    /// f(t) = value
    Constant { value: f64 },
}

impl ScalarFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarFn::ScaledTanh { amplitude, offset } => amplitude * (t + offset).tanh(),
            ScalarFn::Constant { value } => *value,
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            ScalarFn::ScaledTanh { amplitude, offset } => {
                let c = (t + offset).cosh();
                amplitude / (c * c)
            }
            ScalarFn::Constant { .. } => 0.0,
        }
    }

    /// (sup |f|, sup |f'|, sup |f''|)
    pub fn bounds(&self) -> (f64, f64, f64) {
        match self {
            ScalarFn::ScaledTanh { amplitude, .. } => {
                let a = amplitude.abs();
                // max of |(sech^2)'| = max |2 sech^2 tanh| = 4/(3 sqrt 3)
                (a, a, a * 4.0 / (3.0 * 3.0f64.sqrt()))
            }
            ScalarFn::Constant { value } => (value.abs(), 0.0, 0.0),
        }
    }
}

/// Data matrix plus nonlinearity, with the contraction margin verified at
/// construction.
#[derive(Debug, Clone)]
pub struct RobustRegressionSpec {
    pub x: Array2<f64>,
    pub f: ScalarFn,
    pub epsilon: f64,
    pub x_norm: f64,
}

impl RobustRegressionSpec {
    pub fn new(x: Array2<f64>, f: ScalarFn, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Range(format!(
                "epsilon must be in (0,1), got {epsilon}"
            )));
        }
        let n = x.ncols();
        if n == 0 || x.nrows() == 0 {
            return Err(Error::Shape("empty data matrix".into()));
        }
        let x_norm = spectral_norm(&x.view());
        let (_, f_deriv, _) = f.bounds();
        let margin = f_deriv * x_norm * x_norm / n as f64;
        if margin > 1.0 - epsilon {
            return Err(Error::Admissibility(format!(
                "contraction margin ||f'|| ||X||^2 / n = {margin:.6} exceeds 1 - eps = {:.6}",
                1.0 - epsilon
            )));
        }
        Ok(RobustRegressionSpec {
            x,
            f,
            epsilon,
            x_norm,
        })
    }

    pub fn p(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }
}

/// Per-column coupling diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooCoupling {
    pub index: usize,
    /// ||D_{-i} - D^(i)_{-i}||_F
    pub coupling_norm: f64,
    /// ||beta - beta^(i)||
    pub beta_gap: f64,
}

#[derive(Debug, Clone)]
pub struct RobustBetaOutput {
    pub beta: Array1<f64>,
    /// D = diag(f'(x_i^T beta))
    pub d: Array1<f64>,
    pub iterations: usize,
    /// ratios ||b_{k+1} - b_k|| / ||b_k - b_{k-1}|| observed along the run
    pub contraction_ratios: Vec<f64>,
    pub couplings: Vec<LooCoupling>,
    pub max_coupling_norm: f64,
}

fn fixed_point(
    x: &Array2<f64>,
    f: &ScalarFn,
    skip: Option<usize>,
    tol: f64,
    max_iter: usize,
) -> Result<(Array1<f64>, usize, Vec<f64>)> {
    let (p, n) = (x.nrows(), x.ncols());
    let mut beta = Array1::<f64>::zeros(p);
    let mut prev_step = f64::NAN;
    let mut ratios = Vec::new();
    for iter in 1..=max_iter {
        let mut scores = x.t().dot(&beta);
        for (j, s) in scores.iter_mut().enumerate() {
            *s = if Some(j) == skip { 0.0 } else { f.eval(*s) };
        }
        let next = x.dot(&scores).mapv(|v| v / n as f64);
        let step = {
            let d = &next - &beta;
            d.dot(&d).sqrt()
        };
        if prev_step.is_finite() && prev_step > 1e-300 {
            ratios.push(step / prev_step);
        }
        prev_step = step;
        beta = next;
        if step <= tol {
            return Ok((beta, iter, ratios));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: prev_step,
    })
}

/// Solves the fixed point, forms D, and for every column i re-solves without
/// that column to obtain beta^(i), D^(i) and the coupling norm
/// ||D_{-i} - D^(i)_{-i}||_F.
pub fn robust_beta(
    spec: &RobustRegressionSpec,
    tol: f64,
    max_iter: usize,
) -> Result<RobustBetaOutput> {
    let n = spec.n();
    let (beta, iterations, contraction_ratios) =
        fixed_point(&spec.x, &spec.f, None, tol, max_iter)?;
    let scores = spec.x.t().dot(&beta);
    let d: Array1<f64> = scores.mapv(|s| spec.f.deriv(s));

    let couplings: Vec<LooCoupling> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (beta_i, _, _) = fixed_point(&spec.x, &spec.f, Some(i), tol, max_iter)?;
            let scores_i = spec.x.t().dot(&beta_i);
            let mut acc = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dj = spec.f.deriv(scores_i[j]);
                acc += (d[j] - dj) * (d[j] - dj);
            }
            let gap = {
                let diff = &beta - &beta_i;
                diff.dot(&diff).sqrt()
            };
            Ok(LooCoupling {
                index: i,
                coupling_norm: acc.sqrt(),
                beta_gap: gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_coupling_norm = couplings
        .iter()
        .map(|c| c.coupling_norm)
        .fold(0.0f64, f64::max);
    Ok(RobustBetaOutput {
        beta,
        d,
        iterations,
        contraction_ratios,
        couplings,
        max_coupling_norm,
    })
}
