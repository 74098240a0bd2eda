//! Resolvent machinery: Q = (I_p - X D Y^T / n)^{-1}, its deterministic
//! equivalent through the delta fixed point, leave-one-out algebra, and the
//! robust-regression fixed point.

mod robust;

pub use robust::{robust_beta, LooCoupling, RobustBetaOutput, RobustRegressionSpec, ScalarFn};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{sample_couples, stream_rng, MatrixModel};
use crate::linalg::{frobenius, inverse_refined, spectral_norm};
use rand_distr::{Distribution, StandardNormal};

/// The (X, D, Y, kappa, kappa_D, epsilon) bundle defining the resolvent.
/// Construction verifies the spectral condition `kappa^2 * kappa_D <= 1 - eps`
/// together with the norm bounds it relies on; a violating draw is rejected.
#[derive(Debug, Clone)]
pub struct ResolventSpec {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub d: Array1<f64>,
    pub kappa: f64,
    pub kappa_d: f64,
    pub epsilon: f64,
}

impl ResolventSpec {
    pub fn new(
        x: Array2<f64>,
        y: Array2<f64>,
        d: Array1<f64>,
        kappa: f64,
        kappa_d: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let (p, n) = (x.nrows(), x.ncols());
        if y.nrows() != p || y.ncols() != n || d.len() != n {
            return Err(Error::Shape(format!(
                "resolvent dims: X {}x{}, Y {}x{}, D has {}",
                p,
                n,
                y.nrows(),
                y.ncols(),
                d.len()
            )));
        }
        if !(epsilon > 0.0 && kappa > 0.0 && kappa_d > 0.0) {
            return Err(Error::Range(
                "kappa, kappa_D and epsilon must be positive".into(),
            ));
        }
        if kappa * kappa * kappa_d > 1.0 - epsilon {
            return Err(Error::Admissibility(format!(
                "kappa^2 * kappa_D = {:.6} exceeds 1 - eps = {:.6}",
                kappa * kappa * kappa_d,
                1.0 - epsilon
            )));
        }
        let sqrt_n = (n as f64).sqrt();
        let slack = 1.0 + 1e-10;
        let nx = spectral_norm(&x.view());
        if nx > sqrt_n * kappa * slack {
            return Err(Error::Admissibility(format!(
                "||X|| = {nx:.6} exceeds sqrt(n)*kappa = {:.6}",
                sqrt_n * kappa
            )));
        }
        let ny = spectral_norm(&y.view());
        if ny > sqrt_n * kappa * slack {
            return Err(Error::Admissibility(format!(
                "||Y|| = {ny:.6} exceeds sqrt(n)*kappa = {:.6}",
                sqrt_n * kappa
            )));
        }
        let nd = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if nd > kappa_d * slack {
            return Err(Error::Admissibility(format!(
                "||D|| = {nd:.6} exceeds kappa_D = {kappa_d:.6}"
            )));
        }
        Ok(ResolventSpec {
            x,
            y,
            d,
            kappa,
            kappa_d,
            epsilon,
        })
    }

    pub fn p(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// I_p - X D Y^T / n
    fn system_matrix(&self) -> Array2<f64> {
        let n = self.n();
        let dy_t = {
            // rows of Y^T scaled by D
            let mut yt = self.y.t().to_owned();
            for (mut row, di) in yt.rows_mut().into_iter().zip(self.d.iter()) {
                row.mapv_inplace(|v| v * di / n as f64);
            }
            yt
        };
        let mut m = self.x.dot(&dy_t).mapv(|v| -v);
        for i in 0..self.p() {
            m[(i, i)] += 1.0;
        }
        m
    }
}

/// Resolvent with its certificates: inversion residual and the norm bound
/// ||Q|| <= 1/eps implied by the spectral condition.
#[derive(Debug, Clone)]
pub struct ResolventOutput {
    pub q: Array2<f64>,
    pub residual: f64,
    pub q_norm: f64,
    pub norm_bound_ok: bool,
}

pub fn resolvent(spec: &ResolventSpec) -> Result<ResolventOutput> {
    let p = spec.p();
    let m = spec.system_matrix();
    let tol = 1e-9 * (p as f64).sqrt();
    let (q, residual) = inverse_refined(&m.view(), tol)?;
    let contract = 1e-8 * (p as f64).sqrt();
    if residual > contract {
        return Err(Error::NonConvergence {
            iterations: 4,
            residual,
        });
    }
    let q_norm = spectral_norm(&q.view());
    Ok(ResolventOutput {
        q,
        residual,
        norm_bound_ok: q_norm <= 1.0 / spec.epsilon + 1e-9,
        q_norm,
    })
}

/// How E[D_i / (1 - delta_i D_i)] is evaluated: exactly for deterministic or
/// two-point diagonals, by sample average otherwise. The minus sign in the
/// denominator belongs to the resolvent convention Q = (I - X D Y^T/n)^{-1};
/// it pairs with the leave-one-out pivot 1 - D_i Delta_i.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "d_model")]
pub enum DiagonalLaw {
    Deterministic { values: Vec<f64> },
    TwoPoint { lo: f64, hi: f64, prob_hi: f64 },
    /// draws stored row-major, one diagonal per row
    Samples { rows: usize, values: Vec<f64> },
}

impl DiagonalLaw {
    fn resolvent_mean(&self, delta: &ArrayView1<f64>, n: usize) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(n);
        match self {
            DiagonalLaw::Deterministic { values } => {
                if values.len() != n {
                    return Err(Error::Shape("diagonal length mismatch".into()));
                }
                for i in 0..n {
                    let denom = 1.0 - delta[i] * values[i];
                    if denom <= 0.0 {
                        return Err(Error::Domain(format!(
                            "1 - delta_i * D_i = {denom:.3e} <= 0 at i = {i}"
                        )));
                    }
                    out[i] = values[i] / denom;
                }
            }
            DiagonalLaw::TwoPoint { lo, hi, prob_hi } => {
                for i in 0..n {
                    let (d_lo, d_hi) = (1.0 - delta[i] * lo, 1.0 - delta[i] * hi);
                    if d_lo <= 0.0 || d_hi <= 0.0 {
                        return Err(Error::Domain(format!(
                            "1 - delta_i * D_i nonpositive at i = {i}"
                        )));
                    }
                    out[i] = prob_hi * hi / d_hi + (1.0 - prob_hi) * lo / d_lo;
                }
            }
            DiagonalLaw::Samples { rows, values } => {
                if values.len() != rows * n {
                    return Err(Error::Shape("sample block has wrong size".into()));
                }
                for i in 0..n {
                    let mut acc = 0.0;
                    for s in 0..*rows {
                        let v = values[s * n + i];
                        let denom = 1.0 - delta[i] * v;
                        if denom <= 0.0 {
                            return Err(Error::Domain(format!(
                                "1 - delta_i * D_i = {denom:.3e} <= 0 at i = {i}, draw {s}"
                            )));
                        }
                        acc += v / denom;
                    }
                    out[i] = acc / *rows as f64;
                }
            }
        }
        Ok(out)
    }
}

/// Column covariances Sigma_i = E[x_i y_i^T].
#[derive(Debug, Clone)]
pub enum SigmaSpec {
    /// Sigma_i = I_p for every i
    Isotropic { p: usize },
    /// one shared Sigma for every column
    Shared(Array2<f64>),
    /// one matrix per column
    PerColumn(Vec<Array2<f64>>),
}

impl SigmaSpec {
    fn p(&self) -> usize {
        match self {
            SigmaSpec::Isotropic { p } => *p,
            SigmaSpec::Shared(s) => s.nrows(),
            SigmaSpec::PerColumn(v) => v[0].nrows(),
        }
    }

    /// (1/n) sum_i e_i Sigma_i
    fn weighted_sum(&self, e: &ArrayView1<f64>, n: usize) -> Array2<f64> {
        let p = self.p();
        let mean_e = e.sum() / n as f64;
        match self {
            SigmaSpec::Isotropic { .. } => Array2::eye(p) * mean_e,
            SigmaSpec::Shared(s) => s * mean_e,
            SigmaSpec::PerColumn(sigmas) => {
                let mut acc = Array2::<f64>::zeros((p, p));
                for (ei, s) in e.iter().zip(sigmas) {
                    acc.scaled_add(*ei / n as f64, s);
                }
                acc
            }
        }
    }

    /// delta target: ((1/n) tr(Sigma_i Q))_i
    fn delta_target(&self, q: &ArrayView2<f64>, n: usize) -> Array1<f64> {
        match self {
            SigmaSpec::Isotropic { .. } => {
                let t = q.diag().sum() / n as f64;
                Array1::from_elem(n, t)
            }
            SigmaSpec::Shared(s) => {
                let t = s.dot(q).diag().sum() / n as f64;
                Array1::from_elem(n, t)
            }
            SigmaSpec::PerColumn(sigmas) => Array1::from_iter(
                sigmas
                    .iter()
                    .map(|s| s.dot(q).diag().sum() / n as f64),
            ),
        }
    }
}

/// Deterministic-equivalent candidate
/// `(I_p - (1/n) sum_i E[D_i/(1-delta_i D_i)] Sigma_i)^{-1}`.
pub fn q_tilde(
    delta: &ArrayView1<f64>,
    d_law: &DiagonalLaw,
    sigma: &SigmaSpec,
    n: usize,
) -> Result<Array2<f64>> {
    let e = d_law.resolvent_mean(delta, n)?;
    let p = sigma.p();
    let mut m = sigma.weighted_sum(&e.view(), n).mapv(|v| -v);
    for i in 0..p {
        m[(i, i)] += 1.0;
    }
    let (inv, _res) = inverse_refined(&m.view(), 1e-10 * (p as f64).sqrt())?;
    Ok(inv)
}

/// State of the damped Picard iteration for the delta fixed point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointState {
    pub delta: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `delta_i = (1/n) tr(Sigma_i Q~^delta(D))` by damped Picard
/// iteration from delta = 0. The step is halved whenever the residual fails
/// to decrease. A non-converged state is returned (with diagnostics), never
/// silently accepted.
pub fn solve_delta(
    d_law: &DiagonalLaw,
    sigma: &SigmaSpec,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(FixedPointState, Array2<f64>)> {
    let mut delta = Array1::<f64>::zeros(n);
    let mut omega = 1.0f64;
    let mut prev_residual = f64::INFINITY;
    let mut qt = q_tilde(&delta.view(), d_law, sigma, n)?;
    for iter in 1..=max_iter {
        let target = sigma.delta_target(&qt.view(), n);
        let residual = delta
            .iter()
            .zip(target.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if residual <= tol {
            return Ok((
                FixedPointState {
                    delta: delta.to_vec(),
                    residual,
                    iterations: iter,
                    converged: true,
                },
                qt,
            ));
        }
        if residual > prev_residual {
            omega = (omega * 0.5).max(1.0 / 1024.0);
        }
        prev_residual = residual;
        delta = &delta * (1.0 - omega) + &(target * omega);
        qt = q_tilde(&delta.view(), d_law, sigma, n)?;
    }
    let target = sigma.delta_target(&qt.view(), n);
    let residual = delta
        .iter()
        .zip(target.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok((
        FixedPointState {
            delta: delta.to_vec(),
            residual,
            iterations: max_iter,
            converged: false,
        },
        qt,
    ))
}

/// Closed form for the isotropic reduction (Sigma_i = I, deterministic d,
/// ratio c = p/n): substituting e = d/(1 - delta d) and delta = c/(1 - e)
/// gives `d x^2 - x (1 - d + c d) + c = 0`; the physical branch is the
/// smaller root (continuous in d, with x = c at d = 0).
pub fn isotropic_delta_oracle(c_ratio: f64, d: f64) -> f64 {
    if d == 0.0 {
        return c_ratio;
    }
    let b = 1.0 - d + c_ratio * d;
    (b - (b * b - 4.0 * d * c_ratio).sqrt()) / (2.0 * d)
}

/// Monte Carlo estimate of E[Q] with per-entry standard errors. Draws whose
/// norms violate the spectral condition are rejected and counted; a rejection
/// rate above 1% fails the run.
#[derive(Debug, Clone)]
pub struct MonteCarloEq {
    pub mean: Array2<f64>,
    pub standard_error: Array2<f64>,
    pub trials_accepted: usize,
    pub rejected: usize,
}

pub struct ResolventModel {
    pub matrix: MatrixModel,
    pub d_values: Array1<f64>,
    pub kappa: f64,
    pub kappa_d: f64,
    pub epsilon: f64,
}

pub fn monte_carlo_eq(
    model: &ResolventModel,
    trials: usize,
    master_seed: u64,
) -> Result<MonteCarloEq> {
    let p = model.matrix.p;
    let results: Vec<Option<Array2<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (x, y) =
                sample_couples(&model.matrix, 1, master_seed, 2 * t as u64, 2 * t as u64 + 1)
                    .expect("trial draw");
            let xm = x.trial_matrix(0).unwrap().to_owned();
            let ym = y.trial_matrix(0).unwrap().to_owned();
            match ResolventSpec::new(
                xm,
                ym,
                model.d_values.clone(),
                model.kappa,
                model.kappa_d,
                model.epsilon,
            ) {
                Ok(spec) => resolvent(&spec).ok().map(|out| out.q),
                Err(_) => None,
            }
        })
        .collect();
    let accepted: Vec<&Array2<f64>> = results.iter().flatten().collect();
    let rejected = trials - accepted.len();
    let rate = rejected as f64 / trials as f64;
    if rate > 0.01 {
        return Err(Error::RejectionRate {
            rate,
            threshold: 0.01,
            rejected,
            total: trials,
        });
    }
    if accepted.is_empty() {
        return Err(Error::InsufficientData("no accepted draws".into()));
    }
    let na = accepted.len() as f64;
    let mut mean = Array2::<f64>::zeros((p, p));
    for q in &accepted {
        mean += *q;
    }
    mean.mapv_inplace(|v| v / na);
    let mut var = Array2::<f64>::zeros((p, p));
    for q in &accepted {
        let dev = *q - &mean;
        var += &(&dev * &dev);
    }
    let se = var.mapv(|v| (v / (na * (na - 1.0).max(1.0))).sqrt());
    Ok(MonteCarloEq {
        mean,
        standard_error: se,
        trials_accepted: accepted.len(),
        rejected,
    })
}

/// Leave-one-out resolvent with the exact rank-one (Schur) identities.
/// For this sign convention the pivot is `1 - D_i * Delta_i` with
/// `Delta_i = y_i^T Q_{-i} x_i / n`:
///
/// ```text
/// Q     = Q_{-i} + (D_i/n) Q_{-i} x_i y_i^T Q_{-i} / (1 - D_i Delta_i)
/// Q x_i = Q_{-i} x_i / (1 - D_i Delta_i)
/// ```
///
/// Both identities are verified on the draw and their relative errors
/// reported.
#[derive(Debug, Clone)]
pub struct LeaveOneOut {
    pub q: Array2<f64>,
    pub q_minus_i: Array2<f64>,
    pub delta_i: f64,
    pub pivot: f64,
    pub schur_full_rel_err: f64,
    pub schur_action_rel_err: f64,
    pub q_norm: f64,
    pub norm_bound_ok: bool,
}

pub fn leave_one_out(spec: &ResolventSpec, i: usize) -> Result<LeaveOneOut> {
    let n = spec.n();
    if i >= n {
        return Err(Error::Range(format!("column {i} out of range (n = {n})")));
    }
    let full = resolvent(spec)?;
    let mut d_minus = spec.d.clone();
    d_minus[i] = 0.0;
    let loo_spec = ResolventSpec {
        x: spec.x.clone(),
        y: spec.y.clone(),
        d: d_minus,
        kappa: spec.kappa,
        kappa_d: spec.kappa_d,
        epsilon: spec.epsilon,
    };
    let loo = resolvent(&loo_spec)?;
    let x_i = spec.x.column(i);
    let y_i = spec.y.column(i);
    let q_minus_x = loo.q.dot(&x_i);
    let delta_i = y_i.dot(&q_minus_x) / n as f64;
    let pivot = 1.0 - spec.d[i] * delta_i;
    if pivot.abs() < 1e-10 {
        return Err(Error::DegeneratePivot(pivot.abs()));
    }
    // rank-one reconstruction of Q from Q_{-i}
    let y_q_minus = loo.q.t().dot(&y_i);
    let mut recon = loo.q.clone();
    let coef = spec.d[i] / (n as f64 * pivot);
    for r in 0..spec.p() {
        for c in 0..spec.p() {
            recon[(r, c)] += coef * q_minus_x[r] * y_q_minus[c];
        }
    }
    let schur_full_rel_err =
        frobenius(&(&recon - &full.q).view()) / frobenius(&full.q.view());
    let qx = full.q.dot(&x_i);
    let claimed = q_minus_x.mapv(|v| v / pivot);
    let diff = &claimed - &qx;
    let schur_action_rel_err =
        diff.dot(&diff).sqrt() / qx.dot(&qx).sqrt().max(f64::MIN_POSITIVE);
    Ok(LeaveOneOut {
        q: full.q,
        q_minus_i: loo.q,
        delta_i,
        pivot,
        schur_full_rel_err,
        schur_action_rel_err,
        q_norm: full.q_norm,
        norm_bound_ok: full.norm_bound_ok,
    })
}

/// How the diagonal is coupled to the columns in the X D Y^T mean comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DCoupling {
    /// D_i = const
    Deterministic { value: f64 },
    /// D_i independent standard normal
    IndependentGaussian,
    /// D_i = clamp(x_{i,1}, -1, 1): linearly concentrated, coupled to X
    ClipFirstRow,
}

impl DCoupling {
    /// exact E[D_i] (available in closed form for all supported couplings)
    pub fn mean(&self) -> f64 {
        match self {
            DCoupling::Deterministic { value } => *value,
            // both laws below are symmetric around zero
            DCoupling::IndependentGaussian | DCoupling::ClipFirstRow => 0.0,
        }
    }
}

/// One scale point of the X D Y^T mean comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XdyMeanPoint {
    pub n: usize,
    pub diff_frobenius: f64,
    pub se_frobenius: f64,
    pub ratio_to_n: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XdyMeanReport {
    pub points: Vec<XdyMeanPoint>,
    pub ratio_stability: f64,
}

/// Monte Carlo comparison of E[X D Y^T] against E[X E[D] Y^T] across several
/// n, reporting the Frobenius gap and its ratio to n. Columns y_i carry the
/// deterministic mean `y_shift * e_1` so the comparison is nondegenerate.
pub fn estimate_xdy_mean(
    p: usize,
    ns: &[usize],
    coupling: DCoupling,
    y_shift: f64,
    trials: usize,
    master_seed: u64,
) -> Result<XdyMeanReport> {
    if ns.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two values of n".into(),
        ));
    }
    let mut points = Vec::with_capacity(ns.len());
    for (scale_idx, &n) in ns.iter().enumerate() {
        let per_trial: Vec<(Array2<f64>, Array2<f64>)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let stream = (scale_idx * trials + t) as u64;
                let mut x = Array2::<f64>::zeros((p, n));
                let mut y = Array2::<f64>::zeros((p, n));
                let mut d = Array1::<f64>::zeros(n);
                for j in 0..n {
                    let mut rng = stream_rng(master_seed, 91, stream, j as u64);
                    for i in 0..p {
                        x[(i, j)] = StandardNormal.sample(&mut rng);
                    }
                    for i in 0..p {
                        y[(i, j)] = StandardNormal.sample(&mut rng);
                    }
                    y[(0, j)] += y_shift;
                    d[j] = match coupling {
                        DCoupling::Deterministic { value } => value,
                        DCoupling::IndependentGaussian => StandardNormal.sample(&mut rng),
                        DCoupling::ClipFirstRow => x[(0, j)].clamp(-1.0, 1.0),
                    };
                }
                // X D Y^T and X E[D] Y^T on the same draw
                let mut dy_t = y.t().to_owned();
                for (mut row, di) in dy_t.rows_mut().into_iter().zip(d.iter()) {
                    row.mapv_inplace(|v| v * di);
                }
                let xdy = x.dot(&dy_t);
                let xedy = x.dot(&y.t().to_owned()).mapv(|v| v * coupling.mean());
                (xdy, xedy)
            })
            .collect();
        let tn = trials as f64;
        let mut mean_diff = Array2::<f64>::zeros((p, p));
        for (a, b) in &per_trial {
            mean_diff += &(a - b);
        }
        mean_diff.mapv_inplace(|v| v / tn);
        let mut var = Array2::<f64>::zeros((p, p));
        for (a, b) in &per_trial {
            let dev = &(a - b) - &mean_diff;
            var += &(&dev * &dev);
        }
        let se_fro = var
            .mapv(|v| v / (tn * (tn - 1.0).max(1.0)))
            .sum()
            .sqrt();
        let diff_fro = frobenius(&mean_diff.view());
        points.push(XdyMeanPoint {
            n,
            diff_frobenius: diff_fro,
            se_frobenius: se_fro,
            ratio_to_n: diff_fro / n as f64,
        });
    }
    let ratios: Vec<f64> = points.iter().map(|pt| pt.ratio_to_n).collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(XdyMeanReport {
        points,
        ratio_stability: max / min,
    })
}

