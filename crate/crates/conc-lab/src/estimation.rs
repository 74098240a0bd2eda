//! Empirical concentration-function estimation and verification against
//! declared envelopes.
//!
//! The tail estimate is the plain counting estimator
//! `alpha_hat(t) = #{ |v_i - center| >= t } / N` on a log-spaced grid, with
//! the uniform DKW half-width `sqrt(ln(2/delta) / (2N))` as its confidence
//! band. Exponent fitting inverts the envelope `alpha = C exp(-(t/s)^q)` by
//! regressing `log(log(C/alpha))` on `log t`.
//!
//! Distributions met in practice carry polynomial prefactors in front of the
//! stretched exponential (a standard normal tail is `~ exp(-t^2/2)/t`), which
//! biases that slope low at any finite depth. The optional prefactor
//! correction fits the richer model
//! `-log alpha = (t/s)^q + theta * log t + gamma` by profiling (theta, gamma)
//! over a grid, with the inner (q, s) pair obtained by the same linear
//! regression on `log(-log alpha - theta log t - gamma)`. On an exact
//! envelope the correction selects theta = gamma = 0 and reproduces the
//! plain fit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{observe_vec, stream_rng, SampleEnsemble, VectorModel};
use crate::profile::ConcentrationProfile;
use rand_distr::{Distribution, StandardNormal};

/// Which center the deviations are measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterKind {
    /// sample median (default: the most robust of the three)
    Median,
    Mean,
    /// deviations |v_{2i} - v_{2i+1}| between paired independent draws;
    /// halves the effective sample count
    IndependentCopy,
}

/// Uniform DKW confidence half-width at level delta.
pub fn dkw_band(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Grid specification: `points` log-spaced abscissas between the `lo_quantile`
/// and the (1 - 1/(2N)) quantile of the deviations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub lo_quantile: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 256,
            lo_quantile: 0.5,
        }
    }
}

/// Empirical concentration function on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalTail {
    pub t_grid: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub center: f64,
    pub center_kind: CenterKind,
    /// effective sample count (halved for the independent-copy center)
    pub n_samples: usize,
    pub dkw_band: f64,
    pub confidence_delta: f64,
}

impl EmpiricalTail {
    /// alpha_hat at arbitrary t by exact recount against the stored grid
    /// convention is not possible; this interpolates conservatively by using
    /// the value at the nearest grid point to the left.
    pub fn alpha_at(&self, t: f64) -> f64 {
        match self.t_grid.iter().rposition(|g| *g <= t) {
            Some(i) => self.alpha_hat[i],
            None => 1.0,
        }
    }

    /// CSV columns (t, alpha_hat, band_lo, band_hi).
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "t,alpha_hat,band_lo,band_hi")?;
        for (t, a) in self.t_grid.iter().zip(&self.alpha_hat) {
            let lo = (a - self.dkw_band).max(0.0);
            let hi = (a + self.dkw_band).min(1.0);
            writeln!(w, "{t},{a},{lo},{hi}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Estimates `P(|v - center| >= t)` on a log-spaced grid.
pub fn empirical_tail(
    values: &[f64],
    center_kind: CenterKind,
    grid: GridSpec,
    delta: f64,
) -> Result<EmpiricalTail> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!("delta must be in (0,1), got {delta}")));
    }
    let (center, mut devs) = match center_kind {
        CenterKind::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let c = median_sorted(&sorted);
            (c, values.iter().map(|v| (v - c).abs()).collect::<Vec<_>>())
        }
        CenterKind::Mean => {
            let c = values.iter().sum::<f64>() / values.len() as f64;
            (c, values.iter().map(|v| (v - c).abs()).collect::<Vec<_>>())
        }
        CenterKind::IndependentCopy => {
            let devs: Vec<f64> = values
                .chunks_exact(2)
                .map(|pair| (pair[0] - pair[1]).abs())
                .collect();
            if devs.is_empty() {
                return Err(Error::InsufficientData(
                    "independent-copy center needs at least one pair".into(),
                ));
            }
            (0.0, devs)
        }
    };
    let n = devs.len();
    devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hi = quantile_sorted(&devs, 1.0 - 1.0 / (2.0 * n as f64));
    let band = dkw_band(n, delta);
    if hi <= 0.0 {
        // constant data: the tail is identically zero for every t > 0
        let t_grid: Vec<f64> = (1..=grid.points).map(|i| i as f64).collect();
        let alpha_hat = vec![0.0; grid.points];
        return Ok(EmpiricalTail {
            t_grid,
            alpha_hat,
            center,
            center_kind,
            n_samples: n,
            dkw_band: band,
            confidence_delta: delta,
        });
    }
    let lo = quantile_sorted(&devs, grid.lo_quantile)
        .max(hi * 1e-12)
        .max(f64::MIN_POSITIVE);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let mut t_grid = Vec::with_capacity(grid.points);
    let mut alpha_hat = Vec::with_capacity(grid.points);
    for k in 0..grid.points {
        let t = if grid.points == 1 {
            lo
        } else {
            (ln_lo + (ln_hi - ln_lo) * k as f64 / (grid.points - 1) as f64).exp()
        };
        // count of devs >= t on the sorted array
        let below = devs.partition_point(|d| *d < t);
        t_grid.push(t);
        alpha_hat.push((n - below) as f64 / n as f64);
    }
    Ok(EmpiricalTail {
        t_grid,
        alpha_hat,
        center,
        center_kind,
        n_samples: n,
        dkw_band: band,
        confidence_delta: delta,
    })
}

/// Fit window in tail-probability units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitWindow {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        // deep enough to see the tail, shallow enough that the counting
        // estimator is still reliable at N = 1e5
        FitWindow {
            alpha_lo: 1e-3,
            alpha_hi: 1e-1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    /// outer constant assumed when inverting the envelope
    pub big_c: f64,
    /// profile a polynomial prefactor out of the tail before the regression
    pub prefactor_correction: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            big_c: 1.0,
            prefactor_correction: false,
        }
    }
}

impl FitOptions {
    pub fn prefactor_corrected() -> Self {
        FitOptions {
            big_c: 1.0,
            prefactor_correction: true,
        }
    }
}

/// Result of the envelope inversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub q_hat: f64,
    pub scale_hat: f64,
    pub fit_window: FitWindow,
    pub r2: f64,
    /// slope of the uncorrected regression
    pub q_hat_plain: f64,
    /// selected prefactor exponent (0 when the correction is off or inactive)
    pub theta_hat: f64,
    pub points_used: usize,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = syy - slope * sxy;
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, r2, sse.max(0.0))
}

/// Estimates the exponent and scale of `alpha(t) ~ C exp(-(t/s)^q)` from the
/// grid points whose tail estimate falls inside the window.
pub fn fit_tail_exponent(
    tail: &EmpiricalTail,
    window: FitWindow,
    opts: FitOptions,
) -> Result<TailFit> {
    if !(opts.big_c >= 1.0) {
        return Err(Error::Range(format!(
            "assumed C must be >= 1, got {}",
            opts.big_c
        )));
    }
    let mut xs = Vec::new();
    let mut neg_log = Vec::new();
    let mut last_alpha = f64::NAN;
    for (t, a) in tail.t_grid.iter().zip(&tail.alpha_hat) {
        if *a > window.alpha_lo && *a < window.alpha_hi && *t > 0.0 && *a != last_alpha {
            // skip duplicated alpha levels: they carry no new information and
            // flatten the regression
            xs.push(t.ln());
            neg_log.push((opts.big_c / a).ln());
            last_alpha = *a;
        }
    }
    if xs.len() < 5 {
        return Err(Error::Window(format!(
            "only {} grid points inside alpha in ({}, {})",
            xs.len(),
            window.alpha_lo,
            window.alpha_hi
        )));
    }
    let ys_plain: Vec<f64> = neg_log.iter().map(|v| v.ln()).collect();
    let (plain_slope, plain_intercept, plain_r2, plain_sse) = linear_fit(&xs, &ys_plain);

    let (q_hat, intercept, r2, theta) = if opts.prefactor_correction {
        // (slope, intercept, r2, theta, sse); the plain fit is the
        // theta = gamma = 0 grid cell, so an exact envelope keeps it
        let mut best = (plain_slope, plain_intercept, plain_r2, 0.0, plain_sse);
        let mut ys = Vec::with_capacity(xs.len());
        for j in 0..=60 {
            let theta = 0.05 * j as f64;
            'gamma: for i in 0..=160 {
                let gamma = -4.0 + 0.05 * i as f64;
                if j == 0 && gamma == 0.0 {
                    continue; // already covered by the plain fit
                }
                ys.clear();
                for (v, x) in neg_log.iter().zip(&xs) {
                    let w = v - theta * x - gamma;
                    if w <= 0.0 {
                        continue 'gamma;
                    }
                    ys.push(w.ln());
                }
                let (s, inter, r, sse) = linear_fit(&xs, &ys);
                if sse < best.4 && s > 0.0 {
                    best = (s, inter, r, theta, sse);
                }
            }
        }
        (best.0, best.1, best.2, best.3)
    } else {
        (plain_slope, plain_intercept, plain_r2, 0.0)
    };

    if !(q_hat > 0.0) || !q_hat.is_finite() {
        return Err(Error::Window(format!(
            "regression produced a non-positive exponent {q_hat}"
        )));
    }
    Ok(TailFit {
        q_hat,
        scale_hat: (-intercept / q_hat).exp(),
        fit_window: window,
        r2,
        q_hat_plain: plain_slope,
        theta_hat: theta,
        points_used: xs.len(),
    })
}

/// Observable diameter estimate: the largest empirical standard deviation
/// over K random unit linear observations plus the Euclidean norm
/// observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiameterReport {
    pub per_observation_std: Vec<f64>,
    pub norm_observation_std: f64,
    /// std of the fixed direction (1,...,1)/sqrt(p); the observation that
    /// separates concentrated vectors from the replicated counterexample
    pub normalized_sum_std: f64,
    pub diameter: f64,
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Random unit direction in dimension `dim`, independent of the sampling
/// streams (dedicated observation stream).
pub fn random_unit_observation(dim: usize, master_seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream_rng(master_seed, u64::MAX - 1, index, 0);
    loop {
        let mut u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in u.iter_mut() {
                *x /= norm;
            }
            return u;
        }
    }
}

pub fn observable_diameter(
    model: &VectorModel,
    n_trials: usize,
    k_observations: usize,
    master_seed: u64,
) -> Result<DiameterReport> {
    if k_observations == 0 {
        return Err(Error::Range("need at least one observation".into()));
    }
    let dim = model.output_dim();
    let us: Vec<Vec<f64>> = (0..k_observations)
        .map(|k| random_unit_observation(dim, master_seed, k as u64))
        .collect();
    let sum_scale = 1.0 / (dim as f64).sqrt();
    // one pass per trial evaluating every observation on the same draw
    let rows: Vec<Vec<f64>> = {
        let us = &us;
        observe_vec(model, n_trials, master_seed, 0, move |z| {
            let mut out = Vec::with_capacity(us.len() + 2);
            for u in us {
                out.push(z.iter().zip(u).map(|(a, b)| a * b).sum());
            }
            out.push(z.iter().map(|x| x * x).sum::<f64>().sqrt());
            out.push(sum_scale * z.iter().sum::<f64>());
            out
        })?
    };
    let column_std = |j: usize| {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        std_dev(&col)
    };
    let per_obs: Vec<f64> = (0..k_observations).map(column_std).collect();
    let norm_std = column_std(k_observations);
    let sum_std = column_std(k_observations + 1);
    let diameter = per_obs
        .iter()
        .copied()
        .fold(norm_std.max(sum_std), f64::max);
    Ok(DiameterReport {
        per_observation_std: per_obs,
        norm_observation_std: norm_std,
        normalized_sum_std: sum_std,
        diameter,
    })
}

/// Verdict of one envelope/moment comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: f64,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Full report of a scalar ensemble against a declared profile scaled by the
/// observation's Lipschitz constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileCheckReport {
    pub envelope_fraction: f64,
    pub envelope_pass: bool,
    pub moments: Vec<MomentCheck>,
    pub moments_pass: bool,
    pub fit: Option<TailFit>,
    pub leading_exponent: f64,
    pub trailing_exponent: f64,
    pub pass: bool,
    pub center: f64,
    pub dkw_band: f64,
    pub n_samples: usize,
}

impl ProfileCheckReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "- envelope: {} (fraction {:.4})\n",
            if self.envelope_pass { "PASS" } else { "FAIL" },
            self.envelope_fraction
        ));
        for m in &self.moments {
            out.push_str(&format!(
                "- moment r={}: empirical {:.6e} vs bound {:.6e} ({})\n",
                m.order,
                m.empirical,
                m.bound,
                if m.pass { "PASS" } else { "FAIL" }
            ));
        }
        if let Some(fit) = &self.fit {
            out.push_str(&format!(
                "- fitted exponent {:.3} (plain {:.3}, theta {:.2}) vs regimes [{:.3}, {:.3}]\n",
                fit.q_hat, fit.q_hat_plain, fit.theta_hat, self.trailing_exponent,
                self.leading_exponent
            ));
        }
        out.push_str(&format!(
            "- overall: {}\n",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Compares a scalar ensemble against `profile` scaled by `lipschitz`:
/// (a) the DKW-adjusted tail must sit below the envelope at every grid point,
/// (b) centered moments of order 1, 2, 4, 6 must sit below the moment bound,
/// (c) the tail exponent is fitted for comparison with the regime exponents.
pub fn check_profile(
    values: &[f64],
    profile: &ConcentrationProfile,
    lipschitz: f64,
    center_kind: CenterKind,
    delta: f64,
    fit_opts: FitOptions,
) -> Result<ProfileCheckReport> {
    let scaled = profile.scaled(lipschitz)?;
    let tail = empirical_tail(values, center_kind, GridSpec::default(), delta)?;
    let mut below = 0usize;
    for (t, a) in tail.t_grid.iter().zip(&tail.alpha_hat) {
        if (a - tail.dkw_band).max(0.0) <= scaled.tail_bound(*t) {
            below += 1;
        }
    }
    let envelope_fraction = below as f64 / tail.t_grid.len() as f64;
    let envelope_pass = below == tail.t_grid.len();

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut moments = Vec::new();
    for order in [1.0, 2.0, 4.0, 6.0] {
        let empirical = values
            .iter()
            .map(|v| (v - mean).abs().powf(order))
            .sum::<f64>()
            / n;
        let bound = scaled.moment_bound(order)?;
        moments.push(MomentCheck {
            order,
            empirical,
            bound,
            pass: empirical <= bound,
        });
    }
    let moments_pass = moments.iter().all(|m| m.pass);
    let fit = fit_tail_exponent(&tail, FitWindow::default(), fit_opts).ok();
    Ok(ProfileCheckReport {
        envelope_fraction,
        envelope_pass,
        moments,
        moments_pass,
        fit,
        leading_exponent: scaled.leading().exponent,
        trailing_exponent: scaled.trailing().exponent,
        pass: envelope_pass && moments_pass,
        center: tail.center,
        dkw_band: tail.dkw_band,
        n_samples: tail.n_samples,
    })
}

/// One dimension's entry in a norm-growth check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormScalingPoint {
    pub label: String,
    pub eta: f64,
    pub mean_norm: f64,
    pub fitted_constant: f64,
}

/// Comparison of E||Z - mean|| against c * eta^(1/q) * sigma across several
/// dimensions of one normed space family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormScalingReport {
    pub points: Vec<NormScalingPoint>,
    /// max/min ratio of the fitted constants
    pub stability_ratio: f64,
}

pub fn norm_scaling_report(points: Vec<NormScalingPoint>) -> Result<NormScalingReport> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "norm scaling check needs at least 3 dimensions, got {}",
            points.len()
        )));
    }
    let cs: Vec<f64> = points.iter().map(|p| p.fitted_constant).collect();
    let max = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = cs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(NormScalingReport {
        points,
        stability_ratio: max / min,
    })
}

/// Exact E||Z|| for Z ~ N(0, I_p): sqrt(2) * Gamma((p+1)/2) / Gamma(p/2),
/// evaluated through the stable ratio recurrence R(p+1) = (p/2) / R(p),
/// R(1) = 1/sqrt(pi).
pub fn gaussian_norm_mean_exact(p: usize) -> f64 {
    let mut r = 1.0 / std::f64::consts::PI.sqrt();
    for k in 1..p {
        r = (k as f64 / 2.0) / r;
    }
    std::f64::consts::SQRT_2 * r
}

/// Mean of the per-trial norm of the centered draws; the empirical mean is
/// taken over the same ensemble.
pub fn centered_norm_mean<F>(ens: &SampleEnsemble, norm: F) -> f64
where
    F: Fn(&ndarray::ArrayView1<f64>) -> f64,
{
    let mean = ens.data.mean_axis(ndarray::Axis(0)).unwrap();
    let mut acc = 0.0;
    for row in ens.data.rows() {
        let centered = &row - &mean;
        acc += norm(&centered.view());
    }
    acc / ens.n_trials() as f64
}
