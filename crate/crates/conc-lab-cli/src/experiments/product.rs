//! Product experiments: far-tail exponents of entry-wise scalar products
//! (q/m regimes) and the 1/sqrt(n) observable diameter of the sample
//! covariance matrix.

use conc_lab::estimation::{
    empirical_tail, fit_tail_exponent, CenterKind, FitOptions, FitWindow, GridSpec,
};
use conc_lab::generators::{observe_joint, stream_rng, Kind, VectorModel};
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{median, minmax_ratio, std_dev};
use crate::config::{ExperimentConfig, ProductConfig, ProductMode};
use crate::errors::{CliError, CliResult};
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, pc: &ProductConfig) -> CliResult<RunReport> {
    match pc.mode {
        ProductMode::Scalars => scalars(cfg, pc),
        ProductMode::Covariance => covariance(cfg, pc),
    }
}

fn scalars(cfg: &ExperimentConfig, pc: &ProductConfig) -> CliResult<RunReport> {
    if pc.factor_checks.is_empty() || pc.n_samples == 0 {
        return Err(CliError::Config(
            "scalar products need factor_checks and n_samples".into(),
        ));
    }
    let mut report = RunReport::new(
        cfg,
        "far-tail exponent of entry-wise products of independent scalar gaussians",
    );
    let window = FitWindow {
        alpha_lo: pc.fit_window[0],
        alpha_hi: pc.fit_window[1],
    };
    let scalar = VectorModel::new(Kind::Gaussian, 1)?;
    for check in &pc.factor_checks {
        let models = vec![scalar.clone(); check.m];
        let mut fits = Vec::new();
        for rep in 0..3u64 {
            let stream = check.m as u64 * 16 + rep;
            let values = observe_joint(&models, pc.n_samples, cfg.seed, stream, |parts| {
                parts.iter().map(|p| p[0]).product()
            })?;
            let tail = empirical_tail(&values, CenterKind::Median, GridSpec::default(), 0.05)?;
            let fit = fit_tail_exponent(&tail, window, FitOptions::prefactor_corrected())?;
            fits.push(fit.q_hat);
        }
        let med = median(fits.clone());
        report.push(CheckResult::new(
            format!("exponent_m_{}", check.m),
            (check.q_range[0]..=check.q_range[1]).contains(&med),
            serde_json::json!({"median": med, "fits": json_f64s(&fits)}),
            format!(
                "m = {}: median fitted exponent {} target [{}, {}] (2/m = {})",
                check.m,
                fmt(med),
                fmt(check.q_range[0]),
                fmt(check.q_range[1]),
                fmt(2.0 / check.m as f64)
            ),
        ));
    }
    Ok(report)
}

fn covariance(cfg: &ExperimentConfig, pc: &ProductConfig) -> CliResult<RunReport> {
    if pc.dims.is_empty() || pc.trials == 0 || pc.stability_factor <= 0.0 {
        return Err(CliError::Config(
            "covariance mode needs dims, trials and stability_factor".into(),
        ));
    }
    let mut report = RunReport::new(
        cfg,
        "observable diameter of the sample covariance scales as 1/sqrt(n) at p = n",
    );
    let mut constants = Vec::with_capacity(pc.dims.len());
    for (k, &n) in pc.dims.iter().enumerate() {
        let p = n;
        // unit-Frobenius observation matrix, fixed per scale
        let mut rng = stream_rng(cfg.seed, 0xC0, k as u64, 0);
        let mut a: Array2<f64> =
            Array2::from_shape_fn((p, p), |_| StandardNormal.sample(&mut rng));
        let fro = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        a.mapv_inplace(|v| v / fro);
        let values: Vec<f64> = (0..pc.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.seed, 0xC1 + k as u64, t as u64, 0);
                let x = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut rng));
                // tr(A X X^T) / n without forming X X^T: sum over entries of
                // (A X) * X
                let ax = a.dot(&x);
                ax.iter().zip(x.iter()).map(|(u, v)| u * v).sum::<f64>() / n as f64
            })
            .collect();
        let c = std_dev(&values) * (n as f64).sqrt();
        constants.push(c);
        report.push(CheckResult::new(
            format!("std_sqrtn_n_{n}"),
            true,
            serde_json::json!({"constant": c}),
            format!("std of tr-observation times sqrt(n) = {}", fmt(c)),
        ));
    }
    let ratio = minmax_ratio(&constants);
    report.push(CheckResult::new(
        "stability",
        ratio <= pc.stability_factor,
        serde_json::json!({"ratio": ratio, "constants": json_f64s(&constants)}),
        format!(
            "max/min ratio {} allowed {}",
            fmt(ratio),
            fmt(pc.stability_factor)
        ),
    ));
    Ok(report)
}
