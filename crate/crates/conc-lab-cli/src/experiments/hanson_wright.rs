//! Bilinear-form experiment: Var(x^T A y) = ||A||_F^2 across random A, the
//! far-tail exponent on the scalar product, and the two-regime envelope pass.

use conc_lab::estimation::{
    check_profile, empirical_tail, fit_tail_exponent, CenterKind, FitOptions, FitWindow,
    GridSpec,
};
use conc_lab::generators::{observe_joint, stream_rng, Kind, VectorModel};
use conc_lab::linalg::spectral_norm;
use conc_lab::profile::hanson_wright_profile;
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{consts_from, median};
use crate::config::{ExperimentConfig, HansonWrightConfig};
use crate::errors::CliResult;
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, hw: &HansonWrightConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "bilinear concentration: variance identity, far-tail exponent, envelope",
    );
    let p = hw.dim;
    let n = hw.n_samples;

    // fixed family of observation matrices
    let mats: Vec<Array2<f64>> = (0..hw.n_matrices)
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, 0xA0, k as u64, 0);
            Array2::from_shape_fn((p, p), |_| StandardNormal.sample(&mut rng))
        })
        .collect();

    // chunked accumulation of (sum, sum of squares) per matrix; the first
    // matrix additionally keeps its full value stream for the envelope check
    let chunk = 256usize;
    let n_chunks = n.div_ceil(chunk);
    let partials: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = ((ci + 1) * chunk).min(n);
            let rows = hi - lo;
            let mut xc = Array2::<f64>::zeros((rows, p));
            let mut yc = Array2::<f64>::zeros((rows, p));
            for (r, t) in (lo..hi).enumerate() {
                let mut rng = stream_rng(cfg.seed, 0xA1, t as u64, 0);
                for j in 0..p {
                    xc[(r, j)] = StandardNormal.sample(&mut rng);
                }
                for j in 0..p {
                    yc[(r, j)] = StandardNormal.sample(&mut rng);
                }
            }
            let mut sums = vec![0.0; mats.len()];
            let mut sqs = vec![0.0; mats.len()];
            let mut first_vals = Vec::new();
            for (k, a) in mats.iter().enumerate() {
                let g = xc.dot(a);
                for r in 0..rows {
                    let v = g.row(r).dot(&yc.row(r));
                    sums[k] += v;
                    sqs[k] += v * v;
                    if k == 0 {
                        first_vals.push(v);
                    }
                }
            }
            (sums, sqs, first_vals)
        })
        .collect();
    let mut sums = vec![0.0; mats.len()];
    let mut sqs = vec![0.0; mats.len()];
    let mut first_values = Vec::with_capacity(n);
    for (s, q, f) in partials {
        for k in 0..mats.len() {
            sums[k] += s[k];
            sqs[k] += q[k];
        }
        first_values.extend(f);
    }

    let mut ratios = Vec::with_capacity(mats.len());
    for (k, a) in mats.iter().enumerate() {
        let fro_sq: f64 = a.iter().map(|v| v * v).sum();
        let mean = sums[k] / n as f64;
        let var = (sqs[k] - n as f64 * mean * mean) / (n as f64 - 1.0);
        ratios.push(var / fro_sq);
    }
    let all_in = ratios
        .iter()
        .all(|r| (hw.variance_ratio_range[0]..=hw.variance_ratio_range[1]).contains(r));
    report.push(CheckResult::new(
        "variance_ratio",
        all_in,
        serde_json::json!({"ratios": json_f64s(&ratios)}),
        format!(
            "Var(x^T A y)/||A||_F^2 over {} matrices within [{}, {}]",
            mats.len(),
            fmt(hw.variance_ratio_range[0]),
            fmt(hw.variance_ratio_range[1])
        ),
    ));

    // far tail: the exponential regime is only observable where the two
    // regime scales coincide, i.e. on the scalar product x*y
    let scalar = VectorModel::new(Kind::Gaussian, 1)?;
    let window = FitWindow {
        alpha_lo: hw.fit_window[0],
        alpha_hi: hw.fit_window[1],
    };
    let mut fits = Vec::new();
    for rep in 0..3u64 {
        let values = observe_joint(
            &[scalar.clone(), scalar.clone()],
            n,
            cfg.seed,
            0xB0 + rep,
            |parts| parts[0][0] * parts[1][0],
        )?;
        let tail = empirical_tail(&values, CenterKind::Median, GridSpec::default(), 0.05)?;
        fits.push(fit_tail_exponent(&tail, window, FitOptions::prefactor_corrected())?.q_hat);
    }
    let med = median(fits.clone());
    report.push(CheckResult::new(
        "far_tail_exponent",
        (hw.far_tail_q_range[0]..=hw.far_tail_q_range[1]).contains(&med),
        serde_json::json!({"median": med, "fits": json_f64s(&fits)}),
        format!(
            "scalar-product exponent {} target [{}, {}]",
            fmt(med),
            fmt(hw.far_tail_q_range[0]),
            fmt(hw.far_tail_q_range[1])
        ),
    ));

    // envelope against the two-regime profile of the first matrix
    let a0 = &mats[0];
    let fro: f64 = a0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let spec_norm = spectral_norm(&a0.view());
    let profile = hanson_wright_profile(fro, spec_norm, 1.0, consts_from(hw.envelope_constants)?)?;
    let check = check_profile(
        &first_values,
        &profile,
        1.0,
        CenterKind::Median,
        0.05,
        FitOptions::default(),
    )?;
    report.push(CheckResult::new(
        "envelope",
        check.envelope_pass && check.moments_pass,
        serde_json::json!({
            "fraction_below": check.envelope_fraction,
            "moments_pass": check.moments_pass,
        }),
        format!(
            "two-regime envelope with (C, c) = ({}, {}): coverage {}%",
            fmt(hw.envelope_constants[0]),
            fmt(hw.envelope_constants[1]),
            fmt(check.envelope_fraction * 100.0)
        ),
    ));
    Ok(report)
}
