//! Tail experiment: fit the exponent of unit linear observations and check
//! the empirical envelope against the declared profile.

use conc_lab::estimation::{
    check_profile, empirical_tail, fit_tail_exponent, random_unit_observation, CenterKind,
    FitOptions, FitWindow, GridSpec,
};
use conc_lab::generators::observe;

use super::{build_model, consts_from, median};
use crate::config::{ExperimentConfig, ObservationKind, OutputFormat, TailConfig};
use crate::errors::CliResult;
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, tc: &TailConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "tail exponent of unit linear observations vs the declared envelope",
    );
    let consts = consts_from(tc.envelope_constants)?;
    let window = FitWindow {
        alpha_lo: tc.fit_window[0],
        alpha_hi: tc.fit_window[1],
    };
    for (dim_idx, &dim) in tc.dims.iter().enumerate() {
        let model = build_model(&tc.model, dim, tc.lq_exponent)?;
        let mut fits = Vec::with_capacity(tc.fits_per_dim);
        let mut first_values: Option<Vec<f64>> = None;
        for fit_idx in 0..tc.fits_per_dim {
            let stream = (dim_idx * tc.fits_per_dim + fit_idx) as u64;
            let u = match tc.observation {
                ObservationKind::RandomUnit => {
                    random_unit_observation(dim, cfg.seed, stream)
                }
                ObservationKind::Coordinate => {
                    let mut u = vec![0.0; dim];
                    u[0] = 1.0;
                    u
                }
            };
            let values = observe(&model, tc.n_samples, cfg.seed, stream, |z| {
                z.iter().zip(&u).map(|(a, b)| a * b).sum()
            })?;
            let tail = empirical_tail(
                &values,
                CenterKind::Median,
                GridSpec::default(),
                tc.confidence_delta,
            )?;
            let fit = fit_tail_exponent(&tail, window, FitOptions::prefactor_corrected())?;
            fits.push(fit.q_hat);
            if fit_idx == 0 {
                if matches!(cfg.format, OutputFormat::Csv) {
                    let dir = std::path::Path::new(&cfg.out_dir);
                    std::fs::create_dir_all(dir)?;
                    let file = format!("{}.tail_dim{dim}.csv", cfg.name);
                    tail.export_csv(&dir.join(&file))?;
                    report.artifacts.push(file);
                }
                first_values = Some(values);
            }
        }
        let med = median(fits.clone());
        report.push(CheckResult::new(
            format!("exponent_dim_{dim}"),
            (tc.q_range[0]..=tc.q_range[1]).contains(&med),
            serde_json::json!({"median": med, "fits": json_f64s(&fits)}),
            format!(
                "median fitted exponent {} target [{}, {}]",
                fmt(med),
                fmt(tc.q_range[0]),
                fmt(tc.q_range[1])
            ),
        ));
        if tc.check_envelope {
            let declared = model.declared_profile(consts);
            let profile_report = check_profile(
                first_values.as_ref().expect("at least one fit"),
                &declared,
                1.0,
                CenterKind::Median,
                tc.confidence_delta,
                FitOptions::prefactor_corrected(),
            )?;
            report.push(CheckResult::new(
                format!("envelope_dim_{dim}"),
                profile_report.envelope_pass,
                serde_json::json!({
                    "fraction_below": profile_report.envelope_fraction,
                    "dkw_band": profile_report.dkw_band,
                }),
                format!(
                    "DKW-adjusted tail below envelope at {}% of grid points",
                    fmt(profile_report.envelope_fraction * 100.0)
                ),
            ));
        }
    }
    Ok(report)
}
