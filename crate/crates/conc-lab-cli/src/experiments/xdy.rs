//! X D Y^T experiments: the sqrt((p+n) log n) observable diameter of
//! X D Y^T u across scales, and the O(n) gap between E[X D Y^T] and
//! E[X E[D] Y^T] under a coupled diagonal.

use conc_lab::estimation::random_unit_observation;
use conc_lab::generators::stream_rng;
use conc_lab::rmt::{estimate_xdy_mean, DCoupling};
use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{minmax_ratio, std_dev};
use crate::config::{ExperimentConfig, XdyConfig, XdyMode};
use crate::errors::{CliError, CliResult};
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, xc: &XdyConfig) -> CliResult<RunReport> {
    match xc.mode {
        XdyMode::Action => action(cfg, xc),
        XdyMode::Mean => mean_gap(cfg, xc),
    }
}

fn action(cfg: &ExperimentConfig, xc: &XdyConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "observable diameter of X D Y^T u at the sqrt((p+n) log n) scale",
    );
    let mut constants = Vec::with_capacity(xc.dims.len());
    for (k, &n) in xc.dims.iter().enumerate() {
        let p = n;
        // per-trial observation values w^T X D Y^T u for a family of fixed w
        let ws: Vec<Vec<f64>> = (0..xc.observations)
            .map(|i| random_unit_observation(p, cfg.seed, (k * xc.observations + i) as u64))
            .collect();
        let per_trial: Vec<Vec<f64>> = (0..xc.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.seed, 0xD0 + k as u64, t as u64, 0);
                let x = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut rng));
                let y = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut rng));
                let d: Array1<f64> = Array1::from_shape_fn(n, |_| StandardNormal.sample(&mut rng));
                // u = e_1
                let ytu = y.row(0).to_owned();
                let w_vec: Array1<f64> = &ytu * &d;
                let v = x.dot(&w_vec);
                ws.iter()
                    .map(|w| w.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        let mut diameter = 0.0f64;
        for i in 0..xc.observations {
            let col: Vec<f64> = per_trial.iter().map(|row| row[i]).collect();
            diameter = diameter.max(std_dev(&col));
        }
        let scale = ((p + n) as f64 * (n as f64).ln()).sqrt();
        let c = diameter / scale;
        constants.push(c);
        report.push(CheckResult::new(
            format!("constant_n_{n}"),
            true,
            serde_json::json!({"constant": c, "diameter": diameter}),
            format!("diameter / sqrt((p+n) log n) = {}", fmt(c)),
        ));
    }
    let ratio = minmax_ratio(&constants);
    report.push(CheckResult::new(
        "stability",
        ratio <= xc.stability_factor,
        serde_json::json!({"ratio": ratio, "constants": json_f64s(&constants)}),
        format!(
            "max/min ratio {} allowed {}",
            fmt(ratio),
            fmt(xc.stability_factor)
        ),
    ));
    Ok(report)
}

fn mean_gap(cfg: &ExperimentConfig, xc: &XdyConfig) -> CliResult<RunReport> {
    if xc.p_fixed == 0 {
        return Err(CliError::Config("mean mode needs p_fixed >= 1".into()));
    }
    let mut report = RunReport::new(
        cfg,
        "Frobenius gap between E[X D Y^T] and E[X E[D] Y^T] under a clipped coupling",
    );
    let out = estimate_xdy_mean(
        xc.p_fixed,
        &xc.dims,
        DCoupling::ClipFirstRow,
        1.0,
        xc.trials,
        cfg.seed,
    )?;
    for pt in &out.points {
        report.push(CheckResult::new(
            format!("gap_n_{}", pt.n),
            true,
            serde_json::json!({
                "diff_frobenius": pt.diff_frobenius,
                "se_frobenius": pt.se_frobenius,
                "ratio_to_n": pt.ratio_to_n,
            }),
            format!(
                "||gap||_F = {} (se {}), gap/n = {}",
                fmt(pt.diff_frobenius),
                fmt(pt.se_frobenius),
                fmt(pt.ratio_to_n)
            ),
        ));
    }
    report.push(CheckResult::new(
        "stability",
        out.ratio_stability <= xc.stability_factor,
        serde_json::json!({"ratio": out.ratio_stability}),
        format!(
            "gap/n max/min ratio {} allowed {}",
            fmt(out.ratio_stability),
            fmt(xc.stability_factor)
        ),
    ));
    Ok(report)
}
