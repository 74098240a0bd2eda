//! Observable-diameter experiment, including the replicated scalar
//! counterexample whose normalized-sum observation spreads at sqrt(p).

use conc_lab::estimation::observable_diameter;
use conc_lab::generators::{Kind, LipschitzTransform, VectorModel};

use super::build_model;
use crate::config::{DiameterConfig, DiameterExpectation, ExperimentConfig};
use crate::errors::CliResult;
use crate::report::{fmt, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, dc: &DiameterConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "largest standard deviation over unit observations (observable diameter)",
    );
    for &dim in &dc.dims {
        let model = if dc.replicate_scalar {
            VectorModel::new(Kind::Gaussian, 1)?
                .with_transform(LipschitzTransform::Replicate { copies: dim })?
        } else {
            build_model(&dc.model, dim, None)?
        };
        let out = observable_diameter(&model, dc.n_samples, dc.observations, cfg.seed)?;
        let (pass, detail) = match dc.expect {
            DiameterExpectation::OrderOne { lo, hi } => (
                (lo..=hi).contains(&out.diameter),
                format!(
                    "diameter {} target [{}, {}]",
                    fmt(out.diameter),
                    fmt(lo),
                    fmt(hi)
                ),
            ),
            DiameterExpectation::SqrtDim { factor } => {
                let floor = factor * (dim as f64).sqrt();
                (
                    out.normalized_sum_std >= floor,
                    format!(
                        "normalized-sum spread {} vs floor {} = {} * sqrt({dim})",
                        fmt(out.normalized_sum_std),
                        fmt(floor),
                        fmt(factor)
                    ),
                )
            }
        };
        report.push(CheckResult::new(
            format!("diameter_dim_{dim}"),
            pass,
            serde_json::json!({
                "diameter": out.diameter,
                "norm_observation_std": out.norm_observation_std,
                "normalized_sum_std": out.normalized_sum_std,
            }),
            detail,
        ));
    }
    Ok(report)
}
