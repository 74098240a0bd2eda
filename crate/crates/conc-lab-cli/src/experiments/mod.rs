//! One module per experiment kind; each consumes its config slice and
//! produces a deterministic RunReport.

mod diameter;
mod hanson_wright;
mod moments;
mod norm_degree;
mod product;
mod resolvent;
mod robust;
mod tail;
mod xdy;

use conc_lab::generators::{Kind, VectorModel};
use conc_lab::profile::ProfileConstants;

use crate::config::{Experiment, ExperimentConfig, ModelFamily};
use crate::errors::{CliError, CliResult};
use crate::report::RunReport;

pub fn run(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    match &cfg.experiment {
        Experiment::Tail(c) => tail::run(cfg, c),
        Experiment::Diameter(c) => diameter::run(cfg, c),
        Experiment::Product(c) => product::run(cfg, c),
        Experiment::HansonWright(c) => hanson_wright::run(cfg, c),
        Experiment::Xdy(c) => xdy::run(cfg, c),
        Experiment::NormDegree(c) => norm_degree::run(cfg, c),
        Experiment::Resolvent(c) => resolvent::run(cfg, c),
        Experiment::Robust(c) => robust::run(cfg, c),
        Experiment::Moments(c) => moments::run(cfg, c),
    }
}

pub(crate) fn build_model(
    family: &ModelFamily,
    dim: usize,
    lq_exponent: Option<f64>,
) -> CliResult<VectorModel> {
    let kind = match family {
        ModelFamily::Gaussian => Kind::Gaussian,
        ModelFamily::Sphere => Kind::Sphere,
        ModelFamily::Ball => Kind::Ball,
        ModelFamily::Cube => Kind::Cube,
        ModelFamily::Laplace => Kind::Laplace,
        ModelFamily::LqBall => Kind::LqBall {
            q: lq_exponent
                .ok_or_else(|| CliError::Config("lq_ball requires lq_exponent".into()))?,
        },
    };
    Ok(VectorModel::new(kind, dim)?)
}

pub(crate) fn consts_from(pair: [f64; 2]) -> CliResult<ProfileConstants> {
    Ok(ProfileConstants::new(pair[0], pair[1])?)
}

pub(crate) fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

pub(crate) fn minmax_ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}
