//! Robust-regression experiment: geometric contraction of the fixed point
//! and boundedness of the leave-one-out coupling of the derivative diagonal.

use conc_lab::generators::stream_rng;
use conc_lab::linalg::spectral_norm;
use conc_lab::rmt::{robust_beta, RobustRegressionSpec, ScalarFn};
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::minmax_ratio;
use crate::config::{ExperimentConfig, RobustConfig};
use crate::errors::CliResult;
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, rc: &RobustConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "robust-regression fixed point: contraction rate and leave-one-out coupling",
    );
    let f = ScalarFn::ScaledTanh {
        amplitude: rc.amplitude,
        offset: rc.offset,
    };
    let mut couplings = Vec::with_capacity(rc.shapes.len());
    for (k, shape) in rc.shapes.iter().enumerate() {
        let (p, n) = (shape[0], shape[1]);
        let mut rng = stream_rng(cfg.seed, 0xAB, k as u64, 0);
        let x = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut rng));
        let norm = spectral_norm(&x.view());
        let margin = rc.amplitude * norm * norm / n as f64;
        let epsilon = (1.0 - margin) * 0.999;
        let spec = RobustRegressionSpec::new(x, f, epsilon)?;
        let out = robust_beta(&spec, rc.tolerance, rc.max_iterations)?;
        // measured contraction rate over the early steps, before rounding
        // dominates near the fixed point
        let measured = out
            .contraction_ratios
            .iter()
            .take(8)
            .copied()
            .fold(0.0f64, f64::max);
        report.push(CheckResult::new(
            format!("contraction_p{p}_n{n}"),
            measured <= (1.0 - spec.epsilon) + 0.05,
            serde_json::json!({
                "measured_rate": measured,
                "bound": 1.0 - spec.epsilon,
                "iterations": out.iterations,
            }),
            format!(
                "rate {} vs 1 - eps = {} ({} iterations)",
                fmt(measured),
                fmt(1.0 - spec.epsilon),
                out.iterations
            ),
        ));
        couplings.push(out.max_coupling_norm);
        report.push(CheckResult::new(
            format!("coupling_p{p}_n{n}"),
            out.max_coupling_norm.is_finite(),
            serde_json::json!({"max_coupling_norm": out.max_coupling_norm}),
            format!(
                "max_i ||D_-i - D^(i)_-i||_F = {}",
                fmt(out.max_coupling_norm)
            ),
        ));
    }
    let ratio = minmax_ratio(&couplings);
    report.push(CheckResult::new(
        "coupling_stability",
        ratio <= rc.coupling_ratio_max,
        serde_json::json!({"ratio": ratio, "couplings": json_f64s(&couplings)}),
        format!(
            "coupling max/min ratio {} allowed {} across shapes {:?}",
            fmt(ratio),
            fmt(rc.coupling_ratio_max),
            rc.shapes
        ),
    ));
    Ok(report)
}
