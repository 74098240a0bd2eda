//! Resolvent experiment: Monte Carlo E[Q] against the deterministic
//! equivalent (isotropic oracle cross-checked), the log-n scaling of the
//! error, and the leave-one-out identities.

use conc_lab::generators::{stream_rng, Coupling, Kind, MatrixModel, VectorModel};
use conc_lab::linalg::frobenius;
use conc_lab::rmt::{
    isotropic_delta_oracle, leave_one_out, monte_carlo_eq, solve_delta, DiagonalLaw,
    ResolventModel, ResolventSpec, SigmaSpec,
};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::minmax_ratio;
use crate::config::{ExperimentConfig, ResolventConfig};
use crate::errors::CliResult;
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

/// spectral-norm budget for gaussian p x n columns: the bulk edge
/// 1 + sqrt(p/n) with a 5% sampling margin
fn kappa_for(p: usize, n: usize) -> f64 {
    (1.0 + (p as f64 / n as f64).sqrt()) * 1.05
}

fn isotropic_error(
    cfg: &ExperimentConfig,
    p: usize,
    n: usize,
    d: f64,
    trials: usize,
    stream: u64,
) -> CliResult<(f64, f64, Array2<f64>)> {
    let kappa = kappa_for(p, n);
    let epsilon = 1.0 - kappa * kappa * d;
    let model = ResolventModel {
        matrix: MatrixModel::new(VectorModel::new(Kind::Gaussian, p)?, n)?
            .with_coupling(Coupling::Identical),
        d_values: Array1::from_elem(n, d),
        kappa,
        kappa_d: d,
        epsilon,
    };
    let mc = monte_carlo_eq(&model, trials, cfg.seed ^ stream)?;
    let law = DiagonalLaw::Deterministic { values: vec![d; n] };
    let (state, qt) = solve_delta(&law, &SigmaSpec::Isotropic { p }, n, 1e-10, 500)?;
    if !state.converged {
        return Err(conc_lab::Error::NonConvergence {
            iterations: state.iterations,
            residual: state.residual,
        }
        .into());
    }
    let diff = &mc.mean - &qt;
    Ok((
        frobenius(&diff.view()) / frobenius(&qt.view()),
        frobenius(&diff.view()),
        qt,
    ))
}

pub fn run(cfg: &ExperimentConfig, rc: &ResolventConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "deterministic equivalent of the resolvent, its scaling in n, and the rank-one identities",
    );

    // closed-form cross-check of the fixed point in the isotropic reduction
    let c_ratio = rc.p as f64 / rc.n as f64;
    let oracle = isotropic_delta_oracle(c_ratio, rc.d_value);
    let law = DiagonalLaw::Deterministic {
        values: vec![rc.d_value; rc.n],
    };
    let (state, qt) = solve_delta(&law, &SigmaSpec::Isotropic { p: rc.p }, rc.n, 1e-10, 500)?;
    let delta_err = state
        .delta
        .iter()
        .map(|v| (v - oracle).abs())
        .fold(0.0f64, f64::max);
    // isotropic q-tilde is scalar: (1 - e)^{-1} I with e = d/(1 - delta d)
    let e = rc.d_value / (1.0 - oracle * rc.d_value);
    let qt_diag_direct = 1.0 / (1.0 - e);
    let qt_err = (qt[(0, 0)] - qt_diag_direct).abs();
    report.push(CheckResult::new(
        "fixed_point_oracle",
        state.converged && delta_err <= 1e-8 && qt_err <= 1e-8,
        serde_json::json!({
            "delta": state.delta[0],
            "oracle": oracle,
            "delta_error": delta_err,
            "qt_diag_error": qt_err,
            "iterations": state.iterations,
        }),
        format!(
            "delta {} vs quadratic root {} (err {delta_err:.2e}), diag(Q~) err {qt_err:.2e}",
            fmt(state.delta[0]),
            fmt(oracle),
        ),
    ));

    // Monte Carlo E[Q] at the reference point
    let (rel, _abs, _) = isotropic_error(cfg, rc.p, rc.n, rc.d_value, rc.trials, 1)?;
    report.push(CheckResult::new(
        "deterministic_equivalent_error",
        rel <= rc.rel_error_max,
        serde_json::json!({"rel_frobenius_error": rel}),
        format!(
            "||mean(Q) - Q~||_F / ||Q~||_F = {} allowed {}",
            fmt(rel),
            fmt(rc.rel_error_max)
        ),
    ));

    // scaling of the absolute error against log n at fixed p/n
    if !rc.scaling_ns.is_empty() {
        let mut ratios = Vec::new();
        for (k, &n) in rc.scaling_ns.iter().enumerate() {
            let p = ((n as f64) * c_ratio).round() as usize;
            let (_, abs_err, _) = isotropic_error(cfg, p, n, rc.d_value, rc.trials, 10 + k as u64)?;
            ratios.push(abs_err / (n as f64).ln());
        }
        let spread = minmax_ratio(&ratios);
        report.push(CheckResult::new(
            "log_n_scaling",
            spread <= rc.scaling_ratio_factor,
            serde_json::json!({"ratios": json_f64s(&ratios)}),
            format!(
                "error/log(n) across n = {:?}: max/min {} allowed {}",
                rc.scaling_ns,
                fmt(spread),
                fmt(rc.scaling_ratio_factor)
            ),
        ));
    }

    // rank-one (leave-one-out) identities on independent admissible draws
    if rc.loo_draws > 0 {
        let mut worst_full = 0.0f64;
        let mut worst_action = 0.0f64;
        let mut norm_ok = true;
        let mut rng = stream_rng(cfg.seed, 0xF0, 0, 0);
        let (p, n) = (rc.p.min(40), rc.n.min(160));
        let kappa = kappa_for(p, n);
        let epsilon = 1.0 - kappa * kappa * rc.d_value;
        for draw in 0..rc.loo_draws {
            let mut draw_rng = stream_rng(cfg.seed, 0xE1, draw as u64, 0);
            let x = Array2::from_shape_fn((p, n), |_| StandardNormal.sample(&mut draw_rng));
            let spec = match ResolventSpec::new(
                x.clone(),
                x,
                Array1::from_elem(n, rc.d_value),
                kappa,
                rc.d_value,
                epsilon,
            ) {
                Ok(s) => s,
                Err(_) => continue, // rejected draw; counted implicitly by norms below
            };
            let i = rng.random_range(0..n);
            let out = leave_one_out(&spec, i)?;
            worst_full = worst_full.max(out.schur_full_rel_err);
            worst_action = worst_action.max(out.schur_action_rel_err);
            norm_ok &= out.norm_bound_ok;
        }
        report.push(CheckResult::new(
            "schur_identities",
            worst_full <= rc.loo_tolerance && worst_action <= rc.loo_tolerance && norm_ok,
            serde_json::json!({
                "worst_full_rel_err": worst_full,
                "worst_action_rel_err": worst_action,
                "norm_bound_ok": norm_ok,
            }),
            format!(
                "worst relative errors {:.2e} / {:.2e} over {} draws (tol {:.1e}); ||Q|| <= 1/eps on all",
                worst_full, worst_action, rc.loo_draws, rc.loo_tolerance
            ),
        ));
    }
    Ok(report)
}
