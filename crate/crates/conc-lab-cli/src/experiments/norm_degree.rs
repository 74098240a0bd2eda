//! Norm-growth experiment: E||Z - mean|| against eta^(1/2) for gaussian
//! sources across several spaces, plus the exact gamma-ratio cross-check.

use conc_lab::estimation::{centered_norm_mean, gaussian_norm_mean_exact};
use conc_lab::generators::{sample_matrix, sample_stream, Kind, MatrixModel, VectorModel};
use conc_lab::linalg::{diag_seminorm, spectral_norm};
use conc_lab::profile::{norm_degree, NormKind};

use super::minmax_ratio;
use crate::config::{ExperimentConfig, NormCase, NormDegreeConfig};
use crate::errors::CliResult;
use crate::report::{fmt, json_f64s, CheckResult, RunReport};

pub fn run(cfg: &ExperimentConfig, nc: &NormDegreeConfig) -> CliResult<RunReport> {
    let mut report = RunReport::new(
        cfg,
        "norm growth E||Z - mean|| against eta^(1/2) across spaces and dimensions",
    );
    for (case_idx, case_cfg) in nc.cases.iter().enumerate() {
        let mut constants = Vec::new();
        for (dim_idx, &dim) in case_cfg.dims.iter().enumerate() {
            let stream = (case_idx * 64 + dim_idx) as u64;
            let (eta, mean_norm) = match case_cfg.case {
                NormCase::Euclidean | NormCase::Sup => {
                    let model = VectorModel::new(Kind::Gaussian, dim)?;
                    let ens = sample_stream(&model, nc.trials, cfg.seed, stream)?;
                    let kind = if matches!(case_cfg.case, NormCase::Euclidean) {
                        NormKind::EuclideanVec
                    } else {
                        NormKind::SupVec
                    };
                    let mean_norm = centered_norm_mean(&ens, |row| match kind {
                        NormKind::EuclideanVec => row.dot(row).sqrt(),
                        _ => row.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                    });
                    (norm_degree(kind, dim, 0)?, mean_norm)
                }
                NormCase::Spectral | NormCase::Frobenius | NormCase::Diag => {
                    let mm =
                        MatrixModel::new(VectorModel::new(Kind::Gaussian, dim)?, dim)?;
                    // matrix cases are heavier per trial
                    let trials = nc.trials.clamp(20, 200);
                    let ens = sample_matrix(&mm, trials, cfg.seed, stream)?;
                    let mean = ens.data.mean_axis(ndarray::Axis(0)).unwrap();
                    let mut acc = 0.0;
                    for t in 0..trials {
                        let centered = &ens.data.row(t) - &mean;
                        let m = centered
                            .to_shape((dim, dim))
                            .expect("row is dim x dim");
                        acc += match case_cfg.case {
                            NormCase::Spectral => spectral_norm(&m.view()),
                            NormCase::Frobenius => m.iter().map(|v| v * v).sum::<f64>().sqrt(),
                            NormCase::Diag => diag_seminorm(&m.view())?,
                            _ => unreachable!(),
                        };
                    }
                    let kind = match case_cfg.case {
                        NormCase::Spectral => NormKind::SpectralMat,
                        NormCase::Frobenius => NormKind::FrobeniusMat,
                        NormCase::Diag => NormKind::DiagSeminorm,
                        _ => unreachable!(),
                    };
                    (norm_degree(kind, dim, dim)?, acc / trials as f64)
                }
            };
            constants.push(mean_norm / eta.sqrt());
        }
        let ratio = minmax_ratio(&constants);
        let label = format!("{:?}", case_cfg.case).to_lowercase();
        report.push(CheckResult::new(
            format!("scaling_{label}"),
            ratio <= nc.stability_factor,
            serde_json::json!({"constants": json_f64s(&constants), "ratio": ratio}),
            format!(
                "fitted constants across dims {:?}: max/min {} allowed {}",
                case_cfg.dims,
                fmt(ratio),
                fmt(nc.stability_factor)
            ),
        ));
        // spectral edge behavior at p = n: E||X|| close to 2 sqrt(p)
        if matches!(case_cfg.case, NormCase::Spectral) {
            for (i, &dim) in case_cfg.dims.iter().enumerate() {
                if dim >= 128 {
                    let edge = constants[i] * (2.0 * dim as f64).sqrt()
                        / (2.0 * (dim as f64).sqrt());
                    report.push(CheckResult::new(
                        format!("spectral_edge_dim_{dim}"),
                        (0.9..=1.05).contains(&edge),
                        serde_json::json!({"ratio": edge}),
                        format!("E||X|| / (sqrt(p) + sqrt(n)) = {} target [0.9, 1.05]", fmt(edge)),
                    ));
                }
            }
        }
    }
    if nc.gamma_oracle_dim > 0 {
        let p = nc.gamma_oracle_dim;
        let model = VectorModel::new(Kind::Gaussian, p)?;
        let ens = sample_stream(&model, nc.trials.max(10_000), cfg.seed, 0xE0)?;
        let mut acc = 0.0;
        for row in ens.data.rows() {
            acc += row.dot(&row).sqrt();
        }
        let empirical = acc / ens.n_trials() as f64;
        let exact = gaussian_norm_mean_exact(p);
        let rel = (empirical - exact).abs() / exact;
        report.push(CheckResult::new(
            "gamma_ratio_oracle",
            rel <= nc.gamma_oracle_rel_tol,
            serde_json::json!({"empirical": empirical, "exact": exact, "rel_error": rel}),
            format!(
                "E||Z|| at p = {p}: empirical {} vs exact {} (rel {})",
                fmt(empirical),
                fmt(exact),
                fmt(rel)
            ),
        ));
    }
    Ok(report)
}
