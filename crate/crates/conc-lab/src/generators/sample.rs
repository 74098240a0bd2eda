//! Reproducible sampling of vector/matrix ensembles.
//!
//! Every trial (and every matrix column within a trial) draws from its own
//! counter-derived stream, so generation parallelizes over trials while
//! staying bit-identical to a sequential run with the same master seed.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{ConcatModel, Coupling, Kind, MatrixModel, VectorModel};
use super::seed::stream_rng;
use crate::error::{Error, Result};

/// Where an ensemble's randomness came from. Multi-input operations refuse to
/// mix ensembles from different master seeds, and demand distinct streams
/// unless the inputs are deliberately coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub stream: u64,
    /// set when the ensemble shares randomness with another stream on purpose
    pub coupled: bool,
}

/// N independent realizations, one per row. Matrix draws are stored row-major
/// as rows of length p*n.
#[derive(Debug, Clone)]
pub struct SampleEnsemble {
    pub data: Array2<f64>,
    pub model: serde_json::Value,
    pub provenance: Provenance,
    /// (p, n) for matrix ensembles, None for plain vectors
    pub matrix_shape: Option<(usize, usize)>,
}

impl SampleEnsemble {
    pub fn n_trials(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Scalar view of a one-dimensional ensemble.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::Shape(format!(
                "expected scalar ensemble, dim = {}",
                self.dim()
            )));
        }
        Ok(self.data.column(0).to_vec())
    }

    pub fn trial(&self, t: usize) -> ndarray::ArrayView1<'_, f64> {
        self.data.row(t)
    }

    /// Trial t reshaped to its p x n matrix.
    pub fn trial_matrix(&self, t: usize) -> Result<ArrayView2<'_, f64>> {
        let (p, n) = self
            .matrix_shape
            .ok_or_else(|| Error::Shape("ensemble is not a matrix ensemble".into()))?;
        Ok(self
            .data
            .row(t)
            .into_shape_with_order((p, n))
            .expect("row length is p*n"))
    }

    pub fn check_aligned(&self, other: &SampleEnsemble) -> Result<()> {
        if self.provenance.master_seed != other.provenance.master_seed {
            return Err(Error::Alignment(format!(
                "master seeds differ ({} vs {})",
                self.provenance.master_seed, other.provenance.master_seed
            )));
        }
        if self.n_trials() != other.n_trials() {
            return Err(Error::Alignment(format!(
                "trial counts differ ({} vs {})",
                self.n_trials(),
                other.n_trials()
            )));
        }
        let coupled = self.provenance.coupled || other.provenance.coupled;
        if !coupled && self.provenance.stream == other.provenance.stream {
            return Err(Error::Alignment(
                "ensembles share a stream without a declared coupling".into(),
            ));
        }
        Ok(())
    }
}

fn draw_base(kind: Kind, dim: usize, rng: &mut ChaCha8Rng, buf: &mut Vec<f64>) {
    buf.clear();
    match kind {
        Kind::Gaussian => {
            for _ in 0..dim {
                buf.push(rng.sample(StandardNormal));
            }
        }
        Kind::Sphere | Kind::Ball => {
            let mut norm_sq = 0.0;
            for _ in 0..dim {
                let g: f64 = rng.sample(StandardNormal);
                norm_sq += g * g;
                buf.push(g);
            }
            let mut radius = (dim as f64).sqrt() / norm_sq.sqrt();
            if matches!(kind, Kind::Ball) {
                let u: f64 = rng.random();
                radius *= u.powf(1.0 / dim as f64);
            }
            for x in buf.iter_mut() {
                *x *= radius;
            }
        }
        Kind::Cube => {
            let side = (dim as f64).sqrt();
            for _ in 0..dim {
                buf.push(side * rng.random::<f64>());
            }
        }
        Kind::Laplace => {
            for _ in 0..dim {
                let u: f64 = rng.random::<f64>().max(1e-300);
                buf.push(if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                });
            }
        }
        Kind::LqBall { q } => {
            // i.i.d. density prop. to exp(-|x|^q) plus an independent
            // exponential, then normalize: the result is uniform on the unit
            // q-norm ball.
            let gamma = Gamma::new(1.0 / q, 1.0).expect("validated q > 0");
            let mut sum_q = 0.0;
            for _ in 0..dim {
                let g: f64 = gamma.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sum_q += g;
                buf.push(sign * g.powf(1.0 / q));
            }
            let w: f64 = rng.sample(Exp1);
            let denom = (sum_q + w).powf(1.0 / q);
            for x in buf.iter_mut() {
                *x /= denom;
            }
        }
    }
}

fn draw_model(model: &VectorModel, rng: &mut ChaCha8Rng, scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
    match &model.transform {
        None => draw_base(model.kind, model.dim, rng, out),
        Some(t) => {
            draw_base(model.kind, model.dim, rng, scratch);
            t.apply(scratch, out);
        }
    }
}

/// N i.i.d. draws of the model on stream 0.
pub fn sample(model: &VectorModel, n_trials: usize, master_seed: u64) -> Result<SampleEnsemble> {
    sample_stream(model, n_trials, master_seed, 0)
}

/// N i.i.d. draws on an explicit stream (use distinct streams for ensembles
/// that must be independent under a shared master seed).
pub fn sample_stream(
    model: &VectorModel,
    n_trials: usize,
    master_seed: u64,
    stream: u64,
) -> Result<SampleEnsemble> {
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    let dim = model.output_dim();
    let mut data = vec![0.0f64; n_trials * dim];
    data.par_chunks_mut(dim).enumerate().for_each(|(t, row)| {
        let mut rng = stream_rng(master_seed, stream, t as u64, 0);
        let mut scratch = Vec::new();
        let mut out = Vec::with_capacity(dim);
        draw_model(model, &mut rng, &mut scratch, &mut out);
        row.copy_from_slice(&out);
    });
    Ok(SampleEnsemble {
        data: Array2::from_shape_vec((n_trials, dim), data).unwrap(),
        model: serde_json::to_value(model)?,
        provenance: Provenance {
            master_seed,
            stream,
            coupled: false,
        },
        matrix_shape: None,
    })
}

/// Streams one scalar observation per trial without materializing the
/// ensemble; identical draws to `sample_stream` with the same seeds.
pub fn observe<F>(
    model: &VectorModel,
    n_trials: usize,
    master_seed: u64,
    stream: u64,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    Ok((0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(master_seed, stream, t as u64, 0);
            let mut scratch = Vec::new();
            let mut out = Vec::new();
            draw_model(model, &mut rng, &mut scratch, &mut out);
            f(&out)
        })
        .collect())
}

/// Streams a vector-valued observation per trial; the draws are identical to
/// `observe` with the same seeds.
pub fn observe_vec<F>(
    model: &VectorModel,
    n_trials: usize,
    master_seed: u64,
    stream: u64,
    f: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    Ok((0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(master_seed, stream, t as u64, 0);
            let mut scratch = Vec::new();
            let mut out = Vec::new();
            draw_model(model, &mut rng, &mut scratch, &mut out);
            f(&out)
        })
        .collect())
}

/// Streams a scalar observation of m aligned independent vectors per trial
/// (part k draws from sub-stream `stream + k`).
pub fn observe_joint<F>(
    models: &[VectorModel],
    n_trials: usize,
    master_seed: u64,
    stream: u64,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[Vec<f64>]) -> f64 + Sync,
{
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    Ok((0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut scratch = Vec::new();
            let parts: Vec<Vec<f64>> = models
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    let mut rng = stream_rng(master_seed, stream, t as u64, k as u64);
                    let mut out = Vec::new();
                    draw_model(m, &mut rng, &mut scratch, &mut out);
                    out
                })
                .collect();
            f(&parts)
        })
        .collect())
}

fn fill_matrix_rows(
    model: &MatrixModel,
    n_trials: usize,
    master_seed: u64,
    stream: u64,
) -> Vec<f64> {
    let (p, n) = (model.p, model.n);
    let mut data = vec![0.0f64; n_trials * p * n];
    data.par_chunks_mut(p * n).enumerate().for_each(|(t, row)| {
        let mut scratch = Vec::new();
        let mut col = Vec::with_capacity(p);
        for j in 0..n {
            let mut rng = stream_rng(master_seed, stream, t as u64, j as u64);
            draw_model(&model.column, &mut rng, &mut scratch, &mut col);
            for i in 0..p {
                row[i * n + j] = col[i];
            }
        }
    });
    data
}

/// N draws of a p x n matrix with independent columns.
pub fn sample_matrix(
    model: &MatrixModel,
    n_trials: usize,
    master_seed: u64,
    stream: u64,
) -> Result<SampleEnsemble> {
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    let data = fill_matrix_rows(model, n_trials, master_seed, stream);
    Ok(SampleEnsemble {
        data: Array2::from_shape_vec((n_trials, model.p * model.n), data).unwrap(),
        model: serde_json::to_value(model)?,
        provenance: Provenance {
            master_seed,
            stream,
            coupled: false,
        },
        matrix_shape: Some((model.p, model.n)),
    })
}

/// Draws coupled matrix pairs (X, Y): columns are independent across index i,
/// while x_i and y_i share randomness only through the declared coupling.
pub fn sample_couples(
    model: &MatrixModel,
    n_trials: usize,
    master_seed: u64,
    stream_x: u64,
    stream_y: u64,
) -> Result<(SampleEnsemble, SampleEnsemble)> {
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    if stream_x == stream_y {
        return Err(Error::Alignment("x and y streams must differ".into()));
    }
    let x = sample_matrix(model, n_trials, master_seed, stream_x)?;
    let (p, n) = (model.p, model.n);
    let y_data = match model.coupling {
        Coupling::Identical => x.data.clone().into_raw_vec_and_offset().0,
        Coupling::Independent => fill_matrix_rows(model, n_trials, master_seed, stream_y),
        Coupling::MixFresh { weight } => {
            let fresh = fill_matrix_rows(model, n_trials, master_seed, stream_y);
            let norm = (1.0 + weight * weight).sqrt();
            x.data
                .iter()
                .zip(fresh)
                .map(|(xv, g)| (xv + weight * g) / norm)
                .collect()
        }
    };
    let coupled = !matches!(model.coupling, Coupling::Independent);
    let y = SampleEnsemble {
        data: Array2::from_shape_vec((n_trials, p * n), y_data).unwrap(),
        model: serde_json::to_value(model)?,
        provenance: Provenance {
            master_seed,
            stream: stream_y,
            coupled,
        },
        matrix_shape: Some((p, n)),
    };
    let mut x = x;
    x.provenance.coupled = coupled;
    Ok((x, y))
}

/// N draws of the concatenation model; part k of trial t uses column-slot k.
pub fn sample_concat(
    model: &ConcatModel,
    n_trials: usize,
    master_seed: u64,
    stream: u64,
) -> Result<SampleEnsemble> {
    if n_trials == 0 {
        return Err(Error::Range("need at least one trial".into()));
    }
    let dim = model.output_dim();
    let mut data = vec![0.0f64; n_trials * dim];
    data.par_chunks_mut(dim).enumerate().for_each(|(t, row)| {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        let mut offset = 0;
        for (k, part) in model.parts.iter().enumerate() {
            let mut rng = stream_rng(master_seed, stream, t as u64, k as u64);
            draw_model(part, &mut rng, &mut scratch, &mut out);
            row[offset..offset + out.len()].copy_from_slice(&out);
            offset += out.len();
        }
    });
    Ok(SampleEnsemble {
        data: Array2::from_shape_vec((n_trials, dim), data).unwrap(),
        model: serde_json::to_value(model)?,
        provenance: Provenance {
            master_seed,
            stream,
            coupled: false,
        },
        matrix_shape: None,
    })
}
