//! Multilinearly-Lipschitz maps and statistics evaluated per trial on
//! ensembles: entry-wise and matrix product chains, bilinear forms, the
//! X D Y^T functionals and the diagonal semi-norm.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{Provenance, SampleEnsemble};
use crate::linalg;
use crate::profile::NormKind;

pub use crate::linalg::diag_seminorm;

/// Scalar observation of a random vector or matrix, with its certified
/// Lipschitz constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observation {
    /// z -> u^T z; Lipschitz constant ||u||
    Linear {
        #[serde(with = "crate::generators::serde_vec")]
        u: Array1<f64>,
    },
    /// M -> tr(A M) under the Frobenius pairing; Lipschitz constant ||A||_F
    LinearMatrix {
        #[serde(with = "crate::generators::serde_mat")]
        a: Array2<f64>,
    },
    /// z -> ||z||; 1-Lipschitz for the matching norm
    Norm { norm: NormKind },
}

impl Observation {
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            Observation::Linear { u } => u.dot(u).sqrt(),
            Observation::LinearMatrix { a } => linalg::frobenius(&a.view()),
            Observation::Norm { .. } => 1.0,
        }
    }

    pub fn eval_vec(&self, z: &ArrayView1<f64>) -> f64 {
        match self {
            Observation::Linear { u } => u.dot(z),
            Observation::Norm { norm } => match norm {
                NormKind::EuclideanVec => z.dot(z).sqrt(),
                NormKind::SupVec => z.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                _ => f64::NAN,
            },
            Observation::LinearMatrix { .. } => f64::NAN,
        }
    }
}

/// Single-column CSV export of a scalar statistic, header row naming it.
pub fn export_scalar_csv(values: &[f64], statistic: &str, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{statistic}")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn ensure_all_aligned(ensembles: &[&SampleEnsemble]) -> Result<()> {
    for pair in ensembles.windows(2) {
        pair[0].check_aligned(pair[1])?;
    }
    Ok(())
}

fn derived_provenance(parts: &[&SampleEnsemble]) -> Provenance {
    Provenance {
        master_seed: parts[0].provenance.master_seed,
        stream: parts
            .iter()
            .fold(0u64, |acc, e| acc ^ e.provenance.stream.rotate_left(17)),
        coupled: true,
    }
}

/// Per-trial entry-wise product of m aligned vector ensembles.
pub fn hadamard_chain(ensembles: &[&SampleEnsemble]) -> Result<SampleEnsemble> {
    if ensembles.is_empty() {
        return Err(Error::Range("need at least one ensemble".into()));
    }
    ensure_all_aligned(ensembles)?;
    let dim = ensembles[0].dim();
    for e in ensembles {
        if e.dim() != dim {
            return Err(Error::Shape(format!(
                "entry-wise product needs equal dims, got {} vs {dim}",
                e.dim()
            )));
        }
    }
    let mut data = ensembles[0].data.clone();
    for e in &ensembles[1..] {
        data = &data * &e.data;
    }
    Ok(SampleEnsemble {
        data,
        model: serde_json::json!({"derived": "hadamard_chain"}),
        provenance: derived_provenance(ensembles),
        matrix_shape: ensembles[0].matrix_shape,
    })
}

/// Per-trial matrix product M_1 ... M_m of aligned matrix ensembles.
pub fn matrix_chain(ensembles: &[&SampleEnsemble]) -> Result<SampleEnsemble> {
    if ensembles.is_empty() {
        return Err(Error::Range("need at least one ensemble".into()));
    }
    ensure_all_aligned(ensembles)?;
    let shapes: Vec<(usize, usize)> = ensembles
        .iter()
        .map(|e| {
            e.matrix_shape
                .ok_or_else(|| Error::Shape("matrix chain needs matrix ensembles".into()))
        })
        .collect::<Result<_>>()?;
    for w in shapes.windows(2) {
        if w[0].1 != w[1].0 {
            return Err(Error::Shape(format!(
                "chain dims do not conform: {}x{} then {}x{}",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    let n_trials = ensembles[0].n_trials();
    let (p_out, n_out) = (shapes[0].0, shapes.last().unwrap().1);
    let rows: Vec<Vec<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut acc = ensembles[0].trial_matrix(t).unwrap().to_owned();
            for e in &ensembles[1..] {
                acc = acc.dot(&e.trial_matrix(t).unwrap());
            }
            acc.into_raw_vec_and_offset().0
        })
        .collect();
    let mut data = Vec::with_capacity(n_trials * p_out * n_out);
    for row in rows {
        data.extend(row);
    }
    Ok(SampleEnsemble {
        data: Array2::from_shape_vec((n_trials, p_out * n_out), data).unwrap(),
        model: serde_json::json!({"derived": "matrix_chain"}),
        provenance: derived_provenance(ensembles),
        matrix_shape: Some((p_out, n_out)),
    })
}

/// Per-trial bilinear form x^T A y of two aligned vector ensembles.
pub fn bilinear_form(
    x: &SampleEnsemble,
    a: &ArrayView2<f64>,
    y: &SampleEnsemble,
) -> Result<Vec<f64>> {
    x.check_aligned(y)?;
    if x.dim() != a.nrows() || y.dim() != a.ncols() {
        return Err(Error::Shape(format!(
            "bilinear form dims: x has {}, A is {}x{}, y has {}",
            x.dim(),
            a.nrows(),
            a.ncols(),
            y.dim()
        )));
    }
    Ok((0..x.n_trials())
        .into_par_iter()
        .map(|t| {
            let ay = a.dot(&y.trial(t));
            x.trial(t).dot(&ay)
        })
        .collect())
}

/// Per-trial tr(B^T (Y^T A X)) for matrix ensembles (Frobenius pairing of
/// Y^T A X against B).
pub fn bilinear_form_matrix(
    x: &SampleEnsemble,
    a: &ArrayView2<f64>,
    y: &SampleEnsemble,
    b: &ArrayView2<f64>,
) -> Result<Vec<f64>> {
    x.check_aligned(y)?;
    let (px, nx) = x
        .matrix_shape
        .ok_or_else(|| Error::Shape("x must be a matrix ensemble".into()))?;
    let (py, ny) = y
        .matrix_shape
        .ok_or_else(|| Error::Shape("y must be a matrix ensemble".into()))?;
    if a.nrows() != py || a.ncols() != px || b.nrows() != ny || b.ncols() != nx {
        return Err(Error::Shape(
            "trace pairing dims do not conform for Y^T A X vs B".into(),
        ));
    }
    Ok((0..x.n_trials())
        .into_par_iter()
        .map(|t| {
            let xt = x.trial_matrix(t).unwrap();
            let yt = y.trial_matrix(t).unwrap();
            let inner = yt.t().dot(a).dot(&xt);
            inner.iter().zip(b.iter()).map(|(m, w)| m * w).sum()
        })
        .collect())
}

/// Per-trial X D Y^T u for matrix ensembles X, Y and a diagonal ensemble D.
pub fn xdy_action(
    x: &SampleEnsemble,
    d: &SampleEnsemble,
    y: &SampleEnsemble,
    u: &ArrayView1<f64>,
) -> Result<SampleEnsemble> {
    x.check_aligned(y)?;
    x.check_aligned(d)?;
    let (p, n) = x
        .matrix_shape
        .ok_or_else(|| Error::Shape("x must be a matrix ensemble".into()))?;
    let (py, ny) = y
        .matrix_shape
        .ok_or_else(|| Error::Shape("y must be a matrix ensemble".into()))?;
    if (py, ny) != (p, n) || d.dim() != n || u.len() != py {
        return Err(Error::Shape(format!(
            "xdy action dims: X {p}x{n}, Y {py}x{ny}, D has {}, u has {}",
            d.dim(),
            u.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..x.n_trials())
        .into_par_iter()
        .map(|t| {
            let xt = x.trial_matrix(t).unwrap();
            let yt = y.trial_matrix(t).unwrap();
            let dt = d.trial(t);
            // w = D Y^T u, out = X w
            let ytu = yt.t().dot(u);
            let w: Array1<f64> = &ytu * &dt;
            xt.dot(&w).to_vec()
        })
        .collect();
    let mut data = Vec::with_capacity(x.n_trials() * p);
    for row in rows {
        data.extend(row);
    }
    Ok(SampleEnsemble {
        data: Array2::from_shape_vec((x.n_trials(), p), data).unwrap(),
        model: serde_json::json!({"derived": "xdy_action"}),
        provenance: derived_provenance(&[x, d, y]),
        matrix_shape: None,
    })
}

/// Norm mode for the trace pairing tr(A X D Y^T): the dual constraint on A
/// decides which concentration statement is being probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// requires ||A||_* <= 1 (dual of the operator norm)
    SpectralDual,
    /// requires ||A||_F <= 1
    Frobenius,
}

/// Per-trial tr(A X D Y^T). Returns the values and a flag telling whether the
/// norm constraint of the selected mode held for A (violation is reported,
/// not fatal).
pub fn trace_pairing(
    a: &ArrayView2<f64>,
    x: &SampleEnsemble,
    d: &SampleEnsemble,
    y: &SampleEnsemble,
    mode: PairingMode,
) -> Result<(Vec<f64>, bool)> {
    x.check_aligned(y)?;
    x.check_aligned(d)?;
    let (p, n) = x
        .matrix_shape
        .ok_or_else(|| Error::Shape("x must be a matrix ensemble".into()))?;
    if y.matrix_shape != Some((p, n)) || d.dim() != n || a.nrows() != p || a.ncols() != p {
        return Err(Error::Shape("trace pairing dims do not conform".into()));
    }
    let norm_ok = match mode {
        PairingMode::Frobenius => linalg::frobenius(a) <= 1.0 + 1e-12,
        // nuclear norm bounded via sqrt(rank) * ||A||_F >= ||A||_*; checking
        // the cheap upper proxy keeps the hot path free of an SVD
        PairingMode::SpectralDual => {
            (a.nrows().min(a.ncols()) as f64).sqrt() * linalg::frobenius(a) <= 1.0 + 1e-12
        }
    };
    let values = (0..x.n_trials())
        .into_par_iter()
        .map(|t| {
            let xt = x.trial_matrix(t).unwrap();
            let yt = y.trial_matrix(t).unwrap();
            let dt = d.trial(t);
            // tr(A X D Y^T) = sum_i D_i * y_i^T A x_i
            let ax = a.dot(&xt);
            let mut acc = 0.0;
            for i in 0..n {
                let mut dot = 0.0;
                for k in 0..p {
                    dot += yt[(k, i)] * ax[(k, i)];
                }
                acc += dt[i] * dot;
            }
            acc
        })
        .collect();
    Ok((values, norm_ok))
}

/// Per-trial diagonal semi-norm ||Y^T A X||_d, plus its mean (the object of
/// the sqrt(n) growth check). A is normalized to unit Frobenius norm first.
pub fn ydax_diag_stat(
    x: &SampleEnsemble,
    y: &SampleEnsemble,
    a: &ArrayView2<f64>,
) -> Result<(Vec<f64>, f64)> {
    x.check_aligned(y)?;
    let (p, n) = x
        .matrix_shape
        .ok_or_else(|| Error::Shape("x must be a matrix ensemble".into()))?;
    if y.matrix_shape != Some((p, n)) || a.nrows() != p || a.ncols() != p {
        return Err(Error::Shape("diag statistic dims do not conform".into()));
    }
    let fro = linalg::frobenius(a);
    if fro == 0.0 {
        return Ok((vec![0.0; x.n_trials()], 0.0));
    }
    let a_unit = a.mapv(|v| v / fro);
    let values: Vec<f64> = (0..x.n_trials())
        .into_par_iter()
        .map(|t| {
            let xt = x.trial_matrix(t).unwrap();
            let yt = y.trial_matrix(t).unwrap();
            let ax = a_unit.dot(&xt);
            // diagonal entries of Y^T (A X) only
            let mut acc = 0.0;
            for i in 0..n {
                let mut dot = 0.0;
                for k in 0..p {
                    dot += yt[(k, i)] * ax[(k, i)];
                }
                acc += dot * dot;
            }
            acc.sqrt()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok((values, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{sample_stream, Kind, VectorModel};
    use ndarray::array;

    #[test]
    fn diag_seminorm_ignores_off_diagonal() {
        let m = array![[1.0, 9.0], [9.0, 2.0]];
        assert!((diag_seminorm(&m.view()).unwrap() - 5.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn alignment_rejects_mixed_masters() {
        let m = VectorModel::new(Kind::Gaussian, 4).unwrap();
        let a = sample_stream(&m, 10, 1, 0).unwrap();
        let b = sample_stream(&m, 10, 2, 1).unwrap();
        assert!(hadamard_chain(&[&a, &b]).is_err());
    }
}
