//! Declarative descriptions of concentrated random vectors and matrices.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::profile::{ConcentrationProfile, ProfileConstants, Regime};

/// The fundamental concentrated families. All are normalized so that the
/// whole vector plays at the sqrt(p) scale of a standard Gaussian, except the
/// lq ball which is kept at unit radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Kind {
    /// independent standard normal entries
    Gaussian,
    /// uniform on the sphere of radius sqrt(p)
    Sphere,
    /// uniform on the centered ball of radius sqrt(p)
    Ball,
    /// uniform on the cube [0, sqrt(p)]^p
    Cube,
    /// independent entries with density exp(-|x|)/2
    Laplace,
    /// uniform on the unit ball of the q-norm
    LqBall { q: f64 },
}

impl Kind {
    /// (exponent, observable diameter) of the untransformed family.
    pub fn base_profile(&self, dim: usize) -> (f64, f64) {
        match self {
            Kind::Gaussian | Kind::Sphere | Kind::Ball | Kind::Cube => (2.0, 1.0),
            Kind::Laplace => (1.0, 1.0),
            Kind::LqBall { q } => (*q, (dim as f64).powf(-1.0 / q)),
        }
    }
}

/// 1-Lipschitz-certified coordinatewise maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "fn")]
pub enum CoordFn {
    Tanh,
    Abs,
    Clip { lo: f64, hi: f64 },
}

impl CoordFn {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            CoordFn::Tanh => x.tanh(),
            CoordFn::Abs => x.abs(),
            CoordFn::Clip { lo, hi } => x.clamp(*lo, *hi),
        }
    }
}

/// Lipschitz post-transform of a sampled vector. The stored constant is an
/// upper bound on the true Lipschitz constant; for affine maps it is the
/// spectral norm of A computed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LipschitzTransform {
    Affine {
        #[serde(with = "crate::generators::serde_mat")]
        a: Array2<f64>,
        #[serde(with = "crate::generators::serde_vec")]
        b: Array1<f64>,
        lipschitz: f64,
    },
    Coordinatewise { f: CoordFn },
    Scaling { lambda: f64 },
    /// Stacks `copies` identical copies of the base vector; Lipschitz
    /// constant sqrt(copies). The anti-concentration example (X,...,X) is
    /// `Replicate` over a one-dimensional Gaussian.
    Replicate { copies: usize },
}

impl LipschitzTransform {
    pub fn affine(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Shape(format!(
                "affine output dims disagree: A is {}x{}, b has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        let lipschitz = spectral_norm(&a.view());
        Ok(LipschitzTransform::Affine { a, b, lipschitz })
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            LipschitzTransform::Affine { lipschitz, .. } => *lipschitz,
            LipschitzTransform::Coordinatewise { .. } => 1.0,
            LipschitzTransform::Scaling { lambda } => lambda.abs(),
            LipschitzTransform::Replicate { copies } => (*copies as f64).sqrt(),
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> Result<usize> {
        match self {
            LipschitzTransform::Affine { a, .. } => {
                if a.ncols() != input_dim {
                    return Err(Error::Shape(format!(
                        "affine expects input dim {}, model has {input_dim}",
                        a.ncols()
                    )));
                }
                Ok(a.nrows())
            }
            LipschitzTransform::Replicate { copies } => {
                if *copies == 0 {
                    return Err(Error::Range("replicate needs copies >= 1".into()));
                }
                Ok(input_dim * copies)
            }
            _ => Ok(input_dim),
        }
    }

    pub fn apply(&self, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self {
            LipschitzTransform::Affine { a, b, .. } => {
                for i in 0..a.nrows() {
                    let mut acc = b[i];
                    for j in 0..a.ncols() {
                        acc += a[(i, j)] * z[j];
                    }
                    out.push(acc);
                }
            }
            LipschitzTransform::Coordinatewise { f } => {
                out.extend(z.iter().map(|x| f.apply(*x)));
            }
            LipschitzTransform::Scaling { lambda } => {
                out.extend(z.iter().map(|x| lambda * x));
            }
            LipschitzTransform::Replicate { copies } => {
                for _ in 0..*copies {
                    out.extend_from_slice(z);
                }
            }
        }
    }
}

/// A concentrated random vector: fundamental family, dimension and an
/// optional Lipschitz transform applied after sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorModel {
    #[serde(flatten)]
    pub kind: Kind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<LipschitzTransform>,
}

impl VectorModel {
    pub fn new(kind: Kind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Range("dimension must be >= 1".into()));
        }
        if let Kind::LqBall { q } = kind {
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::Range(format!("lq ball needs q > 0, got {q}")));
            }
        }
        Ok(VectorModel {
            kind,
            dim,
            transform: None,
        })
    }

    pub fn with_transform(mut self, t: LipschitzTransform) -> Result<Self> {
        t.output_dim(self.dim)?;
        self.transform = Some(t);
        Ok(self)
    }

    pub fn output_dim(&self) -> usize {
        match &self.transform {
            Some(t) => t.output_dim(self.dim).expect("validated at construction"),
            None => self.dim,
        }
    }

    /// Envelope declared by the family catalogue, scaled by the transform's
    /// Lipschitz constant.
    pub fn declared_profile(&self, consts: ProfileConstants) -> ConcentrationProfile {
        let (q, sigma) = self.kind.base_profile(self.dim);
        let lambda = self
            .transform
            .as_ref()
            .map_or(1.0, |t| t.lipschitz_constant());
        ConcentrationProfile::new(vec![Regime::new(q, sigma * lambda).unwrap()], consts).unwrap()
    }
}

/// How the second member of a column couple (x_i, y_i) is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "coupling")]
pub enum Coupling {
    /// y_i drawn from its own stream, independent of x_i
    Independent,
    /// y_i = x_i
    Identical,
    /// y_i = (x_i + w g_i) / sqrt(1 + w^2) with g_i fresh
    MixFresh { weight: f64 },
}

/// Random p x n matrix with independent columns drawn from one vector model,
/// optionally paired with a coupled second matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixModel {
    pub p: usize,
    pub n: usize,
    pub column: VectorModel,
    #[serde(default = "default_coupling")]
    pub coupling: Coupling,
}

fn default_coupling() -> Coupling {
    Coupling::Independent
}

impl MatrixModel {
    pub fn new(column: VectorModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("matrix needs n >= 1 columns".into()));
        }
        let p = column.output_dim();
        Ok(MatrixModel {
            p,
            n,
            column,
            coupling: Coupling::Independent,
        })
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }
}

/// Concatenation of independent vector models on the product space with the
/// sup joint norm; the declared envelope is the union of the parts' regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatModel {
    pub parts: Vec<VectorModel>,
}

pub fn concat(parts: Vec<VectorModel>) -> Result<ConcatModel> {
    if parts.is_empty() {
        return Err(Error::Range("concat needs at least one model".into()));
    }
    Ok(ConcatModel { parts })
}

impl ConcatModel {
    pub fn output_dim(&self) -> usize {
        self.parts.iter().map(|m| m.output_dim()).sum()
    }

    pub fn declared_profile(&self, consts: ProfileConstants) -> ConcentrationProfile {
        let mut profile = self.parts[0].declared_profile(consts);
        for part in &self.parts[1..] {
            profile = profile.union(&part.declared_profile(consts)).unwrap();
        }
        profile
    }
}
