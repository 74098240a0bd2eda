//! Samplers for the fundamental concentrated families and their Lipschitz
//! transforms, with full seed provenance.

mod model;
mod persist;
mod sample;
mod seed;

pub use model::{
    concat, ConcatModel, CoordFn, Coupling, Kind, LipschitzTransform, MatrixModel, VectorModel,
};
pub use persist::{export_csv, read_ensemble, write_ensemble};
pub use sample::{
    observe, observe_joint, observe_vec, sample, sample_concat, sample_couples, sample_matrix,
    sample_stream, Provenance, SampleEnsemble,
};
pub use seed::stream_rng;

/// serde adapters for dense matrices/vectors inside model descriptors
pub(crate) mod serde_mat {
    use ndarray::Array2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(a: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        Flat {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let flat = Flat::deserialize(d)?;
        Array2::from_shape_vec((flat.rows, flat.cols), flat.data)
            .map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_vec {
    use ndarray::Array1;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(a: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
        a.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array1<f64>, D::Error> {
        Ok(Array1::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
