//! On-disk container for ensembles: a JSON header followed by the raw data as
//! little-endian IEEE-754 doubles, row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::sample::{Provenance, SampleEnsemble};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CLABENS1";

#[derive(Serialize, Deserialize)]
struct Header {
    model: serde_json::Value,
    n_trials: usize,
    dim: usize,
    master_seed: u64,
    stream: u64,
    coupled: bool,
    matrix_shape: Option<(usize, usize)>,
    endianness: String,
    layout: String,
}

pub fn write_ensemble(ens: &SampleEnsemble, path: &Path) -> Result<()> {
    let header = Header {
        model: ens.model.clone(),
        n_trials: ens.n_trials(),
        dim: ens.dim(),
        master_seed: ens.provenance.master_seed,
        stream: ens.provenance.stream,
        coupled: ens.provenance.coupled,
        matrix_shape: ens.matrix_shape,
        endianness: "little".into(),
        layout: "row_major".into(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for v in ens.data.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> Result<SampleEnsemble> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Domain(format!(
            "not an ensemble container: bad magic in {}",
            path.display()
        )));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)?;
    let mut header_bytes = vec![0u8; u32::from_le_bytes(len_bytes) as usize];
    r.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;
    let count = header.n_trials * header.dim;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(SampleEnsemble {
        data: Array2::from_shape_vec((header.n_trials, header.dim), data)
            .map_err(|e| Error::Shape(e.to_string()))?,
        model: header.model,
        provenance: Provenance {
            master_seed: header.master_seed,
            stream: header.stream,
            coupled: header.coupled,
        },
        matrix_shape: header.matrix_shape,
    })
}

/// CSV export for small ensembles (RFC 4180, '.' decimal separator).
pub fn export_csv(ens: &SampleEnsemble, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let cols: Vec<String> = (0..ens.dim()).map(|j| format!("c{j}")).collect();
    writeln!(w, "{}", cols.join(","))?;
    for row in ens.data.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}
