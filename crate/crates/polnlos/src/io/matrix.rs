//! PNLT binary matrix format.
//!
//! Layout: magic "PNLT", format version u32 LE, rows u64 LE, cols u64
//! LE, rows*cols f64 LE values row-major, then an optional metadata
//! block (u64 LE byte length + UTF-8 JSON with row/col provenance).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::{ColMeta, ObservationVector, RowMeta, TransportMatrix};

const MAGIC: &[u8; 4] = b"PNLT";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MetaBlock {
    row_meta: Vec<RowMeta>,
    col_meta: Vec<ColMeta>,
}

pub fn write_matrix(matrix: &TransportMatrix, path: &Path) -> Result<()> {
    let rows = matrix.rows();
    let cols = matrix.cols();
    let meta = serde_json::to_vec(&MetaBlock {
        row_meta: matrix.row_meta.clone(),
        col_meta: matrix.col_meta.clone(),
    })?;
    let mut buf = Vec::with_capacity(24 + rows * cols * 8 + meta.len() + 8);
    buf.write_all(MAGIC)?;
    buf.write_all(&FORMAT_VERSION.to_le_bytes())?;
    buf.write_all(&(rows as u64).to_le_bytes())?;
    buf.write_all(&(cols as u64).to_le_bytes())?;
    for r in 0..rows {
        for c in 0..cols {
            buf.write_all(&matrix.data[(r, c)].to_le_bytes())?;
        }
    }
    buf.write_all(&(meta.len() as u64).to_le_bytes())?;
    buf.write_all(&meta)?;
    super::atomic_write(path, &buf)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::MatrixFormat(format!(
            "file truncated while reading {what}"
        )));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn read_matrix(path: &Path) -> Result<TransportMatrix> {
    let mut file = std::fs::File::open(path)?;
    let mut data = Vec::new();
    file.read_to_end(&mut data)?;
    let mut bytes = data.as_slice();

    let magic = take(&mut bytes, 4, "magic")?;
    if magic != MAGIC {
        return Err(Error::MatrixFormat(format!(
            "bad magic {magic:?}, expected \"PNLT\""
        )));
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::MatrixFormat(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let rows = u64::from_le_bytes(take(&mut bytes, 8, "rows")?.try_into().unwrap());
    let cols = u64::from_le_bytes(take(&mut bytes, 8, "cols")?.try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .filter(|n| *n <= (usize::MAX / 8) as u64)
        .ok_or_else(|| {
            Error::MatrixFormat(format!("dimension overflow: {rows} x {cols}"))
        })? as usize;
    let (rows, cols) = (rows as usize, cols as usize);
    let values = take(&mut bytes, count * 8, "matrix values")?;
    let mut matrix = nalgebra::DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let at = (r * cols + c) * 8;
            matrix[(r, c)] = f64::from_le_bytes(values[at..at + 8].try_into().unwrap());
        }
    }
    let (row_meta, col_meta) = if bytes.is_empty() {
        // Metadata block absent: synthesize sequential provenance.
        (
            (0..rows)
                .map(|r| RowMeta {
                    camera: 0,
                    wall_iu: r,
                    wall_iv: 0,
                    time_bin: None,
                })
                .collect(),
            (0..cols)
                .map(|c| ColMeta {
                    iu: c,
                    iv: 0,
                    iw: None,
                })
                .collect(),
        )
    } else {
        let len = u64::from_le_bytes(take(&mut bytes, 8, "metadata length")?.try_into().unwrap());
        let meta_bytes = take(&mut bytes, len as usize, "metadata block")?;
        let meta: MetaBlock = serde_json::from_slice(meta_bytes)?;
        (meta.row_meta, meta.col_meta)
    };
    TransportMatrix::new(matrix, row_meta, col_meta)
}

/// Observations are stored as a rows x 1 PNLT matrix.
pub fn write_observation(
    obs: &ObservationVector,
    row_meta: &[RowMeta],
    path: &Path,
) -> Result<()> {
    let n = obs.values.len();
    if row_meta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "observation has {n} entries but {} row meta entries",
            row_meta.len()
        )));
    }
    let data = nalgebra::DMatrix::from_iterator(n, 1, obs.values.iter().cloned());
    let matrix = TransportMatrix::new(
        data,
        row_meta.to_vec(),
        vec![ColMeta {
            iu: 0,
            iv: 0,
            iw: None,
        }],
    )?;
    write_matrix(&matrix, path)
}

pub fn read_observation(path: &Path) -> Result<ObservationVector> {
    let matrix = read_matrix(path)?;
    if matrix.cols() != 1 {
        return Err(Error::MatrixFormat(format!(
            "observation file must have one column, found {}",
            matrix.cols()
        )));
    }
    ObservationVector::new(matrix.data.column(0).into_owned())
}
