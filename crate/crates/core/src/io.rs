//! File formats. Matrices are JSON `{"rows","cols","data"}` with row-major
//! data or headerless CSV; vertex labels are 1-based everywhere. Floats are
//! written in shortest round-trip form, so reading back is bit-exact.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codes::{Dataset, GroundTruth, NoiseModel, SparseCodeSet};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, HypergraphJson, SupportSet};
use crate::subspace::Dictionary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl TryFrom<MatrixJson> for DMatrix<f64> {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows.checked_mul(j.cols) != Some(j.data.len()) {
            return Err(Error::Parse(format!(
                "matrix declares {}x{} but holds {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(j.rows, j.cols, &j.data))
    }
}

/// Codes file: `{"k": int, "codes": matrix, "supports": [[1-based], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesJson {
    pub k: usize,
    pub codes: MatrixJson,
    pub supports: Vec<Vec<usize>>,
}

impl From<&SparseCodeSet> for CodesJson {
    fn from(c: &SparseCodeSet) -> Self {
        CodesJson {
            k: c.k(),
            codes: c.codes().into(),
            supports: c.supports().iter().map(SupportSet::to_one_based).collect(),
        }
    }
}

impl TryFrom<CodesJson> for SparseCodeSet {
    type Error = Error;

    fn try_from(j: CodesJson) -> Result<Self> {
        let codes: DMatrix<f64> = j.codes.try_into()?;
        let m = codes.nrows();
        let supports = j
            .supports
            .iter()
            .map(|s| SupportSet::from_one_based(s, m))
            .collect::<Result<Vec<_>>>()?;
        SparseCodeSet::new(j.k, codes, supports).map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::Parse(msg),
            other => other,
        })
    }
}

/// Everything needed to reproduce a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBundle {
    pub seed: u64,
    pub eta: f64,
    pub noise_model: NoiseModel,
    pub hypergraph: HypergraphJson,
    pub dictionary: MatrixJson,
    pub codes: CodesJson,
    pub signals: MatrixJson,
    pub noise: MatrixJson,
}

impl GroundTruthBundle {
    pub fn new(dataset: &Dataset, h: &Hypergraph) -> Result<Self> {
        let gt = dataset
            .ground_truth
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("dataset carries no ground truth".into()))?;
        Ok(GroundTruthBundle {
            seed: gt.seed,
            eta: dataset.eta,
            noise_model: gt.noise_model,
            hypergraph: h.into(),
            dictionary: gt.dictionary.matrix().into(),
            codes: (&gt.codes).into(),
            signals: (&dataset.signals).into(),
            noise: (&gt.noise).into(),
        })
    }

    pub fn into_parts(self) -> Result<(Dataset, Hypergraph)> {
        let h = Hypergraph::try_from(self.hypergraph)?;
        let dictionary = Dictionary::new(self.dictionary.try_into()?)?;
        let codes = SparseCodeSet::try_from(self.codes)?;
        let dataset = Dataset {
            signals: self.signals.try_into()?,
            eta: self.eta,
            ground_truth: Some(GroundTruth {
                dictionary,
                codes,
                noise: self.noise.try_into()?,
                noise_model: self.noise_model,
                seed: self.seed,
            }),
        };
        Ok((dataset, h))
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn matrix_from_csv_str(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("CSV rows have different lengths".into()));
    }
    let data: Vec<f64> = rows.concat();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &data))
}

pub fn matrix_to_csv_string(m: &DMatrix<f64>) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in m.row_iter() {
        writer.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a matrix from `.csv` or JSON, chosen by extension.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    if is_csv(path) {
        matrix_from_csv_str(&fs::read_to_string(path)?)
    } else {
        read_json::<MatrixJson>(path)?.try_into()
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    if is_csv(path) {
        fs::write(path, matrix_to_csv_string(m)?)?;
        Ok(())
    } else {
        write_json(path, &MatrixJson::from(m))
    }
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    Dictionary::new(read_matrix(path)?).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads codes from JSON, or from a CSV matrix whose supports are the
/// nonzero patterns and whose `k` is the largest support size.
pub fn read_codes(path: &Path) -> Result<SparseCodeSet> {
    if is_csv(path) {
        let m = read_matrix(path)?;
        let k = m
            .column_iter()
            .map(|c| c.iter().filter(|&&v| v != 0.0).count())
            .max()
            .unwrap_or(0)
            .max(1);
        SparseCodeSet::from_matrix(k, m)
    } else {
        read_json::<CodesJson>(path)?.try_into()
    }
}

pub fn write_codes(path: &Path, codes: &SparseCodeSet) -> Result<()> {
    if is_csv(path) {
        write_matrix(path, codes.codes())
    } else {
        write_json(path, &CodesJson::from(codes))
    }
}

pub fn read_hypergraph(path: &Path) -> Result<Hypergraph> {
    let j: HypergraphJson = read_json(path)?;
    Hypergraph::try_from(j).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_hypergraph(path: &Path, h: &Hypergraph) -> Result<()> {
    write_json(path, &HypergraphJson::from(h))
}

pub fn read_bundle(path: &Path) -> Result<GroundTruthBundle> {
    read_json(path)
}

/// SHA-256 of the compact JSON encoding.
pub fn digest<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
