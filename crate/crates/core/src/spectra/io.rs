use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Batch, SpectraDataset, WavenumberAxis, DEFAULT_RESOLUTION};
use crate::{Error, LoadError, Matrix, Result, Vector};

/// Column mapping for delimited spectra files.
///
/// Header cells that parse as numbers are wavenumber columns; the remaining
/// cells must match one of the named meta columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSchema {
    pub response: String,
    pub batch: String,
    pub sample_id: String,
    pub replicate_id: String,
    /// Batch assigned to rows when the file has no batch column.
    pub default_batch: Batch,
    pub resolution: f64,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            response: "cn".into(),
            batch: "batch".into(),
            sample_id: "sample_id".into(),
            replicate_id: "replicate_id".into(),
            default_batch: Batch::Old,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

enum Column {
    Wavenumber,
    Response,
    Batch,
    SampleId,
    ReplicateId,
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<SpectraDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(file, schema)
}

/// Parses a comma-separated spectra table from any reader.
pub fn parse_dataset<R: Read>(reader: R, schema: &DatasetSchema) -> Result<SpectraDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(LoadError::from)?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(LoadError::MissingHeader.into());
    }

    let mut columns = Vec::with_capacity(header.len());
    let mut wavenumbers = Vec::new();
    let mut has_response = false;
    for (col, cell) in header.iter().enumerate() {
        if let Ok(w) = cell.parse::<f64>() {
            if !w.is_finite() {
                return Err(LoadError::NonNumericCell {
                    line: 1,
                    column: col,
                    value: cell.to_string(),
                }
                .into());
            }
            if let Some(&prev) = wavenumbers.last() {
                if w <= prev {
                    return Err(LoadError::NonMonotonicAxis {
                        column: col,
                        previous: prev,
                        value: w,
                    }
                    .into());
                }
            }
            wavenumbers.push(w);
            columns.push(Column::Wavenumber);
        } else if cell == schema.response {
            has_response = true;
            columns.push(Column::Response);
        } else if cell == schema.batch {
            columns.push(Column::Batch);
        } else if cell == schema.sample_id {
            columns.push(Column::SampleId);
        } else if cell == schema.replicate_id {
            columns.push(Column::ReplicateId);
        } else {
            return Err(LoadError::UnknownColumn(cell.to_string()).into());
        }
    }
    if wavenumbers.is_empty() {
        return Err(LoadError::NoWavenumbers.into());
    }
    if !has_response {
        return Err(LoadError::MissingColumn(schema.response.clone()).into());
    }

    let m = wavenumbers.len();
    let mut values: Vec<f64> = Vec::new();
    let mut response = Vec::new();
    let mut batch = Vec::new();
    let mut sample_id = Vec::new();
    let mut replicate_id = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(LoadError::from)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != columns.len() {
            return Err(LoadError::RowWidthMismatch {
                line,
                expected: columns.len(),
                found: record.len(),
            }
            .into());
        }
        let row_index = response.len();
        let (mut b, mut sid, mut rid) = (schema.default_batch, row_index.to_string(), "0".to_string());
        let mut y = None;
        for (col, (kind, cell)) in columns.iter().zip(record.iter()).enumerate() {
            let numeric = |cell: &str| -> Result<f64> {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(LoadError::NonNumericCell {
                        line,
                        column: col,
                        value: cell.to_string(),
                    }
                    .into()),
                }
            };
            match kind {
                Column::Wavenumber => values.push(numeric(cell)?),
                Column::Response => {
                    if cell.is_empty() {
                        return Err(LoadError::MissingResponse { line }.into());
                    }
                    y = Some(numeric(cell)?);
                }
                Column::Batch => {
                    b = cell.parse().map_err(|_| LoadError::InvalidBatch {
                        line,
                        value: cell.to_string(),
                    })?;
                }
                Column::SampleId => sid = cell.to_string(),
                Column::ReplicateId => rid = cell.to_string(),
            }
        }
        response.push(y.ok_or(LoadError::MissingResponse { line })?);
        batch.push(b);
        sample_id.push(sid);
        replicate_id.push(rid);
    }
    if response.is_empty() {
        return Err(LoadError::NoRows.into());
    }

    let n = response.len();
    let axis = WavenumberAxis::new(wavenumbers, schema.resolution)?;
    let intensities = Matrix::from_row_slice(n, m, &values);
    SpectraDataset::new(
        axis,
        intensities,
        Vector::from_vec(response),
        batch,
        sample_id,
        replicate_id,
    )
}

/// Writes `ds` in the format read by [`parse_dataset`] with the default schema.
pub fn write_dataset<W: Write>(ds: &SpectraDataset, writer: W) -> Result<()> {
    let schema = DatasetSchema::default();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ds.axis().values().iter().map(|v| v.to_string()).collect();
    header.extend([schema.response, schema.batch, schema.sample_id, schema.replicate_id]);
    w.write_record(&header).map_err(LoadError::from)?;
    let x = ds.intensities();
    for i in 0..ds.n_samples() {
        let mut rec: Vec<String> = (0..ds.n_features()).map(|j| x[(i, j)].to_string()).collect();
        rec.push(ds.response()[i].to_string());
        rec.push(ds.batch()[i].as_str().to_string());
        rec.push(ds.sample_id()[i].clone());
        rec.push(ds.replicate_id()[i].clone());
        w.write_record(&rec).map_err(LoadError::from)?;
    }
    w.flush().map_err(|e| LoadError::from(csv::Error::from(e)))?;
    Ok(())
}
