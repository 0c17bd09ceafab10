//! CSV readers and writers.
//!
//! Point files have the header `id,f0,...,f{D-1}[,label][,score]`. Values are
//! written with Rust's shortest round-trip float formatting, so a save/load
//! cycle reproduces every value exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::data::{LabeledPointSet, PointSet};
use crate::density::DensityField;
use crate::{Error, Result, Scalar};

/// A point file as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub data: LabeledPointSet<T>,
    /// Per-point uncertainty from the optional `score` column.
    pub scores: Option<Vec<T>>,
    /// Set when the file had no `label` column and every label defaulted to 1.
    pub label_defaulted: bool,
}

pub fn load_pointset<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_pointset(file, path)
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

pub fn read_pointset<T: Scalar, R: Read>(reader: R, source: &Path) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.first() != Some(&"id") {
        return Err(parse_err(source, 1, "first column must be `id`"));
    }
    let mut dim = 0;
    while names.get(1 + dim) == Some(&format!("f{dim}").as_str()) {
        dim += 1;
    }
    if dim == 0 {
        return Err(parse_err(source, 1, "expected feature columns f0, f1, ..."));
    }
    let mut col = 1 + dim;
    let label_col = (names.get(col) == Some(&"label")).then(|| {
        col += 1;
        col - 1
    });
    let score_col = (names.get(col) == Some(&"score")).then(|| {
        col += 1;
        col - 1
    });
    if col != names.len() {
        return Err(parse_err(
            source,
            1,
            format!("unexpected column `{}`", names[col]),
        ));
    }

    let mut ids = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let id: u64 = record[0]
            .parse()
            .map_err(|_| parse_err(source, line, format!("invalid id `{}`", &record[0])))?;
        ids.push(id);
        for c in 1..=dim {
            features.push(parse_finite::<T>(&record[c], source, line, &names[c])?);
        }
        if let Some(c) = label_col {
            let label: u32 = record[c].parse().map_err(|_| {
                parse_err(source, line, format!("invalid label `{}`", &record[c]))
            })?;
            if label == 0 {
                return Err(parse_err(source, line, "labels start at 1"));
            }
            labels.push(label);
        }
        if let Some(c) = score_col {
            scores.push(parse_finite::<T>(&record[c], source, line, "score")?);
        }
    }
    if ids.is_empty() {
        return Err(parse_err(source, 1, "file contains no points"));
    }
    let points = PointSet::from_flat(dim, features, ids)?;
    let label_defaulted = label_col.is_none();
    if label_defaulted {
        log::warn!("{}: no label column, defaulting labels to 1", source.display());
        labels = vec![1; points.len()];
    }
    Ok(Dataset {
        data: LabeledPointSet::from_labels(points, labels)?,
        scores: score_col.map(|_| scores),
        label_defaulted,
    })
}

fn parse_finite<T: Scalar>(raw: &str, source: &Path, line: u64, column: &str) -> Result<T> {
    let value: T = raw
        .parse()
        .map_err(|_| parse_err(source, line, format!("invalid number `{raw}` in column {column}")))?;
    if !value.is_finite() {
        return Err(parse_err(source, line, format!("non-finite value in column {column}")));
    }
    Ok(value)
}

pub fn save_pointset<T: Scalar>(
    path: impl AsRef<Path>,
    data: &LabeledPointSet<T>,
    scores: Option<&[T]>,
) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_pointset(&mut buf, data, scores)?;
    write_file(path, &buf)
}

pub fn write_pointset<T: Scalar, W: Write>(
    out: W,
    data: &LabeledPointSet<T>,
    scores: Option<&[T]>,
) -> Result<()> {
    if let Some(s) = scores {
        if s.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                actual: s.len(),
            });
        }
    }
    let dim = data.points.dim();
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..dim).map(|d| format!("f{d}")));
    header.push("label".into());
    if scores.is_some() {
        header.push("score".into());
    }
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in data.points.rows().enumerate() {
        record.clear();
        record.push(data.points.ids()[i].to_string());
        record.extend(row.iter().map(|x| x.to_string()));
        record.push(data.labels()[i].to_string());
        if let Some(s) = scores {
            record.push(s[i].to_string());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}

/// Writes `id,density`.
pub fn write_density<T: Scalar, W: Write>(out: W, ids: &[u64], field: &DensityField<T>) -> Result<()> {
    if ids.len() != field.values.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            actual: field.values.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["id", "density"])?;
    for (id, d) in ids.iter().zip(&field.values) {
        wtr.write_record([id.to_string(), d.to_string()])?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
