//! Fingerprint store: a CSV file with header `X,Y,AP1,...,APn`, one
//! survey reading per row, no empty cells.
//!
//! Numbers are written with the shortest representation that parses back
//! to the same value, so save followed by load is lossless.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fingerprint::{Fingerprint, Position, RssVector, RSS_CEILING_DBM, RSS_FLOOR_DBM};
use crate::scalar::Scalar;

/// The bundled partial field survey: 15 readings from five APs.
pub const FIELD_SAMPLE_CSV: &str = include_str!("../data/field_sample.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintRecord<T> {
    pub x: T,
    pub y: T,
    pub ap_rss: Vec<T>,
}

impl<T: Scalar> FingerprintRecord<T> {
    pub fn new(x: T, y: T, ap_rss: Vec<T>) -> Self {
        Self { x, y, ap_rss }
    }

    pub fn to_fingerprint(&self) -> Result<Fingerprint<T>> {
        Ok(Fingerprint::new(
            Position::new(self.x, self.y)?,
            RssVector::from_slice(&self.ap_rss)?,
        ))
    }
}

impl<T: Scalar> From<&Fingerprint<T>> for FingerprintRecord<T> {
    fn from(fp: &Fingerprint<T>) -> Self {
        Self::new(fp.position.x(), fp.position.y(), fp.rss.to_vec())
    }
}

pub fn header_for(ap_count: usize) -> String {
    let mut header = String::from("X,Y");
    for i in 1..=ap_count {
        header.push_str(&format!(",AP{i}"));
    }
    header
}

fn uniform_width<T>(records: &[FingerprintRecord<T>]) -> Result<usize> {
    let width = records.first().map_or(0, |r| r.ap_rss.len());
    if let Some(bad) = records.iter().find(|r| r.ap_rss.len() != width) {
        return Err(Error::Shape {
            expected: width,
            got: bad.ap_rss.len(),
        });
    }
    Ok(width)
}

fn write_row<T: Scalar, W: Write>(out: &mut W, record: &FingerprintRecord<T>) -> Result<()> {
    write!(out, "{},{}", record.x, record.y)?;
    for v in &record.ap_rss {
        write!(out, ",{v}")?;
    }
    writeln!(out)?;
    Ok(())
}

/// Writes header and rows. An empty store has no known width; its header
/// uses `ap_count`.
pub fn write_store<T: Scalar, W: Write>(out: W, records: &[FingerprintRecord<T>], ap_count: usize) -> Result<()> {
    let width = if records.is_empty() {
        ap_count
    } else {
        uniform_width(records)?
    };
    if width != ap_count {
        return Err(Error::Shape {
            expected: ap_count,
            got: width,
        });
    }
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", header_for(width))?;
    for record in records {
        write_row(&mut out, record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_store<T: Scalar>(records: &[FingerprintRecord<T>], ap_count: usize, path: impl AsRef<Path>) -> Result<()> {
    // Validate before truncating the destination.
    if !records.is_empty() && uniform_width(records)? != ap_count {
        return Err(Error::Shape {
            expected: ap_count,
            got: records[0].ap_rss.len(),
        });
    }
    write_store(File::create(path)?, records, ap_count)
}

/// Appends one record, creating the file with a header if it does not exist.
pub fn append_record<T: Scalar>(path: impl AsRef<Path>, record: &FingerprintRecord<T>) -> Result<()> {
    let path = path.as_ref();
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    if fresh {
        writeln!(buf, "{}", header_for(record.ap_rss.len()))?;
    }
    write_row(&mut buf, record)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Parses and validates a store. Coordinates must be finite; RSS values
/// must be finite and are clamped to the valid dBm range.
pub fn read_store<T: Scalar, R: Read>(source: R) -> Result<Vec<FingerprintRecord<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(row) => row?,
        None => {
            return Err(Error::Schema {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let ap_count = check_header(&header)?;
    let width = ap_count + 2;
    let (floor, ceiling) = (T::lit(RSS_FLOOR_DBM), T::lit(RSS_CEILING_DBM));

    let mut records = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != width {
            return Err(Error::Schema {
                line,
                message: format!("expected {width} columns, found {}", row.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (column, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::NullViolation {
                    line,
                    column: column_name(column),
                });
            }
            let value: T = cell.parse().map_err(|_| Error::Parse {
                line,
                column: column + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: column + 1,
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(value);
        }
        let ap_rss = values[2..]
            .iter()
            .map(|&v| v.max(floor).min(ceiling) + T::zero())
            .collect();
        records.push(FingerprintRecord::new(values[0], values[1], ap_rss));
    }
    Ok(records)
}

pub fn load_store<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<FingerprintRecord<T>>> {
    read_store(BufReader::new(File::open(path)?))
}

/// Number of AP columns declared by a store header.
pub fn read_ap_count<R: Read>(source: R) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    match reader.records().next() {
        Some(row) => check_header(&row?),
        None => Err(Error::Schema {
            line: 1,
            message: "missing header".into(),
        }),
    }
}

fn column_name(column: usize) -> String {
    match column {
        0 => "X".into(),
        1 => "Y".into(),
        n => format!("AP{}", n - 1),
    }
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    let schema_error = |message: String| Error::Schema { line: 1, message };
    if header.len() < 3 {
        return Err(schema_error(format!(
            "header needs X, Y and at least one AP column, found {} columns",
            header.len()
        )));
    }
    for (i, name) in header.iter().enumerate() {
        let expected = column_name(i);
        if name != expected {
            return Err(schema_error(format!(
                "column {} is `{name}`, expected `{expected}`",
                i + 1
            )));
        }
    }
    Ok(header.len() - 2)
}

pub fn to_fingerprints<T: Scalar>(records: &[FingerprintRecord<T>]) -> Result<Vec<Fingerprint<T>>> {
    records.iter().map(FingerprintRecord::to_fingerprint).collect()
}

/// The bundled field sample as records.
pub fn field_sample<T: Scalar>() -> Vec<FingerprintRecord<T>> {
    read_store(FIELD_SAMPLE_CSV.as_bytes()).expect("bundled field sample is well formed")
}
