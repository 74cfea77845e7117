//! Matrix CSV and JSON output with 17 significant digits.
//!
//! Matrix files are plain comma-separated numeric rows with no header.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// `x` in scientific notation with 17 significant digits, which round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        Error::Io(e.to_string())
    } else {
        Error::Parse(e.to_string())
    }
}

pub fn read_matrix_csv(reader: impl Read) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}, column {}: not a number: {f:?}", i + 1, j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Empty);
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(writer: impl Write, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| fmt_f64(m[(i, j)])))
            .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn matrix_to_csv_string(m: &DMatrix<f64>) -> String {
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, m).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct SigDigits(PrettyFormatter<'static>);

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON. Non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // serde_json writes non-finite floats as null before reaching the formatter
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits(PrettyFormatter::new()));
    v.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}
