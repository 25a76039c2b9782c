//! Matrix files and deterministic text output.
//!
//! Matrix file layout, chosen by extension:
//!
//! * `.csv`: first line `rows,cols`, then one comma-separated line per row;
//! * `.bin`: first line `rows cols` in ASCII, then `rows·cols` little-endian
//!   `f64` values in row-major order.
//!
//! Every float written by this crate, in JSON or CSV, uses `{:.16e}`: 17
//! significant digits, which round-trips `f64` exactly and is byte-stable.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with every float printed by [`fmt_f64`].
pub struct FixedFloatFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedFloatFormatter<'_> {
    fn default() -> Self {
        FixedFloatFormatter { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Header line plus one line per row, floats via [`fmt_f64`].
pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn format_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {msg}", path.display()))
}

fn parse_shape(path: &Path, line: &str, sep: impl Fn(char) -> bool) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split(sep).map(str::trim).filter(|s| !s.is_empty()).collect();
    match parts.as_slice() {
        [r, c] => match (r.parse(), c.parse()) {
            (Ok(r), Ok(c)) => Ok((r, c)),
            _ => Err(format_err(path, format!("bad shape header `{line}`"))),
        },
        _ => Err(format_err(path, format!("bad shape header `{line}`"))),
    }
}

fn is_bin(path: &Path) -> Result<bool> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(false),
        Some("bin") => Ok(true),
        _ => Err(format_err(path, "unknown matrix format; use .csv or .bin")),
    }
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let bin = is_bin(path)?;
    let bytes = fs::read(path)?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| format_err(path, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| format_err(path, "header is not ASCII"))?;
    let body = &bytes[nl + 1..];
    if bin {
        let (r, c) = parse_shape(path, header, char::is_whitespace)?;
        if body.len() != r * c * 8 {
            return Err(format_err(path, format!("expected {} payload bytes, found {}", r * c * 8, body.len())));
        }
        let vals: Vec<f64> = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        Ok(DMatrix::from_row_slice(r, c, &vals))
    } else {
        let (r, c) = parse_shape(path, header, |ch| ch == ',')?;
        let text = std::str::from_utf8(body).map_err(|_| format_err(path, "payload is not UTF-8"))?;
        let mut vals = Vec::with_capacity(r * c);
        let mut nrows = 0;
        for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: Vec<&str> = line.split(',').collect();
            if row.len() != c {
                return Err(format_err(path, format!("line {} has {} fields, expected {c}", k + 2, row.len())));
            }
            for f in row {
                vals.push(f.trim().parse::<f64>().map_err(|_| format_err(path, format!("bad number `{f}` on line {}", k + 2)))?);
            }
            nrows += 1;
        }
        if nrows != r {
            return Err(format_err(path, format!("expected {r} rows, found {nrows}")));
        }
        Ok(DMatrix::from_row_slice(r, c, &vals))
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, encode_matrix(path, m)?)?;
    Ok(())
}

/// File contents for `m` in the format `path`'s extension selects.
pub fn encode_matrix(path: &Path, m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let bin = is_bin(path)?;
    let (r, c) = m.shape();
    let mut out = Vec::new();
    if bin {
        writeln!(out, "{r} {c}")?;
        for i in 0..r {
            for j in 0..c {
                out.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
    } else {
        writeln!(out, "{r},{c}")?;
        for i in 0..r {
            let row: Vec<String> = (0..c).map(|j| fmt_f64(m[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(out)
}

/// A vector stored as either a single row or a single column.
pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    match m.shape() {
        (_, 1) => Ok(m.column(0).into_owned()),
        (1, _) => Ok(m.row(0).transpose()),
        (r, c) => Err(format_err(path, format!("expected a vector, found a {r}x{c} matrix"))),
    }
}
