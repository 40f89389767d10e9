//! Output formats: 17-significant-digit floats, CSV tables, two-column plot
//! files and the text matrix format.

use std::io::Read;
use std::path::Path;

use freeness_lab_core::{c64, ComplexMatrix};
use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};

/// `x` with 17 significant digits in scientific notation. Non-finite values
/// print as `NaN`, `inf` and `-inf`, which `str::parse::<f64>` reads back.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `serialize_with` adaptor for [`fmt_f64`].
pub fn f17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_f64(*x))
}

/// `serialize_with` adaptor for optional floats; `None` is an empty field.
pub fn f17_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&fmt_f64(*v)),
        None => s.serialize_str(""),
    }
}

/// Serializes rows as CSV with a header line.
pub fn write_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| LabError::Pool(e.to_string()))
}

/// Reads a CSV file whose header must equal `header` exactly.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(LabError::Schema {
            path: path.to_path_buf(),
            reason: format!("expected columns [{}], found [{}]", header.join(","), found.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        rows.push(rec.map_err(|e| LabError::Schema {
            path: path.to_path_buf(),
            reason: format!("row {}: {e}", i + 1),
        })?);
    }
    Ok(rows)
}

/// Two-column TSV for plotting, with a `# x\ty` comment header.
pub fn write_tsv(x_label: &str, y_label: &str, points: &[(f64, f64)]) -> Vec<u8> {
    let mut s = format!("# {x_label}\t{y_label}\n");
    for (x, y) in points {
        s.push_str(&fmt_f64(*x));
        s.push('\t');
        s.push_str(&fmt_f64(*y));
        s.push('\n');
    }
    s.into_bytes()
}

/// Text matrix format: a header line `n=<dim>`, then one line
/// `<row> <col> <re> <im>` per entry, row-major, with 1-based indices.
pub fn write_matrix(m: &ComplexMatrix) -> String {
    let n = m.dim();
    let mut s = format!("n={n}\n");
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            s.push_str(&format!("{} {} {} {}\n", i + 1, j + 1, fmt_f64(z.re), fmt_f64(z.im)));
        }
    }
    s
}

/// Parses the text matrix format. Entries may appear in any order; missing
/// entries are zero and repeated entries are an error.
pub fn read_matrix(mut input: impl Read) -> Result<ComplexMatrix> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| LabError::io("<matrix>", e))?;
    let bad = |line: usize, reason: String| LabError::Config {
        path: "<matrix>".into(),
        line,
        field: "matrix".into(),
        reason,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| bad(1, "missing `n=` header".into()))?;
    let n: usize = header
        .trim()
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad(hl + 1, format!("bad header {header:?}")))?;
    let mut entries = vec![c64::new(0.0, 0.0); n * n];
    let mut seen = vec![false; n * n];
    for (i, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(i + 1, "expected `<row> <col> <re> <im>`".into()));
        }
        let idx = |s: &str| -> Option<usize> { s.parse::<usize>().ok().filter(|&v| v >= 1 && v <= n) };
        let (Some(r), Some(c)) = (idx(f[0]), idx(f[1])) else {
            return Err(bad(i + 1, format!("index out of range 1..={n}")));
        };
        let (Ok(re), Ok(im)) = (f[2].parse::<f64>(), f[3].parse::<f64>()) else {
            return Err(bad(i + 1, "unparsable value".into()));
        };
        let k = (r - 1) * n + (c - 1);
        if seen[k] {
            return Err(bad(i + 1, format!("entry ({r}, {c}) repeated")));
        }
        seen[k] = true;
        entries[k] = c64::new(re, im);
    }
    Ok(ComplexMatrix::from_row_major(&entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert!(fmt_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
        assert_eq!(fmt_f64(f64::NEG_INFINITY).parse::<f64>().unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn matrix_round_trip() {
        let m = ComplexMatrix::from_fn(3, |i, j| c64::new(i as f64 + 0.1, j as f64 / 3.0)).unwrap();
        let text = write_matrix(&m);
        assert!(text.starts_with("n=3\n1 1 "));
        assert_eq!(read_matrix(text.as_bytes()).unwrap(), m);
    }

    #[test]
    fn matrix_errors() {
        assert!(read_matrix("n=2\n0 1 1 0\n".as_bytes()).is_err());
        assert!(read_matrix("n=2\n1 1 1 0\n1 1 2 0\n".as_bytes()).is_err());
        assert!(read_matrix("2\n".as_bytes()).is_err());
        let sparse = read_matrix("n=2\n2 1 1.5 -1\n".as_bytes()).unwrap();
        assert_eq!(sparse.get(1, 0), c64::new(1.5, -1.0));
        assert_eq!(sparse.get(0, 0), c64::new(0.0, 0.0));
    }
}
