//! CSV formats: paired data (`x,y`), shuffle strips
//! (`x_lo,width,y_lo,orientation`) and checkerboard mass matrices
//! (`m` header-less rows of `m` masses).

use std::fs::File;
use std::path::Path;

use crate::copula::{Checkerboard, Orientation, Segment};
use crate::error::{Error, Result};
use crate::sample::PairedSample;

pub const SHUFFLE_HEADER: [&str; 4] = ["x_lo", "width", "y_lo", "orientation"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn reader(path: &Path, headers: bool) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: usize) -> Result<T> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        position: line,
        message: format!("line {line}: cannot parse field {} ('{raw}')", k + 1),
    })
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| io_err(path, format!("missing column '{name}' in header")))
}

/// Reads a CSV with a header containing columns `x` and `y`.
pub fn read_pairs_csv(path: &Path) -> Result<PairedSample> {
    let mut rdr = reader(path, true)?;
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let (ix, iy) = (column_index(&headers, "x", path)?, column_index(&headers, "y", path)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        xs.push(field(&rec, ix, k + 2)?);
        ys.push(field(&rec, iy, k + 2)?);
    }
    PairedSample::new(xs, ys)
}

pub fn write_pairs_csv(path: &Path, sample: &PairedSample) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["x", "y"]).map_err(|e| io_err(path, e))?;
    for (x, y) in sample.xs().iter().zip(sample.ys()) {
        w.write_record([x.to_string(), y.to_string()])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads shuffle strips; orientation is `+1` (increasing) or `-1` (decreasing).
pub fn read_shuffle_csv(path: &Path) -> Result<Vec<Segment>> {
    let mut rdr = reader(path, true)?;
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let idx = SHUFFLE_HEADER
        .iter()
        .map(|name| column_index(&headers, name, path))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let line = k + 2;
        let sign: i64 = field(&rec, idx[3], line)?;
        let orientation = Orientation::from_sign(sign).ok_or_else(|| Error::Parse {
            position: line,
            message: format!("line {line}: orientation must be +1 or -1, got {sign}"),
        })?;
        out.push(Segment {
            x_lo: field(&rec, idx[0], line)?,
            width: field(&rec, idx[1], line)?,
            y_lo: field(&rec, idx[2], line)?,
            orientation,
        });
    }
    Ok(out)
}

pub fn write_shuffle_csv(path: &Path, segments: &[Segment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(SHUFFLE_HEADER).map_err(|e| io_err(path, e))?;
    for s in segments {
        let sign = format!("{:+}", s.orientation.sign());
        w.write_record([s.x_lo.to_string(), s.width.to_string(), s.y_lo.to_string(), sign])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_checkerboard_csv(path: &Path) -> Result<Checkerboard> {
    let mut rdr = reader(path, false)?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = (0..rec.len())
            .map(|c| field(&rec, c, k + 1))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Checkerboard::from_rows(&rows)
}

pub fn write_checkerboard_csv(path: &Path, cb: &Checkerboard) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    for row in cb.rows() {
        w.write_record(row.iter().map(f64::to_string))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::ShuffleOfMin;

    #[test]
    fn shuffle_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = ShuffleOfMin::from_permutation(&[2, 0, 1], &[false, true, false]).unwrap();
        write_shuffle_csv(&path, &s.segments()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x_lo,width,y_lo,orientation\n"));
        assert!(text.contains(",-1\n"));
        assert_eq!(read_shuffle_csv(&path).unwrap(), s.segments());
    }

    #[test]
    fn checkerboard_and_pairs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.csv");
        let cb = Checkerboard::from_rows(&[vec![0.3125, 0.1875], vec![0.1875, 0.3125]]).unwrap();
        write_checkerboard_csv(&path, &cb).unwrap();
        assert_eq!(read_checkerboard_csv(&path).unwrap(), cb);

        let path = dir.path().join("xy.csv");
        let sample = PairedSample::from_pairs(&[(0.1, 1.0 / 3.0), (2.5, -7.0)]).unwrap();
        write_pairs_csv(&path, &sample).unwrap();
        assert_eq!(read_pairs_csv(&path).unwrap(), sample);
    }

    #[test]
    fn bad_rows_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,y\n1,2\n3,oops\n").unwrap();
        assert!(matches!(read_pairs_csv(&path), Err(Error::Parse { position: 3, .. })));
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_pairs_csv(&path), Err(Error::Io { .. })));
    }
}
