//! CSV and JSON files.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// A series from a CSV with a `value` column and optionally a `t` column,
/// which only fixes the order.
pub fn read_series(path: &Path) -> CliResult<Vec<f64>> {
    let file = File::open(path).map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let bad = |msg: String| CliError::data(format!("{}: {msg}", path.display()));
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let (vi, ti) = match names.as_slice() {
        ["value"] => (0, None),
        ["t", "value"] => (1, Some(0)),
        ["value", "t"] => (0, Some(1)),
        _ => return Err(bad(format!("expected columns 'value' or 't,value', found {names:?}"))),
    };
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize, what: &str| -> CliResult<f64> {
            let s = rec.get(j).unwrap_or("");
            s.parse::<f64>().map_err(|_| bad(format!("row {}: {what} '{s}' is not a number", i + 1)))
        };
        let v = num(vi, "value")?;
        let t = match ti {
            Some(j) => num(j, "t")?,
            None => i as f64,
        };
        rows.push((t, v));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(bad("duplicate t values".into()));
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

/// A CSV file written row by row.
pub struct Table {
    w: csv::Writer<File>,
    path: String,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let w = csv::Writer::from_path(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        let mut t = Table { w, path: path.display().to_string() };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> CliResult<()> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.w.write_record(&fields).map_err(|e| CliError::io(format!("{}: {e}", self.path)))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.w.flush().map_err(|e| CliError::io(format!("{}: {e}", self.path)))
    }
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::io(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str, body: &str) -> std::path::PathBuf {
        let p = std::env::temp_dir().join(format!("mtd-io-{}-{name}", std::process::id()));
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn t_column_orders_rows() {
        let p = tmp("t.csv", "t,value\n3,30\n1,10\n2,20\n");
        assert_eq!(read_series(&p).unwrap(), vec![10.0, 20.0, 30.0]);
        let p = tmp("v.csv", "value\n1.5\n-2\n");
        assert_eq!(read_series(&p).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn malformed_series_are_data_errors() {
        for body in ["x\n1\n", "value\n1\nabc\n", "t,value\n1,2\n1,3\n"] {
            let e = read_series(&tmp("bad.csv", body)).unwrap_err();
            assert_eq!(e.kind, crate::error::Kind::Data, "{body}");
        }
    }
}
