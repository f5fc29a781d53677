//! Comma-separated output with a header row, LF line endings and 12
//! significant digits per value.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Scientific notation with 12 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn render(headers: &[&str], columns: &[&[f64]]) -> String {
    assert_eq!(headers.len(), columns.len(), "one header per column");
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
    let mut s = headers.join(",");
    s.push('\n');
    for r in 0..rows {
        for (k, c) in columns.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str(&format_value(c[r]));
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<PathBuf> {
    write_text(path, &render(headers, columns))
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Table> {
    let err = |line: usize, message: String| CliError::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(err(1, "empty file".into()));
    };
    let headers: Vec<String> = header.split(',').map(|h| h.trim().to_string()).collect();
    if headers.iter().any(|h| h.is_empty()) {
        return Err(err(1, "empty column name in header".into()));
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(err(
                idx + 1,
                format!("expected {} fields, found {}", headers.len(), fields.len()),
            ));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| err(idx + 1, format!("not a number: `{}`", f.trim())))?;
            col.push(v);
        }
    }
    Ok(Table { headers, columns })
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(6131.4), "6.13140000000e3");
        assert_eq!(format_value(-0.000123456789012345), "-1.23456789012e-4");
        let x = std::f64::consts::PI * 1e5;
        let back: f64 = format_value(x).parse().unwrap();
        assert!((back / x - 1.0).abs() < 5e-12);
    }

    #[test]
    fn round_trip() {
        let t = [0.0, 2.5, 5.0];
        let v = [1.0, 0.5, 1.0 / 3.0];
        let text = render(&["t", "n_q"], &[&t, &v]);
        assert!(text.starts_with("t,n_q\n") && !text.contains('\r'));
        let table = parse_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(table.rows(), 3);
        for (a, b) in table.column("n_q").unwrap().iter().zip(v) {
            assert!((a - b).abs() <= 1e-11 * b.abs());
        }
    }

    #[test]
    fn malformed_rows_report_line() {
        let e = parse_csv("t,x\n1,2\n3\n", Path::new("f.csv")).unwrap_err();
        assert!(matches!(e, CliError::Csv { line: 3, .. }), "{e}");
        let e = parse_csv("t,x\n1,abc\n", Path::new("f.csv")).unwrap_err();
        assert!(matches!(e, CliError::Csv { line: 2, .. }));
        assert!(parse_csv("", Path::new("f.csv")).is_err());
    }
}
