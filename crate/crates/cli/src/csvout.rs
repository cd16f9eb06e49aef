//! Deterministic CSV emission.
//!
//! One header line, one line per row, comma separators, LF endings,
//! UTF-8. Floats are printed in scientific notation with nine significant
//! digits, so identical inputs always produce byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Nine significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn fmt_usize(x: usize) -> String {
    x.to_string()
}

pub fn fmt_u64(x: u64) -> String {
    x.to_string()
}

pub fn fmt_bool(x: bool) -> String {
    x.to_string()
}

/// Render header and rows to a CSV string (LF line endings).
pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "ragged CSV row");
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write CSV to `path`, or to stdout when no path is given.
pub fn export_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let text = render_csv(header, rows);
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            w.write_all(text.as_bytes())?;
            w.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_for_empty_rows() {
        assert_eq!(render_csv(&["a", "b"], &[]), "a,b\n");
    }

    #[test]
    fn rows_join_with_lf() {
        let rows = vec![vec!["1".to_string(), "2".to_string()]];
        assert_eq!(render_csv(&["a", "b"], &rows), "a,b\n1,2\n");
    }

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_f64(3.0), "3.00000000e0");
        assert_eq!(fmt_f64(0.0), "0.00000000e0");
        assert_eq!(fmt_f64(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(fmt_f64(-1.5e9), "-1.50000000e9");
    }
}
