//! Minimal CSV with `#` metadata comments: deterministic writer and strict
//! reader. Floats are written with Rust's shortest round-trip formatting,
//! so writing and re-reading reproduces the exact bit pattern and repeated
//! runs produce byte-identical files.

use crate::error::ensure;
use crate::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};

/// Write a numeric table: `# key = value` comment lines, one header line,
/// then one line per row.
pub fn write_table<W: Write>(
    mut w: W,
    comments: &[(String, String)],
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    ensure!(!columns.is_empty(), "columns", "need at least one column");
    for (key, value) in comments {
        writeln!(w, "# {key} = {value}")?;
    }
    writeln!(w, "{}", columns.join(","))?;
    for (i, row) in rows.iter().enumerate() {
        ensure!(
            row.len() == columns.len(),
            "rows",
            format!("row {i} has {} fields, expected {}", row.len(), columns.len())
        );
        let mut line = String::new();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parsed CSV: header names, numeric rows, and the `#` comment lines (with
/// the marker stripped) in file order.
pub struct Table {
    /// Column names from the header line.
    pub columns: Vec<String>,
    /// Data rows, one `Vec<f64>` per line.
    pub rows: Vec<Vec<f64>>,
    /// Comment lines without the leading `#`, trimmed.
    pub comments: Vec<String>,
}

/// Read a table written by [`write_table`] (or any CSV of floats with an
/// optional `#` comment prologue). Returns `(columns, rows, comments)`.
pub fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<String>)> {
    let t = read_table_struct(r)?;
    Ok((t.columns, t.rows, t.comments))
}

/// As [`read_table`], returning the named struct.
pub fn read_table_struct<R: Read>(r: R) -> Result<Table> {
    let reader = BufReader::new(r);
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut comments = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            comments.push(rest.trim().to_string());
            continue;
        }
        match &columns {
            None => {
                columns = Some(trimmed.split(',').map(|c| c.trim().to_string()).collect());
            }
            Some(cols) => {
                let fields: Vec<&str> = trimmed.split(',').collect();
                if fields.len() != cols.len() {
                    return Err(Error::CsvParse {
                        line: line_no,
                        message: format!(
                            "expected {} fields, found {}",
                            cols.len(),
                            fields.len()
                        ),
                    });
                }
                let mut row = Vec::with_capacity(fields.len());
                for f in fields {
                    let v: f64 = f.trim().parse().map_err(|_| Error::CsvParse {
                        line: line_no,
                        message: format!("not a number: {:?}", f.trim()),
                    })?;
                    row.push(v);
                }
                rows.push(row);
            }
        }
    }
    let columns = columns.ok_or(Error::CsvParse {
        line: 0,
        message: "no header line found".into(),
    })?;
    Ok(Table {
        columns,
        rows,
        comments,
    })
}
