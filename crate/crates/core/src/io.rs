//! Whitespace-separated columnar text files with a `#`-prefixed header line.
//! Numbers are written in shortest round-trip form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub fn write_table<W: Write>(w: &mut W, headers: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(w, "# {}", headers.join(" "))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // normalizes -0
        "0e0".to_string()
    } else {
        format!("{v:e}")
    }
}

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table<R: BufRead>(r: R) -> Result<Table> {
    let mut headers = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(h) = trimmed.strip_prefix('#') {
            if headers.is_empty() {
                headers = h.split_whitespace().map(str::to_string).collect();
            }
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {tok:?}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if !headers.is_empty() && row.len() != headers.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} columns, found {}",
                lineno + 1,
                headers.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_roundtrip_is_exact() {
        let rows = vec![vec![0.1, -1.0 / 3.0, 1e-300], vec![f64::MAX, -0.0, 2.5]];
        let mut buf = Vec::new();
        write_table(&mut buf, &["a", "b", "c"], &rows).unwrap();
        let t = read_table(buf.as_slice()).unwrap();
        assert_eq!(t.headers, vec!["a", "b", "c"]);
        assert_eq!(t.rows[0], rows[0]);
        assert_eq!(t.rows[1][0], f64::MAX);
        assert_eq!(t.column("c").unwrap(), vec![1e-300, 2.5]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "# a b\n1 2\n3\n";
        assert!(read_table(text.as_bytes()).is_err());
    }
}
