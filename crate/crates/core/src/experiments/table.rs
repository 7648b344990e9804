//! Result tables and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }

    pub fn header(&self) -> String {
        format!("{}[{}]", self.name, self.unit)
    }
}

/// Numeric table with per-row failure notes. A failed row holds NaN cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    /// `key=value` lines written as leading comments.
    pub metadata: Vec<(String, String)>,
    /// `(row index, message)` for rows whose evaluation failed.
    pub failures: Vec<(usize, String)>,
    /// Wall-clock run time (s); not written to the CSV so reruns stay
    /// byte-identical.
    pub wall_time: f64,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "row of {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name)
            .map(|i| self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={}\n", one_line(v)));
        }
        for (row, msg) in &self.failures {
            out.push_str(&format!("# failed row={row}: {}\n", one_line(msg)));
        }
        let header: Vec<String> = self.columns.iter().map(Column::header).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Writes the table as CSV: `#` metadata lines, a `name[unit]` header and
/// one line per row in shortest round-trip scientific notation.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(table.to_csv_string().as_bytes())?;
    file.flush()?;
    Ok(())
}

/// Reads back a table written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<ResultTable> {
    let mut table = ResultTable::default();
    let mut header_seen = false;
    for (no, line) in text.lines().enumerate() {
        let bad = |m: &str| Error::Config(format!("csv line {}: {m}", no + 1));
        if let Some(comment) = line.strip_prefix("# ") {
            if let Some(rest) = comment.strip_prefix("failed row=") {
                let (row, msg) = rest
                    .split_once(": ")
                    .ok_or_else(|| bad("malformed failure note"))?;
                table.failures.push((
                    row.parse().map_err(|_| bad("bad row index"))?,
                    msg.to_string(),
                ));
            } else {
                let (k, v) = comment
                    .split_once('=')
                    .ok_or_else(|| bad("malformed metadata"))?;
                table.metadata.push((k.to_string(), v.to_string()));
            }
        } else if !header_seen {
            header_seen = true;
            for cell in line.split(',').filter(|c| !c.is_empty()) {
                let (name, unit) = cell
                    .strip_suffix(']')
                    .and_then(|c| c.split_once('['))
                    .ok_or_else(|| bad("header cell without [unit]"))?;
                table.columns.push(Column::new(name, unit));
            }
        } else {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|_| bad("non-numeric cell")))
                .collect::<Result<Vec<_>>>()?;
            table
                .push_row(row)
                .map_err(|_| bad("wrong number of cells"))?;
        }
    }
    if !header_seen {
        return Err(Error::Config("csv has no header".into()));
    }
    Ok(table)
}
