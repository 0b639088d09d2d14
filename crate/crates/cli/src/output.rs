//! Command output: a report plus an optional data table, emitted as JSON,
//! CSV or aligned text.

use std::io::Write;

use collatz_koopman::report::format_number;
use collatz_koopman::Report;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        i64::try_from(v).map_or_else(|_| Cell::Text(v.to_string()), Cell::Int)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::from(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub report: Report,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Writes `out`; CSV carries the table when there is one, the checks otherwise.
pub fn emit(out: &Output, format: Format, w: &mut impl Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, out)?;
            writeln!(w)
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            match &out.table {
                Some(table) => {
                    csv.write_record(&table.columns)?;
                    for row in &table.rows {
                        csv.write_record(row.iter().map(Cell::render))?;
                    }
                }
                None => {
                    csv.write_record(["command", "check", "status", "measured", "tolerance"])?;
                    for row in out.report.csv_rows() {
                        csv.write_record(&row)?;
                    }
                }
            }
            csv.flush()
        }
        Format::Text => {
            if let Some(table) = &out.table {
                let rendered: Vec<Vec<String>> =
                    table.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
                let widths: Vec<usize> = (0..table.columns.len())
                    .map(|i| rendered.iter().map(|r| r[i].len()).chain([table.columns[i].len()]).max().unwrap_or(0))
                    .collect();
                let line = |cells: &[String]| {
                    cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
                };
                writeln!(w, "{}", line(&table.columns))?;
                for r in &rendered {
                    writeln!(w, "{}", line(r))?;
                }
                writeln!(w)?;
            }
            write!(w, "{}", out.report.to_text())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use collatz_koopman::Check;

    #[test]
    fn json_round_trip() {
        let mut report = Report::new("demo").param("k", 4);
        report.push(Check::within("residual", 0.1 + 0.2, 1.0));
        report.push(Check::info("missing", f64::NAN));
        let mut table = Table::new(&["n", "value", "name"]);
        table.push(vec![Cell::from(3u64), Cell::from(1.0 / 3.0), Cell::from("x")]);
        table.push(vec![Cell::from(u64::MAX), Cell::from(2.0), Cell::from("")]);
        let out = Output { report, table: Some(table) };
        let mut buf = Vec::new();
        emit(&out, Format::Json, &mut buf).unwrap();
        let back: Output = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn csv_has_header() {
        let out = Output { report: Report::new("demo"), table: None };
        let mut buf = Vec::new();
        emit(&out, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "command,check,status,measured,tolerance\n");
    }
}
