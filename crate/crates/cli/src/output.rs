//! Run artifacts: tables, summaries and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// A CSV table with a one-line description of its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub description: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl Cell {
    /// Shortest round-trip form, so identical values give identical bytes.
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl Table {
    pub fn new(name: &str, description: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            description: description.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, description: &str, columns: Vec<String>) -> Self {
        Table { name: name.to_string(), description: description.to_string(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    /// `# description` line, header row, then data rows.
    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut buf = format!("# {}\n", self.description).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::io(&self.name, std::io::Error::other(e));
            w.write_record(&self.columns).map_err(fail)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::io(&self.name, e))?;
        }
        Ok(buf)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(path, e.into()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_table(dir: &Path, table: &Table) -> CliResult<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    write_atomic(&path, &table.to_bytes()?)?;
    Ok(path)
}

/// Reads a table written by [`write_table`]: skips the description line and
/// returns the header and the rows as strings.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let body = text.split_once('\n').map_or("", |(_, rest)| rest);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let fail = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    let header = r.headers().map_err(fail)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(fail)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", "t: time, x: value", &["t", "x", "ok"]);
        t.push(vec![0.1.into(), (1.0 / 3.0).into(), true.into()]);
        t.push(vec![2.0.into(), f64::MIN_POSITIVE.into(), false.into()]);
        let path = write_table(dir.path(), &t).unwrap();
        let (header, rows) = read_table(&path).unwrap();
        assert_eq!(header, ["t", "x", "ok"]);
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(rows[1][1].parse::<f64>().unwrap(), f64::MIN_POSITIVE);
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("# t: time"));
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
