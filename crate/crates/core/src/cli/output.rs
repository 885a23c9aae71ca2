//! Tables and the single writer that puts them on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::scenario::Format;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.15e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A named table with `#` metadata lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), meta: Vec::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column `quantity,value` table.
    pub fn key_values(name: &str, pairs: &[(&str, f64)]) -> Self {
        let mut t = Table::new(name, &["quantity", "value"]);
        for (k, v) in pairs {
            t.push(vec![Cell::from(*k), Cell::Num(*v)]);
        }
        t
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = String::new();
                for (k, v) in &self.meta {
                    s.push_str(&format!("# {k}: {v}\n"));
                }
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let meta: serde_json::Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let v = json!({ "name": self.name, "meta": meta, "columns": self.columns, "rows": rows });
                let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Writes files into one directory, refusing to overwrite unless forced,
/// and removes what it wrote when asked to roll back.
pub struct Emitter {
    dir: PathBuf,
    force: bool,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, force: bool) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating output directory {}", dir.display()), e))?;
        Ok(Emitter { dir: dir.to_path_buf(), force, written: Vec::new() })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Fails if a target exists and overwriting was not requested.
    pub fn check_free(&self, files: &[String]) -> Result<()> {
        if self.force {
            return Ok(());
        }
        for f in files {
            let p = self.path(f);
            if p.exists() {
                return Err(Error::config("output", format!("{} exists; use --force to overwrite", p.display())));
            }
        }
        Ok(())
    }

    pub fn write(&mut self, file: &str, content: &str) -> Result<PathBuf> {
        let p = self.path(file);
        let mut f = fs::File::create(&p).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
        self.written.push(p.clone());
        f.write_all(content.as_bytes()).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
        Ok(p)
    }

    pub fn rollback(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
