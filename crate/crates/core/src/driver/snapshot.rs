//! Column-oriented CSV snapshots with `#`-prefixed metadata lines.
//!
//! ```text
//! # model = thinfilm
//! # step = 100
//! j,x,h,k,lambda,epsilon,lambda_c,e
//! 0,0e0,3.4e-1,0,0e0,...
//! ```
//!
//! Floats are written with Rust's shortest round-trip exponent format, so a
//! loaded snapshot is bitwise equal to the one written.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{MarsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Int(Vec<i64>),
    Float(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Int(v) => v.len(),
            ColumnData::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values as floats regardless of storage.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            ColumnData::Int(v) => v.iter().map(|&x| x as f64).collect(),
            ColumnData::Float(v) => v.clone(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            ColumnData::Int(v) => v[row].to_string(),
            ColumnData::Float(v) => format!("{:e}", v[row]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotColumn {
    pub name: String,
    pub data: ColumnData,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    /// Ordered `key = value` header lines.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<SnapshotColumn>,
}

impl Snapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_owned(), value.to_string()));
        self
    }

    /// Float metadata, written in round-trip form.
    pub fn meta_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, format!("{value:e}"))
    }

    pub fn push_int(&mut self, name: &str, values: Vec<i64>) -> &mut Self {
        self.columns.push(SnapshotColumn {
            name: name.to_owned(),
            data: ColumnData::Int(values),
        });
        self
    }

    pub fn push_float(&mut self, name: &str, values: Vec<f64>) -> &mut Self {
        self.columns.push(SnapshotColumn {
            name: name.to_owned(),
            data: ColumnData::Float(values),
        });
        self
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_meta_f64(&self, key: &str) -> Option<f64> {
        self.get_meta(key)?.parse().ok()
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns.iter().find(|c| c.name == name).map(|c| &c.data)
    }

    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name).map(ColumnData::to_f64)
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows = self.rows();
        if let Some(c) = self.columns.iter().find(|c| c.data.len() != rows) {
            return Err(MarsError::Config(format!(
                "column `{}` has {} rows, expected {rows}",
                c.name,
                c.data.len()
            )));
        }
        let mut out = String::new();
        for (k, v) in &self.metadata {
            if k.contains('=') || k.contains('\n') || v.contains('\n') {
                return Err(MarsError::Config(format!("metadata `{k}` cannot be written")));
            }
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for row in 0..rows {
            let cells: Vec<String> = self.columns.iter().map(|c| c.data.cell(row)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| MarsError::Config(format!("snapshot line {}: {msg}", line + 1));
        let mut snap = Snapshot::new();
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(MarsError::Config("snapshot has no header row".into())),
                Some((i, line)) => {
                    if let Some(rest) = line.strip_prefix('#') {
                        let (k, v) = rest.split_once('=').ok_or_else(|| bad(i, "metadata without `=`"))?;
                        snap.metadata.push((k.trim().to_owned(), v.trim().to_owned()));
                    } else {
                        break line;
                    }
                }
            }
        };
        let names: Vec<&str> = header.split(',').collect();
        let mut cells: Vec<Vec<&str>> = vec![Vec::new(); names.len()];
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let row: Vec<&str> = line.split(',').collect();
            if row.len() != names.len() {
                return Err(bad(i, "wrong number of cells"));
            }
            for (c, v) in row.into_iter().enumerate() {
                cells[c].push(v);
            }
        }
        for (name, raw) in names.into_iter().zip(cells) {
            // floats always carry an exponent; plain integers never do
            let is_int = raw.iter().all(|v| v.parse::<i64>().is_ok());
            let data = if is_int {
                ColumnData::Int(raw.iter().map(|v| v.parse().expect("checked")).collect())
            } else {
                ColumnData::Float(
                    raw.iter()
                        .map(|v| v.parse::<f64>().map_err(|_| MarsError::Config(format!("bad number `{v}` in `{name}`"))))
                        .collect::<Result<_>>()?,
                )
            };
            snap.columns.push(SnapshotColumn {
                name: name.to_owned(),
                data,
            });
        }
        Ok(snap)
    }

    /// Write through a temporary file in the same directory, then rename.
    pub fn write_atomic(&self, path: &Path) -> Result<Vec<u8>> {
        let bytes = self.to_csv()?.into_bytes();
        write_atomic(path, &bytes)?;
        Ok(bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| MarsError::io(path, e))?;
        Self::parse(&text)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(|e| MarsError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| MarsError::io(&tmp, e))?;
    file.sync_all().map_err(|e| MarsError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| MarsError::io(path, e))
}
