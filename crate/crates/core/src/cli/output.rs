use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i8> for Cell {
    fn from(v: i8) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn render(c: &Cell) -> String {
    match c {
        Cell::F(v) => format_float(*v),
        Cell::I(v) => v.to_string(),
        Cell::S(s) => s.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Whitespace-separated with a commented header, for gnuplot.
    pub fn to_dat(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.header.join(" "));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(render).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Writes tables into the run directory and remembers what was written.
pub struct Sink {
    pub dir: PathBuf,
    pub dat: bool,
    pub written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path, dat: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            dat,
            written: Vec::new(),
        })
    }

    fn write_file(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io { path, source: e })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn table(&mut self, stem: &str, t: &Table) -> Result<(), CliError> {
        self.write_file(&format!("{stem}.csv"), &t.to_csv())?;
        if self.dat {
            self.write_file(&format!("{stem}.dat"), &t.to_dat())?;
        }
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &serde_json::Value) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(v).expect("json values serialize");
        body.push('\n');
        self.write_file(name, &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 2.5, -1.0 / 3.0, 1e-300, 6.02e23] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(2.5), "2.5000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["trial", "label", "A"]);
        t.push(vec![0usize.into(), "PM".into(), 1i8.into()]);
        assert_eq!(t.to_csv(), "trial,label,A\n0,PM,1\n");
        assert_eq!(t.to_dat(), "# trial label A\n0 PM 1\n");
    }
}
