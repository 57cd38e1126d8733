use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV file with a fixed header.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let mut w = Self { path, out: BufWriter::new(file), columns: header.len() };
        w.line(&header.join(","))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.out, "{s}").map_err(|source| CliError::Io { path: self.path.clone(), source })
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        debug_assert_eq!(fields.len(), self.columns);
        self.line(&fields.join(","))
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.out.flush().map_err(|source| CliError::Io { path: self.path.clone(), source })?;
        Ok(self.path)
    }
}

/// Parses a grid given as `start:stop:count` (inclusive, evenly spaced) or a
/// comma-separated list. The token `rab` stands for `shell_radius` when one
/// is supplied. An empty string is an empty grid.
pub fn parse_grid(text: &str, shell_radius: Option<f64>) -> CliResult<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let value = |tok: &str| -> CliResult<f64> {
        let tok = tok.trim();
        if tok.eq_ignore_ascii_case("rab") {
            return shell_radius.ok_or_else(|| CliError::usage("`rab` needs a potential with a steady shell"));
        }
        tok.parse::<f64>().map_err(|_| CliError::usage(format!("bad grid value `{tok}`")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let (start, stop) = (value(start)?, value(stop)?);
            let n: usize = count.trim().parse().map_err(|_| CliError::usage(format!("bad grid count `{count}`")))?;
            Ok(match n {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            })
        }
        [_] => text.split(',').map(value).collect(),
        _ => Err(CliError::usage(format!("grid `{text}` is neither start:stop:count nor a list"))),
    }
}
