use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Destination for reports: files under the run directory, if one was
/// given, and a summary on stdout unless quiet.
pub struct Output {
    dir: Option<PathBuf>,
    quiet: bool,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, quiet: bool) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)
                .map_err(|e| CliError::Config(format!("{}: {e}", d.display())))?;
        }
        Ok(Output { dir, quiet })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(std::io::stdout(), "{}", line.as_ref());
        }
    }

    /// Writes `name` as pretty JSON, or prints it when there is no run
    /// directory.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("serialising {name}: {e}")))?;
        text.push('\n');
        match &self.dir {
            Some(d) => write(&d.join(name), &text),
            None => {
                if !self.quiet {
                    let _ = std::io::stdout().write_all(text.as_bytes());
                }
                Ok(())
            }
        }
    }

    /// Writes `name` as CSV with 17 significant digits; skipped without a
    /// run directory.
    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let Some(d) = &self.dir else {
            return Ok(());
        };
        write(&d.join(name), &csv_text(header, rows))
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))
}

pub fn csv_text(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if x.is_finite() {
                write!(out, "{x:.16e}").expect("write to string");
            } else {
                write!(out, "{x}").expect("write to string");
            }
        }
        out.push('\n');
    }
    out
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}
