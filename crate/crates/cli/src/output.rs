use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::CliError;

/// Writes report files into one directory. Reports contain only results, so
/// reruns with the same inputs reproduce them byte for byte; wall-clock data
/// goes to `meta.json` alone.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

pub const META_FILE: &str = "meta.json";

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    args: &'a [String],
    version: &'a str,
    started: String,
    elapsed_seconds: f64,
    threads: usize,
    passed: bool,
    files: &'a [String],
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn meta(
        &self,
        command: &str,
        args: &[String],
        started: chrono::DateTime<chrono::Utc>,
        elapsed: Duration,
        passed: bool,
    ) -> Result<(), CliError> {
        let meta = Meta {
            command,
            args,
            version: env!("CARGO_PKG_VERSION"),
            started: started.to_rfc3339(),
            elapsed_seconds: elapsed.as_secs_f64(),
            threads: crate::jobs::threads(),
            passed,
            files: &self.written,
        };
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        std::fs::write(self.dir.join(META_FILE), text)?;
        Ok(())
    }
}
