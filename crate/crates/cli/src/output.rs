//! Report writers: every command leaves `report.json` and `report.csv` in
//! the output directory; simulate optionally adds `paths.csv`/`noise.csv`.

use serde::Serialize;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> io::Result<OutDir> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)
    }

    pub fn csv_writer(&self, name: &str) -> io::Result<csv::Writer<fs::File>> {
        Ok(csv::Writer::from_writer(fs::File::create(self.path(name))?))
    }
}

/// Shortest-roundtrip float formatting (deterministic across runs).
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
