//! Run directories: a manifest written before any result, CSV outputs, and a
//! separate timing file so that everything else is byte-stable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

pub const MANIFEST_SCHEMA: &str = "ri2d_manifest/1";

pub struct RunDir {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
    started_unix: f64,
}

impl RunDir {
    /// Creates `root/<subcommand>` and writes `manifest.json`.
    pub fn create(root: &Path, subcommand: &str, seed: u64, params: &BTreeMap<String, Value>) -> std::io::Result<Self> {
        let dir = root.join(subcommand);
        std::fs::create_dir_all(&dir)?;
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "subcommand": subcommand,
            "seed": seed,
            "params": params,
            "versions": {
                "ri2d": env!("CARGO_PKG_VERSION"),
                "ri2d-cli": env!("CARGO_PKG_VERSION"),
            },
        });
        let mut f = BufWriter::new(File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        writeln!(f)?;
        f.flush()?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Ok(RunDir { dir, files: Vec::new(), started: Instant::now(), started_unix })
    }

    pub fn file(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    /// Writes `timing.json` with wall time and worker count.
    pub fn finish(self, workers: usize) -> std::io::Result<PathBuf> {
        let timing = json!({
            "started_unix": self.started_unix,
            "wall_seconds": self.started.elapsed().as_secs_f64(),
            "workers": workers,
            "files": self.files,
        });
        let mut f = BufWriter::new(File::create(self.dir.join("timing.json"))?);
        serde_json::to_writer_pretty(&mut f, &timing)?;
        writeln!(f)?;
        f.flush()?;
        Ok(self.dir)
    }
}
