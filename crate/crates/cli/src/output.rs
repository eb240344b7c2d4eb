// SPDX-License-Identifier: Apache-2.0

//! Output files. Every file carries the tool version, the resolved config and
//! the master seed; wall time goes to a `.timing` sidecar so that reruns with
//! the same seed stay byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::Resolved;
use crate::error::CliResult;

pub const TOOL: &str = "gparity";

/// Collects written paths in order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    /// `{tool, version, seed, config, result}` as pretty JSON.
    pub fn json<T: Serialize>(&mut self, name: &str, cfg: &Resolved, result: &T) -> CliResult<()> {
        let doc = json!({
            "tool": TOOL,
            "version": cfg.version,
            "seed": cfg.seed,
            "config": cfg,
            "result": result,
        });
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// CSV body produced by `body`, preceded by `#` metadata lines.
    pub fn csv<F>(&mut self, name: &str, cfg: &Resolved, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> CliResult<()>,
    {
        let mut w = self.create(name)?;
        writeln!(w, "# tool {TOOL} {}", cfg.version)?;
        writeln!(w, "# seed {}", cfg.seed)?;
        writeln!(w, "# config {}", serde_json::to_string(cfg)?)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Wall-clock sidecar for the command.
    pub fn timing(&mut self, command: &str, seconds: f64) -> CliResult<()> {
        let mut w = self.create(&format!("{command}.timing"))?;
        writeln!(w, "wall_time_s {seconds:.6}")?;
        w.flush()?;
        Ok(())
    }
}
