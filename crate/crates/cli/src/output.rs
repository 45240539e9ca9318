//! Artifact writing: deterministic stage files plus a timestamped manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::{CliError, Format};

pub const SCHEMA_VERSION: u32 = 1;

pub struct Artifacts {
    dir: PathBuf,
    formats: Vec<Format>,
    stage: &'static str,
    seed: u64,
    /// Config and model echo repeated in every stage file.
    context: Value,
    pub written: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::usage(format!("writing {}: {e}", path.display()))
}

impl Artifacts {
    pub fn new(
        dir: &Path,
        formats: &[Format],
        stage: &'static str,
        seed: u64,
        context: Value,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            formats: formats.to_vec(),
            stage,
            seed,
            context,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// `<name>.json` with the schema version, stage, seed and config echo around `result`.
    pub fn json<T: Serialize>(
        &mut self,
        name: &str,
        pass: Option<bool>,
        result: &T,
    ) -> Result<(), CliError> {
        if !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "stage": self.stage,
            "seed": self.seed,
            "context": self.context,
            "pass": pass,
            "result": result,
        });
        let text =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::usage(e.to_string()))? + "\n";
        self.write(&format!("{name}.json"), &text)
    }

    /// `<name>.csv` headed by a `#` line naming the schema, stage and seed.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let text = format!(
            "# sdde schema {SCHEMA_VERSION}; stage {}; seed {}\n{body}",
            self.stage, self.seed
        );
        self.write(&format!("{name}.csv"), &text)
    }

    pub fn manifest(&self, extra: Value) -> Result<(), CliError> {
        let path = self.dir.join("manifest.json");
        let mut doc = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "sdde",
            "version": env!("CARGO_PKG_VERSION"),
            "stage": self.stage,
            "seed": self.seed,
            "context": self.context,
            "artifacts": self.written,
        });
        if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
            d.extend(e);
        }
        let text =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::usage(e.to_string()))? + "\n";
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}
