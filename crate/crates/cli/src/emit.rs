//! Payload emission. With `--out` every payload lands in the directory next
//! to a `<stem>.manifest.json` sidecar; without it payloads stream to
//! stdout and the manifest to stderr.

use std::fs;
use std::path::PathBuf;

use crate::manifest::RunManifest;
use crate::Failure;

pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        }
        Ok(Self { dir: out })
    }

    pub fn json(&self, stem: &str, value: &serde_json::Value) -> Result<(), Failure> {
        let text = format!("{}\n", serde_json::to_string_pretty(value)?);
        self.write(stem, "json", &text)
    }

    pub fn csv(
        &self,
        stem: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Failure::Analysis(format!("table emission failed: {e}")))?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Failure::Analysis("table emission produced bad UTF-8".into()))?;
        self.write(stem, "csv", &text)
    }

    pub fn text(&self, stem: &str, body: &str) -> Result<(), Failure> {
        self.write(stem, "txt", body)
    }

    pub fn manifest(&self, stem: &str, manifest: &RunManifest) -> Result<(), Failure> {
        let text = format!("{}\n", serde_json::to_string_pretty(manifest)?);
        match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{stem}.manifest.json"));
                fs::write(&path, text)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            }
            None => eprint!("{text}"),
        }
        Ok(())
    }

    fn write(&self, stem: &str, ext: &str, text: &str) -> Result<(), Failure> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{stem}.{ext}"));
                fs::write(&path, text)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}
