//! Output directory handling. Every file is written to a sibling temporary
//! path and renamed into place, so a crashed run never leaves a truncated
//! artifact behind.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    /// Writes `name` atomically with bytes produced by `fill`.
    pub fn write_with<E>(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<(), E>
    where
        E: From<io::Error>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(&buf)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        self.write_with(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value).map_err(io::Error::from)?;
            buf.push(b'\n');
            Ok::<(), io::Error>(())
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
