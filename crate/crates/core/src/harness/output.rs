use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::CampaignConfig;
use crate::distfit::TABLE_FORMAT_VERSION;
use crate::error::Result;

pub const SOFTWARE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// 17 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `path` through a temporary sibling file that is renamed into place
/// once complete, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Writes rows of already formatted fields under a header line.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Run record. The body is the resolved configuration in `key=value` form,
/// so the manifest can be passed back through `--config`; everything else is
/// kept in comment lines.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config: CampaignConfig,
    pub started: u64,
    pub notes: Vec<(String, String)>,
}

impl RunManifest {
    pub fn start(command: &str, config: &CampaignConfig) -> Self {
        Self { command: command.to_string(), config: config.clone(), started: unix_now(), notes: Vec::new() }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn path(&self) -> PathBuf {
        self.config.out.join(format!("{}.manifest", self.command))
    }

    pub fn finish(&self) -> Result<PathBuf> {
        let path = self.path();
        let finished = unix_now();
        write_atomic(&path, |w| {
            writeln!(w, "# glsbi run manifest")?;
            writeln!(w, "# command: {}", self.command)?;
            writeln!(w, "# software_version: {SOFTWARE_VERSION}")?;
            writeln!(w, "# table_format_version: {TABLE_FORMAT_VERSION}")?;
            writeln!(w, "# started_unix: {}", self.started)?;
            writeln!(w, "# finished_unix: {finished}")?;
            for (k, v) in &self.notes {
                writeln!(w, "# {k}: {v}")?;
            }
            for (k, v) in self.config.to_key_values() {
                writeln!(w, "{k}={v}")?;
            }
            Ok(())
        })?;
        Ok(path)
    }
}
