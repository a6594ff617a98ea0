//! Artifact writing. Every file is written once into a temporary file in
//! the output directory and renamed into place.

use crate::config::{RunConfig, VERSION};
use anyhow::Context;
use geoflow::flows::TrajectorySample;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use tempfile::NamedTempFile;

pub struct Outputs {
    dir: PathBuf,
}

pub struct Written {
    pub path: PathBuf,
}

/// Deterministic envelope: no timestamps, no paths.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    report: &'a T,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    version: &'a str,
    unix_time_seconds: u64,
    files: Vec<String>,
}

fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> anyhow::Result<Self> {
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs { dir })
    }

    pub fn report<T: Serialize>(&self, name: &str, cfg: &RunConfig, report: &T) -> anyhow::Result<Written> {
        let env = Envelope {
            version: VERSION,
            config: cfg,
            report,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&self, name: &str, text: &str) -> anyhow::Result<Written> {
        let path = self.dir.join(name);
        atomic_write(&path, text.as_bytes())?;
        Ok(Written { path })
    }

    /// Columns `t, x1..xn, p1..pn, chart_id, H`.
    pub fn trajectory_csv(&self, name: &str, samples: &[TrajectorySample]) -> anyhow::Result<Written> {
        let n = samples.first().map_or(0, |s| s.x.x.len());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.extend(["chart_id".to_string(), "H".to_string()]);
        w.write_record(&header)?;
        for s in samples {
            let mut row = vec![s.t.to_string()];
            row.extend(s.x.x.iter().map(f64::to_string));
            row.extend(s.p.iter().map(f64::to_string));
            row.push(s.x.chart.to_string());
            row.push(s.energy.to_string());
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        let path = self.dir.join(name);
        atomic_write(&path, &bytes)?;
        Ok(Written { path })
    }

    /// Wall-clock data lives here so that reports stay byte-identical.
    pub fn meta(&self, files: &[&Written]) -> anyhow::Result<()> {
        let meta = RunMeta {
            version: VERSION,
            unix_time_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            files: files
                .iter()
                .filter_map(|w| w.path.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        atomic_write(&self.dir.join("run_meta.json"), text.as_bytes())
    }
}
