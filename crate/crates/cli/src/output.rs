use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

/// Writes artifacts into the configured output directory.
pub struct Sink {
    dir: PathBuf,
    hash: String,
    command: String,
}

impl Sink {
    pub fn new(cfg: &RunConfig, command: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        Ok(Self { dir: cfg.out.clone(), hash: cfg.hash(), command: command.to_string() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// A `#` comment block with the config hash, one header line, then rows.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<PathBuf> {
        let mut s = String::new();
        writeln!(s, "# polylab {}", self.command)?;
        writeln!(s, "# config_sha256 = {}", self.hash)?;
        writeln!(s, "{}", header.join(","))?;
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            writeln!(s, "{}", cells.join(","))?;
        }
        self.write(name, &s)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            command: &'a str,
            config_sha256: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let w = Wrapped { command: &self.command, config_sha256: &self.hash, body: value };
        self.write(name, &(serde_json::to_string_pretty(&w)? + "\n"))
    }

    pub fn write(&self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}

/// Reads a CSV written by [`Sink::csv`]: skips `#` lines, returns header and rows.
pub fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        rows.push(row.with_context(|| format!("{}: data row {} is not numeric", path.display(), i + 1))?);
    }
    Ok((header, rows))
}
