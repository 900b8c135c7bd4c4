use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::config::{OutputSpec, SCHEMA_VERSION};
use crate::CliError;

pub const OUT_DIR_ENV: &str = "SUBLINEAR_OUT_DIR";
const DEFAULT_DIR: &str = "sublinear-out";

/// Files of one run: `<dir>/<prefix>.<name>.<ext>`.
pub struct Output {
    pub dir: PathBuf,
    pub prefix: String,
    written: Vec<PathBuf>,
}

fn io(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    subcommand: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

impl Output {
    /// Flag, then config file, then environment, then the default.
    pub fn resolve(
        flag: Option<&PathBuf>,
        spec: &OutputSpec,
        default_prefix: &str,
    ) -> Result<Self, CliError> {
        let dir = flag
            .cloned()
            .or_else(|| spec.dir.as_ref().map(PathBuf::from))
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DIR));
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let prefix = spec
            .prefix
            .clone()
            .unwrap_or_else(|| default_prefix.to_string());
        Ok(Self {
            dir,
            prefix,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(format!("{}.{name}", self.prefix));
        self.written.push(p.clone());
        p
    }

    /// Pretty JSON wrapped with the schema version and subcommand.
    pub fn json<T: Serialize>(
        &mut self,
        name: &str,
        subcommand: &str,
        body: &T,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(&format!("{name}.json"));
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            subcommand,
            body,
        };
        let text = serde_json::to_string_pretty(&env).map_err(|e| io(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        Ok(path)
    }

    /// The effective configuration, written verbatim so it can be fed back.
    pub fn config<T: Serialize>(&mut self, cfg: &T) -> Result<PathBuf, CliError> {
        let path = self.path("config.json");
        let text = serde_json::to_string_pretty(cfg).map_err(|e| io(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        Ok(path)
    }

    /// A CSV file with a header row.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(&format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(header).map_err(|e| io(&path, e))?;
        for r in rows {
            w.write_record(&r).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
        Ok(path)
    }

    /// Two whitespace-separated columns under a `#` header.
    pub fn plot(
        &mut self,
        name: &str,
        columns: (&str, &str),
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(&format!("{name}.dat"));
        let f = File::create(&path).map_err(|e| io(&path, e))?;
        let mut w = BufWriter::new(f);
        let go = || -> std::io::Result<()> {
            writeln!(w, "# {} {}", columns.0, columns.1)?;
            for (x, y) in points {
                writeln!(w, "{x} {y}")?;
            }
            w.flush()
        };
        go().map_err(|e| io(&path, e))?;
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
