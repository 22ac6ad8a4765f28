use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

/// One line of `<output>.manifest.jsonl`.
#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    program: &'static str,
    version: &'static str,
    output: String,
    config: &'a C,
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.jsonl");
    PathBuf::from(name)
}

/// Writes `rows` as CSV with a header or as JSON lines, to `path` or stdout.
/// A file output gets a sibling manifest holding the full config.
pub fn emit<T: Serialize, C: Serialize>(
    rows: &[T],
    format: Format,
    path: Option<&Path>,
    config: &C,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_rows(rows, format, &mut w)?;
            w.flush()?;
            write_manifest(p, config)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_rows(rows, format, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, w: &mut W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut out = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(w);
            for row in rows {
                out.serialize(row)?;
            }
            out.flush()?;
        }
        Format::Jsonl => {
            for row in rows {
                serde_json::to_writer(&mut *w, row)?;
                w.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn write_manifest<C: Serialize>(path: &Path, config: &C) -> Result<()> {
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        output: path.display().to_string(),
        config,
    };
    let mut w = BufWriter::new(File::create(manifest_path(path))?);
    serde_json::to_writer(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Prints the run summary where it will not mix with row data.
pub fn summary(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}
