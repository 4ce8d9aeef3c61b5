//! File formats: sample CSVs, JSON documents and PGM directories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mrfdens_core::pixeldiag::{parse_pgm, GrayImage};
use mrfdens_core::SampleMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes to `out` when given, stdout otherwise.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a sample CSV with header `x1,...,xd`.
pub fn read_samples(path: &Path) -> CliResult<SampleMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    let d = header.len();
    for (j, name) in header.iter().enumerate() {
        if name != format!("x{}", j + 1) {
            return Err(CliError::usage(format!(
                "{}: header must be x1,...,xd; column {} is {name:?}",
                path.display(),
                j + 1
            )));
        }
    }
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::usage(format!("{}: row {}: bad number {field:?}", path.display(), i + 1))
            })?;
            data.push(v);
        }
    }
    Ok(SampleMatrix::new(d, data)?)
}

pub fn samples_csv(samples: &SampleMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=samples.dim()).map(|j| format!("x{j}")).collect();
    w.write_record(&header).expect("in-memory write");
    for row in samples.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii csv")
}

/// CSV with a header row; each row is already formatted.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii csv")
}

/// Every `.pgm` file in `dir`, in file-name order.
pub fn read_pgm_dir(dir: &Path) -> CliResult<Vec<(String, GrayImage)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            let img = parse_pgm(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, img))
        })
        .collect()
}
