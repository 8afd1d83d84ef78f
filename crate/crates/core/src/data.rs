//! CSV input and output, and lookup of the shipped river-flow data.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sample::Sample;

pub const DANUBE_FILE: &str = "danube.csv";
pub const DANUBE_SHA256: &str = "c0806110b32d1977605d3ad5d28a4a40ec6dabccf982e4227e2887cbc45e2dcf";
pub const DANUBE_SYNTHETIC_FILE: &str = "danube_synthetic.csv";
pub const DATA_DIR_ENV: &str = "WTRANS_DATA_DIR";

/// `$WTRANS_DATA_DIR`, else the repository's `data/` directory.
pub fn data_dir() -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

/// Resolves `name` against the working directory first, then the data dir.
pub fn resolve(name: &str) -> PathBuf {
    let p = PathBuf::from(name);
    if p.exists() {
        p
    } else {
        data_dir().join(name)
    }
}

/// Numeric CSV with a header row. Fields are trimmed.
pub fn read_csv<R: Read>(input: R) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let d = reader
        .headers()
        .map_err(|e| Error::Data(e.to_string()))?
        .len();
    let mut out = Sample::with_capacity(d, 0);
    let mut row = vec![0.0; d];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        if rec.len() != d {
            return Err(Error::Data(format!("row {} has {} fields, expected {d}", i + 1, rec.len())));
        }
        for (j, f) in rec.iter().enumerate() {
            row[j] = f.parse().map_err(|_| {
                Error::Data(format!("row {} column {}: {f:?} is not a number", i + 1, j + 1))
            })?;
        }
        out.push(&row);
    }
    if out.n() == 0 {
        return Err(Error::Data("no data rows".into()));
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Sample> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    read_csv(f)
}

/// 17 significant digits, header `u1..ud`.
pub fn write_csv<W: Write>(s: &Sample, out: W) -> Result<()> {
    let header: Vec<String> = (1..=s.d()).map(|j| format!("u{j}")).collect();
    write_csv_with_header(s, &header, out)
}

pub fn write_csv_with_header<W: Write>(s: &Sample, header: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in s.rows() {
        w.write_record(r.iter().map(|x| format!("{x:.16e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The river-flow file, if present with the expected digest.
pub enum DanubeData {
    Found(Sample),
    Missing(PathBuf),
    Mismatch { path: PathBuf, sha256: String },
}

pub fn load_danube() -> Result<DanubeData> {
    let path = data_dir().join(DANUBE_FILE);
    let Ok(bytes) = std::fs::read(&path) else {
        return Ok(DanubeData::Missing(path));
    };
    let sha256 = sha256_hex(&bytes);
    if sha256 != DANUBE_SHA256 {
        return Ok(DanubeData::Mismatch { path, sha256 });
    }
    Ok(DanubeData::Found(read_csv(bytes.as_slice())?))
}
