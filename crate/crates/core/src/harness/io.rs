//! File formats: HMAT1 matrices, CSV tables, JSON summaries and run manifests.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{Hamiltonian, Origin};
use crate::error::{Error, Result};

pub const HMAT_MAGIC: &str = "HMAT1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmatHeader {
    pub size: usize,
    pub model: Origin,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    pub c: Option<f64>,
    pub n: Option<u32>,
}

/// HMAT1: `"HMAT1\n"`, one JSON header line, then `N²` little-endian `f64` in row-major order.
pub fn write_hmat(mut w: impl Write, h: &Hamiltonian) -> Result<()> {
    let header = HmatHeader {
        size: h.size(),
        model: h.origin.clone(),
        seed: h.seed,
        stream: h.stream,
        c: h.origin.exponent(),
        n: h.origin.depth(),
    };
    writeln!(w, "{HMAT_MAGIC}")?;
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    let mut buf = Vec::with_capacity(h.as_slice().len() * 8);
    for v in h.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_hmat(r: impl Read) -> Result<Hamiltonian> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end_matches('\n') != HMAT_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", line.trim_end())));
    }
    line.clear();
    r.read_line(&mut line)?;
    let header: HmatHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let count = header
        .size
        .checked_mul(header.size)
        .ok_or_else(|| Error::Format("size overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", count * 8, bytes.len())));
    }
    let entries = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Hamiltonian::from_entries(header.size, entries, header.model, header.seed, header.stream)
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn save_hmat(path: &Path, h: &Hamiltonian) -> Result<()> {
    let mut bytes = Vec::new();
    write_hmat(&mut bytes, h)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_hmat(path: &Path) -> Result<Hamiltonian> {
    read_hmat(fs::File::open(path)?)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// An in-memory CSV table with a mandatory header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row of a label followed by floats.
    pub fn push(&mut self, label: impl ToString, values: &[f64]) {
        let mut row = vec![label.to_string()];
        row.extend(values.iter().map(|v| fmt_f64(*v)));
        self.push_raw(row);
    }

    pub fn push_raw(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn from_reader(r: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.iter().map(str::to_owned).collect();
        let rows = rdr
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Spectrum CSV with columns `index, eigenvalue` (1-based index).
pub fn spectrum_table(eigenvalues: &[f64]) -> Table {
    let mut t = Table::new(["index", "eigenvalue"]);
    for (i, v) in eigenvalues.iter().enumerate() {
        t.push(i + 1, &[*v]);
    }
    t
}

/// Plot-ready `x, y, stderr` table under the given column names.
pub fn plot_table(x_name: &str, y_name: &str, points: &[(f64, f64, f64)]) -> Table {
    let mut t = Table::new([x_name, y_name, "stderr"]);
    for &(x, y, se) in points {
        t.push_raw(vec![fmt_f64(x), fmt_f64(y), fmt_f64(se)]);
    }
    t
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Realization `k` drew from `RngStream::new(master_seed, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub streams: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: super::ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub seeds: SeedRecord,
    pub outputs: Vec<OutputFile>,
    /// Checks that did not meet their tolerance (identity experiments).
    pub failures: Vec<String>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(Self::FILE_NAME))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Files in `dir` whose checksum no longer matches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for out in &self.outputs {
            let bytes = fs::read(dir.join(&out.path))?;
            if sha256_hex(&bytes) != out.sha256 || bytes.len() as u64 != out.bytes {
                bad.push(out.path.clone());
            }
        }
        Ok(bad)
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<OutputFile> {
    let target = dir.join(name);
    let tmp: PathBuf = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(OutputFile {
        path: name.to_owned(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
    })
}
