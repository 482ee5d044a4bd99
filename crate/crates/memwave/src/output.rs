//! Run directories, file writers and the sealed manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use memwave_core::diagnostics::EnergyReport;
use memwave_core::domain::Grid;
use memwave_core::solver::Trajectory;
use memwave_core::trace::TraceSeries;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const ENV_OUT: &str = "MEMWAVE_OUT";
pub const MANIFEST: &str = "manifest.json";
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MWSNAP1\0";

/// `MEMWAVE_OUT` when set and non-empty, else the configured directory.
pub fn output_root(configured: &str) -> PathBuf {
    match std::env::var(ENV_OUT) {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(configured),
    }
}

/// Creates `root/<prefix>-<utc stamp>-<k>` for the first free `k`.
pub fn fresh_dir(root: &Path, prefix: &str) -> Result<PathBuf> {
    fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S");
    for k in 0..10_000 {
        let dir = root.join(format!("{prefix}-{stamp}-{k:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::io(dir, e)),
        }
    }
    Err(CliError::io(root, std::io::Error::other("no free run directory name")))
}

/// Floats in CSV files: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e.to_string()))
}

pub const ENERGY_COLUMNS: [&str; 9] = [
    "t",
    "kinetic",
    "pot_simple",
    "pot_history",
    "history_term",
    "G_int",
    "E_simple",
    "E_history",
    "memory_dissipation",
];

pub fn write_energy_csv(path: &Path, rep: &EnergyReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ENERGY_COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in 0..rep.len() {
        let row = [
            rep.times[r],
            rep.kinetic[r],
            rep.pot_simple[r],
            rep.pot_history[r],
            rep.history_term[r],
            rep.g_int[r],
            rep.e_simple[r],
            rep.e_history[r],
            rep.memory_dissipation[r],
        ];
        w.write_record(row.iter().map(|v| fmt_float(*v))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_trace_csv(path: &Path, tr: &TraceSeries) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "node", "raw", "convolved"]).map_err(|e| csv_err(path, e))?;
    for (r, &t) in tr.times.iter().enumerate() {
        for b in 0..tr.nodes.len() {
            w.write_record([fmt_float(t), b.to_string(), fmt_float(tr.raw[b][r]), fmt_float(tr.convolved[b][r])])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Little-endian: magic, `u32` dim, `u32` 0, `u64` interior nx, `u64` ny,
/// `u64` record count, then per record `f64` t and the interior field.
pub fn write_snapshots(path: &Path, traj: &Trajectory, grid: &Grid) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let [nx, ny] = grid.interior_shape();
    let mut put = |bytes: &[u8]| w.write_all(bytes);
    let res = (|| -> std::io::Result<()> {
        put(SNAPSHOT_MAGIC)?;
        put(&(grid.dim() as u32).to_le_bytes())?;
        put(&0u32.to_le_bytes())?;
        put(&(nx as u64).to_le_bytes())?;
        put(&(ny as u64).to_le_bytes())?;
        put(&(traj.len() as u64).to_le_bytes())?;
        for s in &traj.snapshots {
            put(&s.t.to_le_bytes())?;
            for v in &s.u {
                put(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })();
    res.and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Reads back a file written by [`write_snapshots`] as `(times, fields)`.
pub fn read_snapshots(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let corrupt = || CliError::invalid(format!("{}: not a snapshot file", path.display()));
    if bytes.len() < 40 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(corrupt());
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    let (nx, ny, count) = (u64_at(16), u64_at(24), u64_at(32));
    let per = nx * ny;
    if bytes.len() != 40 + count * (per + 1) * 8 {
        return Err(corrupt());
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let mut times = Vec::with_capacity(count);
    let mut fields = Vec::with_capacity(count);
    for r in 0..count {
        let base = 40 + r * (per + 1) * 8;
        times.push(f64_at(base));
        fields.push((0..per).map(|i| f64_at(base + 8 + 8 * i)).collect());
    }
    Ok((times, fields))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let mut file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok((bytes, format!("{:x}", hasher.finalize())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub wall_time_s: f64,
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
}

/// Bookkeeping for one output directory; `seal` writes the manifest last.
pub struct RunDir {
    pub path: PathBuf,
    started: chrono::DateTime<chrono::Utc>,
    clock: std::time::Instant,
    files: Vec<String>,
}

impl RunDir {
    pub fn new(path: PathBuf, started: chrono::DateTime<chrono::Utc>, clock: std::time::Instant) -> Self {
        RunDir { path, started, clock, files: Vec::new() }
    }

    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.path.join(name)
    }

    /// Writes `manifest.json` and marks every file read-only.
    pub fn seal(self, config: serde_json::Value, summary: serde_json::Value) -> Result<PathBuf> {
        let mut files = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let (bytes, sha256) = sha256_file(&self.path.join(name))?;
            files.push(FileEntry { name: name.clone(), bytes, sha256 });
        }
        let finished = chrono::Utc::now();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            started: self.started.to_rfc3339(),
            finished: finished.to_rfc3339(),
            wall_time_s: self.clock.elapsed().as_secs_f64(),
            config,
            files,
            summary,
        };
        let mpath = self.path.join(MANIFEST);
        write_json(&mpath, &manifest)?;
        for name in self.files.iter().map(String::as_str).chain([MANIFEST]) {
            let p = self.path.join(name);
            let mut perm = fs::metadata(&p).map_err(|e| CliError::io(&p, e))?.permissions();
            perm.set_readonly(true);
            fs::set_permissions(&p, perm).map_err(|e| CliError::io(&p, e))?;
        }
        Ok(self.path)
    }
}

/// Re-hashes every file listed in `dir/manifest.json`.
pub fn verify_manifest(dir: &Path) -> std::result::Result<Manifest, String> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| format!("{}: {e}", mpath.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", mpath.display()))?;
    for f in &manifest.files {
        let (bytes, sha) = sha256_file(&dir.join(&f.name)).map_err(|e| e.to_string())?;
        if bytes != f.bytes || sha != f.sha256 {
            return Err(format!("{} does not match its digest", f.name));
        }
    }
    Ok(manifest)
}
