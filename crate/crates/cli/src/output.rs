//! Output directory bookkeeping, CSV formatting and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use droplet_core::{ComplexField, WignerMap};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TIMESERIES_HEADER: &str = "t,norm,x_cm,x_peak,S_rho";
pub const SNAPSHOT_HEADER: &str = "x,re,im,density";

/// Shortest round-trip-safe rendering: 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Compact label for file names, e.g. `0.098` -> `0.098`, `-20` -> `m20`.
pub fn label(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Directory receiving one run's files. The manifest is written last; its
/// absence marks an incomplete run. Writers may share it across threads.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Mutex<Vec<FileRecord>>,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> io::Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let stale = root.join(MANIFEST_NAME);
        if stale.exists() {
            fs::remove_file(stale)?;
        }
        Ok(Self {
            root,
            files: Mutex::new(Vec::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Written files sorted by path.
    pub fn files(&self) -> Vec<FileRecord> {
        let mut files = self.files.lock().expect("file list lock").clone();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        files
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> io::Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        let mut files = self.files.lock().expect("file list lock");
        files.retain(|f| f.path != name);
        files.push(FileRecord {
            path: name.to_string(),
            bytes: contents.len() as u64,
            sha256: hex::encode(Sha256::digest(contents)),
        });
        Ok(())
    }

    /// Writes `manifest.json` atomically with the file inventory appended.
    pub fn finish(&self, mut manifest: Value) -> io::Result<PathBuf> {
        manifest["files"] = serde_json::to_value(self.files()).expect("file records serialize");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let tmp = self.root.join(format!("{MANIFEST_NAME}.partial"));
        fs::write(&tmp, text.as_bytes())?;
        let dest = self.root.join(MANIFEST_NAME);
        fs::rename(&tmp, &dest)?;
        Ok(dest)
    }
}

/// Row-oriented CSV text with a fixed header.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            columns: header.split(',').count(),
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        let mut first = true;
        for v in values {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(&fmt(*v));
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub struct SeriesRow {
    pub t: f64,
    pub norm: f64,
    pub x_cm: f64,
    pub x_peak: f64,
    pub entropy: f64,
}

pub fn timeseries_csv(rows: &[SeriesRow]) -> Vec<u8> {
    let mut csv = Csv::new(TIMESERIES_HEADER);
    for r in rows {
        csv.row(&[r.t, r.norm, r.x_cm, r.x_peak, r.entropy]);
    }
    csv.into_bytes()
}

pub fn snapshot_csv(psi: &ComplexField) -> Vec<u8> {
    let mut csv = Csv::new(SNAPSHOT_HEADER);
    for (x, v) in psi.grid().positions().zip(psi.values()) {
        csv.row(&[x, v.re, v.im, v.norm_sqr()]);
    }
    csv.into_bytes()
}

/// Density probes: `t,rho@x1,rho@x2,...`.
pub fn probes_csv(probes: &[f64], times: &[f64], values: &[Vec<f64>]) -> Vec<u8> {
    let mut header = String::from("t");
    for p in probes {
        let _ = write!(header, ",rho@{}", fmt(*p));
    }
    let mut csv = Csv::new(&header);
    for (t, row) in times.iter().zip(values) {
        let mut r = vec![*t];
        r.extend_from_slice(row);
        csv.row(&r);
    }
    csv.into_bytes()
}

/// Two-axis grid: line 1 `# x,<x0>,<x1>,...`, line 2 `# <y_name>,<y0>,...`,
/// then one row per x holding values at every y.
pub fn grid_csv(x_name: &str, x: &[f64], y_name: &str, y: &[f64], values: &[f64]) -> Vec<u8> {
    let mut text = String::new();
    for (name, axis) in [(x_name, x), (y_name, y)] {
        text.push_str("# ");
        text.push_str(name);
        for v in axis {
            text.push(',');
            text.push_str(&fmt(*v));
        }
        text.push('\n');
    }
    for row in values.chunks(y.len()) {
        let line: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    text.into_bytes()
}

/// Wigner map, rows indexed by x and columns by p.
pub fn wigner_csv(map: &WignerMap) -> Vec<u8> {
    grid_csv("x", &map.x, "p", &map.p, &map.values)
}
