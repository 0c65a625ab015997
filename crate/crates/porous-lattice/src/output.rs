//! Deterministic file emission: CSV matrices, JSON reports, and manifests.
//!
//! No file contains a timestamp or any other run-dependent value, so the
//! same `(config, seed)` pair always produces byte-identical artifacts.
//! Numbers are formatted with the shortest round-trip representation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attractor::tail_energy;
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::noise::{OuPath, WienerPath};

/// Writes `content` to `dir/name`, creating the directory if needed.
pub fn save(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

/// Pretty JSON plus a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

/// CSV of `(t, omega, z)` on the common grid of a path and its OU chart.
pub fn path_csv(w: &WienerPath, ou: &OuPath) -> String {
    let z = ou.z_values();
    assert_eq!(w.len(), z.len(), "path and OU chart share one grid");
    let mut out = String::from("t,omega,z\n");
    for k in 0..w.len() {
        let _ = writeln!(out, "{},{},{}", w.time_of(k), w.value_at_index(k), z[k]);
    }
    out
}

/// CSV of per-checkpoint norms and tail energies along a trajectory.
pub fn trajectory_csv(traj: &Trajectory, p: f64, tail_cuts: &[usize]) -> String {
    let mut out = String::from("t,norm_l2,norm_lp");
    for c in tail_cuts {
        let _ = write!(out, ",tail_{c}");
    }
    out.push('\n');
    for (t, v) in traj.times().iter().zip(traj.states()) {
        let _ = write!(out, "{},{},{}", t, v.norm_l2(), v.norm_lp(p + 1.0));
        for &c in tail_cuts {
            let _ = write!(out, ",{}", tail_energy(v, c).expect("cuts validated"));
        }
        out.push('\n');
    }
    out
}

/// One point of a long-format plot file.
#[derive(Debug, Clone)]
pub struct PlotRow {
    pub series: String,
    pub t: f64,
    pub value: f64,
}

impl PlotRow {
    pub fn new(series: impl Into<String>, t: f64, value: f64) -> Self {
        Self {
            series: series.into(),
            t,
            value,
        }
    }
}

/// Long-format CSV (`series,t,value`) ready for direct plotting.
pub fn long_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from("series,t,value\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.series, r.t, r.value);
    }
    out
}

/// Pairs every emitted data file with the exact inputs that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seeds: &[u64], config: serde_json::Value) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seeds: seeds.to_vec(),
            outputs: Vec::new(),
            config,
        }
    }

    /// Records an emitted file by name; manifests sit next to their data, so
    /// the directory is implied and the manifest stays byte-stable across
    /// output locations.
    pub fn record(&mut self, path: &Path) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.outputs.push(name);
    }
}
