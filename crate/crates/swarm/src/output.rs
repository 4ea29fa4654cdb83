//! Output directory selection.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

pub const OUT_ENV: &str = "COMPTON_SWARM_OUT";

/// Root for generated directories: `$COMPTON_SWARM_OUT` if set, else `./out`.
pub fn output_root() -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("out"),
    }
}

/// `<root>/<UTC timestamp>-<seed>`.
pub fn run_dir(root: &Path, now: DateTime<Utc>, seed: u64) -> PathBuf {
    root.join(format!("{}-{seed}", now.format("%Y%m%dT%H%M%SZ")))
}

/// Uses `explicit` when given, otherwise a fresh timestamped directory.
pub fn resolve_out(explicit: Option<&Path>, seed: u64) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => run_dir(&output_root(), Utc::now(), seed),
    }
}
