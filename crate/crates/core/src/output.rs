//! Deterministic CSV and JSON emission. Column names come from the row
//! structs' field names, so the headers below are fixed by the types.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const TIME_SERIES_HEADER: &str = "t,mx,my,mz,p,re_c,im_c,s_max,phi_star,trace_dev";
pub const GRID_HEADER: &str = "axis1,axis2,value,converged";
pub const Q_FIELD_HEADER: &str = "theta,phi,q";
pub const ARGMAX_HEADER: &str = "t,theta,phi";
pub const RRC_LINES_HEADER: &str = "k,z_k,omega_rrc,Omega";

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Writes `rows` with a header line taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
