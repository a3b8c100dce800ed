//! Field snapshot files: one flat little-endian f64 array per component
//! plus a JSON sidecar carrying the grid and time metadata.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{Field, Representation};
use crate::grid::Grid;

#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub box_length: f64,
    pub resolution: usize,
    pub time_stamp: f64,
    pub representation: Representation,
    pub component_names: Vec<String>,
}

fn component_names(n: usize) -> Vec<String> {
    match n {
        1 => vec!["q".to_string()],
        3 => vec!["v1".to_string(), "v2".to_string(), "v3".to_string()],
        _ => (0..n).map(|i| format!("c{i}")).collect(),
    }
}

/// Writes `<name>.json` and one `<name>.<component>.f64` per component into
/// `dir`; returns the paths in deterministic order (sidecar first).
pub fn write_snapshot(field: &Field, dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    let comps = field.physical()?;
    let names = component_names(comps.len());
    let sidecar = SnapshotSidecar {
        box_length: field.grid().box_length(),
        resolution: field.grid().resolution(),
        time_stamp: field.time_stamp(),
        representation: Representation::Physical,
        component_names: names.clone(),
    };
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(comps.len() + 1);
    let sidecar_path = dir.join(format!("{name}.json"));
    fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    paths.push(sidecar_path);
    for (comp, cname) in comps.iter().zip(&names) {
        let mut bytes = Vec::with_capacity(comp.len() * 8);
        for v in comp {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = dir.join(format!("{name}.{cname}.f64"));
        fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads a snapshot back from its sidecar path (`<name>.json`).
pub fn read_snapshot(sidecar_path: &Path) -> Result<Field> {
    let text = fs::read_to_string(sidecar_path)?;
    let sidecar: SnapshotSidecar = serde_json::from_str(&text)
        .map_err(|e| CoreError::SnapshotFormat(format!("bad sidecar: {e}")))?;
    if sidecar.representation != Representation::Physical {
        return Err(CoreError::SnapshotFormat(
            "only physical-representation snapshots are stored on disk".into(),
        ));
    }
    let grid = Grid::new(sidecar.box_length, sidecar.resolution)?;
    let dir = sidecar_path.parent().unwrap_or_else(|| Path::new("."));
    let stem = sidecar_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CoreError::SnapshotFormat("sidecar path has no stem".into()))?;
    let n3 = grid.n_points();
    let mut comps = Vec::with_capacity(sidecar.component_names.len());
    for cname in &sidecar.component_names {
        let path = dir.join(format!("{stem}.{cname}.f64"));
        let bytes = fs::read(&path)?;
        if bytes.len() != n3 * 8 {
            return Err(CoreError::SnapshotFormat(format!(
                "{} holds {} bytes, expected {}",
                path.display(),
                bytes.len(),
                n3 * 8
            )));
        }
        let comp: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        comps.push(comp);
    }
    Ok(Field::from_physical(grid, comps)?.with_time(sidecar.time_stamp))
}
