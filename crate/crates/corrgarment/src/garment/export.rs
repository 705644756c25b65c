//! Wavefront OBJ export/import with a JSON sidecar.
//!
//! The OBJ carries vertices and faces only; part labels, skeleton indices,
//! canonical area, bbox diagonal, spec and seed live in `<stem>.meta.json`
//! next to it. Import rebuilds the full `GarmentMesh` and cross-checks the
//! sidecar against the geometry.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GarmentMesh, GarmentSpec, PartLabel};
use crate::{Error, Result, Vec3};

/// Sidecar schema stored as `<stem>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarMeta {
    pub mesh_id: u64,
    pub spec: GarmentSpec,
    pub labels: Vec<PartLabel>,
    pub skeleton_vertices: Vec<usize>,
    pub canonical_area: f64,
    pub bbox_diagonal: f64,
}

fn sidecar_path(obj_path: &Path) -> PathBuf {
    obj_path.with_extension("meta.json")
}

/// Writes `mesh` as OBJ plus sidecar. Returns the sidecar path.
pub fn export_obj(mesh: &GarmentMesh, obj_path: &Path) -> Result<PathBuf> {
    let mut obj = String::new();
    for v in &mesh.vertices {
        // "{}" prints the shortest round-trip form, so import is lossless
        obj.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        obj.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let mut file = fs::File::create(obj_path)?;
    file.write_all(obj.as_bytes())?;

    let meta = SidecarMeta {
        mesh_id: mesh.mesh_id,
        spec: mesh.spec.clone(),
        labels: mesh.labels.clone(),
        skeleton_vertices: mesh.skeleton_vertices.clone(),
        canonical_area: mesh.canonical_area,
        bbox_diagonal: mesh.bbox_diagonal,
    };
    let sidecar = sidecar_path(obj_path);
    fs::write(&sidecar, serde_json::to_vec_pretty(&meta)?)?;
    Ok(sidecar)
}

/// Loads an OBJ exported by [`export_obj`] together with its sidecar.
pub fn import_obj(obj_path: &Path) -> Result<GarmentMesh> {
    let text = fs::read_to_string(obj_path)?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = || -> Result<f64> {
                    parts
                        .next()
                        .ok_or_else(|| Error::MeshMismatch("short vertex line".into()))?
                        .parse()
                        .map_err(|_| Error::MeshMismatch("bad vertex coordinate".into()))
                };
                let (x, y, z) = (coord()?, coord()?, coord()?);
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut index = || -> Result<usize> {
                    let token = parts
                        .next()
                        .ok_or_else(|| Error::MeshMismatch("short face line".into()))?;
                    let first = token.split('/').next().unwrap_or(token);
                    let i: usize = first
                        .parse()
                        .map_err(|_| Error::MeshMismatch("bad face index".into()))?;
                    Ok(i - 1)
                };
                faces.push([index()?, index()?, index()?]);
            }
            _ => {}
        }
    }

    let meta: SidecarMeta = serde_json::from_slice(&fs::read(sidecar_path(obj_path))?)?;
    let mesh = GarmentMesh {
        mesh_id: meta.mesh_id,
        spec: meta.spec,
        vertices,
        faces,
        labels: meta.labels,
        skeleton_vertices: meta.skeleton_vertices,
        canonical_area: meta.canonical_area,
        bbox_diagonal: meta.bbox_diagonal,
    };
    mesh.validate()?;
    if mesh.mesh_id != mesh.spec.mesh_id() {
        return Err(Error::MeshMismatch("sidecar mesh_id does not match spec".into()));
    }
    Ok(mesh)
}
