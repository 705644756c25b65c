//! Procedural garment meshes with known topology.
//!
//! Garments are single-layer front panels laid flat in the z = 0 plane (the
//! canonical pose). Each category is a template on a rectangular lattice:
//! tops are a body panel with two sleeve panels and a collar strip, trousers
//! a hip panel with two legs, dresses a bodice with optional sleeves over a
//! flared skirt. The template keeps every landmark on an exact lattice
//! vertex, so the analytic skeleton is read off the grid and part labels are
//! decided per vertex from its lattice coordinates.
//!
//! Landmark enumeration per category (fixed; ordering is the cross-object
//! alignment contract):
//!
//! * Top (10): `collar_l, collar_r, shoulder_l, shoulder_r, cuff_l, cuff_r,
//!   armpit_l, armpit_r, hem_l, hem_r`. Cuffs are the outer lower sleeve
//!   corners; a sleeve length of zero collapses them onto the armpits.
//! * Trouser (8): `waist_l, waist_r, crotch_l, crotch_r, hem_outer_l,
//!   hem_inner_l, hem_inner_r, hem_outer_r`.
//! * Dress (8): `collar_l, collar_r, shoulder_l, shoulder_r, armpit_l,
//!   armpit_r, hem_l, hem_r` — the first four match the Top enumeration.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::skeleton::{Keypoint, Skeleton};
use crate::{Error, Result, Vec3};

mod export;

pub use export::{export_obj, import_obj, SidecarMeta};

/// Garment categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Top,
    Trouser,
    Dress,
}

impl Category {
    pub fn landmark_names(self) -> &'static [&'static str] {
        match self {
            Category::Top => &[
                "collar_l",
                "collar_r",
                "shoulder_l",
                "shoulder_r",
                "cuff_l",
                "cuff_r",
                "armpit_l",
                "armpit_r",
                "hem_l",
                "hem_r",
            ],
            Category::Trouser => &[
                "waist_l",
                "waist_r",
                "crotch_l",
                "crotch_r",
                "hem_outer_l",
                "hem_inner_l",
                "hem_inner_r",
                "hem_outer_r",
            ],
            Category::Dress => &[
                "collar_l",
                "collar_r",
                "shoulder_l",
                "shoulder_r",
                "armpit_l",
                "armpit_r",
                "hem_l",
                "hem_r",
            ],
        }
    }

    /// Fixed keypoint count of the analytic skeleton.
    pub fn landmark_count(self) -> usize {
        self.landmark_names().len()
    }

    /// Template seams carrying activation 1 in the analytic skeleton,
    /// as index pairs into the landmark enumeration.
    fn seams(self) -> &'static [(usize, usize)] {
        match self {
            Category::Top => &[
                (0, 1), // collar
                (0, 2),
                (1, 3),
                (2, 4), // shoulder to cuff
                (3, 5),
                (4, 6), // cuff to armpit
                (5, 7),
                (6, 8), // side seams
                (7, 9),
                (8, 9), // hem
            ],
            Category::Trouser => &[
                (0, 1), // waist
                (0, 4),
                (1, 7), // outer seams
                (2, 3), // crotch
                (2, 5),
                (3, 6), // inseams
                (4, 5),
                (6, 7), // leg hems
            ],
            Category::Dress => &[
                (0, 1),
                (0, 2),
                (1, 3),
                (2, 4),
                (3, 5),
                (4, 6),
                (5, 7),
                (6, 7),
            ],
        }
    }
}

/// Per-vertex part labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartLabel {
    Body,
    SleeveL,
    SleeveR,
    Collar,
    LegL,
    LegR,
    Skirt,
}

/// Size and resolution parameters for one garment. All lengths in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarmentSpec {
    pub category: Category,
    pub body_width: f64,
    pub body_height: f64,
    /// Sleeve length (top/dress) or leg length (trouser). May be zero.
    pub limb_length: f64,
    /// Sleeve width (top/dress) or leg width (trouser).
    pub limb_width: f64,
    /// Collar strip width; ignored for trousers.
    pub collar_width: f64,
    /// Target mesh edge length.
    pub edge_target: f64,
    pub seed: u64,
}

impl GarmentSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_width", self.body_width),
            ("body_height", self.body_height),
            ("limb_width", self.limb_width),
            ("edge_target", self.edge_target),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.limb_length < 0.0 || !self.limb_length.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "limb_length must be >= 0, got {}",
                self.limb_length
            )));
        }
        match self.category {
            Category::Top | Category::Dress => {
                if !(self.collar_width > 0.0) || self.collar_width >= 0.9 * self.body_width {
                    return Err(Error::InvalidSpec(format!(
                        "collar_width must be in (0, 0.9 * body_width), got {}",
                        self.collar_width
                    )));
                }
                if self.limb_width >= self.body_height {
                    return Err(Error::InvalidSpec(
                        "sleeve width must be below body height".into(),
                    ));
                }
            }
            Category::Trouser => {
                if 2.0 * self.limb_width >= self.body_width {
                    return Err(Error::InvalidSpec(
                        "leg widths must leave a crotch gap inside the body width".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Stable 64-bit identity of this spec (and hence of the generated mesh).
    pub fn mesh_id(&self) -> u64 {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

/// Triangulated garment in the canonical flat pose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GarmentMesh {
    pub mesh_id: u64,
    pub spec: GarmentSpec,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub labels: Vec<PartLabel>,
    /// Analytic landmark vertex ids, in the category enumeration order.
    pub skeleton_vertices: Vec<usize>,
    pub canonical_area: f64,
    pub bbox_diagonal: f64,
}

impl GarmentMesh {
    /// Unique undirected edges of the triangulation.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| {
                [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
                    .into_iter()
                    .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn triangle_area(&self, face: [usize; 3]) -> f64 {
        let [a, b, c] = face;
        let ab = self.vertices[b] - self.vertices[a];
        let ac = self.vertices[c] - self.vertices[a];
        0.5 * ab.cross(&ac).norm()
    }

    /// Checks the structural invariants; used by tests and the importer.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.labels.len() != n {
            return Err(Error::MeshMismatch("label count != vertex count".into()));
        }
        if self.faces.iter().flatten().any(|&v| v >= n) {
            return Err(Error::MeshMismatch("face index out of range".into()));
        }
        if self.skeleton_vertices.iter().any(|&v| v >= n) {
            return Err(Error::MeshMismatch("skeleton index out of range".into()));
        }
        if self.skeleton_vertices.len() != self.spec.category.landmark_count() {
            return Err(Error::MeshMismatch("skeleton landmark count".into()));
        }
        // edge-manifold: every undirected edge belongs to at most two faces
        let mut counts = std::collections::HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = if a < b { (a, b) } else { (b, a) };
                *counts.entry(key).or_insert(0usize) += 1;
            }
        }
        if counts.values().any(|&c| c > 2) {
            return Err(Error::MeshMismatch("non-manifold edge".into()));
        }
        // connectivity
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in counts.keys() {
            adj[a].push(b);
            adj[b].push(a);
        }
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::MeshMismatch("mesh not connected".into()));
        }
        let area: f64 = self.faces.iter().map(|&f| self.triangle_area(f)).sum();
        if (area - self.canonical_area).abs() > 1e-9 * self.canonical_area.max(1e-12) {
            return Err(Error::MeshMismatch("canonical area mismatch".into()));
        }
        Ok(())
    }
}

const MIN_VERTICES: usize = 200;
const MAX_VERTICES: usize = 50_000;

/// Skirt hem width as a multiple of the bodice width (dress template).
const DRESS_FLARE: f64 = 1.4;
/// Fraction of the dress body height taken by the skirt.
const DRESS_SKIRT_FRACTION: f64 = 0.6;

// Lattice description shared by the three templates. Columns are integer ids
// where 0..=nx spans the body panel and negative / above-nx ids extend into
// the sleeves; rows count upward from the hem.
struct Lattice {
    col_min: i64,
    col_max: i64,
    rows: usize,
    ids: Vec<Option<usize>>, // (row, col) -> vertex id
    vertices: Vec<Vec3>,
    coords: Vec<(i64, usize)>,
}

impl Lattice {
    fn build(
        col_min: i64,
        col_max: i64,
        rows: usize,
        include: impl Fn(i64, usize) -> bool,
        position: impl Fn(i64, usize) -> (f64, f64),
    ) -> Self {
        let width = (col_max - col_min + 1) as usize;
        let mut ids = vec![None; width * (rows + 1)];
        let mut vertices = Vec::new();
        let mut coords = Vec::new();
        for row in 0..=rows {
            for col in col_min..=col_max {
                if include(col, row) {
                    let (x, y) = position(col, row);
                    let slot = row * width + (col - col_min) as usize;
                    ids[slot] = Some(vertices.len());
                    vertices.push(Vec3::new(x, y, 0.0));
                    coords.push((col, row));
                }
            }
        }
        Lattice {
            col_min,
            col_max,
            rows,
            ids,
            vertices,
            coords,
        }
    }

    fn id(&self, col: i64, row: usize) -> Option<usize> {
        if col < self.col_min || col > self.col_max || row > self.rows {
            return None;
        }
        let width = (self.col_max - self.col_min + 1) as usize;
        self.ids[row * width + (col - self.col_min) as usize]
    }

    fn require(&self, col: i64, row: usize) -> usize {
        self.id(col, row)
            .unwrap_or_else(|| panic!("template landmark missing at ({col}, {row})"))
    }

    /// Two triangles per complete cell, diagonal alternating by parity.
    fn triangulate(&self) -> Vec<[usize; 3]> {
        let mut faces = Vec::new();
        for row in 0..self.rows {
            for col in self.col_min..self.col_max {
                let (ll, lr, ur, ul) = (
                    self.id(col, row),
                    self.id(col + 1, row),
                    self.id(col + 1, row + 1),
                    self.id(col, row + 1),
                );
                if let (Some(ll), Some(lr), Some(ur), Some(ul)) = (ll, lr, ur, ul) {
                    if (col + row as i64) % 2 == 0 {
                        faces.push([ll, lr, ur]);
                        faces.push([ll, ur, ul]);
                    } else {
                        faces.push([ll, lr, ul]);
                        faces.push([lr, ur, ul]);
                    }
                }
            }
        }
        faces
    }
}

// Snapped template dimensions for tops and dress bodices.
struct SleeveLayout {
    nx: i64,
    hx: f64,
    band_rows: usize, // sleeve band height in rows
    ns: i64,          // sleeve columns per side; 0 = vest
    hs: f64,          // sleeve column pitch
}

fn sleeve_layout(spec: &GarmentSpec, body_rows: usize, hy: f64) -> SleeveLayout {
    let nx = ((spec.body_width / spec.edge_target).round() as i64).max(2);
    let hx = spec.body_width / nx as f64;
    let band_rows = ((spec.limb_width / hy).round() as usize).clamp(1, body_rows - 1);
    let ns = (spec.limb_length / hx).round() as i64;
    let hs = if ns > 0 {
        spec.limb_length / ns as f64
    } else {
        0.0
    };
    SleeveLayout {
        nx,
        hx,
        band_rows,
        ns,
        hs,
    }
}

fn finish_mesh(
    spec: &GarmentSpec,
    lattice: Lattice,
    labels: Vec<PartLabel>,
    landmarks: Vec<usize>,
) -> Result<GarmentMesh> {
    let n = lattice.vertices.len();
    if !(MIN_VERTICES..=MAX_VERTICES).contains(&n) {
        return Err(Error::ResolutionOutOfRange {
            vertices: n,
            min: MIN_VERTICES,
            max: MAX_VERTICES,
        });
    }
    let faces = lattice.triangulate();
    let mut mesh = GarmentMesh {
        mesh_id: spec.mesh_id(),
        spec: spec.clone(),
        vertices: lattice.vertices,
        faces,
        labels,
        skeleton_vertices: landmarks,
        canonical_area: 0.0,
        bbox_diagonal: 0.0,
    };
    mesh.canonical_area = mesh.faces.iter().map(|&f| mesh.triangle_area(f)).sum();
    let (mut lo, mut hi) = (mesh.vertices[0], mesh.vertices[0]);
    for v in &mesh.vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    mesh.bbox_diagonal = (hi - lo).norm();
    Ok(mesh)
}

/// Generates the mesh for `spec`. Deterministic: the same spec (including its
/// seed field) always yields byte-identical vertex data.
pub fn generate_garment(spec: &GarmentSpec) -> Result<GarmentMesh> {
    spec.validate()?;
    match spec.category {
        Category::Top => generate_top(spec),
        Category::Trouser => generate_trouser(spec),
        Category::Dress => generate_dress(spec),
    }
}

fn generate_top(spec: &GarmentSpec) -> Result<GarmentMesh> {
    let ny = ((spec.body_height / spec.edge_target).round() as usize).max(2);
    let hy = spec.body_height / ny as f64;
    let lay = sleeve_layout(spec, ny, hy);
    let (nx, band_lo) = (lay.nx, ny - lay.band_rows);

    let x_of = |col: i64| -> f64 {
        if col < 0 {
            -spec.body_width / 2.0 + col as f64 * lay.hs
        } else if col <= nx {
            -spec.body_width / 2.0 + col as f64 * lay.hx
        } else {
            spec.body_width / 2.0 + (col - nx) as f64 * lay.hs
        }
    };
    let lattice = Lattice::build(
        -lay.ns,
        nx + lay.ns,
        ny,
        |col, row| (0..=nx).contains(&col) || row >= band_lo,
        |col, row| (x_of(col), row as f64 * hy),
    );

    // collar span on the top row, symmetric around the midline
    let collar_col = (((spec.body_width - spec.collar_width) / 2.0) / lay.hx).round() as i64;
    let collar_col = collar_col.clamp(1, nx / 2);
    let labels = lattice
        .coords
        .iter()
        .map(|&(col, row)| {
            if row == ny && (collar_col..=nx - collar_col).contains(&col) {
                PartLabel::Collar
            } else if col < 0 {
                PartLabel::SleeveL
            } else if col > nx {
                PartLabel::SleeveR
            } else {
                PartLabel::Body
            }
        })
        .collect();

    let landmarks = vec![
        lattice.require(collar_col, ny),      // collar_l
        lattice.require(nx - collar_col, ny), // collar_r
        lattice.require(0, ny),               // shoulder_l
        lattice.require(nx, ny),              // shoulder_r
        lattice.require(-lay.ns, band_lo),    // cuff_l
        lattice.require(nx + lay.ns, band_lo),
        lattice.require(0, band_lo), // armpit_l
        lattice.require(nx, band_lo),
        lattice.require(0, 0), // hem_l
        lattice.require(nx, 0),
    ];
    finish_mesh(spec, lattice, labels, landmarks)
}

fn generate_trouser(spec: &GarmentSpec) -> Result<GarmentMesh> {
    let nx = ((spec.body_width / spec.edge_target).round() as i64).max(4);
    let hx = spec.body_width / nx as f64;
    let hip_rows = ((spec.body_height / spec.edge_target).round() as usize).max(1);
    let hy_hip = spec.body_height / hip_rows as f64;
    let leg_rows = (spec.limb_length / spec.edge_target).round() as usize;
    let hy_leg = if leg_rows > 0 {
        spec.limb_length / leg_rows as f64
    } else {
        0.0
    };
    // leg width in columns, clamped so a crotch gap of at least one cell remains
    let leg_cols = ((spec.limb_width / hx).round() as i64).clamp(1, (nx - 1) / 2);

    let rows = leg_rows + hip_rows;
    let lattice = Lattice::build(
        0,
        nx,
        rows,
        |col, row| row >= leg_rows || col <= leg_cols || col >= nx - leg_cols,
        |col, row| {
            let y = if row <= leg_rows {
                row as f64 * hy_leg
            } else {
                spec.limb_length + (row - leg_rows) as f64 * hy_hip
            };
            (-spec.body_width / 2.0 + col as f64 * hx, y)
        },
    );

    let labels = lattice
        .coords
        .iter()
        .map(|&(col, row)| {
            if row < leg_rows {
                if col <= leg_cols {
                    PartLabel::LegL
                } else {
                    PartLabel::LegR
                }
            } else {
                PartLabel::Body
            }
        })
        .collect();

    let landmarks = vec![
        lattice.require(0, rows),            // waist_l
        lattice.require(nx, rows),           // waist_r
        lattice.require(leg_cols, leg_rows), // crotch_l
        lattice.require(nx - leg_cols, leg_rows),
        lattice.require(0, 0),        // hem_outer_l
        lattice.require(leg_cols, 0), // hem_inner_l
        lattice.require(nx - leg_cols, 0),
        lattice.require(nx, 0),
    ];
    finish_mesh(spec, lattice, labels, landmarks)
}

fn generate_dress(spec: &GarmentSpec) -> Result<GarmentMesh> {
    let skirt_len = DRESS_SKIRT_FRACTION * spec.body_height;
    let bodice_h = spec.body_height - skirt_len;
    let skirt_rows = ((skirt_len / spec.edge_target).round() as usize).max(1);
    let bodice_rows = ((bodice_h / spec.edge_target).round() as usize).max(2);
    let hy_skirt = skirt_len / skirt_rows as f64;
    let hy_bodice = bodice_h / bodice_rows as f64;
    let lay = sleeve_layout(spec, bodice_rows, hy_bodice);
    let (nx, rows) = (lay.nx, skirt_rows + bodice_rows);
    let band_lo = rows - lay.band_rows;
    let hem_w = DRESS_FLARE * spec.body_width;

    let lattice = Lattice::build(
        -lay.ns,
        nx + lay.ns,
        rows,
        |col, row| (0..=nx).contains(&col) || row >= band_lo,
        |col, row| {
            if row < skirt_rows {
                // skirt row width tapers linearly from the hem to the bodice
                let t = row as f64 / skirt_rows as f64;
                let w = hem_w + (spec.body_width - hem_w) * t;
                let y = row as f64 * hy_skirt;
                (-w / 2.0 + col as f64 * (w / nx as f64), y)
            } else {
                let y = skirt_len + (row - skirt_rows) as f64 * hy_bodice;
                let x = if col < 0 {
                    -spec.body_width / 2.0 + col as f64 * lay.hs
                } else if col <= nx {
                    -spec.body_width / 2.0 + col as f64 * lay.hx
                } else {
                    spec.body_width / 2.0 + (col - nx) as f64 * lay.hs
                };
                (x, y)
            }
        },
    );

    let collar_col = (((spec.body_width - spec.collar_width) / 2.0) / lay.hx).round() as i64;
    let collar_col = collar_col.clamp(1, nx / 2);
    let labels = lattice
        .coords
        .iter()
        .map(|&(col, row)| {
            if row == rows && (collar_col..=nx - collar_col).contains(&col) {
                PartLabel::Collar
            } else if col < 0 {
                PartLabel::SleeveL
            } else if col > nx {
                PartLabel::SleeveR
            } else if row < skirt_rows {
                PartLabel::Skirt
            } else {
                PartLabel::Body
            }
        })
        .collect();

    let landmarks = vec![
        lattice.require(collar_col, rows), // collar_l
        lattice.require(nx - collar_col, rows),
        lattice.require(0, rows), // shoulder_l
        lattice.require(nx, rows),
        lattice.require(0, band_lo), // armpit_l
        lattice.require(nx, band_lo),
        lattice.require(0, 0), // hem_l (skirt corner)
        lattice.require(nx, 0),
    ];
    finish_mesh(spec, lattice, labels, landmarks)
}

/// Analytic skeleton: the template landmarks in enumeration order, with
/// activation 1 on template seams and 0 elsewhere.
pub fn analytic_skeleton(mesh: &GarmentMesh) -> Skeleton {
    let keypoints = mesh
        .skeleton_vertices
        .iter()
        .map(|&vid| Keypoint {
            position: mesh.vertices[vid],
            vertex_id: vid,
        })
        .collect();
    let mut skeleton = Skeleton::new(keypoints);
    for &(i, j) in mesh.spec.category.seams() {
        if mesh.skeleton_vertices[i] != mesh.skeleton_vertices[j] {
            skeleton.set_activation(i, j, 1.0);
        }
    }
    skeleton
}

/// Samples a plausible desk-scale spec for `category`. Used by the `gen` CLI
/// to produce varied garments from one seed.
pub fn sample_spec(
    category: Category,
    edge_target: f64,
    seed: u64,
    rng: &mut impl Rng,
) -> GarmentSpec {
    match category {
        Category::Top => GarmentSpec {
            category,
            body_width: rng.gen_range(0.38..0.55),
            body_height: rng.gen_range(0.48..0.65),
            limb_length: rng.gen_range(0.14..0.30),
            limb_width: rng.gen_range(0.10..0.16),
            collar_width: rng.gen_range(0.12..0.18),
            edge_target,
            seed,
        },
        Category::Trouser => {
            let body_width = rng.gen_range(0.34..0.44);
            GarmentSpec {
                category,
                body_width,
                body_height: rng.gen_range(0.12..0.20),
                limb_length: rng.gen_range(0.45..0.70),
                limb_width: rng.gen_range(0.11..0.45 * body_width),
                collar_width: 0.1 * body_width,
                edge_target,
                seed,
            }
        }
        Category::Dress => GarmentSpec {
            category,
            body_width: rng.gen_range(0.36..0.48),
            body_height: rng.gen_range(0.70..0.92),
            limb_length: rng.gen_range(0.0..0.22),
            limb_width: rng.gen_range(0.10..0.15),
            collar_width: rng.gen_range(0.12..0.16),
            edge_target,
            seed,
        },
    }
}
