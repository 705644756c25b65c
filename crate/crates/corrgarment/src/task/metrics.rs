//! Ground-plane silhouette metrics: coverage ratio and fold IoU.
//!
//! Silhouettes are rasterized at a fixed resolution onto a global integer
//! lattice (cell = floor(coord / resolution)), so masks from different
//! rasterizations share alignment by construction. A cell is covered when its
//! center lies inside some projected triangle.

use std::collections::HashSet;

use crate::garment::GarmentMesh;
use crate::sim::SimState;
use crate::{Error, Result, Vec3};

/// Raster resolution for all silhouette metrics (meters per cell).
pub const RASTER_RESOLUTION: f64 = 0.002;

/// Rasterized ground-plane silhouette.
#[derive(Debug, Clone)]
pub struct SilhouetteMask {
    pub resolution: f64,
    pub cells: HashSet<(i32, i32)>,
}

impl SilhouetteMask {
    pub fn area(&self) -> f64 {
        self.cells.len() as f64 * self.resolution * self.resolution
    }

    fn centroid(&self) -> (f64, f64) {
        let n = self.cells.len() as f64;
        let (sx, sy) = self
            .cells
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(ix, iy)| {
                (sx + ix as f64 + 0.5, sy + iy as f64 + 0.5)
            });
        (sx / n * self.resolution, sy / n * self.resolution)
    }

    /// Orientation of the principal axis, in radians, defined up to pi.
    fn principal_angle(&self) -> f64 {
        let (cx, cy) = self.centroid();
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &(ix, iy) in &self.cells {
            let x = (ix as f64 + 0.5) * self.resolution - cx;
            let y = (iy as f64 + 0.5) * self.resolution - cy;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        0.5 * (2.0 * sxy).atan2(sxx - syy)
    }
}

/// Rasterizes the xy-projection of a triangle soup.
pub fn rasterize(positions: &[Vec3], faces: &[[usize; 3]], resolution: f64) -> SilhouetteMask {
    let mut cells = HashSet::new();
    for f in faces {
        let [a, b, c] = [positions[f[0]], positions[f[1]], positions[f[2]]];
        let min_x = a.x.min(b.x).min(c.x);
        let max_x = a.x.max(b.x).max(c.x);
        let min_y = a.y.min(b.y).min(c.y);
        let max_y = a.y.max(b.y).max(c.y);
        let ix0 = (min_x / resolution).floor() as i32;
        let ix1 = (max_x / resolution).floor() as i32;
        let iy0 = (min_y / resolution).floor() as i32;
        let iy1 = (max_y / resolution).floor() as i32;
        // signed edge functions, tolerant of either winding
        let edge = |px: f64, py: f64, qx: f64, qy: f64, x: f64, y: f64| {
            (qx - px) * (y - py) - (qy - py) * (x - px)
        };
        for ix in ix0..=ix1 {
            for iy in iy0..=iy1 {
                let x = (ix as f64 + 0.5) * resolution;
                let y = (iy as f64 + 0.5) * resolution;
                let e0 = edge(a.x, a.y, b.x, b.y, x, y);
                let e1 = edge(b.x, b.y, c.x, c.y, x, y);
                let e2 = edge(c.x, c.y, a.x, a.y, x, y);
                let eps = 1e-12;
                if (e0 >= -eps && e1 >= -eps && e2 >= -eps)
                    || (e0 <= eps && e1 <= eps && e2 <= eps)
                {
                    cells.insert((ix, iy));
                }
            }
        }
    }
    SilhouetteMask { resolution, cells }
}

/// Projected silhouette area divided by the canonical flat area.
pub fn coverage_ratio(state: &SimState, mesh: &GarmentMesh) -> Result<f64> {
    if state.mesh_id != mesh.mesh_id {
        return Err(Error::MeshMismatch("state does not belong to mesh".into()));
    }
    let mask = rasterize(&state.positions, &mesh.faces, RASTER_RESOLUTION);
    Ok(mask.area() / mesh.canonical_area)
}

/// Plain raster IoU of two masks on the shared lattice.
pub fn raster_iou(a: &SilhouetteMask, b: &SilhouetteMask) -> f64 {
    assert_eq!(a.resolution, b.resolution, "mask resolutions differ");
    let inter = a.cells.intersection(&b.cells).count();
    let union = a.cells.union(&b.cells).count();
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Fold IoU: registers the garment silhouette to the target by centroid and
/// principal axis (both axis senses tried, best kept), then rasterizes.
pub fn fold_iou(state: &SimState, mesh: &GarmentMesh, target: &SilhouetteMask) -> Result<f64> {
    if state.mesh_id != mesh.mesh_id {
        return Err(Error::MeshMismatch("state does not belong to mesh".into()));
    }
    let raw = rasterize(&state.positions, &mesh.faces, target.resolution);
    if raw.cells.is_empty() || target.cells.is_empty() {
        return Ok(0.0);
    }
    let (gx, gy) = raw.centroid();
    let (tx, ty) = target.centroid();
    let garment_angle = raw.principal_angle();
    let target_angle = target.principal_angle();

    let mut best = 0.0f64;
    for flip in [0.0, std::f64::consts::PI] {
        let rot = target_angle - garment_angle + flip;
        let (sin, cos) = rot.sin_cos();
        let moved: Vec<Vec3> = state
            .positions
            .iter()
            .map(|p| {
                let (dx, dy) = (p.x - gx, p.y - gy);
                Vec3::new(
                    tx + cos * dx - sin * dy,
                    ty + sin * dx + cos * dy,
                    p.z,
                )
            })
            .collect();
        let mask = rasterize(&moved, &mesh.faces, target.resolution);
        best = best.max(raster_iou(&mask, target));
    }
    Ok(best)
}

/// Fold goal silhouettes derivable from the canonical pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldTarget {
    /// The flat canonical silhouette (zero-action folds).
    Flat,
    /// Hem folded up onto the upper half across the horizontal midline.
    HalfFold,
    /// Sleeves folded onto the body, then the half fold.
    SleevesThenHalf,
}

/// Canonical vertex positions after the ideal fold transform.
pub fn fold_target_positions(mesh: &GarmentMesh, target: FoldTarget) -> Vec<Vec3> {
    let mut positions = mesh.vertices.clone();
    let fold_sleeves = |positions: &mut Vec<Vec3>| {
        let half_w = mesh.spec.body_width / 2.0;
        for (p, &label) in positions.iter_mut().zip(&mesh.labels) {
            match label {
                crate::garment::PartLabel::SleeveL if p.x < -half_w => {
                    p.x = -2.0 * half_w - p.x;
                }
                crate::garment::PartLabel::SleeveR if p.x > half_w => {
                    p.x = 2.0 * half_w - p.x;
                }
                _ => {}
            }
        }
    };
    let half_fold = |positions: &mut Vec<Vec3>| {
        let y_min = positions.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let y_max = positions.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (y_min + y_max);
        for p in positions.iter_mut() {
            if p.y < mid {
                p.y = 2.0 * mid - p.y;
            }
        }
    };
    match target {
        FoldTarget::Flat => {}
        FoldTarget::HalfFold => half_fold(&mut positions),
        FoldTarget::SleevesThenHalf => {
            fold_sleeves(&mut positions);
            half_fold(&mut positions);
        }
    }
    positions
}

/// Rasterized target silhouette for a fold goal.
pub fn fold_target_mask(mesh: &GarmentMesh, target: FoldTarget) -> SilhouetteMask {
    let positions = fold_target_positions(mesh, target);
    rasterize(&positions, &mesh.faces, RASTER_RESOLUTION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garment::{generate_garment, tests::top_spec};
    use crate::sim::SimState;

    #[test]
    fn flat_canonical_pose_covers_its_own_area() {
        let mesh = generate_garment(&top_spec()).unwrap();
        let state = SimState::from_mesh(&mesh);
        let ratio = coverage_ratio(&state, &mesh).unwrap();
        assert!((ratio - 1.0).abs() <= 0.02, "ratio {ratio}");
    }

    #[test]
    fn exact_half_fold_covers_half_the_area() {
        // vest with the crease on a lattice row, so the fold is exact
        let mut spec = top_spec();
        spec.limb_length = 0.0;
        spec.body_height = 0.6;
        let vest = generate_garment(&spec).unwrap();
        let mut state = SimState::from_mesh(&vest);
        let y_max = spec.body_height;
        for p in &mut state.positions {
            if p.y < y_max / 2.0 {
                p.y = y_max - p.y;
            }
        }
        let ratio = coverage_ratio(&state, &vest).unwrap();
        assert!((ratio - 0.5).abs() <= 0.02, "ratio {ratio}");
    }

    // Exact polygon-union oracle on a two-triangle toy: union area by
    // inclusion-exclusion with Sutherland-Hodgman clipping.
    #[test]
    fn raster_coverage_matches_exact_polygon_union_oracle() {
        let tri_a = [[0.0, 0.0], [0.3, 0.0], [0.0, 0.3]];
        let tri_b = [[0.1, 0.05], [0.4, 0.05], [0.1, 0.35]];

        fn polygon_area(poly: &[[f64; 2]]) -> f64 {
            let n = poly.len();
            let mut acc = 0.0;
            for i in 0..n {
                let j = (i + 1) % n;
                acc += poly[i][0] * poly[j][1] - poly[j][0] * poly[i][1];
            }
            acc.abs() / 2.0
        }

        fn clip(subject: Vec<[f64; 2]>, a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
            let inside = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0;
            let intersect = |p: [f64; 2], q: [f64; 2]| -> [f64; 2] {
                let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let t = (ex * (a[1] - p[1]) - ey * (a[0] - p[0])) / (ex * dy - ey * dx);
                [p[0] + t * dx, p[1] + t * dy]
            };
            let mut out = Vec::new();
            for i in 0..subject.len() {
                let cur = subject[i];
                let prev = subject[(i + subject.len() - 1) % subject.len()];
                match (inside(cur), inside(prev)) {
                    (true, true) => out.push(cur),
                    (true, false) => {
                        out.push(intersect(prev, cur));
                        out.push(cur);
                    }
                    (false, true) => out.push(intersect(prev, cur)),
                    (false, false) => {}
                }
            }
            out
        }

        let mut inter = tri_a.to_vec();
        for i in 0..3 {
            if inter.is_empty() {
                break;
            }
            inter = clip(inter, tri_b[i], tri_b[(i + 1) % 3]);
        }
        let exact_union =
            polygon_area(&tri_a) + polygon_area(&tri_b) - polygon_area(&inter);

        let positions: Vec<crate::Vec3> = tri_a
            .iter()
            .chain(tri_b.iter())
            .map(|p| crate::Vec3::new(p[0], p[1], 0.0))
            .collect();
        let faces = vec![[0usize, 1, 2], [3, 4, 5]];
        let mask = rasterize(&positions, &faces, RASTER_RESOLUTION);
        let raster_area = mask.area();
        assert!(
            (raster_area - exact_union).abs() <= 0.01 * exact_union,
            "raster {raster_area} vs exact {exact_union}"
        );
    }

    #[test]
    fn raster_iou_matches_closed_form_on_axis_aligned_rectangles() {
        // rectangles [0, 0.3] x [0, 0.2] and [0.1, 0.4] x [0.05, 0.25]
        let rect = |x0: f64, y0: f64, x1: f64, y1: f64| -> (Vec<crate::Vec3>, Vec<[usize; 3]>) {
            let v = vec![
                crate::Vec3::new(x0, y0, 0.0),
                crate::Vec3::new(x1, y0, 0.0),
                crate::Vec3::new(x1, y1, 0.0),
                crate::Vec3::new(x0, y1, 0.0),
            ];
            (v, vec![[0, 1, 2], [0, 2, 3]])
        };
        let (va, fa) = rect(0.0, 0.0, 0.3, 0.2);
        let (vb, fb) = rect(0.1, 0.05, 0.4, 0.25);
        let ma = rasterize(&va, &fa, RASTER_RESOLUTION);
        let mb = rasterize(&vb, &fb, RASTER_RESOLUTION);
        let got = raster_iou(&ma, &mb);

        let inter = (0.3f64 - 0.1).max(0.0) * (0.2f64 - 0.05).max(0.0);
        let union = 0.3 * 0.2 + 0.3 * 0.2 - inter;
        let exact = inter / union;
        assert!((got - exact).abs() <= 0.01, "raster {got} vs exact {exact}");
    }

    #[test]
    fn disjoint_masks_have_zero_iou() {
        let (va, fa) = (
            vec![
                crate::Vec3::new(0.0, 0.0, 0.0),
                crate::Vec3::new(0.1, 0.0, 0.0),
                crate::Vec3::new(0.0, 0.1, 0.0),
            ],
            vec![[0usize, 1, 2]],
        );
        let (vb, fb) = (
            vec![
                crate::Vec3::new(1.0, 1.0, 0.0),
                crate::Vec3::new(1.1, 1.0, 0.0),
                crate::Vec3::new(1.0, 1.1, 0.0),
            ],
            vec![[0usize, 1, 2]],
        );
        let ma = rasterize(&va, &fa, RASTER_RESOLUTION);
        let mb = rasterize(&vb, &fb, RASTER_RESOLUTION);
        assert_eq!(raster_iou(&ma, &mb), 0.0);
    }

    #[test]
    fn target_producing_state_scores_full_iou() {
        let mesh = generate_garment(&top_spec()).unwrap();
        let target = fold_target_mask(&mesh, FoldTarget::HalfFold);
        let mut state = SimState::from_mesh(&mesh);
        state.positions = fold_target_positions(&mesh, FoldTarget::HalfFold);
        let iou = fold_iou(&state, &mesh, &target).unwrap();
        assert!(iou >= 0.98, "iou {iou}");
    }

    #[test]
    fn registration_absorbs_rigid_motion() {
        let mesh = generate_garment(&top_spec()).unwrap();
        let target = fold_target_mask(&mesh, FoldTarget::HalfFold);
        let mut state = SimState::from_mesh(&mesh);
        state.positions = fold_target_positions(&mesh, FoldTarget::HalfFold);
        // translate and rotate the folded garment in the plane
        let (sin, cos) = 0.7f64.sin_cos();
        for p in &mut state.positions {
            let (x, y) = (p.x, p.y);
            p.x = 0.4 + cos * x - sin * y;
            p.y = -0.2 + sin * x + cos * y;
        }
        let iou = fold_iou(&state, &mesh, &target).unwrap();
        assert!(iou >= 0.95, "iou {iou}");
    }
}
