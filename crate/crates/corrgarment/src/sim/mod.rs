//! Position-based-dynamics cloth simulation.
//!
//! Particle i is mesh vertex i for all time — every operation preserves the
//! index correspondence, which is what makes point tracing exact. One `step`
//! is: semi-implicit velocity/position prediction under gravity, `iterations`
//! Gauss–Seidel sweeps projecting stretch then bending constraints, collision
//! projection (ground plane, optional capsule colliders), then the velocity
//! update from the position delta. Pinned particles (inverse mass 0) are only
//! ever moved by scripted gripper paths.

use serde::{Deserialize, Serialize};

use crate::garment::GarmentMesh;
use crate::{Error, Result, Vec3};

mod action;
mod record;

pub use action::{
    drop, drop_with_rotation, execute_fling, execute_pick_place, hang_attempt, random_self_play,
    ActionOutcome, ActionPrimitive, Rack,
};
pub use record::{read_episode, EpisodeManifest, EpisodeRecorder};

/// Ground penetration tolerance (meters).
pub const COLLISION_TOLERANCE: f64 = 1e-4;

/// One deformation state of one garment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// 1/kg per particle; 0 means pinned or currently grasped.
    pub inv_mass: Vec<f64>,
    pub mesh_id: u64,
    pub time: f64,
}

impl SimState {
    /// Rest state: particles at the canonical flat pose, uniform mass.
    pub fn from_mesh(mesh: &GarmentMesh) -> Self {
        let n = mesh.vertices.len();
        // ~0.2 kg/m^2 areal density spread uniformly
        let inv_mass = n as f64 / (0.2 * mesh.canonical_area);
        SimState {
            positions: mesh.vertices.clone(),
            velocities: vec![Vec3::zeros(); n],
            inv_mass: vec![inv_mass; n],
            mesh_id: mesh.mesh_id,
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.iter().all(|c| c.is_finite()))
            && self.velocities.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }

    /// Order-stable content hash, used by determinism checks.
    pub fn content_hash(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for p in &self.positions {
            for c in p.iter() {
                hasher.update(c.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

/// Distance constraints: stretch on every mesh edge, bending between the
/// opposite vertices of each adjacent triangle pair.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub stretch: Vec<(usize, usize, f64)>,
    pub bending: Vec<(usize, usize, f64)>,
    pub stretch_stiffness: f64,
    pub bending_stiffness: f64,
}

impl ConstraintSet {
    pub fn from_mesh(mesh: &GarmentMesh) -> Self {
        let dist =
            |a: usize, b: usize| -> f64 { (mesh.vertices[a] - mesh.vertices[b]).norm() };
        let stretch = mesh
            .edges()
            .into_iter()
            .map(|(a, b)| (a, b, dist(a, b)))
            .collect();

        // adjacent triangle pairs share an edge; constrain the opposite vertices
        let mut edge_faces: std::collections::HashMap<(usize, usize), Vec<usize>> =
            std::collections::HashMap::new();
        for (fi, f) in mesh.faces.iter().enumerate() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = if a < b { (a, b) } else { (b, a) };
                edge_faces.entry(key).or_default().push(fi);
            }
        }
        let mut bending = Vec::new();
        let mut keys: Vec<_> = edge_faces.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let faces = &edge_faces[&key];
            if faces.len() == 2 {
                let opposite = |fi: usize| {
                    mesh.faces[fi]
                        .iter()
                        .copied()
                        .find(|&v| v != key.0 && v != key.1)
                        .expect("triangle has an opposite vertex")
                };
                let (a, b) = (opposite(faces[0]), opposite(faces[1]));
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                bending.push((a, b, dist(a, b)));
            }
        }
        ConstraintSet {
            stretch,
            bending,
            stretch_stiffness: 1.0,
            bending_stiffness: 0.05,
        }
    }

    /// Largest relative stretch violation |‖xi−xj‖ − rest| / rest.
    pub fn max_stretch_violation(&self, state: &SimState) -> f64 {
        self.stretch
            .iter()
            .map(|&(i, j, rest)| ((state.positions[i] - state.positions[j]).norm() - rest).abs() / rest)
            .fold(0.0, f64::max)
    }

    fn residual(&self, positions: &[Vec3]) -> f64 {
        let sq = |list: &[(usize, usize, f64)]| -> f64 {
            list.iter()
                .map(|&(i, j, rest)| {
                    let c = (positions[i] - positions[j]).norm() - rest;
                    c * c
                })
                .sum()
        };
        (sq(&self.stretch) + sq(&self.bending)).sqrt()
    }

    /// Stretch-constraint processing order: breadth-first from the pinned
    /// particles. `None` when nothing is pinned (natural order is fine).
    fn propagation_order(&self, inv_mass: &[f64]) -> Option<Vec<usize>> {
        if !inv_mass.iter().any(|&w| w == 0.0) {
            return None;
        }
        let n = inv_mass.len();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ci, &(i, j, _)) in self.stretch.iter().enumerate() {
            adjacency[i].push(ci);
            adjacency[j].push(ci);
        }
        let mut depth = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for (v, &w) in inv_mass.iter().enumerate() {
            if w == 0.0 {
                depth[v] = 0;
                queue.push_back(v);
            }
        }
        let mut order = Vec::with_capacity(self.stretch.len());
        let mut scheduled = vec![false; self.stretch.len()];
        while let Some(v) = queue.pop_front() {
            for &ci in &adjacency[v] {
                if scheduled[ci] {
                    continue;
                }
                scheduled[ci] = true;
                order.push(ci);
                let (i, j, _) = self.stretch[ci];
                let u = if i == v { j } else { i };
                if depth[u] == usize::MAX {
                    depth[u] = depth[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        // disconnected leftovers (nothing pinned on that component)
        for ci in 0..self.stretch.len() {
            if !scheduled[ci] {
                order.push(ci);
            }
        }
        // deepest-first: corrections accumulate toward the pins, which absorb
        // them, instead of letting lower constraints re-stretch the top
        order.reverse();
        Some(order)
    }
}

/// Capsule collider (the hanging rack's bar).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    fn closest_point(&self, p: &Vec3) -> Vec3 {
        let ab = self.b - self.a;
        let t = ((p - self.a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        self.a + ab * t
    }
}

/// Solver parameters. Defaults: dt 1.25 ms, 20 projection iterations,
/// g = (0, 0, -9.8), gripper speed 0.5 m/s, settled when the fastest particle
/// drops below 1 mm/s. The dt default is what keeps the hanging-cloth stretch
/// residual under 2%: PBD equilibrium elongation scales like dt^2/iterations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PbdParams {
    pub dt: f64,
    pub iterations: usize,
    pub gravity: Vec3,
    /// Per-step velocity damping factor.
    pub damping: f64,
    /// Tangential position-delta retention for particles in ground contact
    /// (0 = sticky, 1 = frictionless).
    pub ground_friction: f64,
    /// Tangential position-delta retention on a capsule collider.
    pub capsule_friction: f64,
    pub gripper_speed: f64,
    pub settle_speed: f64,
    pub settle_max_steps: usize,
}

impl Default for PbdParams {
    fn default() -> Self {
        PbdParams {
            dt: 0.00125,
            iterations: 20,
            gravity: Vec3::new(0.0, 0.0, -9.8),
            damping: 0.99,
            ground_friction: 0.12,
            capsule_friction: 0.10,
            gripper_speed: 0.5,
            settle_speed: 1e-3,
            settle_max_steps: 2000,
        }
    }
}

/// Advances `state` by one PBD step. Pinned particles do not move.
pub fn step(
    state: &SimState,
    constraints: &ConstraintSet,
    params: &PbdParams,
) -> Result<SimState> {
    let mut next = state.clone();
    step_in_place(&mut next, constraints, params, &[], None)?;
    Ok(next)
}

/// As [`step`], recording the constraint residual after each projection sweep.
pub fn step_with_residuals(
    state: &SimState,
    constraints: &ConstraintSet,
    params: &PbdParams,
) -> Result<(SimState, Vec<f64>)> {
    let mut next = state.clone();
    let mut residuals = Vec::new();
    step_in_place(&mut next, constraints, params, &[], Some(&mut residuals))?;
    Ok((next, residuals))
}

pub(crate) fn step_in_place(
    state: &mut SimState,
    constraints: &ConstraintSet,
    params: &PbdParams,
    colliders: &[Capsule],
    mut residuals: Option<&mut Vec<f64>>,
) -> Result<()> {
    if params.dt <= 0.0 || params.dt > 0.02 {
        return Err(Error::InvalidArgument(format!(
            "dt must be in (0, 0.02], got {}",
            params.dt
        )));
    }
    if params.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("sim state".into()));
    }

    let n = state.len();
    let dt = params.dt;
    let prev: Vec<Vec3> = state.positions.clone();

    // predict
    for i in 0..n {
        if state.inv_mass[i] > 0.0 {
            state.velocities[i] = (state.velocities[i] + params.gravity * dt) * params.damping;
            state.positions[i] += state.velocities[i] * dt;
        }
    }

    // Gauss-Seidel projection. When particles are pinned, constraints are
    // swept in BFS order away from the pins, which lets tension propagate the
    // length of the cloth within a single sweep instead of one edge per sweep.
    let order = constraints.propagation_order(&state.inv_mass);
    let project = |positions: &mut [Vec3],
                   inv_mass: &[f64],
                   list: &[(usize, usize, f64)],
                   order: Option<&[usize]>,
                   stiffness: f64| {
        let mut apply = |&(i, j, rest): &(usize, usize, f64)| {
            let w_sum = inv_mass[i] + inv_mass[j];
            if w_sum == 0.0 {
                return;
            }
            let delta = positions[i] - positions[j];
            let len = delta.norm();
            if len <= 1e-12 {
                return;
            }
            let correction = delta * (stiffness * (len - rest) / (len * w_sum));
            positions[i] -= correction * inv_mass[i];
            positions[j] += correction * inv_mass[j];
        };
        match order {
            Some(order) => order.iter().for_each(|&c| apply(&list[c])),
            None => list.iter().for_each(&mut apply),
        }
    };
    let ks = constraints.stretch_stiffness;
    let per_sweep = |k: f64, iters: usize| 1.0 - (1.0 - k).powf(1.0 / iters as f64);
    let kb = per_sweep(constraints.bending_stiffness, params.iterations);
    for _ in 0..params.iterations {
        project(
            &mut state.positions,
            &state.inv_mass,
            &constraints.stretch,
            order.as_deref(),
            ks,
        );
        project(&mut state.positions, &state.inv_mass, &constraints.bending, None, kb);
        if let Some(r) = residuals.as_deref_mut() {
            r.push(constraints.residual(&state.positions));
        }
    }

    // collisions; friction acts on the tangential position delta within a
    // contact, since constraint projections move positions directly and
    // velocity-only friction would let contacts creep
    for i in 0..n {
        if state.inv_mass[i] == 0.0 {
            continue;
        }
        for capsule in colliders {
            let closest = capsule.closest_point(&state.positions[i]);
            let radial = state.positions[i] - closest;
            let dist = radial.norm();
            if dist < capsule.radius {
                let dir = if dist > 1e-12 {
                    radial / dist
                } else {
                    Vec3::new(0.0, 0.0, 1.0)
                };
                state.positions[i] = closest + dir * capsule.radius;
                let delta = state.positions[i] - prev[i];
                let radial_delta = dir * delta.dot(&dir);
                let tangential = delta - radial_delta;
                state.positions[i] =
                    prev[i] + radial_delta + tangential * params.capsule_friction;
            }
        }
        if state.positions[i].z < 0.0 {
            state.positions[i].z = 0.0;
            state.positions[i].x =
                prev[i].x + (state.positions[i].x - prev[i].x) * params.ground_friction;
            state.positions[i].y =
                prev[i].y + (state.positions[i].y - prev[i].y) * params.ground_friction;
        }
    }

    // velocity update
    for i in 0..n {
        if state.inv_mass[i] == 0.0 {
            state.velocities[i] = Vec3::zeros();
            continue;
        }
        state.velocities[i] = (state.positions[i] - prev[i]) / dt;
    }
    state.time += dt;
    Ok(())
}

/// Steps until the fastest particle is slower than `params.settle_speed` or
/// the step cap is reached. Returns whether the state settled.
pub fn settle(
    state: &mut SimState,
    constraints: &ConstraintSet,
    params: &PbdParams,
    colliders: &[Capsule],
) -> Result<bool> {
    for _ in 0..params.settle_max_steps {
        step_in_place(state, constraints, params, colliders, None)?;
        if state.max_speed() < params.settle_speed {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests;
