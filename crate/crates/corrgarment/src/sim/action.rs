//! Scripted manipulation primitives on top of the PBD solver.
//!
//! Grasping pins a particle (inverse mass 0) and drags it along a waypoint
//! path at bounded speed, stepping the simulation between increments, then
//! releases and settles. All primitives are deterministic functions of
//! (state, action, seed).

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{settle, step_in_place, Capsule, ConstraintSet, PbdParams, SimState};
use crate::garment::GarmentMesh;
use crate::{Error, Result, Vec3};

/// Manipulation primitives of the task suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionPrimitive {
    PickPlace {
        pick: usize,
        place: Vec3,
    },
    DualPickPlace {
        picks: [usize; 2],
        places: [Vec3; 2],
    },
    Fling {
        pick_a: usize,
        pick_b: usize,
    },
    Drop {
        height: f64,
    },
    Hang {
        pick: usize,
    },
}

/// Result of a primitive: the final state plus whether it settled before the
/// step cap. An unsettled outcome is not an error; the caller decides.
#[derive(Debug, Clone)]
pub struct ActionOutcome {
    pub state: SimState,
    pub settled: bool,
}

/// Horizontal bar the hang task drapes garments over.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Rack {
    pub bar: Capsule,
}

impl Rack {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Self {
        Rack {
            bar: Capsule { a, b, radius },
        }
    }

    pub fn height(&self) -> f64 {
        0.5 * (self.bar.a.z + self.bar.b.z)
    }

    fn mid(&self) -> Vec3 {
        0.5 * (self.bar.a + self.bar.b)
    }

    fn axis(&self) -> Vec3 {
        let mut d = self.bar.b - self.bar.a;
        d.z = 0.0;
        if d.norm() < 1e-9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            d / d.norm()
        }
    }
}

const LIFT_HEIGHT: f64 = 0.12;
const RELEASE_LAYER_OFFSET: f64 = 1e-3;
const FLING_CLEARANCE: f64 = 0.06;
const FLING_FORWARD: f64 = 0.20;
const FLING_SPEED_FACTOR: f64 = 4.0;
const FLING_HOLD_TIME: f64 = 0.35;
const WORKSPACE_RADIUS: f64 = 0.5;

struct Grasp {
    particle: usize,
    saved_inv_mass: f64,
}

fn grasp(state: &mut SimState, ids: &[usize]) -> Vec<Grasp> {
    ids.iter()
        .map(|&particle| {
            let saved_inv_mass = state.inv_mass[particle];
            state.inv_mass[particle] = 0.0;
            state.velocities[particle] = Vec3::zeros();
            Grasp {
                particle,
                saved_inv_mass,
            }
        })
        .collect()
}

fn release(state: &mut SimState, grasps: Vec<Grasp>, layer_offset: bool) {
    for g in grasps {
        state.inv_mass[g.particle] = g.saved_inv_mass;
        if layer_offset {
            state.positions[g.particle].z += RELEASE_LAYER_OFFSET;
        }
    }
}

/// Drags the grasped particles toward their targets at `speed`, one solver
/// step per increment, until every particle has arrived.
fn move_grasped(
    state: &mut SimState,
    constraints: &ConstraintSet,
    params: &PbdParams,
    colliders: &[Capsule],
    targets: &[(usize, Vec3)],
    speed: f64,
) -> Result<()> {
    let max_step = speed * params.dt;
    loop {
        let mut all_arrived = true;
        for &(particle, target) in targets {
            let delta = target - state.positions[particle];
            let dist = delta.norm();
            if dist > 1e-9 {
                let advance = dist.min(max_step);
                state.positions[particle] += delta * (advance / dist);
                if dist > max_step {
                    all_arrived = false;
                }
            }
        }
        step_in_place(state, constraints, params, colliders, None)?;
        if all_arrived {
            return Ok(());
        }
    }
}

fn lift_translate_lower(
    state: &mut SimState,
    constraints: &ConstraintSet,
    params: &PbdParams,
    picks: &[usize],
    places: &[Vec3],
) -> Result<()> {
    // degenerate action: placing exactly at the current position moves nothing
    let total: f64 = picks
        .iter()
        .zip(places)
        .map(|(&p, place)| (place - state.positions[p]).norm())
        .sum();
    if total < 1e-6 {
        return Ok(());
    }
    let lift = |state: &SimState| -> f64 {
        picks
            .iter()
            .zip(places)
            .map(|(&p, place)| state.positions[p].z.max(place.z))
            .fold(0.0, f64::max)
            + LIFT_HEIGHT
    };
    let lift_z = lift(state);
    let up: Vec<(usize, Vec3)> = picks
        .iter()
        .map(|&p| {
            let mut t = state.positions[p];
            t.z = lift_z;
            (p, t)
        })
        .collect();
    move_grasped(state, constraints, params, &[], &up, params.gripper_speed)?;
    let across: Vec<(usize, Vec3)> = picks
        .iter()
        .zip(places)
        .map(|(&p, place)| (p, Vec3::new(place.x, place.y, lift_z)))
        .collect();
    move_grasped(state, constraints, params, &[], &across, params.gripper_speed)?;
    let down: Vec<(usize, Vec3)> = picks.iter().zip(places).map(|(&p, pl)| (p, *pl)).collect();
    move_grasped(state, constraints, params, &[], &down, params.gripper_speed)
}

/// Pick-place (single or dual arm): grasp, lift–translate–lower, release with
/// the layer z-offset, settle.
pub fn execute_pick_place(
    state: &SimState,
    action: &ActionPrimitive,
    constraints: &ConstraintSet,
    params: &PbdParams,
) -> Result<ActionOutcome> {
    let (picks, places): (Vec<usize>, Vec<Vec3>) = match action {
        ActionPrimitive::PickPlace { pick, place } => (vec![*pick], vec![*place]),
        ActionPrimitive::DualPickPlace { picks, places } => (picks.to_vec(), places.to_vec()),
        other => {
            return Err(Error::InvalidArgument(format!(
                "execute_pick_place got {other:?}"
            )))
        }
    };
    for &p in &picks {
        if p >= state.len() {
            return Err(Error::InvalidArgument(format!("pick id {p} out of range")));
        }
    }
    if places.iter().any(|p| p.z < 0.0) {
        return Err(Error::InvalidArgument("place position below ground".into()));
    }

    let mut next = state.clone();
    let grasps = grasp(&mut next, &picks);
    lift_translate_lower(&mut next, constraints, params, &picks, &places)?;
    release(&mut next, grasps, true);
    let settled = settle(&mut next, constraints, params, &[])?;
    Ok(ActionOutcome {
        state: next,
        settled,
    })
}

/// Dual-arm fling: lift both picks, stretch to 95% of their canonical
/// distance, swing forward then sharply back while lowering, release, settle.
pub fn execute_fling(
    state: &SimState,
    action: &ActionPrimitive,
    constraints: &ConstraintSet,
    mesh: &GarmentMesh,
    params: &PbdParams,
) -> Result<ActionOutcome> {
    let (a, b) = match action {
        ActionPrimitive::Fling { pick_a, pick_b } => (*pick_a, *pick_b),
        other => {
            return Err(Error::InvalidArgument(format!(
                "execute_fling got {other:?}"
            )))
        }
    };
    if a == b {
        return Err(Error::InvalidArgument("fling picks must differ".into()));
    }
    if a >= state.len() || b >= state.len() {
        return Err(Error::InvalidArgument("fling pick out of range".into()));
    }
    let canonical = (mesh.vertices[a] - mesh.vertices[b]).norm();
    let target_sep = 0.95 * canonical;
    // lift clear of the ground: highest hang extent below the grasp pair
    let extent = mesh
        .vertices
        .iter()
        .map(|v| {
            let da = (v - mesh.vertices[a]).norm();
            let db = (v - mesh.vertices[b]).norm();
            da.min(db)
        })
        .fold(0.0, f64::max);
    let fling_height = (extent + FLING_CLEARANCE).clamp(0.25, 0.85);

    let mut next = state.clone();
    let grasps = grasp(&mut next, &[a, b]);

    // lift both grasps straight up
    let up: Vec<(usize, Vec3)> = [a, b]
        .iter()
        .map(|&p| {
            let mut t = next.positions[p];
            t.z = fling_height;
            (p, t)
        })
        .collect();
    move_grasped(&mut next, constraints, params, &[], &up, params.gripper_speed)?;

    // stretch apart around the midpoint until the grasp separation is reached
    let mut sep_dir = next.positions[b] - next.positions[a];
    sep_dir.z = 0.0;
    let sep_dir = if sep_dir.norm() < 1e-9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        sep_dir / sep_dir.norm()
    };
    let mid = 0.5 * (next.positions[a] + next.positions[b]);
    let half = 0.5 * target_sep;
    let stretch_targets = vec![
        (a, mid - sep_dir * half),
        (b, mid + sep_dir * half),
    ];
    move_grasped(
        &mut next,
        constraints,
        params,
        &[],
        &stretch_targets,
        params.gripper_speed,
    )?;

    // scripted swing: forward, then a long backward drag that descends to the
    // ground so the cloth streams out behind the grippers and lays flat
    let swing = Vec3::new(-sep_dir.y, sep_dir.x, 0.0);
    let fling_speed = FLING_SPEED_FACTOR * params.gripper_speed;
    let forward: Vec<(usize, Vec3)> = [a, b]
        .iter()
        .map(|&p| (p, next.positions[p] + swing * FLING_FORWARD))
        .collect();
    move_grasped(&mut next, constraints, params, &[], &forward, fling_speed)?;
    let back_travel = extent + 0.15;
    let back: Vec<(usize, Vec3)> = [a, b]
        .iter()
        .map(|&p| {
            let mut t = next.positions[p] - swing * back_travel;
            t.z = 0.04;
            (p, t)
        })
        .collect();
    move_grasped(&mut next, constraints, params, &[], &back, fling_speed)?;

    // hold while the cloth swings past and lays out in front of the grippers
    let hold_steps = (FLING_HOLD_TIME / params.dt) as usize;
    for _ in 0..hold_steps {
        step_in_place(&mut next, constraints, params, &[], None)?;
    }

    release(&mut next, grasps, false);
    let settled = settle(&mut next, constraints, params, &[])?;
    Ok(ActionOutcome {
        state: next,
        settled,
    })
}

/// Vertices a top-down gripper could grasp: nothing within a gripper radius
/// sits more than 3 mm above them. This is the pick pool for self-play.
pub fn graspable_vertices(state: &SimState) -> Vec<usize> {
    let n = state.len();
    let mut out = Vec::new();
    for i in 0..n {
        let pi = state.positions[i];
        let mut top = true;
        for j in 0..n {
            if i == j {
                continue;
            }
            let pj = state.positions[j];
            let dx = pj.x - pi.x;
            let dy = pj.y - pi.y;
            if dx * dx + dy * dy < 0.01 * 0.01 && pj.z > pi.z + 3e-3 {
                top = false;
                break;
            }
        }
        if top {
            out.push(i);
        }
    }
    out
}

/// Applies `k` uniformly random pick-place actions (random graspable vertex,
/// random place point inside the workspace disk), settling after each.
pub fn random_self_play(
    state: &SimState,
    constraints: &ConstraintSet,
    k: usize,
    rng: &mut ChaCha12Rng,
    params: &PbdParams,
) -> Result<ActionOutcome> {
    if k == 0 {
        return Err(Error::InvalidArgument("self-play needs k >= 1".into()));
    }
    let mut outcome = ActionOutcome {
        state: state.clone(),
        settled: true,
    };
    for _ in 0..k {
        let pool = graspable_vertices(&outcome.state);
        let pick = pool[rng.gen_range(0..pool.len())];
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let radius = WORKSPACE_RADIUS * rng.gen::<f64>().sqrt();
        let place = Vec3::new(radius * theta.cos(), radius * theta.sin(), 0.02);
        let action = ActionPrimitive::PickPlace { pick, place };
        outcome = execute_pick_place(&outcome.state, &action, constraints, params)?;
    }
    Ok(outcome)
}

/// Lifts the garment rigidly to `height` under a seeded uniform random
/// orientation, releases and settles.
pub fn drop(
    state: &SimState,
    constraints: &ConstraintSet,
    height: f64,
    rng: &mut ChaCha12Rng,
    params: &PbdParams,
) -> Result<ActionOutcome> {
    // Shoemake's method: uniform random rotation from three uniforms
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let q = nalgebra::Quaternion::new(
        ((1.0 - u1).sqrt()) * (std::f64::consts::TAU * u2).sin(),
        ((1.0 - u1).sqrt()) * (std::f64::consts::TAU * u2).cos(),
        (u1.sqrt()) * (std::f64::consts::TAU * u3).sin(),
        (u1.sqrt()) * (std::f64::consts::TAU * u3).cos(),
    );
    let rotation = nalgebra::UnitQuaternion::from_quaternion(q);
    drop_with_rotation(state, constraints, height, rotation, params)
}

/// As [`drop`] with an explicit orientation (identity = flat release).
pub fn drop_with_rotation(
    state: &SimState,
    constraints: &ConstraintSet,
    height: f64,
    rotation: nalgebra::UnitQuaternion<f64>,
    params: &PbdParams,
) -> Result<ActionOutcome> {
    if !(height > 0.1 && height <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "drop height must be in (0.1, 1.0], got {height}"
        )));
    }
    let mut next = state.clone();
    let centroid: Vec3 = next.positions.iter().sum::<Vec3>() / next.len() as f64;
    for p in &mut next.positions {
        *p = rotation * (*p - centroid);
    }
    // centroid at `height`, nudged up if a rotated corner would dip too low
    let min_z = next.positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let lift = height + (0.02 - (min_z + height)).max(0.0);
    for p in &mut next.positions {
        p.z += lift;
    }
    for v in &mut next.velocities {
        *v = Vec3::zeros();
    }
    let settled = settle(&mut next, constraints, params, &[])?;
    Ok(ActionOutcome {
        state: next,
        settled,
    })
}

/// Carries the pick point up, across and down over the rack bar, releases and
/// settles against the bar collider. Success means part of the garment ended
/// above the bar with the whole garment hanging clear of the ground (> 5 cm).
pub fn hang_attempt(
    state: &SimState,
    constraints: &ConstraintSet,
    pick: usize,
    rack: &Rack,
    params: &PbdParams,
) -> Result<(ActionOutcome, bool)> {
    if pick >= state.len() {
        return Err(Error::InvalidArgument("hang pick out of range".into()));
    }
    let bar_z = rack.height();
    if bar_z <= 0.0 {
        return Err(Error::InvalidArgument("rack must be above ground".into()));
    }
    let lowest = state.positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    if bar_z <= lowest {
        return Err(Error::InvalidArgument(
            "rack below the garment's lowest point".into(),
        ));
    }

    let mut next = state.clone();
    let grasps = grasp(&mut next, &[pick]);
    let colliders = [rack.bar];
    let axis = rack.axis();
    let normal = Vec3::new(-axis.y, axis.x, 0.0);
    let mid = rack.mid();
    // approach from the side of the bar the pick currently sits on
    let side = {
        let d = next.positions[pick] - mid;
        if d.dot(&normal) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    };

    let clearance = bar_z + 0.22;
    let mut t0 = next.positions[pick];
    t0.z = clearance;
    let near = Vec3::new(
        mid.x + side * normal.x * 0.20,
        mid.y + side * normal.y * 0.20,
        clearance,
    );
    let far = Vec3::new(
        mid.x - side * normal.x * 0.22,
        mid.y - side * normal.y * 0.22,
        clearance,
    );
    let low = Vec3::new(far.x, far.y, bar_z - 0.18);
    for target in [t0, near, far, low] {
        move_grasped(
            &mut next,
            constraints,
            params,
            &colliders,
            &[(pick, target)],
            params.gripper_speed,
        )?;
    }
    release(&mut next, grasps, false);
    let settled = settle(&mut next, constraints, params, &colliders)?;

    let above = next.positions.iter().any(|p| p.z > bar_z);
    let min_z = next.positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let success = above && min_z > 0.05;
    Ok((
        ActionOutcome {
            state: next,
            settled,
        },
        success,
    ))
}
