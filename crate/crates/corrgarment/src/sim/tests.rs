use super::*;
use crate::garment::{generate_garment, tests::top_spec};
use crate::rng;

fn flat_setup() -> (crate::garment::GarmentMesh, SimState, ConstraintSet) {
    let mesh = generate_garment(&top_spec()).unwrap();
    let state = SimState::from_mesh(&mesh);
    let constraints = ConstraintSet::from_mesh(&mesh);
    (mesh, state, constraints)
}

#[test]
fn flat_resting_cloth_is_in_equilibrium() {
    let (_, state, constraints) = flat_setup();
    let params = PbdParams::default();
    let next = step(&state, &constraints, &params).unwrap();
    for (a, b) in state.positions.iter().zip(&next.positions) {
        assert!((a - b).norm() < 1e-9, "moved by {}", (a - b).norm());
    }
    assert!(next.max_speed() < 1e-9);
}

// One-step closed form of semi-implicit integration: v' = v + g dt, x' = x + v' dt.
#[test]
fn free_fall_matches_closed_form_one_step() {
    let state = SimState {
        positions: vec![Vec3::new(0.0, 0.0, 1.0)],
        velocities: vec![Vec3::zeros()],
        inv_mass: vec![1.0],
        mesh_id: 0,
        time: 0.0,
    };
    let constraints = ConstraintSet {
        stretch: vec![],
        bending: vec![],
        stretch_stiffness: 1.0,
        bending_stiffness: 1.0,
    };
    let params = PbdParams {
        dt: 0.01,
        damping: 1.0,
        ..PbdParams::default()
    };
    let next = step(&state, &constraints, &params).unwrap();
    assert!((next.velocities[0].z - (-0.098)).abs() < 1e-12);
    assert!((next.positions[0].z - (1.0 - 9.8e-4)).abs() < 1e-12);
}

fn hang_from_shoulders() -> (SimState, ConstraintSet, [usize; 2]) {
    let (mesh, mut state, constraints) = flat_setup();
    // stand the garment upright in the x-z plane, bottom 20 cm above ground
    for p in &mut state.positions {
        let y = p.y;
        p.y = 0.0;
        p.z = y + 0.2;
    }
    let shoulders = [mesh.skeleton_vertices[2], mesh.skeleton_vertices[3]];
    for s in shoulders {
        state.inv_mass[s] = 0.0;
    }
    (state, constraints, shoulders)
}

#[test]
fn hanging_cloth_converges_below_two_percent_stretch() {
    let (mut state, constraints, shoulders) = hang_from_shoulders();
    let params = PbdParams::default();
    let pinned_before: Vec<Vec3> = shoulders.iter().map(|&s| state.positions[s]).collect();
    for _ in 0..1500 {
        step_in_place(&mut state, &constraints, &params, &[], None).unwrap();
    }
    let violation = constraints.max_stretch_violation(&state);
    assert!(violation < 0.02, "stretch violation {violation}");
    // pinned particles never move, exactly
    for (&s, before) in shoulders.iter().zip(&pinned_before) {
        assert_eq!(state.positions[s], *before);
    }
}

#[test]
fn projection_residual_is_non_increasing_within_a_step() {
    let (mut state, constraints, _) = hang_from_shoulders();
    let params = PbdParams::default();
    for _ in 0..50 {
        step_in_place(&mut state, &constraints, &params, &[], None).unwrap();
    }
    let (_, residuals) = step_with_residuals(&state, &constraints, &params).unwrap();
    assert_eq!(residuals.len(), params.iterations);
    for w in residuals.windows(2) {
        assert!(
            w[1] <= w[0] * (1.0 + 1e-9),
            "residual increased: {} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn rejects_non_finite_state_and_bad_arguments() {
    let (_, mut state, constraints) = flat_setup();
    let params = PbdParams::default();
    assert!(matches!(
        step(&state, &constraints, &PbdParams { dt: 0.05, ..params.clone() }),
        Err(crate::Error::InvalidArgument(_))
    ));
    assert!(matches!(
        step(&state, &constraints, &PbdParams { iterations: 0, ..params.clone() }),
        Err(crate::Error::InvalidArgument(_))
    ));
    state.positions[0].x = f64::NAN;
    assert!(matches!(
        step(&state, &constraints, &params),
        Err(crate::Error::NonFinite(_))
    ));
}

#[test]
fn noop_pick_place_returns_to_the_settled_input_state() {
    let (_, state, constraints) = flat_setup();
    let params = PbdParams::default();
    let pick = 10;
    let action = ActionPrimitive::PickPlace {
        pick,
        place: state.positions[pick],
    };
    let outcome = execute_pick_place(&state, &action, &constraints, &params).unwrap();
    assert!(outcome.settled);
    for (a, b) in state.positions.iter().zip(&outcome.state.positions) {
        assert!((a - b).norm() < 5e-3, "drifted {}", (a - b).norm());
    }
}

#[test]
fn self_play_is_seeded_and_distinct_across_seeds() {
    let (_, state, constraints) = flat_setup();
    let params = PbdParams::default();
    let run = |seed: u64| {
        let mut r = rng::stream(seed, rng::purpose::SELF_PLAY);
        random_self_play(&state, &constraints, 1, &mut r, &params)
            .unwrap()
            .state
            .content_hash()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn self_play_rejects_zero_actions() {
    let (_, state, constraints) = flat_setup();
    let mut r = rng::stream(1, rng::purpose::SELF_PLAY);
    assert!(random_self_play(&state, &constraints, 0, &mut r, &PbdParams::default()).is_err());
}

#[test]
fn drop_requires_height_in_range_and_rack_above_garment() {
    let (_, state, constraints) = flat_setup();
    let params = PbdParams::default();
    let mut r = rng::stream(2, rng::purpose::DROP_POSE);
    assert!(drop(&state, &constraints, 0.05, &mut r, &params).is_err());
    assert!(drop(&state, &constraints, 1.5, &mut r, &params).is_err());

    let low_rack = Rack::new(Vec3::new(-0.3, 0.0, -0.1), Vec3::new(0.3, 0.0, -0.1), 0.015);
    assert!(hang_attempt(&state, &constraints, 0, &low_rack, &params).is_err());
}

#[test]
fn episode_roundtrip_preserves_frames() {
    let (_, state, _) = flat_setup();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.ugmc");
    let mut rec = EpisodeRecorder::new(state.len());
    rec.record(&state);
    rec.record(&state);
    rec.finish(&path).unwrap();
    let frames = read_episode(&path).unwrap();
    assert_eq!(frames.len(), 2);
    assert_eq!(frames[0].len(), state.len());
    // f32 storage: round trip is exact to f32 resolution
    for (a, b) in frames[0].iter().zip(&state.positions) {
        assert!((a - b).norm() < 1e-6);
    }
}

#[test]
fn probe_actions() {
    use crate::task::metrics::coverage_ratio;
    let (mesh, state, constraints) = flat_setup();
    let params = PbdParams::default();
    let t0 = std::time::Instant::now();

    // 1. pick left cuff, place at right cuff
    let cuff_l = mesh.skeleton_vertices[4];
    let cuff_r = mesh.skeleton_vertices[5];
    let action = ActionPrimitive::PickPlace { pick: cuff_l, place: state.positions[cuff_r] };
    let out = execute_pick_place(&state, &action, &constraints, &params).unwrap();
    let d = (out.state.positions[cuff_l] - state.positions[cuff_r]).xy().norm();
    println!("cuff place dist: {:.4} settled={} speed={:.4} [{:?}]", d, out.settled, out.state.max_speed(), t0.elapsed());

    // 2. dual hem -> shoulders
    let hems = [mesh.skeleton_vertices[8], mesh.skeleton_vertices[9]];
    let shoulders = [mesh.skeleton_vertices[2], mesh.skeleton_vertices[3]];
    let action = ActionPrimitive::DualPickPlace {
        picks: hems,
        places: [state.positions[shoulders[0]], state.positions[shoulders[1]]],
    };
    let fold = execute_pick_place(&state, &action, &constraints, &params).unwrap();
    let d0 = (fold.state.positions[hems[0]] - state.positions[shoulders[0]]).xy().norm();
    let d1 = (fold.state.positions[hems[1]] - state.positions[shoulders[1]]).xy().norm();
    let cov_fold = coverage_ratio(&fold.state, &mesh).unwrap();
    println!("fold dists: {:.4} {:.4} cov={:.3} settled={} speed={:.4} [{:?}]", d0, d1, cov_fold, fold.settled, fold.state.max_speed(), t0.elapsed());

    // 3. selfplay crumple
    let mut r = crate::rng::stream(1, crate::rng::purpose::SELF_PLAY);
    let crumpled = random_self_play(&state, &constraints, 3, &mut r, &params).unwrap();
    let cov_crumpled = coverage_ratio(&crumpled.state, &mesh).unwrap();
    println!("selfplay k=3 cov: {:.3} [{:?}]", cov_crumpled, t0.elapsed());

    // 4. fling crumpled by shoulders
    let fling = ActionPrimitive::Fling { pick_a: shoulders[0], pick_b: shoulders[1] };
    let flung = execute_fling(&crumpled.state, &fling, &constraints, &mesh, &params).unwrap();
    let cov_flung = coverage_ratio(&flung.state, &mesh).unwrap();
    println!("fling cov: {:.3} (was {:.3}) settled={} speed={:.4} [{:?}]", cov_flung, cov_crumpled, flung.settled, flung.state.max_speed(), t0.elapsed());

    // 5. fling flat garment
    let flat_flung = execute_fling(&state, &fling, &constraints, &mesh, &params).unwrap();
    println!("flat fling cov: {:.3} [{:?}]", coverage_ratio(&flat_flung.state, &mesh).unwrap(), t0.elapsed());

    // 6. drops
    let identity = nalgebra::UnitQuaternion::identity();
    let low = drop_with_rotation(&state, &constraints, 0.10001, identity, &params).unwrap();
    println!("drop 0.1 identity cov: {:.3} [{:?}]", coverage_ratio(&low.state, &mesh).unwrap(), t0.elapsed());
    let mut rd = crate::rng::stream(3, crate::rng::purpose::DROP_POSE);
    let high = drop(&state, &constraints, 1.0, &mut rd, &params).unwrap();
    println!("drop 1.0 random cov: {:.3} [{:?}]", coverage_ratio(&high.state, &mesh).unwrap(), t0.elapsed());

    // 7. hang
    let rack = Rack::new(Vec3::new(-0.4, 0.0, 0.5), Vec3::new(0.4, 0.0, 0.5), 0.03);
    let collar_center = {
        let target = Vec3::new(0.0, mesh.spec.body_height, 0.0);
        (0..mesh.vertices.len()).min_by(|&a, &b| {
            (mesh.vertices[a] - target).norm().partial_cmp(&(mesh.vertices[b] - target).norm()).unwrap()
        }).unwrap()
    };
    let (out_c, ok_c) = hang_attempt(&state, &constraints, collar_center, &rack, &params).unwrap();
    let minz_c = out_c.state.positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let above_c = out_c.state.positions.iter().filter(|p| p.z > 0.5).count();
    println!("hang collar: ok={} minz={:.3} above={} [{:?}]", ok_c, minz_c, above_c, t0.elapsed());
    let hem = mesh.skeleton_vertices[8];
    let (out_h, ok_h) = hang_attempt(&state, &constraints, hem, &rack, &params).unwrap();
    let minz_h = out_h.state.positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    println!("hang hem: ok={} minz={:.3} [{:?}]", ok_h, minz_h, t0.elapsed());
}
