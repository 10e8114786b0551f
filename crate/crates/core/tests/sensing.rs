mod common;

use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oisac::channel::{reflected_intensities, Aiming, RadiationPattern};
use oisac::exec::Execution;
use oisac::geometry::{build_default_poses, camera_to_film, Scenario};
use oisac::modem::frame_rng;
use oisac::sensing::{
    assemble_system, locate, run_mse, solve_normal_equations, solve_position, synthesize_measurements, MseSetup,
    NoiseModel, SensingMeasurement,
};
use oisac::Error;

const QUIET: NoiseModel = NoiseModel { eta: 1.0, sigma_i2: 0.0 };

fn lit(s: &Scenario, p: &Vector3<f64>) -> Vec<f64> {
    let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
    reflected_intensities(s, &pat, p, &Aiming::Vertical)
}

#[test]
fn noiseless_localisation_is_exact() {
    let s = Scenario::table2();
    let rig = build_default_poses(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..50 {
        let z = [0.0, 0.4, 0.8][i % 3];
        let p = Vector3::new(rng.random_range(-2.4..2.4), rng.random_range(-2.4..2.4), z);
        let sol = locate(&rig, (s.focal_x, s.focal_y), &p, &lit(&s, &p), QUIET, &mut rng).unwrap();
        assert!((sol.world - p).norm() < 1e-9, "{p:?} -> {:?}", sol.world);
    }
}

#[test]
fn a_single_camera_is_rank_deficient() {
    let s = Scenario::table2().with_circular_layout(1, 1.0, 0.3);
    let rig = build_default_poses(&s);
    let p = Vector3::new(0.2, -0.1, 0.0);
    let mut rng = frame_rng(1, 0);
    let r = locate(&rig, (s.focal_x, s.focal_y), &p, &lit(&s, &p), QUIET, &mut rng);
    assert!(matches!(r, Err(Error::RankDeficient(_))), "{r:?}");
}

#[test]
fn mse_scales_linearly_with_noise_power() {
    let s = Scenario::table2();
    let rig = build_default_poses(&s);
    let p = Vector3::new(0.5, 0.5, 0.0);
    let setup = MseSetup {
        rig: &rig,
        focal: (s.focal_x, s.focal_y),
        device: p,
        reflected: lit(&s, &p),
        trials: 1000,
        seed: 17,
        exec: Execution::default(),
    };
    let sig: Vec<f64> = [1e-20, 1e-19, 1e-18].to_vec();
    let mse: Vec<f64> = sig
        .iter()
        .map(|&v| run_mse(&setup, NoiseModel { eta: 1.0, sigma_i2: v }).unwrap())
        .collect();
    let lx: Vec<f64> = sig.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = mse.iter().map(|v| v.log10()).collect();
    let slope = common::ls_slope(&lx, &ly);
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn mse_is_independent_of_execution_mode() {
    let s = Scenario::table2();
    let rig = build_default_poses(&s);
    let p = Vector3::new(-1.0, 0.3, 0.4);
    let mut setup = MseSetup {
        rig: &rig,
        focal: (s.focal_x, s.focal_y),
        device: p,
        reflected: lit(&s, &p),
        trials: 300,
        seed: 2,
        exec: Execution::Sequential,
    };
    let noise = NoiseModel { eta: 1.0, sigma_i2: 1e-19 };
    let a = run_mse(&setup, noise).unwrap();
    setup.exec = Execution::Parallel;
    assert_eq!(a.to_bits(), run_mse(&setup, noise).unwrap().to_bits());
}

#[test]
fn qr_and_normal_equations_agree() {
    let s = Scenario::table2();
    let rig = build_default_poses(&s);
    let p = Vector3::new(0.7, -1.2, 0.0);
    let mut rng = frame_rng(4, 0);
    let noise = NoiseModel { eta: 1.0, sigma_i2: 1e-17 };
    let meas = synthesize_measurements(&rig, (s.focal_x, s.focal_y), &p, &lit(&s, &p), noise, &mut rng).unwrap();
    let sys = assemble_system(&meas, &rig.offsets, (s.focal_x, s.focal_y)).unwrap();
    let qr = solve_position(&sys, &rig.poses[0]).unwrap();
    let ne = solve_normal_equations(&sys).unwrap();
    assert!((qr.camera - ne).norm() < 1e-10);
}

#[test]
fn film_projection_matches_pinhole_formula() {
    // Camera 1 looks down from (ε cos ξ, ε sin ξ, h); the film point is
    // f · (Δx, -Δy) / Δz in its own frame.
    let s = Scenario::table2();
    let rig = build_default_poses(&s);
    let p = Vector3::new(0.3, 0.9, 0.2);
    let c = s.oap_position(0);
    let film = camera_to_film(&rig.poses[0].world_to_camera(&p), s.focal_x, s.focal_y).unwrap();
    let dz = c.z - p.z;
    let expect = Vector2::new(s.focal_x * (p.x - c.x) / dz, -s.focal_y * (p.y - c.y) / dz);
    assert!((film - expect).norm() < 1e-15);
}

proptest! {
    #[test]
    fn gamma_only_depends_on_geometry(x in -0.05f64..0.05, y in -0.05f64..0.05) {
        let s = Scenario::table2();
        let rig = build_default_poses(&s);
        let meas: Vec<SensingMeasurement> = (0..4)
            .map(|c| SensingMeasurement { camera: c, film: Vector2::new(x + 0.01 * c as f64, y), variance: 0.0 })
            .collect();
        let sys = assemble_system(&meas, &rig.offsets, (0.05, 0.05)).unwrap();
        for (i, o) in rig.offsets.iter().enumerate() {
            prop_assert_eq!(sys.gamma[2 * i], -0.05 * o.x);
            prop_assert_eq!(sys.gamma[2 * i + 1], -0.05 * o.y);
        }
    }

    #[test]
    fn noiseless_recovery_anywhere(x in -2.4f64..2.4, y in -2.4f64..2.4, z in 0.0f64..1.0) {
        let s = Scenario::table2();
        let rig = build_default_poses(&s);
        let p = Vector3::new(x, y, z);
        let mut rng = frame_rng(0, 0);
        let sol = locate(&rig, (s.focal_x, s.focal_y), &p, &lit(&s, &p), QUIET, &mut rng).unwrap();
        prop_assert!((sol.world - p).norm() < 1e-9);
    }
}
