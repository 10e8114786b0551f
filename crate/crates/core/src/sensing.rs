//! Multi-camera pinhole localisation.
//!
//! Camera `m` sees the device at film coordinates `p̂_m = f p_C,m / z_C`
//! plus Gaussian noise whose variance falls with the reflected intensity it
//! receives. Since all cameras share one orientation, `p_C,m = p_C,1 +
//! (ϱ_x,m, ϱ_y,m, 0)`, and each camera contributes two linear equations in
//! `p_C,1`:
//!
//! ```text
//! f_x x_C,1 - x̂_m z_C = -f_x ϱ_x,m
//! f_y y_C,1 - ŷ_m z_C = -f_y ϱ_y,m
//! ```

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::exec::{chunks, compensated_sum, Execution};
use crate::geometry::{camera_to_film, CameraRig, Pose};
use crate::modem::frame_rng;
use crate::{Error, Result};

/// Relative singular-value cut used for the rank test.
pub const RANK_TOL: f64 = 1e-10;

/// Trials per worker task in [`run_mse`].
const TRIALS_PER_TASK: usize = 64;

/// Noisy film-plane observation from one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingMeasurement {
    pub camera: usize,
    pub film: Vector2<f64>,
    /// Per-axis noise variance `η σ_I² / I^ref_m`.
    pub variance: f64,
}

/// Noise level of the film-plane measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub eta: f64,
    pub sigma_i2: f64,
}

/// Project the device into every camera that receives reflected light and
/// add noise. Cameras with `I^ref_m = 0` produce no measurement; a single lit
/// camera is left for [`assemble_system`] to reject as rank deficient.
pub fn synthesize_measurements<R: Rng>(
    rig: &CameraRig,
    focal: (f64, f64),
    device: &Vector3<f64>,
    reflected: &[f64],
    noise: NoiseModel,
    rng: &mut R,
) -> Result<Vec<SensingMeasurement>> {
    let lit = reflected.iter().filter(|r| **r > 0.0).count();
    if lit == 0 {
        return Err(Error::InsufficientIllumination(lit));
    }
    let mut out = Vec::with_capacity(lit);
    for (m, (pose, &iref)) in rig.poses.iter().zip(reflected).enumerate() {
        if iref <= 0.0 {
            continue;
        }
        let exact = camera_to_film(&pose.world_to_camera(device), focal.0, focal.1)?;
        let variance = noise.eta * noise.sigma_i2 / iref;
        let sd = variance.sqrt();
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        out.push(SensingMeasurement {
            camera: m,
            film: exact + Vector2::new(sd * ex, sd * ey),
            variance,
        });
    }
    Ok(out)
}

/// Stacked linear system `Σ̂ p_C,1 = γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSystem {
    pub sigma: DMatrix<f64>,
    pub gamma: DVector<f64>,
}

/// Numerical rank from singular values relative to the largest one.
pub fn numeric_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * max).count()
}

pub fn assemble_system(
    measurements: &[SensingMeasurement],
    offsets: &[Vector2<f64>],
    focal: (f64, f64),
) -> Result<SensingSystem> {
    let rows = 2 * measurements.len();
    let mut sigma = DMatrix::zeros(rows, 3);
    let mut gamma = DVector::zeros(rows);
    for (i, m) in measurements.iter().enumerate() {
        let off = offsets[m.camera];
        let r = 2 * i;
        sigma[(r, 0)] = focal.0;
        sigma[(r, 2)] = -m.film.x;
        sigma[(r + 1, 1)] = focal.1;
        sigma[(r + 1, 2)] = -m.film.y;
        gamma[r] = -focal.0 * off.x;
        gamma[r + 1] = -focal.1 * off.y;
    }
    let rank = numeric_rank(&sigma);
    if rank < 3 {
        return Err(Error::RankDeficient(rank));
    }
    Ok(SensingSystem { sigma, gamma })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingSolution {
    /// Estimate in camera-1 coordinates.
    pub camera: Vector3<f64>,
    /// Estimate in world coordinates.
    pub world: Vector3<f64>,
    pub residual_norm: f64,
}

/// Least-squares solve by Householder QR of `Σ̂`.
pub fn solve_position(sys: &SensingSystem, pose1: &Pose) -> Result<SensingSolution> {
    if sys.sigma.nrows() < 3 {
        return Err(Error::RankDeficient(sys.sigma.nrows()));
    }
    let qr = sys.sigma.clone().qr();
    let qtg = qr.q().transpose() * &sys.gamma;
    let x = qr
        .r()
        .solve_upper_triangular(&qtg)
        .ok_or(Error::RankDeficient(2))?;
    let camera = Vector3::new(x[0], x[1], x[2]);
    let residual_norm = (&sys.sigma * &x - &sys.gamma).norm();
    Ok(SensingSolution {
        camera,
        world: pose1.camera_to_world(&camera),
        residual_norm,
    })
}

/// `(Σ̂ᵀΣ̂)⁻¹ Σ̂ᵀ γ`, the closed form. Used to cross-check the QR solve.
pub fn solve_normal_equations(sys: &SensingSystem) -> Result<Vector3<f64>> {
    let ata = sys.sigma.transpose() * &sys.sigma;
    let atb = sys.sigma.transpose() * &sys.gamma;
    let inv = ata.try_inverse().ok_or(Error::RankDeficient(2))?;
    let x = inv * atb;
    Ok(Vector3::new(x[0], x[1], x[2]))
}

/// Full pipeline for one noisy snapshot.
pub fn locate<R: Rng>(
    rig: &CameraRig,
    focal: (f64, f64),
    device: &Vector3<f64>,
    reflected: &[f64],
    noise: NoiseModel,
    rng: &mut R,
) -> Result<SensingSolution> {
    let meas = synthesize_measurements(rig, focal, device, reflected, noise, rng)?;
    let sys = assemble_system(&meas, &rig.offsets, focal)?;
    solve_position(&sys, &rig.poses[0])
}

/// Inputs to a Monte Carlo localisation run.
#[derive(Debug, Clone)]
pub struct MseSetup<'a> {
    pub rig: &'a CameraRig,
    pub focal: (f64, f64),
    pub device: Vector3<f64>,
    /// Frozen `I^ref_m` per camera.
    pub reflected: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub exec: Execution,
}

/// Mean of `‖p̂_D − p_D‖²` over independent trials. Trial `i` always uses
/// RNG stream `i`, so runs at different noise levels share their draws.
pub fn run_mse(setup: &MseSetup, noise: NoiseModel) -> Result<f64> {
    if setup.trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let tasks = chunks(setup.trials, TRIALS_PER_TASK);
    let partial: Vec<Result<Vec<f64>>> = setup.exec.map_indexed(tasks.len(), |i| {
        let (start, len) = tasks[i];
        let mut errs = Vec::with_capacity(len);
        for t in start..start + len {
            let mut rng = frame_rng(setup.seed, t as u64);
            let sol = locate(setup.rig, setup.focal, &setup.device, &setup.reflected, noise, &mut rng)?;
            errs.push((sol.world - setup.device).norm_squared());
        }
        Ok(errs)
    });
    let mut all = Vec::with_capacity(setup.trials);
    for p in partial {
        let v: Vec<f64> = p?;
        all.extend(v);
    }
    Ok(compensated_sum(all) / setup.trials as f64)
}
