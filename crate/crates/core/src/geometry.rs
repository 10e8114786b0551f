//! Scene description and the world / camera / film coordinate transforms.
//!
//! World frame: floor is `z = 0`, ceiling `z = H`, room centred on the
//! z-axis so `x ∈ [-W/2, W/2]`, `y ∈ [-L/2, L/2]`. O-AP `m` sits at
//! `(ε cos ξ_m, ε sin ξ_m, H)` and carries an LED plus a pinhole camera.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::{Error, Result};

/// Tolerance used when checking that a rotation matrix is orthonormal.
pub const ROTATION_TOL: f64 = 1e-12;

/// Room, O-AP layout, receiver and camera parameters. Angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub room_w: f64,
    pub room_l: f64,
    pub room_h: f64,
    pub layout_radius: f64,
    /// One angle per O-AP; the O-AP count is `layout_angles.len()`.
    pub layout_angles: Vec<f64>,
    pub pd_count: usize,
    pub pd_spacing: f64,
    pub pd_area: f64,
    pub semi_angle: f64,
    pub fov: f64,
    pub reflectance: f64,
    pub focal_x: f64,
    pub focal_y: f64,
    /// LED drive intensity `I^tx`. Scales every received and reflected
    /// intensity linearly.
    pub tx_intensity: f64,
}

impl Scenario {
    /// Parameters of the 5 m x 5 m x 3 m room with four O-APs on the
    /// Theorem-1 radius. `tx_intensity` is the calibration discussed in the
    /// README (a unit drive gives no feasible layout at `ρ_I = 0.8e-4`).
    pub fn table2() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Scenario {
            room_w: 5.0,
            room_l: 5.0,
            room_h: 3.0,
            layout_radius: 2.093,
            layout_angles: vec![45.0 * deg, 135.0 * deg, 225.0 * deg, 315.0 * deg],
            pd_count: 4,
            pd_spacing: 0.01,
            pd_area: 1e-6,
            semi_angle: 60.0 * deg,
            fov: 60.0 * deg,
            reflectance: 0.8,
            focal_x: 0.05,
            focal_y: 0.05,
            tx_intensity: 2000.0,
        }
    }

    pub fn num_oaps(&self) -> usize {
        self.layout_angles.len()
    }

    /// Check the invariants and normalise layout angles into `[0, 2π)`.
    pub fn validated(mut self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        for (name, v) in [("room_w", self.room_w), ("room_l", self.room_l), ("room_h", self.room_h)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let eps_max = self.room_w.min(self.room_l);
        if !(0.0..=eps_max).contains(&self.layout_radius) {
            return bad(format!(
                "layout_radius must lie in [0, {eps_max}], got {}",
                self.layout_radius
            ));
        }
        if self.layout_angles.is_empty() {
            return bad("at least one O-AP is required".into());
        }
        let tau = 2.0 * std::f64::consts::PI;
        for a in &mut self.layout_angles {
            if !a.is_finite() {
                return bad("layout angles must be finite".into());
            }
            *a = a.rem_euclid(tau);
            if *a >= tau {
                *a = 0.0;
            }
        }
        let side = (self.pd_count as f64).sqrt().round() as usize;
        if self.pd_count == 0 || side * side != self.pd_count {
            return bad(format!("pd_count must be a positive square number, got {}", self.pd_count));
        }
        if !(self.pd_spacing >= 0.0) {
            return bad(format!("pd_spacing must be non-negative, got {}", self.pd_spacing));
        }
        if !(self.pd_area > 0.0) {
            return bad(format!("pd_area must be positive, got {}", self.pd_area));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        for (name, v) in [("semi_angle", self.semi_angle), ("fov", self.fov)] {
            if !(v > 0.0 && v <= half_pi) {
                return bad(format!("{name} must lie in (0, 90] degrees, got {} rad", v));
            }
        }
        if !(0.0..=1.0).contains(&self.reflectance) {
            return bad(format!("reflectance must lie in [0, 1], got {}", self.reflectance));
        }
        if !(self.focal_x > 0.0 && self.focal_y > 0.0) {
            return bad("focal lengths must be positive".into());
        }
        if !(self.tx_intensity >= 0.0 && self.tx_intensity.is_finite()) {
            return bad(format!("tx_intensity must be non-negative, got {}", self.tx_intensity));
        }
        Ok(self)
    }

    /// Ceiling position of O-AP `m`.
    pub fn oap_position(&self, m: usize) -> Vector3<f64> {
        let xi = self.layout_angles[m];
        Vector3::new(
            self.layout_radius * xi.cos(),
            self.layout_radius * xi.sin(),
            self.room_h,
        )
    }

    pub fn oap_positions(&self) -> Vec<Vector3<f64>> {
        (0..self.num_oaps()).map(|m| self.oap_position(m)).collect()
    }

    /// Photodiode centres of a device at `center`: a `√κ x √κ` square grid
    /// in the horizontal plane with pitch `pd_spacing`.
    pub fn pd_positions(&self, center: Vector3<f64>) -> Vec<Vector3<f64>> {
        let side = (self.pd_count as f64).sqrt().round() as usize;
        let half = (side as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.pd_count);
        for iy in 0..side {
            for ix in 0..side {
                out.push(
                    center
                        + Vector3::new(
                            (ix as f64 - half) * self.pd_spacing,
                            (iy as f64 - half) * self.pd_spacing,
                            0.0,
                        ),
                );
            }
        }
        out
    }

    /// Same scenario with a uniform circular layout
    /// `ξ_m = ξ_0 + 2πm/μ`, `m = 1..μ`.
    pub fn with_circular_layout(&self, mu: usize, eps: f64, xi0: f64) -> Scenario {
        let mut s = self.clone();
        s.layout_radius = eps;
        s.layout_angles = circular_angles(mu, xi0);
        s
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        p.x.abs() <= self.room_w / 2.0 && p.y.abs() <= self.room_l / 2.0 && (0.0..=self.room_h).contains(&p.z)
    }
}

/// Angles `ξ_0 + 2πm/μ` for `m = 1..=μ`, wrapped into `[0, 2π)`.
pub fn circular_angles(mu: usize, xi0: f64) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    (1..=mu)
        .map(|m| (xi0 + tau * m as f64 / mu as f64).rem_euclid(tau))
        .collect()
}

/// Rigid transform `p_C = Q p_D + t` from world to camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let defect = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if defect > ROTATION_TOL || (rotation.determinant() - 1.0).abs() > ROTATION_TOL {
            return Err(Error::Domain(format!(
                "rotation is not proper orthonormal (defect {defect:e}, det {})",
                rotation.determinant()
            )));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }
}

/// Pinhole projection `(f_x x_C / z_C, f_y y_C / z_C)`.
pub fn camera_to_film(p: &Vector3<f64>, fx: f64, fy: f64) -> Result<Vector2<f64>> {
    if p.z.abs() < 1e-12 {
        return Err(Error::DegenerateDepth(p.z.abs()));
    }
    Ok(Vector2::new(fx * p.x / p.z, fy * p.y / p.z))
}

/// Poses of all ceiling cameras plus their offsets `(ϱ_x,m, ϱ_y,m)`
/// relative to camera 1.
#[derive(Debug, Clone)]
pub struct CameraRig {
    pub poses: Vec<Pose>,
    pub offsets: Vec<Vector2<f64>>,
}

/// Rotation shared by every downward-looking camera: x kept, y and z
/// flipped so the optical axis points at the floor.
pub fn downward_rotation() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
}

/// All cameras look straight down with the same orientation and have their
/// pinhole at the O-AP position (`t_m = -Q p_OAP,m`).
pub fn build_default_poses(scenario: &Scenario) -> CameraRig {
    let q = downward_rotation();
    let positions = scenario.oap_positions();
    let poses: Vec<Pose> = positions
        .iter()
        .map(|p| Pose {
            rotation: q,
            translation: -(q * p),
        })
        .collect();
    // p_C,m - p_C,1 = Q (p_1 - p_m) is independent of the observed point.
    let offsets = positions
        .iter()
        .map(|p| {
            let d = q * (positions[0] - p);
            Vector2::new(d.x, d.y)
        })
        .collect();
    CameraRig { poses, offsets }
}
