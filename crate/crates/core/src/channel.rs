//! Line-of-sight optical channel: radiation patterns, received and reflected
//! intensities, and per-(O-AP, PD) channel state.
//!
//! Photodiodes and reflectors always face straight up. Sources either point
//! straight down (`Aiming::Vertical`) or have their boresight turned towards a
//! point (`Aiming::AimedAt`). Angles of emission/departure are measured from
//! the boresight, angles of arrival from the PD normal.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::geometry::Scenario;
use crate::optics::BeamformedPattern;
use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest Lambert mode accepted before the semi-angle is treated as zero.
pub const MAX_LAMBERT_MODE: f64 = 1e6;

/// `m_0 = -1 / log2(cos Φ_1/2)`.
pub fn lambert_mode(semi_angle: f64) -> Result<f64> {
    if !(semi_angle > 0.0 && semi_angle < PI / 2.0) {
        return Err(Error::Domain(format!(
            "semi-angle must lie in (0, π/2), got {semi_angle}"
        )));
    }
    let m0 = -1.0 / semi_angle.cos().log2();
    // cos(π/3) rounds to a value whose mode is 1 + 2^-52; snap so the
    // integer fast paths apply.
    let m0 = if (m0 - m0.round()).abs() < 1e-9 { m0.round() } else { m0 };
    if m0 > MAX_LAMBERT_MODE {
        return Err(Error::Domain(format!("Lambert mode {m0:e} exceeds cap")));
    }
    Ok(m0)
}

/// Lambertian intensity per steradian, `(m_0 + 1)/(2π) cos^{m_0} φ`, from the
/// cosine of the emission angle. Unit total power over the hemisphere.
#[inline]
pub fn lambertian_density(m0: f64, cos_phi: f64) -> f64 {
    if cos_phi <= 0.0 {
        return 0.0;
    }
    let c = if m0 == 1.0 { cos_phi } else { cos_phi.powf(m0) };
    (m0 + 1.0) / (2.0 * PI) * c
}

/// Angular intensity distribution of one source.
#[derive(Debug, Clone)]
pub enum RadiationPattern {
    /// Bare LED. The semi-angle cut is applied by the channel, not here, so
    /// the pattern itself integrates to one over the hemisphere.
    Lambertian { m0: f64 },
    /// LED behind the collimating lens. Emission outside the LED cone is
    /// already excluded inside the pattern.
    Beamformed(Arc<BeamformedPattern>),
}

impl RadiationPattern {
    pub fn lambertian(semi_angle: f64) -> Result<Self> {
        Ok(RadiationPattern::Lambertian {
            m0: lambert_mode(semi_angle)?,
        })
    }

    /// Intensity per steradian at departure angle `phi` from the boresight.
    pub fn evaluate(&self, phi: f64) -> f64 {
        match self {
            RadiationPattern::Lambertian { m0 } => lambertian_density(*m0, phi.cos()),
            RadiationPattern::Beamformed(b) => b.evaluate(phi),
        }
    }

    fn evaluate_cos(&self, cos_phi: f64) -> f64 {
        match self {
            RadiationPattern::Lambertian { m0 } => lambertian_density(*m0, cos_phi),
            RadiationPattern::Beamformed(b) => b.evaluate(cos_phi.clamp(-1.0, 1.0).acos()),
        }
    }

    fn applies_semi_angle_cut(&self) -> bool {
        matches!(self, RadiationPattern::Lambertian { .. })
    }
}

/// Where each source's boresight points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aiming {
    Vertical,
    AimedAt(Vector3<f64>),
}

impl Aiming {
    fn boresight(&self, src: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Aiming::Vertical => Vector3::new(0.0, 0.0, -1.0),
            Aiming::AimedAt(t) => {
                let d = t - src;
                let n = d.norm();
                if n > 0.0 {
                    d / n
                } else {
                    Vector3::new(0.0, 0.0, -1.0)
                }
            }
        }
    }
}

/// `R(φ) cos ψ / d²` from one source to an upward-facing surface element,
/// with the LED cone cut applied. With `fov = Some(Ψ)` the receiver FOV is
/// applied too.
fn path_factor(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    src: &Vector3<f64>,
    aiming: &Aiming,
    point: &Vector3<f64>,
    fov: Option<f64>,
) -> f64 {
    let v = point - src;
    let d2 = v.norm_squared();
    if d2 == 0.0 {
        return 0.0;
    }
    let d = d2.sqrt();
    let cos_psi = -v.z / d;
    if cos_psi <= 0.0 {
        return 0.0;
    }
    if let Some(f) = fov {
        if cos_psi < f.cos() {
            return 0.0;
        }
    }
    let cos_phi = aiming.boresight(src).dot(&v) / d;
    if cos_phi <= 0.0 {
        return 0.0;
    }
    if pattern.applies_semi_angle_cut() && cos_phi < scenario.semi_angle.cos() {
        return 0.0;
    }
    pattern.evaluate_cos(cos_phi) * cos_psi / d2
}

/// `I^rx_{m,k} = I^tx R(φ_m) A_unit cos ψ_m / d²` at a PD located at `point`.
pub fn received_intensity(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    m: usize,
    point: &Vector3<f64>,
    aiming: &Aiming,
) -> f64 {
    let src = scenario.oap_position(m);
    scenario.tx_intensity
        * scenario.pd_area
        * path_factor(scenario, pattern, &src, aiming, point, Some(scenario.fov))
}

/// `Σ_m I^rx_m` at a PD located at `point`.
pub fn superposed_intensity(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    point: &Vector3<f64>,
    aiming: &Aiming,
) -> f64 {
    (0..scenario.num_oaps())
        .map(|m| received_intensity(scenario, pattern, m, point, aiming))
        .sum()
}

/// Irradiance on an upward-facing floor element (power per unit area, no PD
/// FOV cut, no PD area). Used for intensity-concentration maps.
pub fn irradiance(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    point: &Vector3<f64>,
    aiming: &Aiming,
) -> f64 {
    scenario
        .oap_positions()
        .iter()
        .map(|src| scenario.tx_intensity * path_factor(scenario, pattern, src, aiming, point, None))
        .sum()
}

/// Mean over the device's PDs of `Σ_m I^rx_{m,k}`: the light falling on the
/// device, used as the illumination of its reflector.
pub fn device_illumination(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    device: &Vector3<f64>,
    aiming: &Aiming,
) -> f64 {
    let pds = scenario.pd_positions(*device);
    pds.iter()
        .map(|p| superposed_intensity(scenario, pattern, p, aiming))
        .sum::<f64>()
        / pds.len() as f64
}

/// `I^ref_m = [Σ_m I^rx] ρ_ref A_unit cos φ_m / d_m²` for every camera `m`.
///
/// The incidence angle at camera `m` is the geometric angle between the
/// upward reflector normal and the direction to that camera; for vertical
/// sources it equals the source's departure angle.
pub fn reflected_intensities(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    target: &Vector3<f64>,
    aiming: &Aiming,
) -> Vec<f64> {
    let illum = device_illumination(scenario, pattern, target, aiming);
    scenario
        .oap_positions()
        .iter()
        .map(|cam| reflection_factor(scenario, target, cam) * illum)
        .collect()
}

pub fn reflected_intensity(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    target: &Vector3<f64>,
    m: usize,
    aiming: &Aiming,
) -> f64 {
    reflected_intensities(scenario, pattern, target, aiming)[m]
}

fn reflection_factor(scenario: &Scenario, target: &Vector3<f64>, cam: &Vector3<f64>) -> f64 {
    let v = cam - target;
    let d2 = v.norm_squared();
    if d2 == 0.0 {
        return 0.0;
    }
    let cos_i = v.z / d2.sqrt();
    if cos_i <= 0.0 {
        return 0.0;
    }
    scenario.reflectance * scenario.pd_area * cos_i / d2
}

/// Gains, distances and propagation delays between every O-AP and every PD
/// of one device. Indexing is `[m][k]`.
#[derive(Debug, Clone)]
pub struct ChannelState {
    /// `h_{m,k} = I^rx_{m,k} / I^tx`.
    pub gains: Vec<Vec<f64>>,
    pub distances: Vec<Vec<f64>>,
    pub delays: Vec<Vec<f64>>,
    pub tx_intensity: f64,
}

impl ChannelState {
    pub fn compute(
        scenario: &Scenario,
        pattern: &RadiationPattern,
        device: &Vector3<f64>,
        aiming: &Aiming,
    ) -> Self {
        let pds = scenario.pd_positions(*device);
        let mut gains = Vec::with_capacity(scenario.num_oaps());
        let mut distances = Vec::with_capacity(scenario.num_oaps());
        for m in 0..scenario.num_oaps() {
            let src = scenario.oap_position(m);
            gains.push(
                pds.iter()
                    .map(|p| scenario.pd_area * path_factor(scenario, pattern, &src, aiming, p, Some(scenario.fov)))
                    .collect(),
            );
            distances.push(pds.iter().map(|p| (p - src).norm()).collect::<Vec<f64>>());
        }
        let delays = distances
            .iter()
            .map(|row| row.iter().map(|d| d / SPEED_OF_LIGHT).collect())
            .collect();
        ChannelState {
            gains,
            distances,
            delays,
            tx_intensity: scenario.tx_intensity,
        }
    }

    pub fn num_oaps(&self) -> usize {
        self.gains.len()
    }

    pub fn num_pds(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    /// Received intensity `I^rx_{m,k} = I^tx h_{m,k}`.
    pub fn received(&self, m: usize, k: usize) -> f64 {
        self.tx_intensity * self.gains[m][k]
    }

    /// Spread between the earliest and latest arrival over all paths.
    pub fn delay_spread(&self) -> f64 {
        let all = self.delays.iter().flatten();
        let max = all.clone().cloned().fold(f64::MIN, f64::max);
        let min = all.cloned().fold(f64::MAX, f64::min);
        if max >= min {
            max - min
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_led() -> Scenario {
        let mut s = Scenario::table2();
        s.layout_radius = 0.0;
        s.layout_angles = vec![0.0];
        s.tx_intensity = 1.0;
        s
    }

    #[test]
    fn lambert_mode_examples() {
        assert!((lambert_mode(PI / 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((lambert_mode(PI / 4.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(lambert_mode(1e-5).is_err());
        assert!(lambert_mode(0.0).is_err());
        assert!(lambert_mode(PI / 2.0).is_err());
    }

    #[test]
    fn directly_below_matches_closed_form() {
        let s = single_led();
        let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
        let i = received_intensity(&s, &pat, 0, &Vector3::zeros(), &Aiming::Vertical);
        let expected = 1e-6 * 9.0 / (PI * 81.0);
        assert!((i - expected).abs() / expected < 1e-12, "{i} vs {expected}");
        assert!((i - 3.537e-8).abs() < 1e-11);
    }

    #[test]
    fn outside_fov_is_zero() {
        let s = single_led();
        let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
        // 70 degrees off-axis from a 3 m ceiling.
        let x = 3.0 * 70f64.to_radians().tan();
        let i = received_intensity(&s, &pat, 0, &Vector3::new(x, 0.0, 0.0), &Aiming::Vertical);
        assert_eq!(i, 0.0);
    }

    #[test]
    fn zero_reflectance_reflects_nothing() {
        let mut s = Scenario::table2();
        s.reflectance = 0.0;
        let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
        let r = reflected_intensities(&s, &pat, &Vector3::zeros(), &Aiming::Vertical);
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reflection_weaker_than_illumination() {
        let s = Scenario::table2();
        let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
        let target = Vector3::zeros();
        let illum = device_illumination(&s, &pat, &target, &Aiming::Vertical);
        for r in reflected_intensities(&s, &pat, &target, &Aiming::Vertical) {
            assert!(r > 0.0 && r < illum);
        }
    }

    #[test]
    fn symmetric_layout_center_is_four_times_single() {
        let s = Scenario::table2();
        let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
        let c = Vector3::zeros();
        let sum = superposed_intensity(&s, &pat, &c, &Aiming::Vertical);
        let one = received_intensity(&s, &pat, 0, &c, &Aiming::Vertical);
        assert!((sum - 4.0 * one).abs() / sum < 1e-12);
    }
}
