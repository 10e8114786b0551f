//! Circular O-AP layouts: coverage-area objective, uniformity baseline,
//! the Theorem-1 closed form and the exhaustive grid search that serves as
//! ground truth.
//!
//! The floor is discretised into `grid_n x grid_n` midpoint cells. A cell is
//! covered when the superposed intensity at its centre reaches `ρ_I`.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use nalgebra::Vector3;

use crate::channel::{superposed_intensity, Aiming, RadiationPattern};
use crate::exec::{compensated_sum, Execution};
use crate::geometry::{circular_angles, Scenario};
use crate::{Error, Result};

/// Cell-centre coordinates of an `n`-cell midpoint rule on `[-len/2, len/2]`.
pub fn cell_centres(len: f64, n: usize) -> Vec<f64> {
    let h = len / n as f64;
    (0..n).map(|i| -len / 2.0 + (i as f64 + 0.5) * h).collect()
}

/// Superposed intensity at every floor cell (row-major, `y` outer) at height
/// `z` for any pattern and aiming.
pub fn intensity_map(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    aiming: &Aiming,
    grid_n: usize,
    z: f64,
    exec: Execution,
) -> Vec<f64> {
    let xs = cell_centres(scenario.room_w, grid_n);
    let ys = cell_centres(scenario.room_l, grid_n);
    exec.map_indexed(grid_n, |j| {
        xs.iter()
            .map(|&x| superposed_intensity(scenario, pattern, &Vector3::new(x, ys[j], z), aiming))
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Share of floor cells whose superposed intensity reaches `rho_i`
/// (vertical sources, floor level).
pub fn area_fraction(scenario: &Scenario, pattern: &RadiationPattern, rho_i: f64, grid_n: usize, exec: Execution) -> f64 {
    let map = intensity_map(scenario, pattern, &Aiming::Vertical, grid_n, 0.0, exec);
    map.iter().filter(|v| **v >= rho_i).count() as f64 / map.len() as f64
}

/// Spatial variance of the superposed floor intensity.
pub fn uniformity_mse(scenario: &Scenario, pattern: &RadiationPattern, grid_n: usize, exec: Execution) -> f64 {
    let map = intensity_map(scenario, pattern, &Aiming::Vertical, grid_n, 0.0, exec);
    variance(&map)
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = compensated_sum(v.iter().cloned()) / n;
    compensated_sum(v.iter().map(|x| (x - mean) * (x - mean))) / n
}

/// Both objectives of one layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutObjectiveReport {
    pub area_fraction: f64,
    pub uniformity_mse: f64,
    pub grid_n: usize,
    pub rho_i: f64,
}

pub fn evaluate_layout(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    rho_i: f64,
    grid_n: usize,
    exec: Execution,
) -> LayoutObjectiveReport {
    let map = intensity_map(scenario, pattern, &Aiming::Vertical, grid_n, 0.0, exec);
    LayoutObjectiveReport {
        area_fraction: map.iter().filter(|v| **v >= rho_i).count() as f64 / map.len() as f64,
        uniformity_mse: variance(&map),
        grid_n,
        rho_i,
    }
}

/// Specialised floor evaluator for bare Lambertian LEDs pointing down at
/// a horizontal plane. Per cell it only needs `Σ_m D_m^{-(m_0+3)/2}` with
/// `D_m = dx² + dy² + h²`, which keeps the grid search tractable.
#[derive(Debug, Clone)]
pub struct LambertianFloor {
    xs: Vec<f64>,
    ys: Vec<f64>,
    h2: f64,
    /// Cells with `D` above this are outside the LED cone or the PD FOV.
    d_max: f64,
    m0: f64,
    /// Intensity = `scale · Σ_m D_m^{-(m_0+3)/2}`.
    scale: f64,
}

impl LambertianFloor {
    pub fn new(scenario: &Scenario, m0: f64, grid_n: usize, z: f64) -> Self {
        let h = scenario.room_h - z;
        let c = scenario.semi_angle.cos().max(scenario.fov.cos());
        LambertianFloor {
            xs: cell_centres(scenario.room_w, grid_n),
            ys: cell_centres(scenario.room_l, grid_n),
            h2: h * h,
            d_max: h * h / (c * c),
            m0,
            scale: scenario.tx_intensity * scenario.pd_area * (m0 + 1.0) / (2.0 * PI) * h.powf(m0 + 1.0),
        }
    }

    pub fn cells(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    /// Calls `row(j, sums)` for every floor row with the per-cell sums
    /// `Σ_m D_m^{-(m_0+3)/2}`.
    fn for_each_row<F: FnMut(usize, &[f64])>(&self, sources: &[(f64, f64)], mut row: F) {
        let n = self.xs.len();
        let dx2: Vec<Vec<f64>> = sources
            .iter()
            .map(|(sx, _)| self.xs.iter().map(|x| (x - sx) * (x - sx)).collect())
            .collect();
        let mut acc = vec![0.0; n];
        let d_max = self.d_max;
        // d^-(m0+3)/2 with d = squared distance; integer modes avoid powf.
        let k = self.m0 + 3.0;
        let integer = k.fract() == 0.0 && k <= 64.0;
        let linear = self.m0 == 1.0;
        let (half, odd) = ((k as i32) / 2, (k as i32) % 2 == 1);
        let p = -k / 2.0;
        for (j, y) in self.ys.iter().enumerate() {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for ((_, sy), dx2) in sources.iter().zip(&dx2) {
                let base = (y - sy) * (y - sy) + self.h2;
                if linear {
                    for (a, d) in acc.iter_mut().zip(dx2) {
                        let dd = d + base;
                        let t = 1.0 / (dd * dd);
                        *a += if dd <= d_max { t } else { 0.0 };
                    }
                } else if integer {
                    for (a, d) in acc.iter_mut().zip(dx2) {
                        let dd = d + base;
                        let t = dd.powi(half) * if odd { dd.sqrt() } else { 1.0 };
                        *a += if dd <= d_max { 1.0 / t } else { 0.0 };
                    }
                } else {
                    for (a, d) in acc.iter_mut().zip(dx2) {
                        let dd = d + base;
                        *a += if dd <= d_max { dd.powf(p) } else { 0.0 };
                    }
                }
            }
            row(j, &acc);
        }
    }

    /// Number of cells whose intensity reaches `rho_i`.
    pub fn covered_cells(&self, sources: &[(f64, f64)], rho_i: f64) -> usize {
        let thr = rho_i / self.scale;
        let mut count = 0;
        self.for_each_row(sources, |_, acc| {
            count += acc.iter().filter(|a| **a >= thr).count();
        });
        count
    }

    /// Full intensity map, row-major with `y` outer.
    pub fn map(&self, sources: &[(f64, f64)]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells());
        self.for_each_row(sources, |_, acc| out.extend(acc.iter().map(|a| a * self.scale)));
        out
    }
}

fn circular_sources(mu: usize, eps: f64, xi0: f64) -> Vec<(f64, f64)> {
    circular_angles(mu, xi0)
        .into_iter()
        .map(|a| (eps * a.cos(), eps * a.sin()))
        .collect()
}

/// Which printed form of the Theorem-1 radius to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem1Variant {
    /// `tan²(π/ρ_I)` exactly as printed.
    Literal,
    /// `tan²(π/μ)`, the form the derivation actually produces.
    MuVariant,
}

/// Closed-form layout and the intermediate quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Layout {
    /// Radius actually used (clamped to the inscribed circle of the room).
    pub eps: f64,
    /// Radius straight from the formula.
    pub eps_unclamped: f64,
    /// `ξ*_m = 2π(m-1)/μ + π/4`.
    pub angles: Vec<f64>,
    /// Equivalent initial phase in the `ξ_0 + 2πm/μ` convention.
    pub xi0: f64,
}

/// Theorem 1:
/// `ε* = sqrt( (sqrt(A H² / (π s ρ_I / 2)) − H²) / tan²(·) )`, with the
/// adjacent-pair share `s` (printed as 4/5, giving `5 A H² / (2π ρ_I)`).
/// `A` includes the LED drive intensity.
pub fn theorem1_layout(
    scenario: &Scenario,
    mu: usize,
    rho_i: f64,
    variant: Theorem1Variant,
    adjacent_share: f64,
) -> Result<Theorem1Layout> {
    if mu < 2 {
        return Err(Error::Domain("Theorem 1 needs at least two O-APs".into()));
    }
    if !(rho_i > 0.0) || !(adjacent_share > 0.0) {
        return Err(Error::Domain("threshold and adjacent share must be positive".into()));
    }
    let a = scenario.tx_intensity * scenario.pd_area;
    let h2 = scenario.room_h * scenario.room_h;
    let d = (2.0 * a * h2 / (PI * adjacent_share * rho_i)).sqrt();
    let radicand = d - h2;
    if radicand < 0.0 {
        return Err(Error::InfeasibleThreshold { rho_i, radicand });
    }
    let t = match variant {
        Theorem1Variant::Literal => (PI / rho_i).tan(),
        Theorem1Variant::MuVariant => (PI / mu as f64).tan(),
    };
    let eps_unclamped = (radicand / (t * t)).sqrt();
    let eps = eps_unclamped.min(scenario.room_w.min(scenario.room_l) / 2.0);
    let tau = 2.0 * PI;
    let angles = (0..mu)
        .map(|m| (tau * m as f64 / mu as f64 + FRAC_PI_4).rem_euclid(tau))
        .collect();
    Ok(Theorem1Layout {
        eps,
        eps_unclamped,
        angles,
        xi0: (FRAC_PI_4 - tau / mu as f64).rem_euclid(tau),
    })
}

/// `F(ξ_0)` from the angle derivation, evaluated at diagonal coordinate `x`.
pub fn symmetry_function_f(xi0: f64, mu: usize, eps: f64, h: f64, x: f64) -> f64 {
    (1..=mu)
        .map(|m| {
            let a = xi0 + 2.0 * PI * m as f64 / mu as f64;
            let num = -SQRT_2 * eps * (a - FRAC_PI_4).sin() * x;
            let den = eps * eps + h * h + 2.0 * x * x - 2.0 * SQRT_2 * eps * (a + FRAC_PI_4).sin() * x;
            num / (den * den * den)
        })
        .sum()
}

/// Diagonal coordinate of the critical point used by default for `F`:
/// the symmetry-axis distance `ε / cos(π/μ)` projected onto the diagonal.
pub fn default_diagonal_x(eps: f64, mu: usize) -> f64 {
    eps / (SQRT_2 * (PI / mu as f64).cos())
}

/// Centre of odd symmetry of `F`, `ξ_a = π/4 − 2π/μ`.
pub fn symmetry_centre(mu: usize) -> f64 {
    FRAC_PI_4 - 2.0 * PI / mu as f64
}

/// Search ranges for the grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_step: f64,
    pub xi_min: f64,
    /// Exclusive upper end.
    pub xi_max: f64,
    pub xi_step: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            eps_min: 0.0,
            eps_max: 2.5,
            eps_step: 0.01,
            xi_min: 0.0,
            xi_max: PI / 2.0,
            xi_step: 0.01,
        }
    }
}

impl SearchSpace {
    pub fn eps_values(&self) -> Vec<f64> {
        let n = ((self.eps_max - self.eps_min) / self.eps_step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.eps_min + i as f64 * self.eps_step).collect()
    }

    pub fn xi_values(&self) -> Vec<f64> {
        let n = ((self.xi_max - self.xi_min) / self.xi_step - 1e-9).ceil().max(1.0) as usize;
        (0..n).map(|i| self.xi_min + i as f64 * self.xi_step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub eps: f64,
    pub xi0: f64,
    pub value: f64,
}

/// Outcome of an exhaustive layout search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub eps: f64,
    pub xi0: f64,
    /// Objective at the optimum (area fraction or uniformity MSE).
    pub value: f64,
    /// Every evaluated point, `ε` outer and `ξ_0` inner.
    pub surface: Vec<SurfacePoint>,
}

/// Exhaustive maximiser of the covered area over uniform circular layouts
/// `ξ_m = ξ_0 + 2πm/μ`. Ties go to the smallest `ε`, then smallest `ξ_0`.
pub fn grid_search_layout(
    scenario: &Scenario,
    m0: f64,
    mu: usize,
    rho_i: f64,
    space: &SearchSpace,
    grid_n: usize,
    exec: Execution,
) -> SearchResult {
    let floor = LambertianFloor::new(scenario, m0, grid_n, 0.0);
    let eps = space.eps_values();
    let xis = space.xi_values();
    let nx = xis.len();
    let counts = exec.map_indexed(eps.len() * nx, |i| {
        floor.covered_cells(&circular_sources(mu, eps[i / nx], xis[i % nx]), rho_i)
    });
    let mut best = 0;
    for (i, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = i;
        }
    }
    let cells = floor.cells() as f64;
    let surface = counts
        .iter()
        .enumerate()
        .map(|(i, c)| SurfacePoint {
            eps: eps[i / nx],
            xi0: xis[i % nx],
            value: *c as f64 / cells,
        })
        .collect();
    SearchResult {
        eps: eps[best / nx],
        xi0: xis[best % nx],
        value: counts[best] as f64 / cells,
        surface,
    }
}

/// Exhaustive minimiser of the floor-intensity variance, same layout family
/// and tie rule as [`grid_search_layout`].
pub fn grid_search_uniformity(
    scenario: &Scenario,
    m0: f64,
    mu: usize,
    space: &SearchSpace,
    grid_n: usize,
    exec: Execution,
) -> SearchResult {
    let floor = LambertianFloor::new(scenario, m0, grid_n, 0.0);
    let eps = space.eps_values();
    let xis = space.xi_values();
    let nx = xis.len();
    let mses = exec.map_indexed(eps.len() * nx, |i| {
        variance(&floor.map(&circular_sources(mu, eps[i / nx], xis[i % nx])))
    });
    let mut best = 0;
    for (i, v) in mses.iter().enumerate() {
        if *v < mses[best] {
            best = i;
        }
    }
    let surface = mses
        .iter()
        .enumerate()
        .map(|(i, v)| SurfacePoint {
            eps: eps[i / nx],
            xi0: xis[i % nx],
            value: *v,
        })
        .collect();
    SearchResult {
        eps: eps[best / nx],
        xi0: xis[best % nx],
        value: mses[best],
        surface,
    }
}

/// Area fraction of a circular layout using the fast evaluator.
pub fn circular_area_fraction(scenario: &Scenario, m0: f64, mu: usize, eps: f64, xi0: f64, rho_i: f64, grid_n: usize) -> f64 {
    let floor = LambertianFloor::new(scenario, m0, grid_n, 0.0);
    floor.covered_cells(&circular_sources(mu, eps, xi0), rho_i) as f64 / floor.cells() as f64
}

/// Distance from `xi` to the nearest angle congruent to `target` modulo
/// `period`.
pub fn angular_distance_mod(xi: f64, target: f64, period: f64) -> f64 {
    let d = (xi - target).rem_euclid(period);
    d.min(period - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_space_sizes() {
        let s = SearchSpace::default();
        assert_eq!(s.eps_values().len(), 251);
        assert_eq!(s.xi_values().len(), 158);
        assert!((s.eps_values()[250] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn theorem1_angles_mu4() {
        let s = Scenario::table2();
        let t = theorem1_layout(&s, 4, 0.8e-4, Theorem1Variant::MuVariant, 0.8).unwrap();
        let expected = [FRAC_PI_4, 3.0 * FRAC_PI_4, 5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4];
        for (a, e) in t.angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!((symmetry_centre(4) + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn theorem1_infeasible_at_unit_drive() {
        let mut s = Scenario::table2();
        s.tx_intensity = 1.0;
        assert!(matches!(
            theorem1_layout(&s, 4, 0.8e-4, Theorem1Variant::MuVariant, 0.8),
            Err(Error::InfeasibleThreshold { .. })
        ));
    }

    #[test]
    fn angular_distance_wraps() {
        assert!((angular_distance_mod(0.1, 1.6, PI / 2.0) - (1.6 - 0.1 - PI / 2.0).abs()).abs() < 1e-12);
        assert_eq!(angular_distance_mod(0.3, 0.3, 1.0), 0.0);
    }
}
