//! Collimating-lens optics: LED spectrum, glass dispersion, the Lemma-1 lens
//! normal field, exact meridional ray tracing, the linear AoD approximation
//! and the beamformed radiation pattern.
//!
//! Meridional vectors are `(transverse, axial)` with the LED boresight along
//! `(0, 1)`. A ray leaving the LED at emission angle `φ` has direction
//! `(sin φ, cos φ)`, refracts once at the lens surface (glass to air) and
//! leaves at the signed departure angle `atan2(t_x, t_y)`.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use statrs::function::erf::erf;

use crate::channel::{irradiance, lambert_mode, Aiming, RadiationPattern};
use crate::exec::compensated_sum;
use crate::geometry::Scenario;
use crate::quadrature::{bisect, integrate_pieces, QuadOptions};
use crate::{Error, Result};

/// Relative quadrature tolerance used by the beamformed pattern.
pub const PATTERN_REL_TOL: f64 = 1e-8;

/// Relative spectral density `χ(λ)`, wavelengths in metres.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// Gaussian around `peak`, truncated to `[lo, hi]` and renormalised.
    Gaussian { peak: f64, sigma: f64, lo: f64, hi: f64, norm: f64 },
    /// All power at one wavelength.
    Monochromatic { peak: f64 },
}

impl Spectrum {
    /// Truncated Gaussian with the given full width at half maximum, cut at
    /// `peak ± half_width_fwhm * fwhm`.
    pub fn gaussian(peak: f64, fwhm: f64, half_width_fwhm: f64) -> Result<Self> {
        if !(peak > 0.0 && fwhm > 0.0 && half_width_fwhm > 0.0) {
            return Err(Error::Domain(format!(
                "spectrum needs positive peak, FWHM and support (got {peak}, {fwhm}, {half_width_fwhm})"
            )));
        }
        let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let half = half_width_fwhm * fwhm;
        if half >= peak {
            return Err(Error::Domain("spectrum support reaches zero wavelength".into()));
        }
        let norm = sigma * (2.0 * PI).sqrt() * erf(half / (sigma * 2f64.sqrt()));
        Ok(Spectrum::Gaussian {
            peak,
            sigma,
            lo: peak - half,
            hi: peak + half,
            norm,
        })
    }

    pub fn peak(&self) -> f64 {
        match self {
            Spectrum::Gaussian { peak, .. } | Spectrum::Monochromatic { peak } => *peak,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Spectrum::Gaussian { lo, hi, .. } => (*lo, *hi),
            Spectrum::Monochromatic { peak } => (*peak, *peak),
        }
    }

    /// Density in 1/m. A monochromatic spectrum has no density; it reports 0.
    pub fn density(&self, lambda: f64) -> f64 {
        match self {
            Spectrum::Gaussian { peak, sigma, lo, hi, norm } => {
                if lambda < *lo || lambda > *hi {
                    0.0
                } else {
                    let z = (lambda - peak) / sigma;
                    (-0.5 * z * z).exp() / norm
                }
            }
            Spectrum::Monochromatic { .. } => 0.0,
        }
    }
}

/// Refractive index of the lens glass as a function of wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dispersion {
    /// `n(λ) = n_0 λ_0 / λ`.
    InverseWavelength { n0: f64, lambda0: f64 },
    /// `n(λ) = a + b / λ²`.
    Cauchy { a: f64, b: f64 },
}

impl Dispersion {
    /// Cauchy model passing through `n0` at `lambda0` with coefficient `b` (m²).
    pub fn cauchy_anchored(n0: f64, lambda0: f64, b: f64) -> Self {
        Dispersion::Cauchy {
            a: n0 - b / (lambda0 * lambda0),
            b,
        }
    }

    pub fn index(&self, lambda: f64) -> f64 {
        match *self {
            Dispersion::InverseWavelength { n0, lambda0 } => n0 * lambda0 / lambda,
            Dispersion::Cauchy { a, b } => a + b / (lambda * lambda),
        }
    }
}

/// Refract unit direction `d` at a surface with unit normal `normal`, going
/// from index `n_in` to `n_out`. The normal may point to either side.
pub fn snell_refract(d: Vector2<f64>, normal: Vector2<f64>, n_in: f64, n_out: f64) -> Result<Vector2<f64>> {
    if !(n_in > 0.0 && n_out > 0.0) {
        return Err(Error::Domain(format!("indices must be positive ({n_in}, {n_out})")));
    }
    let mut n = normal;
    let mut cos_i = n.dot(&d);
    if cos_i < 0.0 {
        n = -n;
        cos_i = -cos_i;
    }
    let eta = n_in / n_out;
    let sin_i2 = (1.0 - cos_i * cos_i).max(0.0);
    let sin_t2 = eta * eta * sin_i2;
    if sin_t2 > 1.0 {
        return Err(Error::TotalInternalReflection(sin_t2.sqrt()));
    }
    let cos_t = (1.0 - sin_t2).sqrt();
    Ok(eta * d + (cos_t - eta * cos_i) * n)
}

/// Lemma-1 lens normal at emission angle `phi`:
/// `normalize(n_0 sin φ, n_0 cos φ - 1)`.
pub fn lemma1_normal(phi: f64, n0: f64) -> Vector2<f64> {
    Vector2::new(n0 * phi.sin(), n0 * phi.cos() - 1.0).normalize()
}

/// Lens normal field designed for index `n0` at the spectrum peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensNormalField {
    pub n0: f64,
}

impl LensNormalField {
    pub fn normal(&self, phi: f64) -> Vector2<f64> {
        lemma1_normal(phi, self.n0)
    }
}

/// Signed departure angle of a ray emitted at `phi` with wavelength `lambda`
/// after the single glass-to-air refraction at the lens surface.
///
/// The Lemma-1 surface only collimates for `|phi| < acos(1/n0)`; past that
/// the normal tilts below the horizontal and the trace returns the actual
/// (uncollimated) refraction.
pub fn trace_exact_aod(phi: f64, lambda: f64, dispersion: &Dispersion, lens: &LensNormalField) -> Result<f64> {
    let d = Vector2::new(phi.sin(), phi.cos());
    let t = snell_refract(d, lens.normal(phi), dispersion.index(lambda), 1.0)?;
    Ok(t.x.atan2(t.y))
}

/// Which printed linearisation of the departure angle to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AodForm {
    /// `n(λ)/(n(λ)-1) · (λ-λ_0)/λ · φ`
    Lemma,
    /// `n(λ_0)(λ-λ_0) / ((n(λ_0)-1) λ) · φ`
    Appendix,
}

/// Slope `k(λ)` of the linear AoD model `φ_AoD ≈ k(λ) φ_AoE`.
pub fn compression_coefficient(lambda: f64, lambda0: f64, dispersion: &Dispersion, form: AodForm) -> f64 {
    let n = match form {
        AodForm::Lemma => dispersion.index(lambda),
        AodForm::Appendix => dispersion.index(lambda0),
    };
    n / (n - 1.0) * (lambda - lambda0) / lambda
}

pub fn lemma2_aod_approx(phi: f64, lambda: f64, lambda0: f64, dispersion: &Dispersion, form: AodForm) -> f64 {
    compression_coefficient(lambda, lambda0, dispersion, form) * phi
}

/// Options for [`BeamformedPattern::new`].
#[derive(Debug, Clone, Copy)]
pub struct BeamOptions {
    pub form: AodForm,
    /// Below this departure angle the pattern is replaced by its mean over
    /// the cap, which keeps the on-axis value finite.
    pub floor_rad: f64,
    /// Number of log-spaced table points between the floor and the largest
    /// reachable departure angle.
    pub table_points: usize,
}

impl Default for BeamOptions {
    fn default() -> Self {
        BeamOptions {
            form: AodForm::Appendix,
            floor_rad: 1e-3,
            table_points: 4000,
        }
    }
}

/// Radiation pattern of a Lambertian LED behind the collimating lens.
///
/// Each wavelength maps emission angle to departure angle through the linear
/// model `φ_d = |k(λ)| φ_e` and only rays inside the LED semi-angle exist.
/// Conserving power ring by ring gives
/// `R(φ_d) = ∫ χ(λ) L(φ_e) sin φ_e / (|k| sin φ_d) dλ`, `φ_e = φ_d/|k|`,
/// where `L` is the bare Lambertian density.
#[derive(Debug, Clone)]
pub struct BeamformedPattern {
    pub spectrum: Spectrum,
    pub dispersion: Dispersion,
    pub lambda0: f64,
    pub m0: f64,
    pub semi_angle: f64,
    pub opts: BeamOptions,
    /// Largest departure angle any wavelength reaches.
    pub max_aod: f64,
    cap_value: f64,
    log_phi0: f64,
    log_step: f64,
    table: Vec<f64>,
}

impl BeamformedPattern {
    pub fn new(spectrum: Spectrum, dispersion: Dispersion, semi_angle: f64, opts: BeamOptions) -> Result<Self> {
        let m0 = lambert_mode(semi_angle)?;
        let lambda0 = spectrum.peak();
        let (lo, hi) = spectrum.support();
        for l in [lo, lambda0, hi] {
            if dispersion.index(l) <= 1.0 {
                return Err(Error::Domain(format!("refractive index at {l:e} m is not above 1")));
            }
        }
        if !(opts.floor_rad > 0.0) || opts.table_points < 2 {
            return Err(Error::Domain("beam floor must be positive and table needs 2+ points".into()));
        }
        let kmax = [lo, hi]
            .iter()
            .map(|&l| compression_coefficient(l, lambda0, &dispersion, opts.form).abs())
            .fold(0.0, f64::max);
        let mut p = BeamformedPattern {
            spectrum,
            dispersion,
            lambda0,
            m0,
            semi_angle,
            opts,
            max_aod: kmax * semi_angle,
            cap_value: 0.0,
            log_phi0: opts.floor_rad.ln(),
            log_step: 0.0,
            table: Vec::new(),
        };
        let cap = p.encircled_power(opts.floor_rad)?;
        p.cap_value = cap / (2.0 * PI * (1.0 - opts.floor_rad.cos()));
        if p.max_aod > opts.floor_rad {
            let n = opts.table_points;
            p.log_step = (p.max_aod.ln() - p.log_phi0) / (n - 1) as f64;
            let mut table = Vec::with_capacity(n);
            for i in 0..n {
                let phi = (p.log_phi0 + p.log_step * i as f64).exp();
                table.push(p.density_exact(phi)?);
            }
            p.table = table;
        }
        Ok(p)
    }

    /// Gaussian 450 nm / 20 nm FWHM LED, `n(λ) = 1.4 · 450 nm / λ`.
    pub fn default_led(semi_angle: f64) -> Result<Self> {
        let spectrum = Spectrum::gaussian(450e-9, 20e-9, 3.0)?;
        let dispersion = Dispersion::InverseWavelength { n0: 1.4, lambda0: 450e-9 };
        Self::new(spectrum, dispersion, semi_angle, BeamOptions::default())
    }

    fn k(&self, lambda: f64) -> f64 {
        compression_coefficient(lambda, self.lambda0, &self.dispersion, self.opts.form)
    }

    fn lambertian(&self, phi: f64) -> f64 {
        (self.m0 + 1.0) / (2.0 * PI) * phi.cos().powf(self.m0)
    }

    /// Wavelength intervals on which `|k(λ)| ≥ kmin` (rays with
    /// `φ_e = φ_d/|k|` still inside the LED cone). Assumes `|k|` grows
    /// monotonically away from the peak on each side.
    fn active_bands(&self, kmin: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = self.spectrum.support();
        let mut bands = Vec::new();
        let f = |l: f64| self.k(l).abs() - kmin;
        if f(lo) >= 0.0 {
            let edge = bisect(f, lo, self.lambda0, 1e-18).unwrap_or(lo);
            bands.push((lo, edge));
        }
        if f(hi) >= 0.0 {
            let edge = bisect(f, self.lambda0, hi, 1e-18).unwrap_or(hi);
            bands.push((edge, hi));
        }
        bands
    }

    fn quad_opts() -> QuadOptions {
        QuadOptions {
            abs_tol: 1e-14,
            rel_tol: PATTERN_REL_TOL,
            max_panels: 4000,
        }
    }

    /// Power-conserving density at `phi > 0` without the cap treatment.
    pub fn density_exact(&self, phi: f64) -> Result<f64> {
        if phi <= 0.0 || phi >= self.max_aod {
            return Ok(0.0);
        }
        if matches!(self.spectrum, Spectrum::Monochromatic { .. }) {
            return Ok(0.0);
        }
        let kmin = phi / self.semi_angle;
        let sin_d = phi.sin();
        let f = |l: f64| {
            let k = self.k(l).abs();
            if k < kmin {
                return 0.0;
            }
            let pe = phi / k;
            self.spectrum.density(l) * self.lambertian(pe) * pe.sin() / (k * sin_d)
        };
        let mut total = 0.0;
        for (a, b) in self.active_bands(kmin) {
            total += integrate_pieces(f, &[a, b], Self::quad_opts())?;
        }
        Ok(total)
    }

    /// Power leaving within departure angle `psi` of the boresight.
    pub fn encircled_power(&self, psi: f64) -> Result<f64> {
        let full = 1.0 - self.semi_angle.cos().powf(self.m0 + 1.0);
        if matches!(self.spectrum, Spectrum::Monochromatic { .. }) {
            return Ok(if psi > 0.0 { full } else { 0.0 });
        }
        if psi <= 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.spectrum.support();
        let kmin = psi / self.semi_angle;
        // Rays with |k| <= kmin are entirely inside the cone.
        let f = |l: f64| {
            let k = self.k(l).abs();
            let pe = if k * self.semi_angle <= psi { self.semi_angle } else { psi / k };
            self.spectrum.density(l) * (1.0 - pe.cos().powf(self.m0 + 1.0))
        };
        let mut breaks = vec![lo];
        for (a, b) in self.active_bands(kmin) {
            for e in [a, b] {
                if e > lo && e < hi {
                    breaks.push(e);
                }
            }
        }
        if self.lambda0 > lo && self.lambda0 < hi {
            breaks.push(self.lambda0);
        }
        breaks.push(hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        integrate_pieces(f, &breaks, Self::quad_opts())
    }

    /// Total power the LED emits inside its semi-angle.
    pub fn emitted_power(&self) -> f64 {
        1.0 - self.semi_angle.cos().powf(self.m0 + 1.0)
    }

    /// Pattern value used by the channel (table lookup, cap-averaged near 0).
    pub fn evaluate(&self, phi: f64) -> f64 {
        let phi = phi.abs();
        if phi <= self.opts.floor_rad {
            return self.cap_value;
        }
        if phi >= self.max_aod || self.table.is_empty() {
            return 0.0;
        }
        let t = (phi.ln() - self.log_phi0) / self.log_step;
        let i = (t.floor() as usize).min(self.table.len() - 2);
        let w = t - i as f64;
        self.table[i] * (1.0 - w) + self.table[i + 1] * w
    }

    /// The pattern exactly as printed in Theorem 2, with the emission angle
    /// restricted to the LED cone:
    /// `R*(φ) = ∫ L(φ/|k(λ)|) χ(λ) dλ` over wavelengths with `φ/|k| ≤ Φ_1/2`.
    pub fn theorem2_literal(&self, phi: f64) -> Result<f64> {
        let phi = phi.abs();
        if phi == 0.0 {
            return Ok(self.lambertian(0.0));
        }
        if matches!(self.spectrum, Spectrum::Monochromatic { .. }) {
            return Ok(0.0);
        }
        let kmin = phi / self.semi_angle;
        let f = |l: f64| {
            let k = self.k(l).abs();
            if k < kmin {
                0.0
            } else {
                self.spectrum.density(l) * self.lambertian(phi / k)
            }
        };
        let mut total = 0.0;
        for (a, b) in self.active_bands(kmin) {
            total += integrate_pieces(f, &[a, b], Self::quad_opts())?;
        }
        Ok(total)
    }

    /// Departure angle inside which half the emitted power leaves.
    pub fn half_power_angle(&self) -> Result<f64> {
        let target = 0.5 * self.emitted_power();
        let mut err = None;
        let r = bisect(
            |psi| match self.encircled_power(psi) {
                Ok(p) => p - target,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            1e-9,
            self.max_aod,
            1e-9,
        );
        if let Some(e) = err {
            return Err(e);
        }
        r.ok_or_else(|| Error::Domain("half-power angle not bracketed".into()))
    }
}

/// Angle inside which half of a bare Lambertian LED's in-cone power leaves.
pub fn lambertian_half_power_angle(m0: f64, semi_angle: f64) -> f64 {
    // 1 - cos^{m0+1} ψ = (1 - cos^{m0+1} Φ) / 2
    let c = 0.5 * (1.0 + semi_angle.cos().powf(m0 + 1.0));
    c.powf(1.0 / (m0 + 1.0)).acos()
}

/// Rectangular floor footprint centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub center: Vector3<f64>,
    pub width: f64,
    pub length: f64,
}

/// Floor grid resolution for [`intensity_concentration`].
#[derive(Debug, Clone, Copy)]
pub struct FloorGrid {
    /// Cell size inside the footprint.
    pub fine: f64,
    /// Cell size elsewhere.
    pub coarse: f64,
}

impl Default for FloorGrid {
    fn default() -> Self {
        FloorGrid { fine: 1e-3, coarse: 1e-2 }
    }
}

/// Split `[a, b]` at the given interior points and return midpoint-rule
/// cells `(centre, width)`, with cell size at most `inside` on `[c0, c1]` and
/// at most `outside` elsewhere.
fn graded_cells(a: f64, b: f64, c0: f64, c1: f64, inside: f64, outside: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![a];
    for p in [c0, c1] {
        if p > a && p < b {
            pts.push(p);
        }
    }
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let mut cells = Vec::new();
    for w in pts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e <= s {
            continue;
        }
        let mid = 0.5 * (s + e);
        let h = if mid >= c0 && mid <= c1 { inside } else { outside };
        let n = ((e - s) / h).ceil().max(1.0) as usize;
        let dx = (e - s) / n as f64;
        cells.extend((0..n).map(|i| (s + (i as f64 + 0.5) * dx, dx)));
    }
    cells
}

/// Result of [`intensity_concentration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    /// Irradiance integrated over the footprint.
    pub on_target: f64,
    /// Irradiance integrated over the whole floor.
    pub floor_total: f64,
    /// `on_target / floor_total`.
    pub fraction: f64,
}

/// Share of the floor-integrated irradiance that lands on `target`.
pub fn intensity_concentration(
    scenario: &Scenario,
    pattern: &RadiationPattern,
    target: &Footprint,
    aiming: &Aiming,
    grid: FloorGrid,
) -> Concentration {
    let (hw, hl) = (scenario.room_w / 2.0, scenario.room_l / 2.0);
    let (x0, x1) = (target.center.x - target.width / 2.0, target.center.x + target.width / 2.0);
    let (y0, y1) = (target.center.y - target.length / 2.0, target.center.y + target.length / 2.0);
    let has_area = target.width > 0.0 && target.length > 0.0;
    let xs = graded_cells(-hw, hw, x0, x1, grid.fine, grid.coarse);
    let ys = graded_cells(-hl, hl, y0, y1, grid.fine, grid.coarse);
    let mut on = Vec::with_capacity(ys.len());
    let mut all = Vec::with_capacity(ys.len());
    for &(y, dy) in &ys {
        let mut row_on = 0.0;
        let mut row_all = 0.0;
        for &(x, dx) in &xs {
            let e = irradiance(scenario, pattern, &Vector3::new(x, y, target.center.z), aiming) * dx * dy;
            row_all += e;
            if has_area && x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                row_on += e;
            }
        }
        on.push(row_on);
        all.push(row_all);
    }
    let on_target = compensated_sum(on);
    let floor_total = compensated_sum(all);
    Concentration {
        on_target,
        floor_total,
        fraction: if floor_total > 0.0 { on_target / floor_total } else { 0.0 },
    }
}
