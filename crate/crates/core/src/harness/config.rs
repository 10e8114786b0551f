//! TOML experiment configuration.
//!
//! Scenario keys live at the top level; everything else sits in optional
//! tables with defaults. Unknown keys are rejected so typos surface as
//! errors with a line number instead of silently falling back.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::geometry::Scenario;
use crate::layout_opt::{SearchSpace, Theorem1Variant};
use crate::modem::{Constellation, EbN0Reference, OfdmConfig};
use crate::optics::{AodForm, BeamOptions, Dispersion, Spectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub room_w: f64,
    pub room_l: f64,
    pub room_h: f64,
    pub num_oaps: usize,
    pub layout_radius: f64,
    pub layout_angles_deg: Vec<f64>,
    pub pd_count: usize,
    pub pd_spacing: f64,
    pub pd_area: f64,
    pub semi_angle_deg: f64,
    pub fov_deg: f64,
    pub reflectance: f64,
    pub focal_length: f64,
    #[serde(default = "one")]
    pub tx_intensity: f64,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub ofdm: OfdmSection,
    #[serde(default)]
    pub sensing: SensingSection,
    #[serde(default)]
    pub optics: OpticsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub layout: LayoutSection,
    #[serde(default)]
    pub coverage: CoverageSection,
    #[serde(default)]
    pub targets: TargetSection,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    /// Device (PD array centre) position in metres.
    pub position: [f64; 3],
    /// Footprint used for intensity concentration, metres.
    pub footprint: [f64; 2],
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection {
            position: [0.5, 0.5, 0.0],
            footprint: [0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSection {
    pub num_subcarriers: usize,
    pub dc_bias_sigma: f64,
    pub clipping: bool,
    pub sample_period: f64,
    pub num_bits: u64,
    pub phase1_constellation: String,
    pub phase2_constellation: String,
    pub ebn0_reference: String,
}

impl Default for OfdmSection {
    fn default() -> Self {
        OfdmSection {
            num_subcarriers: 32,
            dc_bias_sigma: 3.0,
            clipping: false,
            sample_period: 1e-7,
            num_bits: 200_000,
            phase1_constellation: "bpsk".into(),
            phase2_constellation: "qam16".into(),
            ebn0_reference: "transmit".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingSection {
    pub eta: f64,
    pub trials: usize,
}

impl Default for SensingSection {
    fn default() -> Self {
        SensingSection { eta: 1.0, trials: 1000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub lambda0_nm: f64,
    pub fwhm_nm: f64,
    /// Spectrum support half-width in FWHM units.
    pub support_fwhm: f64,
    pub n0: f64,
    /// "inverse" (n ∝ 1/λ) or "cauchy".
    pub dispersion: String,
    /// Cauchy `b` coefficient in nm² (only for "cauchy").
    pub cauchy_b_nm2: f64,
    /// "appendix" or "lemma".
    pub aod_form: String,
    pub beam_floor_rad: f64,
    pub table_points: usize,
    /// Wavelength probed by the AoD sweep.
    pub probe_lambda_nm: f64,
    pub sweep_max_rad: f64,
    pub sweep_step_rad: f64,
    /// Floor-grid cell sizes for concentration integrals (metres).
    pub fine_cell: f64,
    pub coarse_cell: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        OpticsSection {
            lambda0_nm: 450.0,
            fwhm_nm: 20.0,
            support_fwhm: 3.0,
            n0: 1.4,
            dispersion: "inverse".into(),
            cauchy_b_nm2: 4200.0,
            aod_form: "appendix".into(),
            beam_floor_rad: 1e-3,
            table_points: 4000,
            probe_lambda_nm: 420.0,
            sweep_max_rad: 0.4,
            sweep_step_rad: 0.005,
            fine_cell: 1e-3,
            coarse_cell: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub ebn0_start_db: f64,
    pub ebn0_stop_db: f64,
    pub ebn0_step_db: f64,
    /// Sensing SNR axis: `σ_I² = 10^(-snr/10)`.
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            ebn0_start_db: 0.0,
            ebn0_stop_db: 120.0,
            ebn0_step_db: 2.0,
            snr_start_db: 100.0,
            snr_stop_db: 240.0,
            snr_step_db: 2.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    pub rho_i: f64,
    pub grid_n: usize,
    /// "mu", "literal" or "both".
    pub variant: String,
    pub adjacent_share: f64,
    pub mus: Vec<usize>,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_step: f64,
    pub xi_step: f64,
    /// Also run the uniformity-MSE search for comparison.
    pub compare_uniformity: bool,
}

impl Default for LayoutSection {
    fn default() -> Self {
        LayoutSection {
            rho_i: 0.8e-4,
            grid_n: 512,
            variant: "both".into(),
            adjacent_share: 0.8,
            mus: vec![3, 4, 5, 6],
            eps_min: 0.0,
            eps_max: 2.5,
            eps_step: 0.01,
            xi_step: 0.01,
            compare_uniformity: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageSection {
    /// Intensity map resolution.
    pub grid_n: usize,
    /// Resolution of the (Monte Carlo) BER and MSE maps.
    pub map_grid_n: usize,
    pub map_bits: u64,
    pub map_trials: usize,
    pub map_ebn0_db: f64,
    pub map_snr_db: f64,
}

impl Default for CoverageSection {
    fn default() -> Self {
        CoverageSection {
            grid_n: 100,
            map_grid_n: 10,
            map_bits: 10_000,
            map_trials: 100,
            map_ebn0_db: 90.0,
            map_snr_db: 200.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub ber: f64,
    pub mse: f64,
    pub lo_db: f64,
    pub hi_db: f64,
    pub tol_db: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        TargetSection {
            ber: 1e-4,
            mse: 1e-4,
            lo_db: -20.0,
            hi_db: 300.0,
            tol_db: 0.01,
        }
    }
}

/// Validated configuration ready for the experiments.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    pub device: Vector3<f64>,
    pub footprint: (f64, f64),
    pub ofdm: OfdmConfig,
    pub phase2_constellation: Constellation,
    pub num_bits: u64,
    pub ebn0_reference: EbN0Reference,
    pub eta: f64,
    pub trials: usize,
    pub spectrum: Spectrum,
    pub dispersion: Dispersion,
    pub beam: BeamOptions,
    pub probe_lambda: f64,
    pub sweep_max_rad: f64,
    pub sweep_step_rad: f64,
    pub fine_cell: f64,
    pub coarse_cell: f64,
    pub ebn0_db: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub rho_i: f64,
    pub layout_grid_n: usize,
    pub variants: Vec<Theorem1Variant>,
    pub adjacent_share: f64,
    pub mus: Vec<usize>,
    pub search: SearchSpace,
    pub compare_uniformity: bool,
    pub coverage: CoverageSection,
    pub targets: TargetSection,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Inclusive arithmetic range `start, start+step, ...` up to `stop`.
pub fn arange(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(cfg_err(format!("bad range {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

pub fn parse_constellation(s: &str) -> Result<Constellation> {
    match s.to_ascii_lowercase().as_str() {
        "bpsk" => Ok(Constellation::Bpsk),
        "qam16" | "16qam" => Ok(Constellation::Qam16),
        other => Err(cfg_err(format!("unknown constellation '{other}' (bpsk, qam16)"))),
    }
}

pub fn parse_form(s: &str) -> Result<AodForm> {
    match s.to_ascii_lowercase().as_str() {
        "appendix" => Ok(AodForm::Appendix),
        "lemma" => Ok(AodForm::Lemma),
        other => Err(cfg_err(format!("unknown AoD form '{other}' (appendix, lemma)"))),
    }
}

pub fn parse_variant(s: &str) -> Result<Theorem1Variant> {
    match s.to_ascii_lowercase().as_str() {
        "mu" | "mu_variant" => Ok(Theorem1Variant::MuVariant),
        "literal" => Ok(Theorem1Variant::Literal),
        other => Err(cfg_err(format!("unknown Theorem-1 variant '{other}' (mu, literal)"))),
    }
}

/// `"both"` expands to the µ-variant followed by the literal form.
pub fn parse_variants(s: &str) -> Result<Vec<Theorem1Variant>> {
    if s.eq_ignore_ascii_case("both") {
        Ok(vec![Theorem1Variant::MuVariant, Theorem1Variant::Literal])
    } else {
        Ok(vec![parse_variant(s)?])
    }
}

impl RawConfig {
    pub fn from_toml_str(text: &str) -> Result<RawConfig> {
        toml::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<RawConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => cfg_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn into_config(self) -> Result<Config> {
        if self.num_oaps != self.layout_angles_deg.len() {
            return Err(cfg_err(format!(
                "num_oaps = {} but layout_angles_deg has {} entries",
                self.num_oaps,
                self.layout_angles_deg.len()
            )));
        }
        let scenario = Scenario {
            room_w: self.room_w,
            room_l: self.room_l,
            room_h: self.room_h,
            layout_radius: self.layout_radius,
            layout_angles: self.layout_angles_deg.iter().map(|d| d.to_radians()).collect(),
            pd_count: self.pd_count,
            pd_spacing: self.pd_spacing,
            pd_area: self.pd_area,
            semi_angle: self.semi_angle_deg.to_radians(),
            fov: self.fov_deg.to_radians(),
            reflectance: self.reflectance,
            focal_x: self.focal_length,
            focal_y: self.focal_length,
            tx_intensity: self.tx_intensity,
        }
        .validated()?;
        let device = Vector3::from(self.device.position);
        if !scenario.contains(&device) {
            return Err(cfg_err(format!("device.position {:?} lies outside the room", self.device.position)));
        }
        let o = &self.ofdm;
        let mut ofdm = OfdmConfig::new(o.num_subcarriers, parse_constellation(&o.phase1_constellation)?);
        ofdm.dc_bias_sigma = o.dc_bias_sigma;
        ofdm.clipping = o.clipping;
        ofdm.sample_period = o.sample_period;
        ofdm.validate()?;
        if o.num_bits < 1 {
            return Err(cfg_err("ofdm.num_bits must be positive"));
        }
        let ebn0_reference = match o.ebn0_reference.to_ascii_lowercase().as_str() {
            "transmit" => EbN0Reference::Transmit,
            "receive" => EbN0Reference::Receive,
            other => return Err(cfg_err(format!("unknown ebn0_reference '{other}' (transmit, receive)"))),
        };
        let p = &self.optics;
        let lambda0 = p.lambda0_nm * 1e-9;
        let spectrum = Spectrum::gaussian(lambda0, p.fwhm_nm * 1e-9, p.support_fwhm)
            .map_err(|e| cfg_err(format!("optics: {e}")))?;
        let dispersion = match p.dispersion.to_ascii_lowercase().as_str() {
            "inverse" => Dispersion::InverseWavelength { n0: p.n0, lambda0 },
            "cauchy" => Dispersion::cauchy_anchored(p.n0, lambda0, p.cauchy_b_nm2 * 1e-18),
            other => return Err(cfg_err(format!("unknown dispersion '{other}' (inverse, cauchy)"))),
        };
        if !(p.n0 > 1.0) {
            return Err(cfg_err("optics.n0 must exceed 1"));
        }
        let beam = BeamOptions {
            form: parse_form(&p.aod_form)?,
            floor_rad: p.beam_floor_rad,
            table_points: p.table_points,
        };
        let s = &self.sweep;
        let l = &self.layout;
        if l.grid_n < 2 {
            return Err(cfg_err("layout.grid_n must be at least 2"));
        }
        if self.sensing.trials == 0 {
            return Err(cfg_err("sensing.trials must be positive"));
        }
        Ok(Config {
            device,
            footprint: (self.device.footprint[0], self.device.footprint[1]),
            ofdm,
            phase2_constellation: parse_constellation(&o.phase2_constellation)?,
            num_bits: o.num_bits,
            ebn0_reference,
            eta: self.sensing.eta,
            trials: self.sensing.trials,
            spectrum,
            dispersion,
            beam,
            probe_lambda: p.probe_lambda_nm * 1e-9,
            sweep_max_rad: p.sweep_max_rad,
            sweep_step_rad: p.sweep_step_rad,
            fine_cell: p.fine_cell,
            coarse_cell: p.coarse_cell,
            ebn0_db: arange(s.ebn0_start_db, s.ebn0_stop_db, s.ebn0_step_db)?,
            snr_db: arange(s.snr_start_db, s.snr_stop_db, s.snr_step_db)?,
            rho_i: l.rho_i,
            layout_grid_n: l.grid_n,
            variants: parse_variants(&l.variant)?,
            adjacent_share: l.adjacent_share,
            mus: l.mus.clone(),
            search: SearchSpace {
                eps_min: l.eps_min,
                eps_max: l.eps_max,
                eps_step: l.eps_step,
                xi_min: 0.0,
                xi_max: std::f64::consts::FRAC_PI_2,
                xi_step: l.xi_step,
            },
            compare_uniformity: l.compare_uniformity,
            coverage: self.coverage,
            targets: self.targets,
            scenario,
        })
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config> {
        RawConfig::from_toml_str(text)?.into_config()
    }

    pub fn from_file(path: &Path) -> Result<Config> {
        RawConfig::from_file(path)?.into_config()
    }
}
