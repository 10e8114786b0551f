//! The experiments behind each CLI subcommand.
//!
//! Every function here is a pure function of the configuration, the seed
//! and the execution mode; writing CSVs is left to [`super::output`].

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::Serialize;

use super::config::Config;
use crate::channel::{
    irradiance, lambert_mode, lambertian_density, reflected_intensities, superposed_intensity, Aiming, ChannelState,
    RadiationPattern,
};
use crate::exec::Execution;
use crate::geometry::{build_default_poses, Scenario};
use crate::layout_opt::{
    angular_distance_mod, cell_centres, circular_area_fraction, grid_search_layout, grid_search_uniformity,
    intensity_map, symmetry_centre, theorem1_layout, SearchResult, Theorem1Variant,
};
use crate::modem::{run_ber, BerSetup, Constellation, FrequencyResponse};
use crate::optics::{
    intensity_concentration, lemma2_aod_approx, trace_exact_aod, AodForm, BeamformedPattern, FloorGrid, Footprint,
    LensNormalField,
};
use crate::sensing::{run_mse, MseSetup, NoiseModel};
use crate::{Error, Result};

/// Eb/N0 penalty of giving communication half of the optical power.
pub fn half_power_db() -> f64 {
    10.0 * 2f64.log10()
}

/// Seed, configuration and execution mode shared by all experiments.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: Config,
    pub seed: u64,
    pub exec: Execution,
}

/// The three systems compared in the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Phase 1: bare Lambertian LEDs pointing down, BPSK.
    Directionless,
    /// Same hardware, but communication and sensing each get half the power.
    Separate,
    /// Phase 2: lenses fitted and every O-AP aimed at the device, 16QAM.
    Directional,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Directionless, Variant::Separate, Variant::Directional];

    pub fn id(self) -> &'static str {
        match self {
            Variant::Directionless => "directionless",
            Variant::Separate => "separate",
            Variant::Directional => "directional",
        }
    }
}

/// Physical setup of one variant at one target.
#[derive(Debug, Clone)]
pub struct VariantSetup {
    pub variant: Variant,
    pub pattern: RadiationPattern,
    pub aiming: Aiming,
    pub constellation: Constellation,
    pub power_offset_db: f64,
    /// Share of the reflected intensity available to sensing.
    pub reflect_scale: f64,
}

pub fn beam_pattern(cfg: &Config) -> Result<RadiationPattern> {
    let b = BeamformedPattern::new(
        cfg.spectrum.clone(),
        cfg.dispersion,
        cfg.scenario.semi_angle,
        cfg.beam,
    )?;
    Ok(RadiationPattern::Beamformed(Arc::new(b)))
}

pub fn variant_setup(cfg: &Config, variant: Variant, target: &Vector3<f64>) -> Result<VariantSetup> {
    let lambertian = RadiationPattern::lambertian(cfg.scenario.semi_angle)?;
    Ok(match variant {
        Variant::Directionless => VariantSetup {
            variant,
            pattern: lambertian,
            aiming: Aiming::Vertical,
            constellation: cfg.ofdm.constellation,
            power_offset_db: 0.0,
            reflect_scale: 1.0,
        },
        Variant::Separate => VariantSetup {
            variant,
            pattern: lambertian,
            aiming: Aiming::Vertical,
            constellation: cfg.ofdm.constellation,
            power_offset_db: half_power_db(),
            reflect_scale: 0.5,
        },
        Variant::Directional => VariantSetup {
            variant,
            pattern: beam_pattern(cfg)?,
            aiming: Aiming::AimedAt(*target),
            constellation: cfg.phase2_constellation,
            power_offset_db: 0.0,
            reflect_scale: 1.0,
        },
    })
}

fn ber_setup(ctx: &RunContext, v: &VariantSetup, device: &Vector3<f64>) -> BerSetup {
    let s = &ctx.cfg.scenario;
    let ch = ChannelState::compute(s, &v.pattern, device, &v.aiming);
    let mut ofdm = ctx.cfg.ofdm;
    ofdm.constellation = v.constellation;
    let response = FrequencyResponse::from_channel(&ch, &ofdm);
    BerSetup {
        cfg: ofdm,
        response,
        reference: ctx.cfg.ebn0_reference,
        power_offset_db: v.power_offset_db,
        seed: ctx.seed,
        exec: ctx.exec,
    }
}

fn sensing_inputs(ctx: &RunContext, v: &VariantSetup, device: &Vector3<f64>) -> Vec<f64> {
    reflected_intensities(&ctx.cfg.scenario, &v.pattern, device, &v.aiming)
        .into_iter()
        .map(|r| r * v.reflect_scale)
        .collect()
}

fn noise_at(cfg: &Config, snr_db: f64) -> NoiseModel {
    NoiseModel {
        eta: cfg.eta,
        sigma_i2: 10f64.powf(-snr_db / 10.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityRow {
    pub x: f64,
    pub y: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRow {
    pub ebn0_db: f64,
    pub ber: f64,
    pub num_bits: u64,
    pub num_errors: u64,
    pub config_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerMapRow {
    pub x: f64,
    pub y: f64,
    pub ebn0_db: f64,
    pub ber: f64,
    pub num_bits: u64,
    pub num_errors: u64,
    pub config_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub sigma_i: f64,
    pub trials: usize,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub metric: String,
    pub value: f64,
}

fn summary(metric: &str, value: f64) -> SummaryRow {
    SummaryRow {
        metric: metric.into(),
        value,
    }
}

/// Grid of `(x, y)` cell centres, `y` outer.
fn grid_points(s: &Scenario, n: usize) -> Vec<(f64, f64)> {
    let xs = cell_centres(s.room_w, n);
    let ys = cell_centres(s.room_l, n);
    ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect()
}

/// Phase 1 coverage maps.
#[derive(Debug, Clone)]
pub struct Phase1Output {
    pub intensity: Vec<IntensityRow>,
    pub ber_map: Vec<BerMapRow>,
    pub mse_map: Vec<MseRow>,
    pub summary: Vec<SummaryRow>,
}

/// Phase 1: the configured layout broadcasting with bare LEDs. Produces the
/// PD intensity map, a BER map and a sensing-MSE map over the floor.
pub fn run_phase1(ctx: &RunContext) -> Result<Phase1Output> {
    let cfg = &ctx.cfg;
    let s = &cfg.scenario;
    let cov = &cfg.coverage;
    let v = variant_setup(cfg, Variant::Directionless, &cfg.device)?;
    let z = cfg.device.z;

    let map = intensity_map(s, &v.pattern, &v.aiming, cov.grid_n, z, ctx.exec);
    let intensity: Vec<IntensityRow> = grid_points(s, cov.grid_n)
        .into_iter()
        .zip(&map)
        .map(|((x, y), &i)| IntensityRow { x, y, intensity: i })
        .collect();
    let covered = map.iter().filter(|i| **i >= cfg.rho_i).count();

    let rig = build_default_poses(s);
    let cells = grid_points(s, cov.map_grid_n);
    let mut ber_map = Vec::with_capacity(cells.len());
    let mut mse_map = Vec::with_capacity(cells.len());
    let noise = noise_at(cfg, cov.map_snr_db);
    for &(x, y) in &cells {
        let p = Vector3::new(x, y, z);
        let setup = ber_setup(ctx, &v, &p);
        let (ber, errs) = match run_ber(&setup, &[cov.map_ebn0_db], cov.map_bits) {
            Ok(r) => (r.points[0].ber, r.points[0].num_errors),
            Err(Error::ZeroGain) => (f64::NAN, 0),
            Err(e) => return Err(e),
        };
        ber_map.push(BerMapRow {
            x,
            y,
            ebn0_db: cov.map_ebn0_db,
            ber,
            num_bits: cov.map_bits,
            num_errors: errs,
            config_id: v.variant.id().into(),
        });
        let mse_setup = MseSetup {
            rig: &rig,
            focal: (s.focal_x, s.focal_y),
            device: p,
            reflected: sensing_inputs(ctx, &v, &p),
            trials: cov.map_trials,
            seed: ctx.seed,
            exec: ctx.exec,
        };
        let mse = match run_mse(&mse_setup, noise) {
            Ok(m) => m,
            Err(Error::InsufficientIllumination(_) | Error::RankDeficient(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        mse_map.push(MseRow {
            x,
            y,
            z,
            sigma_i: noise.sigma_i2.sqrt(),
            trials: cov.map_trials,
            mse,
        });
    }
    let summary = vec![
        summary("rho_i", cfg.rho_i),
        summary("grid_n", cov.grid_n as f64),
        summary("area_fraction", covered as f64 / map.len() as f64),
        summary("max_intensity", map.iter().cloned().fold(0.0, f64::max)),
        summary("min_intensity", map.iter().cloned().fold(f64::INFINITY, f64::min)),
    ];
    Ok(Phase1Output {
        intensity,
        ber_map,
        mse_map,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub phase: String,
    pub aim_x: f64,
    pub aim_y: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub width: f64,
    pub length: f64,
    pub on_target: f64,
    pub floor_total: f64,
    pub fraction: f64,
    /// Superposed PD intensity at the target centre.
    pub intensity_at_target: f64,
}

#[derive(Debug, Clone)]
pub struct Phase2Output {
    pub phase1_map: Vec<IntensityRow>,
    pub phase2_map: Vec<IntensityRow>,
    pub concentration: Vec<ConcentrationRow>,
}

/// Offset of the aim point in the robustness row.
pub const AIM_OFFSET: f64 = 0.01;

/// Phase 2: all O-APs fitted with lenses and aimed at `target`. Compares
/// floor irradiance and intensity concentration against Phase 1, plus a
/// row where the aim misses by [`AIM_OFFSET`] along x.
pub fn run_phase2(ctx: &RunContext, target: &Vector3<f64>) -> Result<Phase2Output> {
    let cfg = &ctx.cfg;
    let s = &cfg.scenario;
    let p1 = variant_setup(cfg, Variant::Directionless, target)?;
    let p2 = variant_setup(cfg, Variant::Directional, target)?;
    let footprint = Footprint {
        center: *target,
        width: cfg.footprint.0,
        length: cfg.footprint.1,
    };
    let grid = FloorGrid {
        fine: cfg.fine_cell,
        coarse: cfg.coarse_cell,
    };
    let pts = grid_points(s, cfg.coverage.grid_n);
    let floor_map = |v: &VariantSetup| -> Vec<IntensityRow> {
        let vals = ctx.exec.map_indexed(pts.len(), |i| {
            let (x, y) = pts[i];
            irradiance(s, &v.pattern, &Vector3::new(x, y, target.z), &v.aiming)
        });
        pts.iter()
            .zip(vals)
            .map(|(&(x, y), intensity)| IntensityRow { x, y, intensity })
            .collect()
    };
    let row = |phase: &str, pattern: &RadiationPattern, aiming: Aiming, aim: Vector3<f64>| {
        let c = intensity_concentration(s, pattern, &footprint, &aiming, grid);
        ConcentrationRow {
            phase: phase.into(),
            aim_x: aim.x,
            aim_y: aim.y,
            target_x: target.x,
            target_y: target.y,
            width: footprint.width,
            length: footprint.length,
            on_target: c.on_target,
            floor_total: c.floor_total,
            fraction: c.fraction,
            intensity_at_target: superposed_intensity(s, pattern, target, &aiming),
        }
    };
    let below = Vector3::new(target.x, target.y, s.room_h);
    let missed = target + Vector3::new(AIM_OFFSET, 0.0, 0.0);
    let concentration = vec![
        row("phase1", &p1.pattern, p1.aiming, below),
        row("phase2", &p2.pattern, p2.aiming, *target),
        row("phase2_aim_offset", &p2.pattern, Aiming::AimedAt(missed), missed),
    ];
    Ok(Phase2Output {
        phase1_map: floor_map(&p1),
        phase2_map: floor_map(&p2),
        concentration,
    })
}

/// BER against Eb/N0 for every variant at the configured device position.
pub fn run_ber_sweep(ctx: &RunContext) -> Result<Vec<BerRow>> {
    let cfg = &ctx.cfg;
    let mut rows = Vec::new();
    for variant in Variant::ALL {
        let v = variant_setup(cfg, variant, &cfg.device)?;
        let setup = ber_setup(ctx, &v, &cfg.device);
        let report = run_ber(&setup, &cfg.ebn0_db, cfg.num_bits)?;
        rows.extend(report.points.into_iter().map(|p| BerRow {
            ebn0_db: p.ebn0_db,
            ber: p.ber,
            num_bits: p.num_bits,
            num_errors: p.num_errors,
            config_id: variant.id().into(),
        }));
    }
    Ok(rows)
}

/// Localisation MSE against the sensing SNR axis, one table per variant.
pub fn run_mse_sweep(ctx: &RunContext) -> Result<Vec<(Variant, Vec<MseRow>)>> {
    let cfg = &ctx.cfg;
    let s = &cfg.scenario;
    let rig = build_default_poses(s);
    let mut out = Vec::new();
    for variant in Variant::ALL {
        let v = variant_setup(cfg, variant, &cfg.device)?;
        let setup = MseSetup {
            rig: &rig,
            focal: (s.focal_x, s.focal_y),
            device: cfg.device,
            reflected: sensing_inputs(ctx, &v, &cfg.device),
            trials: cfg.trials,
            seed: ctx.seed,
            exec: ctx.exec,
        };
        let mut rows = Vec::with_capacity(cfg.snr_db.len());
        for &snr in &cfg.snr_db {
            let noise = noise_at(cfg, snr);
            rows.push(MseRow {
                x: cfg.device.x,
                y: cfg.device.y,
                z: cfg.device.z,
                sigma_i: noise.sigma_i2.sqrt(),
                trials: cfg.trials,
                mse: run_mse(&setup, noise)?,
            });
        }
        out.push((variant, rows));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequiredPowerRow {
    pub metric: String,
    pub config_id: String,
    pub target: f64,
    pub required_db: f64,
    /// Required level of the directionless system minus this one's.
    pub gain_over_directionless_db: f64,
}

/// Smallest level in `[lo, hi]` (to `tol`) at which `meets` holds, assuming
/// it is monotone: false at `lo`, true at `hi`.
pub fn bisect_level<F>(lo: f64, hi: f64, tol: f64, target: f64, mut meets: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    if meets(lo)? || !meets(hi)? {
        return Err(Error::NotBracketed { target, lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if meets(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Eb/N0 (BER metric) and sensing SNR (MSE metric) each variant needs to
/// reach the configured targets, found by bisection on Monte Carlo runs.
pub fn run_required_power(ctx: &RunContext) -> Result<Vec<RequiredPowerRow>> {
    let cfg = &ctx.cfg;
    let t = &cfg.targets;
    let s = &cfg.scenario;
    let rig = build_default_poses(s);
    let mut ber_req = Vec::new();
    let mut mse_req = Vec::new();
    for variant in Variant::ALL {
        let v = variant_setup(cfg, variant, &cfg.device)?;
        let setup = ber_setup(ctx, &v, &cfg.device);
        ber_req.push(bisect_level(t.lo_db, t.hi_db, t.tol_db, t.ber, |e| {
            Ok(run_ber(&setup, &[e], cfg.num_bits)?.points[0].ber <= t.ber)
        })?);
        let mse_setup = MseSetup {
            rig: &rig,
            focal: (s.focal_x, s.focal_y),
            device: cfg.device,
            reflected: sensing_inputs(ctx, &v, &cfg.device),
            trials: cfg.trials,
            seed: ctx.seed,
            exec: ctx.exec,
        };
        mse_req.push(bisect_level(t.lo_db, t.hi_db, t.tol_db, t.mse, |snr| {
            Ok(run_mse(&mse_setup, noise_at(cfg, snr))? <= t.mse)
        })?);
    }
    let mut rows = Vec::new();
    for (metric, target, req) in [("ber", t.ber, &ber_req), ("mse", t.mse, &mse_req)] {
        for (i, variant) in Variant::ALL.iter().enumerate() {
            rows.push(RequiredPowerRow {
                metric: metric.into(),
                config_id: variant.id().into(),
                target,
                required_db: req[i],
                gain_over_directionless_db: req[0] - req[i],
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub eps: f64,
    pub xi0: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutRow {
    pub mu: usize,
    pub variant: String,
    pub theorem_eps: f64,
    pub theorem_eps_unclamped: f64,
    pub theorem_xi0: f64,
    pub theorem_fraction: f64,
    pub oracle_eps: f64,
    pub oracle_xi0: f64,
    pub oracle_fraction: f64,
    pub fraction_gap: f64,
    pub area_gap_m2: f64,
    pub expected_xi0: f64,
    pub xi0_distance: f64,
    pub uniformity_eps: f64,
    pub uniformity_xi0: f64,
    pub uniformity_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct LayoutOutput {
    pub rows: Vec<LayoutRow>,
    /// Grid-search surface per `µ`.
    pub surfaces: Vec<(usize, Vec<SurfaceRow>)>,
}

fn variant_id(v: Theorem1Variant) -> &'static str {
    match v {
        Theorem1Variant::MuVariant => "mu",
        Theorem1Variant::Literal => "literal",
    }
}

/// Theorem-1 layouts against the exhaustive grid-search optimum for every
/// configured `µ` (Figs. 5, 6 and 10).
pub fn run_layout(ctx: &RunContext) -> Result<LayoutOutput> {
    let cfg = &ctx.cfg;
    let s = &cfg.scenario;
    let m0 = lambert_mode(s.semi_angle)?;
    let n = cfg.layout_grid_n;
    let area = s.room_w * s.room_l;
    let mut rows = Vec::new();
    let mut surfaces = Vec::new();
    for &mu in &cfg.mus {
        let oracle: SearchResult = grid_search_layout(s, m0, mu, cfg.rho_i, &cfg.search, n, ctx.exec);
        let uniform = if cfg.compare_uniformity {
            let u = grid_search_uniformity(s, m0, mu, &cfg.search, n, ctx.exec);
            Some((u.eps, u.xi0, circular_area_fraction(s, m0, mu, u.eps, u.xi0, cfg.rho_i, n)))
        } else {
            None
        };
        let (ue, ux, uf) = uniform.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        let expected = symmetry_centre(mu);
        for &variant in &cfg.variants {
            let t = theorem1_layout(s, mu, cfg.rho_i, variant, cfg.adjacent_share)?;
            let tf = circular_area_fraction(s, m0, mu, t.eps, t.xi0, cfg.rho_i, n);
            rows.push(LayoutRow {
                mu,
                variant: variant_id(variant).into(),
                theorem_eps: t.eps,
                theorem_eps_unclamped: t.eps_unclamped,
                theorem_xi0: t.xi0,
                theorem_fraction: tf,
                oracle_eps: oracle.eps,
                oracle_xi0: oracle.xi0,
                oracle_fraction: oracle.value,
                fraction_gap: oracle.value - tf,
                area_gap_m2: (oracle.value - tf) * area,
                expected_xi0: expected.rem_euclid(2.0 * PI / mu as f64),
                xi0_distance: angular_distance_mod(oracle.xi0, expected, 2.0 * PI / mu as f64),
                uniformity_eps: ue,
                uniformity_xi0: ux,
                uniformity_fraction: uf,
            });
        }
        surfaces.push((
            mu,
            oracle
                .surface
                .iter()
                .map(|p| SurfaceRow {
                    eps: p.eps,
                    xi0: p.xi0,
                    fraction: p.value,
                })
                .collect(),
        ));
    }
    Ok(LayoutOutput { rows, surfaces })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LensSweepRow {
    pub phi_rad: f64,
    pub aod_exact: f64,
    pub aod_approx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternRow {
    pub phi_rad: f64,
    pub r_lambertian: f64,
    pub r_beamformed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LensSummaryRow {
    pub form: String,
    pub probe_lambda_nm: f64,
    pub phi_max_rad: f64,
    pub max_rel_error: f64,
    pub error_monotone: bool,
    pub half_power_lambertian_rad: f64,
    pub half_power_beamformed_rad: f64,
}

#[derive(Debug, Clone)]
pub struct LensOutput {
    pub sweep: Vec<LensSweepRow>,
    pub pattern: Vec<PatternRow>,
    pub summary: Vec<LensSummaryRow>,
}

/// Relative error of the linear AoD model against the exact trace at each
/// `phi` (which must be nonzero).
pub fn aod_relative_errors(cfg: &Config, form: AodForm, lambda: f64, phis: &[f64]) -> Result<Vec<f64>> {
    let lambda0 = cfg.spectrum.peak();
    let lens = LensNormalField {
        n0: cfg.dispersion.index(lambda0),
    };
    phis.iter()
        .map(|&phi| {
            let exact = trace_exact_aod(phi, lambda, &cfg.dispersion, &lens)?;
            let approx = lemma2_aod_approx(phi, lambda, lambda0, &cfg.dispersion, form);
            Ok(((approx - exact) / exact).abs())
        })
        .collect()
}

fn form_id(f: AodForm) -> &'static str {
    match f {
        AodForm::Appendix => "appendix",
        AodForm::Lemma => "lemma",
    }
}

/// Exact against approximate AoD at the probe wavelength, and the
/// Lambertian and beamformed radiation patterns.
pub fn run_lens(ctx: &RunContext) -> Result<LensOutput> {
    let cfg = &ctx.cfg;
    let s = &cfg.scenario;
    let lambda0 = cfg.spectrum.peak();
    let lens = LensNormalField {
        n0: cfg.dispersion.index(lambda0),
    };
    let steps = (cfg.sweep_max_rad / cfg.sweep_step_rad).round() as i64;
    let phis: Vec<f64> = (-steps..=steps).map(|i| i as f64 * cfg.sweep_step_rad).collect();
    let sweep = phis
        .iter()
        .map(|&phi| {
            Ok(LensSweepRow {
                phi_rad: phi,
                aod_exact: trace_exact_aod(phi, cfg.probe_lambda, &cfg.dispersion, &lens)?,
                aod_approx: lemma2_aod_approx(phi, cfg.probe_lambda, lambda0, &cfg.dispersion, cfg.beam.form),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let m0 = lambert_mode(s.semi_angle)?;
    let beam = beam_pattern(cfg)?;
    let n_pat = (s.semi_angle / cfg.sweep_step_rad).ceil() as usize;
    let pattern = (0..=n_pat)
        .map(|i| {
            let phi = (i as f64 * cfg.sweep_step_rad).min(s.semi_angle);
            PatternRow {
                phi_rad: phi,
                r_lambertian: lambertian_density(m0, phi.cos()),
                r_beamformed: beam.evaluate(phi),
            }
        })
        .collect();

    let hp_l = crate::optics::lambertian_half_power_angle(m0, s.semi_angle);
    let hp_b = match &beam {
        RadiationPattern::Beamformed(b) => b.half_power_angle()?,
        RadiationPattern::Lambertian { .. } => unreachable!(),
    };
    let positive: Vec<f64> = phis.iter().cloned().filter(|p| *p > 0.0).collect();
    let mut summary = Vec::new();
    for form in [AodForm::Appendix, AodForm::Lemma] {
        let errs = aod_relative_errors(cfg, form, cfg.probe_lambda, &positive)?;
        summary.push(LensSummaryRow {
            form: form_id(form).into(),
            probe_lambda_nm: cfg.probe_lambda * 1e9,
            phi_max_rad: positive.last().copied().unwrap_or(0.0),
            max_rel_error: errs.iter().cloned().fold(0.0, f64::max),
            error_monotone: errs.windows(2).all(|w| w[1] >= w[0]),
            half_power_lambertian_rad: hp_l,
            half_power_beamformed_rad: hp_b,
        });
    }
    Ok(LensOutput { sweep, pattern, summary })
}
