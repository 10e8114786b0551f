//! Experiment orchestration: configuration, the two-phase workflow and CSV
//! output for every figure-style experiment.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Config, RawConfig};
pub use experiments::{RunContext, Variant};

use output::write_csv;

/// One CLI subcommand and its output-path options.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Coverage,
    Layout { surface_out: Option<PathBuf> },
    Ber,
    Mse,
    Lens { sweep_out: Option<PathBuf> },
    Intensity,
    RequiredPower,
}

/// Run `exp` and write its CSVs under `out`. Returns the written paths in a
/// fixed order.
pub fn run_experiment(ctx: &RunContext, exp: &Experiment, out: &Path) -> crate::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut emit = |name: &Path, f: &dyn Fn(&Path) -> crate::Result<()>| -> crate::Result<()> {
        let p = if name.is_absolute() { name.to_path_buf() } else { out.join(name) };
        f(&p)?;
        written.push(p);
        Ok(())
    };
    match exp {
        Experiment::Coverage => {
            let r = experiments::run_phase1(ctx)?;
            emit(Path::new("coverage_intensity.csv"), &|p| write_csv(p, &r.intensity))?;
            emit(Path::new("coverage_ber.csv"), &|p| write_csv(p, &r.ber_map))?;
            emit(Path::new("coverage_mse.csv"), &|p| write_csv(p, &r.mse_map))?;
            emit(Path::new("coverage_summary.csv"), &|p| write_csv(p, &r.summary))?;
        }
        Experiment::Intensity => {
            let r = experiments::run_phase2(ctx, &ctx.cfg.device)?;
            emit(Path::new("intensity_phase1.csv"), &|p| write_csv(p, &r.phase1_map))?;
            emit(Path::new("intensity_phase2.csv"), &|p| write_csv(p, &r.phase2_map))?;
            emit(Path::new("concentration.csv"), &|p| write_csv(p, &r.concentration))?;
        }
        Experiment::Ber => {
            let rows = experiments::run_ber_sweep(ctx)?;
            emit(Path::new("ber.csv"), &|p| write_csv(p, &rows))?;
        }
        Experiment::Mse => {
            for (v, rows) in experiments::run_mse_sweep(ctx)? {
                let name = format!("mse_{}.csv", v.id());
                emit(Path::new(&name), &|p| write_csv(p, &rows))?;
            }
        }
        Experiment::RequiredPower => {
            let rows = experiments::run_required_power(ctx)?;
            emit(Path::new("required_power.csv"), &|p| write_csv(p, &rows))?;
        }
        Experiment::Layout { surface_out } => {
            let r = experiments::run_layout(ctx)?;
            emit(Path::new("layout_summary.csv"), &|p| write_csv(p, &r.rows))?;
            let single = r.surfaces.len() == 1;
            for (mu, rows) in &r.surfaces {
                let path = match surface_out {
                    Some(p) if single => p.clone(),
                    Some(p) => suffixed(p, &format!("_mu{mu}")),
                    None => PathBuf::from(format!("layout_surface_mu{mu}.csv")),
                };
                emit(&path, &|p| write_csv(p, rows))?;
            }
        }
        Experiment::Lens { sweep_out } => {
            let r = experiments::run_lens(ctx)?;
            let sweep = sweep_out.clone().unwrap_or_else(|| PathBuf::from("lens_sweep.csv"));
            emit(&sweep, &|p| write_csv(p, &r.sweep))?;
            emit(Path::new("lens_pattern.csv"), &|p| write_csv(p, &r.pattern))?;
            emit(Path::new("lens_summary.csv"), &|p| write_csv(p, &r.summary))?;
        }
    }
    Ok(written)
}

/// `dir/name.csv` → `dir/name{suffix}.csv`.
fn suffixed(p: &Path, suffix: &str) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    p.with_file_name(format!("{stem}{suffix}{ext}"))
}
