//! `oisac` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oisac::exec::Execution;
use oisac::harness::{run_experiment, Experiment, RawConfig, RunContext};
use oisac::Result;

#[derive(Parser, Debug)]
#[command(name = "oisac", version, about = "O-ISAC simulator: coverage, layout, BER, MSE, optics and power experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML scenario and experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for the CSV files.
    #[arg(long)]
    out: PathBuf,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
    /// Worker threads for the parallel path (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Phase-1 intensity, BER and MSE maps over the floor.
    Coverage(Common),
    /// Theorem-1 layouts against the exhaustive grid search.
    Layout {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho_i: Option<f64>,
        #[arg(long)]
        mu: Option<usize>,
        #[arg(long)]
        grid_n: Option<usize>,
        /// mu, literal or both.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        search_surface_out: Option<PathBuf>,
        /// Also run the uniformity-MSE search.
        #[arg(long)]
        uniformity: bool,
    },
    /// BER against Eb/N0 for each system variant.
    Ber(Common),
    /// Localisation MSE against sensing SNR for each system variant.
    Mse(Common),
    /// Lens AoD approximation sweep and radiation patterns.
    Lens {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda0_nm: Option<f64>,
        #[arg(long)]
        fwhm_nm: Option<f64>,
        #[arg(long)]
        n0: Option<f64>,
        /// appendix or lemma.
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        sweep_out: Option<PathBuf>,
    },
    /// Phase-2 beamformed intensity and concentration.
    Intensity(Common),
    /// Eb/N0 and SNR needed for the BER and MSE targets.
    RequiredPower(Common),
}

fn execution(c: &Common) -> Result<Execution> {
    if c.sequential {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| oisac::Error::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    Ok(Execution::default())
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let (common, exp, raw) = match cli.command {
        Command::Coverage(c) => {
            let raw = RawConfig::from_file(&c.config)?;
            (c, Experiment::Coverage, raw)
        }
        Command::Ber(c) => {
            let raw = RawConfig::from_file(&c.config)?;
            (c, Experiment::Ber, raw)
        }
        Command::Mse(c) => {
            let raw = RawConfig::from_file(&c.config)?;
            (c, Experiment::Mse, raw)
        }
        Command::Intensity(c) => {
            let raw = RawConfig::from_file(&c.config)?;
            (c, Experiment::Intensity, raw)
        }
        Command::RequiredPower(c) => {
            let raw = RawConfig::from_file(&c.config)?;
            (c, Experiment::RequiredPower, raw)
        }
        Command::Layout {
            common,
            rho_i,
            mu,
            grid_n,
            variant,
            search_surface_out,
            uniformity,
        } => {
            let mut raw = RawConfig::from_file(&common.config)?;
            if let Some(r) = rho_i {
                raw.layout.rho_i = r;
            }
            if let Some(m) = mu {
                raw.layout.mus = vec![m];
            }
            if let Some(n) = grid_n {
                raw.layout.grid_n = n;
            }
            if let Some(v) = variant {
                raw.layout.variant = v;
            }
            raw.layout.compare_uniformity |= uniformity;
            (
                common,
                Experiment::Layout {
                    surface_out: search_surface_out,
                },
                raw,
            )
        }
        Command::Lens {
            common,
            lambda0_nm,
            fwhm_nm,
            n0,
            form,
            sweep_out,
        } => {
            let mut raw = RawConfig::from_file(&common.config)?;
            if let Some(l) = lambda0_nm {
                raw.optics.lambda0_nm = l;
            }
            if let Some(f) = fwhm_nm {
                raw.optics.fwhm_nm = f;
            }
            if let Some(n) = n0 {
                raw.optics.n0 = n;
            }
            if let Some(f) = form {
                raw.optics.aod_form = f;
            }
            (common, Experiment::Lens { sweep_out }, raw)
        }
    };
    let cfg = raw.into_config()?;
    let ctx = RunContext {
        cfg,
        seed: common.seed,
        exec: execution(&common)?,
    };
    run_experiment(&ctx, &exp, &common.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("oisac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
