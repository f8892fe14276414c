//! Command-line runner: derives resonator figures, simulates swept spectra
//! and standing-wave scans, and fits line shapes from CSV files.

mod config;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use config::{parse_config, RunConfig};
use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use sweptcav::experiment::{
    carrier_sideband_scan, simulate_spectrum, standing_wave_scan, DetuningGrid, SamplingSpec,
};
use sweptcav::fit::{fit_lorentzian, fit_sin2};
use sweptcav::motion::{lamb_dicke, MotionalMode, Transition};
use sweptcav::params::{cooperativity_block, wavepacket_extension, contrast_factor};
use sweptcav::{Error, Result};

#[derive(Parser)]
#[command(name = "sweptcav", version, about = "Swept-cavity ion spectroscopy simulator")]
struct Cli {
    /// Path to a flat `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransitionArg {
    Carrier,
    Red,
    Blue,
}

impl From<TransitionArg> for Transition {
    fn from(t: TransitionArg) -> Transition {
        match t {
            TransitionArg::Carrier => Transition::Carrier,
            TransitionArg::Red => Transition::RedSideband,
            TransitionArg::Blue => Transition::BlueSideband,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived resonator, coupling, and motion figures
    Derive,
    /// Simulate one swept excitation spectrum and write spectrum.csv
    Spectrum {
        /// Normalized scan rate (sign = sweep direction)
        #[arg(long, default_value_t = 0.23, allow_hyphen_values = true)]
        nu_l: f64,
        /// Peak resonant Rabi frequency, ordinary kHz
        #[arg(long, default_value_t = 11.0)]
        omega_max_khz: f64,
        /// Standing-wave phase of the ion, rad
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        /// Detuning grid half-span, ordinary kHz
        #[arg(long, default_value_t = 60.0)]
        grid_span_khz: f64,
        /// Detuning grid points
        #[arg(long, default_value_t = 121)]
        points: usize,
        /// Spectral line to probe
        #[arg(long, value_enum, default_value_t = TransitionArg::Carrier)]
        transition: TransitionArg,
        /// Draw seeded detection counts per grid point
        #[arg(long)]
        sample: bool,
    },
    /// Scan the standing-wave phase on the carrier and write swscan.csv
    Swscan {
        /// Normalized scan rate
        #[arg(long, default_value_t = 0.23, allow_hyphen_values = true)]
        nu_l: f64,
        /// Phase grid points over one intensity period
        #[arg(long, default_value_t = 16)]
        phi_points: usize,
        /// Peak resonant Rabi frequency, ordinary kHz
        #[arg(long, default_value_t = 3.0)]
        omega_max_khz: f64,
    },
    /// Integral carrier and red-sideband excitation versus phase
    Sideband {
        /// Normalized scan rate
        #[arg(long, default_value_t = -0.23, allow_hyphen_values = true)]
        nu_l: f64,
        /// Phase grid points over one intensity period
        #[arg(long, default_value_t = 16)]
        phi_points: usize,
        /// Carrier peak Rabi frequency, ordinary kHz
        #[arg(long, default_value_t = 4.0)]
        omega_carrier_khz: f64,
        /// Sideband peak Rabi frequency, ordinary kHz
        #[arg(long, default_value_t = 70.0)]
        omega_sideband_khz: f64,
    },
    /// Fit a line model to the first two columns of a CSV file
    Fit {
        /// CSV file with x in column 1 and y in column 2
        #[arg(long)]
        input: PathBuf,
        /// Line model to fit
        #[arg(long, value_enum)]
        model: FitModel,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Lorentzian,
    Sin2,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => parse_config(&std::fs::read_to_string(p)?),
    }
}

/// Output directory: the config value unless SWEPTCAV_OUT_DIR overrides it.
fn output_dir(cfg: &RunConfig) -> PathBuf {
    match std::env::var("SWEPTCAV_OUT_DIR") {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&cfg.output_dir),
    }
}

fn create_writer(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn phi_grid(n: usize) -> Result<Vec<f64>> {
    if n < 4 {
        return Err(Error::invalid(
            "phi_points",
            "need at least 4 phases for a fringe",
        ));
    }
    Ok((0..n).map(|j| j as f64 * PI / n as f64).collect())
}

fn cmd_derive(cfg: &RunConfig) -> Result<()> {
    let fig = cfg.figures()?;
    let trap = cfg.trap();
    trap.validate()?;
    let coop = cooperativity_block(cfg.coupling(), fig.kappa, cfg.gamma_pop())?;
    let a_c = wavepacket_extension(&trap)?;
    let contrast = contrast_factor(a_c, cfg.wavelength)?;
    let mut etas = [0.0; 3];
    for m in 0..3 {
        etas[m] = lamb_dicke(
            &MotionalMode {
                omega: trap.omega[m],
                mass: trap.mass,
            },
            cfg.wavelength,
            trap.cosine[m],
        )?;
    }

    let report: Vec<(&str, f64)> = vec![
        ("fsr_hz", fig.fsr_hz),
        ("linewidth_fwhm_hz", fig.linewidth_fwhm_hz),
        ("kappa_rad_s", fig.kappa),
        ("storage_time_s", fig.tau_s),
        ("cooperativity", coop.cooperativity),
        ("purcell_factor", coop.purcell_factor),
        ("emission_fraction", coop.emission_fraction),
        ("wavepacket_extension_m", a_c),
        ("contrast", contrast),
        ("eta_x", etas[0]),
        ("eta_y", etas[1]),
        ("eta_z", etas[2]),
    ];
    for (k, v) in &report {
        println!("{k} = {v}");
    }

    let dir = output_dir(cfg);
    let (path, w) = create_writer(&dir, "derive.csv")?;
    let columns: Vec<&str> = report.iter().map(|(k, _)| *k).collect();
    let row: Vec<f64> = report.iter().map(|(_, v)| *v).collect();
    sweptcav::csvio::write_table(w, &cfg.snapshot(), &columns, &[row])?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    cfg: &RunConfig,
    nu_l: f64,
    omega_max_khz: f64,
    phi: f64,
    grid_span_khz: f64,
    points: usize,
    transition: Transition,
    sample: bool,
) -> Result<()> {
    let ctx = cfg.scan_context()?;
    let center = transition.phonon_change() as f64 * ctx.mode_omega;
    let grid = DetuningGrid {
        center,
        half_span: TAU * grid_span_khz * 1e3,
        points,
    };
    let sampling = SamplingSpec {
        n_repeats: cfg.n_repeats,
        fidelity: cfg.fidelity,
        seed: cfg.seed,
    };
    let mut spectrum = simulate_spectrum(
        &ctx,
        transition,
        nu_l,
        TAU * omega_max_khz * 1e3,
        phi,
        &grid,
        sample.then_some(&sampling),
    )?;
    let mut meta = cfg.snapshot();
    meta.append(&mut spectrum.meta);
    spectrum.meta = meta;

    let (i_peak, peak) = spectrum
        .probabilities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (i, v))
        .unwrap_or((0, 0.0));
    println!("peak_probability = {peak}");
    println!(
        "peak_detuning_hz = {}",
        spectrum.detunings[i_peak] / TAU
    );

    let dir = output_dir(cfg);
    let (path, w) = create_writer(&dir, "spectrum.csv")?;
    spectrum.write_csv(w)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_swscan(cfg: &RunConfig, nu_l: f64, phi_points: usize, omega_max_khz: f64) -> Result<()> {
    let ctx = cfg.scan_context()?;
    let phis = phi_grid(phi_points)?;
    let mut scan = standing_wave_scan(&ctx, nu_l, TAU * omega_max_khz * 1e3, &phis)?;
    if scan.saturation_warning {
        eprintln!(
            "warning: peak excitation {:.3} exceeds 0.2; the fitted fringe is no longer proportional to the standing-wave intensity",
            scan.max_excitation
        );
    }
    let fit = fit_sin2(&scan.scan.phases, &scan.scan.values)?;
    println!("amplitude = {}", fit.params.amplitude);
    println!("phase_rad = {}", fit.params.phase);
    println!("offset = {}", fit.params.offset);
    println!("visibility = {}", fit.visibility);
    println!("visibility_error = {}", fit.visibility_error);
    println!("residual_rms = {}", fit.residual_rms);
    println!("converged = {}", fit.converged);

    let mut meta = cfg.snapshot();
    meta.append(&mut scan.scan.meta);
    scan.scan.meta = meta;
    let dir = output_dir(cfg);
    let (path, w) = create_writer(&dir, "swscan.csv")?;
    scan.scan.write_csv(w)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_sideband(
    cfg: &RunConfig,
    nu_l: f64,
    phi_points: usize,
    omega_carrier_khz: f64,
    omega_sideband_khz: f64,
) -> Result<()> {
    let ctx = cfg.scan_context()?;
    let phis = phi_grid(phi_points)?;
    let mut scan = carrier_sideband_scan(
        &ctx,
        nu_l,
        TAU * omega_carrier_khz * 1e3,
        TAU * omega_sideband_khz * 1e3,
        &phis,
    )?;

    let fit_c = fit_sin2(&scan.carrier.phases, &scan.carrier.values)?;
    println!("carrier_phase_rad = {}", fit_c.params.phase);
    println!("carrier_visibility = {}", fit_c.visibility);
    // a cold probed mode leaves the red sideband identically dark
    let sideband_dark = scan.sideband.values.iter().all(|&v| v == 0.0);
    if sideband_dark {
        println!("sideband_dark = true");
    } else {
        let fit_s = fit_sin2(&scan.sideband.phases, &scan.sideband.values)?;
        println!("sideband_phase_rad = {}", fit_s.params.phase);
        println!("sideband_visibility = {}", fit_s.visibility);
        // one intensity period spans 2 phi, so phase differences double
        let diff = (2.0 * (fit_c.params.phase - fit_s.params.phase)).rem_euclid(2.0 * PI);
        println!("phase_difference_rad = {diff}");
    }

    let dir = output_dir(cfg);
    for (scan_part, name) in [
        (&mut scan.carrier, "sideband_carrier.csv"),
        (&mut scan.sideband, "sideband_red.csv"),
    ] {
        let mut meta = cfg.snapshot();
        meta.append(&mut scan_part.meta);
        scan_part.meta = meta;
        let (path, w) = create_writer(&dir, name)?;
        scan_part.write_csv(w)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_fit(input: &Path, model: FitModel) -> Result<()> {
    let file = File::open(input)?;
    let (columns, rows, _comments) = sweptcav::csvio::read_table(file)?;
    if columns.len() < 2 {
        return Err(Error::invalid(
            "input",
            "need at least two CSV columns (x, y)",
        ));
    }
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    match model {
        FitModel::Lorentzian => {
            let fit = fit_lorentzian(&x, &y)?;
            println!("center = {}", fit.params.center);
            println!("center_error = {}", fit.param_errors.center);
            println!("hwhm = {}", fit.params.hwhm);
            println!("hwhm_error = {}", fit.param_errors.hwhm);
            println!("peak = {}", fit.params.peak);
            println!("peak_error = {}", fit.param_errors.peak);
            println!("offset = {}", fit.params.offset);
            println!("offset_error = {}", fit.param_errors.offset);
            println!("residual_rms = {}", fit.residual_rms);
            println!("converged = {}", fit.converged);
        }
        FitModel::Sin2 => {
            let fit = fit_sin2(&x, &y)?;
            println!("amplitude = {}", fit.params.amplitude);
            println!("amplitude_error = {}", fit.param_errors.amplitude);
            println!("phase_rad = {}", fit.params.phase);
            println!("phase_error = {}", fit.param_errors.phase);
            println!("offset = {}", fit.params.offset);
            println!("offset_error = {}", fit.param_errors.offset);
            println!("visibility = {}", fit.visibility);
            println!("visibility_error = {}", fit.visibility_error);
            println!("residual_rms = {}", fit.residual_rms);
            println!("converged = {}", fit.converged);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Derive => cmd_derive(&cfg),
        Command::Spectrum {
            nu_l,
            omega_max_khz,
            phi,
            grid_span_khz,
            points,
            transition,
            sample,
        } => cmd_spectrum(
            &cfg,
            nu_l,
            omega_max_khz,
            phi,
            grid_span_khz,
            points,
            transition.into(),
            sample,
        ),
        Command::Swscan {
            nu_l,
            phi_points,
            omega_max_khz,
        } => cmd_swscan(&cfg, nu_l, phi_points, omega_max_khz),
        Command::Sideband {
            nu_l,
            phi_points,
            omega_carrier_khz,
            omega_sideband_khz,
        } => cmd_sideband(&cfg, nu_l, phi_points, omega_carrier_khz, omega_sideband_khz),
        Command::Fit { input, model } => cmd_fit(&input, model),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // validation problems are usage errors; everything else is a
            // numerical or environmental failure
            let code = match e {
                Error::Validation { .. } | Error::CsvParse { .. } => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
