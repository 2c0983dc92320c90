use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tetrapol::cli::{
    cmd_calibrate, cmd_design, cmd_reconstruct, cmd_sweep, read_calibration, write_calibration,
    CliError, CountMode, DeviceConfig, SweepConfig,
};

#[derive(Parser)]
#[command(name = "polcli", version, about = "Tetrahedron photon-counting polarimeter simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the closed-form and determinant-maximizing splitting ratios.
    Design {
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Also write the report as key,value CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the calibration quartet and write a calibration file.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Photons per calibration state, or `exact` for expected counts.
        #[arg(long, default_value = "100000")]
        counts: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a Stokes vector from four detector counts.
    Reconstruct {
        #[arg(long)]
        calibration: PathBuf,
        #[arg(num_args = 4, required = true, value_names = ["N1", "N2", "N3", "N4"])]
        counts: Vec<u64>,
    },
    /// Fidelity map over a half-wave / quarter-wave plate angle grid.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        calibration: PathBuf,
        /// `HWP,QWP` grids, each `start:stop:step` in degrees (stop excluded).
        #[arg(long, default_value = "0:90:3,0:180:6")]
        grid: String,
        #[arg(long, default_value = "100000")]
        counts: String,
        /// Standard deviation of static waveplate offsets, milliradians.
        #[arg(long, default_value_t = 0.0)]
        misalign_mrad: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 picks the number of CPUs.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn device(path: Option<&Path>) -> Result<DeviceConfig, CliError> {
    match path {
        Some(p) => DeviceConfig::parse(&read(p)?).map_err(|e| e.context(p.display())),
        None => Ok(DeviceConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { tolerance, out } => {
            let report = cmd_design(tolerance)?;
            print!("{}", report.text());
            println!("{}", report.json());
            if let Some(out) = out {
                let dots: Vec<String> = report.frame_dots.iter().map(|d| d.to_string()).collect();
                let csv = format!(
                    "key,value\nclosed_form_x_sq,{}\nnumeric_x_sq,{}\ndifference,{}\ntolerance,{}\nframe_dots,{}\ncondition_number,{}\n",
                    report.closed_form,
                    report.numeric,
                    report.difference(),
                    report.tolerance,
                    dots.join(";"),
                    report.condition_number
                );
                write(&out, &csv)?;
            }
        }
        Command::Calibrate { config, counts, seed, out } => {
            let dev = device(config.as_deref())?;
            let counts: CountMode = counts.parse()?;
            let file = cmd_calibrate(&dev, counts, seed)?;
            write(&out, &write_calibration(&file))?;
            let inst = &file.result.instrument;
            println!("condition number = {}", inst.cond);
            println!("max sigma_inv = {}", inst.sigma_inv.max());
            println!("wrote {}", out.display());
        }
        Command::Reconstruct { calibration, counts } => {
            let text = read(&calibration)?;
            let counts: [u64; 4] = counts
                .try_into()
                .map_err(|_| CliError::config("exactly four counts are required"))?;
            print!("{}", cmd_reconstruct(&text, counts)?);
        }
        Command::Sweep {
            config,
            calibration,
            grid,
            counts,
            misalign_mrad,
            seed,
            threads,
            out,
        } => {
            let dev = device(config.as_deref())?;
            let cal = read_calibration(&read(&calibration)?)
                .map_err(|e| e.context(calibration.display()))?;
            let (hwp, qwp) = SweepConfig::parse_grids(&grid)?;
            let sweep = SweepConfig {
                hwp,
                qwp,
                counts: counts.parse()?,
                misalignment_sigma: misalign_mrad * 1e-3,
                seed,
            };
            let output = cmd_sweep(&dev, &sweep, &cal, threads)?;
            write(&out, &output.csv)?;
            print!("{}", output.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polcli: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
