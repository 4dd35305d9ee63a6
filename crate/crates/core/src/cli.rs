//! `namf` command-line driver.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, invalid values,
//! missing input files), 1 for any other failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::io::{load_image, save_image};
use crate::metrics::{mse, psnr_from_mse, ssim, ssim_global};
use crate::noise::{inject_sap, NoiseSpec};
use crate::pipeline::{namf_detailed, Method, NamfParams};
use crate::sweep::{run_sweep, RunConfig};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "namf",
    version,
    about = "Salt-and-pepper noise removal and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corrupt an image with salt-and-pepper noise.
    Inject {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Probability that a pixel is corrupted, in [0,1].
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0.5)]
        salt_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the ground-truth mask as a {0,255} image.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Restore a noisy image.
    Denoise {
        #[arg(long, default_value = "namf")]
        method: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Write the detected-noise mask as a {0,255} image (namf only).
        #[arg(long)]
        dump_mask: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Compare an image against a reference.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Also report SSIM from whole-image statistics.
        #[arg(long)]
        ssim_global: bool,
    },
    /// Run a density sweep described by a config file and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_csv` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write 0 in the runtime column so repeated runs are byte-identical.
        #[arg(long)]
        no_runtime: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    w_max: Option<usize>,
    #[arg(long)]
    w_step: Option<usize>,
    #[arg(long)]
    patch_radius: Option<usize>,
    #[arg(long)]
    search_radius: Option<usize>,
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    kernel_a: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, p: &mut NamfParams) {
        let d = &mut p.detector;
        d.threshold = self.threshold.unwrap_or(d.threshold);
        d.w_max = self.w_max.unwrap_or(d.w_max);
        d.w_step = self.w_step.unwrap_or(d.w_step);
        let n = &mut p.nlm;
        n.patch_radius = self.patch_radius.unwrap_or(n.patch_radius);
        n.search_radius = self.search_radius.unwrap_or(n.search_radius);
        n.beta0 = self.beta0.unwrap_or(n.beta0);
        n.beta1 = self.beta1.unwrap_or(n.beta1);
        n.beta2 = self.beta2.unwrap_or(n.beta2);
        n.kernel_a = self.kernel_a.unwrap_or(n.kernel_a);
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_) | Error::Config(_) => EXIT_USAGE,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "input file not found: {}",
            path.display()
        )))
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr, reports to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == EXIT_USAGE {
                eprintln!("run `namf --help` for usage");
            }
            f.code
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Inject {
            input,
            output,
            density,
            salt_fraction,
            seed,
            mask,
        } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(Failure::usage("density must be in [0,1]"));
            }
            if !(0.0..=1.0).contains(&salt_fraction) {
                return Err(Failure::usage("salt fraction must be in [0,1]"));
            }
            require_file(&input)?;
            let img = load_image(&input)?;
            let spec = NoiseSpec {
                density,
                salt_fraction,
                seed,
            };
            let (noisy, truth) = inject_sap(&img, &spec)?;
            save_image(&noisy, &output)?;
            if let Some(m) = mask {
                save_image(&truth.to_gray(), &m)?;
            }
            println!(
                "corrupted {} of {} pixels",
                truth.count_ones(),
                img.pixels().len()
            );
        }
        Command::Denoise {
            method,
            input,
            output,
            dump_mask,
            params: overrides,
        } => {
            let method: Method = method
                .parse()
                .map_err(|e: Error| Failure::usage(e.to_string()))?;
            let mut params = NamfParams::default();
            overrides.apply(&mut params);
            params.validate()?;
            require_file(&input)?;
            let img = load_image(&input)?;
            match method {
                Method::Namf => {
                    let out = namf_detailed(&img, &params)?;
                    save_image(&out.image, &output)?;
                    if let Some(m) = dump_mask {
                        save_image(&out.mask.to_gray(), &m)?;
                    }
                    println!(
                        "detected {} noisy pixels, h = {:.4}",
                        out.mask.count_ones(),
                        out.h
                    );
                }
                Method::Mf => {
                    if dump_mask.is_some() {
                        return Err(Failure::usage("--dump-mask is only available for namf"));
                    }
                    save_image(&method.apply(&img, &params)?, &output)?;
                }
            }
        }
        Command::Metrics {
            reference,
            test,
            ssim_global: global,
        } => {
            require_file(&reference)?;
            require_file(&test)?;
            let a = load_image(&reference)?;
            let b = load_image(&test)?;
            let m = mse(&a, &b)?;
            println!("mse {m:.6}");
            let p = psnr_from_mse(m);
            if p.is_infinite() {
                println!("psnr_db inf");
            } else {
                println!("psnr_db {p:.4}");
            }
            println!("ssim {:.6}", ssim(&a, &b)?);
            if global {
                println!("ssim_global {:.6}", ssim_global(&a, &b)?);
            }
        }
        Command::Sweep {
            config,
            output,
            seed,
            no_runtime,
            params: overrides,
        } => {
            require_file(&config)?;
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(o) = output {
                cfg.output_csv = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if no_runtime {
                cfg.record_runtime = false;
            }
            overrides.apply(&mut cfg.params);
            let result = run_sweep(&cfg)?;
            let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "wrote {} rows to {} ({failed} failed)",
                result.rows.len(),
                cfg.output_csv.display()
            );
        }
    }
    Ok(())
}
