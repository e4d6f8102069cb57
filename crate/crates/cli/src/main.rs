//! `serlab` command-line front end.
//!
//! Exit status: 0 on success, 1 when a verification check fails, 2 on usage
//! or input errors.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "serlab",
    version,
    about = "Symbol error rates of the ML detector in AWGN"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SER or derivative curve of a constellation.
    Ser(SerArgs),
    /// Bound, regime, inflection and log-concavity checks for a constellation.
    Verify(VerifyArgs),
    /// Derivative curves of the spherical decision region.
    Sphere(SphereArgs),
    /// SER averaged over a fading distribution.
    Fade(FadeArgs),
    /// Power allocation across V-BLAST streams.
    Allocate(AllocateArgs),
    /// Jammer power/time sharing.
    Jam(JamArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SerArgs {
    /// Standard name (bpsk, qpsk, 8psk, 16qam, orthogonal:3, cube:3) or JSON file.
    #[arg(long)]
    constellation: String,
    /// SNR grid start:stop:count[:lin|log].
    #[arg(long, conflicts_with = "noise")]
    snr: Option<String>,
    /// Noise-power grid start:stop:count[:lin|log].
    #[arg(long)]
    noise: Option<String>,
    /// pe, pc, pei:i, pci:i, optionally prefixed d1: or d2:.
    #[arg(long, default_value = "pe")]
    quantity: String,
    /// mc or quadrature.
    #[arg(long, default_value = "mc")]
    method: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Standard name or JSON file.
    #[arg(long)]
    constellation: String,
    #[arg(long, default_value = "0.05:100:40:log")]
    snr: String,
    #[arg(long, default_value = "0.01:20:40:log")]
    noise: String,
    /// mc or quadrature; defaults to quadrature for n <= 2.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SphereArgs {
    #[arg(long)]
    n: usize,
    /// first-order, lower, upper or fixed:R.
    #[arg(long, default_value = "first-order")]
    radius_rule: String,
    #[arg(long, conflicts_with = "noise")]
    snr: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    /// Derivative order (0 for P_e itself).
    #[arg(long, default_value_t = 1)]
    order: u8,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct FadeArgs {
    /// Closed form: bpsk-closed-form, qpsk-closed-form or sphere:n:R.
    #[arg(long, conflicts_with = "curve")]
    pe: Option<String>,
    /// CSV written by `serlab ser` on the SNR axis, interpolated monotonically.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// rayleigh, rice:K, nakagami:m or lognormal:sigma_db.
    #[arg(long)]
    fading: String,
    /// Grid of mean SNRs start:stop:count[:lin|log].
    #[arg(long)]
    mean_snr: String,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct AllocateArgs {
    /// Comma-separated per-stream SNRs.
    #[arg(long, value_delimiter = ',', required = true)]
    streams: Vec<f64>,
    #[arg(long)]
    pe: String,
    /// Optimize the fading-averaged BLER instead of the instantaneous one.
    #[arg(long)]
    fading: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct JamArgs {
    #[arg(long)]
    pe: String,
    /// Average noise-power budget.
    #[arg(long)]
    budget: f64,
    /// optimal or suboptimal.
    #[arg(long, default_value = "optimal")]
    mode: String,
    /// Noise-power range searched for the inflection point, lo:hi.
    #[arg(long, default_value = "0.001:1000")]
    bracket: String,
    #[command(flatten)]
    out: Output,
}

/// Result of a subcommand: the text to emit and whether every check passed.
pub struct Report {
    pub text: String,
    pub passed: bool,
}

pub enum Failure {
    Usage(String),
}

impl From<serlab::Error> for Failure {
    fn from(e: serlab::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write to stdout: {e}"))),
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (report, out) = match &cli.command {
        Command::Ser(a) => (commands::ser(a)?, &a.out),
        Command::Verify(a) => (commands::verify(a)?, &a.out),
        Command::Sphere(a) => (commands::sphere(a)?, &a.out),
        Command::Fade(a) => (commands::fade(a)?, &a.out),
        Command::Allocate(a) => (commands::allocate(a)?, &a.out),
        Command::Jam(a) => (commands::jam(a)?, &a.out),
    };
    emit(out, &report.text)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
