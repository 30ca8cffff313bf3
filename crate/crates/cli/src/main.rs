use std::fs::File;
use std::io::{BufWriter, ErrorKind, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use vibraverify::eval::{compute_roc, run_manifest, write_reports, MetricsReport};
use vibraverify::preprocess::highpass_accel;
use vibraverify::signal::{load_accel_csv, load_wav, select_axis};
use vibraverify::similarity::verdict_json;
use vibraverify::spectro::{stft_power, write_dump, StftParams};
use vibraverify::wearsim::{load_scenario, run_scenario, AccelModel, MANIFEST_NAME};
use vibraverify::{convert::convert_spectrogram, verify, Origin, Spectrogram, Verdict, VerifyConfig};

type Failure = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "vibraverify", version, about = "Verify voice commands against wearable accelerometer vibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config; missing keys take defaults.
    #[arg(long, env = "VIBRAVERIFY_CONFIG")]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<VerifyConfig, Failure> {
        match &self.config {
            Some(p) => VerifyConfig::load(p).map_err(|e| format!("config {}: {e}", p.display()).into()),
            None => Ok(VerifyConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score a mic recording against an accelerometer trace. Exit 0 accept, 1 reject.
    Verify {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        accel: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Generate a labeled synthetic corpus and its manifest.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify every manifest trial and write metrics.json, roc.csv, confusion.csv.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Report directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Operating threshold; defaults to the config threshold.
        #[arg(long)]
        eta: Option<f64>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Dump the mic spectrogram converted into the accelerometer domain.
    Convert {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Accelerometer sampling rate to fold into.
        #[arg(long, default_value_t = 200.0)]
        f_ws: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Dump the power spectrogram of a WAV file or of the dominant accelerometer axis.
    Spectrogram {
        #[arg(long, conflicts_with = "accel", required_unless_present = "accel")]
        wav: Option<PathBuf>,
        #[arg(long)]
        accel: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_fft: Option<usize>,
        #[arg(long)]
        hop: Option<usize>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run the TCP verification service.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Verify { wav, accel, config } => {
            let config = config.load()?;
            let mic = load_wav(&wav).map_err(|e| format!("wav {}: {e}", wav.display()))?;
            let trace = load_accel_csv(&accel).map_err(|e| format!("accel {}: {e}", accel.display()))?;
            let report = verify(&mic, &trace, &config)?;
            emit(&verdict_json(&report, &config))?;
            Ok(if report.verdict == Verdict::Accept { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Simulate { scenario, out, seed } => {
            let entries = load_scenario(&scenario).map_err(|e| format!("scenario {}: {e}", scenario.display()))?;
            let manifest = run_scenario(&entries, &out, &AccelModel::default(), seed)?;
            eprintln!("{} trials", manifest.len());
            emit(&out.join(MANIFEST_NAME).display().to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { manifest, out, eta, config } => {
            let config = config.load()?;
            let records = run_manifest(&manifest, &config)?;
            let summary = compute_roc(&records)?;
            let report = MetricsReport::new(&summary, &records, eta.unwrap_or(config.threshold));
            let dir = out.unwrap_or_else(|| manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
            write_reports(&dir, &summary, &report)?;
            emit(&serde_json::to_string_pretty(&report)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Convert { wav, out, f_ws, config } => {
            let config = config.load()?;
            let mic = load_wav(&wav).map_err(|e| format!("wav {}: {e}", wav.display()))?;
            let spec = stft_power(&mic, &config.mic_stft, Origin::Mic)?;
            let converted = convert_spectrogram(&spec, &config.conversion(f_ws))?;
            dump(&out, &converted)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrogram { wav, accel, out, n_fft, hop, config } => {
            let config = config.load()?;
            let (sig, base, origin) = match (wav, accel) {
                (Some(wav), _) => (load_wav(&wav).map_err(|e| format!("wav {}: {e}", wav.display()))?, config.mic_stft, Origin::Mic),
                (None, Some(accel)) => {
                    let trace = load_accel_csv(&accel).map_err(|e| format!("accel {}: {e}", accel.display()))?;
                    let axes = trace.regularize()?;
                    let (_, axis) = select_axis(&axes);
                    (highpass_accel(axis, config.filters.accel_highpass_hz)?, config.accel_stft, Origin::Accel)
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            let params = StftParams::new(n_fft.unwrap_or(base.n_fft), hop.unwrap_or(base.hop), base.window)?;
            dump(&out, &stft_power(&sig, &params, origin)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { port, bind, config } => {
            let config = config.load()?;
            let listener = TcpListener::bind((bind.as_str(), port))?;
            eprintln!("listening on {}", listener.local_addr()?);
            vibraverify::service::serve(listener, Arc::new(config))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Prints one line to stdout; a closed pipe is not an error.
fn emit(line: &str) -> Result<(), Failure> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn dump(path: &Path, spec: &Spectrogram) -> Result<(), Failure> {
    let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    write_dump(BufWriter::new(f), spec)?;
    Ok(())
}
