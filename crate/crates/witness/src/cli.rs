//! `qee-witness <mode> --config <path> [--out <path>] [--threshold <real>] [--no-negativity]`

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use qee_core::model::thermal_state;
use qee_core::protocol::{witness_curve, witness_verdict_with};

use crate::config::{parse_config, ConfigError, ConfigFile};
use crate::output::{self, VerdictStatus, DEFAULT_PRECISION};
use crate::sweep::{convergence_report, run_sweep, SweepError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Coherence curves of both branches and their signal, as CSV.
    Curve,
    /// Table over preparation times, temperatures and couplings, as CSV.
    Sweep,
    /// One-line witness verdict; the exit code reports the outcome.
    Verdict,
    /// Per-row cutoff and residual diagnostics, as CSV.
    Convergence,
}

/// Entanglement witness for a qubit dispersively coupled to a bosonic mode.
#[derive(Clone, Debug, Parser)]
#[command(name = "qee-witness", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub mode: Mode,

    /// Configuration file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Overrides `witness.threshold`.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Skip the joint-state negativity cross-check.
    #[arg(long)]
    pub no_negativity: bool,

    /// Significant digits in CSV and verdict output.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    pub precision: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },

    #[error("invalid threshold {0}")]
    Threshold(f64),

    #[error(transparent)]
    Sweep(#[from] SweepError),

    #[error(transparent)]
    Core(#[from] qee_core::Error),

    #[error("convergence failed for {failed} of {total} rows")]
    ConvergenceFailed { failed: usize, total: usize },
}

impl RunConfig {
    /// Negativity cross-check: on for `verdict`, off for `sweep`, unless
    /// the config file says otherwise; `--no-negativity` always wins.
    pub fn negativity_enabled(&self, file: &ConfigFile) -> bool {
        if self.no_negativity {
            return false;
        }
        file.negativity.unwrap_or(self.mode == Mode::Verdict)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs one invocation and returns the process exit code.
pub fn run(args: &RunConfig) -> Result<u8, CliError> {
    let mut file = load_config(&args.config)?;
    if let Some(threshold) = args.threshold {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(CliError::Threshold(threshold));
        }
        file.protocol.witness_threshold = threshold;
    }
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(io_err(path))?)),
        None => Box::new(io::stdout().lock()),
    };
    let precision = args.precision;
    let negativity = args.negativity_enabled(&file);

    let code = match args.mode {
        Mode::Curve => {
            let curve = witness_curve(&file.protocol)?;
            log::info!("curve computed at Fock cutoff {}", curve.dim);
            output::write_curve_csv(&curve, &mut sink, precision).map_err(io_err(&out_path))?;
            0
        }
        Mode::Sweep => {
            let result = run_sweep(&file.sweep_spec(negativity))?;
            output::write_sweep_csv(&result, &mut sink, precision).map_err(io_err(&out_path))?;
            0
        }
        Mode::Convergence => {
            let report = convergence_report(&file.sweep_spec(negativity));
            output::write_convergence_csv(&report, &mut sink, precision)
                .map_err(io_err(&out_path))?;
            sink.flush().map_err(io_err(&out_path))?;
            let failed = report.entries.iter().filter(|e| !e.converged()).count();
            if failed > 0 {
                return Err(CliError::ConvergenceFailed {
                    failed,
                    total: report.entries.len(),
                });
            }
            0
        }
        Mode::Verdict => {
            let p = &file.protocol;
            let curve = witness_curve(p)?;
            let r0 = thermal_state(&p.thermal, curve.dim)?;
            let amplitudes = negativity.then_some(file.amplitudes);
            let verdict =
                witness_verdict_with(&curve, &p.prep, p.t, &r0, p.witness_threshold, amplitudes)?;
            let status =
                output::emit_verdict(&verdict, &mut sink, precision).map_err(io_err(&out_path))?;
            if status == VerdictStatus::Fault {
                log::error!("witness fired without a separability gap: numerical fault");
            }
            status.code()
        }
    };
    sink.flush().map_err(io_err(&out_path))?;
    Ok(code)
}
