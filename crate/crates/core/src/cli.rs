//! Command-line front end.
//!
//! Exit status is 0 when the result is valid or the check passes, 1 for a
//! mathematical failure (not PSD, failed verification, eigensolver
//! breakdown) and 2 for unreadable or invalid input. Errors are reported on
//! a single line as `error[<Code>]: <message>`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::error::KernelError;
use crate::io::{
    kernel_from_document, kernel_to_document, to_document, tree_from_document, write_sample_batch,
    CertificateDocument, DocumentError, RealizationDocument, VerifyDocument,
};
use crate::kernel::{markov_product, GluePoint, IndexedKernel, DEFAULT_BASEPOINT_TOL};
use crate::psd::{psd_check_eigen, DEFAULT_PSD_TOL};
use crate::realization::{glue_realizations, realize_process, Tolerances};
use crate::sampling::{sample_glued_with, sample_realization_with, SampleOptions};
use crate::tree::glue_tree;
use crate::verify::{verify_realization, VerifyConfig};

#[derive(Debug, Parser)]
#[command(
    name = "markov-product",
    version,
    about = "Markov products of positive definite kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: RunOptions,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Markov product of two kernels at --glue-label.
    Glue { first: PathBuf, second: PathBuf },
    /// PSD certificate of a kernel.
    Check { kernel: PathBuf },
    /// Gaussian realization (mean and covariance) pinned at --glue-label.
    Realize { kernel: PathBuf },
    /// Sample table of one realization, or of two glued at --glue-label.
    Sample {
        first: PathBuf,
        second: Option<PathBuf>,
    },
    /// Compare the Markov product with sampled second moments.
    Verify { first: PathBuf, second: PathBuf },
    /// Fold a tree of kernels.
    GlueTree { tree: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    #[arg(long, global = true, default_value_t = DEFAULT_PSD_TOL)]
    pub tol: f64,
    #[arg(long = "basepoint-tol", global = true, default_value_t = DEFAULT_BASEPOINT_TOL)]
    pub basepoint_tol: f64,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long, global = true, default_value = "0", value_parser = parse_seed)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long = "mc-tol", global = true)]
    pub mc_tol: Option<f64>,
    #[arg(long = "glue-label", global = true)]
    pub glue_label: Option<String>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long = "no-timestamp", global = true)]
    pub no_timestamp: bool,
    #[arg(long = "real-mode", global = true)]
    pub real_mode: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: DEFAULT_PSD_TOL,
            basepoint_tol: DEFAULT_BASEPOINT_TOL,
            seed: 0,
            samples: 1_000_000,
            mc_tol: None,
            glue_label: None,
            output: None,
            no_timestamp: false,
            real_mode: false,
        }
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    MissingArgument(&'static str),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                "FileNotFound"
            }
            CliError::Io { .. } => "IoError",
            CliError::Parse { .. } => "ParseError",
            CliError::MissingArgument(_) => "MissingArgument",
            CliError::Kernel(e) => e.code(),
        }
    }

    pub fn exit_status(&self) -> i32 {
        match self {
            CliError::Kernel(e) if e.is_mathematical() => 1,
            _ => 2,
        }
    }

    /// `error[<Code>]: <message>` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("error[{}]: {msg}", self.code())
    }
}

/// What a run produced: the document to write and the exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: i32,
    pub document: String,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_kernel(path: &Path) -> Result<IndexedKernel, CliError> {
    kernel_from_document(&read(path)?).map_err(|e| document_error(path, e))
}

fn document_error(path: &Path, e: DocumentError) -> CliError {
    match e {
        DocumentError::Kernel(k) => CliError::Kernel(k),
        other => CliError::Parse {
            path: path.to_owned(),
            message: other.to_string(),
        },
    }
}

fn glue_label(options: &RunOptions) -> Result<GluePoint, CliError> {
    options
        .glue_label
        .as_deref()
        .map(GluePoint::new)
        .ok_or(CliError::MissingArgument("--glue-label is required"))
}

fn timestamp(options: &RunOptions) -> Option<u64> {
    if options.no_timestamp {
        return None;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

fn sample_options(options: &RunOptions) -> SampleOptions {
    SampleOptions {
        real_mode: options.real_mode,
        ..SampleOptions::default()
    }
}

/// Executes one command and renders its output document.
pub fn run(command: &Command, options: &RunOptions) -> Result<RunOutcome, CliError> {
    let tolerances = Tolerances {
        psd: options.tol,
        basepoint: options.basepoint_tol,
    };
    if !(options.tol.is_finite() && options.tol > 0.0) {
        return Err(KernelError::InvalidTolerance { value: options.tol }.into());
    }
    let ok = |document| RunOutcome {
        status: 0,
        document,
    };
    match command {
        Command::Glue { first, second } => {
            let (k1, k2) = (load_kernel(first)?, load_kernel(second)?);
            let x0 = glue_label(options)?;
            let product = markov_product(&k1, &k2, &x0, options.basepoint_tol)?;
            Ok(ok(kernel_to_document(&product)))
        }
        Command::Check { kernel } => {
            let k = load_kernel(kernel)?;
            let cert = psd_check_eigen(&k, options.tol)?;
            let mut doc = CertificateDocument::from(&cert);
            doc.generated_at = timestamp(options);
            Ok(RunOutcome {
                status: if cert.verdict { 0 } else { 1 },
                document: to_document(&doc),
            })
        }
        Command::Realize { kernel } => {
            let k = load_kernel(kernel)?;
            let x0 = glue_label(options)?;
            let spec = realize_process(&k, &x0.label, &tolerances)?;
            let mut doc = RealizationDocument::from(&spec);
            doc.generated_at = timestamp(options);
            Ok(ok(to_document(&doc)))
        }
        Command::Sample { first, second } => {
            let x0 = glue_label(options)?;
            let spec1 = realize_process(&load_kernel(first)?, &x0.label, &tolerances)?;
            let batch = match second {
                None => sample_realization_with(
                    &spec1,
                    options.samples,
                    options.seed,
                    &sample_options(options),
                )?,
                Some(path) => {
                    let spec2 = realize_process(&load_kernel(path)?, &x0.label, &tolerances)?;
                    let glued = glue_realizations(spec1, spec2)?;
                    sample_glued_with(
                        &glued,
                        options.samples,
                        options.seed,
                        &sample_options(options),
                    )?
                }
            };
            let mut buf = Vec::new();
            write_sample_batch(&batch, &mut buf).expect("in-memory write");
            Ok(ok(String::from_utf8(buf).expect("UTF-8 table")))
        }
        Command::Verify { first, second } => {
            let (k1, k2) = (load_kernel(first)?, load_kernel(second)?);
            let x0 = glue_label(options)?;
            let config = VerifyConfig {
                samples: options.samples,
                seed: options.seed,
                mc_tol: options.mc_tol,
                tolerances,
                sampling: sample_options(options),
            };
            let report = verify_realization(&k1, &k2, &x0, &config)?;
            let mut doc = VerifyDocument::from(&report);
            doc.generated_at = timestamp(options);
            Ok(RunOutcome {
                status: if report.passed { 0 } else { 1 },
                document: to_document(&doc),
            })
        }
        Command::GlueTree { tree } => {
            let t = tree_from_document(&read(tree)?).map_err(|e| document_error(tree, e))?;
            let folded = glue_tree(&t, options.basepoint_tol)?;
            Ok(ok(kernel_to_document(&folded)))
        }
    }
}

/// Parses `args`, runs, writes the document, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command, &cli.options) {
        Ok(outcome) => {
            let written = match &cli.options.output {
                Some(path) => fs::write(path, &outcome.document).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                }),
                None => {
                    print!("{}", outcome.document);
                    Ok(())
                }
            };
            match written {
                Ok(()) => outcome.status,
                Err(e) => {
                    eprintln!("{}", e.line());
                    e.exit_status()
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_status()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_accept_decimal_and_hex() {
        assert_eq!(parse_seed("42"), Ok(42));
        assert_eq!(parse_seed("0xff"), Ok(255));
        assert_eq!(parse_seed("0XFFFFFFFFFFFFFFFF"), Ok(u64::MAX));
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0xg").is_err());
    }

    #[test]
    fn flags_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from([
            "markov-product",
            "verify",
            "a.json",
            "b.json",
            "--glue-label",
            "x0",
            "--seed",
            "0x10",
            "--samples",
            "500",
            "--mc-tol",
            "0.01",
            "--no-timestamp",
            "--real-mode",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Verify { .. }));
        assert_eq!(cli.options.seed, 16);
        assert_eq!(cli.options.samples, 500);
        assert_eq!(cli.options.mc_tol, Some(0.01));
        assert!(cli.options.no_timestamp && cli.options.real_mode);
        assert_eq!(cli.options.tol, DEFAULT_PSD_TOL);
    }

    #[test]
    fn exit_status_taxonomy() {
        let not_psd = CliError::Kernel(KernelError::NotPsd {
            min_eigenvalue: -1.0,
            threshold: -1e-9,
        });
        assert_eq!(not_psd.exit_status(), 1);
        let input = CliError::Kernel(KernelError::BasepointNotUnit {
            label: "x0".into(),
            re: 2.0,
            im: 0.0,
        });
        assert_eq!(input.exit_status(), 2);
        assert!(input.line().starts_with("error[BasepointNotUnit]: "));
        assert!(!input.line().contains('\n'));
    }
}
