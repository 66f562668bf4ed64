//! `dlcert`: certify dictionaries, generate instances, run noise sweeps and
//! check the auxiliary lemmas.
//!
//! Exit codes: 0 success, 1 hypothesis or inequality failure, 2 usage or
//! parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use dlcert::certificate::{certify, CertifyOptions};
use dlcert::harness::experiment::{records_to_csv, run_experiment, ExperimentConfig};
use dlcert::harness::lemmas::{check_lemma4, run_lemma_suite, LemmaSuiteConfig, LemmaSuiteReport};
use dlcert::harness::{generate, write_generated, GenerateConfig};
use dlcert::io::{read_codes, read_dictionary, read_hypergraph, to_json_string};
use dlcert::{Error, DEFAULT_RANK_TOL};

#[derive(Parser)]
#[command(
    name = "dlcert",
    version,
    about = "Stability certificates for sparse linear coding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every hypothesis and emit a stability certificate as JSON.
    Certify {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        codes: PathBuf,
        #[arg(long)]
        hypergraph: PathBuf,
        /// Relative rank tolerance.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random certified instance and a noisy dataset.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a noise sweep and write one CSV record per trial.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination; stdout when absent. The summary goes to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the lemma checks, or the injectivity check for one hypergraph.
    CheckLemmas {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, requires = "m_bar")]
        hypergraph: Option<PathBuf>,
        #[arg(long, requires = "hypergraph")]
        m_bar: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        e if e.is_input_error() => 2,
        Error::CapExceeded { .. } | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Error> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Certify {
            dict,
            codes,
            hypergraph,
            tol,
            out,
        } => {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "--tol must lie in (0, 1), got {tol}"
                )));
            }
            let a = read_dictionary(&dict)?;
            let x = read_codes(&codes)?;
            let h = read_hypergraph(&hypergraph)?;
            let cert = certify(&a, &x, &h, &CertifyOptions { rank_tol: tol })?;
            emit(&to_json_string(&cert)?, out.as_deref())?;
            Ok(verdict(cert.passes()))
        }
        Command::Generate { config, seed, out } => {
            let mut cfg: GenerateConfig = read_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let g = generate(&cfg)?;
            for p in write_generated(&out, &g)? {
                println!("{}", p.display());
            }
            Ok(Outcome::Pass)
        }
        Command::Experiment { config, seed, out } => {
            let mut cfg: ExperimentConfig = read_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let outcome = run_experiment(&cfg)?;
            emit(&records_to_csv(&outcome.records)?, out.as_deref())?;
            eprint!("{}", to_json_string(&outcome.summary)?);
            Ok(verdict(
                outcome.summary.all_pass && outcome.summary.slope_ok,
            ))
        }
        Command::CheckLemmas {
            config,
            seed,
            hypergraph,
            m_bar,
            out,
        } => {
            let report = match (hypergraph, m_bar) {
                (Some(path), Some(m_bar)) => {
                    let h = read_hypergraph(&path)?;
                    let r = check_lemma4(&h, m_bar)?;
                    LemmaSuiteReport {
                        lemma2: None,
                        lemma3: None,
                        pass: r.pass,
                        lemma4: vec![r],
                    }
                }
                _ => {
                    let mut cfg: LemmaSuiteConfig = read_config(config.as_deref())?;
                    if let Some(s) = seed {
                        cfg = cfg.with_seed(s);
                    }
                    run_lemma_suite(&cfg)?
                }
            };
            emit(&to_json_string(&report)?, out.as_deref())?;
            Ok(verdict(report.pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
