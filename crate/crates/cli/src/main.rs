//! `microlocal` experiment runner: writes CSV/JSON artifacts and a manifest
//! into the output directory and prints one PASS/FAIL line per check.
//!
//! Exit status: 0 when every check passes, 1 on a failed check, 2 on a usage
//! error.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use commands::Check;
use config::{Key, Params, UsageError};
use output::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Figure1,
    AiryMoments,
    WeightsVerify,
    Model1d,
    WfaScan,
    FbiRoundtrip,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Figure1 => "figure1",
            Command::AiryMoments => "airy-moments",
            Command::WeightsVerify => "weights-verify",
            Command::Model1d => "model1d",
            Command::WfaScan => "wfa-scan",
            Command::FbiRoundtrip => "fbi-roundtrip",
        }
    }

    fn keys(self) -> &'static [Key] {
        match self {
            Command::Figure1 => commands::FIGURE1_KEYS,
            Command::AiryMoments => commands::AIRY_KEYS,
            Command::WeightsVerify => commands::WEIGHT_KEYS,
            Command::Model1d => commands::MODEL_KEYS,
            Command::WfaScan => commands::WFA_KEYS,
            Command::FbiRoundtrip => commands::FBI_KEYS,
        }
    }

    fn run(self, p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
        match self {
            Command::Figure1 => commands::figure1(p, out),
            Command::AiryMoments => commands::airy_moments(p, out),
            Command::WeightsVerify => commands::weights_verify(p, out),
            Command::Model1d => commands::model1d(p, out),
            Command::WfaScan => commands::wfa(p, out),
            Command::FbiRoundtrip => commands::fbi_roundtrip(p, out),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "microlocal", version, about = "Run a microlocal-analysis experiment and write its artifacts")]
struct Cli {
    command: Command,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Flat key=value file; blank lines and # comments are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; applied after --config, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Single-threaded run with no timing in the manifest, so repeated runs
    /// are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    library_version: &'a str,
    deterministic: bool,
    config: BTreeMap<String, String>,
    overrides: &'a [(String, String)],
    artifacts: &'a [String],
    checks: &'a [Check],
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
}

fn overrides(cli: &Cli) -> Result<Vec<(String, String)>, UsageError> {
    let mut out = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => Vec::new(),
    };
    for s in &cli.set {
        out.push(config::parse_set(s)?);
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let given = match overrides(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    let params = match Params::resolve(cli.command.keys(), &given) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.deterministic {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(1).build_global() {
            eprintln!("cannot pin the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let mut out = match Artifacts::new(&cli.out) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("cannot create {}: {e}", cli.out.display());
            return ExitCode::from(1);
        }
    };
    let checks = match cli.command.run(&params, &mut out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("FAIL {}: io error: {e}", cli.command.name());
            return ExitCode::from(1);
        }
    };
    let manifest = Manifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        library_version: microlocal::VERSION,
        deterministic: cli.deterministic,
        config: params.echo(),
        overrides: &given,
        artifacts: &out.written.clone(),
        checks: &checks,
        elapsed_seconds: (!cli.deterministic).then(|| start.elapsed().as_secs_f64()),
    };
    if let Err(e) = out.json("manifest.json", &manifest) {
        eprintln!("FAIL {}: cannot write manifest: {e}", cli.command.name());
        return ExitCode::from(1);
    }
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match checks.iter().find(|c| !c.pass) {
        Some(first) => {
            eprintln!("first failing check: {}", first.name);
            ExitCode::from(1)
        }
        None => ExitCode::SUCCESS,
    }
}
