//! `cfkit`: regenerate the experiment tables as CSV.
//!
//! Exit codes: 0 when every gated check passes, 1 when a gated check fails
//! or a run aborts, 2 for usage errors.

use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use cauchy_fantappie::experiments::{self, Command, ExperimentConfig};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Diagnose,
    Identities,
    Kernels,
    Reproduce,
    Szego,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Diagnose => Command::Diagnose,
            Cmd::Identities => Command::Identities,
            Cmd::Kernels => Command::Kernels,
            Cmd::Reproduce => Command::Reproduce,
            Cmd::Szego => Command::Szego,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cfkit", version, about = "Cauchy-Fantappie kernel experiments as CSV tables")]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// key = value settings applied before the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain spec: ball[:n], ellipsoid:a1,a2,..., model1, model2[:n]; repeatable
    #[arg(long)]
    domain: Vec<String>,
    /// Kernel: bm, cl or levi; repeatable
    #[arg(long)]
    kernel: Vec<String>,
    /// Resolution schedule, comma separated
    #[arg(long)]
    res: Option<String>,
    /// Offset factor schedule c in delta = c h^(1/2), comma separated
    #[arg(long)]
    delta: Option<String>,
    /// Smoothing parameter of the Levi-polynomial kernel
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV path (stdout when absent)
    #[arg(long)]
    out: Option<String>,
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, String> {
    let cmd: Command = cli.command.into();
    let mut cfg = ExperimentConfig::defaults(cmd);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let mut set = |k: &str, v: &str| cfg.set(k, v).map_err(|e| e.to_string());
    if !cli.domain.is_empty() {
        set("domain", &cli.domain.join(";"))?;
    }
    if !cli.kernel.is_empty() {
        set("kernel", &cli.kernel.join(","))?;
    }
    for (key, value) in [("res", &cli.res), ("delta", &cli.delta), ("eps", &cli.eps), ("seed", &cli.seed), ("out", &cli.out)] {
        if let Some(v) = value {
            set(key, v)?;
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match configure(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cfkit: {e}");
            return ExitCode::from(2);
        }
    };
    let table = match experiments::run(cli.command.into(), &cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cfkit: run aborted: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &cfg.out {
        Some(path) => fs::File::create(path).map_err(csv::Error::from).and_then(|f| table.write_csv(f)),
        None => table.write_csv(io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("cfkit: writing output: {e}");
        return ExitCode::from(2);
    }
    let gated = table.rows.iter().filter(|r| r.passes().is_some()).count();
    let failures = table.failures();
    for r in &failures {
        eprintln!("FAIL {} {} {} {}: {:e}", r.domain, r.kernel, r.resolution, r.quantity, r.value);
    }
    eprintln!("{} rows, {gated} gated, {} failed", table.rows.len(), failures.len());
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
