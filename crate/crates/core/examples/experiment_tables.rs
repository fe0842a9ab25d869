//! Builds an experiment table in code and writes it as CSV, as the `cfkit` binary does.
//!
//! Run with `cargo run --release --example experiment_tables`.

use std::io;

use cauchy_fantappie::experiments::{self, Command, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::defaults(Command::Identities);
    cfg.apply_text("# identities on the 2-ball only\ndomain = ball:2\nseed = 7\n")?;
    let table = experiments::run(Command::Identities, &cfg)?;
    table.write_csv(io::stdout().lock())?;
    eprintln!("{} rows, all gated checks pass: {}", table.rows.len(), table.all_pass());
    Ok(())
}
