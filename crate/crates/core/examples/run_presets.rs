//! Run every built-in experiment and write its outputs, as the `preset`
//! subcommand does.
//!
//!     cargo run --example run_presets -- [OUT_DIR]

use std::path::PathBuf;

use nullsrc::experiments::{builtin_presets, run_experiment};

fn main() -> nullsrc::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs".into()));
    for cfg in builtin_presets() {
        let res = run_experiment(&cfg)?;
        let dir = root.join(&cfg.name);
        res.write(&dir)?;
        let ok = res.methods.iter().filter(|(_, r)| r.is_ok()).count();
        println!("{:<5} {ok}/{} methods, rank {:>3}, written to {}", cfg.name, res.methods.len(), res.rank, dir.display());
    }
    Ok(())
}
