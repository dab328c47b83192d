use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nullsrc::experiments::{build_setup, builtin_presets, preset, run_experiment, ExperimentConfig};
use nullsrc::{analyze, assemble, build_forward_model, verify, Error};

#[derive(Parser)]
#[command(name = "nullsrc", version, about = "Nullspace-weighted source identification from boundary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// key=value (alpha, epsilon, kappa, seed, methods, rank_tol)
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a built-in experiment (ex1 .. ex7b).
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print singular values and projector norms of the inverse model as JSON.
    Spectrum {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Check the exact-data identities on small discretizations.
    Verify {
        #[arg(long)]
        quick: bool,
    },
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidSpec(_) | Error::IncompatibleGrids(_) => Failure::Usage(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn configure(mut cfg: ExperimentConfig, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| Failure::Usage(format!("override must be KEY=VALUE: {o}")))?;
        cfg.apply_override(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn lookup(name: &str) -> Result<ExperimentConfig, Failure> {
    preset(name).ok_or_else(|| {
        let names: Vec<String> = builtin_presets().into_iter().map(|c| c.name).collect();
        Failure::Usage(format!("unknown preset {name}; available: {}", names.join(", ")))
    })
}

fn execute(cfg: ExperimentConfig, out: &PathBuf) -> Result<(), Failure> {
    let res = run_experiment(&cfg)?;
    res.write(out)?;
    let mut failed = false;
    for (m, r) in &res.methods {
        match r {
            Ok(rep) => println!(
                "{:<18} alpha {:.3e}  residual {:.3e}  l2 error {:.3e}  argmax cell {} (distance {})",
                m.name(),
                rep.solve.alpha,
                rep.solve.residual,
                rep.l2_error,
                rep.solve.argmax_cell,
                rep.argmax_chebyshev_distance.map_or("-".into(), |d| d.to_string()),
            ),
            Err(e) => {
                failed = true;
                println!("{:<18} error: {e}", m.name());
            }
        }
    }
    println!("wrote {}", out.display());
    if failed {
        return Err(Failure::Solver("at least one method failed".into()));
    }
    Ok(())
}

fn spectrum(cfg: ExperimentConfig) -> Result<(), Failure> {
    let setup = build_setup(&cfg)?;
    let sys = assemble(&setup.coarse, cfg.epsilon, &cfg.sigma.field(&setup.coarse))?;
    let fm = build_forward_model(&sys, &setup.inverse_basis, &setup.coarse)?;
    let sd = analyze(&fm, cfg.rank_tol)?;
    let json = serde_json::json!({
        "rank": sd.rank,
        "singular_values": sd.s.as_slice(),
        "p_norms": sd.p_norms.as_slice(),
    });
    println!("{}", serde_json::to_string_pretty(&json).expect("json"));
    Ok(())
}

fn run_verify(quick: bool) -> Result<(), Failure> {
    let mut all = true;
    for (label, domain, controls, eps) in verify::standard_cases(quick) {
        println!("{label}");
        let (fm, sd) = verify::build_case(domain, controls, eps)?;
        for c in verify::check_model(&fm, &sd)? {
            all &= c.passed;
            println!("  {c}");
        }
    }
    let count = if quick { 20 } else { 200 };
    println!("{count} random rank-deficient systems");
    let mut worst: Vec<verify::Check> = Vec::new();
    for (fm, sd) in verify::random_cases(count, 2024) {
        for (i, c) in verify::check_model(&fm, &sd)?.into_iter().enumerate() {
            match worst.get_mut(i) {
                Some(w) if w.worst >= c.worst && w.passed <= c.passed => {}
                Some(w) => *w = c,
                None => worst.push(c),
            }
        }
    }
    for c in worst {
        all &= c.passed;
        println!("  {c}");
    }
    if all {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Failure::Solver("some checks failed".into()))
    }
}

fn threads_from_env() -> Result<(), Failure> {
    let Ok(v) = std::env::var("NULLSRC_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("NULLSRC_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = threads_from_env().and_then(|_| match cli.command {
        Command::Run { config, out, overrides } => {
            let cfg = ExperimentConfig::load(&config).map_err(|e| match e {
                Error::Io(m) => Failure::Usage(m),
                other => other.into(),
            })?;
            execute(configure(cfg, &overrides)?, &out)
        }
        Command::Preset { name, out, overrides } => execute(configure(lookup(&name)?, &overrides)?, &out),
        Command::Spectrum { config, preset } => {
            let cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(name)) => lookup(&name)?,
                (None, None) => unreachable!("clap enforces one source"),
            };
            spectrum(cfg)
        }
        Command::Verify { quick } => run_verify(quick),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
