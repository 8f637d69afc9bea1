use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exitdp::gallery;
use exitdp::harness::{run, Manifest, Pipeline, RunConfig};

/// Solve, simulate and check controlled exit problems.
#[derive(Parser, Debug)]
#[command(name = "exitdp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Backward dynamic programming on a lattice.
    Solve(RunArgs),
    /// Euler–Maruyama paths under a policy.
    Simulate(RunArgs),
    /// One residual check; the name must match the configured check.
    Verify {
        check: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Shaking and mollification sweep over δ.
    Shake(RunArgs),
    /// Convergence rate study over h.
    Rates(RunArgs),
    /// Built-in instances.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
}

#[derive(Subcommand, Debug)]
enum GalleryAction {
    List,
    Describe { name: String },
}

fn load(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::load(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    Ok(config)
}

fn expected(config: &RunConfig, verb: &str, check: Option<&str>) -> Result<(), String> {
    let found = match &config.run {
        Pipeline::Solve { .. } => "solve",
        Pipeline::Simulate { .. } => "simulate",
        Pipeline::Verify { .. } => "verify",
        Pipeline::Shake { .. } => "shake",
        Pipeline::Rates { .. } => "rates",
    };
    if found != verb {
        return Err(format!(
            "configuration describes a '{found}' run, not '{verb}'"
        ));
    }
    if let (Some(want), Pipeline::Verify { check: spec }) = (check, &config.run) {
        if spec.name() != want {
            return Err(format!(
                "configuration holds check '{}', not '{want}'",
                spec.name()
            ));
        }
    }
    Ok(())
}

fn report(manifest: &Manifest) {
    for v in &manifest.verdicts {
        println!(
            "{} {} {}: {:.6e} vs {:.6e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.instance,
            v.check,
            v.statistic,
            v.threshold
        );
    }
    if let Some(e) = &manifest.estimate {
        println!("estimate {:.6} ± {:.6} ({} paths)", e.mean, e.se, e.n);
    }
    for path in &manifest.outputs {
        println!("wrote {}", path.display());
    }
}

fn execute(cli: Cli) -> Result<bool, String> {
    let (args, verb, check) = match &cli.command {
        Command::Gallery { action } => {
            match action {
                GalleryAction::List => {
                    for name in gallery::names() {
                        let e = gallery::describe(name).map_err(|e| e.to_string())?;
                        println!("{name:<24} {}", e.summary);
                    }
                }
                GalleryAction::Describe { name } => {
                    let e = gallery::describe(name).map_err(|e| e.to_string())?;
                    let text = serde_json::to_string_pretty(e).map_err(|e| e.to_string())?;
                    println!("{text}");
                }
            }
            return Ok(true);
        }
        Command::Solve(a) => (a, "solve", None),
        Command::Simulate(a) => (a, "simulate", None),
        Command::Verify { check, args } => (args, "verify", Some(check.as_str())),
        Command::Shake(a) => (a, "shake", None),
        Command::Rates(a) => (a, "rates", None),
    };
    let config = load(args)?;
    expected(&config, verb, check)?;
    let manifest = run(&config).map_err(|e| e.to_string())?;
    report(&manifest);
    Ok(manifest.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
