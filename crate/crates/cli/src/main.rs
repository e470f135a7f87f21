use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use etpump_cli::config::{load_config, to_toml};
use etpump_cli::output::fmt_sig;
use etpump_cli::presets::{self, PRESETS};
use etpump_cli::{run_scenario, CliError, Overrides, ScenarioConfig};

#[derive(Parser)]
#[command(name = "etpump", version, about = "Dissipative entanglement pumping scenarios")]
struct Cli {
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset id or a TOML config file.
    Run {
        target: String,
        #[arg(long, env = "ETPUMP_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Fail when a checkpoint misses its expected band.
        #[arg(long)]
        strict: bool,
        /// Override the damped-mode Fock cutoff.
        #[arg(long)]
        ncut: Option<usize>,
        /// Override the integrator relative tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the built-in presets.
    List,
    /// Check a config file and echo its parameters.
    Validate { config: PathBuf },
}

fn resolve(target: &str) -> Result<(ScenarioConfig, bool), CliError> {
    if presets::find(target).is_some() {
        return Ok((presets::preset_config(target)?, true));
    }
    let path = Path::new(target);
    if path.exists() {
        return Ok((load_config(path)?, false));
    }
    Err(CliError::UnknownPreset(target.into()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn real_main(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::List => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&PRESETS).expect("catalog serializes"));
            } else {
                for p in &PRESETS {
                    println!("{:<6} {:<20} {}", p.id, p.anchor, p.summary);
                }
            }
            Ok(true)
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            if cli.json {
                let echo = serde_json::json!({ "id": cfg.id, "kind": cfg.kind.as_str(), "echo": cfg.echo() });
                println!("{}", serde_json::to_string_pretty(&echo).expect("echo serializes"));
            } else {
                println!("{}: valid {} scenario", cfg.id, cfg.kind.as_str());
                for line in cfg.echo() {
                    println!("  {line}");
                }
            }
            Ok(true)
        }
        Command::Run { target, out, seed, strict, ncut, tol } => {
            let (mut cfg, _) = resolve(&target)?;
            Overrides { seed, n_c: ncut, rtol: tol }.apply(&mut cfg);
            cfg.validate()?;
            let dir = cfg.output_dir().unwrap_or(out);
            let mut sink = |f: &etpump_cli::OutputFile| write_file(&dir, &f.name, &f.contents);
            let report = run_scenario(&cfg, &mut sink)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_file(&dir, &format!("{}.json", cfg.output_stem()), &json)?;
            write_file(&dir, &format!("{}.toml", cfg.output_stem()), &to_toml(&cfg))?;
            if cli.json {
                println!("{json}");
            } else {
                for m in &report.metrics {
                    let band = m.expected.as_ref().map(|b| format!(" expected [{}, {}]", b.lo, b.hi)).unwrap_or_default();
                    let mark = if m.expected.is_none() { "" } else if m.passed { " ok" } else { " MISS" };
                    println!("{:<32} {}{band}{mark}", m.name, fmt_sig(m.value));
                }
                for w in &report.warnings {
                    println!("warning: {w}");
                }
                let q = &report.quality;
                println!(
                    "quality: trace {} positivity {} ({} steps) -> {}",
                    q.max_trace_error.map_or("-".into(), |x| format!("{x:.1e}")),
                    q.min_eigenvalue.map_or("-".into(), |x| format!("{x:.1e}")),
                    q.steps,
                    if q.passed() { "ok" } else { "FAILED" }
                );
                println!("outputs in {}", dir.display());
            }
            Ok(report.success(strict))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
