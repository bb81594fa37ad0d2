use clap::{Parser, Subcommand, ValueEnum};
use hcurl_schwarz::bench::{
    self, load_config, preset, OutputFormat, RunOptions, PRESET_NAMES,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hcurl-schwarz",
    about = "Positive Maxwell beam problems with two-level Schwarz preconditioners",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML file (or `preset:<name>`) and emit tables
    Run {
        /// Path to a scenario TOML, or `preset:tab1` .. `preset:tab_mu_holes`
        config: String,
        /// Output directory for the result tables
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Table format
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Check the spectral bound on every GenEO-enriched row (dense path)
        #[arg(long)]
        verify_bounds: bool,
        /// Suppress wall-clock fields so repeated runs emit identical bytes
        #[arg(long)]
        deterministic: bool,
        /// Size of the worker thread pool (defaults to the core count)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the built-in scenario presets, or print one as TOML
    Presets {
        /// Print this preset's TOML to stdout
        name: Option<String>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                hcurl_schwarz::Error::Config(_) | hcurl_schwarz::Error::Geometry(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run() -> hcurl_schwarz::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets { name: None } => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets { name: Some(name) } => {
            let config = preset(&name)?;
            let text = toml::to_string_pretty(&config)
                .map_err(|e| hcurl_schwarz::Error::Config(e.to_string()))?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out, format, verify_bounds, deterministic, threads } => {
            if let Some(k) = threads {
                let k = if deterministic { 1 } else { k };
                rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global()
                    .map_err(|e| hcurl_schwarz::Error::Config(e.to_string()))?;
            } else if deterministic {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(1)
                    .build_global()
                    .map_err(|e| hcurl_schwarz::Error::Config(e.to_string()))?;
            }
            let config = load_config(&config)?;
            let opts = RunOptions { verify_bounds, deterministic };
            let outcome = bench::run_scenario_with(&config, &opts)?;
            let fmt = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Text => OutputFormat::Text,
            };
            let paths = bench::write_outputs(&outcome.rows, &out, fmt)?;
            for p in &paths {
                println!("wrote {}", p.display());
            }
            let mut violation = false;
            for check in &outcome.bounds {
                let status = if check.ok { "ok" } else { "VIOLATED" };
                println!(
                    "bound [{} {} N={} gamma={:.0e} value={:.0e}]: kappa {:.3} <= (1 + {} * {}) * {} = {:.1} ... {status}",
                    check.scenario,
                    check.method,
                    check.n_subdomains,
                    check.gamma,
                    check.value,
                    check.kappa,
                    check.k1,
                    check.tau,
                    check.k0,
                    check.bound,
                );
                violation |= !check.ok;
            }
            if violation {
                return Ok(ExitCode::from(3));
            }
            if outcome.rows.iter().any(|r| !r.converged) {
                eprintln!("at least one solve did not reach the target tolerance");
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
