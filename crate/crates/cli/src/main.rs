use adaprep_cli::{build_config, io, parse_override, run_experiment, CliError, Experiment, Format};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "adaprep", version, about = "Adaptive dissipative state preparation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its table.
    Run {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON config file; flags override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or json (default: from the output extension, else csv)
        #[arg(long)]
        format: Option<String>,
        /// key=value override of any config field (repeatable)
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the available experiments.
    List,
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<8} {}", e.name(), e.summary());
            }
            Ok(())
        }
        Command::Run { experiment, seed, config, out, format, set } => {
            let base = config.map(std::fs::read_to_string).transpose()?;
            let mut overrides = Vec::new();
            if let Some(e) = experiment {
                overrides.push(("experiment".to_string(), serde_json::Value::String(Experiment::parse(&e)?.name().into())));
            }
            if let Some(s) = seed {
                overrides.push(("seed".to_string(), serde_json::json!(s)));
            }
            for s in &set {
                overrides.push(parse_override(s)?);
            }
            let cfg = build_config(base.as_deref(), &overrides)?;
            let out = out.or_else(|| cfg.out.clone().map(PathBuf::from));
            let fmt = match format.as_deref() {
                Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => return Err(CliError::Config(format!("unknown format '{other}'"))),
                None => cfg.format.unwrap_or_else(|| match out.as_ref().and_then(|p| p.extension()) {
                    Some(x) if x == "json" => Format::Json,
                    _ => Format::Csv,
                }),
            };
            let table = run_experiment(&cfg)?;
            match out {
                Some(p) => {
                    io::emit(&table, &p, fmt)?;
                    eprintln!("wrote {} rows to {}", table.n_rows(), p.display());
                }
                None => {
                    let dir = std::env::temp_dir().join(format!("adaprep-{}", std::process::id()));
                    std::fs::create_dir_all(&dir)?;
                    let p = dir.join("out");
                    io::emit(&table, &p, fmt)?;
                    print!("{}", std::fs::read_to_string(&p)?);
                    std::fs::remove_dir_all(&dir)?;
                }
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("adaprep: {e}");
        std::process::exit(e.exit_code());
    }
}
