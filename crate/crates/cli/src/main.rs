use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use blicket_cli::{
    analyze, expand_glob, make_prior, parse_space, render_report, simulate, simulate_report, solve,
    Export, Model, PriorName,
};
use blicket_service::{server, ServiceConfig, SessionManager, DATA_DIR_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blicket", about = "Blicket-detector exploration toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct PolicyArgs {
    /// `full` or a comma-separated list of structures, e.g. `AB-con,AB-dis`.
    #[arg(long, default_value = "full")]
    space: String,
    #[arg(long, default_value_t = 3)]
    objects: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    prior: PriorName,
    #[arg(long, value_enum, default_value = "min-step")]
    model: Model,
}

#[derive(Subcommand)]
enum Command {
    /// Print a policy tree and its expected number of tests.
    Solve {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, value_enum, default_value = "text")]
        export: Export,
    },
    /// Run a policy against the detector for each hidden structure.
    Simulate {
        #[command(flatten)]
        policy: PolicyArgs,
        /// A structure such as `AB-con`, or `all`.
        #[arg(long, default_value = "all")]
        truth: String,
        /// Accepted for symmetry with stochastic simulators; the detector is
        /// deterministic so every trial is the same.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        json: bool,
    },
    /// Validate trace files and report the behavioral statistics.
    Analyze {
        #[arg(long)]
        traces: String,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "uniform,experimental")]
        prior: Vec<PriorName>,
        #[arg(long)]
        json: bool,
    },
    /// Host live sessions over a websocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 600)]
        session_cap_s: u64,
        #[arg(long, default_value_t = 120)]
        resume_timeout_s: u64,
        #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
        data_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { policy, export } => {
            let prior = make_prior(parse_space(&policy.space, policy.objects)?, policy.prior)?;
            print!("{}", solve(&prior, policy.model, export)?);
        }
        Command::Simulate {
            policy,
            truth,
            trials: _,
            json,
        } => {
            let prior = make_prior(parse_space(&policy.space, policy.objects)?, policy.prior)?;
            let truth = if truth == "all" { None } else { Some(truth.parse()?) };
            let runs = simulate(&prior, policy.model, truth)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&runs)?);
            } else {
                print!("{}", simulate_report(&prior, policy.model, &runs));
            }
        }
        Command::Analyze { traces, prior, json } => {
            let report = analyze(&expand_glob(&traces)?, &prior)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", render_report(&report));
            }
        }
        Command::Serve {
            port,
            seed,
            session_cap_s,
            resume_timeout_s,
            data_dir,
        } => {
            let config = ServiceConfig {
                data_dir,
                session_cap_ms: session_cap_s * 1000,
                resume_timeout_ms: resume_timeout_s * 1000,
                seed: seed.unwrap_or_else(server::now_ms),
                ..ServiceConfig::default()
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                tracing::info!("listening on {}", listener.local_addr()?);
                server::serve(listener, SessionManager::new(config)?).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
