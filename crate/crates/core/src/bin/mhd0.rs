use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhd0::io::{run, RunConfig};
use mhd0::Error;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    name = "mhd0",
    version,
    about = "Pseudo-spectral compressible MHD simulator and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParams(_) | Error::InvalidGrid(_) => EXIT_CONFIG,
        e if e.is_blow_up() => EXIT_BLOW_UP,
        _ => EXIT_FAILURE,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("MHD0_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("MHD0_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let Command::Run {
        config,
        output,
        seed,
        t_end,
        grid,
    } = cli.command;

    let cfg = RunConfig::from_file(&config).and_then(|mut cfg| {
        if let Some(o) = output {
            cfg.output = o;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(t) = t_end {
            cfg.t_end = t;
        }
        if let Some(n) = grid {
            cfg.grid = n;
        }
        cfg.validate()?;
        Ok(cfg)
    });
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };

    match run(&cfg) {
        Ok(summary) => {
            println!("{}", summary.to_json());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
