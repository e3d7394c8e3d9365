use clap::Parser;
use extremal_lab::{resolve_out, run, CliError, Command, RunConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Numerical experiments on overdetermined elliptic problems.
#[derive(Parser, Debug)]
#[command(name = "extremal-lab", version)]
struct Args {
    /// solve, eigen, check, flow, branch or report
    command: String,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; EXTREMAL_LAB_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the data-parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let command: Command = args.command.parse().map_err(CliError::ConfigInvalid)?;
    let config = RunConfig::load(&args.config)?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::ConfigInvalid("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let dir = args.config.parent().unwrap_or(Path::new("."));
    let env = std::env::var("EXTREMAL_LAB_OUT").ok();
    let out = resolve_out(env.as_deref(), args.out.as_deref(), &config, dir, command);
    let record = run(&config, command, dir, &out)?;
    match &record.error {
        Some(e) => eprintln!("{} failed: {e}", command.name()),
        None => println!(
            "{} ok in {:.2} s, {} files in {}",
            command.name(),
            record.wall_time_s,
            record.files.len(),
            out.display()
        ),
    }
    Ok(record.exit_code())
}
