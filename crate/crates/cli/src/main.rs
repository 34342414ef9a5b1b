use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracell::mesh::Mesh;
use fracell_cli::{mesh_info, run, ExperimentConfig, RunError, EXIT_IO, EXIT_NUMERICAL, EXIT_PARSE};

#[derive(Parser)]
#[command(
    name = "fracell",
    version,
    about = "Fractional elliptic problems by pseudo-time stepping with goal-oriented adaptivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Threads for the sparse factorizations. One is reproducible bit for bit.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Echoed with the results. The pipelines use no random numbers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse a config file and print the resolved values and warnings.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Describe a mesh file.
    MeshInfo { mesh: PathBuf },
}

fn load(path: &Path) -> Result<(ExperimentConfig, Vec<String>), ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_IO as u8)
    })?;
    ExperimentConfig::parse(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_PARSE as u8)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok((cfg, warnings)) => {
                print!("{cfg}");
                for w in &warnings {
                    println!("warning: {w}");
                }
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Solve { config, out, threads, seed } => {
            let (cfg, warnings) = match load(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            fracell::linalg::set_threads(threads);
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("fracell-out"));
            let result = run(&cfg, &out, |r, _| {
                println!(
                    "step {:>3}  G = {:.8e}  M_h = {:>8}  cells = {:>8}  estimate = {:+.3e}",
                    r.step, r.goal, r.dofs, r.cells, r.estimate
                );
            });
            match result {
                Ok(s) => {
                    if !s.converged {
                        eprintln!("warning: adaptation stopped after {} steps without reaching eta", s.adapt_steps);
                    }
                    if let Some(g) = s.final_goal {
                        println!("goal at t = 1: {g:.8e}");
                    }
                    if let Some(e) = s.oracle_error {
                        println!("oracle relative error: {e:.3e}");
                    }
                    if let Some(n) = &s.oracle_note {
                        println!("{n}");
                    }
                    println!("seed {seed}; results in {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(RunError::Numerical(e)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_NUMERICAL as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_IO as u8)
                }
            }
        }
        Command::MeshInfo { mesh } => {
            let parsed = File::open(&mesh)
                .map_err(|e| (EXIT_IO, e.to_string()))
                .and_then(|f| Mesh::<f64>::read_text(BufReader::new(f)).map_err(|e| (EXIT_PARSE, e.to_string())));
            match parsed {
                Ok(m) => {
                    print!("{}", mesh_info(&m));
                    ExitCode::SUCCESS
                }
                Err((code, msg)) => {
                    eprintln!("error: {}: {msg}", mesh.display());
                    ExitCode::from(code as u8)
                }
            }
        }
    }
}
