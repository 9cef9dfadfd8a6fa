use clap::{Args, Parser, Subcommand};
use flexkrylov::harness::{cmd_bound, cmd_sharp, cmd_solve, cmd_stagnate, cmd_tables, ExperimentConfig, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Flexible GMRES experiments: worst-case systems, stagnation, PDE solves
/// and bound tables.
#[derive(Parser, Debug)]
#[command(name = "flexkrylov", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Worst-case system on which FGMRES attains its bound (mu <= 1/2).
    Sharp(ExpArgs),
    /// Worst-case system for 1/2 < mu < 1; the residual stalls.
    Stagnate(ExpArgs),
    /// FGMRES with inner GMRES to relative residual mu on a PDE or Matrix Market matrix.
    Solve(SolveArgs),
    /// Asymptotic rates and stalling indices.
    Tables {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound values for one mu.
    Bound(BoundArgs),
}

#[derive(Args, Debug)]
struct ExpArgs {
    /// Inner contraction factor.
    #[arg(long)]
    mu: Option<f64>,
    /// Outer iterations m.
    #[arg(long)]
    outer: Option<usize>,
    /// Inner iterations k (solve: iteration cap).
    #[arg(long)]
    inner: Option<usize>,
    /// System dimension N (solve: grid size of the generated matrix).
    #[arg(long)]
    n: Option<usize>,
    /// Trace file [default: <command>_results.dat].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// Matrix Market file; the convection-diffusion matrix is used if absent.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    peclet: Option<f64>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 20)]
    outer: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure(mut cfg: ExperimentConfig, a: ExpArgs) -> ExperimentConfig {
    cfg.mu = a.mu.unwrap_or(cfg.mu);
    cfg.outer = a.outer.unwrap_or(cfg.outer);
    cfg.inner = a.inner.unwrap_or(cfg.inner);
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.out = Some(a.out.unwrap_or_else(|| PathBuf::from(format!("{}_results.dat", cfg.name))));
    cfg
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let report = match cli.cmd {
        Cmd::Sharp(a) => cmd_sharp(&configure(ExperimentConfig::sharp(), a))?,
        Cmd::Stagnate(a) => cmd_stagnate(&configure(ExperimentConfig::stagnate(), a))?,
        Cmd::Solve(a) => {
            let mut cfg = configure(ExperimentConfig::solve(), a.exp);
            cfg.matrix = a.matrix;
            cfg.peclet = a.peclet.unwrap_or(cfg.peclet);
            cmd_solve(&cfg)?
        }
        Cmd::Tables { out } => {
            let text = cmd_tables();
            print!("{text}");
            if let Some(p) = out {
                std::fs::write(&p, text).map_err(|e| HarnessError::Io { path: p, source: e })?;
            }
            return Ok(());
        }
        Cmd::Bound(a) => {
            let cfg = ExperimentConfig { mu: a.mu, outer: a.outer, out: a.out, ..ExperimentConfig::bound() };
            print!("{}", cmd_bound(&cfg)?);
            return Ok(());
        }
    };
    for line in &report.summary {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
