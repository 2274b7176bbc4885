//! Experiment CLI: one scenario per invocation, configured by long-form
//! flags and/or a TOML config file (flags override the file, the file
//! overrides scenario defaults).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use palmnut::experiments::{
    cmd_ablation, cmd_combine, cmd_denoise, cmd_recon, read_config_file, resolve_config,
    PartialConfig, Scenario, SolverKind,
};

#[derive(Parser, Debug)]
#[command(
    name = "palmnut",
    about = "Magnitude/phase-regularized reconstruction experiments \
             (PALM, PALM-UT, PALMNUT, AM-NCG)",
    version
)]
struct Cli {
    /// TOML config file supplying the same keys as the flags below.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Scenario: denoise | recon | combine | ablation.
    #[arg(long)]
    scenario: Option<String>,

    /// Solver: am | palm | palm_ut | palmnut (ignored by ablation).
    #[arg(long)]
    solver: Option<String>,

    /// Magnitude regularization weight (0 disables).
    #[arg(long)]
    lambda1: Option<f64>,

    /// Phase regularization weight (0 disables).
    #[arg(long)]
    lambda2: Option<f64>,

    /// Huber breakpoint.
    #[arg(long)]
    xi: Option<f64>,

    /// Image width (power of two >= 8); combine runs at size x 2*size.
    #[arg(long)]
    size: Option<usize>,

    /// k-space acceleration factor (recon).
    #[arg(long)]
    accel: Option<f64>,

    /// Per-component complex Gaussian noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,

    /// RNG seed for all randomized pieces.
    #[arg(long)]
    seed: Option<u64>,

    /// Outer iteration budget.
    #[arg(long)]
    max_iter: Option<usize>,

    /// Output directory for traces, vector files, and PGMs.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Coil count (recon).
    #[arg(long)]
    coils: Option<usize>,

    /// Fully sampled center fraction of k-space lines (recon).
    #[arg(long)]
    center_frac: Option<f64>,

    /// Wavelet decomposition levels (recon).
    #[arg(long)]
    levels: Option<usize>,

    /// AM inner iterations per block.
    #[arg(long)]
    inner_iter: Option<usize>,

    /// Repetition count J (combine).
    #[arg(long)]
    reps: Option<usize>,

    /// Record real per-iteration seconds in trace CSVs (breaks byte-identical
    /// reruns).
    #[arg(long)]
    wall_clock: bool,
}

fn run(cli: Cli) -> palmnut::Result<()> {
    let flags = PartialConfig {
        scenario: cli
            .scenario
            .as_deref()
            .map(str::parse::<Scenario>)
            .transpose()?,
        solver: cli
            .solver
            .as_deref()
            .map(str::parse::<SolverKind>)
            .transpose()?,
        lambda1: cli.lambda1,
        lambda2: cli.lambda2,
        xi: cli.xi,
        size: cli.size,
        accel: cli.accel,
        sigma: cli.sigma,
        seed: cli.seed,
        max_iter: cli.max_iter,
        out: cli.out,
        coils: cli.coils,
        center_frac: cli.center_frac,
        levels: cli.levels,
        inner_iter: cli.inner_iter,
        reps: cli.reps,
        wall_clock: if cli.wall_clock { Some(true) } else { None },
    };
    let file = cli.config.as_deref().map(read_config_file).transpose()?;
    let cfg = resolve_config(file.as_ref(), &flags)?;

    match cfg.scenario {
        Scenario::Denoise | Scenario::Recon | Scenario::Combine => {
            let outcome = match cfg.scenario {
                Scenario::Denoise => cmd_denoise(&cfg)?,
                Scenario::Recon => cmd_recon(&cfg)?,
                _ => cmd_combine(&cfg)?,
            };
            println!(
                "{} [{}] finished after {} iterations",
                outcome.scenario, outcome.solver, outcome.iterations
            );
            println!("  objective   {:.6e}", outcome.final_objective);
            println!(
                "  nrmse       {:.6} (input {:.6})",
                outcome.final_nrmse, outcome.input_nrmse
            );
            println!("  artifacts   {}", outcome.out_dir.display());
        }
        Scenario::Ablation => {
            let outcome = cmd_ablation(&cfg)?;
            println!(
                "ablation finished; best objective {:.6e}",
                outcome.best_objective
            );
            println!(
                "  {:<14} {:>16} {:>22}",
                "variant", "final objective", "iters to within 1%"
            );
            for v in &outcome.variants {
                let iters = v
                    .iters_to_one_percent
                    .map(|k| k.to_string())
                    .unwrap_or_else(|| "never".to_string());
                println!("  {:<14} {:>16.6e} {:>22}", v.name, v.final_objective, iters);
            }
            println!("  combined CSV {}", outcome.csv_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
