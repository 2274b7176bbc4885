//! Regularization-weight sweep: runs a scenario over a logarithmic
//! (lambda1, lambda2) grid and reports the pair minimizing final NRMSE.
//! The shipped scenario defaults in `configs/` were frozen from this sweep.
//!
//! Usage: cargo run --release --example lambda_sweep -- [denoise|recon|combine] [max_iter]

use std::path::PathBuf;

use palmnut::experiments::{cmd_combine, cmd_denoise, cmd_recon, ExperimentConfig, Scenario};

const GRID: [f64; 9] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0];

fn main() -> palmnut::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let scenario: Scenario = args.get(1).map(String::as_str).unwrap_or("denoise").parse()?;
    let max_iter: usize = args
        .get(2)
        .map(|s| s.parse().expect("max_iter must be an integer"))
        .unwrap_or(200);

    let tmp = std::env::temp_dir().join("palmnut_lambda_sweep");
    let mut best = (f64::INFINITY, 0.0, 0.0);
    println!("sweeping {scenario} over a {0}x{0} log grid, {max_iter} iterations each", GRID.len());
    println!("{:>10} {:>10} {:>12} {:>12}", "lambda1", "lambda2", "final nrmse", "objective");
    for &l1 in &GRID {
        for &l2 in &GRID {
            let mut cfg = ExperimentConfig::defaults(scenario);
            cfg.lambda1 = l1;
            cfg.lambda2 = l2;
            cfg.max_iter = max_iter;
            cfg.out = PathBuf::from(&tmp);
            let outcome = match scenario {
                Scenario::Denoise => cmd_denoise(&cfg)?,
                Scenario::Recon => cmd_recon(&cfg)?,
                Scenario::Combine => cmd_combine(&cfg)?,
                Scenario::Ablation => {
                    eprintln!("sweep the denoise scenario for ablation defaults");
                    return Ok(());
                }
            };
            println!(
                "{:>10.1e} {:>10.1e} {:>12.5} {:>12.4e}",
                l1, l2, outcome.final_nrmse, outcome.final_objective
            );
            if outcome.final_nrmse < best.0 {
                best = (outcome.final_nrmse, l1, l2);
            }
        }
    }
    println!(
        "\nbest: lambda1 = {:.1e}, lambda2 = {:.1e} (final NRMSE {:.5})",
        best.1, best.2, best.0
    );
    Ok(())
}
