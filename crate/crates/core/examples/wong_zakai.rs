//! A scaled-down Wong–Zakai convergence study with Markov switching, saved as
//! a self-describing record, followed by the Markov-inequality rate transfer.

use roughswitch::experiments::{markov_rate_transfer, run_wong_zakai, ConvergenceConfig, WongZakaiRaw};
use roughswitch::switching::{Generator, JumpSource};

fn main() -> roughswitch::Result<()> {
    let cfg = ConvergenceConfig {
        n_ref: 4096,
        metric_steps: 1024,
        lambdas: vec![8, 16, 32, 64, 128],
        trials: 100,
        jumps: JumpSource::Ctmc { generator: Generator::two_state(2.0)?, initial: 0 },
        ..ConvergenceConfig::default()
    };
    let (report, record) = run_wong_zakai(&cfg, 0)?;
    println!("median sup errors {:?}", report.solution.median);
    println!(
        "γ̂ solution {:.3}, driver {:.3}, slope check {}, mean jumps {:.2}",
        report.solution.gamma_hat, report.driver.gamma_hat, report.slope_check, report.mean_jumps
    );

    let path = std::env::temp_dir().join("wong_zakai_record.json");
    record.persist(&path)?;
    println!("record {} (config {})", path.display(), &record.config_hash[..16]);

    let raw: WongZakaiRaw = record.raw_as()?;
    let samples: Vec<Vec<f64>> =
        (0..raw.lambdas.len()).map(|k| raw.trials.iter().map(|t| t.sup_error[k]).collect()).collect();
    let transfer = markov_rate_transfer(&raw.lambdas, &samples, &[1.0, 2.0, 4.0], 0.25, 2.0, 1.0)?;
    println!("η̂ = {:.3}: {}", transfer.eta_hat, transfer.verdict());
    Ok(())
}
