use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use roughswitch::experiments::{
    markov_rate_transfer, quantile, read_errors_csv, run_wong_zakai, tail_experiment, write_errors_csv,
    ConvergenceConfig, FitOutcome, TailConfig, TailRaw, WongZakaiRaw,
};
use roughswitch::gaussian::{sample, GaussianSpec, RngSeed};
use roughswitch::greedy::{greedy_sequence, survival_counts};
use roughswitch::switching::{simulate_ctmc, solve_switching_rde, FieldPreset, Generator, JumpSource, JumpTrajectory};
use roughswitch::variation::{p_variation_enumerate, path_p_variation, pvar_control, second_level_p_variation};
use roughswitch::{lift_piecewise_linear, Error, IntervalIdx, Level2RoughPath, Result, SamplePath};
use serde_json::json;

#[derive(Parser)]
#[command(name = "roughswitch", version, about = "Rough paths with regime switching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bm,
    Fbm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Rho,
    Sup,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Brownian or fractional Brownian motion to CSV.
    Sample {
        #[arg(long, value_enum, default_value = "bm")]
        kind: Kind,
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// p-variation of a sampled path (level 1) or of its lift's second level (level 2).
    Pvar {
        input: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        level: u8,
        /// Grids with at most this many points are cross-checked by enumeration.
        #[arg(long, default_value_t = 12)]
        exact_max: usize,
    },
    /// Greedy sequence of the p-variation control of a rough path JSON.
    Greedy {
        input: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        alpha: f64,
        /// Grid index interval `lo:hi`; the whole grid by default.
        #[arg(long)]
        interval: Option<String>,
    },
    /// Monte Carlo tails of N_α for Brownian rough paths.
    Tails {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.5)]
        p: f64,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        mesh: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        lambdas: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        survival_csv: Option<PathBuf>,
    },
    /// Solve a regime-switching RDE and write the solution CSV.
    Solve {
        /// Builtin field family: constant, linear, rotation, bounded (optionally `name:v1,v2`).
        #[arg(long)]
        fields: String,
        /// `bm` or a SamplePath CSV.
        #[arg(long, default_value = "bm")]
        driver: String,
        /// `none`, `ctmc`, or a JSON file with a jump source or trajectory.
        #[arg(long, default_value = "none")]
        jumps: String,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        mesh: f64,
        #[arg(long, value_delimiter = ',')]
        y0: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        /// Exit rate of the two-state chain used by `--jumps ctmc`.
        #[arg(long, default_value_t = 2.0)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wong–Zakai convergence experiment from a JSON config.
    Wz {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Moment decay and exceedance check from an errors CSV written by `wz`.
    Rate {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value = "rho")]
        metric: Metric,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        q: Vec<f64>,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Threshold constant; defaults to q90 at the first λ times λ_0^γ.
        #[arg(long)]
        k: Option<f64>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(path: &Option<PathBuf>, value: &impl serde::Serialize) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn steps_for(mesh: f64, horizon: f64) -> Result<usize> {
    let n = (horizon / mesh).round();
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("mesh {mesh} invalid for horizon {horizon}")));
    }
    Ok(n as usize)
}

fn parse_interval(s: &str) -> Result<IntervalIdx> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::InvalidParameter(format!("interval `{s}` is not lo:hi")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad index `{v}`")));
    IntervalIdx::new(parse(a)?, parse(b)?)
}

fn read_jumps(spec: &str, horizon: f64, rate: f64, seed: u64) -> Result<JumpTrajectory> {
    match spec {
        "none" => JumpTrajectory::constant(0, horizon),
        "ctmc" => simulate_ctmc(&Generator::two_state(rate)?, 0, horizon, RngSeed::new(seed, 1)),
        file => {
            let text = std::fs::read_to_string(file)?;
            if let Ok(t) = serde_json::from_str::<JumpTrajectory>(&text) {
                return Ok(t);
            }
            let source: JumpSource = serde_json::from_str(&text)?;
            source.draw(horizon, RngSeed::new(seed, 1))
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sample { kind, hurst, d, n, horizon, seed, stream, out } => {
            let spec = match kind {
                Kind::Bm => GaussianSpec::brownian(d, horizon)?,
                Kind::Fbm => GaussianSpec::fbm(hurst, d, horizon)?,
            };
            sample(&spec, n, RngSeed::new(seed, stream))?.write_csv(output(&out)?)?;
            Ok(true)
        }
        Command::Pvar { input, p, level, exact_max } => {
            let path = SamplePath::read_csv(BufReader::new(File::open(&input)?))?;
            let iv = path.full_interval();
            let (res, oracle) = match level {
                1 => {
                    let res = path_p_variation(&path, p, iv)?;
                    let oracle = (path.len() <= exact_max)
                        .then(|| {
                            p_variation_enumerate(
                                |i, j| {
                                    let inc = path.increment(IntervalIdx { lo: i, hi: j }).unwrap_or_default();
                                    inc.iter().map(|v| v * v).sum::<f64>().sqrt()
                                },
                                p,
                                iv,
                                exact_max,
                            )
                        })
                        .transpose()?;
                    (res, oracle)
                }
                2 => {
                    let rp = lift_piecewise_linear(&path)?;
                    let res = second_level_p_variation(&rp, p, iv)?;
                    let oracle = (path.len() <= exact_max)
                        .then(|| {
                            p_variation_enumerate(
                                |i, j| rp.eval_second(IntervalIdx { lo: i, hi: j }).map_or(f64::NAN, |t| t.norm()),
                                p / 2.0,
                                iv,
                                exact_max,
                            )
                        })
                        .transpose()?;
                    (res, oracle)
                }
                other => return Err(Error::InvalidParameter(format!("level must be 1 or 2, got {other}"))),
            };
            let agrees = oracle.as_ref().map(|o| (o.value - res.value).abs() <= 1e-12 * o.value.max(1.0));
            write_json(
                &None,
                &json!({
                    "value": res.value,
                    "p": res.p,
                    "optimal_partition": res.optimal_partition,
                    "enumeration_agrees": agrees,
                }),
            )?;
            Ok(agrees.unwrap_or(true))
        }
        Command::Greedy { input, p, alpha, interval } => {
            let rp: Level2RoughPath = serde_json::from_reader(BufReader::new(File::open(&input)?))?;
            let iv = match interval {
                Some(s) => parse_interval(&s)?,
                None => rp.base().full_interval(),
            };
            let res = greedy_sequence(&pvar_control(&rp, p)?, alpha, iv)?;
            write_json(&None, &res)?;
            Ok(true)
        }
        Command::Tails { trials, alpha, p, mesh, seed, lambdas, workers, out, survival_csv } => {
            let cfg = TailConfig { trials, alpha, p, steps: steps_for(mesh, 1.0)?, seed, lambdas, ..Default::default() };
            let (report, record) = tail_experiment(&cfg, workers)?;
            if let Some(path) = survival_csv {
                let raw: TailRaw = record.raw_as()?;
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["u", "exceedances", "survival"])?;
                for (u, c) in survival_counts(&raw.n_x) {
                    w.write_record([u.to_string(), c.to_string(), format!("{:.16e}", c as f64 / trials as f64)])?;
                }
                w.flush()?;
            }
            write_json(&out, &record)?;
            let ok = matches!(&report.fit_x, FitOutcome::Fit(f) if f.r_squared >= 0.9 && f.slope < 0.0);
            eprintln!("tail fit: {}", if ok { "pass" } else { "FAIL" });
            Ok(ok)
        }
        Command::Solve { fields, driver, jumps, mesh, y0, d, horizon, rate, seed, out } => {
            let path = if driver == "bm" {
                sample(&GaussianSpec::brownian(d, horizon)?, steps_for(mesh, horizon)?, RngSeed::new(seed, 0))?
            } else {
                SamplePath::read_csv(BufReader::new(File::open(&driver)?))?
            };
            let family = FieldPreset::parse(&fields)?.build(path.dim())?;
            let y0 = if y0.is_empty() { vec![1.0; family.state_dim()] } else { y0 };
            let jumps = read_jumps(&jumps, path.horizon(), rate, seed)?;
            let sol = solve_switching_rde(&family, &lift_piecewise_linear(&path)?, &jumps, &y0)?;
            let mut w = csv::Writer::from_writer(output(&out)?);
            let mut header = vec!["t".to_string()];
            header.extend((1..=sol.path.dim()).map(|k| format!("y{k}")));
            header.push("segment".into());
            w.write_record(&header)?;
            for (k, row) in sol.path.rows().enumerate() {
                let mut rec = vec![format!("{:.16e}", sol.path.times()[k])];
                rec.extend(row.iter().map(|v| format!("{v:.16e}")));
                rec.push(sol.segment_index[k].to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Wz { config, out, csv, workers } => {
            let cfg: ConvergenceConfig = match config {
                Some(p) => serde_json::from_reader(BufReader::new(File::open(p)?))?,
                None => ConvergenceConfig::default(),
            };
            let (report, record) = run_wong_zakai(&cfg, workers)?;
            if let Some(path) = csv {
                let raw: WongZakaiRaw = record.raw_as()?;
                write_errors_csv(&raw, BufWriter::new(File::create(path)?))?;
            }
            write_json(&out, &record)?;
            let ok = report.slope_check && report.excluded == 0;
            eprintln!(
                "solution rate {:.3}, driver rate {:.3}, slope check {}",
                report.solution.gamma_hat,
                report.driver.gamma_hat,
                if ok { "pass" } else { "FAIL" }
            );
            Ok(ok)
        }
        Command::Rate { csv, metric, q, gamma, r, k } => {
            let rows = read_errors_csv(BufReader::new(File::open(csv)?))?;
            let mut lambdas: Vec<usize> = rows.iter().map(|r| r.lambda).collect();
            lambdas.sort_unstable();
            lambdas.dedup();
            let samples: Vec<Vec<f64>> = lambdas
                .iter()
                .map(|&l| {
                    rows.iter()
                        .filter(|r| r.lambda == l)
                        .map(|r| match metric {
                            Metric::Rho => r.rho_metric,
                            Metric::Sup => r.sup_error,
                        })
                        .collect()
                })
                .collect();
            let first = lambdas.first().ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
            let k = k.unwrap_or_else(|| quantile(&samples[0], 0.9) * (*first as f64).powf(gamma));
            let report = markov_rate_transfer(&lambdas, &samples, &q, gamma, r, k)?;
            write_json(&None, &json!({ "verdict": report.verdict(), "report": report }))?;
            Ok(report.implied)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
