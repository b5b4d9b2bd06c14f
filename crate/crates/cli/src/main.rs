use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pushtasep::experiment::{run_experiment, ExperimentConfig, Mode};
use pushtasep::profile::{ProfileSpec, SpeedProfile};
use pushtasep::Error;

#[derive(Parser)]
#[command(name = "pushtasep", version, about = "Inhomogeneous PushTASEP numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the rates come from. Without `--profile` or `--rates` the
/// homogeneous profile `ξ ≡ 1` is used.
#[derive(Args, Clone)]
struct Rates {
    /// TOML file with the profile pieces.
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Explicit comma-separated rates ξ_1,ξ_2,…
    #[arg(long, value_delimiter = ',', conflicts_with = "profile")]
    rates: Option<Vec<f64>>,
    /// Discretization scale L in ξ_x = profile(x / L).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Args, Clone)]
struct Output {
    /// Directory for CSV artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Override the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory of the config.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Monte Carlo heights along a down-right path.
    Simulate {
        /// Path point `t,N`; repeat for a path.
        #[arg(long = "point", value_parser = parse_pair, required = true)]
        points: Vec<(f64, usize)>,
        #[arg(long)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// Evolve the interlacing field and dump snapshots and projections.
    Field {
        /// Depth of the array.
        #[arg(long = "K")]
        depth: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate K_F and K at a pair of points.
    Kernel {
        /// First point `t,N,x`.
        #[arg(long, value_parser = parse_triple)]
        point: (f64, usize, i64),
        /// Second point `t,N,x`.
        #[arg(long, value_parser = parse_triple)]
        point2: (f64, usize, i64),
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// P(h(t, N) > y) by Fredholm determinant; all y when omitted.
    Tail {
        #[arg(long)]
        t: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<i64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// Joint P(h(t_i, N_i) > y_i for all i) along a down-right path.
    PathTail {
        /// Point `t,N,y`; repeat in path order.
        #[arg(long = "point", value_parser = parse_triple, required = true)]
        points: Vec<(f64, usize, i64)>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// Limit shape h, density, critical point and d on an η grid.
    Limitshape {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        eta_min: f64,
        #[arg(long)]
        eta_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// GUE Tracy–Widom distribution function at given points.
    Tw {
        #[arg(long = "r", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        r: Vec<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate the Tracy–Widom distribution on a uniform grid.
    TwTable {
        #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[command(flatten)]
        output: Output,
    },
    /// KS distance of rescaled heights to Tracy–Widom over several scales.
    Converge {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 4.0)]
        eta: f64,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
        scales: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// Central-difference residual of the hydrodynamic equation.
    Hydro {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.005,0.0025")]
        steps: Vec<f64>,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate the deterministic identity suite.
    Oracle {
        #[command(flatten)]
        output: Output,
    },
    /// Same as `oracle`.
    OracleCheck {
        #[command(flatten)]
        output: Output,
    },
}

fn parse_pair(s: &str) -> Result<(f64, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [t, n] => Ok((
            t.trim().parse().map_err(|e| format!("time: {e}"))?,
            n.trim().parse().map_err(|e| format!("level: {e}"))?,
        )),
        _ => Err(format!("expected t,N but got {s:?}")),
    }
}

fn parse_triple(s: &str) -> Result<(f64, usize, i64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [t, n, x] => Ok((
            t.trim().parse().map_err(|e| format!("time: {e}"))?,
            n.trim().parse().map_err(|e| format!("level: {e}"))?,
            x.trim().parse().map_err(|e| format!("coordinate: {e}"))?,
        )),
        _ => Err(format!("expected t,N,x but got {s:?}")),
    }
}

fn base(rates: Option<&Rates>, seed: Option<u64>, output: &Output, mode: Mode) -> Result<ExperimentConfig, Error> {
    let (profile, explicit, scale) = match rates {
        Some(r) => {
            let profile = match (&r.profile, &r.rates) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    Some(ProfileSpec::from_toml(&text)?)
                }
                (None, Some(_)) => None,
                (None, None) => Some(SpeedProfile::constant(1.0)?.to_spec()),
            };
            (profile, r.rates.clone(), r.scale)
        }
        None => (None, None, 1.0),
    };
    Ok(ExperimentConfig {
        profile,
        scale,
        rates: explicit,
        seed,
        out: output.out.clone(),
        mode,
    })
}

fn build(command: Command) -> Result<ExperimentConfig, Error> {
    match command {
        Command::Run { config, seed, out } => {
            let mut c = ExperimentConfig::from_file(&config)?;
            if seed.is_some() {
                c.seed = seed;
            }
            if out.is_some() {
                c.out = out;
            }
            Ok(c)
        }
        Command::Simulate {
            points,
            replicas,
            seed,
            window,
            rates,
            output,
        } => base(
            Some(&rates),
            Some(seed),
            &output,
            Mode::Simulate {
                path: points,
                replicas,
                window,
            },
        ),
        Command::Field {
            depth,
            t,
            replicas,
            seed,
            rates,
            output,
        } => base(Some(&rates), Some(seed), &output, Mode::Field { depth, t, replicas }),
        Command::Kernel {
            point,
            point2,
            tol,
            rates,
            output,
        } => base(
            Some(&rates),
            None,
            &output,
            Mode::Kernel {
                p: point,
                q: point2,
                tol,
            },
        ),
        Command::Tail { t, n, y, tol, rates, output } => base(
            Some(&rates),
            None,
            &output,
            Mode::Tail {
                path: vec![(t, n)],
                heights: y.map(|y| vec![y]),
                tol,
            },
        ),
        Command::PathTail {
            points,
            tol,
            rates,
            output,
        } => base(
            Some(&rates),
            None,
            &output,
            Mode::Tail {
                path: points.iter().map(|p| (p.0, p.1)).collect(),
                heights: Some(points.iter().map(|p| p.2).collect()),
                tol,
            },
        ),
        Command::Limitshape {
            tau,
            eta_min,
            eta_max,
            points,
            rates,
            output,
        } => base(
            Some(&rates),
            None,
            &output,
            Mode::Limitshape {
                tau,
                eta_min,
                eta_max,
                points,
            },
        ),
        Command::Tw { r, nodes, output } => base(None, None, &output, Mode::Tw { r, nodes }),
        Command::TwTable { from, to, step, output } => {
            if !(step > 0.0 && to >= from) {
                return Err(Error::Config("tw-table needs step > 0 and to >= from".into()));
            }
            let count = ((to - from) / step + 1e-9).floor() as usize + 1;
            let r = (0..count).map(|k| from + step * k as f64).collect();
            base(None, None, &output, Mode::Tw { r, nodes: None })
        }
        Command::Converge {
            tau,
            eta,
            scales,
            replicas,
            seed,
            threshold,
            rates,
            output,
        } => base(
            Some(&rates),
            Some(seed),
            &output,
            Mode::Converge {
                tau,
                eta,
                scales,
                replicas,
                threshold,
            },
        ),
        Command::Hydro {
            tau,
            eta,
            steps,
            rates,
            output,
        } => base(
            Some(&rates),
            None,
            &output,
            Mode::Hydro {
                tau,
                eta,
                steps,
                min_order: 1.8,
            },
        ),
        Command::Oracle { output } | Command::OracleCheck { output } => base(None, None, &output, Mode::OracleCheck {}),
    }
}

fn fail(e: &Error) -> ExitCode {
    let record = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
    });
    eprintln!("{record}");
    ExitCode::from(if e.is_input_error() { 3 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Error::Config(e.to_string().trim().to_string())),
    };
    let config = match build(cli.command) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run_experiment(&config) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", serde_json::json!({ "error": "tolerance", "mode": report.mode }));
                ExitCode::from(2)
            }
        }
        Err(e) => fail(&e),
    }
}
