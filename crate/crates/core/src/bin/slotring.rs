use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slotring::config::{ConfigError, ExperimentConfig, PolicyConfig};
use slotring::experiment::{run_experiment, run_suite, ExperimentError, SuiteOptions};
use slotring::ring::TrafficClass;
use slotring::scheduler::{check_validity, waste, Assignment, Validity};

#[derive(Parser)]
#[command(
    version,
    about = "Slotted optical ring simulator with C-RAN schedulers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replications of one experiment and write its result files.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Run the reference scenarios and write report.json.
    Suite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Scenario id (A, B, C or D); repeat to select several.
        #[arg(long)]
        scenario: Vec<String>,
        #[arg(long, default_value_t = 30)]
        replications: u64,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
    },
    /// Build the assignment of a deterministic config, check it and report its waste.
    Schedule {
        config: PathBuf,
        /// Check this assignment file instead of building one.
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExperimentError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
            replications,
            horizon,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            let result = run_experiment(&cfg)?;
            for path in result.write(&cfg.output_dir)? {
                println!("wrote {}", path.display());
            }
            for class in TrafficClass::ALL {
                if let Some(s) = result.class_spread(class) {
                    println!(
                        "{:<10} mean {:>8.3} UoT  (sem {:.3}, {} replications)  max {}",
                        class.name(),
                        s.mean,
                        s.sem,
                        s.n,
                        result.histogram.max(class).unwrap_or(0)
                    );
                }
            }
            println!("load {:.3}", result.load.load_fraction());
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite {
            seed,
            out_dir,
            scenario,
            replications,
            horizon,
        } => {
            let opts = SuiteOptions {
                replications,
                horizon,
                master_seed: seed,
                scenarios: scenario,
            };
            let suite = run_suite(&opts)?;
            for s in &suite.report.scenarios {
                println!("[{}] {}", s.id, s.title);
                for v in &s.variants {
                    let be = v.be.map_or("-".into(), |b| format!("{:.3}", b.mean));
                    let cran = v.cran.map_or("-".into(), |c| format!("{:.3}", c.mean));
                    println!(
                        "  {:<18} BE {:>8}  C-RAN {:>8}  C-RAN max {:>4}  load {:.3}",
                        v.policy,
                        be,
                        cran,
                        v.cran_max.map_or("-".into(), |m| m.to_string()),
                        v.load_fraction
                    );
                }
            }
            for c in &suite.report.comparisons {
                println!(
                    "{} {}: {} < {} by {:.3} (se {:.3}) {}",
                    c.scenario,
                    c.metric,
                    c.lower,
                    c.higher,
                    c.difference(),
                    c.standard_error,
                    if c.holds { "holds" } else { "FAILS" }
                );
            }
            let path = suite.report.write(&out_dir)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Schedule {
            config,
            assignment,
            out_dir,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let topo = cfg.topology()?;
            let params = cfg.capacity();
            let assignment = match (assignment, cfg.policy) {
                (Some(path), _) => {
                    let text =
                        std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                            path: path.clone(),
                            source,
                        })?;
                    Assignment::from_json(&text).map_err(ConfigError::Json)?
                }
                (None, PolicyConfig::Deterministic { scheduler }) => {
                    scheduler.build(&params, &topo)?
                }
                (None, _) => {
                    return Err(ConfigError::Invalid(
                        "schedule needs a deterministic policy or an assignment file".into(),
                    )
                    .into())
                }
            };
            println!("{}", assignment.to_json());
            if let Some(dir) = out_dir {
                let path = dir.join(format!("{}_assignment.json", cfg.name));
                std::fs::create_dir_all(&dir)
                    .and_then(|_| std::fs::write(&path, assignment.to_json()))
                    .map_err(|source| ExperimentError::Io {
                        path: path.clone(),
                        source,
                    })?;
                eprintln!("wrote {}", path.display());
            }
            match check_validity(&assignment, &topo, &params) {
                Validity::Valid => {
                    let w = waste(&assignment, &topo, &params)?;
                    eprintln!("valid; latency bound {}", assignment.latency_bound(&params));
                    for (pos, n) in &w.per_position {
                        eprintln!("position {pos}: {n} wasted per period");
                    }
                    eprintln!("total waste {}", w.total);
                    Ok(ExitCode::SUCCESS)
                }
                Validity::Conflict(fault) => {
                    eprintln!("invalid: {fault}");
                    Ok(ExitCode::from(2))
                }
            }
        }
    }
}
