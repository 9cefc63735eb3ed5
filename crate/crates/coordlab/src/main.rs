use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coordlab::config::{
    apply_override, build_builtin, load_config_value, ExperimentConfig, RunManifest,
};
use coordlab::error::Error;
use coordlab::exact::{exact_failure_curve, ExactOptions};
use coordlab::game::{GameFile, StateGame, TIE_TOL};
use coordlab::sim::{run_experiment, write_curve_csv, write_trial_records, CurveResult, RoundStats};

#[derive(Parser)]
#[command(name = "coordlab", version, about = "Coordination learning simulator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write the convergence curve as CSV.
    Simulate {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Dotted-path overrides applied after parsing, e.g. --set fail_p=0.2
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output CSV path (default: <config stem>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump every trial record as JSON lines.
        #[arg(long = "dump-trials", value_name = "PATH")]
        dump_trials: Option<PathBuf>,
        /// Cap trial parallelism (default: machine parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compute the exact convergence curve by belief-state enumeration.
    Oracle {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drop branches below this probability mass.
        #[arg(long, default_value_t = 1e-12)]
        prune_mass: f64,
    },
    /// Inspect or export the builtin game constructors.
    Games {
        #[command(subcommand)]
        action: GamesAction,
    },
}

#[derive(Subcommand)]
enum GamesAction {
    /// List builtin game constructors and their parameters.
    List,
    /// Print the strategic form and optimal joint actions of a builtin game.
    Show {
        name: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Write a builtin game to the JSON game file format.
    Export {
        name: String,
        path: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ResourceLimit(_) => 3,
        Error::Unsupported(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> coordlab::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            config,
            sets,
            out,
            dump_trials,
            workers,
        } => {
            if let Some(n) = workers {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let cfg = resolve_config(&config, &sets)?;
            let out = out.unwrap_or_else(|| default_out(&config));
            let (curve, records) = run_experiment(&cfg, dump_trials.is_some())?;
            write_outputs(&cfg, &curve, None, &out)?;
            if let (Some(path), Some(records)) = (dump_trials, records) {
                let mut file = std::fs::File::create(&path)?;
                write_trial_records(&mut file, &records)?;
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            config,
            sets,
            out,
            prune_mass,
        } => {
            let cfg = resolve_config(&config, &sets)?;
            let (game, _) = cfg.game.build()?;
            let opts = ExactOptions {
                prune_mass,
                ..ExactOptions::default()
            };
            let exact = exact_failure_curve(&game, &cfg.learner, cfg.conventions, cfg.horizon, &opts)?;
            let rounds: Vec<RoundStats> = exact
                .rounds
                .iter()
                .map(|r| RoundStats {
                    round: r.round,
                    mean_error: r.error,
                    stderr: 0.0,
                    frozen_fraction: r.frozen_mass,
                })
                .collect();
            let pruned: Vec<f64> = exact.rounds.iter().map(|r| r.pruned_mass).collect();
            let curve = CurveResult {
                rounds,
                config_hash: coordlab::config::config_hash(&cfg.to_value()?),
                seed: cfg.seed,
            };
            let out = out.unwrap_or_else(|| default_out(&config));
            write_outputs(&cfg, &curve, Some(&pruned), &out)?;
            println!("wrote {}", out.display());
            if let Some(reason) = exact.truncated {
                eprintln!("partial results: {reason}");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Games { action } => run_games(action),
    }
}

fn run_games(action: GamesAction) -> coordlab::Result<ExitCode> {
    match action {
        GamesAction::List => {
            println!("pure_coordination  n (>=2), c (default 1), d (default 0)");
            println!("asymmetric2x2      v_coord (>1, default 4)");
            println!("stochastic2x2      fail_p (in [0, 0.5), default 0.1)");
            println!("convention3x3      slip_q (0.1), majority_r (0.15), good_utility (1), bad_utility (0)");
            Ok(ExitCode::SUCCESS)
        }
        GamesAction::Show { name, sets } => {
            let (game, warn) = build_named(&name, &sets)?;
            show_game(&game)?;
            if warn == Some(true) {
                println!("warning: two optimal joint actions share an outcome distribution");
            }
            Ok(ExitCode::SUCCESS)
        }
        GamesAction::Export { name, path, sets } => {
            let (game, _) = build_named(&name, &sets)?;
            GameFile::from_game(&game)?.save(&path)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn build_named(name: &str, sets: &[String]) -> coordlab::Result<(StateGame, Option<bool>)> {
    let mut params = serde_json::Map::new();
    for assignment in sets {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' must be key=value")))?;
        let value = serde_json::from_str(raw)
            .unwrap_or(serde_json::Value::String(raw.to_string()));
        params.insert(key.to_string(), value);
    }
    build_builtin(name, &params)
}

fn show_game(game: &StateGame) -> coordlab::Result<()> {
    println!(
        "agents: {}  actions: {:?}  outcomes: {}",
        game.n_agents(),
        game.actions_per_agent(),
        game.n_outcomes()
    );
    if game.is_enumerable() {
        let tensor = game.to_strategic_form()?;
        println!("strategic form (joint action -> expected utility):");
        for a in game.joint_actions() {
            println!("  {:?} -> {:.6}", a.0, tensor.get(&a));
        }
    } else {
        println!(
            "strategic form omitted ({} joint actions)",
            game.n_joint_actions()
        );
    }
    let ojas = game.optimal_joint_actions(TIE_TOL)?;
    println!("optimal joint actions:");
    for a in &ojas {
        println!("  {:?}", a.0);
    }
    Ok(())
}

fn resolve_config(path: &Path, sets: &[String]) -> coordlab::Result<ExperimentConfig> {
    let mut value = load_config_value(path)?;
    for assignment in sets {
        apply_override(&mut value, assignment)?;
    }
    let mut cfg = ExperimentConfig::from_value(value)?;
    if let Ok(seed) = std::env::var("COORDLAB_SEED") {
        cfg.seed = seed
            .parse()
            .map_err(|_| Error::Config(format!("COORDLAB_SEED '{seed}' is not a u64")))?;
    }
    Ok(cfg)
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    PathBuf::from(format!("{stem}.csv"))
}

fn write_outputs(
    cfg: &ExperimentConfig,
    curve: &CurveResult,
    pruned: Option<&[f64]>,
    out: &Path,
) -> coordlab::Result<()> {
    let mut file = std::fs::File::create(out)?;
    write_curve_csv(&mut file, curve, pruned)?;
    let manifest_path = out.with_extension("manifest.json");
    let manifest = RunManifest::new(
        cfg,
        vec![out.display().to_string(), manifest_path.display().to_string()],
    )?;
    manifest.save(&manifest_path)?;
    Ok(())
}
