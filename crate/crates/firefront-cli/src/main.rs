//! `firefront`: simulate wildfire spread, manufacture datasets, train the
//! physics-informed surrogate, and reproduce the bundled case studies.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use firefront::config::Config;
use firefront::error::{Error, Result};
use firefront::harness::{self, CaseSpec, CASE_IDS};
use firefront::io::{self, CheckpointManifest, RunManifest, TRACE_FILE};
use firefront::model::{PhysConstants, PhysParams};
use firefront::optim;

#[derive(Parser)]
#[command(
    name = "firefront",
    version,
    about = "Wildfire front simulation and physics-informed parameter recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-simulate the configured system and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $FIREFRONT_OUT or ./firefront-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured seeds (init = SEED, noise = SEED + 1).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate and extract the sampled training dataset.
    MakeDataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train against an existing dataset directory (or dataset.csv path).
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a bundled case study end to end (1, 1A, 1B, 1C, 2, 3, 4).
    Case {
        id: String,
        /// Desk-scale variant: reduced schedule (and coarser 2D sampling).
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dataset-size sweep over several presets (default: 1A,1,1B,1C).
    Ablation {
        #[arg(long, value_delimiter = ',')]
        cases: Vec<String>,
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
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

fn out_dir(explicit: Option<PathBuf>, leaf: &str) -> PathBuf {
    match explicit {
        Some(p) => p,
        None => {
            let base = std::env::var_os("FIREFRONT_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("firefront-out"));
            base.join(leaf)
        }
    }
}

fn apply_seed(cfg: &mut Config, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.seeds.init = s;
        cfg.seeds.noise = s.wrapping_add(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = Config::load(&config)?;
            apply_seed(&mut cfg, seed);
            let dir = out_dir(out, "simulate");
            let (traj, _, manifest, series) = harness::generate_data(&cfg)?;
            std::fs::create_dir_all(&dir)?;
            cfg.save(&dir.join("config.toml"))?;
            let manifest = RunManifest { kind: "trajectory".into(), ..manifest };
            io::write_trajectory(&dir, &traj, &manifest)?;
            if let Some(series) = &series {
                io::write_series(&dir.join(io::SERIES_FILE), series)?;
            }
            println!(
                "wrote trajectory ({} levels x {} nodes) to {}",
                traj.grid.nt,
                traj.grid.n_nodes(),
                dir.display()
            );
            Ok(())
        }
        Command::MakeDataset { config, out, seed } => {
            let mut cfg = Config::load(&config)?;
            apply_seed(&mut cfg, seed);
            let dir = out_dir(out, "dataset");
            let (_, dataset, manifest, series) = harness::generate_data(&cfg)?;
            std::fs::create_dir_all(&dir)?;
            cfg.save(&dir.join("config.toml"))?;
            io::write_dataset(&dir, &dataset, &manifest)?;
            if let Some(series) = &series {
                io::write_series(&dir.join(io::SERIES_FILE), series)?;
            }
            println!("wrote {} records to {}", dataset.records.len(), dir.display());
            Ok(())
        }
        Command::Train { dataset, config, out, seed } => {
            let mut cfg = Config::load(&config)?;
            apply_seed(&mut cfg, seed);
            let (ds, manifest) = io::read_dataset(&dataset)?;
            let dir = out_dir(out, "train");
            std::fs::create_dir_all(&dir)?;
            cfg.save(&dir.join("config.toml"))?;
            cmd_train(&cfg, &ds, &manifest, &dir)
        }
        Command::Case { id, fast, out, seed } => {
            let mut spec = harness::preset(&id, fast)?;
            apply_seed(&mut spec.config, seed);
            let dir = out_dir(out, &format!("case-{id}{}", if fast { "-fast" } else { "" }));
            println!(
                "case {id}{}: {} records, {} Adam iterations",
                if fast { " (fast)" } else { "" },
                spec.expected_records,
                spec.config.train.adam_iters
            );
            let outcome = harness::run_case(&spec)?;
            harness::write_case_outcome(&dir, &outcome)?;
            print_recovery(&outcome.report.theta_hat, &outcome.report.theta_star, outcome.dataset.dim);
            println!("report written to {}", dir.display());
            Ok(())
        }
        Command::Ablation { cases, fast, out, seed } => {
            let ids: Vec<String> = if cases.is_empty() {
                ["1A", "1", "1B", "1C"].iter().map(|s| s.to_string()).collect()
            } else {
                cases
            };
            let mut specs: Vec<CaseSpec> = Vec::new();
            for id in &ids {
                if !CASE_IDS.contains(&id.as_str()) {
                    return Err(Error::Config(format!(
                        "unknown case '{id}'; available presets: {}",
                        CASE_IDS.join(", ")
                    )));
                }
                let mut spec = harness::preset(id, fast)?;
                apply_seed(&mut spec.config, seed);
                specs.push(spec);
            }
            let dir = out_dir(out, "ablation");
            std::fs::create_dir_all(&dir)?;
            let (outcomes, table) = harness::ablation(&specs)?;
            for outcome in &outcomes {
                let sub = dir.join(format!("case-{}", outcome.report.case));
                harness::write_case_outcome(&sub, outcome)?;
            }
            let dim = outcomes[0].dataset.dim;
            table.write_csv(&dir.join("ablation.csv"), dim)?;
            print!("{}", table.render_text(dim));
            println!("table written to {}", dir.join("ablation.csv").display());
            Ok(())
        }
    }
}

fn cmd_train(cfg: &Config, ds: &firefront::fdsolver::Dataset, manifest: &RunManifest, dir: &Path) -> Result<()> {
    println!(
        "training on {} records ({} Adam + up to {} L-BFGS iterations)",
        ds.records.len(),
        cfg.train.adam_iters,
        cfg.train.lbfgs_max_iters
    );
    let mut trace = Vec::new();
    let ckpt_dir = dir.join("checkpoints");
    let widths = cfg.net.widths.clone();
    let init_seed = cfg.seeds.init;
    let mut write_ckpt = |iteration: u64, params: &firefront::net::MlpParams, theta: &PhysParams| {
        io::write_checkpoint(
            &ckpt_dir.join(format!("iter_{iteration:07}")),
            &CheckpointManifest {
                widths: widths.clone(),
                init_seed,
                iteration,
                theta: theta.clone(),
            },
            params.as_flat(),
        )
    };
    let checkpoint = if cfg.train.checkpoint_every > 0 {
        Some((
            cfg.train.checkpoint_every,
            &mut write_ckpt as &mut dyn FnMut(u64, &firefront::net::MlpParams, &PhysParams) -> Result<()>,
        ))
    } else {
        None
    };
    let result = optim::train(
        ds,
        &cfg.arch(),
        &cfg.schedule(),
        &cfg.constants,
        &cfg.loss_weights(),
        cfg.seeds.init,
        &mut trace,
        checkpoint,
    );
    // the trace survives even when training aborts
    io::write_trace(&dir.join(TRACE_FILE), &trace, ds.dim)?;
    let outcome = result?;

    let theta_hat = outcome.theta_hat.to_vec();
    io::write_checkpoint(
        dir,
        &CheckpointManifest {
            widths: cfg.net.widths.clone(),
            init_seed: cfg.seeds.init,
            iteration: trace.last().map(|r| r.iteration).unwrap_or(0),
            theta: outcome.theta_hat.clone(),
        },
        outcome.params.as_flat(),
    )?;

    let theta_star = manifest.theta_nominal.to_vec();
    print_recovery(&theta_hat, &theta_star, ds.dim);
    let report = harness::CaseReport {
        case: "custom".into(),
        fast: false,
        dim: ds.dim,
        records: ds.records.len(),
        expected_records: ds.records.len(),
        sampling_dx: ds.spacing.dx,
        sampling_dt: ds.spacing.dt,
        theta_star,
        theta_hat,
        rel_errors: harness::relative_errors(
            &outcome.theta_hat.to_vec(),
            &manifest.theta_nominal.to_vec(),
        ),
        max_rel_error: harness::relative_errors(
            &outcome.theta_hat.to_vec(),
            &manifest.theta_nominal.to_vec(),
        )
        .iter()
        .cloned()
        .fold(0.0, f64::max),
        final_loss: outcome.final_loss,
        adam_iters: cfg.train.adam_iters,
        lbfgs_status: outcome.lbfgs.map(|s| format!("{s:?}")),
        loss_evals: outcome.evals,
        wall_seconds: 0.0,
        seeds: cfg.seeds,
    };
    harness::write_report(&dir.join("report.toml"), &report)?;
    println!("trace and checkpoint written to {}", dir.display());
    Ok(())
}

fn print_recovery(theta_hat: &[f64], theta_star: &[f64], dim: usize) {
    let names = PhysParams::component_names(dim);
    println!("recovered parameters (constants v{}):", PhysConstants::CANONICAL_VERSION);
    for i in 0..theta_hat.len() {
        let rel = 100.0 * (theta_hat[i] - theta_star[i]).abs() / theta_star[i].abs();
        println!(
            "  {:<3} = {:>9.5}   (true {:>7.4}, rel err {:>6.2}%)",
            names[i], theta_hat[i], theta_star[i], rel
        );
    }
}
