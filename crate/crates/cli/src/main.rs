//! `shapenav` command-line tool.

mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use shapenav::apf::ApfParams;
use shapenav::ddpg::{evaluate_policy, train_with_progress};
use shapenav::eval::{episodes_csv, metrics_csv, replay_files, rerun_episode, run_sweep, PolicySource, SweepSpec};
use shapenav::neural::{save_actor, save_critic};
use shapenav::rng::{derive_seed, Stream};
use shapenav::shaping::{run_full_shaping, shape_networks, shape_rewards, DdpgRunner, ShapingConfig, TrialDb};
use shapenav::tasks::save_trajectory;
use shapenav::RewardWeights;

use settings::{usage, Settings, UsageError};

#[derive(Parser)]
#[command(name = "shapenav", version, about = "Navigation policy training, shaping and evaluation")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an occupancy map and write it to `<out>/map.txt`.
    Mapgen,
    /// Train a DDPG policy with fixed reward weights and network shapes.
    Train,
    /// Search reward weights (phase 1).
    ShapeReward,
    /// Search network widths for fixed reward weights (phase 2).
    ShapeNetwork,
    /// Both shaping phases followed by a final training run.
    Shape,
    /// Sweep a policy over noise, obstacle and distance grids.
    Eval,
    /// Sweep the potential-field baseline.
    BaselineApf,
    /// Summarize a recorded trajectory against a map.
    Replay {
        trajectory: Option<PathBuf>,
        map: Option<PathBuf>,
    },
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
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let s = Settings::build(cli.config.as_deref(), &cli.sets, cli.seed, cli.out.as_deref())?;
    match cli.command {
        Command::Mapgen => mapgen(&s),
        Command::Train => train(&s),
        Command::ShapeReward => shape_reward(&s),
        Command::ShapeNetwork => shape_network(&s),
        Command::Shape => shape(&s),
        Command::Eval => eval(&s, None),
        Command::BaselineApf => {
            let params: ApfParams = s.apf()?;
            eval(&s, Some(PolicySource::Apf(params)))
        }
        Command::Replay { trajectory, map } => replay(&s, trajectory, map),
    }
}

fn mapgen(s: &Settings) -> Result<()> {
    let map = s.map()?;
    let path = s.out_file("map.txt")?;
    map.save(&path)?;
    let (w, h) = map.extent();
    println!("map {}x{} m, {} free cells -> {}", w, h, map.free_cell_count(), path.display());
    Ok(())
}

fn train(s: &Settings) -> Result<()> {
    let setup = s.task_setup()?;
    let cfg = s.ddpg(None)?;
    let out = train_with_progress(&setup, &s.actor_shape()?, &s.critic_shape()?, &cfg, s.seed, &mut |p| {
        eprintln!("step {} objective {:.3} return {:.3}", p.step, p.mean_true_objective, p.mean_return)
    })?;
    save_actor(&out.actor, s.out_file("actor.bin")?)?;
    save_critic(&out.critic, s.out_file("critic.bin")?)?;
    std::fs::write(s.out_file("curve.txt")?, out.curve_text())?;
    let eval_seed = derive_seed(s.seed, Stream::Evaluation as u64);
    let summary = evaluate_policy(&mut &out.actor, &setup, cfg.eval_episodes.max(1), eval_seed)?;
    if let Some(ep) = setup.episode(derive_seed(eval_seed, 0))? {
        let mut actor = &out.actor;
        let mut ep = ep;
        while !ep.is_done() {
            let a = shapenav::Policy::act(&mut actor, &ep.view());
            ep.step(a)?;
        }
        let r = ep.into_result();
        save_trajectory(s.out_file("trajectory.txt")?, &r.trajectory, Some(r.outcome))?;
    }
    println!(
        "trained {} updates over {} episodes; success {:.3} objective {:.3} return {:.3}",
        out.updates, out.episodes, summary.success_rate, summary.mean_objective, summary.mean_return
    );
    Ok(())
}

fn runner(s: &Settings) -> Result<DdpgRunner> {
    Ok(DdpgRunner {
        setup: s.task_setup()?,
        ddpg: s.ddpg(Some("trial_steps"))?,
        final_ddpg: s.ddpg(Some("final_steps"))?,
        eval_episodes: s.get_or("eval_episodes", 20)?,
    })
}

fn open_db(s: &Settings) -> Result<TrialDb> {
    let path = s.db_path()?;
    TrialDb::open(&path).with_context(|| format!("opening trial database {}", path.display()))
}

fn shape_reward(s: &Settings) -> Result<()> {
    let runner = runner(s)?;
    let mut db = open_db(s)?;
    let phase = s.phase("reward_trials", "reward_parallel", 24)?;
    let (weights, best) =
        shape_rewards(s.task()?, &s.actor_shape()?, &s.critic_shape()?, &phase, &runner, &mut db, s.seed)?;
    let text = format!("reward_best_trial {}\nreward_best_objective {}\nweights {}\n", best.trial_id, best.objective, join(weights.as_slice()));
    std::fs::write(s.out_file("shaping.txt")?, &text)?;
    print!("{text}");
    Ok(())
}

fn shape_network(s: &Settings) -> Result<()> {
    let runner = runner(s)?;
    let weights: RewardWeights = runner.setup.task.weights.clone();
    let mut db = open_db(s)?;
    let phase = s.phase("network_trials", "network_parallel", 24)?;
    let (actor, critic, best) = shape_networks(&weights, s.width_bounds()?, &phase, &runner, &mut db, s.seed)?;
    let text = format!(
        "network_best_trial {}\nnetwork_best_objective {}\nactor_widths {}\ncritic_widths {}\n",
        best.trial_id,
        best.objective,
        join(&actor.widths),
        join(&critic.widths)
    );
    std::fs::write(s.out_file("shaping.txt")?, &text)?;
    print!("{text}");
    Ok(())
}

fn shape(s: &Settings) -> Result<()> {
    let runner = runner(s)?;
    let mut db = open_db(s)?;
    let cfg = ShapingConfig {
        task: s.task()?,
        reward_phase: s.phase("reward_trials", "reward_parallel", 24)?,
        network_phase: s.phase("network_trials", "network_parallel", 24)?,
        default_actor: s.actor_shape()?,
        default_critic: s.critic_shape()?,
        width_bounds: s.width_bounds()?,
        master_seed: s.seed,
    };
    let report = run_full_shaping(&cfg, &runner, &mut db)?;
    if let (Some(a), Some(c)) = (&report.final_actor, &report.final_critic) {
        save_actor(a, s.out_file("actor.bin")?)?;
        save_critic(c, s.out_file("critic.bin")?)?;
    }
    let text = report.to_text();
    std::fs::write(s.out_file("shaping.txt")?, &text)?;
    print!("{text}");
    Ok(())
}

fn eval(s: &Settings, forced: Option<PolicySource>) -> Result<()> {
    let spec: SweepSpec = s.sweep(forced)?;
    let out = run_sweep(&spec)?;
    let metrics = metrics_csv(&out.rows);
    std::fs::write(s.out_file("metrics.csv")?, &metrics)?;
    std::fs::write(s.out_file("episodes.csv")?, episodes_csv(&out.episodes))?;
    let first = rerun_episode(&spec, 0, 0)?;
    save_trajectory(s.out_file("trajectory.txt")?, &first.trajectory, Some(first.outcome))?;
    print!("{metrics}");
    Ok(())
}

fn replay(s: &Settings, trajectory: Option<PathBuf>, map: Option<PathBuf>) -> Result<()> {
    let pick = |arg: Option<PathBuf>, key: &str| -> Result<PathBuf> {
        arg.or_else(|| s.cfg.raw(key).map(PathBuf::from))
            .ok_or_else(|| usage(format!("replay needs a {key} file (argument or `{key}` key)")))
    };
    let t = pick(trajectory, "trajectory")?;
    let m = pick(map, "map")?;
    let summary = replay_files(&t, &m)?;
    let text = summary.to_text();
    std::fs::write(s.out_file("replay.txt")?, &text)?;
    print!("{text}");
    Ok(())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}
