use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use anyhow::{Context, Result};
use resilgrid::env::{EnvConfig, GridEnv};
use resilgrid::feeder::{parse_feeder, parse_scenario, GridNetwork, Scenario};
use resilgrid::ppo::PpoHyperparams;
use resilgrid::reports::{self, report_csv};
use resilgrid::train::metrics::{parse_rewards_csv, parse_updates_csv};
use resilgrid::train::{self, list_checkpoints, read_checkpoint, Agents, TrainConfig};

use crate::{Cli, Command, EvaluateArgs, Global, RecommendArgs, ReportArgs, TrainArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CHECKPOINT: u8 = 3;

/// Marks an error as a checkpoint failure for exit-code purposes.
#[derive(Debug)]
pub struct CheckpointFailure(pub String);

impl fmt::Display for CheckpointFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckpointFailure {}

/// Marks an error as a usage problem detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<CheckpointFailure>()
            || matches!(cause.downcast_ref(), Some(resilgrid::Error::Checkpoint(_)))
        {
            return EXIT_CHECKPOINT;
        }
    }
    EXIT_DATA
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => train_cmd(&cli.global, a),
        Command::Evaluate(a) => evaluate_cmd(&cli.global, a),
        Command::Recommend(a) => recommend_cmd(&cli.global, a),
        Command::Report(a) => report_cmd(&cli.global, a),
    }
}

fn load_network(g: &Global) -> Result<GridNetwork> {
    match &g.feeder {
        None => Ok(GridNetwork::bundled()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading feeder {}", path.display()))?;
            parse_feeder(&text).with_context(|| format!("parsing feeder {}", path.display()))
        }
    }
}

fn load_env_config(g: &Global) -> Result<EnvConfig> {
    let mut cfg = match &g.env_config {
        Some(p) => EnvConfig::load(p)
            .with_context(|| format!("loading environment config {}", p.display()))?,
        None => EnvConfig::default(),
    };
    if let Some(p) = &g.econ_config {
        cfg.economics_file = Some(p.clone());
    }
    Ok(cfg)
}

fn build_env(g: &Global, extra: Vec<Scenario>) -> Result<GridEnv> {
    let net = load_network(g)?;
    let cfg = load_env_config(g)?;
    GridEnv::from_config_with(Rc::new(net), cfg, extra).context("building the environment")
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train_cmd(g: &Global, a: &TrainArgs) -> Result<()> {
    let cfg = TrainConfig {
        episodes: a.episodes,
        update_every: a.update_every,
        checkpoint_interval: a.checkpoint_interval,
        save_best: a.save_best,
        keep_checkpoints: a.keep,
        resume: a.resume.clone(),
        seed: g.seed,
        checkpoint_dir: Some(g.out_dir.join("checkpoints")),
        metrics_dir: Some(g.out_dir.clone()),
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let mut env = build_env(g, Vec::new())?;
    let mut agents = Agents::new(&cfg.ppo, g.seed);
    let out = train::train(&cfg, &mut env, &mut agents)?;
    println!(
        "trained episodes {}..={} with {} update rounds; metrics in {}",
        out.resumed_from.map_or(1, |e| e + 1),
        out.last_episode,
        out.update_rounds,
        g.out_dir.display()
    );
    if let Some(avg) = out.metrics.trailing_average() {
        println!("trailing average reward {avg:.2}");
    }
    Ok(())
}

/// A checkpoint directory itself, or the latest `ckpt_*` inside it.
fn resolve_checkpoint(path: &Path) -> Result<PathBuf> {
    if path.join(train::checkpoint::PARAM_FILES[0]).exists() {
        return Ok(path.to_path_buf());
    }
    let found = list_checkpoints(path).map_err(|e| CheckpointFailure(e.to_string()))?;
    found.last().map(|(_, p)| p.clone()).ok_or_else(|| {
        CheckpointFailure(format!("no checkpoint found at {}", path.display())).into()
    })
}

fn load_agents(path: &Path) -> Result<Agents> {
    let dir = resolve_checkpoint(path)?;
    let mut agents = Agents::new(&PpoHyperparams::default(), 0);
    let staged = read_checkpoint(&dir, &agents).map_err(|e| CheckpointFailure(e.to_string()))?;
    if let Some(m) = &staged.meta {
        log::info!(
            "loaded {} (episode {}, average reward {:.2})",
            dir.display(),
            m.episode,
            m.avg_reward
        );
    }
    staged.apply(&mut agents);
    Ok(agents)
}

fn horizon_steps(env: &GridEnv, steps: Option<usize>) -> Result<usize> {
    let n = steps.unwrap_or_else(|| env.economics().horizon.round() as usize);
    if n == 0 {
        return Err(UsageError("episodes need at least one step".into()).into());
    }
    Ok(n)
}

fn evaluate_cmd(g: &Global, a: &EvaluateArgs) -> Result<()> {
    if a.episodes == 0 {
        return Err(UsageError("--episodes must be at least 1".into()).into());
    }
    let agents = load_agents(&a.checkpoint)?;
    let mut env = build_env(g, Vec::new())?;
    env.config_mut().episode_length = horizon_steps(&env, a.steps)?;
    let eval = reports::evaluate(&mut env, &agents, a.episodes, g.seed)?;
    let dir = g.out_dir.join("eval");
    let width = a.episodes.to_string().len();
    for (i, run) in eval.episodes.iter().enumerate() {
        write(
            &dir.join(format!("trace_{:0width$}.csv", i + 1)),
            &run.trace.to_csv(),
        )?;
    }
    let text = eval.summary.to_text();
    write(&dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn recommend_cmd(g: &Global, a: &RecommendArgs) -> Result<()> {
    let agents = load_agents(&a.checkpoint)?;
    let mut extra = Vec::new();
    let mut names = Vec::new();
    let library: Vec<String> = build_env(g, Vec::new())?
        .scenarios()
        .iter()
        .map(|s| s.name.clone())
        .collect();
    for s in &a.scenario {
        if library.contains(s) {
            names.push(s.clone());
        } else if Path::new(s).is_file() {
            let text = fs::read_to_string(s).with_context(|| format!("reading scenario {s}"))?;
            let sc = parse_scenario(&text).with_context(|| format!("parsing scenario {s}"))?;
            names.push(sc.name.clone());
            extra.push(sc);
        } else {
            anyhow::bail!("unknown scenario `{s}` (library: {})", library.join(", "));
        }
    }
    if names.is_empty() {
        names = library;
    }
    let mut env = build_env(g, extra)?;
    env.config_mut().episode_length = horizon_steps(&env, a.steps)?;

    let dir = g.out_dir.join("recommend");
    let mut rows = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let id = format!("C{}", i + 1);
        let r = reports::recommend(&mut env, &agents, &id, name, g.seed)?;
        write(
            &dir.join(format!("{id}_normal.csv")),
            &r.normal_trace.to_csv(),
        )?;
        write(
            &dir.join(format!("{id}_{name}.csv")),
            &r.scenario_trace.to_csv(),
        )?;
        for row in r.rows() {
            println!(
                "{} {:<12} {:<40} total cost ${:.2}",
                row.contingency,
                row.weather,
                row.recommendation_text(),
                row.total_cost
            );
            rows.push(row.clone());
        }
    }
    write(&dir.join("report.csv"), &report_csv(&rows))?;
    Ok(())
}

fn report_cmd(g: &Global, a: &ReportArgs) -> Result<()> {
    let src = a.metrics.clone().unwrap_or_else(|| g.out_dir.clone());
    let rewards_path = src.join("rewards.csv");
    let text = fs::read_to_string(&rewards_path)
        .with_context(|| format!("reading {}", rewards_path.display()))?;
    let episodes =
        parse_rewards_csv(&text).with_context(|| format!("in {}", rewards_path.display()))?;
    let updates_path = src.join("updates.csv");
    let updates = if updates_path.exists() {
        let text = fs::read_to_string(&updates_path)
            .with_context(|| format!("reading {}", updates_path.display()))?;
        parse_updates_csv(&text).with_context(|| format!("in {}", updates_path.display()))?
    } else {
        Vec::new()
    };

    let dir = g.out_dir.join("plots");
    write(&dir.join("rewards.csv"), &reports::reward_plot(&episodes))?;
    let plots = reports::kl_entropy_plots(&updates);
    for (agent, text) in &plots {
        write(&dir.join(format!("kl_entropy_{agent}.csv")), text)?;
    }
    println!(
        "wrote reward plot data ({} episodes) and {} KL/entropy series to {}",
        episodes.len(),
        plots.len(),
        dir.display()
    );
    Ok(())
}
