use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hetuav::config::ScenarioConfig;
use hetuav::env::{write_transitions, Env, PrecodingMode};
use hetuav::expert::{collect_dataset, load_dataset, CollectConfig};
use hetuav::harness::{
    self, baseline_dispatch, emit_plot_data, read_metrics, write_metrics, CellSeeds, DistillSettings, ExperimentSpec, ExpertKind, Method, MetricsRow,
};
use hetuav::learner::{distill, greedy_agreement, load_agents, make_agents, save_agents};

#[derive(Parser)]
#[command(name = "hetuav", version, about = "Secure heterogeneous UAV network simulator and trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out episodes with an expert provider and dump the transitions.
    Simulate(ScenarioArgs),
    /// Build an expert dataset (line-delimited transitions).
    Collect(CollectArgs),
    /// Distill agents from a dataset and save a checkpoint.
    Distill(DistillArgs),
    /// Run every (method, seed) cell of an experiment.
    Train(ExperimentArgs),
    /// Greedy rollouts of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Repeat an experiment over fleet sizes.
    Sweep(SweepArgs),
    /// Derive per-figure CSV tables from a metrics file.
    PlotData(PlotArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML; the desk-scale default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    seed: u64,
    #[arg(long, default_value = "transitions.jsonl")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// `scripted` or `http` (reads EXPERT_API_URL / EXPERT_API_KEY / EXPERT_MODEL).
    #[arg(long, default_value = "scripted")]
    expert: String,
}

#[derive(Args)]
struct CollectArgs {
    #[command(flatten)]
    base: ScenarioArgs,
    /// Start-position jitter as a fraction of the area side.
    #[arg(long, default_value_t = 0.25)]
    jitter: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment TOML.
    #[arg(long)]
    config: PathBuf,
    /// Restrict to these methods (repeatable).
    #[arg(long)]
    method: Vec<String>,
    /// Restrict to these seeds (repeatable).
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistillArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long)]
    dataset: PathBuf,
    /// Overrides the experiment's update count.
    #[arg(long)]
    updates: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Fleet sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 6, 8, 10])]
    n_uav: Vec<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn expert_kind(s: &str) -> Result<ExpertKind> {
    match s {
        "scripted" => Ok(ExpertKind::Scripted),
        "http" => Ok(ExpertKind::Http),
        other => bail!("unknown expert `{other}` (expected scripted or http)"),
    }
}

fn scenario(path: &Option<PathBuf>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

fn experiment(args: &ExperimentArgs) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if !args.method.is_empty() {
        spec.methods = args.method.iter().map(|m| Method::parse(m)).collect::<hetuav::Result<_>>()?;
    }
    if !args.seed.is_empty() {
        spec.seeds = args.seed.clone();
    }
    if let Some(e) = args.episodes {
        spec.episodes = e;
    }
    if let Some(o) = &args.out {
        spec.out_dir = o.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn collect(args: &ScenarioArgs, jitter: f64) -> Result<()> {
    let cfg = scenario(&args.config)?;
    let mut env = Env::new(cfg, PrecodingMode::S2dc)?;
    let settings = DistillSettings {
        expert: expert_kind(&args.expert)?,
        ..DistillSettings::default()
    };
    let mut provider = harness::make_provider(&settings)?;
    let seeds = CellSeeds::new(args.seed);
    let records = collect_dataset(
        provider.as_mut(),
        &mut env,
        &CollectConfig {
            episodes: args.episodes,
            seed: seeds.dataset_fading,
            layout_seed: seeds.layout,
            start_jitter: jitter,
            ..CollectConfig::default()
        },
    )?;
    write_transitions(&args.out, &records)?;
    let fallbacks = records.iter().filter(|r| r.fallback).count();
    let mean_reward = records.iter().map(|r| r.reward).sum::<f64>() / records.len().max(1) as f64;
    println!(
        "{} records ({} fallback) from {} episodes, mean reward {:.4} -> {}",
        records.len(),
        fallbacks,
        args.episodes,
        mean_reward,
        args.out.display()
    );
    Ok(())
}

fn print_rows(rows: &[MetricsRow]) {
    for r in rows {
        println!(
            "{} seed {} ep {}: reward {:.4} f1 {:.4} energy {:.1} J collisions {} boundary {}",
            r.method, r.seed, r.episode, r.mean_reward, r.cumulative_f1, r.cumulative_energy_j, r.collisions, r.boundary_violations
        );
    }
}

fn single_method(spec: &ExperimentSpec) -> Result<Method> {
    match spec.methods.as_slice() {
        [m] => Ok(*m),
        _ => bail!("pick one method with --method"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => collect(&a, 0.0)?,
        Command::Collect(a) => collect(&a.base, a.jitter)?,
        Command::Distill(a) => {
            let spec = experiment(&a.exp)?;
            let seed = spec.seeds[0];
            let cfg = spec.scenario_for(seed);
            let env = Env::new(cfg, PrecodingMode::S2dc)?;
            let data = load_dataset(&a.dataset, env.obs_dim(), env.n_actions())?;
            let mut agents = make_agents(env.n_agents(), env.obs_dim(), env.n_actions(), &spec.learner, CellSeeds::new(seed).agents);
            let history = distill(&data, &mut agents, a.updates.unwrap_or(spec.distill.updates))?;
            if let Some(last) = history.last() {
                println!("final critic loss {:.5}, conservative term {:.5}, alpha {:.4}", last.critic_loss, last.cql, last.alpha);
            }
            println!("greedy agreement with dataset actions: {:.3}", greedy_agreement(&data, &agents));
            std::fs::create_dir_all(&spec.out_dir)?;
            let path = spec.out_dir.join("distilled.ckpt");
            save_agents(&path, &agents)?;
            println!("checkpoint -> {}", path.display());
        }
        Command::Train(a) => {
            let spec = experiment(&a)?;
            let rows = harness::run_experiment(&spec)?;
            for &m in &spec.methods {
                for &s in &spec.seeds {
                    if let Some(v) = harness::final_mean(&rows, m.name(), s, 20) {
                        println!("{m} seed {s}: final 20-episode mean reward {v:.4}");
                    }
                }
            }
            println!("metrics -> {}", spec.out_dir.join(harness::METRICS_FILE).display());
        }
        Command::Evaluate(a) => {
            let spec = experiment(&a.exp)?;
            let method = single_method(&spec)?;
            let agents = load_agents(&a.checkpoint)?;
            let mut rows = Vec::new();
            for &seed in &spec.seeds {
                let pipeline = baseline_dispatch(method, spec.power_split_levels);
                let mut env = Env::new(spec.scenario_for(seed), pipeline.precoding)?;
                if agents.len() != env.n_agents() || agents.iter().any(|ag| ag.n_actions() != env.n_actions()) {
                    bail!("checkpoint does not match the {method} action space of this scenario");
                }
                let seeds = CellSeeds::new(seed);
                let held_out = hetuav::channel::splitmix(seeds.online_fading ^ 0x6576_616c);
                for m in harness::evaluate(&mut env, &agents, spec.episodes, seeds.layout, held_out)? {
                    rows.push(MetricsRow {
                        method: method.name().to_string(),
                        seed,
                        n_uav: env.n_agents(),
                        episode: m.episode,
                        mean_reward: m.mean_reward,
                        cumulative_f1: m.cumulative_f1,
                        cumulative_energy_j: m.cumulative_energy,
                        collisions: m.collisions,
                        boundary_violations: m.boundary_violations,
                        s2dc_iterations_mean: m.s2dc_iterations_mean,
                        wall_time_s: m.wall_time_s,
                    });
                }
            }
            print_rows(&rows);
            std::fs::create_dir_all(&spec.out_dir)?;
            let path = spec.out_dir.join("evaluation.csv");
            write_metrics(&path, &rows)?;
            println!("metrics -> {}", path.display());
        }
        Command::Sweep(a) => {
            let spec = experiment(&a.exp)?;
            let rows = harness::scaling_sweep(&spec, &a.n_uav)?;
            println!("{} rows -> {}", rows.len(), spec.out_dir.join(harness::METRICS_FILE).display());
        }
        Command::PlotData(a) => {
            let rows = read_metrics(&a.metrics)?;
            for f in emit_plot_data(&rows, &a.out)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
