//! Experiment orchestration: builds each method's pipeline, runs every
//! (method, seed) cell and persists metrics, checkpoints and plot tables.

pub mod metrics;
pub mod spec;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use metrics::{emit_plot_data, read_metrics, write_metrics, write_timing, MetricsRow, METRICS_FILE, METRICS_SCHEMA, TIMING_FILE};
pub use spec::{baseline_dispatch, CellSeeds, DistillSettings, ExperimentSpec, ExpertKind, Heterogeneity, Method, Pipeline};

use crate::config::ScenarioConfig;
use crate::env::{Env, PrecodingMode, Transition};
use crate::error::{Error, Result};
use crate::expert::{collect_dataset, CollectConfig, ExpertProvider, HttpExpert, HttpExpertConfig, ScriptedExpert};
use crate::learner::{distill, make_agents, online_adapt, save_agents, Agent, EpisodeMetrics, OnlineConfig, ReplayStore};

pub fn make_provider(settings: &DistillSettings) -> Result<Box<dyn ExpertProvider>> {
    Ok(match settings.expert {
        ExpertKind::Scripted => Box::new(ScriptedExpert {
            repulsion_gain: settings.repulsion_gain,
        }),
        ExpertKind::Http => Box::new(HttpExpert::new(HttpExpertConfig::from_env()?)),
    })
}

/// Expert transitions on the cell's layout with the dataset fading stream.
pub fn collect_for_seed(scenario: &ScenarioConfig, settings: &DistillSettings, seed: u64, provider: &mut dyn ExpertProvider) -> Result<Vec<Transition>> {
    let seeds = CellSeeds::new(seed);
    let mut env = Env::new(scenario.clone(), PrecodingMode::S2dc)?;
    let cfg = CollectConfig {
        episodes: settings.dataset_episodes,
        seed: seeds.dataset_fading,
        layout_seed: seeds.layout,
        start_jitter: settings.start_jitter,
        ..CollectConfig::default()
    };
    collect_dataset(provider, &mut env, &cfg)
}

fn to_row(method: Method, seed: u64, n_uav: usize, m: &EpisodeMetrics) -> MetricsRow {
    MetricsRow {
        method: method.name().to_string(),
        seed,
        n_uav,
        episode: m.episode,
        mean_reward: m.mean_reward,
        cumulative_f1: m.cumulative_f1,
        cumulative_energy_j: m.cumulative_energy,
        collisions: m.collisions,
        boundary_violations: m.boundary_violations,
        s2dc_iterations_mean: m.s2dc_iterations_mean,
        wall_time_s: m.wall_time_s,
    }
}

fn checkpoint_path(dir: &Path, method: Method, seed: u64, n_uav: usize, tag: &str) -> PathBuf {
    dir.join("checkpoints").join(format!("{}_n{}_seed{}_{}.ckpt", method.name(), n_uav, seed, tag))
}

/// Outcome of one (method, seed) cell.
pub struct CellResult {
    pub rows: Vec<MetricsRow>,
    pub agents: Vec<Agent>,
    /// Greedy agreement with the expert on its own data after distillation.
    pub distill_agreement: Option<f64>,
}

/// Runs one cell end to end. `dataset` overrides expert collection for
/// distilling methods (the caller may share one dataset between runs).
pub fn run_cell(spec: &ExperimentSpec, method: Method, seed: u64, dataset: Option<&[Transition]>) -> Result<CellResult> {
    let scenario = spec.scenario_for(seed);
    let pipeline = baseline_dispatch(method, spec.power_split_levels);
    let seeds = CellSeeds::new(seed);
    let mut env = Env::new(scenario.clone(), pipeline.precoding)?;
    let n_uav = env.n_agents();
    let mut agents = make_agents(n_uav, env.obs_dim(), env.n_actions(), &spec.learner, seeds.agents);

    let mut distill_agreement = None;
    if pipeline.distill {
        let owned;
        let data = match dataset {
            Some(d) => d,
            None => {
                let mut provider = make_provider(&spec.distill)?;
                owned = collect_for_seed(&scenario, &spec.distill, seed, provider.as_mut())?;
                &owned
            }
        };
        distill(data, &mut agents, spec.distill.updates)?;
        distill_agreement = Some(crate::learner::greedy_agreement(data, &agents));
        log::info!("{method} seed {seed}: distilled, expert agreement {:.3}", distill_agreement.unwrap());
    }

    let mut store = ReplayStore::new(pipeline.buffers, n_uav, spec.learner.buffer_capacity);
    let online = OnlineConfig {
        episodes: spec.episodes,
        layout_seed: seeds.layout,
        fading_seed: seeds.online_fading,
    };
    let every = spec.checkpoint_every;
    let out_dir = spec.out_dir.clone();
    let metrics = online_adapt(&mut env, &mut agents, &mut store, &online, |m, agents| {
        log::debug!("{method} seed {seed} episode {}: reward {:.3}", m.episode, m.mean_reward);
        if every > 0 && (m.episode + 1) % every == 0 {
            let p = checkpoint_path(&out_dir, method, seed, n_uav, &format!("ep{}", m.episode + 1));
            std::fs::create_dir_all(p.parent().unwrap())?;
            save_agents(&p, agents)?;
        }
        Ok(())
    })?;
    if pipeline.buffers == crate::learner::BufferMode::PerAgent && store.cross_reads() != 0 {
        return Err(Error::InvalidState("independent learners read another agent's buffer".into()));
    }
    let p = checkpoint_path(&spec.out_dir, method, seed, n_uav, "final");
    std::fs::create_dir_all(p.parent().unwrap())?;
    save_agents(&p, &agents)?;

    Ok(CellResult {
        rows: metrics.iter().map(|m| to_row(method, seed, n_uav, m)).collect(),
        agents,
        distill_agreement,
    })
}

/// All cells of `spec`, methods outermost; writes the metrics file and its
/// timing sidecar into `spec.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MetricsRow>> {
    spec.validate()?;
    let started = Instant::now();
    let mut rows = Vec::new();
    for &method in &spec.methods {
        for &seed in &spec.seeds {
            let cell = run_cell(spec, method, seed, None)?;
            log::info!("{method} seed {seed}: {} episodes done ({:.1}s so far)", cell.rows.len(), started.elapsed().as_secs_f64());
            rows.extend(cell.rows);
        }
    }
    std::fs::create_dir_all(&spec.out_dir)?;
    write_metrics(&spec.out_dir.join(METRICS_FILE), &rows)?;
    write_timing(&spec.out_dir.join(TIMING_FILE), &rows)?;
    Ok(rows)
}

/// Reruns `spec` for each fleet size. UAV starts are reset to the default
/// ring and, when the spec has heterogeneity ranges, coverage and capacity
/// are resampled per seed for the new size.
pub fn scaling_sweep(spec: &ExperimentSpec, n_uav_list: &[usize]) -> Result<Vec<MetricsRow>> {
    if n_uav_list.is_empty() {
        return Err(Error::config("n_uav", "sweep needs at least one fleet size"));
    }
    let mut rows = Vec::new();
    for &n in n_uav_list {
        let mut s = spec.clone();
        s.scenario.n_uav = n;
        s.scenario.layout.uav_init.clear();
        // listed values are cycled to the new size; heterogeneity ranges,
        // if any, override them per seed
        let cr = &spec.scenario.coverage_range;
        let ns = &spec.scenario.service_capacity;
        s.scenario.coverage_range = (0..n).map(|k| cr[k % cr.len()]).collect();
        s.scenario.service_capacity = (0..n).map(|k| ns[k % ns.len()]).collect();
        s.out_dir = spec.out_dir.join(format!("n{n}"));
        s.validate()?;
        for &method in &s.methods {
            for &seed in &s.seeds {
                rows.extend(run_cell(&s, method, seed, None)?.rows);
            }
        }
    }
    std::fs::create_dir_all(&spec.out_dir)?;
    write_metrics(&spec.out_dir.join(METRICS_FILE), &rows)?;
    write_timing(&spec.out_dir.join(TIMING_FILE), &rows)?;
    Ok(rows)
}

/// Greedy rollouts of trained agents with a held-out fading stream.
pub fn evaluate(env: &mut Env, agents: &[Agent], episodes: usize, layout_seed: u64, fading_seed: u64) -> Result<Vec<EpisodeMetrics>> {
    let mut out = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let started = Instant::now();
        let mut obs = env.reset_with(layout_seed, crate::channel::splitmix(fading_seed ^ episode as u64), episode);
        let mut m = EpisodeMetrics {
            episode,
            mean_reward: 0.0,
            cumulative_f1: 0.0,
            cumulative_energy: 0.0,
            collisions: 0,
            boundary_violations: 0,
            s2dc_iterations_mean: 0.0,
            updates: 0,
            wall_time_s: 0.0,
        };
        let mut slots = 0;
        loop {
            let actions: Vec<usize> = agents.iter().zip(&obs).map(|(a, o)| a.greedy(o)).collect();
            let step = env.step(&actions)?;
            m.mean_reward += step.transitions.iter().map(|t| t.reward).sum::<f64>() / agents.len() as f64;
            m.cumulative_f1 += step.info.report.f1;
            m.cumulative_energy += step.info.energy.iter().sum::<f64>();
            m.collisions += step.info.collisions.len();
            m.boundary_violations += step.info.boundary.iter().filter(|&&b| b).count();
            m.s2dc_iterations_mean += step.info.s2dc_iterations as f64;
            slots += 1;
            let done = step.transitions.iter().any(|t| t.done);
            obs = step.transitions.into_iter().map(|t| t.next_obs).collect();
            if done {
                break;
            }
        }
        m.s2dc_iterations_mean /= slots as f64;
        m.wall_time_s = started.elapsed().as_secs_f64();
        out.push(m);
    }
    Ok(out)
}

/// One episode driven by an expert provider; returns its transitions.
pub fn simulate(env: &mut Env, provider: &mut dyn ExpertProvider, layout_seed: u64, fading_seed: u64) -> Result<Vec<Transition>> {
    let cfg = CollectConfig {
        episodes: 1,
        seed: fading_seed,
        layout_seed,
        start_jitter: 0.0,
        ..CollectConfig::default()
    };
    collect_dataset(provider, env, &cfg)
}

/// Mean episode reward over the last `n` episodes of one cell.
pub fn final_mean(rows: &[MetricsRow], method: &str, seed: u64, n: usize) -> Option<f64> {
    let mut curve: Vec<&MetricsRow> = rows.iter().filter(|r| r.method == method && r.seed == seed).collect();
    curve.sort_by_key(|r| r.episode);
    let tail = &curve[curve.len().saturating_sub(n)..];
    (!tail.is_empty()).then(|| tail.iter().map(|r| r.mean_reward).sum::<f64>() / tail.len() as f64)
}
