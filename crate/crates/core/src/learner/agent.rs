//! Independent discrete SAC agents: offline distillation from expert data and
//! online adaptation in the environment.

use std::time::Instant;

use ndarray::{Array2, Zip};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{Batch, Experience, ReplayStore};
use super::losses::{actor_loss, critic_loss, critic_target, cql_penalty_batch, log_softmax_rows, policy_probs, temperature_loss};
use super::net::{argmax, clip_grad_norm, soft_update, Adam, Mlp};
use crate::channel::splitmix;
use crate::env::{Env, Transition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub lr: f64,
    pub tau: f64,
    /// Weight of the conservative penalty during distillation.
    pub beta: f64,
    /// Target entropy as a fraction of log|A|.
    pub target_entropy_ratio: f64,
    pub batch_size: usize,
    pub distill_batch_size: usize,
    pub buffer_capacity: usize,
    pub grad_clip: f64,
    pub init_alpha: f64,
    pub learn_alpha: bool,
    /// Multiplies rewards before they reach the critics.
    pub reward_scale: f64,
    /// Gradient updates per agent per environment slot.
    pub updates_per_step: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256, 128],
            gamma: 0.99,
            lr: 5e-4,
            tau: 0.005,
            beta: 1.0,
            target_entropy_ratio: 0.6,
            batch_size: 512,
            distill_batch_size: 1024,
            buffer_capacity: 100_000,
            grad_clip: 10.0,
            init_alpha: 0.2,
            learn_alpha: true,
            reward_scale: 1.0,
            updates_per_step: 1,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| Err(Error::config(&format!("learner.{key}"), reason));
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden", "layer widths must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if !(self.lr > 0.0) {
            return bad("lr", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau", "must lie in [0, 1]");
        }
        if !(self.beta >= 0.0) {
            return bad("beta", "must be non-negative");
        }
        if self.batch_size == 0 || self.distill_batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity", "must be positive");
        }
        if !(self.init_alpha > 0.0) {
            return bad("init_alpha", "must be positive");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip", "must be positive");
        }
        if !(self.reward_scale > 0.0) {
            return bad("reward_scale", "must be positive");
        }
        Ok(())
    }
}

/// Losses of one gradient step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub cql: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub cfg: LearnerConfig,
    pub policy: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    pub log_alpha: f64,
    pub opt_policy: Adam,
    pub opt_q1: Adam,
    pub opt_q2: Adam,
    pub opt_alpha: Adam,
    pub rng: ChaCha8Rng,
    pub updates: u64,
}

impl Agent {
    pub fn new(id: usize, obs_dim: usize, n_actions: usize, cfg: &LearnerConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(id as u64 + 1)));
        let mut sizes = vec![obs_dim];
        sizes.extend(&cfg.hidden);
        sizes.push(n_actions);
        let policy = Mlp::new(&sizes, &mut rng);
        let q1 = Mlp::new(&sizes, &mut rng);
        let q2 = Mlp::new(&sizes, &mut rng);
        let n = policy.n_params();
        Self {
            id,
            opt_policy: Adam::new(n, cfg.lr),
            opt_q1: Adam::new(n, cfg.lr),
            opt_q2: Adam::new(n, cfg.lr),
            opt_alpha: Adam::new(1, cfg.lr),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            policy,
            q1,
            q2,
            log_alpha: cfg.init_alpha.ln(),
            cfg: cfg.clone(),
            rng,
            updates: 0,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn target_entropy(&self) -> f64 {
        self.cfg.target_entropy_ratio * (self.n_actions() as f64).ln()
    }

    pub fn probs(&self, obs: &[f64]) -> Vec<f64> {
        policy_probs(&self.policy.forward_row(obs))
    }

    pub fn greedy(&self, obs: &[f64]) -> usize {
        let logits = self.policy.forward_row(obs);
        argmax(ndarray::ArrayView1::from(&logits))
    }

    /// Draws from π(·|obs) with the agent's own generator.
    pub fn sample(&mut self, obs: &[f64]) -> usize {
        let p = self.probs(obs);
        WeightedIndex::new(&p).expect("finite probabilities").sample(&mut self.rng)
    }

    /// One critic/actor/temperature step plus target soft updates.
    /// `cql_weight` is β during distillation and 0 online.
    pub fn update(&mut self, batch: &Batch, cql_weight: f64) -> UpdateStats {
        let alpha = self.alpha();
        let rewards: Vec<f64> = batch.rewards.iter().map(|r| r * self.cfg.reward_scale).collect();

        let next_logp = log_softmax_rows(&self.policy.forward(&batch.next_obs));
        let y = critic_target(
            &rewards,
            &batch.dones,
            &next_logp,
            &self.q1_target.forward(&batch.next_obs),
            &self.q2_target.forward(&batch.next_obs),
            alpha,
            self.cfg.gamma,
        );

        let mut stats = UpdateStats::default();
        for which in 0..2 {
            let (net, opt) = if which == 0 {
                (&mut self.q1, &mut self.opt_q1)
            } else {
                (&mut self.q2, &mut self.opt_q2)
            };
            let mut c_loss = 0.0;
            let mut c_cql = 0.0;
            let (_, mut grad) = net.gradient(&batch.obs, |q| {
                let (l, mut g) = critic_loss(q, &batch.actions, &y);
                c_loss = l;
                if cql_weight > 0.0 {
                    let (p, gp) = cql_penalty_batch(q, &batch.actions);
                    c_cql = p;
                    g.scaled_add(cql_weight, &gp);
                }
                (l, g)
            });
            clip_grad_norm(&mut grad, self.cfg.grad_clip);
            opt.step(&mut net.params, &grad);
            stats.critic_loss += 0.5 * c_loss;
            stats.cql += 0.5 * c_cql;
        }

        let q1 = self.q1.forward(&batch.obs);
        let q2 = self.q2.forward(&batch.obs);
        let mut q_min = q1;
        Zip::from(&mut q_min).and(&q2).for_each(|a, &b| *a = a.min(b));
        let mut probs = Array2::zeros(q_min.raw_dim());
        let (a_loss, mut grad) = self.policy.gradient(&batch.obs, |logits| {
            probs = log_softmax_rows(logits).mapv(f64::exp);
            actor_loss(logits, &q_min, alpha)
        });
        clip_grad_norm(&mut grad, self.cfg.grad_clip);
        self.opt_policy.step(&mut self.policy.params, &grad);
        stats.actor_loss = a_loss;
        stats.entropy = probs
            .rows()
            .into_iter()
            .map(|r| super::losses::policy_entropy(r.as_slice().expect("contiguous")))
            .sum::<f64>()
            / batch.len().max(1) as f64;

        if self.cfg.learn_alpha {
            let (_, g) = temperature_loss(self.log_alpha, &probs, self.target_entropy());
            let mut la = [self.log_alpha];
            self.opt_alpha.step(&mut la, &[g]);
            self.log_alpha = la[0];
        }
        stats.alpha = self.alpha();

        soft_update(&mut self.q1_target, &self.q1, self.cfg.tau);
        soft_update(&mut self.q2_target, &self.q2, self.cfg.tau);
        self.updates += 1;
        stats
    }
}

pub fn make_agents(n_agents: usize, obs_dim: usize, n_actions: usize, cfg: &LearnerConfig, seed: u64) -> Vec<Agent> {
    (0..n_agents).map(|k| Agent::new(k, obs_dim, n_actions, cfg, seed)).collect()
}

/// Offline distillation: each update, every agent samples a mini-batch from
/// its own share of the expert data and takes a conservative SAC step.
/// Returns the per-update mean statistics across agents.
pub fn distill(records: &[Transition], agents: &mut [Agent], n_updates: usize) -> Result<Vec<UpdateStats>> {
    let n = agents.len();
    let parts = crate::expert::partition_by_agent(records, n)?;
    let parts: Vec<Vec<Experience>> = parts.iter().map(|p| p.iter().map(Experience::from).collect()).collect();
    for (k, p) in parts.iter().enumerate() {
        if p.is_empty() {
            return Err(Error::Dataset(format!("no expert records for agent {k}")));
        }
        if p.iter().any(|e| e.obs.len() != agents[k].obs_dim() || e.action >= agents[k].n_actions()) {
            return Err(Error::Dataset(format!("records for agent {k} do not fit its networks")));
        }
    }
    let mut history = Vec::with_capacity(n_updates);
    for _ in 0..n_updates {
        let mut mean = UpdateStats::default();
        for (agent, part) in agents.iter_mut().zip(&parts) {
            let picks: Vec<&Experience> = (0..agent.cfg.distill_batch_size)
                .map(|_| &part[rand::Rng::gen_range(&mut agent.rng, 0..part.len())])
                .collect();
            let batch = Batch::from_experiences(&picks);
            let beta = agent.cfg.beta;
            let s = agent.update(&batch, beta);
            mean.critic_loss += s.critic_loss / n as f64;
            mean.cql += s.cql / n as f64;
            mean.actor_loss += s.actor_loss / n as f64;
            mean.alpha += s.alpha / n as f64;
            mean.entropy += s.entropy / n as f64;
        }
        history.push(mean);
    }
    Ok(history)
}

/// Fraction of records whose greedy action equals the recorded one.
pub fn greedy_agreement(records: &[Transition], agents: &[Agent]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let hits = records.iter().filter(|r| agents[r.agent].greedy(&r.obs) == r.action).count();
    hits as f64 / records.len() as f64
}

/// Mean `logΣexp Q − Q(expert)` of the first critic over `records`.
pub fn conservative_gap(records: &[Transition], agents: &[Agent]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records
        .iter()
        .map(|r| super::losses::cql_penalty(&agents[r.agent].q1.forward_row(&r.obs), r.action))
        .sum::<f64>()
        / records.len() as f64
}

/// Episode seeding for online runs: a fixed ground layout with fresh fading
/// every episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OnlineConfig {
    pub episodes: usize,
    pub layout_seed: u64,
    pub fading_seed: u64,
}

/// Per-episode aggregates of an online run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    /// Episode return averaged over agents.
    pub mean_reward: f64,
    /// Sum over slots of the worst-case secrecy rate.
    pub cumulative_f1: f64,
    /// Fleet propulsion energy, joules.
    pub cumulative_energy: f64,
    pub collisions: usize,
    pub boundary_violations: usize,
    pub s2dc_iterations_mean: f64,
    pub updates: u64,
    pub wall_time_s: f64,
}

/// Rolls `cfg.episodes` episodes, sampling actions from each agent's policy,
/// storing transitions in `store` and updating every agent whose visible
/// buffer holds at least one batch. `on_episode` sees each finished episode.
pub fn online_adapt(
    env: &mut Env,
    agents: &mut [Agent],
    store: &mut ReplayStore,
    cfg: &OnlineConfig,
    mut on_episode: impl FnMut(&EpisodeMetrics, &[Agent]) -> Result<()>,
) -> Result<Vec<EpisodeMetrics>> {
    if agents.len() != env.n_agents() {
        return Err(Error::InvalidState(format!(
            "{} agents for {} UAVs",
            agents.len(),
            env.n_agents()
        )));
    }
    let mut out = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let started = Instant::now();
        let mut obs = env.reset_with(cfg.layout_seed, splitmix(cfg.fading_seed ^ splitmix(episode as u64)), episode);
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
        let mut slots = 0usize;
        loop {
            let actions: Vec<usize> = agents.iter_mut().zip(&obs).map(|(a, o)| a.sample(o)).collect();
            let step = env.step(&actions)?;
            let done = step.transitions.iter().any(|t| t.done);
            for t in &step.transitions {
                m.mean_reward += t.reward / agents.len() as f64;
                store.push(Experience::from(t));
            }
            m.cumulative_f1 += step.info.report.f1;
            m.cumulative_energy += step.info.energy.iter().sum::<f64>();
            m.collisions += step.info.collisions.len();
            m.boundary_violations += step.info.boundary.iter().filter(|&&b| b).count();
            m.s2dc_iterations_mean += step.info.s2dc_iterations as f64;
            slots += 1;
            for k in 0..agents.len() {
                let bs = agents[k].cfg.batch_size;
                if store.len_for(k) < bs {
                    continue;
                }
                for _ in 0..agents[k].cfg.updates_per_step {
                    let batch = store.sample(k, bs, &mut agents[k].rng);
                    agents[k].update(&batch, 0.0);
                    m.updates += 1;
                }
            }
            obs = step.transitions.iter().map(|t| t.next_obs.clone()).collect();
            if done {
                break;
            }
        }
        m.s2dc_iterations_mean /= slots.max(1) as f64;
        m.wall_time_s = started.elapsed().as_secs_f64();
        on_episode(&m, agents)?;
        out.push(m);
    }
    Ok(out)
}
