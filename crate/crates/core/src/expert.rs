//! Expert policies for building the distillation dataset: a scripted
//! heuristic and a chat-completion client with a regex answer parser.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde_json::json;

use crate::channel::splitmix;
use crate::env::{ActionSpec, Direction, Env, EnvSummary, Transition};
use crate::error::{Error, Result};
use crate::world::{clamp_to_area, Point2};

pub const DEFAULT_TEMPLATE: &str = include_str!("../prompts/expert_v1.txt");

/// Mobility indices for every UAV, plus whether the scripted fallback stood in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertDecision {
    pub actions: Vec<usize>,
    pub fallback: bool,
}

pub trait ExpertProvider {
    fn name(&self) -> &str;

    /// One mobility action index per UAV.
    fn act(&mut self, summary: &EnvSummary, spec: &ActionSpec) -> Result<ExpertDecision>;
}

/// Fraction of the shortfall `1.5·C_r − d` by which an Eve pushes a target.
pub const DEFAULT_REPULSION_GAIN: f64 = 0.5;

/// Where UAV `k` wants to go: the centroid of its claimed GTs pushed away
/// from nearby Eves. Claims are greedy in UAV order.
pub fn heuristic_targets(summary: &EnvSummary) -> Vec<Point2> {
    heuristic_targets_with(summary, DEFAULT_REPULSION_GAIN)
}

pub fn heuristic_targets_with(summary: &EnvSummary, repulsion_gain: f64) -> Vec<Point2> {
    let mut claimed = vec![false; summary.gts.len()];
    let mut targets = Vec::with_capacity(summary.uavs.len());
    for (k, &u) in summary.uavs.iter().enumerate() {
        let mut free: Vec<usize> = (0..summary.gts.len()).filter(|&i| !claimed[i]).collect();
        free.sort_by(|&a, &b| u.dist(summary.gts[a]).total_cmp(&u.dist(summary.gts[b])).then(a.cmp(&b)));
        free.truncate(summary.service_capacity[k]);
        if free.is_empty() {
            targets.push(u);
            continue;
        }
        for &i in &free {
            claimed[i] = true;
        }
        let n = free.len() as f64;
        let centroid = Point2::new(
            free.iter().map(|&i| summary.gts[i].x).sum::<f64>() / n,
            free.iter().map(|&i| summary.gts[i].y).sum::<f64>() / n,
        );
        let reach = 1.5 * summary.coverage_range[k];
        let mut push = Point2::new(0.0, 0.0);
        for &e in &summary.eves {
            let d = centroid.dist(e);
            if d >= reach {
                continue;
            }
            // away from the Eve; a collocated Eve pushes back toward the UAV
            let away = if d > 1e-9 {
                centroid - e
            } else if u.dist(e) > 1e-9 {
                u - e
            } else {
                Point2::new(1.0, 0.0)
            };
            let len = away.x.hypot(away.y);
            let mag = repulsion_gain * (reach - d);
            push = push + Point2::new(away.x / len * mag, away.y / len * mag);
        }
        targets.push(clamp_to_area(centroid + push, summary.area_side));
    }
    targets
}

/// Axis direction best aligned with `bearing` and the fastest ladder speed
/// that does not overshoot along that axis; "still" when even the slowest
/// non-zero speed would.
pub fn move_toward(bearing: Point2, spec: &ActionSpec, dt: f64) -> usize {
    let mut best = Direction::Right;
    let mut best_dot = f64::NEG_INFINITY;
    for d in Direction::MOVING {
        let (ux, uy) = d.unit();
        let dot = ux * bearing.x + uy * bearing.y;
        if dot > best_dot + 1e-12 {
            best = d;
            best_dot = dot;
        }
    }
    let level = (1..spec.ladder.len())
        .rev()
        .find(|&l| spec.ladder[l] * dt <= best_dot + 1e-9)
        .unwrap_or(0);
    spec.encode(best, level).expect("level within ladder")
}

/// Deterministic stand-in for the language-model expert.
#[derive(Debug, Clone)]
pub struct ScriptedExpert {
    pub repulsion_gain: f64,
}

impl Default for ScriptedExpert {
    fn default() -> Self {
        Self {
            repulsion_gain: DEFAULT_REPULSION_GAIN,
        }
    }
}

pub fn scripted_heuristic_act(summary: &EnvSummary, spec: &ActionSpec) -> Vec<usize> {
    scripted_act_with(summary, spec, DEFAULT_REPULSION_GAIN)
}

pub fn scripted_act_with(summary: &EnvSummary, spec: &ActionSpec, repulsion_gain: f64) -> Vec<usize> {
    heuristic_targets_with(summary, repulsion_gain)
        .into_iter()
        .zip(&summary.uavs)
        .map(|(target, &u)| move_toward(target - u, spec, summary.slot_duration))
        .collect()
}

impl ExpertProvider for ScriptedExpert {
    fn name(&self) -> &str {
        "scripted"
    }

    fn act(&mut self, summary: &EnvSummary, spec: &ActionSpec) -> Result<ExpertDecision> {
        Ok(ExpertDecision {
            actions: scripted_act_with(summary, spec, self.repulsion_gain),
            fallback: false,
        })
    }
}

fn fmt_point(p: Point2) -> String {
    format!("({:.1}, {:.1})", p.x, p.y)
}

fn action_catalog(spec: &ActionSpec) -> String {
    let mut s = String::from("Directions: right (+x), up (+y), left (-x), down (-y), still.\nSpeed levels:\n");
    for (l, v) in spec.ladder.iter().enumerate().skip(1) {
        let _ = writeln!(s, "- level {l}: {v:.2} m/s");
    }
    s.push_str("\"still\" hovers in place and takes no level.");
    s
}

/// Fills the prompt template. `history` holds earlier slots' joint actions
/// as mobility indices; an empty history omits the trajectory section.
pub fn build_prompt_with(template: &str, summary: &EnvSummary, history: &[Vec<usize>], spec: &ActionSpec) -> String {
    let mut uav_table = String::new();
    for (k, &u) in summary.uavs.iter().enumerate() {
        let _ = writeln!(
            uav_table,
            "- UAV {}: position {}, coverage {:.0} m, capacity {}",
            k + 1,
            fmt_point(u),
            summary.coverage_range[k],
            summary.service_capacity[k]
        );
    }
    let list = |pts: &[Point2], tag: &str| {
        let mut s = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let _ = writeln!(s, "- {tag} {}: {}", i + 1, fmt_point(p));
        }
        if s.is_empty() {
            s.push_str("- none\n");
        }
        s
    };
    let history_section = if history.is_empty() {
        String::new()
    } else {
        let mut s = String::from("\n## Trajectory so far\n");
        for (t, joint) in history.iter().enumerate() {
            let moves: Vec<String> = joint
                .iter()
                .enumerate()
                .map(|(k, &a)| match spec.decode(a) {
                    Ok(m) if m.direction == Direction::Still => format!("UAV {}: still", k + 1),
                    Ok(m) => format!("UAV {}: {}, level {}", k + 1, m.direction.name(), m.level),
                    Err(_) => format!("UAV {}: ?", k + 1),
                })
                .collect();
            let _ = writeln!(s, "- slot {t}: {}", moves.join("; "));
        }
        s
    };
    let schema: String = (1..=summary.uavs.len())
        .map(|k| format!("UAV {k}: <right|up|left|down|still>, level <1-{}>\n", spec.moving_levels()))
        .collect();
    let fields: [(&str, String); 13] = [
        ("n_uav", summary.uavs.len().to_string()),
        ("area_side", format!("{:.0}", summary.area_side)),
        ("altitude", format!("{:.0}", summary.altitude)),
        ("t", summary.t.to_string()),
        ("n_slots", summary.n_slots.to_string()),
        ("slot_duration", format!("{}", summary.slot_duration)),
        ("protection_distance", format!("{:.0}", summary.protection_distance)),
        ("uav_table", uav_table.trim_end().to_string()),
        ("gt_table", list(&summary.gts, "GT").trim_end().to_string()),
        ("eve_table", list(&summary.eves, "Eve").trim_end().to_string()),
        ("action_catalog", action_catalog(spec)),
        ("history_section", history_section),
        ("answer_schema", schema.trim_end().to_string()),
    ];
    let mut out = template.to_string();
    for (key, value) in fields {
        out = out.replace(&format!("{{{{{key}}}}}"), &value);
    }
    out
}

pub fn build_prompt(summary: &EnvSummary, history: &[Vec<usize>], spec: &ActionSpec) -> String {
    build_prompt_with(DEFAULT_TEMPLATE, summary, history, spec)
}

/// Extracts `UAV <n>: <direction>[, level <l>]` lines (UAVs numbered from 1).
pub fn parse_llm_action(text: &str, n_uav: usize, spec: &ActionSpec) -> Result<Vec<usize>> {
    let re = Regex::new(r"(?i)UAV\s*(\d+)\s*[:=-]\s*(right|up|left|down|still)\b(?:\s*,?\s*(?:level|lvl|speed level)\s*(\d+))?")
        .expect("static regex");
    let mut out: Vec<Option<usize>> = vec![None; n_uav];
    for cap in re.captures_iter(text) {
        let k: usize = cap[1].parse().map_err(|_| Error::Parse(format!("bad UAV number `{}`", &cap[1])))?;
        if k == 0 || k > n_uav {
            return Err(Error::Parse(format!("UAV {k} does not exist")));
        }
        if out[k - 1].is_some() {
            return Err(Error::Parse(format!("UAV {k} listed twice")));
        }
        let dir = Direction::parse(&cap[2]).expect("regex only matches known directions");
        let index = if dir == Direction::Still {
            0
        } else {
            let level: usize = cap
                .get(3)
                .ok_or_else(|| Error::Parse(format!("UAV {k} moves without a speed level")))?
                .as_str()
                .parse()
                .map_err(|_| Error::Parse(format!("UAV {k} has a bad level")))?;
            if level == 0 || level > spec.moving_levels() {
                return Err(Error::Parse(format!("UAV {k} level {level} out of range")));
            }
            spec.encode(dir, level)?
        };
        out[k - 1] = Some(index);
    }
    out.into_iter()
        .enumerate()
        .map(|(k, a)| a.ok_or_else(|| Error::Parse(format!("no action for UAV {}", k + 1))))
        .collect()
}

/// Endpoint settings for [`HttpExpert`].
#[derive(Debug, Clone)]
pub struct HttpExpertConfig {
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    /// Attempts per slot before the scripted fallback takes over.
    pub max_attempts: usize,
    pub template: String,
    /// Keeps raw answers for inspection.
    pub keep_raw: bool,
}

impl HttpExpertConfig {
    /// Reads `EXPERT_API_URL`, `EXPERT_API_KEY` and `EXPERT_MODEL`.
    pub fn from_env() -> Result<Self> {
        let url = std::env::var("EXPERT_API_URL")
            .map_err(|_| Error::Provider("EXPERT_API_URL is not set".into()))?;
        Ok(Self {
            url,
            api_key: std::env::var("EXPERT_API_KEY").ok(),
            model: std::env::var("EXPERT_MODEL").unwrap_or_else(|_| "default".into()),
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            template: DEFAULT_TEMPLATE.to_string(),
            keep_raw: false,
        })
    }
}

/// Chat-completion client queried at temperature 0.
pub struct HttpExpert {
    cfg: HttpExpertConfig,
    agent: ureq::Agent,
    history: Vec<Vec<usize>>,
    pub raw_log: Vec<String>,
}

impl HttpExpert {
    pub fn new(cfg: HttpExpertConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
        Self {
            cfg,
            agent,
            history: Vec::new(),
            raw_log: Vec::new(),
        }
    }

    fn complete(&self, prompt: &str) -> Result<String> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": 0.0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&self.cfg.url).set("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp: serde_json::Value = req
            .send_json(body)
            .map_err(|e| Error::Provider(e.to_string()))?
            .into_json()
            .map_err(|e| Error::Provider(format!("response is not JSON: {e}")))?;
        resp.pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| Error::Provider("response has no choices[0].message.content".into()))
    }
}

impl ExpertProvider for HttpExpert {
    fn name(&self) -> &str {
        "http"
    }

    /// Transport errors propagate; unparsable answers are retried and then
    /// replaced by the scripted heuristic.
    fn act(&mut self, summary: &EnvSummary, spec: &ActionSpec) -> Result<ExpertDecision> {
        if summary.t == 0 {
            self.history.clear();
        }
        let prompt = build_prompt_with(&self.cfg.template, summary, &self.history, spec);
        for attempt in 0..self.cfg.max_attempts.max(1) {
            let text = self.complete(&prompt)?;
            if self.cfg.keep_raw {
                self.raw_log.push(text.clone());
            }
            match parse_llm_action(&text, summary.uavs.len(), spec) {
                Ok(actions) => {
                    self.history.push(actions.clone());
                    return Ok(ExpertDecision { actions, fallback: false });
                }
                Err(e) => log::warn!("expert answer rejected (attempt {}): {e}", attempt + 1),
            }
        }
        let actions = scripted_heuristic_act(summary, spec);
        self.history.push(actions.clone());
        Ok(ExpertDecision { actions, fallback: true })
    }
}

/// Dataset collection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectConfig {
    pub episodes: usize,
    /// Base seed; episode `e` draws fading and start offsets from it.
    pub seed: u64,
    /// Seed of the ground layout (kept fixed across episodes).
    pub layout_seed: u64,
    /// Uniform start offset, as a fraction of the area side, applied from
    /// the second episode on so the dataset covers more than one trajectory.
    pub start_jitter: f64,
    /// Common/private split level used in power-split environments.
    pub split_level: usize,
    /// Episodes whose provider keeps failing are dropped after this many tries.
    pub max_episode_attempts: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            episodes: 10,
            seed: 0,
            layout_seed: 0,
            start_jitter: 0.25,
            split_level: 0,
            max_episode_attempts: 2,
        }
    }
}

pub fn episode_fading_seed(seed: u64, episode: usize) -> u64 {
    splitmix(splitmix(seed) ^ episode as u64)
}

fn jittered_starts(env: &Env, seed: u64, episode: usize, jitter: f64) -> Vec<Point2> {
    let side = env.config().area_side;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x7374_6172_74) ^ episode as u64);
    env.layout()
        .uavs
        .iter()
        .map(|&p| {
            let r = jitter * side;
            clamp_to_area(Point2::new(p.x + rng.gen_range(-r..=r), p.y + rng.gen_range(-r..=r)), side)
        })
        .collect()
}

fn run_expert_episode(env: &mut Env, provider: &mut dyn ExpertProvider, cfg: &CollectConfig, episode: usize) -> Result<Vec<Transition>> {
    env.reset_with(cfg.layout_seed, episode_fading_seed(cfg.seed, episode), episode);
    if episode > 0 && cfg.start_jitter > 0.0 {
        let starts = jittered_starts(env, cfg.seed, episode, cfg.start_jitter);
        env.set_positions(&starts)?;
    }
    let mut out = Vec::with_capacity(env.config().n_slots * env.n_agents());
    let split = cfg.split_level.min(env.mode().split_levels() - 1);
    loop {
        let decision = provider.act(&env.summary(), env.action_spec())?;
        let joint: Vec<usize> = decision.actions.iter().map(|&m| env.join_action(m, split)).collect();
        let step = env.step(&joint)?;
        let done = step.transitions.iter().any(|t| t.done);
        out.extend(step.transitions.into_iter().map(|mut t| {
            t.fallback = decision.fallback;
            t
        }));
        if done {
            break;
        }
    }
    Ok(out)
}

/// Rolls the expert through `cfg.episodes` episodes and records every agent's
/// transitions with rewards from the full environment pipeline.
pub fn collect_dataset(provider: &mut dyn ExpertProvider, env: &mut Env, cfg: &CollectConfig) -> Result<Vec<Transition>> {
    let mut records = Vec::new();
    for episode in 0..cfg.episodes {
        let mut last_err = None;
        for _ in 0..cfg.max_episode_attempts.max(1) {
            match run_expert_episode(env, provider, cfg, episode) {
                Ok(r) => {
                    records.extend(r);
                    last_err = None;
                    break;
                }
                Err(e @ Error::Provider(_)) => {
                    log::warn!("episode {episode}: {e}");
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(e) = last_err {
            log::warn!("episode {episode} excluded: {e}");
        }
    }
    Ok(records)
}

/// Records grouped by agent, in file order.
pub fn partition_by_agent(records: &[Transition], n_agents: usize) -> Result<Vec<Vec<Transition>>> {
    let mut parts = vec![Vec::new(); n_agents];
    for r in records {
        parts
            .get_mut(r.agent)
            .ok_or_else(|| Error::Dataset(format!("record for unknown agent {}", r.agent)))?
            .push(r.clone());
    }
    Ok(parts)
}

/// Checks action indices and observation lengths of loaded records.
pub fn validate_dataset(records: &[Transition], obs_dim: usize, n_actions: usize) -> Result<()> {
    for (n, r) in records.iter().enumerate() {
        if r.action >= n_actions {
            return Err(Error::Dataset(format!("record {n}: action {} out of range", r.action)));
        }
        if r.obs.len() != obs_dim || r.next_obs.len() != obs_dim {
            return Err(Error::Dataset(format!("record {n}: observation length mismatch")));
        }
        if !r.reward.is_finite() {
            return Err(Error::Dataset(format!("record {n}: non-finite reward")));
        }
    }
    Ok(())
}

pub fn load_dataset(path: &Path, obs_dim: usize, n_actions: usize) -> Result<Vec<Transition>> {
    let records = crate::env::read_transitions(path)?;
    validate_dataset(&records, obs_dim, n_actions)?;
    Ok(records)
}
