//! The multi-agent MDP: observations, discrete actions, rewards and slot
//! stepping through association, channels, precoding and rates.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::association::{associate, AssociationState};
use crate::channel::{splitmix, CVector, ChannelSet};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::rsma::{rates_report, PrecoderSet, RatesReport, SlotLinks, UavPrecoder};
use crate::s2dc::s2dc_solve;
use crate::world::{boundary_violation, clamp_to_area, collision_pairs, step_kinematics, FleetState, Point2};

/// `{0} ∪ {v_min (v_max/v_min)^{l/(L−2)} : l = 0..L−2}`.
pub fn velocity_ladder(v_min: f64, v_max: f64, levels: usize) -> Result<Vec<f64>> {
    if levels < 3 {
        return Err(Error::config("speed_levels", "need at least 3 levels"));
    }
    if !(v_min > 0.0 && v_max > v_min) {
        return Err(Error::config("v_min", "need 0 < v_min < v_max"));
    }
    let n = (levels - 2) as f64;
    let mut ladder = vec![0.0];
    ladder.extend((0..=levels - 2).map(|l| v_min * (v_max / v_min).powf(l as f64 / n)));
    // pin the top rung so rounding never exceeds v_max
    *ladder.last_mut().expect("non-empty") = v_max;
    Ok(ladder)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Up,
    Left,
    Down,
    Still,
}

impl Direction {
    pub const MOVING: [Direction; 4] = [Direction::Right, Direction::Up, Direction::Left, Direction::Down];

    pub fn heading(self) -> f64 {
        match self {
            Direction::Right | Direction::Still => 0.0,
            Direction::Up => FRAC_PI_2,
            Direction::Left => PI,
            Direction::Down => 3.0 * FRAC_PI_2,
        }
    }

    pub fn unit(self) -> (f64, f64) {
        match self {
            Direction::Right => (1.0, 0.0),
            Direction::Up => (0.0, 1.0),
            Direction::Left => (-1.0, 0.0),
            Direction::Down => (0.0, -1.0),
            Direction::Still => (0.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Right => "right",
            Direction::Up => "up",
            Direction::Left => "left",
            Direction::Down => "down",
            Direction::Still => "still",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "right" => Some(Direction::Right),
            "up" => Some(Direction::Up),
            "left" => Some(Direction::Left),
            "down" => Some(Direction::Down),
            "still" => Some(Direction::Still),
            _ => None,
        }
    }
}

/// Mobility actions: index 0 is "still"; then, for each moving direction in
/// [`Direction::MOVING`] order, one index per non-zero ladder level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub ladder: Vec<f64>,
}

/// A decoded mobility action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveAction {
    pub direction: Direction,
    /// Ladder level, 0 for still.
    pub level: usize,
    pub speed: f64,
    pub heading: f64,
}

impl ActionSpec {
    pub fn new(v_min: f64, v_max: f64, levels: usize) -> Result<Self> {
        Ok(Self {
            ladder: velocity_ladder(v_min, v_max, levels)?,
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Self::new(cfg.v_min, cfg.v_max, cfg.speed_levels)
    }

    pub fn moving_levels(&self) -> usize {
        self.ladder.len() - 1
    }

    pub fn size(&self) -> usize {
        1 + 4 * self.moving_levels()
    }

    pub fn decode(&self, index: usize) -> Result<MoveAction> {
        if index >= self.size() {
            return Err(Error::ActionOutOfRange {
                index,
                size: self.size(),
            });
        }
        if index == 0 {
            return Ok(MoveAction {
                direction: Direction::Still,
                level: 0,
                speed: 0.0,
                heading: 0.0,
            });
        }
        let j = index - 1;
        let direction = Direction::MOVING[j / self.moving_levels()];
        let level = 1 + j % self.moving_levels();
        Ok(MoveAction {
            direction,
            level,
            speed: self.ladder[level],
            heading: direction.heading(),
        })
    }

    /// Inverse of [`decode`](Self::decode). "Still" ignores the level.
    pub fn encode(&self, direction: Direction, level: usize) -> Result<usize> {
        if direction == Direction::Still || level == 0 {
            return Ok(0);
        }
        if level > self.moving_levels() {
            return Err(Error::ActionOutOfRange {
                index: level,
                size: self.ladder.len(),
            });
        }
        let d = Direction::MOVING.iter().position(|&x| x == direction).expect("moving direction");
        Ok(1 + d * self.moving_levels() + level - 1)
    }
}

/// How the serving precoders of a slot are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecodingMode {
    /// Secrecy precoding solved every slot.
    S2dc,
    /// Agents pick a common/private power split alongside their move;
    /// directions are maximum-ratio toward the served GTs.
    PowerSplit { levels: usize },
}

impl PrecodingMode {
    pub fn split_levels(self) -> usize {
        match self {
            PrecodingMode::S2dc => 1,
            PrecodingMode::PowerSplit { levels } => levels,
        }
    }
}

/// Common-stream power fraction for split level `s` of `levels`.
pub fn split_fraction(s: usize, levels: usize) -> f64 {
    if levels <= 1 {
        0.5
    } else {
        s as f64 / (levels - 1) as f64
    }
}

fn unit(v: &CVector) -> CVector {
    let n = v.norm();
    if n > 0.0 {
        v.map(|z| z / n)
    } else {
        let mut e = CVector::zeros(v.len());
        e[0] = 1.0.into();
        e
    }
}

/// Full-power maximum-ratio precoders with the given common fraction per UAV.
pub fn power_split_precoders(channels: &ChannelSet, assoc: &AssociationState, m: usize, p_max: f64, common_fraction: &[f64]) -> PrecoderSet {
    let uavs = (0..assoc.n_uav())
        .map(|k| {
            let served = assoc.served(k);
            if served.is_empty() {
                return UavPrecoder::zeros(m, &[]);
            }
            let dirs: Vec<CVector> = served.iter().map(|&i| unit(&channels.gt[k][i])).collect();
            let mut sum = CVector::zeros(m);
            for d in &dirs {
                sum += d;
            }
            let c = common_fraction[k];
            let pc = (p_max * c).sqrt();
            let pp = (p_max * (1.0 - c) / dirs.len() as f64).sqrt();
            UavPrecoder {
                common: unit(&sum).map(|z| z * pc),
                private: served.iter().zip(&dirs).map(|(&i, d)| (i, d.map(|z| z * pp))).collect(),
            }
        })
        .collect();
    PrecoderSet { uavs }
}

/// One agent's experience record; also the dataset line format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub agent: usize,
    pub episode: usize,
    pub t: usize,
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    /// Set when the expert's answer was replaced by the scripted fallback.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

pub fn write_transitions(path: &Path, records: &[Transition]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_transitions(path: &Path) -> Result<Vec<Transition>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Dataset(format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

/// Relative positions `u_k − x` for other UAVs, GTs and Eves, divided by `D`.
pub fn observe(k: usize, uavs: &[Point2], gts: &[Point2], eves: &[Point2], area_side: f64) -> Vec<f64> {
    let me = uavs[k];
    let others = uavs.iter().enumerate().filter(|&(l, _)| l != k).map(|(_, &p)| p);
    others
        .chain(gts.iter().copied())
        .chain(eves.iter().copied())
        .flat_map(|p| [(me.x - p.x) / area_side, (me.y - p.y) / area_side])
        .collect()
}

/// `(w_sr r_sr + w_ec r_ec) η_loc − η_col p_col`.
pub fn reward(r_sr: f64, r_ec: f64, w_sr: f64, w_ec: f64, in_bounds: bool, collided: bool, p_col: f64) -> f64 {
    let gate = if in_bounds { 1.0 } else { 0.0 };
    let col = if collided { 1.0 } else { 0.0 };
    (w_sr * r_sr + w_ec * r_ec) * gate - col * p_col
}

/// Ground layout of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub gts: Vec<Point2>,
    pub eves: Vec<Point2>,
    pub uavs: Vec<Point2>,
}

/// GTs around hot spots (plus an optional uniform share), Eves uniform,
/// UAVs at their configured starts or on a ring around the centre.
pub fn sample_layout(cfg: &ScenarioConfig, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x6c61_796f_7574));
    let d = cfg.area_side;
    let uniform = |rng: &mut ChaCha8Rng| Point2::new(rng.gen_range(0.0..=d), rng.gen_range(0.0..=d));
    let n_hot = cfg.layout.hotspots.max(1);
    let centres: Vec<Point2> = (0..n_hot)
        .map(|_| Point2::new(rng.gen_range(0.1 * d..=0.9 * d), rng.gen_range(0.1 * d..=0.9 * d)))
        .collect();
    let n_scatter = (cfg.layout.scatter_fraction * cfg.n_gt as f64).round() as usize;
    let spread = Normal::new(0.0, cfg.layout.hotspot_std.max(0.0)).expect("finite std");
    let gts = (0..cfg.n_gt)
        .map(|i| {
            if i < n_scatter {
                uniform(&mut rng)
            } else {
                let c = centres[(i - n_scatter) % n_hot];
                clamp_to_area(Point2::new(c.x + spread.sample(&mut rng), c.y + spread.sample(&mut rng)), d)
            }
        })
        .collect();
    let eves = (0..cfg.n_eve).map(|_| uniform(&mut rng)).collect();
    let uavs = if cfg.layout.uav_init.len() == cfg.n_uav {
        cfg.layout.uav_init.iter().map(|&p| p.into()).collect()
    } else {
        (0..cfg.n_uav)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / cfg.n_uav as f64;
                Point2::new(d / 2.0 + d / 4.0 * a.cos(), d / 2.0 + d / 4.0 * a.sin())
            })
            .collect()
    };
    Layout { gts, eves, uavs }
}

/// Everything an expert needs to act.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSummary {
    pub area_side: f64,
    pub altitude: f64,
    pub t: usize,
    pub n_slots: usize,
    pub slot_duration: f64,
    pub uavs: Vec<Point2>,
    pub gts: Vec<Point2>,
    pub eves: Vec<Point2>,
    pub coverage_range: Vec<f64>,
    pub service_capacity: Vec<usize>,
    pub previous_actions: Vec<Option<usize>>,
    pub ladder: Vec<f64>,
    pub protection_distance: f64,
}

/// Per-slot diagnostics besides the transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInfo {
    pub report: RatesReport,
    pub precoders: PrecoderSet,
    pub assoc: AssociationState,
    /// Propulsion energy of each UAV this slot, joules.
    pub energy: Vec<f64>,
    pub collisions: Vec<(usize, usize)>,
    pub boundary: Vec<bool>,
    pub r_sr: f64,
    pub r_ec: f64,
    pub s2dc_iterations: usize,
    pub s2dc_converged: bool,
}

pub struct StepResult {
    pub transitions: Vec<Transition>,
    pub info: SlotInfo,
}

pub struct Env {
    cfg: ScenarioConfig,
    spec: ActionSpec,
    mode: PrecodingMode,
    noise: f64,
    layout: Layout,
    fleet: FleetState,
    fading_seed: u64,
    episode: usize,
    previous: Vec<Option<usize>>,
}

impl Env {
    pub fn new(cfg: ScenarioConfig, mode: PrecodingMode) -> Result<Self> {
        cfg.validate()?;
        if let PrecodingMode::PowerSplit { levels } = mode {
            if levels == 0 {
                return Err(Error::config("power_split_levels", "must be positive"));
            }
        }
        let spec = ActionSpec::from_config(&cfg)?;
        let layout = sample_layout(&cfg, cfg.rng_seed);
        let fleet = FleetState::new(layout.uavs.clone(), cfg.h_uav);
        Ok(Self {
            noise: cfg.noise_power(),
            previous: vec![None; cfg.n_uav],
            spec,
            mode,
            layout,
            fleet,
            fading_seed: cfg.rng_seed,
            episode: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn action_spec(&self) -> &ActionSpec {
        &self.spec
    }

    pub fn mode(&self) -> PrecodingMode {
        self.mode
    }

    /// Per-agent action count (mobility × power-split levels).
    pub fn n_actions(&self) -> usize {
        self.spec.size() * self.mode.split_levels()
    }

    pub fn obs_dim(&self) -> usize {
        2 * (self.cfg.n_uav - 1 + self.cfg.n_gt + self.cfg.n_eve)
    }

    pub fn n_agents(&self) -> usize {
        self.cfg.n_uav
    }

    pub fn t(&self) -> usize {
        self.fleet.t
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn positions(&self) -> &[Point2] {
        &self.fleet.positions
    }

    /// `(mobility index, split level)` of a per-agent action index.
    pub fn split_action(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.n_actions() {
            return Err(Error::ActionOutOfRange {
                index,
                size: self.n_actions(),
            });
        }
        let levels = self.mode.split_levels();
        Ok((index / levels, index % levels))
    }

    /// Per-agent action index from a mobility index and split level.
    pub fn join_action(&self, mobility: usize, split: usize) -> usize {
        mobility * self.mode.split_levels() + split
    }

    /// Re-places ground nodes and UAVs from `seed`; fading also keyed by `seed`.
    pub fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        self.reset_with(seed, seed, 0)
    }

    /// Layout from `layout_seed`, small-scale fading from `fading_seed`.
    pub fn reset_with(&mut self, layout_seed: u64, fading_seed: u64, episode: usize) -> Vec<Vec<f64>> {
        self.layout = sample_layout(&self.cfg, layout_seed);
        self.fleet = FleetState::new(self.layout.uavs.clone(), self.cfg.h_uav);
        self.fading_seed = fading_seed;
        self.episode = episode;
        self.previous = vec![None; self.cfg.n_uav];
        self.observations()
    }

    /// Overrides UAV start positions; only valid before the first step.
    pub fn set_positions(&mut self, positions: &[Point2]) -> Result<Vec<Vec<f64>>> {
        if self.fleet.t != 0 {
            return Err(Error::InvalidState("positions can only be set at slot 0".into()));
        }
        if positions.len() != self.cfg.n_uav {
            return Err(Error::InvalidState(format!(
                "expected {} positions, got {}",
                self.cfg.n_uav,
                positions.len()
            )));
        }
        self.fleet = FleetState::new(positions.to_vec(), self.cfg.h_uav);
        Ok(self.observations())
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.cfg.n_uav)
            .map(|k| observe(k, &self.fleet.positions, &self.layout.gts, &self.layout.eves, self.cfg.area_side))
            .collect()
    }

    pub fn summary(&self) -> EnvSummary {
        EnvSummary {
            area_side: self.cfg.area_side,
            altitude: self.cfg.h_uav,
            t: self.fleet.t,
            n_slots: self.cfg.n_slots,
            slot_duration: self.cfg.slot_duration,
            uavs: self.fleet.positions.clone(),
            gts: self.layout.gts.clone(),
            eves: self.layout.eves.clone(),
            coverage_range: self.cfg.coverage_range.clone(),
            service_capacity: self.cfg.service_capacity.clone(),
            previous_actions: self.previous.clone(),
            ladder: self.spec.ladder.clone(),
            protection_distance: self.cfg.protection_distance,
        }
    }

    /// Association, channels and precoders at the current positions.
    fn serve(&self, splits: &[usize]) -> Result<(AssociationState, ChannelSet, PrecoderSet, usize, bool)> {
        let cfg = &self.cfg;
        let uavs = &self.fleet.positions;
        let channels = ChannelSet::generate(uavs, &self.layout.gts, &self.layout.eves, cfg, self.fading_seed, self.fleet.t)?;
        let assoc = associate(
            uavs,
            &self.layout.gts,
            &self.layout.eves,
            cfg.h_uav,
            &cfg.coverage_range,
            &cfg.service_capacity,
            cfg.coverage_metric,
            &channels,
        );
        let (precoders, iterations, converged) = match self.mode {
            PrecodingMode::S2dc => {
                let links = SlotLinks::new(&channels, &assoc, self.noise);
                let out = s2dc_solve(&links, cfg.p_max, cfg.antennas, &cfg.s2dc)?;
                if !out.converged {
                    log::debug!("s2dc did not converge at t={}", self.fleet.t);
                }
                (out.precoders, out.iterations, out.converged)
            }
            PrecodingMode::PowerSplit { levels } => {
                let fractions: Vec<f64> = splits.iter().map(|&s| split_fraction(s, levels)).collect();
                (power_split_precoders(&channels, &assoc, cfg.antennas, cfg.p_max, &fractions), 0, true)
            }
        };
        Ok((assoc, channels, precoders, iterations, converged))
    }

    /// Advances one slot with one action index per agent.
    pub fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        let cfg = self.cfg.clone();
        if actions.len() != cfg.n_uav {
            return Err(Error::InvalidState(format!(
                "expected {} actions, got {}",
                cfg.n_uav,
                actions.len()
            )));
        }
        if self.fleet.t >= cfg.n_slots {
            return Err(Error::InvalidState("episode already finished; call reset".into()));
        }
        let obs = self.observations();
        let mut moves = Vec::with_capacity(actions.len());
        let mut splits = Vec::with_capacity(actions.len());
        for &a in actions {
            let (mobility, split) = self.split_action(a)?;
            moves.push(self.spec.decode(mobility)?);
            splits.push(split);
        }

        let mut boundary = Vec::with_capacity(cfg.n_uav);
        let mut energy = Vec::with_capacity(cfg.n_uav);
        for (k, mv) in moves.iter().enumerate() {
            let next = step_kinematics(self.fleet.positions[k], mv.speed * cfg.slot_duration, mv.heading);
            boundary.push(boundary_violation(next, cfg.area_side));
            self.fleet.positions[k] = clamp_to_area(next, cfg.area_side);
            energy.push(cfg.rotor.slot_energy(mv.speed, cfg.slot_duration));
        }
        let collisions = collision_pairs(&self.fleet, cfg.protection_distance);

        let (assoc, channels, precoders, s2dc_iterations, s2dc_converged) = self.serve(&splits)?;
        let links = SlotLinks::new(&channels, &assoc, self.noise);
        let report = rates_report(&links, &precoders);

        let r_sr = report.sum_secrecy;
        let r_ec = -energy.iter().sum::<f64>();
        let w_ec = cfg.energy_weight();
        self.fleet.t += 1;
        let done = self.fleet.t >= cfg.n_slots;
        let next_obs = self.observations();
        let transitions = (0..cfg.n_uav)
            .map(|k| {
                let collided = collisions.iter().any(|&(a, b)| a == k || b == k);
                Transition {
                    agent: k,
                    episode: self.episode,
                    t: self.fleet.t - 1,
                    obs: obs[k].clone(),
                    action: actions[k],
                    reward: reward(r_sr, r_ec, cfg.reward.w_sr, w_ec, !boundary[k], collided, cfg.reward.p_col),
                    next_obs: next_obs[k].clone(),
                    done,
                    fallback: false,
                }
            })
            .collect();
        self.previous = actions.iter().map(|&a| Some(a)).collect();
        Ok(StepResult {
            transitions,
            info: SlotInfo {
                report,
                precoders,
                assoc,
                energy,
                collisions,
                boundary,
                r_sr,
                r_ec,
                s2dc_iterations,
                s2dc_converged,
            },
        })
    }
}
