//! Replay storage: one ring buffer per agent, or one shared by all.

use ndarray::Array2;
use rand::Rng;

use super::net::stack_rows;
use crate::env::Transition;

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub agent: usize,
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

impl From<&Transition> for Experience {
    fn from(t: &Transition) -> Self {
        Self {
            agent: t.agent,
            obs: t.obs.clone(),
            action: t.action,
            reward: t.reward,
            next_obs: t.next_obs.clone(),
            done: t.done,
        }
    }
}

/// Fixed-capacity FIFO; the oldest entry is overwritten when full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            capacity,
            items: Vec::new(),
            next: 0,
        }
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Experience {
        &self.items[i]
    }
}

/// Column-stacked mini-batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_obs: Array2<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_experiences(items: &[&Experience]) -> Self {
        let width = items.first().map_or(0, |e| e.obs.len());
        let obs: Vec<&[f64]> = items.iter().map(|e| e.obs.as_slice()).collect();
        let next: Vec<&[f64]> = items.iter().map(|e| e.next_obs.as_slice()).collect();
        Self {
            obs: stack_rows(&obs, width),
            actions: items.iter().map(|e| e.action).collect(),
            rewards: items.iter().map(|e| e.reward).collect(),
            next_obs: stack_rows(&next, width),
            dones: items.iter().map(|e| e.done).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferMode {
    /// Independent learners: agent k only ever reads buffer k.
    PerAgent,
    /// One pool fed and read by every agent.
    Shared,
}

/// All replay memory of a fleet. Every sampled record is tallied in
/// `access[reader][owner]`, so isolation can be checked after the fact.
#[derive(Debug, Clone)]
pub struct ReplayStore {
    mode: BufferMode,
    buffers: Vec<ReplayBuffer>,
    access: Vec<Vec<u64>>,
}

impl ReplayStore {
    pub fn new(mode: BufferMode, n_agents: usize, capacity: usize) -> Self {
        let n_buffers = match mode {
            BufferMode::PerAgent => n_agents,
            BufferMode::Shared => 1,
        };
        Self {
            mode,
            buffers: (0..n_buffers).map(|_| ReplayBuffer::new(capacity)).collect(),
            access: vec![vec![0; n_agents]; n_agents],
        }
    }

    pub fn mode(&self) -> BufferMode {
        self.mode
    }

    fn slot(&self, agent: usize) -> usize {
        match self.mode {
            BufferMode::PerAgent => agent,
            BufferMode::Shared => 0,
        }
    }

    pub fn push(&mut self, e: Experience) {
        let s = self.slot(e.agent);
        self.buffers[s].push(e);
    }

    /// Records visible to `reader`.
    pub fn len_for(&self, reader: usize) -> usize {
        self.buffers[self.slot(reader)].len()
    }

    /// Uniform sample with replacement from the buffer `reader` may use.
    pub fn sample<R: Rng>(&mut self, reader: usize, n: usize, rng: &mut R) -> Batch {
        let buf = &self.buffers[self.slot(reader)];
        assert!(!buf.is_empty(), "sampling an empty buffer");
        let picks: Vec<&Experience> = (0..n).map(|_| buf.get(rng.gen_range(0..buf.len()))).collect();
        for e in &picks {
            self.access[reader][e.agent] += 1;
        }
        Batch::from_experiences(&picks)
    }

    /// `access[reader][owner]`: records of `owner` sampled by `reader`.
    pub fn access(&self) -> &[Vec<u64>] {
        &self.access
    }

    /// Records sampled by an agent other than the one that produced them.
    pub fn cross_reads(&self) -> u64 {
        let n = self.access.len();
        (0..n).flat_map(|r| (0..n).map(move |o| (r, o))).filter(|(r, o)| r != o).map(|(r, o)| self.access[r][o]).sum()
    }
}
