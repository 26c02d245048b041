//! Coverage and capacity-constrained GT scheduling.

use crate::channel::ChannelSet;
use crate::config::CoverageMetric;
use crate::world::Point2;

pub type BoolMatrix = Vec<Vec<bool>>;

/// Who covers whom and who serves whom in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationState {
    /// `cover_gt[k][i]`
    pub cover_gt: BoolMatrix,
    /// `cover_eve[k][e]`
    pub cover_eve: BoolMatrix,
    /// `schedule[k][i]`
    pub schedule: BoolMatrix,
}

impl AssociationState {
    pub fn n_uav(&self) -> usize {
        self.cover_gt.len()
    }

    /// GTs served by UAV `k`, ascending.
    pub fn served(&self, k: usize) -> Vec<usize> {
        row_indices(&self.schedule[k])
    }

    /// Eves inside UAV `k`'s coverage, ascending.
    pub fn eves_of(&self, k: usize) -> Vec<usize> {
        row_indices(&self.cover_eve[k])
    }

    pub fn serving_uav(&self, i: usize) -> Option<usize> {
        self.schedule.iter().position(|row| row[i])
    }

    /// Checks the scheduling invariants against capacities.
    pub fn check(&self, capacity: &[usize]) -> Result<(), String> {
        for (k, row) in self.schedule.iter().enumerate() {
            let load = row.iter().filter(|&&s| s).count();
            if load > capacity[k] {
                return Err(format!("UAV {k} serves {load} GTs, capacity {}", capacity[k]));
            }
            for (i, &s) in row.iter().enumerate() {
                if s && !self.cover_gt[k][i] {
                    return Err(format!("UAV {k} serves uncovered GT {i}"));
                }
            }
        }
        let n_gt = self.schedule.first().map_or(0, Vec::len);
        for i in 0..n_gt {
            let servers = self.schedule.iter().filter(|row| row[i]).count();
            if servers > 1 {
                return Err(format!("GT {i} served by {servers} UAVs"));
            }
        }
        Ok(())
    }
}

fn row_indices(row: &[bool]) -> Vec<usize> {
    row.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// `out[k][x]` is true when node `x` lies within `range[k]` of UAV `k`.
pub fn coverage_matrix(
    uavs: &[Point2],
    nodes: &[Point2],
    altitude: f64,
    range: &[f64],
    metric: CoverageMetric,
) -> BoolMatrix {
    uavs.iter()
        .zip(range)
        .map(|(&u, &r)| {
            nodes
                .iter()
                .map(|&n| {
                    let d = match metric {
                        CoverageMetric::Slant => u.slant_dist(n, altitude),
                        CoverageMetric::Horizontal => u.dist(n),
                    };
                    d <= r
                })
                .collect()
        })
        .collect()
}

/// Greedy global assignment by descending channel power.
///
/// Covered `(k, i)` pairs are visited in order of decreasing `‖h_{k,i}‖²`
/// (ties broken by lower `(k, i)`); a pair is taken when UAV `k` has spare
/// capacity and GT `i` is still free.
pub fn schedule_gts(gains: &[Vec<f64>], cover_gt: &BoolMatrix, capacity: &[usize]) -> BoolMatrix {
    let n_uav = cover_gt.len();
    let n_gt = cover_gt.first().map_or(0, Vec::len);
    let mut pairs: Vec<(usize, usize)> = (0..n_uav)
        .flat_map(|k| (0..n_gt).map(move |i| (k, i)))
        .filter(|&(k, i)| cover_gt[k][i])
        .collect();
    pairs.sort_by(|&(ka, ia), &(kb, ib)| {
        gains[kb][ib]
            .total_cmp(&gains[ka][ia])
            .then((ka, ia).cmp(&(kb, ib)))
    });
    let mut schedule = vec![vec![false; n_gt]; n_uav];
    let mut load = vec![0usize; n_uav];
    let mut taken = vec![false; n_gt];
    for (k, i) in pairs {
        if load[k] < capacity[k] && !taken[i] {
            schedule[k][i] = true;
            load[k] += 1;
            taken[i] = true;
        }
    }
    schedule
}

/// Channel power `‖h_{k,i}‖²` for every UAV-GT pair.
pub fn gt_gains(channels: &ChannelSet) -> Vec<Vec<f64>> {
    channels
        .gt
        .iter()
        .map(|row| row.iter().map(|h| h.norm_squared()).collect())
        .collect()
}

/// Per-UAV sets of Eves in coverage.
pub fn eavesdropper_sets(cover_eve: &BoolMatrix) -> Vec<Vec<usize>> {
    cover_eve.iter().map(|row| row_indices(row)).collect()
}

/// Coverage plus scheduling for one slot.
pub fn associate(
    uavs: &[Point2],
    gts: &[Point2],
    eves: &[Point2],
    altitude: f64,
    range: &[f64],
    capacity: &[usize],
    metric: CoverageMetric,
    channels: &ChannelSet,
) -> AssociationState {
    let cover_gt = coverage_matrix(uavs, gts, altitude, range, metric);
    let cover_eve = coverage_matrix(uavs, eves, altitude, range, metric);
    let schedule = schedule_gts(&gt_gains(channels), &cover_gt, capacity);
    AssociationState {
        cover_gt,
        cover_eve,
        schedule,
    }
}
