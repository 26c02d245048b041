//! Rate-splitting SINRs, rates and secrecy rates for one slot.
//!
//! Each UAV splits every served GT's message into one jointly encoded common
//! stream and one private stream per GT. GTs decode the common stream first
//! and remove it (SIC) before decoding their private stream; Eves cannot
//! remove it. Other UAVs interfere only at nodes they cover.

use serde::{Deserialize, Serialize};

use crate::association::AssociationState;
use crate::channel::{CVector, ChannelSet};

/// Precoders of one UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct UavPrecoder {
    pub common: CVector,
    /// `(gt, p)` for every served GT, ascending by GT.
    pub private: Vec<(usize, CVector)>,
}

impl UavPrecoder {
    pub fn zeros(m: usize, served: &[usize]) -> Self {
        Self {
            common: CVector::zeros(m),
            private: served.iter().map(|&i| (i, CVector::zeros(m))).collect(),
        }
    }

    /// `tr(P Pᴴ)`, the transmit power.
    pub fn power(&self) -> f64 {
        self.common.norm_squared() + self.private.iter().map(|(_, p)| p.norm_squared()).sum::<f64>()
    }

    pub fn private_for(&self, gt: usize) -> Option<&CVector> {
        self.private.iter().find(|(i, _)| *i == gt).map(|(_, p)| p)
    }

    /// `Σ_cols |hᴴ p|²`, total received power of all streams at `h`.
    pub fn total_gain(&self, h: &CVector) -> f64 {
        gain(h, &self.common) + self.private.iter().map(|(_, p)| gain(h, p)).sum::<f64>()
    }

    fn private_gain_excluding(&self, h: &CVector, skip: Option<usize>) -> f64 {
        self.private
            .iter()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, p)| gain(h, p))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            common: self.common.map(|z| z * s),
            private: self.private.iter().map(|(i, p)| (*i, p.map(|z| z * s))).collect(),
        }
    }
}

/// Precoders of the whole fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub uavs: Vec<UavPrecoder>,
}

impl PrecoderSet {
    pub fn zeros(m: usize, assoc: &AssociationState) -> Self {
        Self {
            uavs: (0..assoc.n_uav()).map(|k| UavPrecoder::zeros(m, &assoc.served(k))).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            uavs: self.uavs.iter().map(|u| u.scaled(s)).collect(),
        }
    }
}

#[inline]
pub fn gain(h: &CVector, p: &CVector) -> f64 {
    h.dotc(p).norm_sqr()
}

/// Everything fixed within a slot except the precoders.
#[derive(Debug, Clone, Copy)]
pub struct SlotLinks<'a> {
    pub channels: &'a ChannelSet,
    pub assoc: &'a AssociationState,
    pub noise: f64,
}

impl<'a> SlotLinks<'a> {
    pub fn new(channels: &'a ChannelSet, assoc: &'a AssociationState, noise: f64) -> Self {
        Self {
            channels,
            assoc,
            noise,
        }
    }

    /// Interference at GT `i` from covering UAVs other than `k`.
    pub fn gt_interference(&self, k: usize, i: usize, pre: &PrecoderSet) -> f64 {
        (0..self.assoc.n_uav())
            .filter(|&l| l != k && self.assoc.cover_gt[l][i])
            .map(|l| pre.uavs[l].total_gain(&self.channels.gt[l][i]))
            .sum()
    }

    /// Interference at Eve `e` from covering UAVs other than `k`.
    pub fn eve_interference(&self, k: usize, e: usize, pre: &PrecoderSet) -> f64 {
        (0..self.assoc.n_uav())
            .filter(|&l| l != k && self.assoc.cover_eve[l][e])
            .map(|l| pre.uavs[l].total_gain(&self.channels.eve[l][e]))
            .sum()
    }

    pub fn sinr_common_gt(&self, k: usize, i: usize, pre: &PrecoderSet) -> f64 {
        if !self.assoc.schedule[k][i] {
            return 0.0;
        }
        let h = &self.channels.gt[k][i];
        let u = &pre.uavs[k];
        let num = gain(h, &u.common);
        num / (u.private_gain_excluding(h, None) + self.gt_interference(k, i, pre) + self.noise)
    }

    pub fn sinr_private_gt(&self, k: usize, i: usize, pre: &PrecoderSet) -> f64 {
        if !self.assoc.schedule[k][i] {
            return 0.0;
        }
        let h = &self.channels.gt[k][i];
        let u = &pre.uavs[k];
        let num = u.private_for(i).map_or(0.0, |p| gain(h, p));
        num / (u.private_gain_excluding(h, Some(i)) + self.gt_interference(k, i, pre) + self.noise)
    }

    /// SINR of Eve `e` decoding UAV `k`'s common stream (which carries GT `i`'s common part).
    pub fn sinr_common_eve(&self, k: usize, e: usize, _i: usize, pre: &PrecoderSet) -> f64 {
        if !self.assoc.cover_eve[k][e] {
            return 0.0;
        }
        let h = &self.channels.eve[k][e];
        let u = &pre.uavs[k];
        gain(h, &u.common) / (u.private_gain_excluding(h, None) + self.eve_interference(k, e, pre) + self.noise)
    }

    /// SINR of Eve `e` decoding the private stream of GT `i` from UAV `k`.
    pub fn sinr_private_eve(&self, k: usize, e: usize, i: usize, pre: &PrecoderSet) -> f64 {
        if !self.assoc.cover_eve[k][e] {
            return 0.0;
        }
        let h = &self.channels.eve[k][e];
        let u = &pre.uavs[k];
        let num = u.private_for(i).map_or(0.0, |p| gain(h, p));
        num / (gain(h, &u.common)
            + u.private_gain_excluding(h, Some(i))
            + self.eve_interference(k, e, pre)
            + self.noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtRates {
    pub uav: usize,
    pub common: f64,
    pub private: f64,
    pub total: f64,
    /// `R_i − max_e R_{e,i}` over every Eve.
    pub secrecy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveRates {
    pub eve: usize,
    pub gt: usize,
    pub common: f64,
    pub private: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesReport {
    /// Indexed by GT; `None` for GTs nobody serves.
    pub gts: Vec<Option<GtRates>>,
    /// One entry per (served GT, Eve).
    pub eves: Vec<EveRates>,
    /// Worst-case secrecy rate over (UAV, served GT, Eve in that UAV's coverage).
    pub f1: f64,
    /// Sum over served GTs of their worst-case secrecy rate.
    pub sum_secrecy: f64,
}

impl RatesReport {
    pub fn eve_rate(&self, e: usize, i: usize) -> Option<&EveRates> {
        self.eves.iter().find(|r| r.eve == e && r.gt == i)
    }
}

pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// All rates and secrecy metrics of a slot.
///
/// When UAV `k` has no Eve in coverage its GTs enter the worst case with
/// their plain rate. With no served GT at all, `f1` is 0.
pub fn rates_report(links: &SlotLinks<'_>, pre: &PrecoderSet) -> RatesReport {
    let n_gt = links.channels.n_gt();
    let n_eve = links.channels.n_eve();
    let mut gts = vec![None; n_gt];
    let mut eves = Vec::new();
    let mut f1 = f64::INFINITY;
    let mut sum_secrecy = 0.0;
    for k in 0..links.assoc.n_uav() {
        let covered_eves = links.assoc.eves_of(k);
        for i in links.assoc.served(k) {
            let common = rate(links.sinr_common_gt(k, i, pre));
            let private = rate(links.sinr_private_gt(k, i, pre));
            let total = common + private;
            let mut worst_eve = 0.0f64;
            for e in 0..n_eve {
                let ec = rate(links.sinr_common_eve(k, e, i, pre));
                let ep = rate(links.sinr_private_eve(k, e, i, pre));
                let et = ec + ep;
                worst_eve = worst_eve.max(et);
                eves.push(EveRates {
                    eve: e,
                    gt: i,
                    common: ec,
                    private: ep,
                    total: et,
                });
                if covered_eves.contains(&e) {
                    f1 = f1.min(total - et);
                }
            }
            if covered_eves.is_empty() {
                f1 = f1.min(total);
            }
            let secrecy = total - worst_eve;
            sum_secrecy += secrecy;
            gts[i] = Some(GtRates {
                uav: k,
                common,
                private,
                total,
                secrecy,
            });
        }
    }
    if !f1.is_finite() {
        f1 = 0.0;
    }
    RatesReport {
        gts,
        eves,
        f1,
        sum_secrecy,
    }
}
