//! Independent oracles shared by the integration tests.
//!
//! Everything here is written against plain complex arithmetic on slices so
//! it shares no code path with the library's rate machinery.

#![allow(dead_code)]

use hetuav::association::AssociationState;
use hetuav::channel::{CVector, ChannelSet};
use hetuav::config::ScenarioConfig;
use hetuav::rsma::{PrecoderSet, UavPrecoder};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn inner(h: &[Complex64], p: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..h.len() {
        acc += h[a].conj() * p[a];
    }
    acc.re * acc.re + acc.im * acc.im
}

pub fn log2p1(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// Scalar recomputation of every GT's (common, private) rate and every
/// (Eve, GT) pair's (common, private) rate, plus the worst-case secrecy rate.
pub struct ScalarRates {
    pub gt: Vec<Option<(f64, f64)>>,
    pub eve: Vec<Vec<Option<(f64, f64)>>>,
    pub f1: f64,
}

pub fn scalar_rates(ch: &ChannelSet, assoc: &AssociationState, pre: &PrecoderSet, noise: f64) -> ScalarRates {
    let n_uav = ch.gt.len();
    let n_gt = ch.gt[0].len();
    let n_eve = ch.eve[0].len();
    let all = |u: &UavPrecoder| -> Vec<Vec<Complex64>> {
        let mut v = vec![u.common.as_slice().to_vec()];
        v.extend(u.private.iter().map(|(_, p)| p.as_slice().to_vec()));
        v
    };
    let power_from = |l: usize, h: &CVector| -> f64 { all(&pre.uavs[l]).iter().map(|p| inner(h.as_slice(), p)).sum() };

    let mut gt = vec![None; n_gt];
    let mut eve = vec![vec![None; n_gt]; n_eve];
    let mut f1 = f64::INFINITY;
    let mut any = false;
    for k in 0..n_uav {
        let u = &pre.uavs[k];
        for i in 0..n_gt {
            if !assoc.schedule[k][i] {
                continue;
            }
            any = true;
            let h = ch.gt[k][i].as_slice();
            let mut interference = 0.0;
            for l in 0..n_uav {
                if l != k && assoc.cover_gt[l][i] {
                    interference += power_from(l, &ch.gt[l][i]);
                }
            }
            let c = inner(h, u.common.as_slice());
            let privs: Vec<(usize, f64)> = u.private.iter().map(|(j, p)| (*j, inner(h, p.as_slice()))).collect();
            let own = privs.iter().find(|(j, _)| *j == i).map_or(0.0, |x| x.1);
            let others: f64 = privs.iter().filter(|(j, _)| *j != i).map(|x| x.1).sum();
            let rc = log2p1(c / (own + others + interference + noise));
            let rp = log2p1(own / (others + interference + noise));
            gt[i] = Some((rc, rp));
            let mut covered = false;
            for e in 0..n_eve {
                if !assoc.cover_eve[k][e] {
                    eve[e][i] = Some((0.0, 0.0));
                    continue;
                }
                covered = true;
                let g = ch.eve[k][e].as_slice();
                let mut ie = 0.0;
                for l in 0..n_uav {
                    if l != k && assoc.cover_eve[l][e] {
                        ie += power_from(l, &ch.eve[l][e]);
                    }
                }
                let ce = inner(g, u.common.as_slice());
                let pe: Vec<(usize, f64)> = u.private.iter().map(|(j, p)| (*j, inner(g, p.as_slice()))).collect();
                let own_e = pe.iter().find(|(j, _)| *j == i).map_or(0.0, |x| x.1);
                let others_e: f64 = pe.iter().filter(|(j, _)| *j != i).map(|x| x.1).sum();
                let rce = log2p1(ce / (own_e + others_e + ie + noise));
                let rpe = log2p1(own_e / (ce + others_e + ie + noise));
                eve[e][i] = Some((rce, rpe));
                f1 = f1.min(rc + rp - rce - rpe);
            }
            if !covered {
                f1 = f1.min(rc + rp);
            }
        }
    }
    ScalarRates {
        gt,
        eve,
        f1: if any { f1 } else { 0.0 },
    }
}

pub fn random_cvec(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CVector {
    CVector::from_iterator(
        m,
        (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale)),
    )
}

/// Random channels, coverage and a schedule consistent with coverage.
pub fn random_instance(seed: u64, n_uav: usize, n_gt: usize, n_eve: usize, m: usize) -> (ChannelSet, AssociationState, PrecoderSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt = (0..n_uav).map(|_| (0..n_gt).map(|_| random_cvec(&mut rng, m, 1e-4)).collect()).collect();
    let eve = (0..n_uav).map(|_| (0..n_eve).map(|_| random_cvec(&mut rng, m, 1e-4)).collect()).collect();
    let cover_gt: Vec<Vec<bool>> = (0..n_uav).map(|_| (0..n_gt).map(|_| rng.gen_bool(0.8)).collect()).collect();
    let cover_eve: Vec<Vec<bool>> = (0..n_uav).map(|_| (0..n_eve).map(|_| rng.gen_bool(0.6)).collect()).collect();
    let mut schedule = vec![vec![false; n_gt]; n_uav];
    for i in 0..n_gt {
        let candidates: Vec<usize> = (0..n_uav).filter(|&k| cover_gt[k][i]).collect();
        if !candidates.is_empty() && rng.gen_bool(0.85) {
            schedule[candidates[rng.gen_range(0..candidates.len())]][i] = true;
        }
    }
    let assoc = AssociationState {
        cover_gt,
        cover_eve,
        schedule,
    };
    let pre = PrecoderSet {
        uavs: (0..n_uav)
            .map(|k| UavPrecoder {
                common: random_cvec(&mut rng, m, 2.0),
                private: assoc.served(k).into_iter().map(|i| (i, random_cvec(&mut rng, m, 2.0))).collect(),
            })
            .collect(),
    };
    (ChannelSet { gt, eve }, assoc, pre)
}

/// One UAV, one GT, one Eve drawn through the channel model: GT and Eve at
/// random ground positions within 120 m of the UAV's ground projection.
pub fn single_link_instance(seed: u64) -> (ChannelSet, AssociationState, f64) {
    let cfg = ScenarioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uav = hetuav::world::Point2::new(100.0, 100.0);
    let place = |rng: &mut ChaCha8Rng| {
        let r = rng.gen_range(0.0..120.0);
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        hetuav::world::Point2::new(100.0 + r * a.cos(), 100.0 + r * a.sin())
    };
    let g = place(&mut rng);
    let e = place(&mut rng);
    let ch = ChannelSet::generate(&[uav], &[g], &[e], &cfg, seed, 0).unwrap();
    let assoc = AssociationState {
        cover_gt: vec![vec![true]],
        cover_eve: vec![vec![true]],
        schedule: vec![vec![true]],
    };
    (ch, assoc, cfg.noise_power())
}

fn direction(u: f64, w: f64) -> [Complex64; 2] {
    let theta = std::f64::consts::FRAC_PI_2 * u;
    let phi = std::f64::consts::TAU * w;
    [
        Complex64::new(theta.cos(), 0.0),
        Complex64::from_polar(theta.sin(), phi),
    ]
}

/// Exhaustive search over common/private directions (angle grid step 0.05)
/// and power split (step 0.05) at full power, for one UAV serving one GT
/// with one Eve in coverage. Only points meeting `R_c ≥ R_ce` count.
pub fn grid_oracle_f1(h: &[Complex64], g: &[Complex64], p_max: f64, noise: f64) -> f64 {
    let steps: Vec<f64> = (0..=20).map(|s| s as f64 * 0.05).collect();
    let dirs: Vec<[Complex64; 2]> = steps
        .iter()
        .flat_map(|&u| steps.iter().map(move |&w| direction(u, w)))
        .collect();
    let gains: Vec<(f64, f64)> = dirs.iter().map(|d| (inner(h, d), inner(g, d))).collect();
    let mut best = f64::NEG_INFINITY;
    for &rho in &steps {
        let pc = rho * p_max / noise;
        let pp = (1.0 - rho) * p_max / noise;
        for &(hc, gc) in &gains {
            let (c_i, c_e) = (pc * hc, pc * gc);
            for &(hp, gp) in &gains {
                let (p_i, p_e) = (pp * hp, pp * gp);
                let rc = log2p1(c_i / (p_i + 1.0));
                let rce = log2p1(c_e / (p_e + 1.0));
                if rc < rce {
                    continue;
                }
                let f = rc + log2p1(p_i) - rce - log2p1(p_e / (c_e + 1.0));
                best = best.max(f);
            }
        }
    }
    best
}
