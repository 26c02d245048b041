//! Air-to-ground channels: probabilistic LoS path loss and i.i.d. Rayleigh
//! small-scale fading.
//!
//! Every link draws its fading from its own RNG stream keyed by
//! `(seed, slot, uav, node)`, so changing one trajectory never perturbs an
//! unrelated link.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::world::Point2;

pub type CVector = DVector<Complex64>;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Ground node identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeId {
    Gt(usize),
    Eve(usize),
}

/// One UAV-to-node channel in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub h: CVector,
    pub uav: usize,
    pub node: NodeId,
    pub t: usize,
}

/// LoS probability from the logistic S-curve in elevation angle (degrees).
pub fn los_probability(d: f64, h: f64, a: f64, b: f64) -> Result<f64> {
    if !(h > 0.0) || !(d >= h) {
        return Err(Error::Geometry(format!(
            "link distance {d} m below altitude {h} m"
        )));
    }
    let theta = (h / d).min(1.0).asin().to_degrees();
    Ok(1.0 / (1.0 + a * (-b * (theta - a)).exp()))
}

pub fn free_space_loss_db(d: f64, f_c: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * f_c * d / SPEED_OF_LIGHT).log10()
}

/// Mean path loss in dB: LoS/NLoS excess loss weighted by their probabilities
/// plus free-space loss.
pub fn path_loss_db(
    d: f64,
    h: f64,
    a: f64,
    b: f64,
    eta_los: f64,
    eta_nlos: f64,
    f_c: f64,
) -> Result<f64> {
    let p_los = los_probability(d, h, a, b)?;
    Ok(p_los * eta_los + (1.0 - p_los) * eta_nlos + free_space_loss_db(d, f_c))
}

/// Unit-variance circularly-symmetric complex Gaussian vector.
pub fn draw_small_scale<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_iterator(
        m,
        (0..m).map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        }),
    )
}

/// Scales small-scale fading by the large-scale amplitude gain of `loss_db`.
pub fn apply_path_loss(small_scale: &CVector, loss_db: f64) -> CVector {
    let amp = 10f64.powf(-loss_db / 20.0);
    small_scale.map(|z| z * amp)
}

/// Noise power in watts from a PSD in dBm/Hz over `bandwidth` Hz.
pub fn noise_power(psd_dbm_hz: f64, bandwidth: f64) -> f64 {
    let dbm = psd_dbm_hz + 10.0 * bandwidth.log10();
    10f64.powf((dbm - 30.0) / 10.0)
}

/// SplitMix64 finalizer; used to derive independent seeds.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG stream dedicated to one link in one slot.
pub fn link_rng(seed: u64, t: usize, uav: usize, node: NodeId) -> ChaCha8Rng {
    let node_code = match node {
        NodeId::Gt(i) => (i as u64) << 1,
        NodeId::Eve(e) => ((e as u64) << 1) | 1,
    };
    let mut key = splitmix(seed);
    for part in [t as u64, uav as u64, node_code] {
        key = splitmix(key ^ part);
    }
    ChaCha8Rng::seed_from_u64(key)
}

/// Full channel between a UAV at `uav_pos` and a ground node.
pub fn link_channel(
    uav_pos: Point2,
    node_pos: Point2,
    cfg: &ScenarioConfig,
    seed: u64,
    t: usize,
    uav: usize,
    node: NodeId,
) -> Result<LinkChannel> {
    let d = uav_pos.slant_dist(node_pos, cfg.h_uav);
    let loss = path_loss_db(
        d,
        cfg.h_uav,
        cfg.s_curve_a,
        cfg.s_curve_b,
        cfg.eta_los,
        cfg.eta_nlos,
        cfg.f_c,
    )?;
    let mut rng = link_rng(seed, t, uav, node);
    let small = draw_small_scale(&mut rng, cfg.antennas);
    Ok(LinkChannel {
        h: apply_path_loss(&small, loss),
        uav,
        node,
        t,
    })
}

/// Channels from every UAV to every GT and every Eve in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `gt[k][i]`
    pub gt: Vec<Vec<CVector>>,
    /// `eve[k][e]`
    pub eve: Vec<Vec<CVector>>,
}

impl ChannelSet {
    pub fn n_uav(&self) -> usize {
        self.gt.len()
    }

    pub fn n_gt(&self) -> usize {
        self.gt.first().map_or(0, Vec::len)
    }

    pub fn n_eve(&self) -> usize {
        self.eve.first().map_or(0, Vec::len)
    }

    pub fn generate(
        uavs: &[Point2],
        gts: &[Point2],
        eves: &[Point2],
        cfg: &ScenarioConfig,
        seed: u64,
        t: usize,
    ) -> Result<Self> {
        let mut gt = Vec::with_capacity(uavs.len());
        let mut eve = Vec::with_capacity(uavs.len());
        for (k, &u) in uavs.iter().enumerate() {
            gt.push(
                gts.iter()
                    .enumerate()
                    .map(|(i, &g)| link_channel(u, g, cfg, seed, t, k, NodeId::Gt(i)).map(|l| l.h))
                    .collect::<Result<Vec<_>>>()?,
            );
            eve.push(
                eves.iter()
                    .enumerate()
                    .map(|(e, &p)| link_channel(u, p, cfg, seed, t, k, NodeId::Eve(e)).map(|l| l.h))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Self { gt, eve })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = 9.61;
    const B: f64 = 0.15;

    #[test]
    fn los_directly_below() {
        let p = los_probability(100.0, 100.0, A, B).unwrap();
        let expected = 1.0 / (1.0 + A * (-B * (90.0 - A)).exp());
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.99994).abs() < 1e-5, "{p}");
    }

    #[test]
    fn los_grazing_limit() {
        let p = los_probability(1e9, 100.0, A, B).unwrap();
        assert!((p - 1.0 / (1.0 + A * (1.4415f64).exp())).abs() < 1e-4, "{p}");
        assert!((p - 0.0240).abs() < 1e-4);
    }

    #[test]
    fn los_rejects_impossible_geometry() {
        assert!(los_probability(99.0, 100.0, A, B).is_err());
        assert!(los_probability(100.0, 0.0, A, B).is_err());
    }

    #[test]
    fn los_decreases_with_distance() {
        let mut prev = 1.0;
        for d in [100.0, 120.0, 200.0, 500.0, 2000.0] {
            let p = los_probability(d, 100.0, A, B).unwrap();
            assert!(p > 0.0 && p < 1.0 && p < prev);
            prev = p;
        }
    }

    #[test]
    fn free_space_at_100m() {
        let fl = free_space_loss_db(100.0, 2.4e9);
        assert!((fl - 80.05).abs() < 0.01, "{fl}");
    }

    #[test]
    fn equal_excess_losses_cancel_probability() {
        for d in [100.0, 150.0, 300.0] {
            let l = path_loss_db(d, 100.0, A, B, 7.0, 7.0, 2.4e9).unwrap();
            assert!((l - (7.0 + free_space_loss_db(d, 2.4e9))).abs() < 1e-12);
        }
    }

    #[test]
    fn path_loss_composes() {
        let p = los_probability(100.0, 100.0, A, B).unwrap();
        let l = path_loss_db(100.0, 100.0, A, B, 1.0, 20.0, 2.4e9).unwrap();
        let expected = free_space_loss_db(100.0, 2.4e9) + p * 1.0 + (1.0 - p) * 20.0;
        assert!((l - expected).abs() < 1e-12);
        assert!((l - 80.05 - 1.0011).abs() < 0.01);
    }

    #[test]
    fn small_scale_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let (mut power, mut re, mut im) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = draw_small_scale(&mut rng, 1)[0];
            power += z.norm_sqr();
            re += z.re;
            im += z.im;
        }
        let n = n as f64;
        assert!((power / n - 1.0).abs() < 0.02);
        assert!((re / n).abs() < 0.02 && (im / n).abs() < 0.02);
    }

    #[test]
    fn small_scale_is_seeded() {
        let a = draw_small_scale(&mut ChaCha8Rng::seed_from_u64(3), 4);
        let b = draw_small_scale(&mut ChaCha8Rng::seed_from_u64(3), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn path_loss_scaling() {
        let small = draw_small_scale(&mut ChaCha8Rng::seed_from_u64(1), 3);
        assert_eq!(apply_path_loss(&small, 0.0), small);
        let h = apply_path_loss(&small, 20.0);
        assert!((h.norm() - 0.1 * small.norm()).abs() < 1e-14);
    }

    #[test]
    fn link_gain_matches_path_loss() {
        let cfg = ScenarioConfig::default();
        let u = Point2::new(50.0, 50.0);
        let g = Point2::new(50.0, 50.0);
        let link = link_channel(u, g, &cfg, 11, 0, 0, NodeId::Gt(0)).unwrap();
        let small = draw_small_scale(&mut link_rng(11, 0, 0, NodeId::Gt(0)), cfg.antennas);
        let loss = path_loss_db(100.0, 100.0, A, B, 1.0, 20.0, 2.4e9).unwrap();
        let ratio = link.h.norm_squared() / small.norm_squared();
        assert!((ratio / 10f64.powf(-loss / 10.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_gain_matches_large_scale() {
        let cfg = ScenarioConfig::default();
        let u = Point2::new(0.0, 0.0);
        let g = Point2::new(80.0, 0.0);
        let loss = path_loss_db(u.slant_dist(g, 100.0), 100.0, A, B, 1.0, 20.0, 2.4e9).unwrap();
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|t| link_channel(u, g, &cfg, 5, t, 0, NodeId::Gt(0)).unwrap().h[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean / 10f64.powf(-loss / 10.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn link_streams_are_independent_of_other_links() {
        let a = link_rng(1, 2, 0, NodeId::Gt(3));
        let b = link_rng(1, 2, 0, NodeId::Eve(3));
        let c = link_rng(1, 2, 1, NodeId::Gt(3));
        let a2 = link_rng(1, 2, 0, NodeId::Gt(3));
        assert_eq!(a.get_seed(), a2.get_seed());
        assert_ne!(a.get_seed(), b.get_seed());
        assert_ne!(a.get_seed(), c.get_seed());
    }

    #[test]
    fn noise_examples() {
        assert!((noise_power(-170.0, 1e6) / 1e-14 - 1.0).abs() < 1e-12);
        assert!((noise_power(-170.0, 1.0) / 1e-20 - 1.0).abs() < 1e-12);
        let ratio = 10.0 * (noise_power(-170.0, 2e6) / noise_power(-170.0, 1e6)).log10();
        assert!((ratio - 3.0103).abs() < 1e-4);
    }
}
