//! Lifted (outer-product) variables and the log-sum decomposition of the
//! per-(UAV, GT, Eve) secrecy rate.

use super::herm::Herm;
use crate::channel::CVector;
use crate::error::{Error, Result};
use crate::rsma::{PrecoderSet, SlotLinks, UavPrecoder};

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedUav {
    pub common: Herm,
    /// `(gt, X)` per served GT, ascending by GT.
    pub private: Vec<(usize, Herm)>,
}

impl LiftedUav {
    pub fn trace(&self) -> f64 {
        self.common.trace() + self.private.iter().map(|(_, x)| x.trace()).sum::<f64>()
    }

    pub fn private_for(&self, gt: usize) -> Option<&Herm> {
        self.private.iter().find(|(i, _)| *i == gt).map(|(_, x)| x)
    }

    /// `Σ hᴴXh` over every stream.
    pub fn total_quad(&self, h: &CVector) -> f64 {
        self.common.quad(h) + self.private_quad(h, None)
    }

    fn private_quad(&self, h: &CVector, skip: Option<usize>) -> f64 {
        self.private
            .iter()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, x)| x.quad(h))
            .sum()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Herm> {
        std::iter::once(&self.common).chain(self.private.iter().map(|(_, x)| x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedVars {
    pub uavs: Vec<LiftedUav>,
}

impl LiftedVars {
    /// Checks Hermitian structure (by construction) and PSD-ness.
    pub fn check_psd(&self, tol: f64) -> Result<()> {
        for (k, u) in self.uavs.iter().enumerate() {
            for x in u.blocks() {
                let ev = x.min_eigenvalue();
                if ev < -tol {
                    return Err(Error::InvalidState(format!(
                        "UAV {k} has a block with eigenvalue {ev:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Σ (tr − λ_max)` and `Σ tr` over every block.
    pub fn aggregate_gap(&self) -> (f64, f64) {
        let mut gap = 0.0;
        let mut tr = 0.0;
        for x in self.uavs.iter().flat_map(|u| u.blocks()) {
            gap += x.rank_one_gap();
            tr += x.trace();
        }
        (gap, tr)
    }
}

pub fn lift(pre: &PrecoderSet) -> LiftedVars {
    LiftedVars {
        uavs: pre
            .uavs
            .iter()
            .map(|u| LiftedUav {
                common: Herm::outer(&u.common),
                private: u.private.iter().map(|(i, p)| (*i, Herm::outer(p))).collect(),
            })
            .collect(),
    }
}

fn principal_vector(x: &Herm) -> CVector {
    let eig = x.eigen();
    let lmax = eig.max_value().max(0.0);
    eig.principal().map(|z| z * lmax.sqrt())
}

/// `p = √λ_max · v̄` per block, plus the largest relative gap `(tr − λ_max)/tr`.
pub fn extract_rank_one(vars: &LiftedVars) -> (PrecoderSet, f64) {
    let mut worst = 0.0f64;
    let mut note = |x: &Herm| {
        let tr = x.trace();
        if tr > 0.0 {
            worst = worst.max(x.rank_one_gap() / tr);
        }
    };
    let uavs = vars
        .uavs
        .iter()
        .map(|u| {
            note(&u.common);
            for (_, x) in &u.private {
                note(x);
            }
            UavPrecoder {
                common: principal_vector(&u.common),
                private: u.private.iter().map(|(i, x)| (*i, principal_vector(x))).collect(),
            }
        })
        .collect();
    (PrecoderSet { uavs }, worst)
}

/// `λ_max(X_prev) + v̄ᴴ(X − X_prev)v̄`, a supporting hyperplane of `λ_max` at `X_prev`.
pub fn linearized_lambda(x: &Herm, x_prev: &Herm) -> f64 {
    let eig = x_prev.eigen();
    let v = eig.principal();
    eig.max_value() + x.quad(&v) - x_prev.quad(&v)
}

/// One (UAV, served GT, Eve) combination; `eve = None` when the UAV covers no Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub uav: usize,
    pub gt: usize,
    pub eve: Option<usize>,
}

pub fn enumerate_triples(links: &SlotLinks<'_>) -> Vec<Triple> {
    let assoc = links.assoc;
    let mut out = Vec::new();
    for k in 0..assoc.n_uav() {
        let eves = assoc.eves_of(k);
        for i in assoc.served(k) {
            if eves.is_empty() {
                out.push(Triple { uav: k, gt: i, eve: None });
            }
            for &e in &eves {
                out.push(Triple { uav: k, gt: i, eve: Some(e) });
            }
        }
    }
    out
}

/// Interference-plus-noise denominators of one triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTerms {
    /// Everything GT `i` sees except UAV `k`'s common stream.
    pub phi_c: f64,
    /// `phi_c` minus GT `i`'s own private stream.
    pub phi_p: f64,
    /// Everything the Eve sees except UAV `k`'s common stream.
    pub phi_c_eve: f64,
    /// Everything the Eve sees except GT `i`'s private stream.
    pub phi_p_eve: f64,
    /// Total received power plus noise at GT `i` and at the Eve.
    pub total: f64,
    pub total_eve: f64,
}

fn gt_interference(vars: &LiftedVars, links: &SlotLinks<'_>, k: usize, i: usize) -> f64 {
    (0..vars.uavs.len())
        .filter(|&l| l != k && links.assoc.cover_gt[l][i])
        .map(|l| vars.uavs[l].total_quad(&links.channels.gt[l][i]))
        .sum()
}

fn eve_interference(vars: &LiftedVars, links: &SlotLinks<'_>, k: usize, e: usize) -> f64 {
    (0..vars.uavs.len())
        .filter(|&l| l != k && links.assoc.cover_eve[l][e])
        .map(|l| vars.uavs[l].total_quad(&links.channels.eve[l][e]))
        .sum()
}

/// Eve quantities are the bare noise floor when the Eve is absent or out of coverage.
pub fn phi_terms(vars: &LiftedVars, links: &SlotLinks<'_>, tr: Triple) -> PhiTerms {
    let (k, i) = (tr.uav, tr.gt);
    let u = &vars.uavs[k];
    let h = &links.channels.gt[k][i];
    let sigma2 = links.noise;
    let phi_c = u.private_quad(h, None) + gt_interference(vars, links, k, i) + sigma2;
    let phi_p = phi_c - u.private_for(i).map_or(0.0, |x| x.quad(h));
    let total = phi_c + u.common.quad(h);
    let (phi_c_eve, phi_p_eve, total_eve) = match tr.eve {
        Some(e) if links.assoc.cover_eve[k][e] => {
            let g = &links.channels.eve[k][e];
            let total_eve = u.total_quad(g) + eve_interference(vars, links, k, e) + sigma2;
            (
                total_eve - u.common.quad(g),
                total_eve - u.private_for(i).map_or(0.0, |x| x.quad(g)),
                total_eve,
            )
        }
        _ => (sigma2, sigma2, sigma2),
    };
    PhiTerms {
        phi_c,
        phi_p,
        phi_c_eve,
        phi_p_eve,
        total,
        total_eve,
    }
}

/// The four log2 groupings; their combination `f11 + f12 − f13 − f14` is
/// the GT rate minus the Eve rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTilde {
    pub f11: f64,
    pub f12: f64,
    pub f13: f64,
    pub f14: f64,
}

impl FTilde {
    pub fn value(&self) -> f64 {
        self.f11 + self.f12 - self.f13 - self.f14
    }
}

fn checked_log2(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.log2())
    } else {
        Err(Error::InvalidState(format!("non-positive log argument {what} = {v}")))
    }
}

pub fn f_tilde_terms(vars: &LiftedVars, links: &SlotLinks<'_>, tr: Triple) -> Result<FTilde> {
    let p = phi_terms(vars, links, tr);
    let l = |v: f64, w: &str| checked_log2(v, w);
    Ok(FTilde {
        f11: l(p.total, "total")? + l(p.phi_c_eve, "phi_c_eve")?,
        f12: l(p.phi_c, "phi_c")? + l(p.phi_p_eve, "phi_p_eve")?,
        f13: l(p.phi_c, "phi_c")? + l(p.total_eve, "total_eve")?,
        f14: l(p.phi_p, "phi_p")? + l(p.total_eve, "total_eve")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::AssociationState;
    use crate::channel::ChannelSet;
    use crate::rsma::rates_report;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cvec(rng: &mut ChaCha8Rng, m: usize, s: f64) -> CVector {
        CVector::from_iterator(m, (0..m).map(|_| Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s))))
    }

    #[test]
    fn lift_examples() {
        let z = lift(&PrecoderSet {
            uavs: vec![UavPrecoder {
                common: CVector::zeros(2),
                private: vec![(0, CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]))],
            }],
        });
        assert_eq!(z.uavs[0].common.trace(), 0.0);
        let m = z.uavs[0].private[0].1.to_matrix();
        assert_eq!(m[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn extraction_inverts_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pre = PrecoderSet {
            uavs: vec![UavPrecoder {
                common: cvec(&mut rng, 2, 1.0),
                private: vec![(1, cvec(&mut rng, 2, 1.0))],
            }],
        };
        let lifted = lift(&pre);
        let (back, gap) = extract_rank_one(&lifted);
        assert!(gap < 1e-12);
        let relifted = lift(&back);
        for (a, b) in lifted.uavs[0].blocks().zip(relifted.uavs[0].blocks()) {
            assert!(a.frobenius_dist(b) < 1e-10);
        }
    }

    #[test]
    fn linearized_lambda_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = cvec(&mut rng, 2, 1.0);
        let x = Herm::outer(&p);
        let lmax = x.eigen().max_value();
        assert!((linearized_lambda(&x, &x) - lmax).abs() < 1e-12);
        assert!((linearized_lambda(&x.scaled(2.0), &x) - 2.0 * lmax).abs() < 1e-10);
        let v = x.eigen().principal();
        let bumped = x.add(&Herm::outer(&v).scaled(0.7));
        assert!((linearized_lambda(&bumped, &x) - lmax - 0.7).abs() < 1e-10);
    }

    fn two_uav_instance(seed: u64) -> (ChannelSet, AssociationState, PrecoderSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = ChannelSet {
            gt: (0..2).map(|_| (0..3).map(|_| cvec(&mut rng, 2, 1.0)).collect()).collect(),
            eve: (0..2).map(|_| (0..2).map(|_| cvec(&mut rng, 2, 0.5)).collect()).collect(),
        };
        let assoc = AssociationState {
            cover_gt: vec![vec![true, true, true], vec![false, true, true]],
            cover_eve: vec![vec![true, false], vec![true, true]],
            schedule: vec![vec![true, true, false], vec![false, false, true]],
        };
        let pre = PrecoderSet {
            uavs: vec![
                UavPrecoder {
                    common: cvec(&mut rng, 2, 1.0),
                    private: vec![(0, cvec(&mut rng, 2, 1.0)), (1, cvec(&mut rng, 2, 1.0))],
                },
                UavPrecoder {
                    common: cvec(&mut rng, 2, 1.0),
                    private: vec![(2, cvec(&mut rng, 2, 1.0))],
                },
            ],
        };
        (channels, assoc, pre)
    }

    #[test]
    fn lifted_secrecy_matches_rates() {
        for seed in 0..20 {
            let (channels, assoc, pre) = two_uav_instance(seed);
            let links = SlotLinks::new(&channels, &assoc, 0.3);
            let report = rates_report(&links, &pre);
            let vars = lift(&pre);
            for tr in enumerate_triples(&links) {
                let ft = f_tilde_terms(&vars, &links, tr).unwrap().value();
                let gt = report.gts[tr.gt].unwrap();
                let eve = report.eve_rate(tr.eve.unwrap(), tr.gt).unwrap();
                assert!((ft - (gt.total - eve.total)).abs() < 1e-9, "seed {seed}");
            }
        }
    }

    #[test]
    fn zero_vars_unit_noise_gives_zero_logs() {
        let (channels, assoc, pre) = two_uav_instance(1);
        let links = SlotLinks::new(&channels, &assoc, 1.0);
        let vars = lift(&pre.scaled(0.0));
        for tr in enumerate_triples(&links) {
            let f = f_tilde_terms(&vars, &links, tr).unwrap();
            assert_eq!((f.f11, f.f12, f.f13, f.f14), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn uncovered_eve_collapses_to_gt_terms() {
        let (channels, assoc, pre) = two_uav_instance(2);
        let links = SlotLinks::new(&channels, &assoc, 1.0);
        let vars = lift(&pre);
        let tr = Triple { uav: 0, gt: 0, eve: Some(1) };
        let p = phi_terms(&vars, &links, tr);
        let f = f_tilde_terms(&vars, &links, tr).unwrap();
        assert!((f.f13 + f.f14 - (p.phi_c.log2() + p.phi_p.log2())).abs() < 1e-12);
        assert!((p.phi_c - p.phi_p - vars.uavs[0].private_for(0).unwrap().quad(&channels.gt[0][0])).abs() < 1e-12);
    }
}
