//! Difference-of-concave iterations with an exact rank-one penalty.
//!
//! Everything here works in normalized units: channels are scaled by
//! `√(P_max/σ²)` and matrices by `1/P_max`, so noise and the per-UAV power
//! budget are both 1. Rates are unchanged by the scaling; the penalty weight
//! `μ` therefore acts on power fractions.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::io::Write;
use std::path::Path;

use super::herm::{dot, herm_eigen, is_positive_definite, quad_coeffs, trace_coeffs, Herm};
use super::lifted::{enumerate_triples, extract_rank_one, LiftedUav, LiftedVars, Triple};
use super::subproblem::{
    solve_subproblem, AffineForm, BarrierSettings, Budget, ConcavePiece, ConvexSubproblem, LogTerm,
};
use crate::channel::CVector;
use crate::config::S2dcConfig;
use crate::error::{Error, Result};
use crate::rsma::{rates_report, PrecoderSet, SlotLinks, UavPrecoder};

/// Slack on the common-stream secrecy constraint, bits/s/Hz. Keeps a strict
/// interior when the only feasible start sits on the constraint boundary.
pub const SECRECY_SLACK: f64 = 1e-6;


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Common(usize),
    Private(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    TotalGt(usize, usize),
    CommonOffGt(usize, usize),
    PrivateOffGt(usize, usize),
    TotalEve(usize, usize),
    CommonOffEve(usize, usize),
    PrivateOffEve(usize, usize, usize),
}

/// Log arguments of one triple, as indices into the affine table.
#[derive(Debug, Clone, Copy)]
struct TripleForms {
    t_i: usize,
    q_i: usize,
    u_i: usize,
    /// `(T_e, Q_e, U_e)` when an Eve is present.
    eve: Option<(usize, usize, usize)>,
}

/// Normalized problem data of one slot, shared by every d.c. iteration.
#[derive(Debug, Clone)]
pub struct DcProblem {
    pub m: usize,
    pub p_max: f64,
    pub blocks: Vec<Block>,
    pub triples: Vec<Triple>,
    /// Per UAV: the block indices it owns (empty when it serves nobody).
    pub uav_blocks: Vec<Vec<usize>>,
    served: Vec<Vec<usize>>,
    affines: Vec<AffineForm>,
    forms: Vec<TripleForms>,
    gt_dirs: Vec<Vec<CVector>>,
}

impl DcProblem {
    pub fn new(links: &SlotLinks<'_>, p_max: f64, m: usize) -> Self {
        let assoc = links.assoc;
        let n_uav = assoc.n_uav();
        let scale = (p_max / links.noise).sqrt();
        let norm = |h: &CVector| h.map(|z| z * scale);

        let mut blocks = Vec::new();
        let mut uav_blocks = vec![Vec::new(); n_uav];
        let mut served = vec![Vec::new(); n_uav];
        for k in 0..n_uav {
            served[k] = assoc.served(k);
            if served[k].is_empty() {
                continue;
            }
            uav_blocks[k].push(blocks.len());
            blocks.push(Block::Common(k));
            for &i in &served[k] {
                uav_blocks[k].push(blocks.len());
                blocks.push(Block::Private(k, i));
            }
        }
        let mm = m * m;
        let n = blocks.len() * mm;
        let block_of = |b: Block| blocks.iter().position(|&x| x == b).expect("block exists");

        let add_quad = |coef: &mut [f64], blk: usize, g: &CVector, sign: f64| {
            for (c, q) in coef[blk * mm..(blk + 1) * mm].iter_mut().zip(quad_coeffs(g)) {
                *c += sign * q;
            }
        };
        // everything UAV `l` radiates, as seen through `g`
        let add_total = |coef: &mut [f64], l: usize, g: &CVector| {
            for &blk in &uav_blocks[l] {
                add_quad(coef, blk, g, 1.0);
            }
        };

        let mut affines: Vec<AffineForm> = Vec::new();
        let mut index: HashMap<Key, usize> = HashMap::new();
        let mut intern = |key: Key, build: &dyn Fn() -> AffineForm| -> usize {
            *index.entry(key).or_insert_with(|| {
                affines.push(build());
                affines.len() - 1
            })
        };

        let triples = enumerate_triples(links);
        let mut forms = Vec::with_capacity(triples.len());
        for tr in &triples {
            let (k, i) = (tr.uav, tr.gt);
            let g = norm(&links.channels.gt[k][i]);
            let gt_total = || {
                let mut a = AffineForm::constant(n, 1.0);
                add_total(&mut a.coef, k, &g);
                for l in (0..n_uav).filter(|&l| l != k && assoc.cover_gt[l][i]) {
                    add_total(&mut a.coef, l, &norm(&links.channels.gt[l][i]));
                }
                a
            };
            let t_i = intern(Key::TotalGt(k, i), &gt_total);
            let q_i = intern(Key::CommonOffGt(k, i), &|| {
                let mut a = gt_total();
                add_quad(&mut a.coef, block_of(Block::Common(k)), &g, -1.0);
                a
            });
            let u_i = intern(Key::PrivateOffGt(k, i), &|| {
                let mut a = gt_total();
                add_quad(&mut a.coef, block_of(Block::Common(k)), &g, -1.0);
                add_quad(&mut a.coef, block_of(Block::Private(k, i)), &g, -1.0);
                a
            });
            let eve = tr.eve.map(|e| {
                let ge = norm(&links.channels.eve[k][e]);
                let eve_total = || {
                    let mut a = AffineForm::constant(n, 1.0);
                    add_total(&mut a.coef, k, &ge);
                    for l in (0..n_uav).filter(|&l| l != k && assoc.cover_eve[l][e]) {
                        add_total(&mut a.coef, l, &norm(&links.channels.eve[l][e]));
                    }
                    a
                };
                let t_e = intern(Key::TotalEve(k, e), &eve_total);
                let q_e = intern(Key::CommonOffEve(k, e), &|| {
                    let mut a = eve_total();
                    add_quad(&mut a.coef, block_of(Block::Common(k)), &ge, -1.0);
                    a
                });
                let u_e = intern(Key::PrivateOffEve(k, e, i), &|| {
                    let mut a = eve_total();
                    add_quad(&mut a.coef, block_of(Block::Private(k, i)), &ge, -1.0);
                    a
                });
                (t_e, q_e, u_e)
            });
            forms.push(TripleForms { t_i, q_i, u_i, eve });
        }

        let gt_dirs = (0..n_uav)
            .map(|k| served[k].iter().map(|&i| links.channels.gt[k][i].clone()).collect())
            .collect();
        Self {
            m,
            p_max,
            blocks,
            triples,
            uav_blocks,
            served,
            affines,
            forms,
            gt_dirs,
        }
    }

    pub fn n_params(&self) -> usize {
        self.blocks.len() * self.m * self.m
    }

    fn block_params<'a>(&self, x: &'a [f64], blk: usize) -> &'a [f64] {
        let mm = self.m * self.m;
        &x[blk * mm..(blk + 1) * mm]
    }

    /// Packs physical (watt-scaled) lifted variables into normalized parameters.
    pub fn pack(&self, vars: &LiftedVars) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_params());
        for b in &self.blocks {
            let h = match *b {
                Block::Common(k) => &vars.uavs[k].common,
                Block::Private(k, i) => vars.uavs[k].private_for(i).expect("served GT has a block"),
            };
            x.extend(h.params.iter().map(|v| v / self.p_max));
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> LiftedVars {
        let uavs = self
            .served
            .iter()
            .enumerate()
            .map(|(k, served)| {
                if self.uav_blocks[k].is_empty() {
                    return LiftedUav {
                        common: Herm::zeros(self.m),
                        private: Vec::new(),
                    };
                }
                let herm = |blk: usize| {
                    Herm::from_params(self.m, self.block_params(x, blk)).scaled(self.p_max)
                };
                let blks = &self.uav_blocks[k];
                LiftedUav {
                    common: herm(blks[0]),
                    private: served.iter().zip(&blks[1..]).map(|(&i, &b)| (i, herm(b))).collect(),
                }
            })
            .collect();
        LiftedVars { uavs }
    }

    fn affine_values(&self, x: &[f64]) -> Vec<f64> {
        self.affines.iter().map(|a| a.eval(x)).collect()
    }

    /// Secrecy rate (GT rate minus Eve rate, or the GT rate alone) of every triple.
    pub fn f_tilde(&self, x: &[f64]) -> Vec<f64> {
        let av = self.affine_values(x);
        let l = |i: usize| av[i].log2();
        self.forms
            .iter()
            .map(|f| match f.eve {
                Some((t_e, q_e, u_e)) => {
                    l(f.t_i) + l(q_e) + l(f.q_i) + l(u_e) - l(f.q_i) - l(t_e) - l(f.u_i) - l(t_e)
                }
                None => l(f.t_i) + l(f.q_i) - l(f.q_i) - l(f.u_i),
            })
            .collect()
    }

    /// Common-rate margin `R_c − R_ce` of every triple that has an Eve.
    pub fn common_margins(&self, x: &[f64]) -> Vec<f64> {
        let av = self.affine_values(x);
        self.forms
            .iter()
            .filter_map(|f| {
                f.eve
                    .map(|(t_e, q_e, _)| av[f.t_i].log2() - av[f.q_i].log2() - av[t_e].log2() + av[q_e].log2())
            })
            .collect()
    }

    /// `Σ_b (tr X_b − λ_max X_b)` and `Σ_b tr X_b`, normalized.
    pub fn rank_gap(&self, x: &[f64]) -> (f64, f64) {
        let mut gap = 0.0;
        let mut tr = 0.0;
        for blk in 0..self.blocks.len() {
            let p = self.block_params(x, blk);
            let eig = herm_eigen(self.m, p);
            let t: f64 = p[..self.m].iter().sum();
            gap += t - eig.max_value();
            tr += t;
        }
        (gap, tr)
    }

    /// `min F̃ + μ Σ (λ_max − tr)`.
    pub fn penalized_objective(&self, x: &[f64], mu: f64) -> f64 {
        let min = self.f_tilde(x).into_iter().fold(f64::INFINITY, f64::min);
        min - mu * self.rank_gap(x).0
    }

    fn budgets(&self) -> Vec<Budget> {
        let mm = self.m * self.m;
        let tc = trace_coeffs(self.m);
        self.uav_blocks
            .iter()
            .filter(|b| !b.is_empty())
            .map(|blks| {
                let mut coef = vec![0.0; self.n_params()];
                for &b in blks {
                    coef[b * mm..(b + 1) * mm].copy_from_slice(&tc);
                }
                Budget { coef, limit: 1.0 }
            })
            .collect()
    }

    /// Strict feasibility with respect to budgets, PSD cones and the relaxed
    /// secrecy constraint.
    pub fn strictly_feasible(&self, x: &[f64]) -> bool {
        let psd = (0..self.blocks.len()).all(|b| is_positive_definite(self.m, self.block_params(x, b)));
        let budget = self.budgets().iter().all(|b| dot(&b.coef, x) < b.limit);
        let secrecy = self.common_margins(x).iter().all(|&c| c > -SECRECY_SLACK);
        psd && budget && secrecy
    }

    fn precoder_params(&self, frac_common: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n_params()];
        let mm = self.m * self.m;
        for (k, blks) in self.uav_blocks.iter().enumerate() {
            if blks.is_empty() {
                continue;
            }
            let dirs: Vec<CVector> = self.gt_dirs[k].iter().map(unit).collect();
            let mut sum = CVector::zeros(self.m);
            for d in &dirs {
                sum += d;
            }
            let common_dir = if sum.norm() > 1e-9 { unit(&sum) } else { dirs[0].clone() };
            let n_priv = dirs.len() as f64;
            let pc = 0.9 * frac_common;
            let pp = 0.9 * (1.0 - frac_common) / n_priv;
            let common = Herm::outer(&common_dir).scaled(pc);
            x[blks[0] * mm..(blks[0] + 1) * mm].copy_from_slice(&common.params);
            for (d, &b) in dirs.iter().zip(&blks[1..]) {
                let p = Herm::outer(d).scaled(pp);
                x[b * mm..(b + 1) * mm].copy_from_slice(&p.params);
            }
        }
        x
    }

    /// Rank-one start at 90 % power with MRT directions: equal split first,
    /// then progressively more power on the common stream, then common only,
    /// then private only (which always satisfies the secrecy constraint).
    ///
    /// Among the feasible candidates the one with the best worst-case
    /// secrecy rate is kept.
    pub fn feasible_start(&self) -> Vec<f64> {
        let n_max = self.served.iter().map(Vec::len).max().unwrap_or(1).max(1) as f64;
        let mut candidates = vec![1.0 / (n_max + 1.0), 0.5, 0.75, 0.9, 1.0];
        candidates.retain(|&c| c >= 1.0 / (n_max + 1.0));
        candidates.push(0.0);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for c in candidates {
            let x = self.precoder_params(c);
            if !self.common_margins(&x).iter().all(|&v| v >= 0.0) {
                continue;
            }
            let f = self.f_tilde(&x).into_iter().fold(f64::INFINITY, f64::min);
            if best.as_ref().map_or(true, |(b, _)| f > *b) {
                best = Some((f, x));
            }
        }
        best.map_or_else(|| self.precoder_params(0.0), |(_, x)| x)
    }

    /// Pulls a (rank-deficient) incumbent a little off the PSD boundary so
    /// barrier centering starts well inside; returns `x` unchanged when no
    /// such move keeps it strictly feasible.
    pub fn recentre(&self, x: &[f64], sub: &ConvexSubproblem) -> Vec<f64> {
        self.mix_toward_identity(x, 1e-3, |y| sub.min_slack(y) > 0.0)
            .unwrap_or_else(|| x.to_vec())
    }

    fn mix_toward_identity(&self, x: &[f64], theta0: f64, feasible: impl Fn(&[f64]) -> bool) -> Option<Vec<f64>> {
        let mm = self.m * self.m;
        let mut id = vec![0.0; self.n_params()];
        for blks in &self.uav_blocks {
            let level = 0.9 / (self.m * blks.len().max(1)) as f64;
            for &b in blks {
                for a in 0..self.m {
                    id[b * mm + a] = level;
                }
            }
        }
        let mut theta = theta0;
        for _ in 0..60 {
            let mixed: Vec<f64> = x.iter().zip(&id).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
            if feasible(&mixed) {
                return Some(mixed);
            }
            theta *= 0.5;
        }
        None
    }

    /// Moves `x` slightly toward a scaled identity until it is strictly feasible.
    pub fn interior_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.mix_toward_identity(x, 1e-2, |y| self.strictly_feasible(y))
            .ok_or_else(|| Error::Infeasible("no strictly feasible start near the initial precoders".into()))
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

/// Adds the first-order expansion of `-Σ log2 a_j` at `x0` to a piece.
fn subtract_linearized(piece: &mut ConcavePiece, affines: &[AffineForm], values: &[f64], terms: &[usize], x0: &[f64]) {
    for &j in terms {
        let a0 = values[j];
        let f = 1.0 / (a0 * LN_2);
        for (l, c) in piece.linear.iter_mut().zip(&affines[j].coef) {
            *l -= f * c;
        }
        piece.constant -= a0.log2() - f * dot(&affines[j].coef, x0);
    }
}

fn logs(ids: &[usize]) -> Vec<LogTerm> {
    ids.iter().map(|&a| LogTerm { affine: a, weight: 1.0 }).collect()
}

/// Concave minorant of the penalized objective that touches it at `x0`.
///
/// The subtracted log groups are linearized at `x0`, and so is `λ_max` via
/// the principal eigenvector of each block. The common-stream secrecy
/// constraint is linearized the same way. `x0` becomes the solver start.
pub fn dc_surrogate(problem: &DcProblem, x0: &[f64], mu: f64) -> Result<ConvexSubproblem> {
    let n = problem.n_params();
    if !problem.strictly_feasible(x0) {
        return Err(Error::Infeasible("incumbent violates the subproblem constraints".into()));
    }
    let values = problem.affine_values(x0);
    let mut pieces = Vec::with_capacity(problem.forms.len());
    let mut constraints = Vec::new();
    for f in &problem.forms {
        let mut piece = ConcavePiece {
            logs: Vec::new(),
            linear: vec![0.0; n],
            constant: 0.0,
        };
        match f.eve {
            // log φ_i^c sits on both sides of the split; it cancels exactly, so
            // it is dropped instead of being kept once and linearized once
            Some((t_e, q_e, u_e)) => {
                piece.logs = logs(&[f.t_i, q_e, u_e]);
                subtract_linearized(&mut piece, &problem.affines, &values, &[t_e, f.u_i, t_e], x0);
                let mut sec = ConcavePiece {
                    logs: logs(&[f.t_i, q_e]),
                    linear: vec![0.0; n],
                    constant: SECRECY_SLACK,
                };
                subtract_linearized(&mut sec, &problem.affines, &values, &[f.q_i, t_e], x0);
                constraints.push(sec);
            }
            None => {
                piece.logs = logs(&[f.t_i]);
                subtract_linearized(&mut piece, &problem.affines, &values, &[f.u_i], x0);
            }
        }
        pieces.push(piece);
    }

    let mm = problem.m * problem.m;
    let mut linear = vec![0.0; n];
    if mu != 0.0 {
        let tc = trace_coeffs(problem.m);
        for blk in 0..problem.blocks.len() {
            let v = herm_eigen(problem.m, problem.block_params(x0, blk)).principal();
            for ((l, q), t) in linear[blk * mm..(blk + 1) * mm].iter_mut().zip(quad_coeffs(&v)).zip(&tc) {
                *l += mu * (q - t);
            }
        }
    }
    Ok(ConvexSubproblem {
        m: problem.m,
        n_blocks: problem.blocks.len(),
        affines: problem.affines.clone(),
        pieces,
        linear,
        constant: 0.0,
        constraints,
        budgets: problem.budgets(),
        start: Some(x0.to_vec()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcIterate {
    pub kappa: usize,
    pub vars: LiftedVars,
    pub mu: f64,
    /// Penalized objective of the incumbent under this iteration's `μ`.
    pub objective_before: f64,
    /// Penalized objective of the new point under the same `μ`.
    pub objective_value: f64,
    /// Aggregate rank-one gap `Σ (tr − λ_max)`, normalized by `P_max`.
    pub penalty_value: f64,
    pub min_f_tilde: f64,
    pub subproblem_converged: bool,
    pub newton_steps: usize,
    /// False when the step did not improve and the incumbent was kept.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct S2dcOutcome {
    pub precoders: PrecoderSet,
    pub vars: LiftedVars,
    /// Worst-case secrecy rate of the extracted precoders.
    pub f1: f64,
    /// Worst-case secrecy rate of the final lifted variables.
    pub lifted_f1: f64,
    pub history: Vec<DcIterate>,
    pub iterations: usize,
    pub converged: bool,
    /// Aggregate rank-one gap and trace (normalized).
    pub rank_gap: f64,
    pub rank_trace: f64,
    pub rank_one_ok: bool,
    /// Largest per-block relative gap seen during extraction.
    pub extraction_gap: f64,
}

impl S2dcOutcome {
    /// Every accepted step improved the penalized objective under its `μ`.
    pub fn monotone(&self) -> bool {
        self.history
            .iter()
            .filter(|it| it.accepted)
            .all(|it| it.objective_value >= it.objective_before)
    }
}

fn outcome(
    problem: &DcProblem,
    links: &SlotLinks<'_>,
    x: &[f64],
    history: Vec<DcIterate>,
    converged: bool,
    rank_tol: f64,
) -> S2dcOutcome {
    let vars = problem.unpack(x);
    let (precoders, extraction_gap) = extract_rank_one(&vars);
    let f1 = rates_report(links, &precoders).f1;
    let lifted_f1 = if problem.triples.is_empty() {
        0.0
    } else {
        problem.f_tilde(x).into_iter().fold(f64::INFINITY, f64::min)
    };
    let (rank_gap, rank_trace) = problem.rank_gap(x);
    S2dcOutcome {
        precoders,
        vars,
        f1,
        lifted_f1,
        iterations: history.len(),
        history,
        converged,
        rank_gap,
        rank_trace,
        rank_one_ok: rank_gap <= rank_tol * rank_trace.max(f64::MIN_POSITIVE),
        extraction_gap,
    }
}

/// Secrecy precoding for one slot.
///
/// Never fails on non-convergence: the best accepted iterate is returned with
/// `converged = false`.
pub fn s2dc_solve(links: &SlotLinks<'_>, p_max: f64, m: usize, cfg: &S2dcConfig) -> Result<S2dcOutcome> {
    let problem = DcProblem::new(links, p_max, m);
    if problem.blocks.is_empty() {
        let precoders = PrecoderSet {
            uavs: (0..links.assoc.n_uav()).map(|_| UavPrecoder::zeros(m, &[])).collect(),
        };
        return Ok(S2dcOutcome {
            vars: super::lifted::lift(&precoders),
            f1: rates_report(links, &precoders).f1,
            precoders,
            lifted_f1: 0.0,
            history: Vec::new(),
            iterations: 0,
            converged: true,
            rank_gap: 0.0,
            rank_trace: 0.0,
            rank_one_ok: true,
            extraction_gap: 0.0,
        });
    }
    let settings = BarrierSettings {
        tol: cfg.subproblem_tol,
        ..BarrierSettings::default()
    };
    let mut x = problem.interior_point(&problem.feasible_start())?;
    let mut mu = cfg.mu_init;
    let mut history: Vec<DcIterate> = Vec::new();
    let mut converged = false;
    let mut gaps: Vec<f64> = Vec::new();
    let gap_ok = |x: &[f64]| {
        let (g, t) = problem.rank_gap(x);
        g <= cfg.rank_tol * t
    };

    for kappa in 0..cfg.n_iter {
        let sub = dc_surrogate(&problem, &x, mu)?;
        let sub = ConvexSubproblem {
            start: Some(problem.recentre(&x, &sub)),
            ..sub
        };
        let sol = solve_subproblem(&sub, &settings)?;
        let before = problem.penalized_objective(&x, mu);
        let after = problem.penalized_objective(&sol.x, mu);
        let accepted = after >= before && problem.strictly_feasible(&sol.x);
        if accepted {
            x = sol.x;
        }
        let (gap, _) = problem.rank_gap(&x);
        history.push(DcIterate {
            kappa,
            vars: problem.unpack(&x),
            mu,
            objective_before: before,
            objective_value: if accepted { after } else { before },
            penalty_value: gap,
            min_f_tilde: problem.f_tilde(&x).into_iter().fold(f64::INFINITY, f64::min),
            subproblem_converged: sol.converged,
            newton_steps: sol.newton_steps,
            accepted,
        });
        gaps.push(gap);

        let settled = !accepted || (after - before).abs() < cfg.tol;
        if settled {
            if gap_ok(&x) {
                converged = true;
                break;
            }
            if mu >= cfg.mu_max {
                break;
            }
            mu = (mu * 2.0).min(cfg.mu_max);
            continue;
        }
        // gap stuck above threshold for three iterations: push harder
        if gaps.len() >= 3 && !gap_ok(&x) {
            let g = &gaps[gaps.len() - 3..];
            if g[2] >= 0.99 * g[0] && mu < cfg.mu_max {
                mu = (mu * 2.0).min(cfg.mu_max);
                gaps.clear();
            }
        }
    }
    log::debug!(
        "s2dc: {} iterations, converged={converged}, mu={mu}",
        history.len()
    );
    Ok(outcome(&problem, links, &x, history, converged, cfg.rank_tol))
}

/// Per-iteration diagnostics as CSV.
pub fn write_diagnostics(history: &[DcIterate], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "kappa,mu,objective_before,objective,penalty,min_f_tilde,newton_steps,accepted")?;
    for it in history {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            it.kappa,
            it.mu,
            it.objective_before,
            it.objective_value,
            it.penalty_value,
            it.min_f_tilde,
            it.newton_steps,
            it.accepted
        )?;
    }
    Ok(())
}
