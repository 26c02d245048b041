//! Log-barrier interior-point solver for the convex subproblems.
//!
//! Problem shape, over Hermitian blocks `X_b ⪰ 0` packed into one real
//! parameter vector `x`:
//!
//! ```text
//! maximize   min_j piece_j(x) + c·x + c0
//! subject to constraint_j(x) ≥ 0
//!            budget_g · x ≤ b_g
//!            X_b ⪰ 0
//! ```
//!
//! where every piece is `Σ w log2(affine(x)) + linear·x + const` with
//! `w > 0`, i.e. concave. The min is handled with an epigraph variable `s`.
//! Centering uses damped Newton steps with a backtracking line search that
//! keeps the iterate strictly inside every barrier.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use super::herm::{dot, logdet, logdet_derivatives};
use crate::error::{Error, Result};

/// `coef · x + constant`, dense over all parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub coef: Vec<f64>,
    pub constant: f64,
}

impl AffineForm {
    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            coef: vec![0.0; n],
            constant: c,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.coef, x) + self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm {
    pub affine: usize,
    pub weight: f64,
}

/// `Σ w log2(affine) + linear · x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavePiece {
    pub logs: Vec<LogTerm>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl ConcavePiece {
    pub fn eval(&self, affine_values: &[f64], x: &[f64]) -> f64 {
        self.logs
            .iter()
            .map(|l| l.weight * affine_values[l.affine].log2())
            .sum::<f64>()
            + dot(&self.linear, x)
            + self.constant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub coef: Vec<f64>,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSubproblem {
    /// Matrix dimension of every block.
    pub m: usize,
    pub n_blocks: usize,
    pub affines: Vec<AffineForm>,
    /// The objective is the minimum over these pieces (empty: no min term).
    pub pieces: Vec<ConcavePiece>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub constraints: Vec<ConcavePiece>,
    pub budgets: Vec<Budget>,
    /// Strictly feasible starting point; a scaled identity per block when `None`.
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierSettings {
    /// Relative duality-gap target.
    pub tol: f64,
    pub t_init: f64,
    pub t_growth: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Centering stops once half the squared Newton decrement drops below this.
    pub newton_tol: f64,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            t_init: 1.0,
            t_growth: 20.0,
            max_outer: 60,
            max_newton: 100,
            newton_tol: 1e-7,
        }
    }
}

impl ConvexSubproblem {
    pub fn n_params(&self) -> usize {
        self.n_blocks * self.m * self.m
    }

    fn affine_values(&self, x: &[f64]) -> Vec<f64> {
        self.affines.iter().map(|a| a.eval(x)).collect()
    }

    /// Objective value; `None` outside the domain of the logarithms.
    pub fn objective(&self, x: &[f64]) -> Option<f64> {
        let av = self.affine_values(x);
        if av.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let min = self
            .pieces
            .iter()
            .map(|p| p.eval(&av, x))
            .fold(f64::INFINITY, f64::min);
        let min = if self.pieces.is_empty() { 0.0 } else { min };
        Some(min + dot(&self.linear, x) + self.constant)
    }

    /// Smallest constraint slack (budget, PSD and concave constraints).
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        let av = self.affine_values(x);
        let mut slack = f64::INFINITY;
        for b in &self.budgets {
            slack = slack.min(b.limit - dot(&b.coef, x));
        }
        if av.iter().any(|&v| !(v > 0.0)) {
            return f64::NEG_INFINITY;
        }
        for c in &self.constraints {
            slack = slack.min(c.eval(&av, x));
        }
        let mm = self.m * self.m;
        for b in 0..self.n_blocks {
            let eig = super::herm::herm_eigen(self.m, &x[b * mm..(b + 1) * mm]);
            slack = slack.min(eig.values[0]);
        }
        slack
    }

    fn default_start(&self) -> Vec<f64> {
        let n = self.n_params();
        let mm = self.m * self.m;
        // largest identity scale that keeps every budget half-used
        let mut scale = f64::INFINITY;
        for b in &self.budgets {
            let tr: f64 = (0..self.n_blocks)
                .map(|blk| (0..self.m).map(|a| b.coef[blk * mm + a]).sum::<f64>())
                .sum();
            if tr > 0.0 {
                scale = scale.min(0.5 * b.limit / tr);
            }
        }
        if !scale.is_finite() {
            scale = 1.0;
        }
        let mut x = vec![0.0; n];
        for blk in 0..self.n_blocks {
            for a in 0..self.m {
                x[blk * mm + a] = scale;
            }
        }
        x
    }
}

struct Barrier<'a> {
    sub: &'a ConvexSubproblem,
    has_s: bool,
    n: usize,
}

impl<'a> Barrier<'a> {
    fn dim(&self) -> usize {
        self.n + usize::from(self.has_s)
    }

    /// Barrier function value, or `None` outside the strict interior.
    fn value(&self, z: &[f64], t: f64) -> Option<f64> {
        let sub = self.sub;
        let x = &z[..self.n];
        let s = if self.has_s { z[self.n] } else { 0.0 };
        let av = sub.affine_values(x);
        if av.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let mut phi = -t * (s * f64::from(u8::from(self.has_s)) + dot(&sub.linear, x));
        for p in &sub.pieces {
            let slack = p.eval(&av, x) - s;
            if !(slack > 0.0) {
                return None;
            }
            phi -= slack.ln();
        }
        for c in &sub.constraints {
            let slack = c.eval(&av, x);
            if !(slack > 0.0) {
                return None;
            }
            phi -= slack.ln();
        }
        for b in &sub.budgets {
            let slack = b.limit - dot(&b.coef, x);
            if !(slack > 0.0) {
                return None;
            }
            phi -= slack.ln();
        }
        let mm = sub.m * sub.m;
        for blk in 0..sub.n_blocks {
            let params = &x[blk * mm..(blk + 1) * mm];
            phi -= logdet(sub.m, params)?;
        }
        phi.is_finite().then_some(phi)
    }

    /// Gradient and Hessian at a strictly feasible point.
    fn derivatives(&self, z: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let sub = self.sub;
        let n = self.n;
        let dim = self.dim();
        let x = &z[..n];
        let s = if self.has_s { z[n] } else { 0.0 };
        let av = sub.affine_values(x);
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        for i in 0..n {
            grad[i] -= t * sub.linear[i];
        }
        if self.has_s {
            grad[n] -= t;
        }
        // curvature weight accumulated per affine form: Σ_j w/(ln2 a² slack_j)
        let mut affine_weight = vec![0.0; sub.affines.len()];
        let mut piece_term = |piece: &ConcavePiece, with_s: bool, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>| {
            let value = piece.eval(&av, x);
            let slack = if with_s { value - s } else { value };
            // gradient of the piece (and of -s)
            let mut g = DVector::zeros(dim);
            for i in 0..n {
                g[i] = piece.linear[i];
            }
            for l in &piece.logs {
                let a = &sub.affines[l.affine];
                let f = l.weight / (LN_2 * av[l.affine]);
                for i in 0..n {
                    g[i] += f * a.coef[i];
                }
                affine_weight[l.affine] += l.weight / (LN_2 * av[l.affine] * av[l.affine] * slack);
            }
            if with_s {
                g[n] = -1.0;
            }
            // -log(slack): grad = -g/slack, hess = -∇²piece/slack + g gᵀ/slack²
            *grad -= &g / slack;
            hess.ger(1.0 / (slack * slack), &g, &g, 1.0);
        };
        for p in &sub.pieces {
            piece_term(p, true, &mut grad, &mut hess);
        }
        for c in &sub.constraints {
            piece_term(c, false, &mut grad, &mut hess);
        }
        for (idx, w) in affine_weight.iter().enumerate() {
            if *w != 0.0 {
                let c = &sub.affines[idx].coef;
                for i in 0..n {
                    if c[i] == 0.0 {
                        continue;
                    }
                    let ci = w * c[i];
                    for j in 0..n {
                        hess[(i, j)] += ci * c[j];
                    }
                }
            }
        }
        for b in &sub.budgets {
            let slack = b.limit - dot(&b.coef, x);
            for i in 0..n {
                grad[i] += b.coef[i] / slack;
                if b.coef[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    hess[(i, j)] += b.coef[i] * b.coef[j] / (slack * slack);
                }
            }
        }
        let mm = sub.m * sub.m;
        for blk in 0..sub.n_blocks {
            let o = blk * mm;
            let (_, g, h) = logdet_derivatives(sub.m, &x[o..o + mm])
                .expect("derivatives requested at a positive definite point");
            for p in 0..mm {
                grad[o + p] -= g[p];
                for q in 0..mm {
                    hess[(o + p, o + q)] -= h[p * mm + q];
                }
            }
        }
        (grad, hess)
    }

    fn barrier_terms(&self) -> usize {
        let sub = self.sub;
        sub.pieces.len() + sub.constraints.len() + sub.budgets.len() + sub.m * sub.n_blocks
    }
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    // symmetric diagonal scaling improves the conditioning near the PSD boundary
    let dim = grad.len();
    let d: Vec<f64> = (0..dim).map(|i| 1.0 / hess[(i, i)].abs().max(1e-300).sqrt()).collect();
    let mut scaled = hess.clone();
    for i in 0..dim {
        for j in 0..dim {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let rhs = DVector::from_iterator(dim, (0..dim).map(|i| -grad[i] * d[i]));
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut h = scaled.clone();
        for i in 0..dim {
            h[(i, i)] += ridge;
        }
        if let Some(chol) = h.cholesky() {
            let y = chol.solve(&rhs);
            return Some(DVector::from_iterator(dim, (0..dim).map(|i| y[i] * d[i])));
        }
        ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
    }
    None
}

/// Solves the subproblem to relative duality gap `settings.tol`.
///
/// Returns the best iterate with `converged = false` when the iteration
/// limits are hit first.
pub fn solve_subproblem(sub: &ConvexSubproblem, settings: &BarrierSettings) -> Result<SubproblemSolution> {
    let n = sub.n_params();
    let x0 = sub.start.clone().unwrap_or_else(|| sub.default_start());
    if x0.len() != n {
        return Err(Error::InvalidState(format!(
            "start has {} parameters, problem has {n}",
            x0.len()
        )));
    }
    let barrier = Barrier {
        sub,
        has_s: !sub.pieces.is_empty(),
        n,
    };
    let av = sub.affine_values(&x0);
    if av.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Infeasible("start lies outside the logarithm domain".into()));
    }
    let mut z = x0.clone();
    if barrier.has_s {
        let min = sub.pieces.iter().map(|p| p.eval(&av, &x0)).fold(f64::INFINITY, f64::min);
        z.push(min - 1.0);
    }
    if barrier.value(&z, settings.t_init).is_none() {
        return Err(Error::Infeasible(format!(
            "start is not strictly feasible (min slack {:.3e})",
            sub.min_slack(&x0)
        )));
    }

    let m_terms = barrier.barrier_terms() as f64;
    let mut t = settings.t_init;
    let mut newton_steps = 0;
    let mut converged = false;
    for _ in 0..settings.max_outer {
        for _ in 0..settings.max_newton {
            let (grad, hess) = barrier.derivatives(&z, t);
            let Some(dir) = newton_direction(&grad, &hess) else {
                break;
            };
            let decrement = -grad.dot(&dir);
            if !(decrement > 0.0) || decrement * 0.5 <= settings.newton_tol {
                break;
            }
            newton_steps += 1;
            let phi0 = barrier.value(&z, t).expect("current iterate is interior");
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
                if let Some(phi) = barrier.value(&trial, t) {
                    if phi <= phi0 - 0.25 * step * decrement {
                        z = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let objective = sub.objective(&z[..n]).unwrap_or(f64::NEG_INFINITY);
        if m_terms / t <= settings.tol * (1.0 + objective.abs()) {
            converged = true;
            break;
        }
        t *= settings.t_growth;
    }
    z.truncate(n);
    let objective = sub
        .objective(&z)
        .ok_or_else(|| Error::InvalidState("solver left the logarithm domain".into()))?;
    Ok(SubproblemSolution {
        x: z,
        objective,
        converged,
        newton_steps,
    })
}
