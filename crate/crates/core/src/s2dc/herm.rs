//! Hermitian matrices stored as real parameter vectors.
//!
//! An `m × m` Hermitian matrix has `m²` real degrees of freedom, laid out as
//! the `m` diagonal entries followed by `(Re X_ab, Im X_ab)` for every
//! `a < b` in row-major order. Any parameter vector is therefore Hermitian
//! by construction.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::CVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Herm {
    pub m: usize,
    pub params: Vec<f64>,
}

/// Offset of `(Re, Im)` of entry `(a, b)`, `a < b`.
fn off_diag_index(m: usize, a: usize, b: usize) -> usize {
    // pairs before row a: sum_{r<a} (m-1-r)
    let before = a * (2 * m - a - 1) / 2;
    m + 2 * (before + (b - a - 1))
}

impl Herm {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            params: vec![0.0; m * m],
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut h = Self::zeros(m);
        h.params[..m].iter_mut().for_each(|d| *d = 1.0);
        h
    }

    /// `p pᴴ`.
    pub fn outer(p: &CVector) -> Self {
        let m = p.len();
        let mut h = Self::zeros(m);
        for a in 0..m {
            h.params[a] = p[a].norm_sqr();
            for b in a + 1..m {
                let z = p[a] * p[b].conj();
                let o = off_diag_index(m, a, b);
                h.params[o] = z.re;
                h.params[o + 1] = z.im;
            }
        }
        h
    }

    pub fn from_params(m: usize, params: &[f64]) -> Self {
        assert_eq!(params.len(), m * m);
        Self {
            m,
            params: params.to_vec(),
        }
    }

    /// Hermitian part of an arbitrary complex matrix.
    pub fn from_matrix(x: &DMatrix<Complex64>) -> Self {
        let m = x.nrows();
        let mut h = Self::zeros(m);
        for a in 0..m {
            h.params[a] = x[(a, a)].re;
            for b in a + 1..m {
                let z = (x[(a, b)] + x[(b, a)].conj()) * 0.5;
                let o = off_diag_index(m, a, b);
                h.params[o] = z.re;
                h.params[o + 1] = z.im;
            }
        }
        h
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        params_to_matrix(self.m, &self.params)
    }

    pub fn trace(&self) -> f64 {
        self.params[..self.m].iter().sum()
    }

    /// `vᴴ X v`.
    pub fn quad(&self, v: &CVector) -> f64 {
        dot(&quad_coeffs(v), &self.params)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            m: self.m,
            params: self.params.iter().map(|p| p * s).collect(),
        }
    }

    pub fn add(&self, other: &Herm) -> Self {
        Self {
            m: self.m,
            params: self.params.iter().zip(&other.params).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn frobenius_dist(&self, other: &Herm) -> f64 {
        let d = self.to_matrix() - other.to_matrix();
        d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_matrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eigen(&self) -> HermEigen {
        herm_eigen(self.m, &self.params)
    }

    /// `tr(X) − λ_max(X)`; zero exactly for rank-one PSD matrices.
    pub fn rank_one_gap(&self) -> f64 {
        (self.trace() - self.eigen().max_value()).max(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }
}

pub fn params_to_matrix(m: usize, params: &[f64]) -> DMatrix<Complex64> {
    let mut x = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
    for a in 0..m {
        x[(a, a)] = Complex64::new(params[a], 0.0);
        for b in a + 1..m {
            let o = off_diag_index(m, a, b);
            let z = Complex64::new(params[o], params[o + 1]);
            x[(a, b)] = z;
            x[(b, a)] = z.conj();
        }
    }
    x
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients `c` with `vᴴ X v = c · params(X)`.
pub fn quad_coeffs(v: &CVector) -> Vec<f64> {
    let m = v.len();
    let mut c = vec![0.0; m * m];
    for a in 0..m {
        c[a] = v[a].norm_sqr();
        for b in a + 1..m {
            // 2 Re(conj(v_a) X_ab v_b)
            let w = v[a].conj() * v[b];
            let o = off_diag_index(m, a, b);
            c[o] = 2.0 * w.re;
            c[o + 1] = -2.0 * w.im;
        }
    }
    c
}

pub fn trace_coeffs(m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    c[..m].iter_mut().for_each(|d| *d = 1.0);
    c
}

/// Eigenvalues ascending with unit eigenvectors.
#[derive(Debug, Clone)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

impl HermEigen {
    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Principal eigenvector, phase-normalized so its largest-magnitude
    /// component is real and positive.
    pub fn principal(&self) -> CVector {
        self.vectors.last().expect("non-empty spectrum").clone()
    }
}

fn normalize_phase(v: &mut CVector) {
    let mut best = 0;
    for a in 1..v.len() {
        if v[a].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = a;
        }
    }
    let n = v[best].norm();
    if n > 0.0 {
        let phase = v[best].conj() / n;
        for z in v.iter_mut() {
            *z *= phase;
        }
        v[best] = Complex64::new(v[best].re, 0.0);
    }
    let norm = v.norm();
    if norm > 0.0 {
        *v /= Complex64::new(norm, 0.0);
    }
}

pub fn herm_eigen(m: usize, params: &[f64]) -> HermEigen {
    if m == 1 {
        return HermEigen {
            values: vec![params[0]],
            vectors: vec![CVector::from_element(1, Complex64::new(1.0, 0.0))],
        };
    }
    if m == 2 {
        return eigen_2x2(params);
    }
    // real symmetric embedding [[A, -B], [B, A]]; every eigenvalue appears twice
    let x = params_to_matrix(m, params);
    let mut e = DMatrix::zeros(2 * m, 2 * m);
    for a in 0..m {
        for b in 0..m {
            let z = x[(a, b)];
            e[(a, b)] = z.re;
            e[(a + m, b + m)] = z.re;
            e[(a, b + m)] = -z.im;
            e[(a + m, b)] = z.im;
        }
    }
    let eig = SymmetricEigen::new(e);
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(m);
    let mut vectors: Vec<CVector> = Vec::with_capacity(m);
    // Take every other eigenpair, Gram-Schmidt against the complex vectors kept so far.
    for &idx in &order {
        if values.len() == m {
            break;
        }
        let col = eig.eigenvectors.column(idx);
        let mut v = CVector::from_iterator(m, (0..m).map(|a| Complex64::new(col[a], col[a + m])));
        for u in &vectors {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        if v.norm() < 1e-6 {
            continue;
        }
        normalize_phase(&mut v);
        values.push(eig.eigenvalues[idx]);
        vectors.push(v);
    }
    HermEigen { values, vectors }
}

fn eigen_2x2(params: &[f64]) -> HermEigen {
    let (a, d) = (params[0], params[1]);
    let b = Complex64::new(params[2], params[3]);
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let (lo, hi) = (mean - r, mean + r);
    let vec_for = |lambda: f64, other: f64| -> CVector {
        // (X - λI) v = 0; pick the better-conditioned row
        let row1 = (a - lambda).abs() + b.norm();
        let row2 = (d - lambda).abs() + b.norm();
        let mut v = if b.norm() <= 1e-300 * (a.abs() + d.abs()).max(1e-300) {
            // diagonal matrix: eigenvector is a basis vector
            let first = if lambda == other {
                true
            } else if lambda >= other {
                a >= d
            } else {
                a < d
            };
            if first {
                CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
            } else {
                CVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            }
        } else if row1 >= row2 {
            // (a-λ) v0 + b v1 = 0
            CVector::from_vec(vec![b, Complex64::new(lambda - a, 0.0)])
        } else {
            // conj(b) v0 + (d-λ) v1 = 0
            CVector::from_vec(vec![Complex64::new(lambda - d, 0.0), b.conj()])
        };
        normalize_phase(&mut v);
        v
    };
    let v_hi = vec_for(hi, lo);
    // the low eigenvector is orthogonal to the high one
    let mut v_lo = CVector::from_vec(vec![-v_hi[1].conj(), v_hi[0].conj()]);
    normalize_phase(&mut v_lo);
    HermEigen {
        values: vec![lo, hi],
        vectors: vec![v_lo, v_hi],
    }
}

/// Gradient and Hessian of `log det X` in parameter coordinates, or `None`
/// when `X` is not positive definite.
pub fn logdet_derivatives(m: usize, params: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    if m == 2 {
        return logdet_derivatives_2x2(params);
    }
    let x = params_to_matrix(m, params);
    let chol = x.clone().cholesky()?;
    let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
    if !logdet.is_finite() {
        return None;
    }
    let y = chol.inverse();
    let n = m * m;
    // basis matrices E_p, and Z_p = Y E_p
    let mut grad = vec![0.0; n];
    let mut zs: Vec<DMatrix<Complex64>> = Vec::with_capacity(n);
    let zero = Complex64::new(0.0, 0.0);
    for p in 0..n {
        let mut e = DMatrix::from_element(m, m, zero);
        if p < m {
            e[(p, p)] = Complex64::new(1.0, 0.0);
        } else {
            let (a, b, imag) = off_diag_of(m, p);
            if imag {
                e[(a, b)] = Complex64::new(0.0, 1.0);
                e[(b, a)] = Complex64::new(0.0, -1.0);
            } else {
                e[(a, b)] = Complex64::new(1.0, 0.0);
                e[(b, a)] = Complex64::new(1.0, 0.0);
            }
        }
        let z = &y * &e;
        grad[p] = z.trace().re;
        zs.push(z);
    }
    let mut hess = vec![0.0; n * n];
    for p in 0..n {
        for q in p..n {
            // tr(Z_p Z_q)
            let mut t = zero;
            for a in 0..m {
                for b in 0..m {
                    t += zs[p][(a, b)] * zs[q][(b, a)];
                }
            }
            hess[p * n + q] = -t.re;
            hess[q * n + p] = -t.re;
        }
    }
    Some((logdet, grad, hess))
}

/// det = a d − re² − im² for params (a, d, re, im).
fn logdet_derivatives_2x2(p: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let det = p[0] * p[1] - p[2] * p[2] - p[3] * p[3];
    if !(p[0] > 0.0 && det > 0.0) {
        return None;
    }
    let gd = [p[1], p[0], -2.0 * p[2], -2.0 * p[3]];
    let hd = [
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, -2.0, 0.0],
        [0.0, 0.0, 0.0, -2.0],
    ];
    let grad = gd.iter().map(|g| g / det).collect();
    let mut hess = vec![0.0; 16];
    for a in 0..4 {
        for b in 0..4 {
            hess[a * 4 + b] = hd[a][b] / det - gd[a] * gd[b] / (det * det);
        }
    }
    Some((det.ln(), grad, hess))
}

/// `log det X`, or `None` when `X` is not positive definite.
pub fn logdet(m: usize, params: &[f64]) -> Option<f64> {
    if m == 2 {
        let det = params[0] * params[1] - params[2] * params[2] - params[3] * params[3];
        return (params[0] > 0.0 && det > 0.0).then(|| det.ln());
    }
    let chol = params_to_matrix(m, params).cholesky()?;
    let v: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
    v.is_finite().then_some(v)
}

fn off_diag_of(m: usize, p: usize) -> (usize, usize, bool) {
    let k = (p - m) / 2;
    let imag = (p - m) % 2 == 1;
    let mut idx = 0;
    for a in 0..m {
        for b in a + 1..m {
            if idx == k {
                return (a, b, imag);
            }
            idx += 1;
        }
    }
    unreachable!("parameter index {p} out of range for m = {m}")
}

/// True when `X` is positive definite.
pub fn is_positive_definite(m: usize, params: &[f64]) -> bool {
    if m == 2 {
        let det = params[0] * params[1] - params[2] * params[2] - params[3] * params[3];
        return params[0] > 0.0 && det > 0.0;
    }
    params_to_matrix(m, params).cholesky().is_some()
}
