//! Lanczos time stepping for operators too large to diagonalize.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::SparseOperator;

const MAX_KRYLOV: usize = 40;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `e^{-iHt} x` by adaptive Lanczos steps, each with estimated error below `tol`.
pub fn krylov_evolve(h: &SparseOperator, x: &[Complex64], t: f64, tol: f64) -> Result<Vec<Complex64>> {
    if x.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: x.len() });
    }
    let mut v = x.to_vec();
    let mut remaining = t;
    let mut dt = t;
    let mut steps = 0usize;
    while remaining > 0.0 {
        steps += 1;
        if steps > 100_000 {
            return Err(Error::Krylov("too many substeps".into()));
        }
        let beta0 = norm(&v);
        if beta0 == 0.0 {
            return Ok(v);
        }
        // Lanczos basis from the current vector.
        let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|a| a / beta0).collect()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut breakdown = false;
        for k in 0..MAX_KRYLOV {
            let mut w = h.apply_slice(&basis[k]);
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            for (wi, bi) in w.iter_mut().zip(&basis[k]) {
                *wi -= bi * a;
            }
            if k > 0 {
                let b = beta[k - 1];
                for (wi, bi) in w.iter_mut().zip(&basis[k - 1]) {
                    *wi -= bi * b;
                }
            }
            // Full reorthogonalization keeps the small basis clean.
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
            let b = norm(&w);
            beta.push(b);
            if b < 1e-13 * beta0.max(1.0) {
                breakdown = true;
                break;
            }
            if k + 1 < MAX_KRYLOV {
                basis.push(w.into_iter().map(|a| a / b).collect());
            }
        }
        let m = alpha.len();
        let mut tri = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alpha[i];
            if i + 1 < m {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let eig = tri.symmetric_eigen();
        let small_exp = |tau: f64| -> DVector<Complex64> {
            // exp(-i tau T) e_1
            let mut y = DVector::<Complex64>::zeros(m);
            for j in 0..m {
                let c = eig.eigenvectors[(0, j)] * beta0;
                let ph = Complex64::from_polar(1.0, -eig.eigenvalues[j] * tau);
                for i in 0..m {
                    y[i] += ph * (eig.eigenvectors[(i, j)] * c);
                }
            }
            y
        };
        dt = dt.min(remaining);
        let y = loop {
            let y = small_exp(dt);
            let err = if breakdown { 0.0 } else { beta[m - 1] * y[m - 1].norm() };
            if err <= tol || dt < 1e-12 * t.max(1.0) {
                break y;
            }
            dt *= 0.5;
        };
        let used = basis.len().min(m);
        let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
        for (k, q) in basis.iter().take(used).enumerate() {
            for (ni, qi) in next.iter_mut().zip(q) {
                *ni += qi * y[k];
            }
        }
        v = next;
        remaining -= dt;
        if remaining < 1e-15 * t {
            remaining = 0.0;
        }
        dt *= 1.5;
    }
    Ok(v)
}
