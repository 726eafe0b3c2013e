use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockVector, DEFAULT_LEAK_TOL};
use crate::operator::{NumberSectors, SparseOperator};

use super::krylov::krylov_evolve;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub leak_tol: f64,
    pub krylov_tol: f64,
    /// Largest dimension handled by diagonalization.
    pub dense_limit: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { leak_tol: DEFAULT_LEAK_TOL, krylov_tol: 1e-10, dense_limit: 4096 }
    }
}

/// `e^{-iHt}|psi>` with default options.
pub fn evolve_exact(h: &SparseOperator, state: &FockVector, t: f64) -> Result<FockVector> {
    evolve_exact_with(h, state, t, &EvolveOptions::default())
}

pub fn evolve_exact_with(h: &SparseOperator, state: &FockVector, t: f64, opts: &EvolveOptions) -> Result<FockVector> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if h.basis() != state.basis() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: state.basis().dim() });
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-12 {
        return Err(Error::NonHermitian { defect });
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let out = if h.dim() <= opts.dense_limit {
        SpectralPropagator::new(h)?.evolve(state, t)?
    } else {
        state.with_amplitudes(krylov_evolve(h, state.amplitudes(), t, opts.krylov_tol)?)?
    };
    let drift = (out.norm() - state.norm()).abs();
    if drift > opts.leak_tol {
        return Err(Error::NormDrift { drift, tol: opts.leak_tol });
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian operator, one block per number sector
/// (or a single block when the operator does not conserve number).
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    basis: FockBasis,
    sectors: Arc<NumberSectors>,
    blocks: Vec<(DVector<f64>, DMatrix<Complex64>)>,
}

impl SpectralPropagator {
    pub fn new(h: &SparseOperator) -> Result<Self> {
        let sectors = if h.conserves_number() {
            NumberSectors::new(h.basis())
        } else {
            NumberSectors::trivial(h.dim())
        };
        let blocks = sectors.blocks(h)?;
        Ok(Self::from_blocks(h.basis(), Arc::new(sectors), blocks))
    }

    /// From dense Hermitian sector blocks.
    pub fn from_blocks(basis: FockBasis, sectors: Arc<NumberSectors>, blocks: Vec<DMatrix<Complex64>>) -> Self {
        let blocks = blocks
            .into_iter()
            .map(|b| {
                if b.nrows() == 0 {
                    return (DVector::zeros(0), DMatrix::zeros(0, 0));
                }
                let eig = b.symmetric_eigen();
                (eig.eigenvalues, eig.eigenvectors)
            })
            .collect();
        Self { basis, sectors, blocks }
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn sectors(&self) -> &Arc<NumberSectors> {
        &self.sectors
    }

    /// All eigenvalues, sector by sector.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|(v, _)| v.iter().copied()).collect()
    }

    pub fn evolve_slice(&self, x: &[Complex64], t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        for (s, (vals, vecs)) in self.blocks.iter().enumerate() {
            if vals.is_empty() {
                continue;
            }
            let v = self.sectors.gather(s, x);
            if v.iter().all(|a| a.norm_sqr() == 0.0) {
                continue;
            }
            let mut c = vecs.ad_mul(&v);
            for (ci, &l) in c.iter_mut().zip(vals.iter()) {
                *ci *= Complex64::from_polar(1.0, -l * t);
            }
            self.sectors.scatter(s, &(vecs * c), &mut out);
        }
        out
    }

    pub fn evolve(&self, state: &FockVector, t: f64) -> Result<FockVector> {
        if state.basis() != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: state.basis().dim() });
        }
        state.with_amplitudes(self.evolve_slice(state.amplitudes(), t))
    }

    /// Dense `e^{-iH tau}` per sector.
    pub fn step_operator(&self, tau: f64) -> BlockUnitary {
        let blocks = self
            .blocks
            .iter()
            .map(|(vals, vecs)| {
                let phases = DVector::from_iterator(vals.len(), vals.iter().map(|&l| Complex64::from_polar(1.0, -l * tau)));
                let mut scaled = vecs.clone();
                for (j, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= phases[j];
                }
                scaled * vecs.adjoint()
            })
            .collect();
        BlockUnitary { sectors: self.sectors.clone(), blocks }
    }
}

/// Block-diagonal operator over number sectors.
#[derive(Clone, Debug)]
pub struct BlockUnitary {
    sectors: Arc<NumberSectors>,
    blocks: Vec<DMatrix<Complex64>>,
}

impl BlockUnitary {
    pub fn apply_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        for (s, b) in self.blocks.iter().enumerate() {
            if b.nrows() == 0 {
                continue;
            }
            let v = self.sectors.gather(s, x);
            self.sectors.scatter(s, &(b * v), &mut out);
        }
        out
    }
}
