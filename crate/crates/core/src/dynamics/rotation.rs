//! Beam-splitter style rotations between two modes.
//!
//! `U_x(θ) = exp(iθ(b_a†b_b + b_b†b_a))`, `U_y(θ) = exp(θ(b_a†b_b - b_b†b_a))`.
//! With these generators `U_x(θ)† b_a U_x(θ) = cos θ b_a + i sin θ b_b` and
//! `U_y(θ)† b_a U_y(θ) = cos θ b_a + sin θ b_b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockVector};
use crate::operator::{NumberSectors, SparseOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationKind {
    X,
    Y,
}

/// Precomputed spectral form of a pair-rotation generator.
#[derive(Clone, Debug)]
pub struct PairRotation {
    basis: FockBasis,
    kind: RotationKind,
    a: usize,
    b: usize,
    /// Per pair-number sector: local indices `na*levels + nb`, eigenvalues, eigenvectors.
    sectors: Vec<(Vec<usize>, DVector<f64>, DMatrix<Complex64>)>,
}

impl PairRotation {
    pub fn new(basis: FockBasis, kind: RotationKind, a: usize, b: usize) -> Result<Self> {
        basis.check_mode(a)?;
        basis.check_mode(b)?;
        if a == b {
            return Err(Error::PlanMismatch("rotation needs two distinct modes".into()));
        }
        let levels = basis.levels();
        let cutoff = basis.cutoff();
        let mut sectors = Vec::new();
        for n in 0..=2 * cutoff {
            let members: Vec<(usize, usize)> =
                (0..=cutoff).filter(|&na| n >= na && n - na <= cutoff).map(|na| (na, n - na)).collect();
            let d = members.len();
            let mut g = DMatrix::<Complex64>::zeros(d, d);
            for (col, &(na, nb)) in members.iter().enumerate() {
                // b_a† b_b |na, nb> and b_b† b_a |na, nb>
                if na < cutoff && nb > 0 {
                    let row = members.iter().position(|&m| m == (na + 1, nb - 1)).unwrap();
                    let amp = (((na + 1) * nb) as f64).sqrt();
                    g[(row, col)] += match kind {
                        RotationKind::X => Complex64::new(amp, 0.0),
                        RotationKind::Y => Complex64::new(0.0, -amp),
                    };
                }
                if nb < cutoff && na > 0 {
                    let row = members.iter().position(|&m| m == (na - 1, nb + 1)).unwrap();
                    let amp = (((nb + 1) * na) as f64).sqrt();
                    g[(row, col)] += match kind {
                        RotationKind::X => Complex64::new(amp, 0.0),
                        RotationKind::Y => Complex64::new(0.0, amp),
                    };
                }
            }
            let eig = g.symmetric_eigen();
            let local = members.iter().map(|&(na, nb)| na * levels + nb).collect();
            sectors.push((local, eig.eigenvalues, eig.eigenvectors));
        }
        Ok(Self { basis, kind, a, b, sectors })
    }

    pub fn kind(&self) -> RotationKind {
        self.kind
    }

    pub fn modes(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// Applies `U(θ)` to raw amplitudes.
    pub fn apply_slice(&self, x: &[Complex64], theta: f64) -> Vec<Complex64> {
        let basis = self.basis;
        let levels = basis.levels();
        let (sa, sb) = (basis.stride(self.a), basis.stride(self.b));
        let mut out = x.to_vec();
        let mut local = vec![Complex64::new(0.0, 0.0); levels * levels];
        let phases: Vec<Vec<Complex64>> = self
            .sectors
            .iter()
            .map(|(_, vals, _)| vals.iter().map(|&l| Complex64::from_polar(1.0, theta * l)).collect())
            .collect();
        for base in 0..basis.dim() {
            if basis.occupation(base, self.a) != 0 || basis.occupation(base, self.b) != 0 {
                continue;
            }
            let mut any = false;
            for na in 0..levels {
                for nb in 0..levels {
                    let v = x[base + na * sa + nb * sb];
                    any |= v.norm_sqr() != 0.0;
                    local[na * levels + nb] = v;
                }
            }
            if !any {
                continue;
            }
            for ((idx, _, vecs), ph) in self.sectors.iter().zip(&phases) {
                let v = DVector::from_iterator(idx.len(), idx.iter().map(|&l| local[l]));
                let mut c = vecs.ad_mul(&v);
                for (ci, p) in c.iter_mut().zip(ph) {
                    *ci *= p;
                }
                let w = vecs * c;
                for (k, &l) in idx.iter().enumerate() {
                    let (na, nb) = (l / levels, l % levels);
                    out[base + na * sa + nb * sb] = w[k];
                }
            }
        }
        out
    }

    pub fn apply(&self, state: &FockVector, theta: f64) -> Result<FockVector> {
        if state.basis() != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: state.basis().dim() });
        }
        state.with_amplitudes(self.apply_slice(state.amplitudes(), theta))
    }
}

/// Dense unitary of a pair rotation; unitarity is asserted.
pub fn two_mode_rotation(
    kind: RotationKind,
    theta: f64,
    basis: FockBasis,
    a: usize,
    b: usize,
) -> Result<DMatrix<Complex64>> {
    let rot = PairRotation::new(basis, kind, a, b)?;
    let dim = basis.dim();
    let mut u = DMatrix::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    for col in 0..dim {
        e[col] = Complex64::new(1.0, 0.0);
        for (row, v) in rot.apply_slice(&e, theta).into_iter().enumerate() {
            u[(row, col)] = v;
        }
        e[col] = Complex64::new(0.0, 0.0);
    }
    let defect = (u.adjoint() * &u - DMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::Protocol(format!("rotation unitarity defect {defect:e}")));
    }
    Ok(u)
}

/// Product of commuting pair rotations on disjoint pairs, `R = Π U_k(θ_k)`.
#[derive(Clone, Debug, Default)]
pub struct Frame {
    rotations: Vec<(PairRotation, f64)>,
}

impl Frame {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn push(&mut self, rotation: PairRotation, theta: f64) -> Result<()> {
        let (a, b) = rotation.modes();
        for (r, _) in &self.rotations {
            let (c, d) = r.modes();
            if [a, b].iter().any(|m| *m == c || *m == d) {
                return Err(Error::PlanMismatch("frame rotations must act on disjoint pairs".into()));
            }
        }
        self.rotations.push((rotation, theta));
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn apply_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut v = x.to_vec();
        for (r, th) in &self.rotations {
            v = r.apply_slice(&v, *th);
        }
        v
    }

    pub fn apply_inverse_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut v = x.to_vec();
        for (r, th) in self.rotations.iter().rev() {
            v = r.apply_slice(&v, -*th);
        }
        v
    }

    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        state.with_amplitudes(self.apply_slice(state.amplitudes()))
    }

    pub fn apply_inverse(&self, state: &FockVector) -> Result<FockVector> {
        state.with_amplitudes(self.apply_inverse_slice(state.amplitudes()))
    }

    /// Number-sector blocks of `R† H R` for a number-conserving `H`.
    pub fn conjugate_blocks(&self, h: &SparseOperator, sectors: &NumberSectors) -> Vec<DMatrix<Complex64>> {
        let dim = h.dim();
        let mut blocks = Vec::with_capacity(sectors.len());
        let mut e = vec![Complex64::new(0.0, 0.0); dim];
        for s in 0..sectors.len() {
            let idx = sectors.indices(s);
            let mut block = DMatrix::zeros(idx.len(), idx.len());
            for (col, &k) in idx.iter().enumerate() {
                e[k] = Complex64::new(1.0, 0.0);
                let u = self.apply_inverse_slice(&h.apply_slice(&self.apply_slice(&e)));
                e[k] = Complex64::new(0.0, 0.0);
                for (row, &i) in idx.iter().enumerate() {
                    block[(row, col)] = u[i];
                }
            }
            blocks.push(block);
        }
        blocks
    }
}

/// Zeroes block entries whose row and column differ in the occupation of any
/// mode in `modes`.
pub(crate) fn twirl_blocks(basis: FockBasis, sectors: &NumberSectors, blocks: &mut [DMatrix<Complex64>], modes: &[usize]) {
    for (s, block) in blocks.iter_mut().enumerate() {
        let idx = sectors.indices(s);
        for (row, &i) in idx.iter().enumerate() {
            for (col, &j) in idx.iter().enumerate() {
                if modes.iter().any(|&m| basis.occupation(i, m) != basis.occupation(j, m)) {
                    block[(row, col)] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
}
