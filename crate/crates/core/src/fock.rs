//! Truncated multi-mode Fock space: basis indexing, states and mode operators.
//!
//! Occupations are stored row-major with mode 0 most significant, so the
//! index of `(n_0, ..., n_{m-1})` is `sum_i n_i (cutoff+1)^(m-1-i)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance on truncation leakage and norm drift.
pub const DEFAULT_LEAK_TOL: f64 = 1e-8;

const MAX_DIM: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockBasis {
    num_modes: usize,
    cutoff: usize,
}

impl FockBasis {
    pub fn new(num_modes: usize, cutoff: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::InvalidBasis("need at least one mode".into()));
        }
        if cutoff == 0 {
            return Err(Error::InvalidBasis("cutoff must be positive".into()));
        }
        let mut dim: usize = 1;
        for _ in 0..num_modes {
            dim = dim
                .checked_mul(cutoff + 1)
                .filter(|&d| d <= MAX_DIM)
                .ok_or_else(|| Error::InvalidBasis("dimension too large".into()))?;
        }
        Ok(Self { num_modes, cutoff })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of levels per mode, `cutoff + 1`.
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.levels().pow(self.num_modes as u32)
    }

    /// Index step between neighbouring occupations of `mode`.
    pub fn stride(&self, mode: usize) -> usize {
        self.levels().pow((self.num_modes - 1 - mode) as u32)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.num_modes {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange { mode, num_modes: self.num_modes })
        }
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.levels()
    }

    pub fn to_tuple(&self, index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.num_modes];
        let mut rest = index;
        for slot in occ.iter_mut().rev() {
            *slot = rest % self.levels();
            rest /= self.levels();
        }
        occ
    }

    pub fn to_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: occupations.len(),
            });
        }
        let mut index = 0;
        for &n in occupations {
            if n > self.cutoff {
                return Err(Error::InvalidBasis(format!(
                    "occupation {n} above cutoff {}",
                    self.cutoff
                )));
            }
            index = index * self.levels() + n;
        }
        Ok(index)
    }

    pub fn total_number(&self, index: usize) -> usize {
        let mut rest = index;
        let mut total = 0;
        for _ in 0..self.num_modes {
            total += rest % self.levels();
            rest /= self.levels();
        }
        total
    }
}

/// Pure state on a truncated Fock basis.
///
/// `leakage` accumulates the probability mass lost to truncation when the
/// state was prepared (the amplitudes themselves are kept normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    basis: FockBasis,
    amplitudes: Vec<Complex64>,
    leakage: f64,
}

impl FockVector {
    pub fn new(basis: FockBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amplitudes.len() });
        }
        Ok(Self { basis, amplitudes, leakage: 0.0 })
    }

    pub fn vacuum(basis: FockBasis) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { basis, amplitudes, leakage: 0.0 }
    }

    pub fn basis_state(basis: FockBasis, occupations: &[usize]) -> Result<Self> {
        let index = basis.to_index(occupations)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes, leakage: 0.0 })
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Same basis and leakage, new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut out = Self::new(self.basis, amplitudes)?;
        out.leakage = self.leakage;
        Ok(out)
    }

    pub fn with_leakage(mut self, leakage: f64) -> Self {
        self.leakage = leakage;
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        self.check_same_basis(other)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn fidelity(&self, other: &FockVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        self
    }

    pub fn check_same_basis(&self, other: &FockVector) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: other.basis.dim(),
            });
        }
        Ok(())
    }

    /// Checks `norm^2` against `[1 - tol, 1 + tol]` and the recorded leakage against `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let ns = self.norm_sqr();
        if !(ns.is_finite() && (ns - 1.0).abs() <= tol) {
            return Err(Error::NotNormalized { norm_sqr: ns });
        }
        if self.leakage > tol {
            return Err(Error::TruncationLeakage { leakage: self.leakage, tol });
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other` (modes of `self` first).
    pub fn tensor(&self, other: &FockVector) -> Result<FockVector> {
        if self.basis.cutoff != other.basis.cutoff {
            return Err(Error::InvalidBasis("tensor product needs equal cutoffs".into()));
        }
        let basis = FockBasis::new(self.basis.num_modes + other.basis.num_modes, self.basis.cutoff)?;
        let mut amplitudes = Vec::with_capacity(basis.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let leakage = 1.0 - (1.0 - self.leakage) * (1.0 - other.leakage);
        Ok(FockVector { basis, amplitudes, leakage })
    }
}

/// Coherent-state amplitudes `e^{-|a|^2/2} a^k / sqrt(k!)` for `k <= cutoff`,
/// renormalized, together with the Poisson tail mass beyond the cutoff.
pub fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> Result<(Vec<Complex64>, f64)> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("alpha"));
    }
    let lambda = alpha.norm_sqr();
    if lambda > cutoff as f64 / 4.0 {
        return Err(Error::CutoffTooSmall { cutoff, alpha_sq: lambda });
    }
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = Complex64::new((-lambda / 2.0).exp(), 0.0);
    amps.push(a);
    for k in 1..=cutoff {
        a = a * alpha / (k as f64).sqrt();
        amps.push(a);
    }
    // Tail sum_{k>cutoff} e^{-lambda} lambda^k / k!, continued from the last term.
    let mut p = amps[cutoff].norm_sqr();
    let mut tail = 0.0;
    let mut k = cutoff + 1;
    while p > 0.0 {
        p *= lambda / k as f64;
        tail += p;
        if p < tail * 1e-18 || k > cutoff + 10_000 {
            break;
        }
        k += 1;
    }
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok((amps, tail))
}

/// Coherent state `|alpha>` on `mode`, vacuum elsewhere.
pub fn coherent_state(alpha: Complex64, num_modes: usize, mode: usize, cutoff: usize) -> Result<FockVector> {
    let basis = FockBasis::new(num_modes, cutoff)?;
    basis.check_mode(mode)?;
    let mut alphas = vec![Complex64::new(0.0, 0.0); num_modes];
    alphas[mode] = alpha;
    product_coherent_state(&alphas, cutoff)
}

/// Product of coherent states, one amplitude per mode.
pub fn product_coherent_state(alphas: &[Complex64], cutoff: usize) -> Result<FockVector> {
    let basis = FockBasis::new(alphas.len(), cutoff)?;
    let mut factors = Vec::with_capacity(alphas.len());
    let mut kept = 1.0;
    for &alpha in alphas {
        let (amps, tail) = coherent_amplitudes(alpha, cutoff)?;
        kept *= 1.0 - tail;
        factors.push(amps);
    }
    let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
    for f in &factors {
        let mut next = Vec::with_capacity(amplitudes.len() * f.len());
        for a in &amplitudes {
            for b in f {
                next.push(a * b);
            }
        }
        amplitudes = next;
    }
    Ok(FockVector { basis, amplitudes, leakage: 1.0 - kept })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Annihilate,
    Create,
    Number,
    /// `(b + b†)/sqrt(2)`
    X,
    /// `i(b† - b)/sqrt(2)`
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeOperator {
    pub kind: OpKind,
    pub mode: usize,
}

impl ModeOperator {
    pub fn new(kind: OpKind, mode: usize) -> Self {
        Self { kind, mode }
    }
    pub fn annihilate(mode: usize) -> Self {
        Self::new(OpKind::Annihilate, mode)
    }
    pub fn create(mode: usize) -> Self {
        Self::new(OpKind::Create, mode)
    }
    pub fn number(mode: usize) -> Self {
        Self::new(OpKind::Number, mode)
    }
    pub fn x(mode: usize) -> Self {
        Self::new(OpKind::X, mode)
    }
    pub fn p(mode: usize) -> Self {
        Self::new(OpKind::P, mode)
    }

    pub fn is_hermitian(&self) -> bool {
        matches!(self.kind, OpKind::Number | OpKind::X | OpKind::P)
    }
}

fn apply_raw(op: ModeOperator, basis: FockBasis, input: &[Complex64]) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; input.len()];
    let stride = basis.stride(op.mode);
    let cutoff = basis.cutoff();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    for (idx, &amp) in input.iter().enumerate() {
        if amp == zero {
            continue;
        }
        let n = basis.occupation(idx, op.mode);
        let down = if n > 0 { Some((idx - stride, (n as f64).sqrt())) } else { None };
        let up = if n < cutoff { Some((idx + stride, ((n + 1) as f64).sqrt())) } else { None };
        match op.kind {
            OpKind::Annihilate => {
                if let Some((j, c)) = down {
                    out[j] += amp * c;
                }
            }
            OpKind::Create => {
                if let Some((j, c)) = up {
                    out[j] += amp * c;
                }
            }
            OpKind::Number => out[idx] += amp * n as f64,
            OpKind::X => {
                if let Some((j, c)) = down {
                    out[j] += amp * (c * s2);
                }
                if let Some((j, c)) = up {
                    out[j] += amp * (c * s2);
                }
            }
            OpKind::P => {
                // i(b† - b)/sqrt(2)
                if let Some((j, c)) = down {
                    out[j] += amp * Complex64::new(0.0, -c * s2);
                }
                if let Some((j, c)) = up {
                    out[j] += amp * Complex64::new(0.0, c * s2);
                }
            }
        }
    }
    out
}

/// Exact action of a mode operator on the truncated space (`b†|cutoff> = 0`).
pub fn apply_operator(op: ModeOperator, state: &FockVector) -> Result<FockVector> {
    state.basis.check_mode(op.mode)?;
    let amplitudes = apply_raw(op, state.basis, &state.amplitudes);
    Ok(FockVector { basis: state.basis, amplitudes, leakage: state.leakage })
}

/// `<psi| O_1 O_2 ... O_k |psi>` for a normalized state.
pub fn expectation(ops: &[ModeOperator], state: &FockVector) -> Result<Complex64> {
    expectation_with_tol(ops, state, DEFAULT_LEAK_TOL)
}

pub fn expectation_with_tol(ops: &[ModeOperator], state: &FockVector, tol: f64) -> Result<Complex64> {
    let ns = state.norm_sqr();
    if !(ns.is_finite() && (ns - 1.0).abs() <= tol) {
        return Err(Error::NotNormalized { norm_sqr: ns });
    }
    let mut v = state.amplitudes.clone();
    for op in ops.iter().rev() {
        state.basis.check_mode(op.mode)?;
        v = apply_raw(*op, state.basis, &v);
    }
    Ok(state.amplitudes.iter().zip(&v).map(|(a, b)| a.conj() * b).sum())
}

/// Dense matrix of a mode operator on the full truncated basis.
pub fn operator_matrix(op: ModeOperator, basis: FockBasis) -> Result<DMatrix<Complex64>> {
    basis.check_mode(op.mode)?;
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    for col in 0..dim {
        e[col] = Complex64::new(1.0, 0.0);
        let v = apply_raw(op, basis, &e);
        for (row, x) in v.into_iter().enumerate() {
            m[(row, col)] = x;
        }
        e[col] = Complex64::new(0.0, 0.0);
    }
    Ok(m)
}

/// Reduced density matrix of one mode.
pub fn reduced_density(state: &FockVector, mode: usize) -> Result<DMatrix<Complex64>> {
    let basis = state.basis;
    basis.check_mode(mode)?;
    let levels = basis.levels();
    let stride = basis.stride(mode);
    let mut rho = DMatrix::zeros(levels, levels);
    for idx in 0..basis.dim() {
        if basis.occupation(idx, mode) != 0 {
            continue;
        }
        for m in 0..levels {
            let am = state.amplitudes[idx + m * stride];
            if am.norm_sqr() == 0.0 {
                continue;
            }
            for n in 0..levels {
                rho[(m, n)] += am * state.amplitudes[idx + n * stride].conj();
            }
        }
    }
    Ok(rho)
}
