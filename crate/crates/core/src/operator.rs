//! Sparse operators on a truncated Fock basis and total-number sectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockVector};

/// Row-compressed complex matrix acting on a [`FockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    basis: FockBasis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(basis: FockBasis, mut triplets: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: r.max(c) + 1 });
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut k_cols = Vec::with_capacity(cols.len());
        let mut k_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows_of.into_iter().zip(cols).zip(vals) {
            if v != zero {
                row_ptr[r + 1] += 1;
                k_cols.push(c);
                k_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { basis, row_ptr, cols: k_cols, vals: k_vals })
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r).find(|&(j, _)| j == c).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn apply_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim()).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        if state.basis() != self.basis {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.basis().dim() });
        }
        state.with_amplitudes(self.apply_slice(state.amplitudes()))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    /// Whether every nonzero entry connects states of equal total occupation.
    pub fn conserves_number(&self) -> bool {
        self.triplets().all(|(r, c, _)| self.basis.total_number(r) == self.basis.total_number(c))
    }

    /// Keeps only entries whose row and column agree on the occupation of
    /// every mode in `modes`: the average of `e^{iθ·n} H e^{-iθ·n}` over
    /// independent uniform phases.
    pub fn phase_twirl(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            self.basis.check_mode(m)?;
        }
        let kept = self
            .triplets()
            .filter(|&(r, c, _)| modes.iter().all(|&m| self.basis.occupation(r, m) == self.basis.occupation(c, m)))
            .collect();
        Self::from_triplets(self.basis, kept)
    }
}

/// Partition of basis indices by total particle number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumberSectors {
    sectors: Vec<Vec<usize>>,
    sector_of: Vec<usize>,
    position: Vec<usize>,
}

impl NumberSectors {
    pub fn new(basis: FockBasis) -> Self {
        let max_n = basis.num_modes() * basis.cutoff();
        let mut sectors = vec![Vec::new(); max_n + 1];
        for idx in 0..basis.dim() {
            sectors[basis.total_number(idx)].push(idx);
        }
        Self::from_sectors(sectors, basis.dim())
    }

    /// One sector covering the whole space.
    pub fn trivial(dim: usize) -> Self {
        Self::from_sectors(vec![(0..dim).collect()], dim)
    }

    fn from_sectors(sectors: Vec<Vec<usize>>, dim: usize) -> Self {
        let mut sector_of = vec![0; dim];
        let mut position = vec![0; dim];
        for (s, idxs) in sectors.iter().enumerate() {
            for (p, &i) in idxs.iter().enumerate() {
                sector_of[i] = s;
                position[i] = p;
            }
        }
        Self { sectors, sector_of, position }
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn indices(&self, s: usize) -> &[usize] {
        &self.sectors[s]
    }

    pub fn sector_of(&self, index: usize) -> usize {
        self.sector_of[index]
    }

    pub fn position(&self, index: usize) -> usize {
        self.position[index]
    }

    pub fn max_block(&self) -> usize {
        self.sectors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Dense diagonal blocks of `op`; fails if `op` couples different sectors.
    pub fn blocks(&self, op: &SparseOperator) -> Result<Vec<DMatrix<Complex64>>> {
        let mut blocks: Vec<DMatrix<Complex64>> =
            self.sectors.iter().map(|s| DMatrix::zeros(s.len(), s.len())).collect();
        for (r, c, v) in op.triplets() {
            let s = self.sector_of[r];
            if self.sector_of[c] != s {
                return Err(Error::InvalidModel("operator couples different number sectors".into()));
            }
            blocks[s][(self.position[r], self.position[c])] = v;
        }
        Ok(blocks)
    }

    pub fn gather(&self, s: usize, x: &[Complex64]) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_iterator(self.sectors[s].len(), self.sectors[s].iter().map(|&i| x[i]))
    }

    pub fn scatter(&self, s: usize, v: &nalgebra::DVector<Complex64>, out: &mut [Complex64]) {
        for (p, &i) in self.sectors[s].iter().enumerate() {
            out[i] = v[p];
        }
    }
}
