use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{reduced_density, FockVector};

pub const DEFAULT_DX: f64 = 0.01;
/// Hard limit on tabulated |x|; every Hermite function up to the supported
/// cutoffs has underflowed well before it.
pub const SUPPORT_LIMIT: f64 = 40.0;
/// Cells where every `φ_n(x)²` is below this are left out of the table.
const NEGLIGIBLE_DENSITY: f64 = 1e-40;
const MASS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

/// `φ_0..=φ_cutoff` at `x` by the normalized three-term recurrence.
pub fn hermite_functions(x: f64, cutoff: usize) -> Vec<f64> {
    let mut phi = Vec::with_capacity(cutoff + 1);
    phi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if cutoff >= 1 {
        phi.push(2f64.sqrt() * x * phi[0]);
    }
    for n in 1..cutoff {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * phi[n] - (nf / (nf + 1.0)).sqrt() * phi[n - 1];
        phi.push(next);
    }
    phi
}

/// Hermite functions tabulated at the cell centres of a position grid.
#[derive(Clone, Debug)]
pub struct HermiteTable {
    cutoff: usize,
    x_max: f64,
    dx: f64,
    /// First tabulated cell and its centre.
    first_cell: usize,
    x_first: f64,
    cells: usize,
    values: Vec<f64>,
}

impl HermiteTable {
    pub fn new(cutoff: usize, x_max: f64, dx: f64) -> Result<Self> {
        if !(x_max > 0.0 && dx > 0.0 && x_max.is_finite() && dx.is_finite()) {
            return Err(Error::Constraint("grid needs positive x_max and dx".into()));
        }
        let total = (2.0 * x_max / dx).round() as usize;
        let centre = |k: usize| -x_max + (k as f64 + 0.5) * dx;
        let mut limit = SUPPORT_LIMIT.min(x_max);
        while limit > 1.0 {
            let peak = hermite_functions(limit, cutoff).iter().map(|f| f * f).fold(0.0, f64::max);
            if peak >= NEGLIGIBLE_DENSITY {
                break;
            }
            limit -= 0.5;
        }
        let limit = (limit + 0.5).min(x_max);
        let first_cell = (0..total).find(|&k| centre(k) >= -limit).unwrap_or(0);
        let last = (0..total).rev().find(|&k| centre(k) <= limit).unwrap_or(0);
        let cells = last + 1 - first_cell;
        let levels = cutoff + 1;
        let mut values = Vec::with_capacity(cells * levels);
        for k in first_cell..=last {
            values.extend(hermite_functions(centre(k), cutoff));
        }
        Ok(Self { cutoff, x_max, dx, first_cell, x_first: centre(first_cell), cells, values })
    }

    /// Grid used for threshold `m`: `x_max = max(6, m + 2)`, `dx = 0.01`.
    pub fn for_threshold(cutoff: usize, m: f64) -> Result<Self> {
        Self::new(cutoff, (m + 2.0).max(6.0), DEFAULT_DX)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn first_cell(&self) -> usize {
        self.first_cell
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn x(&self, cell: usize) -> f64 {
        self.x_first + cell as f64 * self.dx
    }

    fn row(&self, cell: usize) -> &[f64] {
        let l = self.cutoff + 1;
        &self.values[cell * l..(cell + 1) * l]
    }

    /// Distribution of X for a mixture `Σ_j |u_j><u_j|` of unnormalized
    /// single-mode vectors.
    pub fn distribution_from_components(&self, components: &[Vec<Complex64>]) -> Result<QuadratureDistribution> {
        let mut probs = vec![0.0; self.cells];
        for (k, p) in probs.iter_mut().enumerate() {
            let phi = self.row(k);
            for u in components {
                let amp: Complex64 = u.iter().zip(phi).map(|(c, f)| c * f).sum();
                *p += amp.norm_sqr();
            }
            *p *= self.dx;
        }
        let mass: f64 = probs.iter().sum();
        if !mass.is_finite() || (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::GridUnderflow { missing: (1.0 - mass).abs() });
        }
        for p in &mut probs {
            *p /= mass;
        }
        Ok(QuadratureDistribution { x_first: self.x_first, dx: self.dx, probs, cdf: Vec::new() })
    }
}

/// Cell probabilities of a quadrature outcome; samples are cell centres.
#[derive(Clone, Debug)]
pub struct QuadratureDistribution {
    x_first: f64,
    dx: f64,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

/// Sum of truncated outcomes `x·1{|x| <= M}` over a batch of shots.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TruncatedSum {
    pub sum: f64,
    pub kept: u64,
    pub shots: u64,
}

impl TruncatedSum {
    pub fn merge(self, other: TruncatedSum) -> TruncatedSum {
        TruncatedSum { sum: self.sum + other.sum, kept: self.kept + other.kept, shots: self.shots + other.shots }
    }

    /// Average with discarded shots counted as zero.
    pub fn mean(&self) -> f64 {
        self.sum / self.shots as f64
    }
}

impl QuadratureDistribution {
    pub fn x(&self, cell: usize) -> f64 {
        self.x_first + cell as f64 * self.dx
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| p * self.x(k)).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs.iter().enumerate().map(|(k, p)| p * (self.x(k) - mu).powi(2)).sum()
    }

    /// Exact `<X·1{|X| <= M}>` under this distribution.
    pub fn truncated_mean(&self, m: f64) -> f64 {
        self.probs.iter().enumerate().filter(|(k, _)| self.x(*k).abs() <= m).map(|(k, p)| p * self.x(k)).sum()
    }

    /// Probability that `|X| > M`.
    pub fn tail_mass(&self, m: f64) -> f64 {
        self.probs.iter().enumerate().filter(|(k, _)| self.x(*k).abs() > m).map(|(_, p)| p).sum()
    }

    /// Inverse-CDF draw of one outcome.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if self.cdf.is_empty() {
            let mut acc = 0.0;
            self.cdf = self.probs.iter().map(|p| {
                acc += p;
                acc
            }).collect();
        }
        let u: f64 = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        let k = self.cdf.partition_point(|&c| c < u).min(self.probs.len() - 1);
        self.x(k)
    }

    /// `shots` outcomes drawn as a multinomial over cells (sequential binomials).
    pub fn sample_batch<R: Rng + ?Sized>(&self, shots: u64, m: f64, rng: &mut R) -> TruncatedSum {
        let mut left = shots;
        let mut mass = 1.0;
        let mut out = TruncatedSum { shots, ..Default::default() };
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (k, &p) in self.probs.iter().enumerate() {
            if left == 0 {
                break;
            }
            if p <= 0.0 {
                continue;
            }
            let q = if k == last || p >= mass { 1.0 } else { (p / mass).clamp(0.0, 1.0) };
            let c = if q >= 1.0 { left } else { Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0) };
            mass -= p;
            left -= c;
            let x = self.x(k);
            if c > 0 && x.abs() <= m {
                out.sum += c as f64 * x;
                out.kept += c;
            }
        }
        out
    }
}

/// Homodyne detector on one mode of a multi-mode state.
#[derive(Clone, Debug)]
pub struct QuadratureSampler {
    pub mode: usize,
    pub quadrature: Quadrature,
    table: Arc<HermiteTable>,
}

impl QuadratureSampler {
    pub fn new(mode: usize, quadrature: Quadrature, table: Arc<HermiteTable>) -> Self {
        Self { mode, quadrature, table }
    }

    pub fn table(&self) -> &Arc<HermiteTable> {
        &self.table
    }

    /// Marginal outcome distribution on the sampler's mode.
    pub fn distribution(&self, state: &FockVector) -> Result<QuadratureDistribution> {
        self.mixture_distribution(&[(1.0, state.clone())])
    }

    /// Outcome distribution for the ensemble `Σ w_k |ψ_k><ψ_k|`.
    pub fn mixture_distribution(&self, ensemble: &[(f64, FockVector)]) -> Result<QuadratureDistribution> {
        let total: f64 = ensemble.iter().map(|(w, _)| *w).sum();
        if ensemble.is_empty() || !(total > 0.0) || ensemble.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::Constraint("ensemble weights must be non-negative with positive sum".into()));
        }
        let mut components: Vec<Vec<Complex64>> = Vec::new();
        for (w, state) in ensemble {
            if state.cutoff() != self.table.cutoff() {
                return Err(Error::DimensionMismatch { expected: self.table.cutoff() + 1, found: state.cutoff() + 1 });
            }
            state.basis().check_mode(self.mode)?;
            let scale = (w / total).sqrt();
            if scale == 0.0 {
                continue;
            }
            if state.num_modes() == 1 {
                components.push(state.amplitudes().iter().map(|c| c * scale).collect());
            } else {
                for u in mixture_components(&reduced_density(state, self.mode)?) {
                    components.push(u.into_iter().map(|c| c * scale).collect());
                }
            }
        }
        if self.quadrature == Quadrature::P {
            // Measuring X after e^{-i(π/2)n} measures P.
            for u in &mut components {
                for (n, c) in u.iter_mut().enumerate() {
                    *c *= Complex64::new(0.0, -1.0).powu(n as u32);
                }
            }
        }
        self.table.distribution_from_components(&components)
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: &FockVector, rng: &mut R) -> Result<f64> {
        Ok(self.distribution(state)?.sample(rng))
    }
}

/// Vectors `sqrt(λ_j) v_j` of a density matrix, dropping negligible weights.
fn mixture_components(rho: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    let eig = rho.clone().symmetric_eigen();
    let mut out = Vec::new();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 1e-14 {
            out.push(eig.eigenvectors.column(j).iter().map(|c| c * l.sqrt()).collect());
        }
    }
    out
}
