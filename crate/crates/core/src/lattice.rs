//! Bosonic lattice Hamiltonians on bounded-degree graphs.
//!
//! `H = Σ_{<i,j>} (h_ij b_i†b_j + h.c.) + Σ_i ω_i n_i + Σ_i (ξ_i/2) n_i(n_i-1)`

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::operator::SparseOperator;

const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeModel {
    num_modes: usize,
    /// Sorted edges with `i < j`.
    edges: Vec<(usize, usize)>,
    /// `h_ij` for each edge, `i < j`.
    hopping: Vec<Complex64>,
    omega: Vec<f64>,
    xi: Vec<f64>,
}

impl LatticeModel {
    /// Couplings may be listed in either orientation; listing both requires
    /// `h_ji = conj(h_ij)`.
    pub fn new(
        num_modes: usize,
        couplings: &[(usize, usize, Complex64)],
        omega: Vec<f64>,
        xi: Vec<f64>,
    ) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::InvalidModel("no modes".into()));
        }
        if omega.len() != num_modes || xi.len() != num_modes {
            return Err(Error::InvalidModel("omega and xi need one entry per mode".into()));
        }
        for (name, vals) in [("omega", &omega), ("xi", &xi)] {
            for (i, v) in vals.iter().enumerate() {
                if !v.is_finite() || v.abs() > 1.0 + BOUND_SLACK {
                    return Err(Error::InvalidModel(format!("{name}[{i}] = {v} outside [-1, 1]")));
                }
            }
        }
        let mut normalized: Vec<(usize, usize, Complex64)> = Vec::new();
        for &(a, b, h) in couplings {
            if a >= num_modes || b >= num_modes {
                return Err(Error::ModeOutOfRange { mode: a.max(b), num_modes });
            }
            if a == b {
                return Err(Error::InvalidModel(format!("self-loop on mode {a}")));
            }
            if !(h.re.is_finite() && h.im.is_finite()) || h.norm() > 1.0 + BOUND_SLACK {
                return Err(Error::InvalidModel(format!("|h_{a}{b}| = {} exceeds 1", h.norm())));
            }
            let (i, j, hij) = if a < b { (a, b, h) } else { (b, a, h.conj()) };
            if let Some(prev) = normalized.iter().find(|e| e.0 == i && e.1 == j) {
                if (prev.2 - hij).norm() > BOUND_SLACK {
                    return Err(Error::InconsistentHopping { i: a, j: b });
                }
                continue;
            }
            normalized.push((i, j, hij));
        }
        normalized.sort_by_key(|e| (e.0, e.1));
        Ok(Self {
            num_modes,
            edges: normalized.iter().map(|e| (e.0, e.1)).collect(),
            hopping: normalized.iter().map(|e| e.2).collect(),
            omega,
            xi,
        })
    }

    /// Parameters drawn uniformly: ω, ξ in [-1, 1] and h in the unit disk.
    pub fn random<R: Rng + ?Sized>(num_modes: usize, edges: &[(usize, usize)], rng: &mut R) -> Result<Self> {
        let omega = (0..num_modes).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let xi = (0..num_modes).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let couplings: Vec<_> = edges
            .iter()
            .map(|&(i, j)| {
                let r = rng.random::<f64>().sqrt();
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                (i, j, Complex64::from_polar(r, phi))
            })
            .collect();
        Self::new(num_modes, &couplings, omega, xi)
    }

    pub fn single_mode(omega: f64, xi: f64) -> Result<Self> {
        Self::new(1, &[], vec![omega], vec![xi])
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn hopping(&self) -> &[Complex64] {
        &self.hopping
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `h_ij` with the Hermitian convention `h_ji = conj(h_ij)`; zero when absent.
    pub fn h(&self, i: usize, j: usize) -> Complex64 {
        let (a, b, conj) = if i < j { (i, j, false) } else { (j, i, true) };
        match self.edges.iter().position(|&e| e == (a, b)) {
            Some(k) if conj => self.hopping[k].conj(),
            Some(k) => self.hopping[k],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    /// Maximum vertex degree `D`.
    pub fn max_degree(&self) -> usize {
        (0..self.num_modes).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(i, j)| if i == v { Some(j) } else if j == v { Some(i) } else { None })
            .collect()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&key)
    }

    /// Same parameters restricted to the edges accepted by `keep`.
    pub fn retain_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut out = self.clone();
        out.edges.clear();
        out.hopping.clear();
        for (&(i, j), &h) in self.edges.iter().zip(&self.hopping) {
            if keep(i, j) {
                out.edges.push((i, j));
                out.hopping.push(h);
            }
        }
        out
    }

    /// The model restricted to `modes` (in the given order), renumbered from 0.
    pub fn submodel(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            if m >= self.num_modes {
                return Err(Error::ModeOutOfRange { mode: m, num_modes: self.num_modes });
            }
        }
        let pos = |m: usize| modes.iter().position(|&x| x == m);
        let couplings: Vec<_> = self
            .edges
            .iter()
            .zip(&self.hopping)
            .filter_map(|(&(i, j), &h)| Some((pos(i)?, pos(j)?, h)))
            .collect();
        Self::new(
            modes.len(),
            &couplings,
            modes.iter().map(|&m| self.omega[m]).collect(),
            modes.iter().map(|&m| self.xi[m]).collect(),
        )
    }
}

pub fn chain_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

/// Nearest-neighbour edges of a `rows x cols` grid, row-major vertex order.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    edges.sort();
    edges
}

/// Star `K_{1,leaves}` with centre 0.
pub fn star_edges(leaves: usize) -> Vec<(usize, usize)> {
    (1..=leaves).map(|l| (0, l)).collect()
}

/// Truncated-space action of the model Hamiltonian.
pub fn build_hamiltonian(model: &LatticeModel, cutoff: usize) -> Result<SparseOperator> {
    let basis = FockBasis::new(model.num_modes, cutoff)?;
    let mut triplets = Vec::new();
    for idx in 0..basis.dim() {
        let mut diag = 0.0;
        for m in 0..model.num_modes {
            let n = basis.occupation(idx, m) as f64;
            diag += model.omega[m] * n + 0.5 * model.xi[m] * n * (n - 1.0);
        }
        if diag != 0.0 {
            triplets.push((idx, idx, Complex64::new(diag, 0.0)));
        }
        for (&(i, j), &h) in model.edges.iter().zip(&model.hopping) {
            let (ni, nj) = (basis.occupation(idx, i), basis.occupation(idx, j));
            // h_ij b_i† b_j
            if ni < cutoff && nj > 0 {
                let to = idx + basis.stride(i) - basis.stride(j);
                let amp = (((ni + 1) * nj) as f64).sqrt();
                triplets.push((to, idx, h * amp));
            }
            // conj(h_ij) b_j† b_i
            if nj < cutoff && ni > 0 {
                let to = idx + basis.stride(j) - basis.stride(i);
                let amp = (((nj + 1) * ni) as f64).sqrt();
                triplets.push((to, idx, h.conj() * amp));
            }
        }
    }
    let h = SparseOperator::from_triplets(basis, triplets)?;
    let defect = h.hermiticity_defect();
    if defect > 1e-12 {
        return Err(Error::NonHermitian { defect });
    }
    Ok(h)
}

/// Distance-2 edge coloring: `colors[k]` is the color of `model.edges()[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringScheme {
    pub edges: Vec<(usize, usize)>,
    pub colors: Vec<usize>,
    pub chi: usize,
}

impl ColoringScheme {
    pub fn edges_of_color(&self, c: usize) -> Vec<(usize, usize)> {
        self.edges.iter().zip(&self.colors).filter(|(_, &k)| k == c).map(|(e, _)| *e).collect()
    }
}

/// Edges within link-graph distance 2: sharing a vertex, or joined by an edge.
pub fn edges_conflict(model: &LatticeModel, a: (usize, usize), b: (usize, usize)) -> bool {
    let ends_a = [a.0, a.1];
    let ends_b = [b.0, b.1];
    ends_a.iter().any(|x| ends_b.contains(x))
        || ends_a.iter().any(|&x| ends_b.iter().any(|&y| model.are_adjacent(x, y)))
}

/// Node budget for each attempt to remove one color by backtracking.
const RECOLOR_BUDGET: usize = 50_000;

/// Greedy coloring over lexicographically sorted edges (first free color wins),
/// then bounded backtracking searches that each try to drop one color. Colors
/// are numbered by first appearance in edge order.
pub fn color_link_graph(model: &LatticeModel) -> ColoringScheme {
    let edges = model.edges.clone();
    let n = edges.len();
    let conflicts: Vec<Vec<usize>> =
        (0..n).map(|a| (0..n).filter(|&b| b != a && edges_conflict(model, edges[a], edges[b])).collect()).collect();
    let mut colors: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        let used: Vec<usize> = conflicts[k].iter().filter(|&&p| p < k).map(|&p| colors[p]).collect();
        colors.push((0..).find(|c| !used.contains(c)).unwrap());
    }
    let mut chi = colors.iter().map(|c| c + 1).max().unwrap_or(0);
    while chi > 1 {
        match color_with(&conflicts, chi - 1) {
            Some(better) => {
                colors = better;
                chi -= 1;
            }
            None => break,
        }
    }
    let mut relabel: Vec<Option<usize>> = vec![None; chi];
    let mut next = 0;
    for c in &mut colors {
        let label = *relabel[*c].get_or_insert_with(|| {
            next += 1;
            next - 1
        });
        *c = label;
    }
    ColoringScheme { edges, colors, chi }
}

/// A `k`-coloring of the conflict graph by backtracking in saturation order,
/// or `None` if none is found within the node budget.
fn color_with(conflicts: &[Vec<usize>], k: usize) -> Option<Vec<usize>> {
    fn search(conflicts: &[Vec<usize>], k: usize, colors: &mut [Option<usize>], nodes: &mut usize) -> bool {
        // Most constrained uncolored edge, ties to the smallest index.
        let mut pick: Option<(usize, usize, usize)> = None;
        for v in 0..colors.len() {
            if colors[v].is_some() {
                continue;
            }
            let mut seen: Vec<usize> = conflicts[v].iter().filter_map(|&u| colors[u]).collect();
            seen.sort_unstable();
            seen.dedup();
            let key = (seen.len(), conflicts[v].len());
            if pick.is_none_or(|(s, d, _)| key > (s, d)) {
                pick = Some((key.0, key.1, v));
            }
        }
        let Some((_, _, v)) = pick else { return true };
        for c in 0..k {
            if conflicts[v].iter().any(|&u| colors[u] == Some(c)) {
                continue;
            }
            *nodes += 1;
            if *nodes > RECOLOR_BUDGET {
                return false;
            }
            colors[v] = Some(c);
            if search(conflicts, k, colors, nodes) {
                return true;
            }
            colors[v] = None;
        }
        false
    }
    let mut colors = vec![None; conflicts.len()];
    let mut nodes = 0;
    search(conflicts, k, &mut colors, &mut nodes).then(|| colors.into_iter().map(Option::unwrap).collect())
}

/// Brute-force pairwise validity check of a coloring against a model.
pub fn validate_coloring(model: &LatticeModel, scheme: &ColoringScheme) -> Result<()> {
    if scheme.edges != model.edges || scheme.colors.len() != scheme.edges.len() {
        return Err(Error::InvalidColoring("edge list does not match the model".into()));
    }
    if scheme.colors.iter().any(|&c| c >= scheme.chi) {
        return Err(Error::InvalidColoring("color index exceeds chi".into()));
    }
    for a in 0..scheme.edges.len() {
        for b in a + 1..scheme.edges.len() {
            if scheme.colors[a] == scheme.colors[b] && edges_conflict(model, scheme.edges[a], scheme.edges[b]) {
                return Err(Error::InvalidColoring(format!(
                    "edges {:?} and {:?} share color {} within distance 2",
                    scheme.edges[a], scheme.edges[b], scheme.colors[a]
                )));
            }
        }
    }
    Ok(())
}

/// Upper bound `4(D-1)^2 + 1` on the number of colors.
pub fn chi_bound(max_degree: usize) -> usize {
    let d = max_degree.max(1) - 1;
    4 * d * d + 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColorClusters {
    /// Edges of the color, plus singletons for degree-zero vertices.
    pub clusters: Vec<Vec<usize>>,
    /// Modes outside every cluster; their phases get randomized.
    pub spectators: Vec<usize>,
}

impl ColorClusters {
    pub fn cluster_modes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.clusters.iter().flatten().copied().collect();
        v.sort();
        v
    }
}

pub fn clusters_for_color(model: &LatticeModel, scheme: &ColoringScheme, c: usize) -> Result<ColorClusters> {
    validate_coloring(model, scheme)?;
    if c >= scheme.chi.max(1) {
        return Err(Error::InvalidColoring(format!("color {c} not in scheme with chi = {}", scheme.chi)));
    }
    let mut clusters: Vec<Vec<usize>> = scheme.edges_of_color(c).into_iter().map(|(i, j)| vec![i, j]).collect();
    for v in 0..model.num_modes {
        if model.degree(v) == 0 {
            clusters.push(vec![v]);
        }
    }
    clusters.sort();
    let mut seen = vec![false; model.num_modes];
    for m in clusters.iter().flatten() {
        if seen[*m] {
            return Err(Error::InvalidColoring(format!("mode {m} belongs to two clusters")));
        }
        seen[*m] = true;
    }
    let spectators = (0..model.num_modes).filter(|&m| !seen[m]).collect();
    let out = ColorClusters { clusters, spectators };
    // Each cluster mode keeps at most one partner in the effective model.
    let eff = effective_model_for_color(model, scheme, c)?;
    for m in out.cluster_modes() {
        if eff.degree(m) > 1 {
            return Err(Error::InvalidColoring(format!("mode {m} keeps {} couplings", eff.degree(m))));
        }
    }
    Ok(out)
}

/// Keeps only the couplings of color `c`; on-site terms unchanged.
pub fn effective_model_for_color(model: &LatticeModel, scheme: &ColoringScheme, c: usize) -> Result<LatticeModel> {
    if scheme.edges != model.edges {
        return Err(Error::InvalidColoring("edge list does not match the model".into()));
    }
    let keep = scheme.edges_of_color(c);
    Ok(model.retain_edges(|i, j| keep.contains(&(i, j))))
}
