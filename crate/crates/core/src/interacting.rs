//! Exact diagonalization of the XXZ chain in fixed-magnetization sectors.
//!
//! Basis states are bitstrings with bit `i` set when site `i` is up. The
//! Hamiltonian `Σ_b J_b (S^x S^x + S^y S^y + Δ S^z S^z)` conserves `S^z`, so
//! each sector is built as a sparse matrix and solved densely when small or
//! with restarted Lanczos otherwise.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::couplings::CouplingChain;
use crate::error::{Error, Result};

pub const MAX_SITES: usize = 28;
pub const MAX_SUBSYSTEM: usize = 12;
/// Gap below which two levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxzModel {
    sites: usize,
    /// Bond `k` joins sites `k` and `k + 1 (mod L)`.
    bonds: Vec<f64>,
    pub anisotropy: f64,
    pub boundary: Boundary,
}

impl XxzModel {
    /// `bonds.len()` must be `L` for a ring and `L − 1` for an open chain.
    pub fn new(sites: usize, bonds: Vec<f64>, anisotropy: f64, boundary: Boundary) -> Result<Self> {
        if sites < 2 {
            return Err(Error::Dimension(format!("need at least 2 sites, got {sites}")));
        }
        if sites > MAX_SITES {
            return Err(Error::TooLarge(format!("{sites} sites exceeds {MAX_SITES}")));
        }
        let expected = match boundary {
            Boundary::Open => sites - 1,
            Boundary::Periodic => sites,
        };
        if bonds.len() != expected {
            return Err(Error::Dimension(format!("{} bonds for {sites} sites ({boundary:?})", bonds.len())));
        }
        if !anisotropy.is_finite() || bonds.iter().any(|j| !j.is_finite()) {
            return Err(Error::InvalidCouplings("non-finite XXZ parameter".into()));
        }
        Ok(XxzModel { sites, bonds, anisotropy, boundary })
    }

    /// One site per coupling; an open chain drops the wrap-around bond.
    pub fn from_chain(chain: &CouplingChain, anisotropy: f64, boundary: Boundary) -> Result<Self> {
        let l = chain.len();
        let mut bonds = chain.values.clone();
        if boundary == Boundary::Open {
            bonds.pop();
        }
        Self::new(l, bonds, anisotropy, boundary)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn bonds(&self) -> &[f64] {
        &self.bonds
    }

    fn bond_sites(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.bonds.iter().enumerate().map(|(k, &j)| (k, (k + 1) % self.sites, j))
    }
}

/// Basis of one `S^z` sector, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    pub sites: usize,
    /// Twice the total `S^z`.
    pub sz2: i32,
    pub states: Vec<u64>,
}

impl SectorBasis {
    pub fn new(sites: usize, sz2: i32) -> Result<Self> {
        if sites > MAX_SITES {
            return Err(Error::TooLarge(format!("{sites} sites exceeds {MAX_SITES}")));
        }
        let ups = sites as i32 + sz2;
        if ups < 0 || ups % 2 != 0 || ups / 2 > sites as i32 {
            return Err(Error::Dimension(format!("no sector 2Sz={sz2} on {sites} sites")));
        }
        let ups = (ups / 2) as u32;
        let states = (0u64..1 << sites).filter(|s| s.count_ones() == ups).collect();
        Ok(SectorBasis { sites, sz2, states })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index(&self, state: u64) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }
}

/// Compressed-sparse-row symmetric matrix.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn build(model: &XxzModel, basis: &SectorBasis) -> Self {
        let mut row_ptr = Vec::with_capacity(basis.dim() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &s in &basis.states {
            let mut diag = 0.0;
            let mut row: Vec<(u32, f64)> = Vec::new();
            for (i, j, jb) in model.bond_sites() {
                let (bi, bj) = ((s >> i) & 1, (s >> j) & 1);
                diag += if bi == bj { 0.25 } else { -0.25 } * model.anisotropy * jb;
                if bi != bj {
                    let t = s ^ (1 << i) ^ (1 << j);
                    let col = basis.index(t).expect("flip stays in sector") as u32;
                    row.push((col, 0.5 * jb));
                }
            }
            row.push((basis.index(s).unwrap() as u32, diag));
            row.sort_by_key(|e| e.0);
            // Duplicate columns arise when two bonds join the same pair.
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseHamiltonian { dim: basis.dim(), row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *out = self.cols[lo..hi].iter().zip(&self.vals[lo..hi]).map(|(&c, &v)| v * x[c as usize]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Required `‖Hψ − Eψ‖`.
    pub tolerance: f64,
    /// Sectors up to this size are diagonalized densely.
    pub dense_threshold: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Also solve `2S^z = ±2` (on top of the default sector) and compare.
    pub scan_sectors: bool,
    /// Compute the in-sector gap to flag degenerate ground states.
    pub check_gap: bool,
    /// Memory cap for stored Krylov vectors, bytes.
    pub krylov_memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-9,
            dense_threshold: 2000,
            krylov_dim: 120,
            max_restarts: 60,
            seed: 0,
            scan_sectors: false,
            check_gap: true,
            krylov_memory: 1 << 30,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub basis: SectorBasis,
    pub vector: Vec<f64>,
    pub residual: f64,
    /// In-sector gap, when computed.
    pub gap: Option<f64>,
    /// Another level (in this or a scanned sector) within `DEGENERACY_TOL`.
    pub degenerate: bool,
    /// Energies of all solved sectors as `(2S^z, E)`.
    pub sector_energies: Vec<(i32, f64)>,
}

impl GroundState {
    pub fn sites(&self) -> usize {
        self.basis.sites
    }
}

struct Eigenpair {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    n
}

fn residual(h: &SparseHamiltonian, v: &[f64], e: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    h.apply(v, &mut hv);
    axpy(-e, v, &mut hv);
    dot(&hv, &hv).sqrt()
}

/// Lowest eigenpair orthogonal to `deflate`, by explicitly restarted Lanczos
/// with full reorthogonalization.
fn lanczos(h: &SparseHamiltonian, deflate: &[&[f64]], opts: &SolverOptions) -> Result<Eigenpair> {
    let dim = h.dim();
    let cap = (opts.krylov_memory / (8 * dim.max(1))).max(4);
    let m_max = opts.krylov_dim.min(cap).min(dim - deflate.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut last_res = f64::INFINITY;
    for _ in 0..opts.max_restarts {
        for q in deflate {
            axpy(-dot(&v, q), q, &mut v);
        }
        normalize(&mut v);
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        loop {
            let j = basis.len() - 1;
            h.apply(&basis[j], &mut w);
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            for _ in 0..2 {
                for q in deflate.iter().copied().chain(basis.iter().map(|b| b.as_slice())) {
                    let c = dot(&w, q);
                    axpy(-c, q, &mut w);
                }
            }
            let beta = dot(&w, &w).sqrt();
            if beta < 1e-12 || basis.len() >= m_max {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let k = alphas.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let i0 = eig.eigenvalues.imin();
        let theta = eig.eigenvalues[i0];
        let mut ritz = vec![0.0; dim];
        for (c, b) in eig.eigenvectors.column(i0).iter().zip(&basis) {
            axpy(*c, b, &mut ritz);
        }
        normalize(&mut ritz);
        let res = residual(h, &ritz, theta);
        if res <= opts.tolerance {
            return Ok(Eigenpair { value: theta, vector: ritz, residual: res });
        }
        last_res = res;
        v = ritz;
    }
    Err(Error::NoConvergence { iterations: opts.max_restarts * m_max, residual: last_res })
}

/// Lowest two eigenpairs of a sector (the second only if requested).
fn solve_sector(h: &SparseHamiltonian, opts: &SolverOptions) -> Result<(Eigenpair, Option<f64>)> {
    if h.dim() <= opts.dense_threshold {
        let eig = SymmetricEigen::new(h.to_dense());
        let mut order: Vec<usize> = (0..h.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let value = eig.eigenvalues[order[0]];
        let vector: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
        let res = residual(h, &vector, value);
        let gap = order.get(1).map(|&i| eig.eigenvalues[i] - value);
        return Ok((Eigenpair { value, vector, residual: res }, gap));
    }
    let ground = lanczos(h, &[], opts)?;
    let gap = if opts.check_gap {
        let excited = lanczos(h, &[&ground.vector], opts)?;
        Some(excited.value - ground.value)
    } else {
        None
    };
    Ok((ground, gap))
}

/// Ground state in the sector of twice-magnetization `sz2`.
pub fn ground_state_in_sector(model: &XxzModel, sz2: i32, opts: &SolverOptions) -> Result<GroundState> {
    let basis = SectorBasis::new(model.sites(), sz2)?;
    let h = SparseHamiltonian::build(model, &basis);
    let (pair, gap) = solve_sector(&h, opts)?;
    Ok(GroundState {
        energy: pair.value,
        degenerate: gap.is_some_and(|g| g < DEGENERACY_TOL),
        basis,
        vector: pair.vector,
        residual: pair.residual,
        gap,
        sector_energies: vec![(sz2, pair.value)],
    })
}

/// Ground state in the lowest-|S^z| sector, optionally compared with `±1`.
pub fn ground_state(model: &XxzModel, opts: &SolverOptions) -> Result<GroundState> {
    let base = (model.sites() % 2) as i32;
    let mut best = ground_state_in_sector(model, base, opts)?;
    if !opts.scan_sectors {
        return Ok(best);
    }
    let mut energies = best.sector_energies.clone();
    for sz2 in [base + 2, base - 2] {
        if sz2.unsigned_abs() as usize > model.sites() {
            continue;
        }
        let other = ground_state_in_sector(model, sz2, opts)?;
        energies.push((sz2, other.energy));
        if other.energy < best.energy - DEGENERACY_TOL {
            best = other;
        }
    }
    energies.sort_by_key(|e| e.0);
    let e0 = best.energy;
    best.degenerate |= energies.iter().filter(|(_, e)| (e - e0).abs() < DEGENERACY_TOL).count() > 1;
    best.sector_energies = energies;
    Ok(best)
}

/// Reduced density matrix of a cyclic window, block-diagonal in `S^z_A`.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    pub sites: usize,
    /// `(local configurations, block)`; bit `p` of a label is window site `p`.
    pub blocks: Vec<(Vec<u64>, DMatrix<f64>)>,
}

impl ReducedDensityMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = 1usize << self.sites;
        let mut rho = DMatrix::zeros(d, d);
        for (labels, block) in &self.blocks {
            for (i, &a) in labels.iter().enumerate() {
                for (j, &b) in labels.iter().enumerate() {
                    rho[(a as usize, b as usize)] = block[(i, j)];
                }
            }
        }
        rho
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|(_, b)| b.trace()).sum()
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|(_, b)| b.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>())
            .map(|p| if p > 1e-15 { -p * p.ln() } else { 0.0 })
            .sum()
    }
}

pub fn reduced_density_matrix(state: &GroundState, start: usize, len: usize) -> Result<ReducedDensityMatrix> {
    let l = state.sites();
    if len > MAX_SUBSYSTEM {
        return Err(Error::TooLarge(format!("subsystem of {len} sites exceeds {MAX_SUBSYSTEM}")));
    }
    if len > l {
        return Err(Error::Dimension(format!("subsystem of {len} sites in {l}")));
    }
    let window: Vec<usize> = (0..len).map(|p| (start + p) % l).collect();
    let mask: u64 = window.iter().fold(0, |m, &i| m | 1 << i);
    let mut groups: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
    for (&s, &amp) in state.basis.states.iter().zip(&state.vector) {
        if amp == 0.0 {
            continue;
        }
        let local = window.iter().enumerate().fold(0u64, |a, (p, &i)| a | ((s >> i) & 1) << p);
        groups.entry(s & !mask).or_default().push((local, amp));
    }
    let mut blocks: Vec<(Vec<u64>, DMatrix<f64>)> = (0..=len as u32)
        .map(|n| {
            let labels: Vec<u64> = (0u64..1 << len).filter(|a| a.count_ones() == n).collect();
            let d = labels.len();
            (labels, DMatrix::zeros(d, d))
        })
        .collect();
    // Labels within a block are ascending; map each to its row.
    let index: Vec<HashMap<u64, usize>> =
        blocks.iter().map(|(labels, _)| labels.iter().enumerate().map(|(i, &a)| (a, i)).collect()).collect();
    for entries in groups.values() {
        for &(a, x) in entries {
            let n = a.count_ones() as usize;
            let i = index[n][&a];
            for &(b, y) in entries {
                if b.count_ones() as usize == n {
                    blocks[n].1[(i, index[n][&b])] += x * y;
                }
            }
        }
    }
    blocks.retain(|(_, b)| b.amax() > 0.0);
    Ok(ReducedDensityMatrix { sites: len, blocks })
}

/// `S_avg(ℓ) = (1/L) Σ_j S([j, j + ℓ))` over all cyclic windows.
pub fn averaged_entropy(state: &GroundState, l: usize) -> Result<f64> {
    let sites = state.sites();
    if l == 0 || l == sites {
        return Ok(0.0);
    }
    let l = if 2 * l > sites { sites - l } else { l };
    let mut total = 0.0;
    for j in 0..sites {
        total += reduced_density_matrix(state, j, l)?.entropy();
    }
    Ok(total / sites as f64)
}

/// `S_avg(ℓ)` for `ℓ = 0..=L`, using `S(ℓ) = S(L − ℓ)`.
pub fn averaged_entropy_profile(state: &GroundState) -> Result<Vec<f64>> {
    let sites = state.sites();
    let mut values = vec![0.0; sites + 1];
    for l in 1..=sites / 2 {
        values[l] = averaged_entropy(state, l)?;
        values[sites - l] = values[l];
    }
    Ok(values)
}

/// Site-averaged spin correlations at separation `r = 0..=L/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinCorrelations {
    /// `(1/L) Σ_j ⟨S_j · S_{j+r}⟩`.
    pub total: Vec<f64>,
    /// `(1/L) Σ_j |⟨S_j · S_{j+r}⟩|`.
    pub absolute: Vec<f64>,
    pub zz: Vec<f64>,
    /// `S^x S^x + S^y S^y` part.
    pub xy: Vec<f64>,
}

pub fn spin_correlations(state: &GroundState) -> SpinCorrelations {
    let l = state.sites();
    let rmax = l / 2;
    let mut out = SpinCorrelations {
        total: vec![0.0; rmax + 1],
        absolute: vec![0.0; rmax + 1],
        zz: vec![0.0; rmax + 1],
        xy: vec![0.0; rmax + 1],
    };
    for r in 0..=rmax {
        for j in 0..l {
            let k = (j + r) % l;
            let (mut zz, mut xy) = (0.0, 0.0);
            for (&s, &amp) in state.basis.states.iter().zip(&state.vector) {
                let (bj, bk) = ((s >> j) & 1, (s >> k) & 1);
                if j == k {
                    zz += 0.25 * amp * amp;
                    xy += 0.5 * amp * amp;
                    continue;
                }
                zz += if bj == bk { 0.25 } else { -0.25 } * amp * amp;
                if bj != bk {
                    let t = s ^ (1 << j) ^ (1 << k);
                    if let Some(i2) = state.basis.index(t) {
                        xy += 0.5 * amp * state.vector[i2];
                    }
                }
            }
            out.zz[r] += zz / l as f64;
            out.xy[r] += xy / l as f64;
            out.total[r] += (zz + xy) / l as f64;
            out.absolute[r] += (zz + xy).abs() / l as f64;
        }
    }
    out
}
